import { describe, expect, it } from "vitest";

import { BoardModel } from "../src/model.js";

function freshModel(): BoardModel {
  const model = new BoardModel();
  model.apply({
    type: "view",
    phase: "awaiting_moves",
    game_index: 1,
    games: 1,
    seat: 0,
    condition: "protection",
    round: 1,
    rounds: 50,
    payoff: 0,
    grand_total: 0,
    width: 10,
    height: 10,
    own_black: [],
    own_yellow: [],
    other_red: [],
    zones: [],
    cost: 15,
    moved: false,
  });
  return model;
}

describe("board model", () => {
  it("hydrates from a view snapshot", () => {
    const model = freshModel();
    expect(model.phase).toBe("deciding");
    expect(model.round).toBe(1);
    expect(model.cost).toBe(15);
    expect(model.cellState(3, 3)).toBe("unknown");
  });

  it("applies reveals with the right colors and never demotes yellow", () => {
    const model = freshModel();
    model.markSubmitted();
    model.apply({
      type: "round_result",
      round: 1,
      payoff: 305,
      reveals: [
        { cell: [4, 4], color: "yellow", owner: 0 },
        { cell: [9, 9], color: "red", owner: 2 },
      ],
      zones: [{ cells: [[4, 4], [5, 4]], owner: 0, active: true }],
      total: 305,
    });
    expect(model.cellState(4, 4)).toBe("own-yellow");
    expect(model.cellState(9, 9)).toBe("other-red");
    expect(model.total).toBe(305);
    expect(model.zones[0].own).toBe(true);
    // a later red for the same cell cannot demote the player's own find
    model.apply({ type: "round_start", round: 2, cost: 5, game_index: 1 });
    model.markSubmitted();
    model.apply({
      type: "round_result",
      round: 2,
      payoff: 0,
      reveals: [{ cell: [4, 4], color: "red", owner: 1 }],
      zones: [],
      total: 305,
    });
    expect(model.cellState(4, 4)).toBe("own-yellow");
  });

  it("enforces one move per round", () => {
    const model = freshModel();
    expect(model.canSubmit()).toBe(true);
    expect(model.markSubmitted()).toBe(true);
    expect(model.canSubmit()).toBe(false);
    expect(model.markSubmitted()).toBe(false);
    // a repeated round_start for the same round does not reopen it
    model.apply({ type: "round_start", round: 1, cost: 15, game_index: 1 });
    expect(model.phase).toBe("waiting");
    expect(model.canSubmit()).toBe(false);
    // the next round does
    model.apply({ type: "round_start", round: 2, cost: 30, game_index: 1 });
    expect(model.phase).toBe("deciding");
    expect(model.canSubmit()).toBe(true);
  });

  it("marks foreign zone cells unselectable", () => {
    const model = freshModel();
    model.markSubmitted();
    model.apply({
      type: "round_result",
      round: 1,
      payoff: 0,
      reveals: [{ cell: [4, 4], color: "red", owner: 2 }],
      zones: [{ cells: [[4, 4], [5, 4], [4, 5]], owner: 2, active: true }],
      total: 0,
    });
    expect(model.selectable(5, 4)).toBe(false);
    expect(model.selectable(0, 0)).toBe(true);
    expect(model.selectable(4, 4)).toBe(false); // revealed
  });

  it("an illegal-cell error reopens the round", () => {
    const model = freshModel();
    model.markSubmitted();
    model.apply({ type: "error", code: "illegal_cell", detail: "cell [4,4] is not selectable" });
    expect(model.phase).toBe("deciding");
    expect(model.canSubmit()).toBe(true);
    expect(model.lastError).toContain("illegal_cell");
  });

  it("resets the board between games and finishes cleanly", () => {
    const model = freshModel();
    model.markSubmitted();
    model.apply({
      type: "round_result",
      round: 1,
      payoff: -15,
      reveals: [{ cell: [2, 2], color: "black", owner: 0 }],
      zones: [],
      total: -15,
    });
    model.apply({ type: "game_over", totals: [-15, 0, 0, 0], game_index: 1 });
    expect(model.phase).toBe("between-games");
    expect(model.cellState(2, 2)).toBe("unknown");
    model.apply({ type: "session_over", grand_totals: [-15, 0, 0, 0] });
    expect(model.phase).toBe("finished");
    expect(model.grandTotals).toEqual([-15, 0, 0, 0]);
  });

  it("a moved view snapshot lands in waiting state", () => {
    const model = new BoardModel();
    model.apply({
      type: "view",
      phase: "awaiting_moves",
      game_index: 1,
      games: 1,
      seat: 1,
      condition: "no_protection",
      round: 7,
      rounds: 50,
      width: 70,
      height: 30,
      cost: 25,
      moved: true,
    });
    expect(model.phase).toBe("waiting");
    expect(model.canSubmit()).toBe(false);
  });
});
