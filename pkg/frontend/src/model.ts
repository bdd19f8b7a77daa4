// Client board model: a pure reducer over validated server messages.
//
// All display state is derived from what the server sent, never inferred:
// an unknown hexagon stays unknown until a reveal or a view snapshot says
// otherwise. The model also enforces one move per round on the client side;
// submit() refuses a second move for the same round even if the UI asks.

import {
  RevealEntry,
  ServerMessage,
  validateMessage,
  ZoneEntry,
} from "./protocol.js";

export type CellState = "unknown" | "own-black" | "own-yellow" | "other-red";

export type Phase =
  | "connecting"
  | "lobby"
  | "deciding" // cost shown, skip/explore choice open
  | "picking" // explore chosen, waiting for a cell click
  | "waiting" // move sent, waiting for the round to resolve
  | "between-games"
  | "finished";

export interface Zone {
  cells: [number, number][];
  owner: number | null;
  own: boolean;
  active: boolean;
}

export class BoardModel {
  seat = -1;
  width = 70;
  height = 30;
  condition = "";
  phase: Phase = "connecting";
  round = 0;
  rounds = 50;
  gameIndex = 0;
  games = 4;
  cost: number | null = null;
  total = 0;
  grandTotal = 0;
  lastPayoff: number | null = null;
  lastError: string | null = null;
  cells = new Map<string, CellState>();
  zones: Zone[] = [];
  grandTotals: number[] | null = null;
  private movedRound = 0;

  key(col: number, row: number): string {
    return `${col},${row}`;
  }

  cellState(col: number, row: number): CellState {
    return this.cells.get(this.key(col, row)) ?? "unknown";
  }

  /** A cell the player may currently pick: uncolored and not inside
   * somebody else's active zone. */
  selectable(col: number, row: number): boolean {
    if (col < 0 || row < 0 || col >= this.width || row >= this.height) return false;
    if (this.cellState(col, row) !== "unknown") return false;
    for (const zone of this.zones) {
      if (zone.active && !zone.own) {
        for (const [c, r] of zone.cells) {
          if (c === col && r === row) return false;
        }
      }
    }
    return true;
  }

  /** One move per round: true exactly once per round_start. */
  canSubmit(): boolean {
    return (
      (this.phase === "deciding" || this.phase === "picking") &&
      this.movedRound < this.round
    );
  }

  markSubmitted(): boolean {
    if (!this.canSubmit()) return false;
    this.movedRound = this.round;
    this.phase = "waiting";
    return true;
  }

  choosePick(): void {
    if (this.phase === "deciding") this.phase = "picking";
  }

  cancelPick(): void {
    if (this.phase === "picking") this.phase = "deciding";
  }

  apply(raw: unknown): ServerMessage {
    const msg = validateMessage(raw, this.seat);
    switch (msg.type) {
      case "view": {
        this.seat = msg.seat;
        this.condition = msg.condition;
        this.gameIndex = msg.game_index;
        this.games = msg.games;
        if (msg.width !== undefined) this.width = msg.width;
        if (msg.height !== undefined) this.height = msg.height;
        if (msg.rounds !== undefined) this.rounds = msg.rounds;
        if (msg.round !== undefined) this.round = msg.round;
        if (msg.payoff !== undefined) this.total = msg.payoff;
        if (msg.grand_total !== undefined) this.grandTotal = msg.grand_total;
        this.cells.clear();
        for (const [c, r] of msg.own_black ?? []) {
          this.cells.set(this.key(c, r), "own-black");
        }
        for (const [c, r] of msg.own_yellow ?? []) {
          this.cells.set(this.key(c, r), "own-yellow");
        }
        for (const [c, r] of msg.other_red ?? []) {
          this.cells.set(this.key(c, r), "other-red");
        }
        this.zones = (msg.zones ?? []).map((z) => this.zoneFrom(z));
        if (msg.phase === "finished") {
          this.phase = "finished";
          this.grandTotals = msg.grand_totals ?? null;
        } else if (msg.phase === "lobby") {
          this.phase = "lobby";
        } else if (msg.phase === "awaiting_moves") {
          this.cost = msg.cost ?? null;
          if (msg.moved) {
            this.movedRound = this.round;
            this.phase = "waiting";
          } else {
            // round_start may still follow; the view alone is enough to act
            this.phase = this.cost === null ? "waiting" : "deciding";
          }
        }
        break;
      }
      case "round_start": {
        this.gameIndex = msg.game_index;
        this.round = msg.round;
        this.cost = msg.cost;
        if (this.movedRound >= msg.round) {
          this.phase = "waiting";
        } else {
          this.phase = "deciding";
        }
        this.lastError = null;
        break;
      }
      case "round_result": {
        for (const reveal of msg.reveals) {
          this.applyReveal(reveal);
        }
        this.zones = msg.zones.map((z) => this.zoneFrom(z));
        this.lastPayoff = msg.payoff;
        this.total = msg.total;
        if (this.phase !== "finished") this.phase = "waiting";
        break;
      }
      case "game_over": {
        this.total = msg.totals[this.seat] ?? this.total;
        this.grandTotal += this.total;
        this.cells.clear();
        this.zones = [];
        this.movedRound = 0;
        this.round = 0;
        this.phase = "between-games";
        break;
      }
      case "session_over": {
        this.phase = "finished";
        this.grandTotals = msg.grand_totals;
        break;
      }
      case "error": {
        this.lastError = `${msg.code}: ${msg.detail}`;
        if (msg.code === "illegal_cell" && this.movedRound === this.round) {
          // server refused the move; re-open the round
          this.movedRound = this.round - 1;
          this.phase = "deciding";
        }
        break;
      }
    }
    return msg;
  }

  private applyReveal(reveal: RevealEntry): void {
    const [c, r] = reveal.cell;
    const key = this.key(c, r);
    if (reveal.color === "black") {
      this.cells.set(key, "own-black");
    } else if (reveal.color === "yellow") {
      this.cells.set(key, "own-yellow");
    } else {
      // never demote: a cell the player dug themselves stays yellow
      if (this.cells.get(key) !== "own-yellow") {
        this.cells.set(key, "other-red");
      }
    }
  }

  private zoneFrom(z: ZoneEntry): Zone {
    const own = z.own !== undefined ? z.own : z.owner === this.seat;
    return {
      cells: z.cells.map(([c, r]) => [c, r] as [number, number]),
      owner: z.owner ?? null,
      own,
      active: z.active,
    };
  }
}
