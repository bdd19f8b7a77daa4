"""Authoritative game state machine for the Competitive Treasure Hunt.

One GameState is one game of n players on one treasure map. Rounds are
simultaneous: costs are drawn for every player, every player commits a move
(skip or search one cell), and resolve_round applies them atomically.

Information rules: revealed treasures are public (yellow to the finder, red
to everyone else); failed searches stay private to the player who paid for
them. Under Protection, the first finder of a mine gets an exclusive zone
(the mine plus all cells adjacent to the first-found treasure) that other
players cannot select until the mine is fully revealed. Under No Protection,
players landing on the same treasure in the same round split it (2 finders:
0.2 of the reward each, 3: 0.05 each, 4: nothing). Singleton gives every
player an independent copy of the board.

All money is exact: integers where the defaults land (they always do:
320/80/64/16/16/4), fractions otherwise. All randomness flows from
config.seed through tagged child streams, so a (config, map) pair replays
bit-for-bit.
"""

from __future__ import annotations

import csv
import io
from collections import namedtuple
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .hexmap import TreasureMap, neighbor_table
from .rng import stream


class Condition(str, Enum):
    PROTECTION = "protection"
    NO_PROTECTION = "no_protection"
    SINGLETON = "singleton"


SKIP = "skip"
SEARCH = "search"

OUTCOME_NONE = "none"
OUTCOME_FAIL = "fail"
OUTCOME_FIRST = "first_treasure"
OUTCOME_SUBSEQUENT = "subsequent_treasure"

DEFAULT_COST_SUPPORT = (5, 10, 15, 20, 25, 30, 35)
DEFAULT_SPLITS = {2: Fraction(1, 5), 3: Fraction(1, 20), 4: Fraction(0)}


class EngineError(Exception):
    pass


class ConfigError(EngineError):
    pass


class SequencingError(EngineError):
    pass


class ProtocolError(EngineError):
    pass


class RejectedMoveError(EngineError):
    def __init__(self, player: int, cell: int, reason: str):
        super().__init__(f"player {player}: illegal search at cell {cell}: {reason}")
        self.player = player
        self.cell = cell


@dataclass(frozen=True)
class Move:
    action: str
    cell: Optional[int] = None  # cell index, only for search

    @staticmethod
    def skip() -> "Move":
        return _SKIP_MOVE

    @staticmethod
    def search(cell: int) -> "Move":
        return Move(SEARCH, cell)


_SKIP_MOVE = Move(SKIP, None)


@dataclass
class GameConfig:
    condition: Condition = Condition.PROTECTION
    n_players: int = 4
    rounds: int = 50
    first_reward: int = 320
    subsequent_reward: int = 80
    cost_support: tuple[int, ...] = DEFAULT_COST_SUPPORT
    split_fractions: dict[int, Fraction] = field(default_factory=lambda: dict(DEFAULT_SPLITS))
    seed: int = 0
    game_index: int = 1

    def validate(self) -> None:
        if self.n_players < 1:
            raise ConfigError("n_players must be >= 1")
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        if not self.cost_support:
            raise ConfigError("cost_support must be non-empty")
        if list(self.cost_support) != sorted(set(self.cost_support)):
            raise ConfigError("cost_support must be strictly ascending")
        if self.cost_support[0] <= 0:
            raise ConfigError("cost_support values must be positive")
        prev = Fraction(1)
        for k in range(2, self.n_players + 1):
            if k not in self.split_fractions:
                raise ConfigError(f"split_fractions missing entry for {k} co-finders")
            frac = Fraction(self.split_fractions[k])
            if frac > Fraction(1, k):
                raise ConfigError(f"split for {k} co-finders exceeds 1/{k}")
            if frac > prev:
                raise ConfigError("split_fractions must be non-increasing")
            prev = frac


def _exact(value: Fraction):
    return int(value) if value.denominator == 1 else value


@dataclass
class Zone:
    mine_id: int
    owner: int
    cells: frozenset[int]
    active: bool = True


class BoardState:
    """Reveal state of one board (shared, or one copy per player in
    Singleton)."""

    __slots__ = (
        "revealed",
        "mine_found",
        "mine_first",
        "mine_finders",
        "open_mines",
        "blacks",
        "zones",
        "last_reveal_players",
    )

    def __init__(self, n_mines: int, n_players: int):
        self.revealed: dict[int, tuple[int, ...]] = {}  # cell -> players who searched it
        self.mine_found = [0] * n_mines
        self.mine_first: list[Optional[int]] = [None] * n_mines
        self.mine_finders: list[set[int]] = [set() for _ in range(n_mines)]
        self.open_mines: set[int] = set()  # 1 or 2 cells revealed
        self.blacks: list[set[int]] = [set() for _ in range(n_players)]
        self.zones: dict[int, Zone] = {}
        self.last_reveal_players: set[int] = set()


@dataclass
class PlayerView:
    """Everything one player may see; never contains other players' failed
    searches or unrevealed ground truth."""

    player: int
    condition: Condition
    width: int
    height: int
    round: int
    rounds: int
    payoff: Fraction | int
    own_black: set[int]
    own_yellow: set[int]
    other_red: set[int]
    zones: list[dict]  # {"cells": [...], "own": bool, "active": bool}


DecisionRecord = namedtuple(
    "DecisionRecord",
    [
        "condition",
        "map_id",
        "seed",
        "game_index",
        "round",
        "player",
        "cost",
        "action",
        "cell",  # (col, row) or None
        "outcome",
        "n_cofinders",
        "reward_gross",
        "payoff_net",
        "open_own_mine",
        "open_any_mine",
        "other_found_last_round",
    ],
)
DecisionRecord.__doc__ = (
    "One logged decision; the unit of all analysis. Columns in log order."
)

LOG_COLUMNS = DecisionRecord._fields


@dataclass
class RoundResult:
    round: int
    costs: list[int]
    moves: list[Move]
    outcomes: list[str]
    gross: list
    net: list
    # reveals per board: board index -> list of (cell, searchers tuple)
    reveals: dict[int, list[tuple[int, tuple[int, ...]]]]
    zones_opened: list[tuple[int, int, int]]  # (board, first cell, owner)
    zones_closed: list[tuple[int, int]]  # (board, first cell)


class GameState:
    def __init__(self, config: GameConfig, tmap: TreasureMap):
        config.validate()
        self.config = config
        self.map = tmap
        self.round_index = 0
        self.payoffs: list = [0] * config.n_players
        self.pending_costs: Optional[list[int]] = None
        self.records: list[DecisionRecord] = []
        n_boards = config.n_players if config.condition == Condition.SINGLETON else 1
        self.boards = [BoardState(len(tmap.mines), config.n_players) for _ in range(n_boards)]
        self._shared = n_boards == 1
        self.costs_rng = stream(config.seed, "costs", config.game_index)
        self.tie_rng = stream(config.seed, "ties", config.game_index)
        self.neighbors = neighbor_table(tmap.width, tmap.height)
        # flat cell -> mine id array, -1 for empty
        self.cell_mine, self.mine_cells = tmap.flat()

    # -- helpers -----------------------------------------------------------

    def board_of(self, player: int) -> BoardState:
        return self.boards[0] if self._shared else self.boards[player]

    def board_index(self, player: int) -> int:
        return 0 if self._shared else player

    @property
    def over(self) -> bool:
        return self.round_index >= self.config.rounds

def new_game(config: GameConfig, tmap: TreasureMap) -> GameState:
    violations = []
    if 3 * len(tmap.mines) != len(tmap.treasure_cells):
        violations.append("mine cells overlap")
    if violations:
        raise ConfigError("invalid map: " + "; ".join(violations))
    return GameState(config, tmap)


def draw_costs(state: GameState) -> list[int]:
    """Draw this round's per-player costs, i.i.d. uniform over the support.

    Consumed in (round, player) order from the costs stream, so the value for
    (seed, game_index, round, player) is a pure function of those four."""
    if state.over:
        raise SequencingError("game is over; no more cost draws")
    if state.pending_costs is not None:
        raise SequencingError("costs for this round were already drawn")
    support = state.config.cost_support
    k = len(support)
    rand = state.costs_rng.random
    state.pending_costs = [support[int(rand() * k)] for _ in range(state.config.n_players)]
    return list(state.pending_costs)


def is_legal(state: GameState, player: int, cell: int) -> bool:
    if cell is None or not (0 <= cell < state.map.n_cells):
        return False
    board = state.board_of(player)
    if cell in board.revealed or cell in board.blacks[player]:
        return False
    if state.config.condition == Condition.PROTECTION:
        for zone in board.zones.values():
            if zone.active and zone.owner != player and cell in zone.cells:
                return False
    return True


def legal_cells(state: GameState, player: int) -> set[int]:
    """Cells the player may search: not colored in their own view and not
    inside another player's active protection zone."""
    board = state.board_of(player)
    out = set(range(state.map.n_cells))
    out.difference_update(board.revealed)
    out.difference_update(board.blacks[player])
    if state.config.condition == Condition.PROTECTION:
        for zone in board.zones.values():
            if zone.active and zone.owner != player:
                out.difference_update(zone.cells)
    return out


def _zone_cells(state: GameState, mine_id: int, first_cell: int) -> frozenset[int]:
    cells = set(state.mine_cells[mine_id])
    cells.add(first_cell)
    cells.update(state.neighbors[first_cell])
    return frozenset(cells)


def resolve_round(state: GameState, moves: Sequence[Move]) -> RoundResult:
    """Apply one simultaneous round. Moves must be complete (one per player)
    and legal; costs must have been drawn."""
    cfg = state.config
    if state.over:
        raise SequencingError("game is over")
    if state.pending_costs is None:
        raise SequencingError("draw_costs must run before resolve_round")
    if len(moves) != cfg.n_players:
        raise ProtocolError(f"expected {cfg.n_players} moves, got {len(moves)}")

    costs = state.pending_costs
    n = cfg.n_players
    for p, mv in enumerate(moves):
        if mv.action == SEARCH:
            if not is_legal(state, p, mv.cell):
                raise RejectedMoveError(p, mv.cell if mv.cell is not None else -1, "cell not selectable")
        elif mv.action != SKIP:
            raise ProtocolError(f"player {p}: unknown action {mv.action!r}")

    # decision-time context flags, before any mutation
    if state._shared:
        board0 = state.boards[0]
        any_open = bool(board0.open_mines)
        open_any = [any_open] * n
        if not any_open:
            open_own = [False] * n
        elif cfg.condition == Condition.PROTECTION:
            owners = {z.owner for z in board0.zones.values() if z.active}
            open_own = [p in owners for p in range(n)]
        else:
            open_own = [
                any(p in board0.mine_finders[m] for m in board0.open_mines)
                for p in range(n)
            ]
        last = board0.last_reveal_players
        if not last:
            other_found = [False] * n
        elif len(last) > 1:
            other_found = [True] * n
        else:
            only = next(iter(last))
            other_found = [p != only for p in range(n)]
    else:
        open_own = [bool(state.boards[p].open_mines) for p in range(n)]
        open_any = list(open_own)
        other_found = [False] * n  # Singleton players never see others

    outcomes = [OUTCOME_NONE] * n
    gross: list = [0] * n
    net: list = [0] * n
    cofinders = [0] * n
    reveals: dict[int, list[tuple[int, tuple[int, ...]]]] = {}
    zones_opened: list[tuple[int, int, int]] = []
    zones_closed: list[tuple[int, int]] = []

    # searches grouped per board
    by_board: dict[int, dict[int, list[int]]] = {}
    for p, mv in enumerate(moves):
        if mv.action == SEARCH:
            b = state.board_index(p)
            by_board.setdefault(b, {}).setdefault(mv.cell, []).append(p)

    first_reward = cfg.first_reward
    subsequent_reward = cfg.subsequent_reward
    cell_mine = state.cell_mine

    for b, cells in by_board.items():
        board = state.boards[b]
        board_reveals: list[tuple[int, tuple[int, ...]]] = []
        # split into failures and per-mine treasure hits
        mines_hit: dict[int, dict[int, list[int]]] = {}
        for cell, players in cells.items():
            mid = cell_mine[cell]
            if mid < 0:
                for p in players:
                    outcomes[p] = OUTCOME_FAIL
                    board.blacks[p].add(cell)
            else:
                mines_hit.setdefault(mid, {})[cell] = players

        for mid in sorted(mines_hit):
            hits = mines_hit[mid]
            hit_cells = sorted(hits)
            was_virgin = board.mine_found[mid] == 0

            if cfg.condition == Condition.PROTECTION and was_virgin:
                finders = sorted({p for ps in hits.values() for p in ps})
                owner = finders[0] if len(finders) == 1 else state.tie_rng.choice(finders)
                owner_cell = next(c for c in hit_cells if owner in hits[c])
                for cell in hit_cells:
                    is_first = cell == owner_cell
                    for p in hits[cell]:
                        outcomes[p] = OUTCOME_FIRST if is_first else OUTCOME_SUBSEQUENT
                        gross[p] = first_reward if p == owner else 0
                        cofinders[p] = len(hits[cell])
                    board.revealed[cell] = tuple(hits[cell])
                    board_reveals.append((cell, tuple(hits[cell])))
                board.mine_found[mid] += len(hit_cells)
                board.mine_first[mid] = owner_cell
                board.mine_finders[mid].add(owner)
                zone = Zone(mid, owner, _zone_cells(state, mid, owner_cell))
                board.zones[mid] = zone
                zones_opened.append((b, owner_cell, owner))
                if board.mine_found[mid] >= 3:
                    zone.active = False
                    zones_closed.append((b, owner_cell))
            else:
                # No Protection, Singleton, or owner digging inside own zone.
                if was_virgin:
                    first_cell = (
                        hit_cells[0]
                        if len(hit_cells) == 1
                        else state.tie_rng.choice(hit_cells)
                    )
                else:
                    first_cell = None
                for cell in hit_cells:
                    is_first = cell == first_cell
                    full = first_reward if is_first else subsequent_reward
                    players = hits[cell]
                    k = len(players)
                    amount = (
                        full if k == 1 else _exact(Fraction(cfg.split_fractions[k]) * full)
                    )
                    for p in players:
                        outcomes[p] = OUTCOME_FIRST if is_first else OUTCOME_SUBSEQUENT
                        gross[p] = amount
                        cofinders[p] = k
                        board.mine_finders[mid].add(p)
                    board.revealed[cell] = tuple(players)
                    board_reveals.append((cell, tuple(players)))
                    if is_first:
                        board.mine_first[mid] = cell
                board.mine_found[mid] += len(hit_cells)
                zone = board.zones.get(mid)
                if zone is not None and zone.active and board.mine_found[mid] >= 3:
                    zone.active = False
                    zones_closed.append((b, board.mine_first[mid]))

            if 0 < board.mine_found[mid] < 3:
                board.open_mines.add(mid)
            else:
                board.open_mines.discard(mid)

        if board_reveals:
            reveals[b] = board_reveals

    # settle money and bookkeeping
    width = state.map.width
    round_no = state.round_index + 1
    map_id = state.map.seed
    cond = cfg.condition.value
    payoffs = state.payoffs
    append = state.records.append
    tuple_new = tuple.__new__
    for p in range(n):
        mv = moves[p]
        if mv.action == SEARCH:
            net[p] = gross[p] - costs[p]
            c = mv.cell
            cell = (c % width, c // width)
        else:
            cell = None
        payoffs[p] = payoffs[p] + net[p]
        append(
            tuple_new(
                DecisionRecord,
                (
                    cond,
                    map_id,
                    cfg.seed,
                    cfg.game_index,
                    round_no,
                    p,
                    costs[p],
                    mv.action,
                    cell,
                    outcomes[p],
                    cofinders[p],
                    gross[p],
                    net[p],
                    open_own[p],
                    open_any[p],
                    other_found[p],
                ),
            )
        )

    for b, board in enumerate(state.boards):
        revs = reveals.get(b, ())
        board.last_reveal_players = {p for _, ps in revs for p in ps}

    state.round_index += 1
    state.pending_costs = None
    return RoundResult(
        round=round_no,
        costs=list(costs),
        moves=list(moves),
        outcomes=outcomes,
        gross=gross,
        net=net,
        reveals=reveals,
        zones_opened=zones_opened,
        zones_closed=zones_closed,
    )


def player_view(state: GameState, player: int) -> PlayerView:
    board = state.board_of(player)
    yellow = {c for c, ps in board.revealed.items() if player in ps}
    red = {c for c in board.revealed if c not in yellow}
    zones = [
        {
            "cells": sorted(z.cells),
            "own": z.owner == player,
            "active": z.active,
        }
        for z in board.zones.values()
        if z.active
    ]
    return PlayerView(
        player=player,
        condition=state.config.condition,
        width=state.map.width,
        height=state.map.height,
        round=state.round_index,
        rounds=state.config.rounds,
        payoff=state.payoffs[player],
        own_black=set(board.blacks[player]),
        own_yellow=yellow,
        other_red=red,
        zones=zones,
    )


def run_game(config: GameConfig, tmap: TreasureMap, agents: Sequence) -> list[DecisionRecord]:
    """Play a full game with one agent per seat; returns the decision log.

    Agents implement begin(config, tmap, player), decide(cost) -> Move and
    observe(reveals, own_fail, zones_opened, zones_closed). Deterministic
    given config.seed and the agents' own seeds.
    """
    if len(agents) != config.n_players:
        raise ProtocolError(f"need {config.n_players} agents, got {len(agents)}")
    state = new_game(config, tmap)
    for p, agent in enumerate(agents):
        agent.begin(config, tmap, p)
    n = config.n_players
    while not state.over:
        costs = draw_costs(state)
        moves = [agents[p].decide(costs[p]) for p in range(n)]
        result = resolve_round(state, moves)
        opened: dict[int, list] = {}
        closed: dict[int, list] = {}
        for bb, c, o in result.zones_opened:
            opened.setdefault(bb, []).append((c, o))
        for bb, c in result.zones_closed:
            closed.setdefault(bb, []).append(c)
        outcomes = result.outcomes
        for p in range(n):
            b = state.board_index(p)
            mv = moves[p]
            own_fail = (
                mv.cell if mv.action == SEARCH and outcomes[p] == OUTCOME_FAIL else None
            )
            agents[p].observe(
                result.reveals.get(b, ()),
                own_fail,
                opened.get(b, ()),
                closed.get(b, ()),
            )
    return state.records


# -- decision-log serialization ---------------------------------------------


def format_points(value) -> str:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return str(value)


def parse_points(text: str):
    if "/" in text:
        num, den = text.split("/")
        return _exact(Fraction(int(num), int(den)))
    return int(text)


def _record_to_row(rec: DecisionRecord) -> list[str]:
    cell = "" if rec.cell is None else f"{rec.cell[0]}:{rec.cell[1]}"
    return [
        rec.condition,
        str(rec.map_id),
        str(rec.seed),
        str(rec.game_index),
        str(rec.round),
        str(rec.player),
        str(rec.cost),
        rec.action,
        cell,
        rec.outcome,
        str(rec.n_cofinders),
        format_points(rec.reward_gross),
        format_points(rec.payoff_net),
        "1" if rec.open_own_mine else "0",
        "1" if rec.open_any_mine else "0",
        "1" if rec.other_found_last_round else "0",
    ]


def write_log(records: Iterable[DecisionRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_COLUMNS)
        for rec in records:
            writer.writerow(_record_to_row(rec))


def dump_log(records: Iterable[DecisionRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(LOG_COLUMNS)
    for rec in records:
        writer.writerow(_record_to_row(rec))
    return buf.getvalue()


class LogParseError(EngineError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _row_to_record(row: list[str], line: int) -> DecisionRecord:
    if len(row) != len(LOG_COLUMNS):
        raise LogParseError(f"expected {len(LOG_COLUMNS)} columns, got {len(row)}", line)
    try:
        cell = None
        if row[8]:
            c, r = row[8].split(":")
            cell = (int(c), int(r))
        return DecisionRecord(
            row[0],
            int(row[1]),
            int(row[2]),
            int(row[3]),
            int(row[4]),
            int(row[5]),
            int(row[6]),
            row[7],
            cell,
            row[9],
            int(row[10]),
            parse_points(row[11]),
            parse_points(row[12]),
            row[13] == "1",
            row[14] == "1",
            row[15] == "1",
        )
    except (ValueError, IndexError) as exc:
        raise LogParseError(str(exc), line) from exc


def read_log(path) -> list[DecisionRecord]:
    with open(path, newline="") as fh:
        return parse_log(fh)


def parse_log(fh) -> list[DecisionRecord]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise LogParseError("empty file: header row required", 1) from None
    if header != list(LOG_COLUMNS):
        raise LogParseError("bad header row", 1)
    return [_row_to_record(row, i) for i, row in enumerate(reader, start=2)]
