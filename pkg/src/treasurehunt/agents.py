"""Fully informed Bayesian threshold agents.

An agent is a pair of cost thresholds (initial, sequential) plus exact
posterior tracking over open mines. Mines are tight triangles, so once a
first treasure is revealed the two remaining treasures form one of at most
six candidate pairs (mutually adjacent neighbor pairs of the anchor). Every
observation, a private failed search inside the candidate region or any
public reveal, eliminates inconsistent pairs; the posterior of a cell is the
fraction of surviving pairs containing it. On a fresh board that gives the
canonical numbers: 1/3 per neighbor after the first find, 1/2 for the three
cells not linked to a failed neighbor search, certainty once two treasures
are known and a unique completion survives.

The decision rule is deliberately mechanical: search if and only if the
round's cost is strictly below the context threshold. 40 therefore encodes
"always search" (every cost in {5..35} qualifies) and 0 "never search".
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .engine import SEARCH as SEARCH_ACTION
from .engine import Condition, GameConfig, Move
from .hexmap import TreasureMap, neighbor_table
from .rng import stream

INITIAL = "initial"
SEQUENTIAL = "sequential"

_SKIP = Move.skip()

BACKGROUND_P = 0.05


class BeliefCorruptionError(Exception):
    """An observation is inconsistent with every candidate placement; the
    agent and engine have desynchronized."""


class MineBelief:
    """Posterior over the unrevealed treasures of one open mine."""

    __slots__ = ("anchor", "revealed", "pairs", "owner")

    def __init__(self, anchor: int, neighbors):
        self.anchor = anchor
        self.revealed = [anchor]
        self.owner: Optional[int] = None
        nbrs = neighbors[anchor]
        nbr_sets = {u: set(neighbors[u]) for u in nbrs}
        self.pairs = [
            (u, v) if u < v else (v, u)
            for i, u in enumerate(nbrs)
            for v in nbrs[i + 1 :]
            if v in nbr_sets[u]
        ]

    @property
    def closed(self) -> bool:
        return len(self.revealed) >= 3

    def observe_black(self, cell: int) -> None:
        if self.closed:
            return
        pairs = [pr for pr in self.pairs if cell != pr[0] and cell != pr[1]]
        if not pairs:
            raise BeliefCorruptionError(
                f"failed search at {cell} rules out every placement of mine {self.anchor}"
            )
        self.pairs = pairs

    def prune_cells(self, blocked: set[int]) -> None:
        """Remove placements using any cell known to be empty: own failed
        searches, or cells adjacent to another mine's revealed treasure
        (distinct mines never touch, so those cannot hold this mine's
        remaining treasures)."""
        if not blocked or self.closed:
            return
        pairs = [pr for pr in self.pairs if pr[0] not in blocked and pr[1] not in blocked]
        if not pairs:
            raise BeliefCorruptionError(
                f"observations rule out every placement of mine {self.anchor}"
            )
        self.pairs = pairs

    def observe_treasure(self, cell: int) -> None:
        if cell in self.revealed:
            return
        self.revealed.append(cell)
        if len(self.revealed) == 2:
            pairs = [pr for pr in self.pairs if cell == pr[0] or cell == pr[1]]
        elif len(self.revealed) == 3:
            a, b = sorted(self.revealed[1:])
            pairs = [pr for pr in self.pairs if pr == (a, b)]
        else:
            raise BeliefCorruptionError(f"mine {self.anchor}: more than 3 treasures")
        if not pairs:
            raise BeliefCorruptionError(
                f"treasure at {cell} inconsistent with candidates of mine {self.anchor}"
            )
        self.pairs = [] if len(self.revealed) == 3 else pairs

    def candidate_counts(self) -> dict[int, int]:
        """Map unrevealed candidate cell -> number of surviving pairs
        containing it. Posterior = count / len(pairs)."""
        counts: dict[int, int] = {}
        known = self.revealed
        for a, b in self.pairs:
            if a not in known:
                counts[a] = counts.get(a, 0) + 1
            if b not in known:
                counts[b] = counts.get(b, 0) + 1
        return counts

    def posterior(self, cell: int) -> Fraction:
        if not self.pairs:
            return Fraction(0)
        return Fraction(self.candidate_counts().get(cell, 0), len(self.pairs))

    def max_posterior(self) -> Fraction:
        counts = self.candidate_counts()
        if not counts:
            return Fraction(0)
        return Fraction(max(counts.values()), len(self.pairs))


@dataclass(frozen=True)
class Strategy:
    initial_threshold: float
    sequential_threshold: float

    def __post_init__(self):
        for t in (self.initial_threshold, self.sequential_threshold):
            if not 0 <= t <= 40:
                raise ValueError(f"threshold {t} outside [0, 40]")


class BeliefState:
    """A player's whole posterior: fixed background probability for fresh
    cells plus one MineBelief per open mine on the player's visible board.

    finite_aware only changes the reported background probability (the
    depletion on a 2100-cell board is at most about one percentage point);
    it never changes behavior because thresholds, not posteriors, drive the
    search/skip decision.
    """

    def __init__(self, width: int, height: int, total_treasures: int = 105, finite_aware: bool = False):
        self.neighbors = neighbor_table(width, height)
        self.n_cells = width * height
        self.total_treasures = total_treasures
        self.finite_aware = finite_aware
        self.open: dict[int, MineBelief] = {}  # anchor -> belief
        self.blacks: set[int] = set()  # own failed searches
        self.reveal_block: set[int] = set()  # revealed treasures and their rings
        self.closed_count = 0
        self.revealed_count = 0
        self.excluded_count = 0  # cells known non-fresh (revealed + their neighbors + own blacks)

    def background_p(self) -> float:
        if not self.finite_aware:
            return BACKGROUND_P
        committed = sum(3 - len(b.revealed) for b in self.open.values())
        remaining = self.total_treasures - self.revealed_count - committed
        unknown = self.n_cells - self.excluded_count
        return remaining / unknown if unknown > 0 else 0.0

    def _attribute(self, cell: int) -> Optional[MineBelief]:
        home = None
        nbrs = self.neighbors[cell]
        for belief in self.open.values():
            if any(r in nbrs for r in belief.revealed):
                if home is not None:
                    raise BeliefCorruptionError(
                        f"treasure at {cell} adjacent to two distinct open mines"
                    )
                home = belief
        return home

    def observe_treasure(self, cell: int) -> MineBelief:
        self.revealed_count += 1
        belief = self._attribute(cell)
        if belief is None:
            belief = MineBelief(cell, self.neighbors)
            belief.prune_cells(self.blacks)
            belief.prune_cells(self.reveal_block)
            self.open[cell] = belief
        else:
            belief.observe_treasure(cell)
            if belief.closed:
                del self.open[belief.anchor]
                self.closed_count += 1
        # this treasure's neighborhood is barred to every other mine
        block = {cell, *self.neighbors[cell]}
        for other in self.open.values():
            if other is not belief:
                other.prune_cells(block)
        self.reveal_block |= block
        return belief

    def observe_black(self, cell: int) -> None:
        self.blacks.add(cell)
        for belief in self.open.values():
            belief.observe_black(cell)


def update_belief(belief: BeliefState, reveals, own_fail: Optional[int] = None) -> BeliefState:
    """Fold one round's worth of observations into the belief state.

    reveals is an iterable of revealed treasure cells (public); own_fail is
    the player's own failed search this round, if any (private).
    """
    for cell in reveals:
        belief.observe_treasure(cell)
    if own_fail is not None:
        belief.observe_black(own_fail)
    return belief


def exploitable_mines(belief: BeliefState, condition: Condition, player: int) -> list[MineBelief]:
    """Open mines this player may dig for subsequent treasures."""
    if condition == Condition.PROTECTION:
        return [b for b in belief.open.values() if b.owner == player]
    return list(belief.open.values())


def classify_context(belief: BeliefState, condition: Condition, player: int) -> str:
    """Sequential iff an exploitable open mine exists for this player, else
    Initial. Under Protection only an own zone counts; under No Protection
    any partially revealed mine is everyone's opportunity."""
    return SEQUENTIAL if exploitable_mines(belief, condition, player) else INITIAL


class ThresholdAgent:
    """Engine-facing agent: threshold decision rule over a BeliefState plus
    uniform fresh-cell targeting for initial search.

    Fresh cells are those that could still hold a new mine: never searched by
    this player, not revealed, and not adjacent to any revealed treasure
    (mines never touch, so treasure neighbors cannot hold another mine).
    """

    def __init__(self, strategy: Strategy, seed: int = 0, finite_aware: bool = False):
        self.strategy = strategy
        self.seed = seed
        self.finite_aware = finite_aware

    def begin(self, config: GameConfig, tmap: TreasureMap, player: int) -> None:
        self.player = player
        self.condition = config.condition
        total = 3 * len(tmap.mines)
        self.belief = BeliefState(
            tmap.width, tmap.height, total_treasures=total, finite_aware=self.finite_aware
        )
        self.rng = stream(config.seed, "agent", config.game_index, player, self.seed)
        self.fresh = list(range(tmap.n_cells))
        self.excluded: set[int] = set()  # cannot hold a new mine
        self.unavailable: set[int] = set()  # revealed or own black: never selectable
        self.foreign_zones: dict[int, frozenset[int]] = {}  # first cell -> zone extent
        self._own_exploitable: dict[int, MineBelief] = {}

    # -- observations ------------------------------------------------------

    def observe(self, reveals, own_fail, zones_opened, zones_closed) -> None:
        if not reveals and own_fail is None and not zones_opened and not zones_closed:
            return
        belief = self.belief
        neighbors = belief.neighbors
        excluded = self.excluded
        for cell, _searchers in reveals:
            mine = belief.observe_treasure(cell)
            excluded.add(cell)
            excluded.update(neighbors[cell])
            self.unavailable.add(cell)
            if mine.closed:
                self._own_exploitable.pop(mine.anchor, None)
            elif self.condition != Condition.PROTECTION:
                self._own_exploitable[mine.anchor] = mine
        if own_fail is not None:
            belief.observe_black(own_fail)
            excluded.add(own_fail)
            self.unavailable.add(own_fail)
        for first_cell, owner in zones_opened:
            mine = self._open_mine_containing(first_cell)
            if mine is not None:
                mine.owner = owner
                if owner == self.player:
                    self._own_exploitable[mine.anchor] = mine
            if owner != self.player:
                self.foreign_zones[first_cell] = frozenset(
                    (first_cell, *neighbors[first_cell])
                )
        for first_cell in zones_closed:
            self.foreign_zones.pop(first_cell, None)
        belief.excluded_count = len(excluded)

    def _open_mine_containing(self, cell: int) -> Optional[MineBelief]:
        for mine in self.belief.open.values():
            if cell in mine.revealed:
                return mine
        return None

    # -- decision ----------------------------------------------------------

    def context(self) -> str:
        return SEQUENTIAL if self._own_exploitable else INITIAL

    def decide(self, cost: float) -> Move:
        strategy = self.strategy
        if self._own_exploitable:
            if cost >= strategy.sequential_threshold:
                return _SKIP
            cell = self._pick_sequential()
        else:
            if cost >= strategy.initial_threshold:
                return _SKIP
            cell = self._pick_fresh()
        if cell is None:
            return _SKIP
        return Move(SEARCH_ACTION, cell)

    def _pick_sequential(self) -> Optional[int]:
        mines = list(self._own_exploitable.values())
        if len(mines) == 1:
            best = mines[0]
        else:
            scored = [(m.max_posterior(), m) for m in mines]
            top = max(s for s, _ in scored)
            tied = [m for s, m in scored if s == top]
            best = tied[0] if len(tied) == 1 else self.rng.choice(tied)
        counts = best.candidate_counts()
        if not counts:
            return None
        top = max(counts.values())
        cells = [c for c, k in counts.items() if k == top]
        return cells[0] if len(cells) == 1 else self.rng.choice(cells)

    def _pick_fresh(self) -> Optional[int]:
        fresh = self.fresh
        excluded = self.excluded
        rand = self.rng.random
        while fresh:
            i = int(rand() * len(fresh))
            cell = fresh[i]
            if cell in excluded:
                fresh[i] = fresh[-1]
                fresh.pop()
                continue
            return cell
        return self._pick_fallback()

    def _pick_fallback(self) -> Optional[int]:
        # No fresh cell left (only reachable on near-exhausted boards): fall
        # back to a uniform choice among cells that are still selectable,
        # even though their posterior is zero.
        zoned: set[int] = set()
        for cells in self.foreign_zones.values():
            zoned |= cells
        legal = [
            c
            for c in range(self.belief.n_cells)
            if c not in self.unavailable and c not in zoned
        ]
        if not legal:
            return None
        return self.rng.choice(legal)


def select_cell(agent: ThresholdAgent, context: str) -> Optional[int]:
    """Maximal-posterior legal cell for the given context; None signals a
    forced skip. Sequential restricts to the exploitable mines' candidates;
    initial targets fresh cells, where every posterior ties at the
    background probability."""
    if context == SEQUENTIAL:
        return agent._pick_sequential()
    return agent._pick_fresh()


def decide(strategy: Strategy, agent: ThresholdAgent, cost: float) -> Move:
    """The threshold rule: search iff cost < threshold for the current
    context and a target cell exists."""
    agent.strategy = strategy
    return agent.decide(cost)


class AlwaysSkipAgent:
    """Degenerate agent for fixtures and liveness tests."""

    def begin(self, config, tmap, player):
        pass

    def observe(self, reveals, own_fail, zones_opened, zones_closed):
        pass

    def decide(self, cost) -> Move:
        return Move.skip()


def make_agents(strategy: Strategy, n: int, finite_aware: bool = False) -> list[ThresholdAgent]:
    return [ThresholdAgent(strategy, seed=p, finite_aware=finite_aware) for p in range(n)]
