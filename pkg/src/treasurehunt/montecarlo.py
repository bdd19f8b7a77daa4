"""Strategy-grid sweeps: symmetric threshold profiles played many times.

A sweep runs every (initial, sequential) threshold pair on a grid, each for
`reps` independent games of four identical agents, and aggregates treasures,
payoffs, duplication and search effort. Repetition seeds derive from
(master seed, grid cell, repetition index), so results are identical no
matter how the work is distributed across processes.

Besides the symmetric-payoff argmax, the module offers a best-response check
(fix three players, sweep the fourth) and an iterated-best-response
equilibrium candidate, since a symmetric optimum need not be self-enforcing:
without protection the group does best searching less than any single player
would want to.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .agents import Strategy, ThresholdAgent
from .engine import (
    OUTCOME_FIRST,
    OUTCOME_SUBSEQUENT,
    Condition,
    DecisionRecord,
    GameConfig,
    run_game,
)
from .hexmap import generate_map
from .rng import child_seed

DEFAULT_GRID = (5, 10, 15, 20, 25, 30, 35)

FRESH_MAP = "fresh"
FIXED_MAP = "fixed"

_TREASURE_OUTCOMES = (OUTCOME_FIRST, OUTCOME_SUBSEQUENT)


@dataclass
class SweepSpec:
    condition: Condition
    threshold_grid: tuple = DEFAULT_GRID
    reps: int = 2000
    seed: int = 0
    map_policy: str = FRESH_MAP
    width: int = 70
    height: int = 30
    mine_count: int = 35
    config: GameConfig = field(default_factory=GameConfig)
    jobs: int = 1

    def validate(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if any(not 0 <= t <= 40 for t in self.threshold_grid):
            raise ValueError("grid thresholds must lie in [0, 40]")
        if self.map_policy not in (FRESH_MAP, FIXED_MAP):
            raise ValueError(f"unknown map policy {self.map_policy!r}")


@dataclass
class SweepCell:
    initial_t: float
    sequential_t: float
    reps: int
    treasures_per_player: float
    treasures_per_player_se: float
    group_treasures: float
    group_treasures_se: float
    payoff_per_player: float
    payoff_per_player_se: float
    duplicated: float
    duplicated_se: float
    searches: float
    searches_se: float
    searches_per_treasure: Optional[float]


class GameStats:
    """Per-game aggregates pulled out of one decision log."""

    __slots__ = ("treasures_per_player", "group_treasures", "payoff_per_player",
                 "duplicated", "searches")

    def __init__(self, records: Sequence[DecisionRecord], condition: Condition):
        n_players = len({r.player for r in records}) or 1
        searches = 0
        credited = 0
        payoff = 0
        cells = set()
        by_round_cell: dict = {}
        protection = condition == Condition.PROTECTION
        singleton = condition == Condition.SINGLETON
        for r in records:
            payoff += r.payoff_net
            if r.action != "search":
                continue
            searches += 1
            if r.outcome in _TREASURE_OUTCOMES:
                if not protection or r.reward_gross > 0:
                    credited += 1
                cells.add((r.player, r.cell) if singleton else r.cell)
                if condition == Condition.NO_PROTECTION:
                    key = (r.round, r.cell)
                    by_round_cell[key] = by_round_cell.get(key, 0) + 1
        self.searches = searches
        self.treasures_per_player = credited / n_players
        self.group_treasures = len(cells)
        self.payoff_per_player = payoff / n_players
        self.duplicated = sum(1 for k in by_round_cell.values() if k >= 2)


class _Accumulator:
    def __init__(self):
        self.n = 0
        self.sums = [0.0] * 5
        self.sq = [0.0] * 5

    def add(self, stats: GameStats):
        vals = (
            stats.treasures_per_player,
            stats.group_treasures,
            stats.payoff_per_player,
            stats.duplicated,
            stats.searches,
        )
        self.n += 1
        for i, v in enumerate(vals):
            self.sums[i] += v
            self.sq[i] += v * v

    def mean_se(self, i: int) -> tuple[float, float]:
        n = self.n
        mean = self.sums[i] / n
        if n < 2:
            return mean, 0.0
        var = max(0.0, (self.sq[i] - n * mean * mean) / (n - 1))
        return mean, math.sqrt(var / n)


def _game_seed(spec: SweepSpec, initial_t, sequential_t, rep: int) -> int:
    return child_seed(spec.seed, "cell", initial_t, sequential_t, rep)


def _play_once(spec: SweepSpec, strategies: Sequence[Strategy], seed: int):
    if spec.map_policy == FRESH_MAP:
        tmap = generate_map(
            child_seed(seed, "map"), spec.width, spec.height, spec.mine_count
        )
    else:
        tmap = generate_map(spec.seed, spec.width, spec.height, spec.mine_count)
    config = replace(spec.config, condition=spec.condition, seed=seed)
    agents = [ThresholdAgent(s, seed=p) for p, s in enumerate(strategies)]
    return run_game(config, tmap, agents)


def run_cell(spec: SweepSpec, initial_t, sequential_t) -> SweepCell:
    strategy = Strategy(initial_t, sequential_t)
    strategies = [strategy] * spec.config.n_players
    acc = _Accumulator()
    searches_total = 0.0
    treasures_total = 0.0
    for rep in range(spec.reps):
        records = _play_once(spec, strategies, _game_seed(spec, initial_t, sequential_t, rep))
        stats = GameStats(records, spec.condition)
        acc.add(stats)
        searches_total += stats.searches
        treasures_total += stats.group_treasures
    tpp, tpp_se = acc.mean_se(0)
    grp, grp_se = acc.mean_se(1)
    pay, pay_se = acc.mean_se(2)
    dup, dup_se = acc.mean_se(3)
    sea, sea_se = acc.mean_se(4)
    spt = searches_total / treasures_total if treasures_total else None
    return SweepCell(
        initial_t=initial_t,
        sequential_t=sequential_t,
        reps=spec.reps,
        treasures_per_player=tpp,
        treasures_per_player_se=tpp_se,
        group_treasures=grp,
        group_treasures_se=grp_se,
        payoff_per_player=pay,
        payoff_per_player_se=pay_se,
        duplicated=dup,
        duplicated_se=dup_se,
        searches=sea,
        searches_se=sea_se,
        searches_per_treasure=spt,
    )


def _run_cell_task(args):
    spec, it, st = args
    return run_cell(spec, it, st)


def run_sweep(spec: SweepSpec) -> list[SweepCell]:
    """All grid pairs, reps games each; deterministic for a given spec."""
    spec.validate()
    tasks = [(spec, it, st) for it in spec.threshold_grid for st in spec.threshold_grid]
    if spec.jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(spec.jobs) as pool:
            cells = pool.map(_run_cell_task, tasks)
    else:
        cells = [_run_cell_task(t) for t in tasks]
    return cells


def best_symmetric(grid: Sequence[SweepCell]) -> tuple[float, float]:
    """Argmax of mean per-player payoff; ties broken toward lower thresholds."""
    if not grid:
        raise ValueError("empty sweep grid")
    best = max(
        grid,
        key=lambda c: (c.payoff_per_player, -(c.initial_t + c.sequential_t), -c.initial_t),
    )
    return best.initial_t, best.sequential_t


def grid_cell(grid: Sequence[SweepCell], initial_t, sequential_t) -> SweepCell:
    for cell in grid:
        if cell.initial_t == initial_t and cell.sequential_t == sequential_t:
            return cell
    raise KeyError((initial_t, sequential_t))


# -- best response ------------------------------------------------------------


def deviation_payoffs(
    spec: SweepSpec, profile: tuple, deviation: tuple, reps: Optional[int] = None
) -> list:
    """Player 0's per-game payoffs using `deviation` against three opponents
    at `profile`. Seeds depend on (profile, rep) only, not the deviation, so
    different deviations play identical maps and cost streams: comparisons
    are paired and most of the between-game noise cancels."""
    reps = reps or spec.reps
    opp = Strategy(*profile)
    dev = Strategy(*deviation)
    strategies = [dev] + [opp] * (spec.config.n_players - 1)
    payoffs = []
    for rep in range(reps):
        seed = child_seed(spec.seed, "br", profile, rep)
        records = _play_once(spec, strategies, seed)
        payoffs.append(sum(r.payoff_net for r in records if r.player == 0))
    return payoffs


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def deviation_payoff(
    spec: SweepSpec, profile: tuple, deviation: tuple, reps: Optional[int] = None
) -> tuple[float, float]:
    """Mean payoff (and SE) of player 0 using `deviation` against three
    opponents at `profile`."""
    return _mean_se(deviation_payoffs(spec, profile, deviation, reps))


def best_response_check(
    spec: SweepSpec,
    profile: tuple,
    deviation_grid: Optional[Sequence[tuple]] = None,
    reps: Optional[int] = None,
) -> dict:
    """Fix three players at `profile`, sweep player 0 over deviations.

    Gains are paired per repetition (same seeds), and the verdict is
    'approximate_equilibrium' when no deviation improves the mean payoff by
    more than two standard errors of the paired difference."""
    if deviation_grid is None:
        deviation_grid = [
            (it, st) for it in spec.threshold_grid for st in spec.threshold_grid
        ]
    base = deviation_payoffs(spec, profile, profile, reps)
    base_mean, base_se = _mean_se(base)
    table = []
    best = None
    for deviation in deviation_grid:
        if tuple(deviation) == tuple(profile):
            mean, se = base_mean, base_se
            gain, gain_se = 0.0, 0.0
        else:
            payoffs = deviation_payoffs(spec, profile, deviation, reps)
            mean, se = _mean_se(payoffs)
            gain, gain_se = _mean_se([d - b for d, b in zip(payoffs, base)])
        row = {
            "deviation": tuple(deviation),
            "mean_payoff": mean,
            "se": se,
            "gain": gain,
            "gain_se": gain_se,
        }
        table.append(row)
        if best is None or gain > best["gain"]:
            best = row
    equilibrium = best["gain"] <= 2 * best["gain_se"] or best["deviation"] == tuple(profile)
    return {
        "profile": tuple(profile),
        "profile_payoff": base_mean,
        "profile_se": base_se,
        "table": table,
        "best_deviation": best,
        "verdict": "approximate_equilibrium" if equilibrium else "profitable_deviation",
    }


def _neighbor_profiles(grid_values: Sequence, profile: tuple) -> list[tuple]:
    out = []
    ii = grid_values.index(profile[0])
    jj = grid_values.index(profile[1])
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            i, j = ii + di, jj + dj
            if 0 <= i < len(grid_values) and 0 <= j < len(grid_values):
                out.append((grid_values[i], grid_values[j]))
    return out


def equilibrium_candidate(
    spec: SweepSpec,
    start: Optional[tuple] = None,
    reps: Optional[int] = None,
    max_rounds: int = 8,
    local: bool = True,
) -> dict:
    """Iterated best response on the symmetric grid.

    From a starting profile, repeatedly move everyone to player 0's best
    response and stop at a fixed point (or when a profile repeats, which a
    noisy boundary can cause). With local=True each step considers only the
    one-step neighborhood, making the whole search affordable at full
    repetition counts; paired seeds keep the comparisons tight either way."""
    values = list(spec.threshold_grid)
    full_grid = [(it, st) for it in values for st in values]
    mid = values[len(values) // 2]
    profile = tuple(start) if start else (mid, mid)
    seen = [profile]
    for _ in range(max_rounds):
        deviations = _neighbor_profiles(values, profile) if local else full_grid
        payoffs = {
            dev: deviation_payoff(spec, profile, dev, reps)[0] for dev in deviations
        }
        response = max(payoffs, key=lambda d: (payoffs[d], -(d[0] + d[1]), -d[0]))
        if response == profile:
            break
        profile = response
        if profile in seen:  # cycle: settle on the revisited profile
            break
        seen.append(profile)
    return {"candidate": profile, "path": seen}


# -- efficiency ----------------------------------------------------------------


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties."""

    def ranks(values):
        order = sorted(range(len(values)), key=lambda i: values[i])
        out = [0.0] * len(values)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
                j += 1
            avg = (i + j) / 2 + 1
            for k in range(i, j + 1):
                out[order[k]] = avg
            i = j + 1
        return out

    rx, ry = ranks(list(xs)), ranks(list(ys))
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0 or vy == 0:
        return 0.0
    return cov / math.sqrt(vx * vy)


def efficiency_report(grid: Sequence[SweepCell]) -> dict:
    """Efficiency view of a sweep: searches per treasure, duplication, and
    how duplication tracks the sequential threshold.

    The rank correlation runs over cells with any search activity: a profile
    whose initial threshold never fires (threshold 5 under the strict rule)
    has no sequential phase at all, so its duplication of exactly zero says
    nothing about the threshold-duplication relationship."""
    cells = [
        {
            "initial_t": c.initial_t,
            "sequential_t": c.sequential_t,
            "searches_per_treasure": c.searches_per_treasure,
            "duplicated": c.duplicated,
            "group_treasures": c.group_treasures,
        }
        for c in grid
    ]
    active = [c for c in grid if c.searches > 0]
    rho = spearman(
        [c.sequential_t for c in active], [c.duplicated for c in active]
    ) if len(active) > 2 else None
    return {
        "cells": cells,
        "duplication_vs_sequential_spearman": rho,
        "max_duplicated": max((c.duplicated for c in grid), default=0.0),
    }


# -- output ---------------------------------------------------------------------

SWEEP_COLUMNS = [
    "initial_t",
    "sequential_t",
    "reps",
    "treasures_per_player",
    "treasures_per_player_se",
    "group_treasures",
    "group_treasures_se",
    "payoff_per_player",
    "payoff_per_player_se",
    "duplicated",
    "duplicated_se",
    "searches",
    "searches_se",
    "searches_per_treasure",
]


def sweep_to_csv(grid: Sequence[SweepCell], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for c in grid:
            writer.writerow([getattr(c, col) for col in SWEEP_COLUMNS])


def sweep_to_json(grid: Sequence[SweepCell]) -> str:
    return json.dumps(
        [{col: getattr(c, col) for col in SWEEP_COLUMNS} for c in grid], indent=2
    )
