"""Decision-log analytics: context labeling, threshold fitting, rate curves,
efficiency metrics and the observing-others effect.

Everything here consumes the engine's decision-log rows. Context labeling
replays each game from its log (the log carries every player's private
failures, so each player's information state is reconstructible exactly) and
assigns each turn Initial, Sequential or Excluded:

* the last rounds of a game are excluded (default 12) to keep the data
  comparable to the infinite-horizon benchmarks;
* turns with a sequential opportunity are Sequential, except that a search
  aimed elsewhere than the open mine's candidates is excluded (a first-
  discovery search taken when a subsequent one was available); skips count
  as sequential non-searches;
* turns with no opportunity but a partially revealed mine somewhere on the
  player's board are excluded as ambiguous; the rest are Initial.

Threshold fitting is a one-dimensional 0-1-loss classifier: a candidate cost
t explains a turn when the player searched below t and skipped at or above
it; the fitted threshold maximizes the explained fraction (the threshold
quality). Candidates are the cost support plus a sentinel of 40 so that
"always search" is representable exactly.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from statistics import quantiles
from typing import Iterable, Optional, Sequence

from .agents import BeliefState
from .engine import (
    OUTCOME_FAIL,
    OUTCOME_FIRST,
    OUTCOME_SUBSEQUENT,
    SEARCH,
    Condition,
    DecisionRecord,
)
from .hexmap import cell_index

INITIAL = "initial"
SEQUENTIAL = "sequential"
EXCLUDED = "excluded"

DEFAULT_EXCLUDE_LAST = 12
THRESHOLD_CANDIDATES = (5, 10, 15, 20, 25, 30, 35, 40)
PAPER_CANDIDATES = (5, 10, 15, 20, 25, 30, 35)  # no sentinel

_TREASURE = (OUTCOME_FIRST, OUTCOME_SUBSEQUENT)

LabeledRecord = namedtuple("LabeledRecord", DecisionRecord._fields + ("context",))


class ReplayError(Exception):
    pass


def game_key(rec: DecisionRecord) -> tuple:
    return (rec.condition, rec.map_id, rec.seed, rec.game_index)


def _group_games(records: Sequence[DecisionRecord]) -> dict:
    games: dict = {}
    for rec in records:
        games.setdefault(game_key(rec), []).append(rec)
    return games


def _label_game(
    records: list[DecisionRecord],
    exclude_last: int,
    width: int,
    height: int,
    continuation: bool,
) -> list[LabeledRecord]:
    condition = Condition(records[0].condition)
    players = sorted({r.player for r in records})
    rounds = max(r.round for r in records)
    cutoff = rounds - exclude_last

    by_round: dict[int, list[DecisionRecord]] = {}
    for rec in records:
        by_round.setdefault(rec.round, []).append(rec)
    if any(len(rows) != len(players) for rows in by_round.values()):
        raise ReplayError("incomplete game: every round needs one row per player")

    singleton = condition == Condition.SINGLETON
    beliefs = {p: BeliefState(width, height) for p in players}
    owners: dict[int, int] = {}  # belief anchor -> owning player (Protection)
    fresh_anchor: dict[int, set[int]] = {p: set() for p in players}

    labeled: list[LabeledRecord] = []
    for rnd in sorted(by_round):
        rows = by_round[rnd]
        # classify against the pre-round state
        for rec in rows:
            p = rec.player
            belief = beliefs[p]
            if condition == Condition.PROTECTION:
                exploitable = [
                    b for b in belief.open.values() if owners.get(b.anchor) == p
                ]
            else:
                exploitable = list(belief.open.values())
            exploitable = [b for b in exploitable if b.candidate_counts()]
            if continuation is False:
                exploitable = [
                    b for b in exploitable if b.anchor in fresh_anchor[p]
                ]
            if rec.round > cutoff:
                context = EXCLUDED
            elif exploitable:
                if rec.action != SEARCH:
                    context = SEQUENTIAL
                else:
                    cell = cell_index(rec.cell[0], rec.cell[1], width)
                    candidates = set()
                    for b in exploitable:
                        candidates.update(b.candidate_counts())
                    context = SEQUENTIAL if cell in candidates else EXCLUDED
            elif belief.open:
                context = EXCLUDED  # open mine on the board, not exploitable
            else:
                context = INITIAL
            labeled.append(LabeledRecord(*rec, context))

        # apply the round's observations: group treasure rows per revealed
        # cell (co-finders share one reveal), first treasures ahead of
        # subsequent ones so mine anchors match the live game
        for p in players:
            fresh_anchor[p] = set()
        revealed: dict = {}  # (board, cell) -> {"first": bool, "owner": int|None}
        for rec in rows:
            if rec.action != SEARCH or rec.outcome not in _TREASURE:
                continue
            cell = cell_index(rec.cell[0], rec.cell[1], width)
            board = rec.player if singleton else None
            entry = revealed.setdefault((board, cell), {"first": False, "owner": None})
            if rec.outcome == OUTCOME_FIRST:
                entry["first"] = True
                if rec.reward_gross > 0:
                    entry["owner"] = rec.player
        for (board, cell), entry in sorted(
            revealed.items(), key=lambda kv: (not kv[1]["first"], kv[0])
        ):
            watchers = [board] if singleton else players
            for p in watchers:
                mine = beliefs[p].observe_treasure(cell)
                if not mine.closed:
                    fresh_anchor[p].add(mine.anchor)
                if condition == Condition.PROTECTION and entry["owner"] is not None:
                    owners[mine.anchor] = entry["owner"]
        for rec in rows:
            if rec.action == SEARCH and rec.outcome == OUTCOME_FAIL:
                cell = cell_index(rec.cell[0], rec.cell[1], width)
                beliefs[rec.player].observe_black(cell)
    return labeled


def label_contexts(
    records: Sequence[DecisionRecord],
    exclude_last: int = DEFAULT_EXCLUDE_LAST,
    width: int = 70,
    height: int = 30,
    continuation: bool = True,
) -> list[LabeledRecord]:
    """Label every decision row with its search context by replaying the
    games in the log. continuation=False restricts Sequential to turns
    immediately following the discovery that opened the opportunity."""
    labeled: list[LabeledRecord] = []
    for game in _group_games(records).values():
        labeled.extend(_label_game(game, exclude_last, width, height, continuation))
    return labeled


# -- threshold fitting ---------------------------------------------------------


@dataclass
class ThresholdFit:
    player: int
    context: str
    threshold: Optional[float]
    quality: Optional[float]
    n_obs: int


def fit_threshold(
    observations: Iterable[tuple[float, bool]],
    candidates: Sequence[float] = THRESHOLD_CANDIDATES,
    player: int = -1,
    context: str = "",
) -> ThresholdFit:
    """Fit the best-explaining cost threshold to (cost, searched) pairs.

    For candidate t a turn is consistent when (cost < t and searched) or
    (cost >= t and skipped). Returns the maximizing candidate (ties toward
    the smallest) and the explained fraction."""
    obs = list(observations)
    if not obs:
        return ThresholdFit(player, context, None, None, 0)
    best_t = None
    best_q = -1.0
    for t in candidates:
        hits = sum(1 for cost, searched in obs if (cost < t) == bool(searched))
        q = hits / len(obs)
        if q > best_q:
            best_t, best_q = t, q
    return ThresholdFit(player, context, best_t, best_q, len(obs))


def fit_all_thresholds(
    labeled: Sequence[LabeledRecord],
    candidates: Sequence[float] = THRESHOLD_CANDIDATES,
) -> list[ThresholdFit]:
    """One fit per (player, context), Excluded rows dropped."""
    groups: dict = {}
    for rec in labeled:
        if rec.context == EXCLUDED:
            continue
        groups.setdefault((rec.player, rec.context), []).append(
            (rec.cost, rec.action == SEARCH)
        )
    return [
        fit_threshold(obs, candidates, player=p, context=ctx)
        for (p, ctx), obs in sorted(groups.items())
    ]


def threshold_summary(fits: Sequence[ThresholdFit]) -> dict:
    """Median and inclusive quartiles of fitted thresholds per context, plus
    the share of well-explained players (quality >= 0.8)."""
    out = {}
    for context in (INITIAL, SEQUENTIAL):
        values = sorted(f.threshold for f in fits if f.context == context and f.n_obs)
        if not values:
            continue
        if len(values) >= 2:
            q1, med, q3 = quantiles(values, n=4, method="inclusive")
        else:
            q1 = med = q3 = values[0]
        qualities = [f.quality for f in fits if f.context == context and f.n_obs]
        out[context] = {
            "n": len(values),
            "median": med,
            "q1": q1,
            "q3": q3,
            "share_quality_ge_080": sum(1 for q in qualities if q >= 0.8) / len(qualities),
        }
    return out


# -- rates, efficiency, forgone-payoff ------------------------------------------


def search_rate_curves(labeled: Sequence[LabeledRecord]) -> list[dict]:
    """Search frequency per (condition, context, cost), Excluded dropped."""
    agg: dict = {}
    for rec in labeled:
        if rec.context == EXCLUDED:
            continue
        key = (rec.condition, rec.context, rec.cost)
        n, searched = agg.get(key, (0, 0))
        agg[key] = (n + 1, searched + (rec.action == SEARCH))
    return [
        {
            "condition": cond,
            "context": ctx,
            "cost": cost,
            "n": n,
            "searches": s,
            "rate": s / n,
        }
        for (cond, ctx, cost), (n, s) in sorted(agg.items())
    ]


def efficiency_metrics(records: Sequence) -> dict:
    """Per-condition search effort vs yield.

    searches-per-treasure counts distinct treasures revealed (per board in
    Singleton); duplication is the No-Protection count of treasures dug by
    two or more players in the same round. Ratios are absent, not infinite,
    when nothing was found."""
    out: dict = {}
    per_cond: dict = {}
    for rec in records:
        cond = rec.condition
        d = per_cond.setdefault(
            cond, {"searches": 0, "cost": 0, "cells": set(), "collisions": {}}
        )
        if rec.action != SEARCH:
            continue
        d["searches"] += 1
        d["cost"] += rec.cost
        if rec.outcome in _TREASURE:
            board = rec.player if cond == Condition.SINGLETON.value else None
            d["cells"].add((game_key(rec), board, rec.cell))
            if cond == Condition.NO_PROTECTION.value:
                key = (game_key(rec), rec.round, rec.cell)
                d["collisions"][key] = d["collisions"].get(key, 0) + 1
    for cond, d in per_cond.items():
        treasures = len(d["cells"])
        out[cond] = {
            "searches": d["searches"],
            "treasures": treasures,
            "searches_per_treasure": d["searches"] / treasures if treasures else None,
            "cost_per_treasure": d["cost"] / treasures if treasures else None,
            "duplicated": sum(1 for k in d["collisions"].values() if k >= 2),
        }
    return out


def forgone_effect(labeled: Sequence[LabeledRecord]) -> dict:
    """Initial-search rate after another player's success last round vs
    otherwise; a descriptive difference, no model."""
    n_after = s_after = n_other = s_other = 0
    for rec in labeled:
        if rec.context != INITIAL:
            continue
        if rec.other_found_last_round:
            n_after += 1
            s_after += rec.action == SEARCH
        else:
            n_other += 1
            s_other += rec.action == SEARCH
    rate_after = s_after / n_after if n_after else None
    rate_other = s_other / n_other if n_other else None
    diff = (
        rate_after - rate_other
        if rate_after is not None and rate_other is not None
        else None
    )
    return {
        "rate_after_other_success": rate_after,
        "rate_otherwise": rate_other,
        "diff": diff,
        "n_after": n_after,
        "n_otherwise": n_other,
    }
