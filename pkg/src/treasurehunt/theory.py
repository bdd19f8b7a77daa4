"""Closed-form and numeric solvers for the game's optimality benchmarks.

Three layers:

* An abstract exploration/exploitation model: n players each choose research
  effort r and an exploitation rate x over the knowledge pool K = sum r_i,
  with utility u = r*R_r + a*R_a - c(r) - c(x*K). Solvers cover the
  protected single-player optimum and the symmetric equilibrium, plus the
  rate comparisons between the two regimes.

* The concrete treasure game under Protection: an infinite-horizon optimal
  stopping problem. Treating the cost draw as continuous uniform on [5, 35]
  (success probability p = (c-5)/30, conditional mean cost (c+5)/2), each
  exploration stage with per-success continuation W has value
  v(c) = W - (c+5)/2 - 30*x/(c-5) where x is the value of a game round. The
  maximizing threshold c = 5 + 2*sqrt(15*x) does not depend on W, which is
  why one constant threshold rules every stage; the fixed point x = V(x) of
  the initial-search value pins the numbers down (x ~ 3.97, threshold
  ~ 20.42).

* The No-Protection bounds: mixed-equilibrium indifference conditions for
  digging around an opened mine against three opponents, with and without
  the value of the information revealed by searches, bracketing the
  sequential threshold (~21.3 to ~25.1) and the first-treasure threshold
  (16 to ~16.5).

All root finding is plain bisection on monotone residuals: slow and
guaranteed, which is the right trade for one-shot solves.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from math import comb, sqrt
from typing import Callable, Optional, Sequence

PROTECTED = "protected"
SYMMETRIC = "symmetric_equilibrium"

# the concrete game's constants
FIRST_REWARD = 320
SUBSEQUENT_REWARD = 80
COST_LO = 5.0
COST_HI = 35.0
COST_RANGE = COST_HI - COST_LO  # 30
FIND_P_SECOND = 1 / 3
FIND_P_THIRD = 1 / 2
# co-finder payoffs for a subsequent treasure: alone, 2-way, 3-way, 4-way
SPLIT_REWARDS = (80.0, 16.0, 4.0, 0.0)


class TheoryError(Exception):
    pass


class BracketingError(TheoryError):
    def __init__(self, message, lo, hi, flo, fhi):
        super().__init__(f"{message}: f({lo})={flo}, f({hi})={fhi}")
        self.bracket = (lo, hi, flo, fhi)


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10,
           max_iter: int = 200) -> float:
    """Root of f on [lo, hi]; requires a sign change at the ends."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise BracketingError("no sign change on bracket", lo, hi, flo, fhi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0 or (hi - lo) < tol:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- abstract model -----------------------------------------------------------


@dataclass
class AbstractParams:
    R_r: float
    R_a: float
    n: int
    alpha: Optional[float] = None  # polynomial cost alpha * y**beta
    beta: Optional[float] = None
    cost: Optional[Callable[[float], float]] = None  # black-box alternative
    cost_prime: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if not (self.R_a >= self.R_r > 0):
            raise TheoryError("need R_a >= R_r > 0")
        if self.alpha is not None or self.beta is not None:
            if self.alpha is None or self.beta is None:
                raise TheoryError("polynomial cost needs both alpha and beta")
            if self.alpha <= 0 or self.beta <= 1:
                raise TheoryError("polynomial cost needs alpha > 0, beta > 1")
        elif self.cost_prime is None:
            raise TheoryError("supply (alpha, beta) or a cost derivative")

    @property
    def polynomial(self) -> bool:
        return self.alpha is not None

    def c(self, y: float) -> float:
        if self.polynomial:
            return self.alpha * y ** self.beta
        if self.cost is None:
            raise TheoryError("black-box params need `cost` to evaluate utilities")
        return self.cost(y)

    def c_prime(self, y: float) -> float:
        if self.polynomial:
            return self.alpha * self.beta * y ** (self.beta - 1)
        return self.cost_prime(y)


@dataclass
class AbstractSolution:
    r: float
    x: float
    regime: str


def _invert_c_prime(params: AbstractParams, target: float) -> float:
    """Solve c'(r) = target. Closed form for polynomial costs, expanding
    bisection otherwise."""
    if target <= 0:
        raise TheoryError(f"derivative target must be positive, got {target}")
    if params.polynomial:
        return (target / (params.alpha * params.beta)) ** (1.0 / (params.beta - 1.0))
    hi = 1.0
    for _ in range(200):
        if params.c_prime(hi) >= target:
            break
        hi *= 2.0
    else:
        raise TheoryError(
            f"cost derivative never reaches {target}; optimum is unbounded"
        )
    return bisect(lambda r: params.c_prime(r) - target, 0.0, hi)


def solve_protected_abstract(params: AbstractParams) -> AbstractSolution:
    """Single protected player: exploit everything (x=1) and research up to
    c'(r) = (R_r + R_a)/2."""
    r = _invert_c_prime(params, (params.R_r + params.R_a) / 2.0)
    return AbstractSolution(r=r, x=1.0, regime=PROTECTED)


def solve_symmetric_equilibrium(params: AbstractParams) -> AbstractSolution:
    """Symmetric equilibrium of the shared-knowledge game:
    c'(r) = R_r + R_a/n^2, then x from x * c'(n r x) = (n-1) R_a / n^2."""
    n = params.n
    if n < 2:
        raise TheoryError("symmetric equilibrium needs n >= 2")
    r = _invert_c_prime(params, params.R_r + params.R_a / n**2)
    target = (n - 1) * params.R_a / n**2

    def g(x: float) -> float:
        return x * params.c_prime(n * r * x) - target

    hi = 1.0
    for _ in range(200):
        if g(hi) > 0:
            break
        hi *= 2.0
    else:
        raise BracketingError("exploitation condition never brackets", 0, hi, g(0.0), g(hi))
    x = bisect(g, 0.0, hi)
    return AbstractSolution(r=r, x=x, regime=SYMMETRIC)


def rate_comparisons(params: AbstractParams) -> dict:
    """The two regime comparisons and their ratio thresholds.

    Protection raises initial research iff R_a/R_r exceeds n^2/(n^2-2);
    it lowers the aggregate exploitation rate iff R_a/R_r exceeds
    n^2/(n^2-n-1). Cross-validated against the solved efforts."""
    n = params.n
    if n < 2 or n * n - n - 1 <= 0:
        raise TheoryError("rate comparisons need n >= 2")
    ratio = params.R_a / params.R_r
    thr_research = n**2 / (n**2 - 2)
    thr_exploit = n**2 / (n**2 - n - 1)
    protected = solve_protected_abstract(params)
    equilibrium = solve_symmetric_equilibrium(params)
    return {
        "more_initial_search_with_protection": ratio > thr_research,
        "less_exploitation_with_protection": ratio > thr_exploit,
        "thresholds": (thr_research, thr_exploit),
        "protected_r": protected.r,
        "equilibrium_r": equilibrium.r,
        "aggregate_exploitation": n * equilibrium.x,
    }


def evaluate_utility(
    params: AbstractParams,
    r_profile: Sequence[float],
    x_profile: Sequence[float],
    player: int,
) -> float:
    """Utility of one player at an arbitrary effort profile.

    K = sum r; own work w = x_i K; applications are x_i K while aggregate
    exploitation stays below capacity (sum x < 1), rationed proportionally
    above it."""
    if any(v < 0 for v in r_profile) or any(v < 0 for v in x_profile):
        raise TheoryError("efforts must be non-negative")
    K = sum(r_profile)
    sum_x = sum(x_profile)
    xi = x_profile[player]
    ri = r_profile[player]
    w = xi * K
    if sum_x < 1 or sum_x == 0:
        a = xi * K
    else:
        a = (xi / sum_x) * K
    return ri * params.R_r + a * params.R_a - params.c(ri) - params.c(w)


def full_exploitation_check(solution: AbstractSolution, params: AbstractParams) -> bool:
    """Whether the equilibrium consumes the whole knowledge pool: the
    aggregate rate n*x covers the generated knowledge."""
    return params.n * solution.x >= 1.0


# -- the concrete game under Protection ---------------------------------------


@dataclass
class ProtectionSolution:
    x: float  # value of one game round (continuation value)
    C: float  # first-search threshold at the fixed point
    v: list[float] = field(default_factory=list)  # state values v1..v5
    stage_thresholds: list[float] = field(default_factory=list)  # c1..c5
    converged: bool = False
    residual: float = float("nan")


def _stage_optimum(W: float, x: float) -> tuple[float, float]:
    """Optimal threshold and value for one exploration stage.

    The stage pays W on success (probability 1 per search here; W already
    folds in success odds), costs E[c | c < t] per search, and burns x per
    round of waiting: v(t) = W - (t+5)/2 - 30x/(t-5). v is strictly concave
    on t > 5, so the derivative -1/2 + 30x/(t-5)^2 has a single root; find
    it numerically rather than plugging in the closed form so the constancy
    across stages is a result, not an assumption."""
    if x <= 0:
        return COST_HI, W - (COST_HI + COST_LO) / 2
    t = bisect(
        lambda c: -0.5 + COST_RANGE * x / (c - COST_LO) ** 2,
        COST_LO + 1e-12,
        COST_LO + 10 * (1 + math.sqrt(COST_RANGE * x)),
        tol=1e-12,
    )
    value = W - (t + COST_LO) / 2 - COST_RANGE * x / (t - COST_LO)
    return t, value


def _stage_chain(x: float) -> tuple[list[float], list[float]]:
    """Thresholds and values of the five exploitation stages, deepest first:
    one certain cell left; a 1/2-shot cell; three linked unknowns; five
    unknowns after one miss; the six fresh neighbors of a first treasure."""
    R = SUBSEQUENT_REWARD
    c1, v1 = _stage_optimum(R, x)
    c2, v2 = _stage_optimum(0.5 * v1 + 0.5 * R, x)
    c3, v3 = _stage_optimum(R + v2, x)
    c4, v4 = _stage_optimum(0.5 * (R + v2) + 0.5 * v3, x)
    c5, v5 = _stage_optimum((R + v2) / 3 + 2 * v4 / 3, x)
    return [c1, c2, c3, c4, c5], [v1, v2, v3, v4, v5]


def initial_search_value(x: float, threshold: Optional[float] = None) -> float:
    """Per-round value of hunting first treasures when a find is worth
    320 + v5(x). The maximizing threshold equals that worth; the maximized
    value is (C-5)^2/60."""
    _, values = _stage_chain(x)
    gain = 0.05 * (FIRST_REWARD + values[4])
    C = gain if threshold is None else threshold
    C = min(max(C, COST_LO), COST_HI)
    p = (C - COST_LO) / COST_RANGE
    return p * (gain - (C + COST_LO) / 2)


def solve_game_protection(tol: float = 1e-9) -> ProtectionSolution:
    """Fixed point x = V(x) of the protected game's round value."""

    def residual(x: float) -> float:
        return x - initial_search_value(x)

    x = bisect(residual, 0.0, 16.0, tol=tol)
    thresholds, values = _stage_chain(x)
    C = 0.05 * (FIRST_REWARD + values[4])
    res = abs(residual(x))
    return ProtectionSolution(
        x=x,
        C=C,
        v=values,
        stage_thresholds=thresholds,
        converged=res < 1e-6,
        residual=res,
    )


def two_stage_deterministic(R: float, A: float) -> tuple[float, float, float]:
    """The two-step certain-search game: find a lead (no direct reward),
    then the prize R; costs uniform on [0, A]. Stationarity again: both
    thresholds equal R/2 and the round value is R^2/(8A)."""
    if R <= 0 or A <= 0:
        raise TheoryError("need R > 0 and A > 0")
    if R / 2 > A:
        warnings.warn(
            f"threshold R/2 = {R / 2} exceeds the cost ceiling {A}; "
            "the interior solution is clipped",
            stacklevel=2,
        )
    x = R * R / (8 * A)
    # reconstruct through the derivation's intermediate forms as a self-check
    c2 = math.sqrt(2 * A * x)
    v = R - c2
    c1 = v
    assert abs(c1 - R / 2) < 1e-9 and abs(c2 - R / 2) < 1e-9
    return R / 2, R / 2, x


# -- the No-Protection bounds ---------------------------------------------------


@dataclass
class NoProtectionBounds:
    seq_lower: float  # threshold ignoring information value
    c2: float  # third-treasure equilibrium threshold
    third_payoff: float  # payoff bound from the third treasure
    info_gain: float  # value of information around a first treasure
    seq_upper: float  # threshold including the information bound
    total_payoff_upper: float  # payoff bound for digging around a first treasure
    first_lower: float
    first_upper: float


def _expected_split_gross(q: float, find_p: float, collide_p: float) -> float:
    """Expected gross from searching one candidate treasure cell while each
    of three opponents searches with probability q and, when searching,
    lands on the same cell with probability collide_p."""
    total = 0.0
    for j in range(4):  # opponents searching
        pj = comb(3, j) * q**j * (1 - q) ** (3 - j)
        inner = sum(
            comb(j, m) * collide_p**m * (1 - collide_p) ** (j - m) * SPLIT_REWARDS[m]
            for m in range(j + 1)
        )
        total += pj * inner
    return find_p * total


def solve_np_sequential_lower(opponent_search_prob: Optional[float] = None) -> float:
    """Indifference threshold for digging around an opened mine, treasure
    value only (no information term). Symmetric by default: opponents use
    the same threshold; pass opponent_search_prob to freeze them (0 gives
    the no-competition limit 80/3)."""

    def residual(c: float) -> float:
        q = (c - COST_LO) / COST_RANGE if opponent_search_prob is None else opponent_search_prob
        return _expected_split_gross(q, FIND_P_SECOND, 1 / 6) - c

    return bisect(residual, COST_LO, COST_HI)


def solve_np_third_threshold() -> float:
    """Equilibrium threshold when the mine's last treasure sits in one of
    two known cells (find probability and collision probability both 1/2)."""

    def residual(c: float) -> float:
        q = (c - COST_LO) / COST_RANGE
        return _expected_split_gross(q, FIND_P_THIRD, 1 / 2) - c

    return bisect(residual, COST_LO, COST_HI)


def _discretized_search_prob(threshold: float, support=(5, 10, 15, 20, 25, 30, 35)) -> float:
    """Fraction of the discrete cost support strictly below the threshold."""
    return sum(1 for c in support if c < threshold) / len(support)


def solve_np_bounds(protection: Optional[ProtectionSolution] = None) -> NoProtectionBounds:
    """The full bounds pipeline for No Protection.

    Uses the protected game's state values to bound what a piece of
    information can be worth (the gap between consecutive exploitation
    stages, about 10.21 points), weights the scenarios in which the
    searcher actually keeps that information by their probabilities, and
    re-solves the sequential indifference condition with the information
    bound added."""
    if protection is None:
        protection = solve_game_protection()
    info_value = protection.v[0] - protection.v[1]  # = 2.5 + sqrt(15 x)

    seq_lower = solve_np_sequential_lower()
    c2 = solve_np_third_threshold()
    third_payoff = _expected_split_gross(
        (c2 - COST_LO) / COST_RANGE, FIND_P_THIRD, 1 / 2
    ) - (c2 + COST_LO) / 2

    q = _discretized_search_prob(seq_lower)  # 4/7 for the solved lower bound
    # nobody else revealed anything: j >= 1 opponents searched, all missed
    p_none = sum(comb(3, j) * q**j * (1 - q) ** (3 - j) * (2 / 3) ** j for j in (1, 2, 3))
    # opponents revealed both remaining treasures at once
    p_two = q**3 * (1 / 6) + 3 * (1 - q) * q**2 * 2 * (1 / 6) ** 2
    p_one = 1.0 - p_two - p_none
    # nobody else searched my exact cell
    p_nobody_cell = sum(
        comb(3, j) * q**j * (1 - q) ** (3 - j) * (5 / 6) ** j for j in range(4)
    )
    # given my find, the third treasure survives the round
    p_third_unfound = 1.0 - sum(
        comb(3, j) * q**j * (1 - q) ** (3 - j) * (5 / 6) ** j for j in (1, 2, 3)
    )
    # and next round nobody beats me to it
    p_info_next = sum(
        comb(3, j) * q**j * (1 - q) ** (3 - j) * (1 / 2) ** min(j + 1, 3)
        for j in (1, 2, 3)
    )

    info_gain = (2 / 3) * (p_none * info_value + p_one * (1 / 3) * info_value) + (
        1 / 3
    ) * (p_nobody_cell * p_third_unfound * (third_payoff + p_info_next * info_value))

    def upper_residual(c: float) -> float:
        qq = (c - COST_LO) / COST_RANGE
        return _expected_split_gross(qq, FIND_P_SECOND, 1 / 6) + info_gain - c

    seq_upper = bisect(upper_residual, COST_LO, COST_HI)
    total_payoff_upper = (
        _expected_split_gross((seq_upper - COST_LO) / COST_RANGE, FIND_P_SECOND, 1 / 6)
        + info_gain
        - (seq_upper + COST_LO) / 2
    )
    first_lower, first_upper = np_first_treasure_bounds(total_payoff_upper)
    return NoProtectionBounds(
        seq_lower=seq_lower,
        c2=c2,
        third_payoff=third_payoff,
        info_gain=info_gain,
        seq_upper=seq_upper,
        total_payoff_upper=total_payoff_upper,
        first_lower=first_lower,
        first_upper=first_upper,
    )


def np_first_treasure_bounds(total_payoff_upper: float) -> tuple[float, float]:
    """First-treasure threshold bracket: worth 0.05*320 = 16 alone, at most
    0.05*(320 + sequential payoff bound) with the follow-up folded in."""
    if total_payoff_upper < 0:
        raise TheoryError("payoff bound must be non-negative")
    return 0.05 * FIRST_REWARD, 0.05 * (FIRST_REWARD + total_payoff_upper)


# -- report -------------------------------------------------------------------


def theory_report(
    R_r: float = 16.0,
    R_a: float = 26.0,
    n: int = 4,
    alpha: float = 0.5,
    beta: float = 2.0,
) -> dict:
    """Everything at once, JSON-ready; the CLI `solve` subcommand prints it."""
    params = AbstractParams(R_r=R_r, R_a=R_a, n=n, alpha=alpha, beta=beta)
    protection = solve_game_protection()
    bounds = solve_np_bounds(protection)
    protected = solve_protected_abstract(params)
    equilibrium = solve_symmetric_equilibrium(params)
    comparisons = rate_comparisons(params)
    return {
        "protection": {
            "x": protection.x,
            "C": protection.C,
            "v": protection.v,
            "stage_thresholds": protection.stage_thresholds,
            "residual": protection.residual,
        },
        "no_protection": {
            "sequential_lower": bounds.seq_lower,
            "third_threshold": bounds.c2,
            "third_payoff": bounds.third_payoff,
            "info_gain": bounds.info_gain,
            "sequential_upper": bounds.seq_upper,
            "total_payoff_upper": bounds.total_payoff_upper,
            "first_lower": bounds.first_lower,
            "first_upper": bounds.first_upper,
        },
        "abstract": {
            "params": {"R_r": R_r, "R_a": R_a, "n": n, "alpha": alpha, "beta": beta},
            "protected_r": protected.r,
            "protected_x": protected.x,
            "equilibrium_r": equilibrium.r,
            "equilibrium_x": equilibrium.x,
            "comparisons": {
                k: v
                for k, v in comparisons.items()
                if k in ("more_initial_search_with_protection", "less_exploitation_with_protection", "thresholds")
            },
        },
    }
