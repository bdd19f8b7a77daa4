import math
import random

import pytest

from treasurehunt.theory import (
    AbstractParams,
    BracketingError,
    bisect,
    evaluate_utility,
    full_exploitation_check,
    initial_search_value,
    np_first_treasure_bounds,
    rate_comparisons,
    solve_game_protection,
    solve_np_bounds,
    solve_np_sequential_lower,
    solve_np_third_threshold,
    solve_protected_abstract,
    solve_symmetric_equilibrium,
    theory_report,
    two_stage_deterministic,
)

SQRT15 = math.sqrt(15)


def default_params(alpha=0.5, beta=2.0, n=4):
    return AbstractParams(R_r=16.0, R_a=26.0, n=n, alpha=alpha, beta=beta)


# -- protected game fixed point -------------------------------------------------


def test_protection_golden_numbers():
    sol = solve_game_protection()
    assert sol.converged
    assert abs(sol.x - 3.96) < 0.01
    assert abs(sol.C - 20.42) < 0.01


def test_stage_thresholds_agree_to_1e9():
    sol = solve_game_protection()
    assert len(sol.stage_thresholds) == 5
    spread = max(sol.stage_thresholds) - min(sol.stage_thresholds)
    assert spread < 1e-9
    # and they coincide with the initial-search threshold at the fixed point
    assert abs(sol.stage_thresholds[0] - sol.C) < 1e-6


def test_stage_values_match_algebraic_forms():
    # oracle: direct algebra of each stage's optimum
    sol = solve_game_protection()
    s = math.sqrt(sol.x)
    expected = [
        75 - 2 * SQRT15 * s,
        72.5 - 3 * SQRT15 * s,
        147.5 - 5 * SQRT15 * s,
        145 - 6 * SQRT15 * s,
        142.5 - 7 * SQRT15 * s,
    ]
    for got, want in zip(sol.v, expected):
        assert abs(got - want) < 1e-7
    for c in sol.stage_thresholds:
        assert abs(c - (5 + 2 * SQRT15 * s)) < 1e-7


def test_inner_maximizer_two_forms_agree():
    sol = solve_game_protection()
    x = sol.x
    v_closed = initial_search_value(x)
    assert abs(v_closed - (sol.C - 5) ** 2 / 60) < 1e-9
    # numeric scan over candidate thresholds never beats the closed form
    grid_best = max(
        initial_search_value(x, threshold=5 + 30 * i / 20000) for i in range(20001)
    )
    assert grid_best <= v_closed + 1e-9
    assert abs(grid_best - v_closed) < 1e-6


def test_information_value_gap():
    sol = solve_game_protection()
    gap = sol.v[0] - sol.v[1]
    assert abs(gap - (2.5 + SQRT15 * math.sqrt(sol.x))) < 1e-7
    assert abs(gap - 10.21) < 0.02


# -- no-protection bounds --------------------------------------------------------


def test_np_sequential_lower_bound():
    c1 = solve_np_sequential_lower()
    assert abs(c1 - 21.28) < 0.02


def test_np_lower_no_competition_limit():
    c = solve_np_sequential_lower(opponent_search_prob=0.0)
    assert abs(c - 80 / 3) < 1e-6


def test_np_lower_residual_strictly_decreasing():
    from treasurehunt.theory import _expected_split_gross

    def residual(c):
        return _expected_split_gross((c - 5) / 30, 1 / 3, 1 / 6) - c

    values = [residual(5 + 0.1 * i) for i in range(301)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_np_third_threshold_and_payoff():
    c2 = solve_np_third_threshold()
    assert abs(c2 - 20.263) < 0.01
    p2 = (c2 - 5) / 30
    assert abs(p2 - 0.509) < 0.005  # the 'about one half' search probability


def test_np_bounds_pipeline():
    bounds = solve_np_bounds()
    assert abs(bounds.third_payoff - 7.63) < 0.02
    assert abs(bounds.info_gain - 4.97) < 0.02
    assert abs(bounds.seq_upper - 25.1) < 0.05
    assert abs(bounds.total_payoff_upper - 10.07) < 0.05
    assert bounds.first_lower == 16.0
    assert abs(bounds.first_upper - 16.50) < 0.01
    assert bounds.seq_lower <= bounds.seq_upper
    assert bounds.first_lower <= bounds.first_upper


def test_threshold_ordering_across_conditions():
    protection = solve_game_protection()
    bounds = solve_np_bounds(protection)
    # NP first < protected threshold <= NP sequential range
    assert bounds.first_lower < bounds.first_upper < protection.C
    assert protection.C <= bounds.seq_lower <= bounds.seq_upper


def test_first_bounds_affine_structure():
    lo, hi = np_first_treasure_bounds(10.07)
    assert lo == 16.0 and abs(hi - 16.5035) < 1e-9
    assert np_first_treasure_bounds(0.0) == (16.0, 16.0)
    l1, h1 = np_first_treasure_bounds(4.0)
    l2, h2 = np_first_treasure_bounds(8.0)
    assert abs((h2 - h1) - 0.05 * 4.0) < 1e-12


# -- abstract model ---------------------------------------------------------------


def test_protected_abstract_closed_form():
    for alpha in (0.25, 0.5, 1.0, 2.0):
        params = default_params(alpha=alpha)
        sol = solve_protected_abstract(params)
        assert sol.x == 1.0
        assert abs(sol.r * 2 * alpha - 21.0) < 1e-12


def test_protected_abstract_blackbox_matches_analytic():
    params = AbstractParams(
        R_r=1.0,
        R_a=1.0,
        n=2,
        cost=lambda y: math.exp(y) - 1 - y,
        cost_prime=lambda y: math.expm1(y),
    )
    sol = solve_protected_abstract(params)
    assert abs(sol.r - math.log(2)) < 1e-9


def test_symmetric_equilibrium_closed_forms():
    for alpha in (0.25, 0.5, 1.0):
        params = default_params(alpha=alpha)
        sol = solve_symmetric_equilibrium(params)
        assert abs(sol.r * 2 * alpha - 17.625) < 1e-10
        # algebraic rearrangement of the exploitation condition as oracle
        n, beta = params.n, params.beta
        x_oracle = (
            (n - 1)
            * params.R_a
            / (n**2 * alpha * beta * (n * sol.r) ** (beta - 1))
        ) ** (1 / beta)
        assert abs(sol.x - x_oracle) < 1e-9


def test_protected_vs_equilibrium_effort_ratio():
    protected = solve_protected_abstract(default_params())
    equilibrium = solve_symmetric_equilibrium(default_params())
    ratio = protected.r / equilibrium.r
    assert abs(ratio - 21.0 / 17.625) < 1e-9
    assert 1.18 < ratio < 1.20  # the ~20% increase from protection


def test_asymptotic_exploitation_rate():
    # n*x approaches (R_a/R_r)^(1/beta); with the printed 26 vs 16.6 that is
    # about 1.25
    target = math.sqrt(26 / 16.6)
    assert abs(target - 1.25) < 0.005
    errors = []
    for n in (50, 200, 1000):
        params = AbstractParams(R_r=16.6, R_a=26.0, n=n, alpha=0.5, beta=2.0)
        sol = solve_symmetric_equilibrium(params)
        errors.append(abs(n * sol.x - target))
    assert errors[-1] < 0.05
    assert errors == sorted(errors, reverse=True)


def test_rate_comparisons_default_params():
    out = rate_comparisons(default_params())
    assert out["more_initial_search_with_protection"]
    assert out["less_exploitation_with_protection"]
    thr_research, thr_exploit = out["thresholds"]
    assert abs(thr_research - 16 / 14) < 1e-12
    assert abs(thr_exploit - 16 / 11) < 1e-12
    # cross-validation: the boolean matches the solved efforts
    assert (out["protected_r"] > out["equilibrium_r"]) == out[
        "more_initial_search_with_protection"
    ]


def test_rate_comparisons_boundary_case():
    params = AbstractParams(R_r=10.0, R_a=10.0, n=2, alpha=1.0, beta=2.0)
    out = rate_comparisons(params)
    assert not out["more_initial_search_with_protection"]  # 1 < 4/2
    assert (out["protected_r"] > out["equilibrium_r"]) == out[
        "more_initial_search_with_protection"
    ]


def test_full_exploitation_check():
    params = default_params()
    sol = solve_symmetric_equilibrium(params)
    assert full_exploitation_check(sol, params)
    assert params.n * sol.x > 1.0
    # barely-more-rewarding application with few players: not fully exploited
    tight = AbstractParams(R_r=10.0, R_a=10.1, n=2, alpha=1.0, beta=2.0)
    assert not full_exploitation_check(solve_symmetric_equilibrium(tight), tight)


# -- utility evaluation ------------------------------------------------------------


def test_gradient_zero_at_protected_optimum():
    params = default_params()
    sol = solve_protected_abstract(params)
    h = 1e-5

    def u(r):
        return evaluate_utility(params, [r], [1.0], 0)

    grad = (u(sol.r + h) - u(sol.r - h)) / (2 * h)
    assert abs(grad) < 1e-6


def test_no_profitable_unilateral_deviation_at_equilibrium():
    params = default_params()
    sol = solve_symmetric_equilibrium(params)
    n = params.n
    base_r = [sol.r] * n
    base_x = [sol.x] * n
    u0 = evaluate_utility(params, base_r, base_x, 0)
    for dr in (-0.1, -0.05, 0.05, 0.1):
        r = list(base_r)
        r[0] = sol.r * (1 + dr)
        assert evaluate_utility(params, r, base_x, 0) <= u0 + 1e-9
    for dx in (-0.1, -0.05, 0.05, 0.1):
        x = list(base_x)
        x[0] = sol.x * (1 + dx)
        assert evaluate_utility(params, base_r, x, 0) <= u0 + 1e-9


def test_zero_profile_zero_utility():
    params = default_params()
    assert evaluate_utility(params, [0.0] * 4, [0.0] * 4, 0) == 0.0


# -- two-stage deterministic game ----------------------------------------------------


def test_two_stage_direct_substitution():
    c1, c2, x = two_stage_deterministic(100.0, 100.0)
    assert (c1, c2, x) == (50.0, 50.0, 12.5)


def test_two_stage_thresholds_always_equal():
    rng = random.Random(4)
    for _ in range(20):
        A = rng.uniform(10, 500)
        R = rng.uniform(1, 2 * A)  # keep R/2 <= A
        c1, c2, x = two_stage_deterministic(R, A)
        assert abs(c1 - c2) < 1e-9
        assert abs(c1 - R / 2) < 1e-9
        assert abs(x - R * R / (8 * A)) < 1e-9


def test_two_stage_quadratic_scaling():
    _, _, x1 = two_stage_deterministic(40.0, 100.0)
    _, _, x2 = two_stage_deterministic(80.0, 100.0)
    assert abs(x2 - 4 * x1) < 1e-12


def test_two_stage_clip_warning():
    with pytest.warns(UserWarning):
        two_stage_deterministic(300.0, 100.0)


# -- plumbing ---------------------------------------------------------------------


def test_bisect_requires_bracket():
    with pytest.raises(BracketingError):
        bisect(lambda v: v * v + 1, -1, 1)


def test_report_shape():
    report = theory_report()
    assert set(report) == {"protection", "no_protection", "abstract"}
    assert abs(report["protection"]["C"] - 20.42) < 0.01
    assert abs(report["no_protection"]["sequential_lower"] - 21.28) < 0.02
