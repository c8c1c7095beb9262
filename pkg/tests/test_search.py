"""Required-Eb/N0 search: floor guard, bisection consistency, ratio and
radius grids."""

import math
from dataclasses import replace

import pytest

from uma_bounds import activity, bound_core, search
from uma_bounds.bound_core import BoundSettings

SMALL = BoundSettings(n=400, log_M=10 * math.log(2), mc_samples=2000, seed=6)
MODEL = activity.poisson(3.0)


def test_targets_validation():
    with pytest.raises(ValueError):
        search.Targets(0.0, 0.1)
    with pytest.raises(ValueError):
        search.Targets(0.1, 1.0)
    t = search.Targets(0.1, 0.2)
    assert t.met_by(0.1, 0.2) and not t.met_by(0.11, 0.1)


def test_target_below_floor_raises():
    # with a wide window but zero radius the floor is far above 1e-12
    tg = search.Targets(1e-12, 1e-12)
    with pytest.raises(search.TargetBelowFloor) as exc:
        search.required_ebn0("theorem1", MODEL, 10, tg, SMALL,
                             p_prime_ratios=(0.9,))
    assert exc.value.floors is not None


def test_required_ebn0_meets_targets_and_is_tight():
    tg = search.Targets(0.08, 0.08)
    db = search.required_ebn0("theorem1", MODEL, 10, tg, SMALL,
                              p_prime_ratios=(0.9,), bracket=(-2.0, 12.0),
                              tol_db=0.1)
    w = activity.truncation_bounds_pmf(MODEL)
    p = bound_core.ebn0_db_to_power(db, 10, SMALL.n)
    res = bound_core.eval_theorem1(MODEL, w, p, 0.9 * p, SMALL)
    assert tg.met_by(res.eps_md, res.eps_fa)
    # half a dB below the reported point the targets must fail
    p_lo = bound_core.ebn0_db_to_power(db - 0.5, 10, SMALL.n)
    res_lo = bound_core.eval_theorem1(MODEL, w, p_lo, 0.9 * p_lo, SMALL)
    assert not tg.met_by(res_lo.eps_md, res_lo.eps_fa)


def test_required_ebn0_monotone_in_target():
    tight = search.required_ebn0("theorem1", MODEL, 10, search.Targets(0.06, 0.06),
                                 SMALL, p_prime_ratios=(0.9,), tol_db=0.1)
    loose = search.required_ebn0("theorem1", MODEL, 10, search.Targets(0.3, 0.3),
                                 SMALL, p_prime_ratios=(0.9,), tol_db=0.1)
    assert loose <= tight + 1e-9


def test_more_ratios_never_hurt():
    tg = search.Targets(0.08, 0.08)
    one = search.required_ebn0("theorem1", MODEL, 10, tg, SMALL,
                               p_prime_ratios=(0.9,), tol_db=0.1)
    two = search.required_ebn0("theorem1", MODEL, 10, tg, SMALL,
                               p_prime_ratios=(0.95, 0.9), tol_db=0.1)
    assert two <= one + 1e-9


def test_infeasible_bracket():
    tg = search.Targets(0.08, 0.08)
    with pytest.raises(search.InfeasibleBracket):
        search.required_ebn0("theorem1", MODEL, 10, tg, SMALL,
                             p_prime_ratios=(0.9,), bracket=(-10.0, -8.0))


def test_ratio_validation():
    tg = search.Targets(0.08, 0.08)
    with pytest.raises(ValueError):
        search.required_ebn0("theorem1", MODEL, 10, tg, SMALL,
                             p_prime_ratios=(1.0,))


def test_corollary_evaluator_requires_deterministic():
    tg = search.Targets(0.08, 0.08)
    with pytest.raises(ValueError):
        search._evaluate("corollary1", MODEL, 10, 5.0, 0.9, SMALL)
    det = activity.deterministic(3)
    md, fa = search._evaluate("corollary1", det, 10, 5.0, 0.9, SMALL)
    assert md == fa


def test_optimize_pprime_picks_feasible_ratio():
    ratio, (md, fa) = search.optimize_pprime(
        "theorem1", MODEL, 10, 6.0, SMALL, ratio_grid=(0.99, 0.9)
    )
    assert ratio in (0.99, 0.9)
    # the winner must dominate the loser lexicographically
    other = 0.9 if ratio == 0.99 else 0.99
    md2, fa2 = search._evaluate("theorem1", MODEL, 10, 6.0, other, SMALL)
    assert (max(md, fa), md + fa) <= (max(md2, fa2), md2 + fa2)


def test_optimize_radius_skips_infeasible_and_breaks_ties_small():
    tg = search.Targets(0.08, 0.08)
    (rl, ru), db = search.optimize_radius(
        "theorem1", MODEL, 10, tg, SMALL, [(0, 0), (1, 1)],
        p_prime_ratios=(0.9,), bracket=(-2.0, 12.0),
    )
    assert (rl, ru) in ((0, 0), (1, 1))
    assert db <= 12.0
    with pytest.raises(search.TargetBelowFloor):
        search.optimize_radius(
            "theorem1", MODEL, 10, search.Targets(1e-12, 1e-12), SMALL, [(0, 0)],
            p_prime_ratios=(0.9,),
        )
