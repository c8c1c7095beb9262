"""Outer optimization: minimum Eb/N0 meeting MD/FA targets, and grids
over the power-backoff ratio P'/P and the decoding radii.

Bisection operates on the feasibility predicate max{eps_MD <= target,
eps_FA <= target} at a fixed P'/P ratio, where the clamped bound is
monotone in P (up to MC noise, which is frozen by per-cell seeding).
"""

import math
from dataclasses import dataclass, replace

from . import activity, bound_core, sa_mpr, tin

__all__ = [
    "Targets",
    "TargetBelowFloor",
    "InfeasibleBracket",
    "DEFAULT_RATIOS",
    "required_ebn0",
    "optimize_pprime",
    "optimize_radius",
]

DEFAULT_RATIOS = (0.999, 0.99, 0.95, 0.9)


@dataclass(frozen=True)
class Targets:
    eps_md_max: float
    eps_fa_max: float

    def __post_init__(self):
        for v in (self.eps_md_max, self.eps_fa_max):
            if not 0 < v < 1:
                raise ValueError("targets must lie in (0, 1)")

    def met_by(self, eps_md, eps_fa):
        return eps_md <= self.eps_md_max and eps_fa <= self.eps_fa_max


class TargetBelowFloor(RuntimeError):
    """Raised when the asymptotic error floor already exceeds a target."""

    def __init__(self, message, floors=None):
        super().__init__(message)
        self.floors = floors


class InfeasibleBracket(RuntimeError):
    """Raised when the bound misses the targets at the bracket upper end."""


def _window_for(model, pmf_threshold=1e-9):
    return activity.truncation_bounds_pmf(model, pmf_threshold)


def _evaluate(evaluator, model, k_bits, db, ratio, settings, *, slotted=None,
              tin_s="optimize", window=None):
    p = bound_core.ebn0_db_to_power(db, k_bits, settings.n)
    pp = ratio * p
    if evaluator == "theorem1":
        w = window or _window_for(model)
        res = bound_core.eval_theorem1(model, w, p, pp, settings)
        return res.eps_md, res.eps_fa
    if evaluator == "corollary1":
        if model.kind != "deterministic":
            raise ValueError("corollary1 requires a deterministic activity model")
        res = bound_core.eval_corollary1(model.ka, p, pp, settings)
        return res.eps_md, res.eps_fa
    if evaluator == "tin":
        w = window or _window_for(model)
        res = tin.eval_tin(model, w, p, pp, settings, s=tin_s)
        return res.eps_md, res.eps_fa
    if evaluator == "sa_mpr":
        if slotted is None:
            raise ValueError("sa_mpr evaluator needs a SlottedConfig")
        res = sa_mpr.eval_sa_mpr(model, k_bits, p, ratio, settings, slotted)
        return res.eps_md, res.eps_fa
    raise ValueError(f"unknown evaluator {evaluator!r}")


def _check_floors(evaluator, model, targets, settings):
    """Raise TargetBelowFloor if no power can ever reach the targets."""
    if evaluator not in ("theorem1", "tin", "sa_mpr"):
        return
    w = _window_for(model)
    overrides = {"xi_candidates": "true-ka"}
    if evaluator == "tin":
        overrides.update(radius_lower=0, radius_upper=0)
    fl = bound_core.eval_floors(model, w, replace(settings, **overrides))
    if fl.eps_md > targets.eps_md_max or fl.eps_fa > targets.eps_fa_max:
        raise TargetBelowFloor(
            "target below error floor: "
            f"floor_md={fl.eps_md:.3e}, floor_fa={fl.eps_fa:.3e}",
            floors=fl,
        )


def required_ebn0(evaluator, model, k_bits, targets, settings, *,
                  p_prime_ratios=DEFAULT_RATIOS, bracket=(-2.0, 20.0),
                  tol_db=0.05, slotted=None, tin_s="optimize"):
    """Smallest Eb/N0 (dB, on the bisection grid) meeting both targets.

    Tries every P'/P ratio and keeps the best; ratios whose power-violation
    penalty alone exceeds the targets are screened out analytically.
    """
    if evaluator == "sa_mpr":
        if slotted is None:
            raise ValueError("sa_mpr evaluator needs a SlottedConfig")
        log_M_slot, n_slot, _ = sa_mpr.slot_parameters(
            k_bits, settings.n, 1.0, slotted)
        pen_model = sa_mpr.per_slot_pmf(model, slotted.slots)
        pen_n, pen_log_M = n_slot, log_M_slot
        _check_floors(
            evaluator, pen_model, targets,
            replace(settings, n=n_slot, log_M=log_M_slot),
        )
    else:
        pen_n, pen_model, pen_log_M = settings.n, model, settings.log_M
        _check_floors(evaluator, model, targets, settings)

    lo0, hi0 = bracket
    target_min = min(targets.eps_md_max, targets.eps_fa_max)
    best = None
    for ratio in p_prime_ratios:
        if not 0 < ratio < 1:
            raise ValueError("P'/P ratios must lie in (0, 1)")
        # ratio-only screen: the power-violation part of p-tilde depends on
        # P and P' only through their ratio and already lower-bounds both eps
        w = _window_for(pen_model)
        penalty = activity.ptilde(
            pen_model, w, pen_log_M, pen_n, 1.0, ratio,
            tail_count=settings.tail_count,
        )
        if penalty > target_min:
            continue

        lo, hi = lo0, hi0
        md, fa = _evaluate(evaluator, model, k_bits, hi, ratio, settings,
                           slotted=slotted, tin_s=tin_s)
        if not targets.met_by(md, fa):
            continue
        while hi - lo > tol_db:
            mid = 0.5 * (lo + hi)
            if best is not None and mid >= best:
                hi = mid  # cannot beat the incumbent above it
                continue
            md, fa = _evaluate(evaluator, model, k_bits, mid, ratio, settings,
                               slotted=slotted, tin_s=tin_s)
            if targets.met_by(md, fa):
                hi = mid
            else:
                lo = mid
        if best is None or hi < best:
            best = hi
    if best is None:
        raise InfeasibleBracket(
            f"infeasible bracket: targets not met at {hi0:.2f} dB for any ratio"
        )
    return best


def optimize_pprime(evaluator, model, k_bits, db, settings, *,
                    ratio_grid=DEFAULT_RATIOS, slotted=None, tin_s="optimize"):
    """Best P'/P ratio at fixed Eb/N0, lexicographic on (max eps, sum eps)."""
    if not ratio_grid:
        raise ValueError("ratio grid must be nonempty")
    best = None
    for ratio in ratio_grid:
        if not 0 < ratio < 1:
            raise ValueError("P'/P ratios must lie in (0, 1)")
        md, fa = _evaluate(evaluator, model, k_bits, db, ratio, settings,
                           slotted=slotted, tin_s=tin_s)
        key = (max(md, fa), md + fa)
        if best is None or key < best[0]:
            best = (key, ratio, (md, fa))
    return best[1], best[2]


def optimize_radius(evaluator, model, k_bits, targets, settings, radius_grid, *,
                    p_prime_ratios=(0.95,), bracket=(-2.0, 20.0), slotted=None):
    """Radius pair minimizing required Eb/N0; infeasible pairs are skipped.

    Ties break toward the smaller pair (sorted order).
    """
    if not radius_grid:
        raise ValueError("radius grid must be nonempty")
    best = None
    for rl, ru in sorted(radius_grid):
        s = replace(settings, radius_lower=int(rl), radius_upper=int(ru))
        try:
            db = required_ebn0(evaluator, model, k_bits, targets, s,
                               p_prime_ratios=p_prime_ratios, bracket=bracket,
                               slotted=slotted)
        except (TargetBelowFloor, InfeasibleBracket):
            continue
        if best is None or db < best[1] - 1e-12:
            best = ((int(rl), int(ru)), db)
    if best is None:
        raise TargetBelowFloor("no radius pair in the grid meets the targets")
    return best
