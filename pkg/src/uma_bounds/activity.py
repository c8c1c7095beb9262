"""Distribution of the number of active users Ka, truncation windows,
and the change-of-measure penalty p-tilde.

Supported models: Poisson(mean), deterministic(ka), explicit PMF.
All window-restricted expectations are taken over the truncated support,
matching how the reference curves were generated.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _st

from .specfun import reg_gamma_upper

__all__ = [
    "ActivityModel",
    "TruncationWindow",
    "poisson",
    "deterministic",
    "explicit",
    "pmf",
    "support_upper",
    "mode",
    "truncation_bounds",
    "truncation_bounds_pmf",
    "window_pmf",
    "collision_term",
    "ptilde",
]


@dataclass(frozen=True)
class ActivityModel:
    kind: str  # "poisson" | "deterministic" | "explicit"
    mean: float = 0.0  # poisson only
    ka: int = 0  # deterministic only
    table: tuple = field(default=())  # explicit only: ((k, prob), ...)

    def __post_init__(self):
        if self.kind == "poisson":
            if self.mean <= 0:
                raise ValueError("poisson mean must be positive")
        elif self.kind == "deterministic":
            if self.ka < 0:
                raise ValueError("deterministic ka must be nonnegative")
        elif self.kind == "explicit":
            probs = [p for _, p in self.table]
            if any(p < 0 for p in probs):
                raise ValueError("explicit PMF entries must be nonnegative")
            if sum(probs) > 1 + 1e-12:
                raise ValueError("explicit PMF mass exceeds 1")
        else:
            raise ValueError(f"unknown activity kind {self.kind!r}")


def poisson(mean):
    return ActivityModel(kind="poisson", mean=float(mean))


def deterministic(ka):
    return ActivityModel(kind="deterministic", ka=int(ka))


def explicit(pairs):
    return ActivityModel(kind="explicit", table=tuple((int(k), float(p)) for k, p in pairs))


@dataclass(frozen=True)
class TruncationWindow:
    k_lower: int
    k_upper: int
    tail_mass: float

    def __post_init__(self):
        if self.k_lower > self.k_upper:
            raise ValueError("k_lower must not exceed k_upper")

    def range(self):
        return range(self.k_lower, self.k_upper + 1)


def pmf(model, k):
    """P[Ka = k]; Poisson evaluated in log domain."""
    if k < 0:
        return 0.0
    if model.kind == "poisson":
        return float(np.exp(k * math.log(model.mean) - model.mean - math.lgamma(k + 1)))
    if model.kind == "deterministic":
        return 1.0 if k == model.ka else 0.0
    return sum(p for kk, p in model.table if kk == k)


def support_upper(model):
    """A k beyond which the PMF mass is negligible (< 1e-18 per point)."""
    if model.kind == "poisson":
        mu = model.mean
        return int(mu + 20 * math.sqrt(mu) + 60)
    if model.kind == "deterministic":
        return model.ka
    return max((k for k, _ in model.table), default=0)


def mode(model):
    if model.kind == "poisson":
        return int(model.mean)
    if model.kind == "deterministic":
        return model.ka
    if not model.table:
        raise ValueError("empty explicit PMF")
    return max(model.table, key=lambda kp: kp[1])[0]


def _pmf_vector(model, k_max):
    ks = np.arange(k_max + 1)
    if model.kind == "poisson":
        return _st.poisson.pmf(ks, model.mean)
    vec = np.zeros(k_max + 1)
    if model.kind == "deterministic":
        if model.ka <= k_max:
            vec[model.ka] = 1.0
    else:
        for k, p in model.table:
            if 0 <= k <= k_max:
                vec[k] += p
    return vec


def truncation_bounds(model, threshold):
    """Narrowest window [Kl, Ku] containing the mode with mass >= 1 - threshold.

    Ties in width are broken toward the smallest Kl.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if model.kind == "deterministic":
        return TruncationWindow(model.ka, model.ka, 0.0)
    k_max = support_upper(model)
    vec = _pmf_vector(model, k_max)
    total = vec.sum()
    if total < 1 - threshold - 1e-15:
        raise ValueError("threshold too small for the representable support")
    cum = np.concatenate(([0.0], np.cumsum(vec)))  # cum[i] = sum vec[:i]
    m = mode(model)
    need = 1 - threshold
    for width in range(k_max + 1):
        lo_min = max(0, m - width)
        for kl in range(lo_min, m + 1):
            ku = kl + width
            if ku > k_max or ku < m:
                continue
            mass = cum[ku + 1] - cum[kl]
            if mass >= need:
                return TruncationWindow(kl, ku, float(1 - mass))
    raise ValueError("no window achieves the requested coverage")


def truncation_bounds_pmf(model, pmf_threshold=1e-9):
    """Window of all k whose PMF is at least pmf_threshold.

    This is the truncation rule that reproduces the reference curves:
    the window keeps every individually non-negligible value of Ka.
    """
    if model.kind == "deterministic":
        return TruncationWindow(model.ka, model.ka, 0.0)
    k_max = support_upper(model)
    vec = _pmf_vector(model, k_max)
    keep = np.flatnonzero(vec >= pmf_threshold)
    if keep.size == 0:
        raise ValueError("pmf threshold excludes the whole support")
    kl, ku = int(keep[0]), int(keep[-1])
    mass = float(vec[kl : ku + 1].sum())
    return TruncationWindow(kl, ku, 1 - mass)


def window_pmf(model, window):
    """PMF restricted to the window as (ks, probs) arrays."""
    ks = np.arange(window.k_lower, window.k_upper + 1)
    if model.kind == "poisson":
        probs = _st.poisson.pmf(ks, model.mean)
    else:
        probs = np.array([pmf(model, int(k)) for k in ks])
    return ks, probs


def collision_term(model, window, ln_M):
    """Codeword-collision penalty E[C(Ka,2)]/M over the truncated support."""
    ks, probs = window_pmf(model, window)
    second = float(np.dot(probs, ks.astype(float) ** 2))
    first = float(np.dot(probs, ks.astype(float)))
    return (second - first) / 2 * math.exp(-ln_M)


def ptilde(model, window, ln_M, n, P, Pprime, *, tail_count=1):
    """Change-of-measure penalty: truncation tail + collisions + power violation.

    tail_count=2 evaluates the theorem's "2 - sum P - E[...]" literally with
    the expectation also truncated, which counts the tail twice; the reference
    curves were generated that way (see eval_floors).
    """
    if Pprime >= P:
        raise ValueError("requires P' < P")
    ks, probs = window_pmf(model, window)
    mean_ka = float(np.dot(probs, ks.astype(float)))
    power = mean_ka * reg_gamma_upper(n, n * P / Pprime)
    val = tail_count * window.tail_mass + collision_term(model, window, ln_M) + power
    return min(1.0, max(0.0, val))
