"""RCUs bound for a decoder that treats interference as noise (TIN).

The receiver estimates the number of active users, then decodes that
many codewords one at a time, treating everything else as noise.  The
per-user error term eta(s) is the RCUs tail

    eta(s) = P[ sum_i i_s(x_i; y_i) <= ln((M - Ka) / U) ],  U ~ Unif(0,1),

with x ~ CN(0, Pbar I_n), y = x + w, Pbar = P' / (1 + (Ka-1) P').  The
sum depends on (x, w) only through ||x||^2, Re<x,w>/||x||, and ||w||^2,
so we sample scalar sufficient statistics instead of length-n vectors.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _st

from . import activity, estimator
from .specfun import reg_gamma_upper

__all__ = [
    "EtaSamples",
    "TinResult",
    "draw_eta_samples",
    "eta_mc",
    "eta_normal",
    "eval_tin",
]


@dataclass(frozen=True)
class EtaSamples:
    """Sufficient statistics for evaluating eta(s) at any s on common draws."""
    gx: np.ndarray      # ||x||^2 ~ Gamma(n, Pbar)
    re_alpha: np.ndarray  # Re of the unit-direction noise component
    w2: np.ndarray      # ||w||^2
    thresh: np.ndarray  # ln(M - Ka) + Exp(1)
    n: int
    pbar: float


@dataclass(frozen=True)
class TinResult:
    eps_md: float
    eps_fa: float
    ptilde: float
    s: float
    window: object


def _pbar(ka, p_prime):
    return p_prime / (1 + max(ka - 1, 0) * p_prime)


def draw_eta_samples(ka, n, log_M, p_prime, samples, seed_sequence):
    if ka < 1:
        raise ValueError("eta requires at least one active user")
    rng = np.random.default_rng(seed_sequence)
    pbar = _pbar(ka, p_prime)
    gx = rng.gamma(n, scale=pbar, size=samples)
    alpha = rng.standard_normal(samples) * math.sqrt(0.5)
    w2 = rng.standard_normal(samples) * math.sqrt(0.5)
    abs_alpha2 = alpha**2 + w2**2
    g = rng.gamma(n - 1, scale=1.0, size=samples) if n > 1 else 0.0
    w_norm2 = abs_alpha2 + g
    ln_pop = log_M + (math.log1p(-ka * math.exp(-log_M)) if log_M < 700 else 0.0)
    thresh = ln_pop + rng.exponential(size=samples)
    return EtaSamples(gx=gx, re_alpha=alpha, w2=w_norm2, thresh=thresh, n=n, pbar=pbar)


def eta_of_s(samp, s):
    """Evaluate the eta(s) empirical probability on common random numbers."""
    if s <= 0:
        raise ValueError("s must be positive")
    denom = 1 + s * samp.pbar
    y2 = samp.gx + 2 * np.sqrt(samp.gx) * samp.re_alpha + samp.w2
    info = -s * samp.w2 + s * y2 / denom + samp.n * math.log(denom)
    return float(np.mean(info <= samp.thresh))


def eta_mc(ka, n, log_M, p_prime, s, samples, seed):
    """MC estimate of eta(s); returns (estimate, binomial std error)."""
    samp = draw_eta_samples(ka, n, log_M, p_prime, samples,
                            np.random.SeedSequence(entropy=(seed, ka)))
    est = eta_of_s(samp, s)
    se = math.sqrt(max(est * (1 - est), 1e-300) / samples)
    return est, se


def eta_normal(ka, n, log_M, p_prime, s=1.0):
    """Normal approximation of eta at s = 1 (only); the O(1/sqrt(n))
    remainder is ignored."""
    if s != 1.0:
        raise ValueError("normal approximation is available for s = 1 only")
    if ka < 1:
        raise ValueError("eta requires at least one active user")
    pbar = _pbar(ka, p_prime)
    cap = math.log1p(pbar)
    disp = 2 * p_prime / (1 + ka * p_prime)
    ln_pop = log_M + (math.log1p(-ka * math.exp(-log_M)) if log_M < 700 else 0.0)
    arg = (n * cap - ln_pop) / math.sqrt(n * disp)
    return float(_st.norm.sf(arg))


def _assemble(model, window, p_prime, settings, etas):
    """MD/FA double sums given per-Ka eta values."""
    ctx = estimator.XiContext(
        n=settings.n, p_prime=p_prime, window=window, candidates=settings.xi_candidates
    )
    ks, probs = activity.window_pmf(model, window)
    md = 0.0
    fa = 0.0
    xi_cache = {}
    for ka, prob in zip(ks, probs):
        ka = int(ka)
        eta = etas.get(ka)
        for kap in window.range():
            xi_val = xi_cache.get((ka, kap))
            if xi_val is None:
                xi_val = estimator.xi(settings.estimator, ka, kap, ctx)
                xi_cache[(ka, kap)] = xi_val
            common = min(ka, kap) * min(eta, xi_val) if (eta is not None and min(ka, kap) > 0) else 0.0
            if ka >= 1:
                md += prob / ka * (max(ka - kap, 0) * xi_val + common)
            if kap >= 1:
                fa += prob / kap * (max(kap - ka, 0) * xi_val + common)
    return md, fa


def eval_tin(model, window, p, p_prime, settings, *, s=1.0, mc_samples=100_000):
    """TIN bound; s may be a positive float or "optimize".

    Optimization runs a golden-section search on ln(s), on common random
    numbers, of the assembled max(eps_MD, eps_FA); s = 1 is always
    included as a candidate so optimizing never loses to the default.
    """
    if not 0 < p_prime < p:
        raise ValueError("requires 0 < P' < P")
    pt = activity.ptilde(
        model, window, settings.log_M, settings.n, p, p_prime,
        tail_count=settings.tail_count,
    )
    ks, _ = activity.window_pmf(model, window)
    draws = {
        int(ka): draw_eta_samples(
            int(ka), settings.n, settings.log_M, p_prime, mc_samples,
            np.random.SeedSequence(entropy=(settings.seed, int(ka))),
        )
        for ka in ks
        if ka >= 1
    }

    def bound_at(s_val):
        etas = {ka: eta_of_s(samp, s_val) for ka, samp in draws.items()}
        md, fa = _assemble(model, window, p_prime, settings, etas)
        return md + pt, fa + pt

    if s == "optimize":
        phi = (math.sqrt(5) - 1) / 2
        lo, hi = math.log(0.05), math.log(20.0)
        c = hi - phi * (hi - lo)
        d = lo + phi * (hi - lo)
        fc = max(bound_at(math.exp(c)))
        fd = max(bound_at(math.exp(d)))
        for _ in range(40):
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - phi * (hi - lo)
                fc = max(bound_at(math.exp(c)))
            else:
                lo, c, fc = c, d, fd
                d = lo + phi * (hi - lo)
                fd = max(bound_at(math.exp(d)))
            if hi - lo < 1e-3:
                break
        s_opt = math.exp(c if fc < fd else d)
        if max(bound_at(1.0)) <= min(fc, fd):
            s_opt = 1.0
        s_val = s_opt
    else:
        s_val = float(s)
        if s_val <= 0:
            raise ValueError("s must be positive")
    md, fa = bound_at(s_val)
    return TinResult(
        eps_md=min(1.0, md),
        eps_fa=min(1.0, fa),
        ptilde=pt,
        s=s_val,
        window=window,
    )
