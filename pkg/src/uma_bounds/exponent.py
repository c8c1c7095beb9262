"""Error-exponent branch of the main bound: index sets over the
misdetection/false-alarm counts (t, t'), rate terms R1/R2, the inner
maximization over lambda (closed-form cubic), the outer (rho, rho1)
maximization, and the resulting terms p_{t,t'} and p_t.

The inner objective for fixed (rho, rho1) is

    f(lambda) = rho1 * a(lambda) + ln(1 - rho1 * P2 * b(lambda)),

whose stationary points are the roots of a cubic; we evaluate the
objective at every feasible real root (plus lambda = 0, which is always
feasible and gives f = 0) and keep the best.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _opt

from .specfun import log_binomial

__all__ = [
    "CellParams",
    "ExponentCell",
    "index_sets",
    "rate_terms",
    "lambda_star",
    "e0",
    "exponent_E",
    "p_term_tt",
    "p_term_t",
    "quick_bound_tt",
]

_HUGE_M = 10**305  # sentinel for populations too large for a float


def _m_int(log_M):
    if log_M > 700:
        return _HUGE_M
    return int(round(math.exp(log_M)))


@dataclass(frozen=True)
class CellParams:
    ka: int
    ka_prime_low: int
    ka_prime_high: int
    t: int
    t_prime: int
    n: int
    log_M: float
    p_prime: float

    def __post_init__(self):
        if self.ka_prime_low > self.ka_prime_high:
            raise ValueError("ka_prime_low must not exceed ka_prime_high")

    @property
    def t0(self):
        return max(self.ka - self.ka_prime_high, 0)

    @property
    def f0(self):
        return max(self.ka_prime_low - self.ka, 0)

    @property
    def p2(self):
        return 1 + (self.t0 + self.f0) * self.p_prime


@dataclass(frozen=True)
class ExponentCell:
    p2: float
    p3: float
    r1: float
    r2: float
    lambda_opt: float
    rho_opt: float
    rho1_opt: float
    exponent: float
    a: float
    b: float
    mu: float


def index_sets(ka, ka_prime_low, ka_prime_high, log_M):
    """Index sets (T, t -> T_t, t -> Tbar_t) for one (Ka, Ka') cell.

    T enumerates additional-MD counts; Tbar_t the FA counts entering p_t
    and q_t; T_t the FA counts entering the FA sum.  Empty ranges are
    returned as empty ranges.
    """
    if ka_prime_low > ka_prime_high:
        raise ValueError("ka_prime_low must not exceed ka_prime_high")
    M = _m_int(log_M)
    t0 = max(ka - ka_prime_high, 0)
    f0 = max(ka_prime_low - ka, 0)
    t_max = min(ka_prime_high, ka, M - ka_prime_low - t0)
    T = range(0, t_max + 1) if t_max >= 0 else range(0)

    def u_t(t):
        return min(
            max(ka_prime_high - ka, 0) - f0 + t,
            ka_prime_high - f0,
            M - max(ka_prime_low, ka),
        )

    def tbar_t(t):
        lo = max(t0 - max(ka - ka_prime_low, 0) + t, 0)
        hi = u_t(t)
        return range(lo, hi + 1) if lo <= hi else range(0)

    def t_t(t):
        lo = max(t0 - f0 + max(ka_prime_low, 1) - ka + t, 0)
        hi = u_t(t)
        return range(lo, hi + 1) if lo <= hi else range(0)

    return T, t_t, tbar_t


def rate_terms(cell):
    """(R1, R2): FA-codeword and MD-subset rate terms.

    R1 uses the numerically stable upper bound on ln C(M - max, t');
    R2 is exact.  The t' = 0 case returns r1 = 0 (the term enters only
    as t' * R1).
    """
    n = cell.n
    big = max(cell.ka, cell.ka_prime_low)
    if cell.t_prime == 0:
        r1 = 0.0
    else:
        # ln(M - big) = ln M + ln(1 - big/M); the correction underflows for M = 2^128
        corr = math.log1p(-big * math.exp(-cell.log_M)) if cell.log_M < 700 else 0.0
        ln_pop = cell.log_M + corr
        r1 = ln_pop / n - math.lgamma(cell.t_prime + 1) / (n * cell.t_prime)
    small = min(cell.ka, cell.ka_prime_high)
    ln_c, _ = log_binomial(small, cell.t)
    r2 = ln_c / n
    return r1, r2


def _objective_at(lam, rho, rho1, t, t_prime, Pp, P2):
    """Inner objective f(lambda); -inf when infeasible.  Vectorized."""
    lam = np.asarray(lam, dtype=float)
    denom1 = 1 + Pp * t_prime * lam
    mu = rho * lam / denom1
    a = rho * np.log(denom1) + np.log1p(Pp * t * mu)
    b = rho * lam - mu / (1 + Pp * t * mu)
    arg = 1 - rho1 * P2 * b
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(
            (lam >= 0) & (denom1 > 0) & (arg > 0),
            rho1 * a + np.log(np.where(arg > 0, arg, 1.0)),
            -np.inf,
        )
    return val, a, b, mu


def _cubic_roots_grid(rho, rho1, t, t_prime, Pp, P2):
    """Real roots of the stationarity cubic, vectorized over (rho, rho1).

    Returns an array (..., 3) padded with NaN where fewer roots exist.
    Degenerate leading coefficients fall back to quadratic/linear roots.
    """
    P3 = (t_prime + rho * t) * Pp
    rr = rho * rho1
    c1 = Pp * rr * t_prime * (rr + 1) * P2 * P3**2
    c2 = Pp * rr * P3 * (
        P2 * rr * (t + t_prime) + P2 * (rho * t + 3 * t_prime) - t_prime * P3
    )
    c3 = rr * P3 * (2 * P2 - Pp * (t + 2 * t_prime))
    c4 = -Pp * rr * (t + t_prime)

    shape = np.broadcast(c1, c2, c3, c4).shape
    c1, c2, c3, c4 = (np.broadcast_to(c, shape).astype(float) for c in (c1, c2, c3, c4))
    roots = np.full(shape + (3,), np.nan)

    tiny = 1e-300
    cubic = np.abs(c1) > tiny
    if np.any(cubic):
        a = np.where(cubic, c2 / np.where(cubic, c1, 1.0), 0.0)
        b = np.where(cubic, c3 / np.where(cubic, c1, 1.0), 0.0)
        c = np.where(cubic, c4 / np.where(cubic, c1, 1.0), 0.0)
        Q = (a * a - 3 * b) / 9
        R = (2 * a**3 - 9 * a * b + 27 * c) / 54
        disc = R * R - Q**3
        three = cubic & (disc < 0)
        if np.any(three):
            with np.errstate(invalid="ignore"):
                sqQ = np.sqrt(np.where(Q > 0, Q, np.nan))
                theta = np.arccos(np.clip(R / np.where(Q > 0, sqQ**3, np.nan), -1, 1))
            for i, off in enumerate((0.0, 2 * math.pi, -2 * math.pi)):
                r = -2 * sqQ * np.cos((theta + off) / 3) - a / 3
                roots[..., i] = np.where(three, r, roots[..., i])
        one = cubic & (disc >= 0)
        if np.any(one):
            with np.errstate(invalid="ignore"):
                A = -np.sign(R) * np.cbrt(np.abs(R) + np.sqrt(np.where(disc >= 0, disc, 0.0)))
            B = np.where(np.abs(A) > tiny, Q / np.where(np.abs(A) > tiny, A, 1.0), 0.0)
            r = A + B - a / 3
            roots[..., 0] = np.where(one, r, roots[..., 0])

    quad = (~cubic) & (np.abs(c2) > tiny)
    if np.any(quad):
        disc = c3 * c3 - 4 * c2 * c4
        ok = quad & (disc >= 0)
        with np.errstate(invalid="ignore"):
            sq = np.sqrt(np.where(disc >= 0, disc, 0.0))
        r1 = (-c3 + sq) / (2 * np.where(quad, c2, 1.0))
        r2 = (-c3 - sq) / (2 * np.where(quad, c2, 1.0))
        roots[..., 0] = np.where(ok, r1, roots[..., 0])
        roots[..., 1] = np.where(ok, r2, roots[..., 1])

    lin = (~cubic) & (~quad) & (np.abs(c3) > tiny)
    if np.any(lin):
        roots[..., 0] = np.where(lin, -c4 / np.where(lin, c3, 1.0), roots[..., 0])

    return roots


def _best_lambda(rho, rho1, t, t_prime, Pp, P2):
    """Best feasible lambda and objective value, vectorized over the grid."""
    roots = _cubic_roots_grid(rho, rho1, t, t_prime, Pp, P2)
    shape = roots.shape[:-1]
    best_val = np.zeros(shape)  # lambda = 0 gives objective 0, always feasible
    best_lam = np.zeros(shape)
    for i in range(roots.shape[-1]):
        lam = roots[..., i]
        with np.errstate(invalid="ignore"):
            ok = np.isfinite(lam) & (lam > 0)
        lam = np.where(ok, lam, 0.0)
        val, _, _, _ = _objective_at(lam, rho, rho1, t, t_prime, Pp, P2)
        val = np.where(ok, val, -np.inf)
        take = val > best_val
        best_val = np.where(take, val, best_val)
        best_lam = np.where(take, lam, best_lam)
    return best_lam, best_val


def lambda_star(rho, rho1, t, t_prime, p_prime, p2):
    """Optimal lambda of the inner maximization for scalar (rho, rho1).

    Evaluates every feasible real root of the stationarity cubic plus
    lambda = 0 and returns the argmax; falls back to a bounded
    golden-section search if the analytic candidates all tie at zero
    but the objective is improvable.
    """
    if t == 0 and t_prime == 0:
        return 0.0
    lam, val = _best_lambda(
        np.asarray(rho, float), np.asarray(rho1, float), t, t_prime, p_prime, p2
    )
    lam, val = float(lam), float(val)
    if val > 0:
        return lam
    # fallback: coarse log-spaced scan + golden section around the best point
    grid = np.concatenate(([0.0], np.logspace(-8, 4, 60)))
    vals, _, _, _ = _objective_at(grid, rho, rho1, t, t_prime, p_prime, p2)
    j = int(np.argmax(vals))
    if vals[j] <= 0:
        return 0.0
    lo = grid[max(j - 1, 0)]
    hi = grid[min(j + 1, len(grid) - 1)]
    res = _opt.minimize_scalar(
        lambda x: -float(_objective_at(x, rho, rho1, t, t_prime, p_prime, p2)[0]),
        bounds=(lo, hi),
        method="bounded",
    )
    return float(res.x)


def e0(rho, rho1, cell):
    """Inner maximum E0(rho, rho1) = max_lambda rho1*a + ln(1 - rho1*P2*b)."""
    lam = lambda_star(rho, rho1, cell.t, cell.t_prime, cell.p_prime, cell.p2)
    val, _, _, _ = _objective_at(lam, rho, rho1, cell.t, cell.t_prime, cell.p_prime, cell.p2)
    return max(float(val), 0.0)


def _grid_stage(lo_r, hi_r, lo_r1, hi_r1, m, t, tp, Pp, P2, r1, r2):
    rho = np.linspace(lo_r, hi_r, m)[:, None]
    rho1 = np.linspace(lo_r1, hi_r1, m)[None, :]
    _, e0_g = _best_lambda(rho, rho1, t, tp, Pp, P2)
    total = -rho * rho1 * tp * r1 - rho1 * r2 + np.maximum(e0_g, 0.0)
    flat = int(np.argmax(total))
    i, j = divmod(flat, m)
    return float(total[i, j]), float(rho[i, 0]), float(rho1[0, j])


def exponent_E(cell, grid=33, refine=True):
    """E(t,t') = max over (rho, rho1) in [0,1]^2 of the exponent objective.

    Dense grid followed by vectorized zoom stages around the argmax
    (the surface is smooth and unimodal in practice, and the maximum is
    flat, so a ~1e-4 grid resolution suffices).
    """
    r1, r2 = rate_terms(cell)
    t, tp, Pp, P2 = cell.t, cell.t_prime, cell.p_prime, cell.p2
    n = cell.n

    if t == 0 and tp == 0:
        return ExponentCell(P2, 0.0, r1, r2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    best = _grid_stage(0.0, 1.0, 0.0, 1.0, grid, t, tp, Pp, P2, r1, r2)
    if refine:
        h = 1.0 / (grid - 1)
        for _ in range(3):
            _, ro, r1o = best
            cand = _grid_stage(
                max(ro - h, 0.0), min(ro + h, 1.0),
                max(r1o - h, 0.0), min(r1o + h, 1.0),
                9, t, tp, Pp, P2, r1, r2,
            )
            if cand[0] > best[0]:
                best = cand
            h /= 4.0

    E, rho_o, rho1_o = best
    lam_o = lambda_star(rho_o, rho1_o, t, tp, Pp, P2)
    _, a_o, b_o, mu_o = _objective_at(lam_o, rho_o, rho1_o, t, tp, Pp, P2)
    p3 = (tp + rho_o * t) * Pp
    return ExponentCell(
        P2, p3, r1, r2, lam_o, rho_o, rho1_o, E,
        float(a_o), float(b_o), float(mu_o),
    )


def p_term_tt(exponent, n):
    """p_{t,t'} = min(1, e^{-n E(t,t')})."""
    return min(1.0, math.exp(-n * exponent))


def p_term_t(exponents, n):
    """p_t = min(1, sum of p_{t,t'} over Tbar_t)."""
    return min(1.0, sum(p_term_tt(E, n) for E in exponents))


def quick_bound_tt(cell):
    """Cheap upper bound on p_{t,t'} (rho = rho1 = 1, lambda = 1/(2 P2)).

    Used for pruning: any cell whose quick bound is already negligible
    cannot matter, and the quick bound itself is a valid contribution.
    """
    big = max(cell.ka, cell.ka_prime_low)
    small = min(cell.ka, cell.ka_prime_high)
    corr = math.log1p(-big * math.exp(-cell.log_M)) if cell.log_M < 700 else 0.0
    ln_c1, _ = log_binomial(k=cell.t_prime, ln_N=cell.log_M + corr)
    ln_c2, _ = log_binomial(small, cell.t)
    ln_p = ln_c1 + ln_c2 - cell.n * math.log1p(
        (cell.t + cell.t_prime) * cell.p_prime / (4 * cell.p2)
    )
    return min(1.0, math.exp(min(ln_p, 0.0)))
