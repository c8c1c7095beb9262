"""Monte-Carlo q-term: fast sufficient-statistic sampler vs the explicit
vector sampler, threshold optimization, and validity of the bound."""

import math

import numpy as np
import pytest
from scipy import stats as st

from uma_bounds import dt_mc


def test_q_eligible_rule():
    assert dt_mc.q_eligible(0, 10)
    assert dt_mc.q_eligible(1, 50)
    assert not dt_mc.q_eligible(2, 10)
    assert not dt_mc.q_eligible(1, 51)
    assert dt_mc.q_eligible(2, 10, t_max=3)


def test_degenerate_cell_is_zero():
    # no misdetections, no forced counts: I_t is identically zero
    s = dt_mc.sample_info_density_min(
        5, 3, 7, 0, 50, 0.1, 100, np.random.SeedSequence(0)
    )
    assert np.all(s == 0.0)


def test_t_out_of_range():
    with pytest.raises(ValueError):
        dt_mc.sample_info_density_min(5, 3, 7, 6, 50, 0.1, 10, np.random.SeedSequence(0))


def test_t0_only_matches_gamma_law():
    # t = 0 with forced misdetections: I = n ln(kappa) + S/kappa - S with
    # S ~ Gamma(n, 1 + t0 P'); check mean against the closed form
    n, pp, ka, ku = 200, 0.05, 12, 10
    t0 = ka - ku
    kappa = 1 + t0 * pp
    s = dt_mc.sample_info_density_min(
        ka, 8, ku, 0, n, pp, 50_000, np.random.SeedSequence(3)
    )
    mean_ref = n * math.log(kappa) + n * (1 + t0 * pp) * (1 / kappa - 1)
    assert np.mean(s) == pytest.approx(mean_ref, abs=4 * np.std(s) / math.sqrt(50_000))


@pytest.mark.parametrize("t,f0_case", [(1, False), (1, True), (2, False)])
def test_fast_and_explicit_samplers_agree(t, f0_case):
    # same distribution from the two independent sampling routes
    ka, n, pp = 6, 40, 0.3
    kl, ku = (8, 9) if f0_case else (4, 7)
    a = dt_mc.sample_info_density_min(
        ka, kl, ku, t, n, pp, 4000, np.random.SeedSequence(11)
    )
    rng = np.random.default_rng(np.random.SeedSequence(12))
    t0 = max(ka - ku, 0)
    f0 = max(kl - ka, 0)
    b = dt_mc._sample_explicit(ka, t0, f0, t, n, pp, 4000, rng, dt_mc.SUBSET_CAP)
    # two-sample KS at a loose level; independent seeds
    ks = st.ks_2samp(a, b)
    assert ks.pvalue > 1e-3


def test_q_term_is_valid_bound_on_synthetic_law():
    # samples from a known law: q must upper bound the true optimized
    # objective inf_gamma F(gamma) + C e^{-gamma} with high probability
    rng = np.random.default_rng(5)
    n_samp = 20_000
    samples = rng.normal(10.0, 2.0, n_samp)
    ln_c = 8.0
    res = dt_mc.q_term(samples, ln_c)
    gammas = np.linspace(0.0, 25.0, 2001)
    true_obj = st.norm.cdf(gammas, 10.0, 2.0) + np.exp(ln_c - gammas)
    assert res.q >= float(true_obj.min()) - 0.01
    # and it should not be wildly loose either
    assert res.q <= float(true_obj.min()) + 0.05
    assert res.cdf_upper >= res.cdf_hat
    assert 0.0 <= res.q <= 1.0 or res.q <= 1.0


def test_q_term_monotone_in_constant():
    rng = np.random.default_rng(9)
    samples = rng.normal(5.0, 1.0, 5000)
    q_small = dt_mc.q_term(samples, 1.0).q
    q_big = dt_mc.q_term(samples, 4.0).q
    assert q_big >= q_small


def test_q_term_handles_ties():
    samples = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 3.0])
    res = dt_mc.q_term(samples, -50.0)
    # with a negligible exponential term the best gamma sits at the lowest
    # distinct value, where the strict-below count is zero
    assert res.cdf_hat == 0.0
    assert res.gamma == 1.0


def test_determinism_per_seed():
    a = dt_mc.sample_info_density_min(
        10, 8, 12, 1, 100, 0.2, 1000, np.random.SeedSequence((7, 1, 2))
    )
    b = dt_mc.sample_info_density_min(
        10, 8, 12, 1, 100, 0.2, 1000, np.random.SeedSequence((7, 1, 2))
    )
    assert np.array_equal(a, b)


def test_sample_cap_enforced():
    s = dt_mc.sample_info_density_min(
        4, 2, 6, 0, 30, 0.1, 10**9, np.random.SeedSequence(1)
    )
    assert s.size == dt_mc.SAMPLE_CAP
