import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, stats

from rayrepair.model import (
    HybridSample,
    HybridScheme,
    PredictionTarget,
    RayleighParams,
    delta,
    delta_star,
    extract_hybrid_sample,
    krecord_pdf,
    rayleigh_cdf,
    rayleigh_pdf,
    rayleigh_quantile,
    sample_krecord,
    simulate_hybrid_sample,
)

P = RayleighParams(0.3, 0.8)


def test_rayleigh_matches_scipy():
    # scipy's scale is sqrt(sigma)
    ref = stats.rayleigh(loc=P.mu, scale=math.sqrt(P.sigma))
    x = np.linspace(0.0, 5.0, 51)
    assert_allclose(rayleigh_pdf(x, P), ref.pdf(x), atol=1e-15)
    assert_allclose(rayleigh_cdf(x, P), ref.cdf(x), atol=1e-15)
    q = np.array([0.01, 0.5, 0.99])
    assert_allclose(rayleigh_quantile(q, P), ref.ppf(q), rtol=1e-14)


def test_rayleigh_quantile_domain():
    with pytest.raises(ValueError):
        rayleigh_quantile(1.0, P)


@pytest.mark.parametrize("m, k", [(1, 1), (3, 1), (2, 3), (4, 2)])
def test_krecord_pdf_normalised(m, k):
    t = PredictionTarget(m, k)
    total, _ = integrate.quad(krecord_pdf, P.mu, np.inf, args=(P, t))
    assert_allclose(total, 1.0, rtol=1e-10)


def test_first_krecord_is_series_minimum():
    # U_{1(k)} is the minimum of k lifetimes: survival (1 - F)^k
    k = 3
    u = np.linspace(0.35, 3.0, 12)
    surv = np.array([integrate.quad(krecord_pdf, z, np.inf, args=(P, PredictionTarget(1, k)))[0] for z in u])
    assert_allclose(surv, (1 - rayleigh_cdf(u, P)) ** k, rtol=1e-9, atol=1e-13)


def test_krecord_density_by_record_recursion():
    # ordinary records (k = 1): f_m(u) = f(u) [-log(1 - F(u))]^(m-1) / (m-1)!
    u = np.linspace(0.4, 4.0, 9)
    for m in (1, 2, 5):
        lam = -np.log1p(-rayleigh_cdf(u, P))
        expected = rayleigh_pdf(u, P) * lam ** (m - 1) / math.factorial(m - 1)
        assert_allclose(krecord_pdf(u, P, PredictionTarget(m, 1)), expected, rtol=1e-12)


def test_sample_krecord_distribution(rng):
    t = PredictionTarget(3, 2)
    draws = sample_krecord(P, t, rng, size=20000)
    # k (U - mu)^2 / (2 sigma) is Gamma(m, 1)
    result = stats.kstest(t.k * (draws - P.mu) ** 2 / (2 * P.sigma), stats.gamma(t.m).cdf)
    assert result.pvalue > 1e-3
    assert isinstance(sample_krecord(P, t, rng), float)


def test_target_validation():
    with pytest.raises(ValueError):
        PredictionTarget(0, 1)
    with pytest.raises(ValueError):
        PredictionTarget(1, 1.5)


def test_scheme_validation():
    with pytest.raises(ValueError):
        HybridScheme(5, 6, 1.0)
    with pytest.raises(ValueError):
        HybridScheme(5, 2, 0.0)


def test_extract_stops_at_rth_failure():
    s = extract_hybrid_sample([5, 1, 3, 2, 4], HybridScheme(5, 3, 10.0))
    assert s.d == 3 and s.t0 == 3.0
    assert_allclose(s.x, [1, 2, 3])


def test_extract_stops_at_time_limit():
    s = extract_hybrid_sample([5, 1, 3, 2, 4], HybridScheme(5, 4, 2.5))
    assert s.d == 2 and s.t0 == 2.5


def test_extract_without_failures():
    s = extract_hybrid_sample([5, 6], HybridScheme(2, 2, 1.0))
    assert s.d == 0 and s.t0 == 1.0


def test_extract_checks_count():
    with pytest.raises(ValueError):
        extract_hybrid_sample([1, 2], HybridScheme(3, 2, 1.0))


def test_bearing_schemes(scheme1, scheme2):
    assert (scheme1.d, scheme1.t0) == (20, 1.0584)
    assert (scheme2.d, scheme2.t0) == (18, 1.0)


def test_sample_validation():
    with pytest.raises(ValueError):
        HybridSample(np.array([2.0, 1.0]), HybridScheme(3, 2, 5.0), 2, 3.0)
    with pytest.raises(ValueError):
        HybridSample(np.array([1.0, 4.0]), HybridScheme(3, 2, 5.0), 2, 3.0)


def test_delta_literal(toy):
    # x = (1, 2), one unit censored at t0 = 2
    assert delta(toy) == 1 + 4 + 4
    assert_allclose(delta_star(0.5, toy), 0.25 + 2.25 + 2.25)
    assert_allclose(delta_star(np.array([0.0, 0.5]), toy), [9.0, 4.75])


def test_delta_star_is_quadratic(scheme2):
    # n (mu - centre)^2 + floor with centre the mean of all n times
    s = scheme2
    mu = np.linspace(-3, 0.1, 7)
    times = np.concatenate([s.x, np.full(s.n - s.d, s.t0)])
    centre = times.mean()
    floor = np.sum((times - centre) ** 2)
    assert_allclose(delta_star(mu, s), s.n * (mu - centre) ** 2 + floor, rtol=1e-13)


def test_scaled_sample(toy):
    s = toy.scaled(2.0, 1.0)
    assert_allclose(s.x, [3.0, 5.0])
    assert s.t0 == 5.0 and s.scheme.T == 6.0


def test_simulated_sample_respects_scheme(rng):
    scheme = HybridScheme(20, 17, 2.0)
    for _ in range(20):
        s = simulate_hybrid_sample(RayleighParams(), scheme, rng)
        assert s.d <= 17 and s.t0 <= 2.0
        assert s.d == 17 or s.t0 == 2.0
