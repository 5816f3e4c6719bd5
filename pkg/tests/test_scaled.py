import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, optimize

from rayrepair.exceptions import ImproperPosteriorError
from rayrepair.model import HybridSample, HybridScheme, PredictionTarget, RayleighParams, krecord_pdf
from rayrepair.scaled import (
    PredictionInterval,
    p_k,
    scaled_equitailed_pi,
    scaled_hpd_pi,
    scaled_point_predictions,
    scaled_posterior,
    scaled_predictive_pdf,
    scaled_predictive_survival,
)

TARGETS = [PredictionTarget(1, 1), PredictionTarget(3, 2), PredictionTarget(4, 3)]


def mixture_pdf(u, s, t):
    """Literal oracle: k-record density averaged over the inverted-gamma posterior."""
    post = scaled_posterior(s)
    f = lambda sig: krecord_pdf(u, RayleighParams(0.0, sig), t) * post.pdf(sig)
    return integrate.quad(f, 0, np.inf, limit=200, epsabs=1e-13, epsrel=1e-11)[0]


def test_posterior_is_inverted_gamma(scheme1):
    post = scaled_posterior(scheme1)
    total, _ = integrate.quad(post.pdf, 0, np.inf)
    assert_allclose(total, 1.0, rtol=1e-10)
    mean, _ = integrate.quad(lambda s: s * post.pdf(s), 0, np.inf)
    assert_allclose(post.mean(), mean, rtol=1e-9)


@pytest.mark.parametrize("t", TARGETS)
def test_predictive_pdf_matches_mixture(scheme2, t):
    for u in (0.1, 0.6, 1.3):
        assert_allclose(scaled_predictive_pdf(u, scheme2, t), mixture_pdf(u, scheme2, t), rtol=1e-8)


@pytest.mark.parametrize("t", TARGETS)
def test_survival_is_tail_of_pdf(scheme2, t):
    for z in (0.0, 0.4, 1.1):
        tail, _ = integrate.quad(scaled_predictive_pdf, z, np.inf, args=(scheme2, t), epsabs=1e-13)
        assert_allclose(scaled_predictive_survival(z, scheme2, t), tail, rtol=1e-9, atol=1e-13)


def test_pk_literal(toy):
    assert_allclose(p_k(1.5, toy, 2), 9 / (9 + 2 * 2.25))


@pytest.mark.parametrize("t", TARGETS)
def test_equitailed_defining_equations(scheme1, t):
    pi = scaled_equitailed_pi(scheme1, t, 0.1)
    assert_allclose(scaled_predictive_survival([pi.lower, pi.upper], scheme1, t), [0.95, 0.05], atol=1e-12)
    assert pi.level == 0.9 and pi.kind == "equi-tailed"


@pytest.mark.parametrize("t", TARGETS)
def test_hpd_defining_equations(scheme1, t):
    pi = scaled_hpd_pi(scheme1, t)
    s_lo, s_hi = scaled_predictive_survival([pi.lower, pi.upper], scheme1, t)
    assert_allclose(s_lo - s_hi, 0.95, atol=1e-10)
    f_lo, f_hi = scaled_predictive_pdf([pi.lower, pi.upper], scheme1, t)
    assert_allclose(f_lo, f_hi, rtol=1e-9)
    assert pi.width <= scaled_equitailed_pi(scheme1, t).width


@pytest.mark.parametrize("t", TARGETS)
def test_point_predictions_match_quadrature(scheme2, t):
    pts = scaled_point_predictions(scheme2, t)
    f = lambda u: scaled_predictive_pdf(u, scheme2, t)
    mean, _ = integrate.quad(lambda u: u * f(u), 0, np.inf, epsabs=1e-13)
    assert_allclose(pts.sel, mean, rtol=1e-9)
    assert_allclose(scaled_predictive_survival(pts.ael, scheme2, t), 0.5, atol=1e-12)
    mode = optimize.minimize_scalar(lambda u: -f(u), bounds=(1e-3, 5), method="bounded",
                                    options={"xatol": 1e-12}).x
    assert_allclose(pts.mode, mode, rtol=1e-6)


def test_zero_failures_are_rejected():
    s = HybridSample(np.array([]), HybridScheme(5, 3, 1.0), 0, 1.0)
    with pytest.raises(ImproperPosteriorError):
        scaled_posterior(s)
    with pytest.raises(ImproperPosteriorError):
        scaled_equitailed_pi(s, TARGETS[0])


def test_interval_container():
    pi = PredictionInterval(1.0, 3.0, 0.95, "hpd")
    assert 2.0 in pi and 3.0 not in pi
    assert pi.width == 2.0
    with pytest.raises(ValueError):
        PredictionInterval(2.0, 1.0, 0.95, "hpd")


def test_alpha_validation(scheme1):
    with pytest.raises(ValueError):
        scaled_hpd_pi(scheme1, TARGETS[0], alpha=1.0)


def test_scale_equivariance(scheme1):
    c = 3.7
    t = TARGETS[1]
    a = scaled_hpd_pi(scheme1, t)
    b = scaled_hpd_pi(scheme1.scaled(c), t)
    assert_allclose([b.lower, b.upper], [c * a.lower, c * a.upper], rtol=1e-10)
    pa, pb = scaled_point_predictions(scheme1, t), scaled_point_predictions(scheme1.scaled(c), t)
    assert_allclose([pb.sel, pb.ael, pb.mode], [c * pa.sel, c * pa.ael, c * pa.mode], rtol=1e-12)
