import math

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose

from rayrepair.exceptions import ConvergenceError
from rayrepair.numerics import (
    QuadratureSpec,
    RootSpec,
    adaptive_quadrature,
    bracketed_root,
    chi_square_upper_quantile,
    gauss_kronrod_nodes,
    inverse_incomplete_beta,
    left_improper_quadrature,
    log_gamma,
    regularized_incomplete_beta,
    safeguarded_newton,
    unimodal_maximize,
)


@pytest.mark.parametrize("a, b, x", [(2, 3, 0.3), (17, 1, 0.9), (20, 4, 0.75), (0.5, 7.5, 0.02)])
def test_incomplete_beta_matches_mpmath(a, b, x):
    expected = float(mpmath.betainc(a, b, 0, x, regularized=True))
    assert_allclose(regularized_incomplete_beta(a, b, x), expected, rtol=1e-13)


def test_incomplete_beta_reflection():
    x = np.linspace(0.0, 1.0, 41)
    for a, b in [(1, 1), (2.5, 7), (20, 3), (18, 4)]:
        assert_allclose(regularized_incomplete_beta(a, b, x),
                        1 - regularized_incomplete_beta(b, a, 1 - x), atol=1e-14)


def test_incomplete_beta_integer_series():
    # I(d, m, p) = sum_{j<m} C(d+j-1, j) p^d (1-p)^j
    d, m, p = 18, 4, 0.63
    series = sum(math.comb(d + j - 1, j) * p ** d * (1 - p) ** j for j in range(m))
    assert_allclose(regularized_incomplete_beta(d, m, p), series, rtol=1e-13)


def test_inverse_incomplete_beta_round_trip():
    p = np.array([1e-6, 0.025, 0.5, 0.975, 1 - 1e-6])
    for a, b in [(20, 1), (20, 4), (3, 3), (0.7, 2.2)]:
        x = inverse_incomplete_beta(a, b, p)
        assert_allclose(regularized_incomplete_beta(a, b, x), p, rtol=1e-10, atol=1e-15)


def test_incomplete_beta_rejects_bad_input():
    with pytest.raises(ValueError):
        regularized_incomplete_beta(0, 1, 0.5)
    with pytest.raises(ValueError):
        regularized_incomplete_beta(1, 1, 1.5)
    with pytest.raises(ValueError):
        inverse_incomplete_beta(2, 2, np.nan)


def test_log_gamma():
    assert_allclose(log_gamma(0.5), 0.5 * math.log(math.pi), rtol=1e-15)
    assert_allclose(log_gamma(21), math.log(math.factorial(20)), rtol=1e-15)
    with pytest.raises(ValueError):
        log_gamma(-1.0)


@pytest.mark.parametrize("gamma", [0.001, 0.025, 0.5, 0.975, 0.999])
def test_chi_square_two_df_closed_form(gamma):
    # P(X > q) = exp(-q / 2) for two degrees of freedom
    q = chi_square_upper_quantile(2, gamma)
    assert_allclose(q, -2 * math.log(gamma), rtol=1e-13)


def test_chi_square_even_df_survival():
    # P(X > q) = exp(-q/2) sum_{j<m} (q/2)^j / j!  for 2m degrees of freedom
    for m in (2, 3, 4):
        q = chi_square_upper_quantile(2 * m, 0.05)
        tail = math.exp(-q / 2) * sum((q / 2) ** j / math.factorial(j) for j in range(m))
        assert_allclose(tail, 0.05, rtol=1e-12)
    with pytest.raises(ValueError):
        chi_square_upper_quantile(2, 1.0)


def test_gauss_kronrod_rule_is_exact_for_degree_22():
    nodes, w = gauss_kronrod_nodes([[0.0, 1.0]])
    for p in (0, 5, 13, 22):
        assert_allclose(np.sum(w * nodes ** p), 1 / (p + 1), rtol=1e-14)


@pytest.mark.parametrize("f, lo, hi, exact", [
    (np.sin, 0.0, math.pi, 2.0),
    (np.sqrt, 0.0, 1.0, 2.0 / 3.0),
    (lambda x: 1 / (1 + x * x), -1.0, 1.0, math.pi / 2),
    (lambda x: np.log(x), 0.0, 1.0, -1.0),
])
def test_adaptive_quadrature_known_constants(f, lo, hi, exact):
    with np.errstate(divide="ignore"):
        res = adaptive_quadrature(f, lo, hi, QuadratureSpec(1e-12, 1e-15, 400))
    assert res.converged
    assert_allclose(res.value, exact, rtol=1e-11)
    assert res.panels[0, 0] == lo and res.panels[-1, 1] == hi
    assert np.all(np.diff(res.panels[:, 0]) > 0)


def test_adaptive_quadrature_reports_budget_exhaustion():
    res = adaptive_quadrature(lambda x: np.sin(1 / x), 1e-6, 1.0, QuadratureSpec(1e-14, 1e-16, 8))
    assert not res.converged


def test_left_improper_gaussian():
    # int_{-inf}^{1} exp(-(t - 2)^2) dt = sqrt(pi) erfc(1) / 2
    res = left_improper_quadrature(lambda t: np.exp(-(t - 2) ** 2), 1.0, 1.0, 2.0,
                                   QuadratureSpec(1e-13, 1e-16))
    exact = 0.5 * math.sqrt(math.pi) * math.erfc(1.0)
    assert_allclose(res.value, exact, rtol=1e-11)


def test_left_improper_normal_mass():
    rate = 50.0
    res = left_improper_quadrature(lambda t: np.exp(-rate * t * t), 10.0, rate, 0.0)
    assert_allclose(res.value, math.sqrt(math.pi / rate), rtol=1e-10)


def test_bracketed_root():
    root = bracketed_root(lambda x: x ** 3 - 2, 0.0, 2.0, RootSpec(1e-15, 1e-15))
    assert_allclose(root, 2 ** (1 / 3), rtol=1e-14)
    with pytest.raises(ValueError):
        bracketed_root(lambda x: x * x + 1, -1.0, 1.0)


def test_safeguarded_newton_vectorised():
    targets = np.array([0.1, 2.0, 30.0])

    def fdf(x):
        return np.log(x) - np.log(targets), 1 / x

    root = safeguarded_newton(fdf, 1e-3, 100.0, RootSpec(1e-14, 1e-15))
    assert_allclose(root, targets, rtol=1e-13)


def test_safeguarded_newton_handles_flat_newton_steps():
    # atan has tiny slope far out, so pure Newton overshoots
    root = safeguarded_newton(lambda x: (np.arctan(x - 5), 1 / (1 + (x - 5) ** 2)),
                              -100.0, 100.0, RootSpec(1e-15, 1e-15))
    assert_allclose(root, 5.0, rtol=1e-14)


def test_safeguarded_newton_errors():
    with pytest.raises(ValueError):
        safeguarded_newton(lambda x: (x * x + 1, 2 * x), -1.0, 1.0)
    with pytest.raises(ConvergenceError):
        # a jump has no root to reach within three bisections
        safeguarded_newton(lambda x: (np.sign(x - 0.3), 0 * x), 0.0, 1.0, RootSpec(1e-300, 1e-300, 3))


def test_unimodal_maximize():
    x, fx = unimodal_maximize(lambda x: -(x - 0.7) ** 2 + 3, -5.0, 5.0)
    assert_allclose([x, fx], [0.7, 3.0], rtol=1e-9)
    x, _ = unimodal_maximize(lambda x: x * np.exp(-x), 0.1, 10.0, slope=lambda x: (1 - x) * np.exp(-x))
    assert_allclose(x, 1.0, rtol=1e-14)
