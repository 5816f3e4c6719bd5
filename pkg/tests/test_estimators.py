import numpy as np
import pytest
from numpy.testing import assert_allclose
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from rayrepair import RayleighRepairPredictor, ScaledRayleighPredictor, WaldPredictor
from rayrepair.model import PredictionTarget

from reference import BEARINGS, PREDICTIONS


@pytest.fixture(scope="module")
def fitted():
    return RayleighRepairPredictor(r=20, T=1.25).fit(BEARINGS)


def test_reference_rows(fitted):
    targets = [(1, 1), (4, 3)]  # (m, k)
    eq = fitted.predict_interval(targets)
    hpd = fitted.predict_interval(targets, kind="hpd")
    sel = fitted.predict(targets)
    for i, (m, k) in enumerate(targets):
        ref = PREDICTIONS[1][(k, m)]
        assert_allclose(np.r_[eq[i], hpd[i], sel[i]], ref[:5], atol=1e-4)


def test_losses(fitted):
    res = fitted.predict_full([(2, 2)])[0]
    assert fitted.predict((2, 2), loss="ael")[0] == res.points.ael
    assert fitted.predict(PredictionTarget(2, 2), loss="zero-one")[0] == res.points.mode
    assert fitted.predict((2, 2), loss="mean")[0] == res.points.sel
    with pytest.raises(ValueError):
        fitted.predict((2, 2), loss="hinge")
    with pytest.raises(ValueError):
        fitted.predict_interval((2, 2), kind="wald")


def test_fitted_attributes(fitted):
    assert fitted.sample_.d == 20
    assert_allclose(fitted.a1_, fitted.posterior_.a1)
    ctx = fitted.context((1, 1))
    assert ctx.target == PredictionTarget(1, 1)


@pytest.mark.parametrize("est", [RayleighRepairPredictor(), ScaledRayleighPredictor(), WaldPredictor()])
def test_not_fitted(est):
    with pytest.raises(NotFittedError):
        est.predict((1, 1))


def test_clone_and_params():
    est = RayleighRepairPredictor(xi=0.2, tau=0.01, r=20, T=1.0)
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    twin.set_params(tau=0.5)
    assert est.tau == 0.01


def test_failures_only_input():
    # the 18 failures before T = 1 of a 23-unit test
    failures = [v for v in BEARINGS if v <= 1.0]
    est = RayleighRepairPredictor(n=23, r=20, T=1.0).fit(failures)
    ref = PREDICTIONS[2][(3, 2)]
    assert_allclose(est.predict_interval((2, 3), kind="hpd")[0], ref[2:4], atol=1e-4)


def test_column_input_and_hybrid_sample(fitted):
    est = ScaledRayleighPredictor(r=20, T=1.25)
    a = est.fit(np.array(BEARINGS)[:, None]).predict([(1, 1)])
    b = clone(est).fit(fitted.sample_).predict([(1, 1)])
    assert_allclose(a, b)


def test_scaled_predictor_intervals():
    est = ScaledRayleighPredictor(alpha=0.1).fit(BEARINGS)
    eq, hpd = est.predict_interval([(1, 1)]), est.predict_interval([(1, 1)], kind="hpd")
    assert hpd[0, 1] - hpd[0, 0] < eq[0, 1] - eq[0, 0]


def test_wald_predictor():
    est = WaldPredictor(r=20, T=1.25).fit(BEARINGS)
    assert est.fit_.converged
    pi = est.predict_interval([(1, 1), (2, 2)])
    assert pi.shape == (2, 2) and np.all(pi[:, 0] > est.mu_)
    with pytest.raises(ValueError):
        est.predict_interval((1, 1), kind="hpd")
    scaled = WaldPredictor(scaled=True).fit(BEARINGS)
    assert scaled.mu_ == 0.0
    assert scaled.predict((1, 1), loss="median")[0] > 0


@pytest.mark.parametrize("bad", [[1.0, np.nan], [[1.0, 2.0], [3.0, 4.0]], []])
def test_input_validation(bad):
    with pytest.raises(ValueError):
        RayleighRepairPredictor().fit(bad)


def test_scheme_validation():
    with pytest.raises(ValueError):
        RayleighRepairPredictor(n=3).fit(BEARINGS)
    with pytest.raises(ValueError):
        RayleighRepairPredictor(n=30, r=20).fit(BEARINGS)  # 23 failures, r = 20
    with pytest.raises(ValueError):
        RayleighRepairPredictor(n=30, r=25).fit(BEARINGS)  # fewer than r, no time limit
    with pytest.raises(ValueError):
        RayleighRepairPredictor(alpha=0).fit(BEARINGS)


def test_target_validation(fitted):
    with pytest.raises(ValueError):
        fitted.predict([(1, 2, 3)])
    with pytest.raises(ValueError):
        fitted.predict([(1.5, 2)])
    with pytest.raises(TypeError):
        fitted.predict(5)
    with pytest.raises(ValueError):
        fitted.predict([])
