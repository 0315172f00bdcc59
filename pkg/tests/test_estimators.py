import math

import numpy as np
import pytest
from sklearn.base import clone

from borelheat import BorelPadeLaplace, LampertiTransformer, SmallTimeKernel, ou_exact
from borelheat.exceptions import InputError, PoleOnContour
from borelheat.kernels import free_kernel


def test_borel_estimator_on_euler_series():
    est = BorelPadeLaplace().fit([(-1) ** r * math.factorial(r) for r in range(17)])
    # b_r = (-1)^r is exactly rational, so the orders step down to [1/1]
    assert est.order_ == (1, 1)
    pred = est.predict([0.1, 0.2])
    assert pred[0] == pytest.approx(0.9156333393978807, rel=1e-12)
    assert est.predict_result([0.1])[0].trusted


def test_borel_estimator_steps_down_orders():
    est = BorelPadeLaplace(orders=(2, 2)).fit([(-1) ** r * math.factorial(r) for r in range(5)])
    assert est.order_ == (1, 1)
    assert est.predict([0.5])[0] == pytest.approx(
        1 / 0.5 * math.exp(2) * _expint_e1(2), rel=1e-10)


def _expint_e1(x):
    from scipy.special import exp1
    return exp1(x)


def test_borel_estimator_without_retry():
    with pytest.raises(PoleOnContour):
        BorelPadeLaplace(orders=(0, 1), retry=False).fit([1.0, 1.0, 1.0])


def test_borel_estimator_is_cloneable():
    est = BorelPadeLaplace(orders=(3, 2))
    assert clone(est).get_params() == {"orders": (3, 2), "retry": True}


def test_kernel_estimator_predicts_rows(ou_model):
    est = SmallTimeKernel(ou_model, r_max=20).fit([0.0, 1.0])
    rows = np.array([[0.1, 0.5, 0.0], [0.25, -1.0, 1.0]])
    want = [ou_exact(2.0, t, x, y).value for t, x, y in rows]
    assert np.allclose(est.predict(rows), want, rtol=1e-6)
    assert set(est.tables_) == {0.0, 1.0}


def test_kernel_estimator_kinds(free_model):
    rows = np.array([[0.1, 0.5, 0.0]])
    heat = SmallTimeKernel(free_model, r_max=4, kind="heat").fit([0.0]).predict(rows)
    mod = SmallTimeKernel(free_model, r_max=4, kind="modified").fit([0.0]).predict(rows)
    assert heat[0] == pytest.approx(free_kernel(0.1, 0.5, 0.0), rel=1e-14)
    assert mod[0] == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InputError):
        SmallTimeKernel(free_model, kind="other").fit([0.0])
    with pytest.raises(InputError):
        SmallTimeKernel().fit([0.0])


def test_lamperti_transformer_round_trip():
    tr = LampertiTransformer("sqrt(1 + x**2)", interval=(-50, 50)).fit()
    s = np.linspace(-50, 50, 21).reshape(-1, 1)
    x = tr.transform(s)
    assert np.allclose(x, np.arcsinh(s), atol=1e-12)
    assert np.allclose(tr.inverse_transform(x), s, atol=1e-10)
    assert x.shape == s.shape
