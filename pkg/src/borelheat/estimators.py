"""scikit-learn style wrappers around the functional API.

* :class:`BorelPadeLaplace` fits on a coefficient sequence and predicts the
  Borel sum at given times.
* :class:`SmallTimeKernel` fits coefficient tables at base points and
  predicts kernel values at rows ``(t, x, y)``.
* :class:`LampertiTransformer` maps ``s -> gamma(s)`` and back.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import borel, kernels
from .exceptions import DegenerateHankel, InputError, PoleOnContour
from .lamperti import DiffusionCoefficient, build_map


class BorelPadeLaplace(BaseEstimator):
    """Borel-Pade-Laplace summation of a power series.

    Parameters
    ----------
    orders : (int, int), optional
        Pade orders ``(m, n)``; ``(r_max // 2, r_max // 2)`` when omitted.
    retry : bool
        Step the orders down on degenerate systems or poles on the contour.

    Examples
    --------
    >>> est = BorelPadeLaplace(orders=(1, 1)).fit([1, -1, 2, -6, 24])
    >>> round(float(est.predict([0.1])[0]), 6)
    0.915633
    """

    def __init__(self, orders=None, retry=True):
        self.orders = orders
        self.retry = retry

    def fit(self, X, y=None):
        coeffs = check_array(np.atleast_2d(np.asarray(X, dtype=float)).reshape(-1, 1),
                             ensure_min_samples=1).ravel()
        self.series_ = borel.FormalSeries(coeffs)
        self.borel_ = borel.borel_transform(self.series_)
        m, n = borel.default_orders(self.series_.r_max) if self.orders is None else self.orders
        # pick the orders once so every predict uses the same approximant
        while True:
            try:
                self.approximant_ = borel.pade_continue(self.borel_, m, n)
                if borel.pole_clearance(self.approximant_.poles) <= borel.POLE_CLEARANCE_MIN:
                    raise PoleOnContour(f"[{m}/{n}] has a pole on the contour")
                break
            except (DegenerateHankel, PoleOnContour):
                if not self.retry or n == 0:
                    raise
                m, n = m - 1, n - 1
        self.order_ = (m, n)
        self.poles_ = self.approximant_.poles
        self.n_features_in_ = 1
        return self

    def predict_result(self, t):
        check_is_fitted(self, "approximant_")
        ts = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        return [borel.laplace_sum(self.approximant_, tt) for tt in ts]

    def predict(self, X):
        return np.array([r.value for r in self.predict_result(X)])


class SmallTimeKernel(BaseEstimator):
    """Kernel values of a model from its small-time expansion.

    Parameters
    ----------
    model : ModelSpec
    r_max : int, optional
        Highest expansion order (default from the degree cap).
    degree : int
        Degree of the polynomial standing in for a non-polynomial potential.
    method : {"auto", "taylor", "chebyshev"}
    mode : {"borel", "truncated"}
    orders : (int, int), optional
        Pade orders for ``mode="borel"``.
    kind : {"transition", "heat", "modified"}
        Which kernel ``predict`` returns: ``k``, ``u`` or ``k~``.
    """

    def __init__(self, model=None, r_max=None, degree=40, method="auto", mode="borel",
                 orders=None, kind="transition"):
        self.model = model
        self.r_max = r_max
        self.degree = degree
        self.method = method
        self.mode = mode
        self.orders = orders
        self.kind = kind

    def fit(self, X, y=None):
        """Build tables about the base points ``X`` (any shape, flattened)."""
        if self.model is None:
            raise InputError("SmallTimeKernel needs a model")
        if self.kind not in ("transition", "heat", "modified"):
            raise InputError(f"unknown kernel kind {self.kind!r}")
        bases = check_array(np.asarray(X, dtype=float).reshape(-1, 1)).ravel()
        self.tables_ = {}
        for b in bases:
            self._table(b)
        self.n_features_in_ = 1
        return self

    def _table(self, y):
        key = round(float(y), 12)
        if key not in self.tables_:
            self.tables_[key] = kernels.model_table(self.model, key, self.r_max,
                                                    degree=self.degree, method=self.method)
        return self.tables_[key]

    def estimate(self, t, x, y):
        check_is_fitted(self, "tables_")
        table = self._table(y)
        if self.kind == "heat":
            return kernels.assemble_u(table, t, x, self.mode, orders=self.orders)
        if self.kind == "modified":
            return kernels.modified_kernel(self.model, table, t, x, y, self.mode,
                                           orders=self.orders)
        return kernels.assemble_k(self.model, table, t, x, y, self.mode, orders=self.orders)

    def predict(self, X):
        """Kernel values at the rows ``(t, x, y)`` of ``X``."""
        rows = check_array(X, ensure_min_features=3)
        if rows.shape[1] != 3:
            raise InputError("rows must be (t, x, y)")
        return np.array([self.estimate(*row).value for row in rows])


class LampertiTransformer(TransformerMixin, BaseEstimator):
    """``s -> gamma(s) = int_{s0}^s dy / sigma(y)`` on a fixed interval."""

    def __init__(self, sigma="1", s0=0.0, interval=(-10.0, 10.0)):
        self.sigma = sigma
        self.s0 = s0
        self.interval = interval

    def fit(self, X=None, y=None):
        self.map_ = build_map(DiffusionCoefficient(self.sigma, self.s0), self.interval)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "map_")
        arr = check_array(np.asarray(X, dtype=float).reshape(-1, 1))
        return self.map_.gamma(arr.ravel()).reshape(np.shape(X))

    def inverse_transform(self, X):
        check_is_fitted(self, "map_")
        arr = check_array(np.asarray(X, dtype=float).reshape(-1, 1))
        return self.map_.inverse(arr.ravel()).reshape(np.shape(X))
