"""Small-time expansion coefficients of the heat kernel of ``d/dt - Delta + W`` (d = 1).

With the free kernel factored out,

    u(t, x, y) = (4 pi t)^(-1/2) exp(-(x - y)^2 / 4t) * sum_r a_r(x, y) t^r,

the coefficients obey the transport recursion ``a_0 = 1`` and

    a_r(x) = int_0^1 s^(r-1) [a_{r-1}'' - W a_{r-1}](y + s (x - y)) ds.

For polynomial ``W`` every ``a_r(., y)`` is a polynomial in ``rho = x - y``
and the ``s``-integral is exact term by term: the coefficient of ``rho^k``
is divided by ``r + k``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as P
from scipy.special import gammaln
import sympy

from ._jet import taylor_coefficients
from ._validation import check_int, check_interval, check_window
from .exceptions import AllZero, DegreeOverflow, FitDiverged, InputError, OrderOutOfRange
from .fields import ScalarField

DEFAULT_DEGREE_CAP = 512


@dataclass(frozen=True, eq=False)
class PolynomialRep:
    """Polynomial ``sum_k c_k (x - center)^k`` (ascending coefficients).

    ``error`` is the max-norm representation error on ``interval`` when the
    polynomial approximates some other function (0 for exact ones).
    """

    coefficients: np.ndarray
    center: float = 0.0
    error: float = 0.0
    interval: tuple = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=float)).copy()
        if c.ndim != 1 or c.size == 0:
            raise InputError("coefficients must be a non-empty 1-D sequence")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "center", float(self.center))

    @property
    def degree(self):
        return self.coefficients.size - 1

    def __call__(self, x):
        # polyval is Horner's rule
        return P.polyval(np.asarray(x, dtype=float) - self.center, self.coefficients)

    def deriv(self, m=1):
        if m > self.degree:
            return PolynomialRep([0.0], self.center)
        return PolynomialRep(P.polyder(self.coefficients, m), self.center)

    def trim(self):
        nz = np.flatnonzero(self.coefficients)
        last = nz[-1] + 1 if nz.size else 1
        return PolynomialRep(self.coefficients[:last], self.center, self.error, self.interval)

    def recenter(self, new_center):
        """Same polynomial expanded about ``new_center`` (Taylor shift)."""
        shift = float(new_center) - self.center
        c = self.coefficients
        n = c.size
        out = np.empty(n)
        for k in range(n):
            j = np.arange(k, n)
            binom = np.array([math.comb(int(jj), k) for jj in j], dtype=float)
            out[k] = math.fsum(c[k:] * binom * shift ** (j - k))
        return PolynomialRep(out, new_center, self.error, self.interval)

    def to_list(self):
        return [float(v) for v in self.coefficients]


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Polynomials ``a_r(., y)`` for ``r = 0..r_max`` about the base point ``y``."""

    base_point: float
    orders: tuple
    potential: PolynomialRep
    potential_degree: int
    working_interval: tuple = field(default=(-np.inf, np.inf))

    @property
    def y(self):
        return self.base_point

    @property
    def r_max(self):
        return len(self.orders) - 1

    def values(self, x):
        """``[a_0(x, y), ..., a_rmax(x, y)]``; shape ``(r_max + 1,) + shape(x)``."""
        return np.array([p(x) for p in self.orders])

    def to_dict(self):
        return {
            "schema": "borelheat.coefficients/1",
            "y": self.base_point,
            "interval": [float(v) for v in self.working_interval],
            "r_max": self.r_max,
            "center": self.base_point,
            "potential": self.potential.to_list(),
            "potential_error": self.potential.error,
            "orders": [p.to_list() for p in self.orders],
        }

    @classmethod
    def from_dict(cls, doc):
        y = float(doc["y"])
        interval = tuple(float(v) for v in doc.get("interval", (-np.inf, np.inf)))
        pot = PolynomialRep(doc["potential"], y, float(doc.get("potential_error", 0.0)), interval)
        orders = tuple(PolynomialRep(c, y) for c in doc["orders"])
        if len(orders) != int(doc["r_max"]) + 1:
            raise InputError("r_max does not match the number of stored orders")
        return cls(y, orders, pot, pot.degree, interval)


# ---------------------------------------------------------------------------
def _symbolic_polynomial(W, degree):
    if W.expr is None or W.dimension != 1:
        return None
    x = W.symbols[0]
    expr = sympy.expand(W.expr)
    if not expr.is_polynomial(x):
        return None
    poly = sympy.Poly(expr, x)
    if poly.degree() > degree:
        return None
    return [float(c) for c in reversed(poly.all_coeffs())]


def _chebyshev_fit(W, lo, hi, degree):
    cheb = C.Chebyshev.interpolate(lambda t: np.asarray(W(t), dtype=float), degree,
                                   domain=[lo, hi])
    half = 0.5 * (hi - lo)
    scaled = C.cheb2poly(cheb.coef)
    coeffs = scaled / half ** np.arange(scaled.size)
    return coeffs, cheb


def _taylor_fit(W, center, degree):
    if W.expr is None or W.dimension != 1:
        raise InputError("taylor method needs a symbolic one-dimensional potential")
    return taylor_coefficients(W.expr, W.symbols[0], center, degree)


def approximate_potential(W, interval, degree=32, *, method="chebyshev", center=None):
    """Monomial-basis polynomial approximating ``W`` on ``interval``.

    Polynomial expressions pass through exactly (``error == 0``). Otherwise
    ``method="chebyshev"`` interpolates at Chebyshev points and centres the
    result at the interval midpoint, while ``method="taylor"`` expands a
    symbolic ``W`` about ``center`` (default: the midpoint) with jet
    arithmetic. Taylor polynomials keep high derivatives at the centre exact,
    which is what the transport recursion consumes; Chebyshev interpolants
    have the smaller max-norm error. Either way the max-norm error on a dense
    grid is attached as ``error``.

    Raises
    ------
    FitDiverged
        If ``W`` is not finite on the interval, or the error does not shrink
        when the degree doubles (non-smooth ``W``).
    """
    lo, hi = check_interval(interval)
    degree = check_int(degree, "degree", minimum=2)
    if method not in ("chebyshev", "taylor"):
        raise InputError(f"unknown approximation method {method!r}")
    mid = 0.5 * (lo + hi) if center is None else float(center)
    if isinstance(W, PolynomialRep):
        return PolynomialRep(W.coefficients, W.center, W.error, (lo, hi)).recenter(mid)
    if not isinstance(W, ScalarField):
        W = ScalarField(lambda p: W(p[:, 0]), 1, [(lo, hi)], derivative_order=0)
    exact = _symbolic_polynomial(W, degree)
    if exact is not None:
        return PolynomialRep(exact, 0.0, 0.0, (lo, hi)).recenter(mid)

    dense = np.linspace(lo, hi, 4001)
    target = np.asarray(W(dense), dtype=float)
    if not np.all(np.isfinite(target)):
        raise FitDiverged("potential is not finite on the interval")
    scale = max(1.0, float(np.max(np.abs(target))))
    half_degree = max(2, degree // 2)
    if method == "chebyshev":
        coeffs, _ = _chebyshev_fit(W, lo, hi, degree)
        coeffs_half, _ = _chebyshev_fit(W, lo, hi, half_degree)
        centre = 0.5 * (lo + hi)
        poly = PolynomialRep(coeffs, centre, 0.0, (lo, hi))
        poly_half = PolynomialRep(coeffs_half, centre)
    else:
        poly = PolynomialRep(_taylor_fit(W, mid, degree), mid, 0.0, (lo, hi))
        poly_half = PolynomialRep(_taylor_fit(W, mid, half_degree), mid)
    err = float(np.max(np.abs(poly(dense) - target)))
    err_half = float(np.max(np.abs(poly_half(dense) - target)))
    if not np.isfinite(err) or (err > 1e-8 * scale and err > 0.5 * err_half):
        raise FitDiverged(
            f"{method} error {err:.3g} at degree {degree} did not improve on "
            f"{err_half:.3g} at degree {half_degree}; potential is not smooth enough")
    out = PolynomialRep(poly.coefficients, poly.center, err, (lo, hi))
    return out if method == "taylor" or center is None else out.recenter(mid)


def _convolve_fsum(w, a):
    """Coefficients of the product polynomial, each summed with math.fsum."""
    n, m = w.size, a.size
    out = np.empty(n + m - 1)
    a_rev = a[::-1]
    for k in range(n + m - 1):
        i_lo, i_hi = max(0, k - m + 1), min(k, n - 1)
        out[k] = math.fsum(w[i_lo:i_hi + 1] * a_rev[m - 1 - k + i_lo:m - k + i_hi])
    return out


def expansion_coefficients(W_poly, y, r_max, *, degree_cap=DEFAULT_DEGREE_CAP):
    """Build the :class:`CoefficientTable` of a polynomial potential about ``y``.

    Parameters
    ----------
    W_poly : PolynomialRep
    y : float
        Base point; must lie in ``W_poly.interval`` when one is attached.
    r_max : int
        Highest order, >= 1.
    degree_cap : int
        Largest admissible degree ``deg(W) * r_max`` of the top order.
    """
    r_max = check_int(r_max, "r_max", minimum=1)
    y = float(y)
    if not isinstance(W_poly, PolynomialRep):
        raise InputError("W_poly must be a PolynomialRep (see approximate_potential)")
    interval = W_poly.interval if W_poly.interval is not None else (-np.inf, np.inf)
    if not interval[0] <= y <= interval[1]:
        raise InputError(f"base point {y} lies outside the working interval {interval}")
    w = W_poly.trim().recenter(y).coefficients
    p = w.size - 1
    if p * r_max > degree_cap:
        raise DegreeOverflow(
            f"degree {p} x r_max {r_max} = {p * r_max} exceeds the cap {degree_cap}; "
            "lower r_max or the potential degree")

    orders = [np.array([1.0])]
    for r in range(1, r_max + 1):
        prev = orders[-1]
        forcing = -_convolve_fsum(w, prev)
        if prev.size > 2:
            forcing[:prev.size - 2] += P.polyder(prev, 2)
        a_r = forcing / (r + np.arange(forcing.size))
        # the recursion keeps a_r inside degree r * deg(W)
        assert a_r.size - 1 <= max(p * r, 0), "degree closure violated"
        orders.append(a_r)

    potential = PolynomialRep(w, y, W_poly.error, W_poly.interval)
    return CoefficientTable(
        base_point=y,
        orders=tuple(PolynomialRep(a, y) for a in orders),
        potential=potential,
        potential_degree=p,
        working_interval=tuple(float(v) for v in interval),
    )


def coefficient_at(table, r, x):
    """Value of ``a_r(x, y)`` from a table built about ``y``."""
    if isinstance(r, bool) or not isinstance(r, (int, np.integer)) or not 0 <= r <= table.r_max:
        raise OrderOutOfRange(f"order {r!r} outside 0..{table.r_max}")
    lo, hi = table.working_interval
    xa = np.asarray(x, dtype=float)
    if np.any((xa < lo) | (xa > hi)):
        raise InputError(f"x outside the working interval [{lo}, {hi}]")
    out = table.orders[r](xa)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GevreyEstimate:
    """Envelope ``|a_r| <= K r! / kappa^r`` fitted over ``fit_window``.

    ``residual`` is the largest violation of the bound in log space over the
    window (0 when the bound holds, which the envelope construction
    guarantees up to rounding). ``unbounded`` is set when the fitted slope is
    positive (``kappa < 1``) or ``log|a_r| - log r!`` curves upward
    (super-factorial growth); it is a flag, not an error.
    """

    K: float
    kappa: float
    fit_window: tuple
    residual: float
    slope: float
    n_points: int
    unbounded: bool = False


# upward curvature of log|a_r| - log r! beyond this means growth faster than r! kappa^-r
_CURVATURE_LIMIT = 0.02


def gevrey_fit(values, window):
    """Least-squares Gevrey-1 fit of a coefficient sequence.

    Fits ``log|a_r| - log r! = log K - r log kappa`` over the window (zero
    entries are skipped), then raises ``K`` to the upper envelope so the bound
    holds at every fitted order.

    Raises
    ------
    AllZero
        Fewer than two nonzero coefficients in the window: the series
        terminates and the Gevrey bound is trivial.

    Examples
    --------
    >>> from math import factorial
    >>> est = gevrey_fit([factorial(r) / 2**r for r in range(12)], (3, 10))
    >>> round(est.kappa, 12), round(est.K, 12)
    (2.0, 1.0)
    """
    vals = np.abs(np.asarray(values, dtype=float))
    lo, hi = check_window(window, vals.size)
    r = np.arange(lo, hi + 1)
    a = vals[lo:hi + 1]
    keep = np.isfinite(a) & (a > 0)
    if keep.sum() < 2:
        raise AllZero(f"fewer than two nonzero coefficients in window {window}")
    r, a = r[keep], a[keep]
    y = np.log(a) - gammaln(r + 1.0)
    slope, _ = np.polyfit(r, y, 1)
    kappa = math.exp(-slope)
    log_K = float(np.max(y + r * math.log(kappa)))
    bound = log_K - r * math.log(kappa)
    residual = max(0.0, float(np.max(y - bound)))
    # slope exactly 0 (a_r = r!) is not flagged
    unbounded = bool(slope > 1e-12)
    if r.size >= 3 and not unbounded:
        curvature = np.polyfit(r, y, 2)[0]
        unbounded = bool(curvature > _CURVATURE_LIMIT)
    return GevreyEstimate(
        K=math.exp(log_K),
        kappa=kappa,
        fit_window=(lo, hi),
        residual=residual,
        slope=float(slope),
        n_points=int(r.size),
        unbounded=unbounded,
    )
