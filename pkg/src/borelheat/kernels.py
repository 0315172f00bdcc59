"""Kernel values from expansion tables, closed-form oracles and a PDE reference.

Conventions (d = 1): the generator is ``Delta + beta . grad`` (noise amplitude
sqrt(2)), the free kernel is ``(4 pi t)^(-1/2) exp(-(x - y)^2 / 4t)``, ``u`` is
the kernel of ``exp(t (Delta - W))`` and the transition kernel is
``k(t, x, y) = psi(y) / psi(x) * u(t, x, y)``. For the ``1/2 Delta``
convention replace ``t`` by ``t / 2``.
"""

from dataclasses import dataclass, field
import math

import mpmath
import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from scipy.interpolate import CubicSpline
import sympy

from . import borel
from ._validation import check_int, check_positive
from .coeffs import (DEFAULT_DEGREE_CAP, CoefficientTable, approximate_potential,
                     expansion_coefficients)
from .exceptions import (DegenerateHankel, FitDiverged, InputError, MassLoss,
                         NonPositiveGroundState, PoleOnContour)
from .quadrature import legendre_rule

DEFAULT_R_MAX = 20


@dataclass(frozen=True)
class KernelEstimate:
    """One kernel value, ``value = prefactor * series_part``.

    ``method`` is ``"exact"``, ``"pde"``, ``"borel"`` or ``"truncated(r)"``;
    ``kind`` is ``"heat"`` (u), ``"transition"`` (k) or ``"modified"`` (k tilde).
    """

    t: float
    x: float
    y: float
    value: float
    method: str
    prefactor: float
    series_part: float
    kind: str = "heat"
    diagnostics: object = None


def free_kernel(t, x, y, d=1):
    """``(4 pi t)^(-d/2) exp(-|x - y|^2 / 4t)``."""
    t = check_positive(t, "t")
    rho2 = float(np.sum((np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) ** 2))
    return (4 * math.pi * t) ** (-d / 2) * math.exp(-rho2 / (4 * t))


def _exact(t, x, y, value, kind):
    pre = free_kernel(t, x, y)
    series = value / pre if pre > 0 else math.inf
    return KernelEstimate(t, float(x), float(y), value, "exact", pre, series, kind)


def _sinhc(z):
    return 1.0 if z == 0 else math.sinh(z) / z


def mehler_exact(omega, t, x, y):
    """Kernel of ``exp(t (Delta - omega^2 x^2 / 4))`` in closed form.

    Written as ``(4 pi t S)^(-1/2) exp(-(x-y)^2 / (4 t S) - (x^2 + y^2) omega
    tanh(omega t / 2) / 4)`` with ``S = sinh(omega t) / (omega t)``, which is
    exact and stays accurate as ``omega -> 0``.

    >>> est = mehler_exact(0.0, 0.1, 0.3, 0.0)
    >>> abs(est.value - free_kernel(0.1, 0.3, 0.0)) < 1e-15
    True
    """
    t = check_positive(t, "t")
    omega = abs(float(omega))
    S = _sinhc(omega * t)
    rho2 = (x - y) ** 2
    expo = -rho2 / (4 * t * S) - (x * x + y * y) * omega * math.tanh(0.5 * omega * t) / 4
    value = (4 * math.pi * t * S) ** -0.5 * math.exp(expo)
    return _exact(t, x, y, value, "heat")


def ou_exact(omega, t, x, y):
    """Transition density of ``dX = -omega X dt + sqrt(2) dB`` from ``x`` to ``y``.

    Gaussian in ``y`` with mean ``x e^(-omega t)`` and variance
    ``(1 - e^(-2 omega t)) / omega`` (``2 t`` at ``omega = 0``).
    """
    t = check_positive(t, "t")
    omega = float(omega)
    z = 2 * omega * t
    var = 2 * t * (-math.expm1(-z) / z if z != 0 else 1.0)
    mean = x * math.exp(-omega * t)
    value = math.exp(-(y - mean) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)
    return _exact(t, x, y, value, "transition")


# ---------------------------------------------------------------------------
def _series_method(mode, order):
    if mode == "borel":
        return "borel"
    if mode == "truncated":
        return f"truncated({order})"
    raise InputError(f"mode must be 'borel' or 'truncated', got {mode!r}")


def series_value(coeffs, t, mode="borel", order=None, orders=None):
    """Sum the t-series of coefficients at ``t``.

    ``truncated`` sums ``a_j t^j`` for ``j < order`` (all stored orders by
    default); ``borel`` runs the Borel-Pade-Laplace pipeline. Returns
    ``(value, method, diagnostics)``.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if mode == "truncated":
        order = coeffs.size if order is None else check_int(order, "order", minimum=1)
        if order > coeffs.size:
            raise InputError(f"truncation order {order} exceeds the {coeffs.size} stored coefficients")
        value = math.fsum(coeffs[:order] * t ** np.arange(order))
        return value, _series_method(mode, order), None
    _series_method(mode, order)
    result = borel.borel_sum(borel.FormalSeries(coeffs), t, orders)
    return result.value, "borel", result


def assemble_u(table, t, x, mode="borel", order=None, orders=None):
    """Heat-kernel value ``u(t, x, y)`` from a table built about ``y``."""
    t = check_positive(t, "t")
    x = float(x)
    lo, hi = table.working_interval
    if not lo <= x <= hi:
        raise InputError(f"x = {x} outside the table interval [{lo}, {hi}]")
    coeffs = table.values(x)
    series, method, diag = series_value(coeffs, t, mode, order, orders)
    pre = free_kernel(t, x, table.y)
    return KernelEstimate(t, x, table.y, pre * series, method, pre, series, "heat", diag)


def _psi_ratio(model, x, y):
    psi_x = float(model.psi(x))
    psi_y = float(model.psi(y))
    if not psi_x > 0 or not psi_y > 0:
        raise NonPositiveGroundState(f"psi is not positive at x = {x} or y = {y}")
    return psi_y / psi_x


def _check_base(table, y):
    if not math.isclose(table.y, y, rel_tol=0, abs_tol=1e-12):
        raise InputError(f"table is built about y = {table.y}, not {y}")


def assemble_k(model, table, t, x, y, mode="borel", order=None, orders=None):
    """Transition kernel ``k = psi(y) / psi(x) * u(t, x, y)``."""
    _check_base(table, y)
    ratio = _psi_ratio(model, x, y)
    u = assemble_u(table, t, x, mode, order, orders)
    return KernelEstimate(u.t, u.x, u.y, ratio * u.value, u.method, u.prefactor,
                          ratio * u.series_part, "transition", u.diagnostics)


def modified_kernel(model, table, t, x, y, mode="borel", order=None, orders=None):
    """``k~ = (4 pi t)^(1/2) e^((x-y)^2/4t) k = psi(y) / psi(x) * (series of u)``."""
    _check_base(table, y)
    ratio = _psi_ratio(model, x, y)
    u = assemble_u(table, t, x, mode, order, orders)
    return KernelEstimate(u.t, u.x, u.y, ratio * u.series_part, u.method, ratio,
                          u.series_part, "modified", u.diagnostics)


# ---------------------------------------------------------------------------
def _polynomial_expr(field):
    if field.expr is None:
        return False
    expr = sympy.expand(field.expr)
    return expr.is_polynomial(*field.symbols)


def model_table(model, y, r_max=None, *, degree=40, method="auto", halfwidth=4.0,
                degree_cap=DEFAULT_DEGREE_CAP):
    """Coefficient table of ``model.W_total`` about ``y``.

    ``method="auto"`` keeps polynomial potentials exact, expands other
    symbolic potentials in a Taylor polynomial about ``y`` and falls back to
    Chebyshev interpolation over the domain box for numeric ones. Taylor
    tables work on ``[y - halfwidth, y + halfwidth]`` clipped to the domain
    box, halving ``halfwidth`` while the Taylor fit diverges (singularities of
    W in the complex plane); the others on the whole box.
    ``r_max`` defaults to the largest order the degree cap allows (at most 20).
    """
    if model.d != 1:
        raise InputError("kernel tables are one-dimensional")
    W = model.W_total
    lo_box, hi_box = model.domain_box[0]
    lo, hi = max(lo_box, y - halfwidth), min(hi_box, y + halfwidth)
    if method == "auto":
        if _polynomial_expr(W):
            # exact at any degree, so the whole box is usable
            method = "chebyshev"
            lo, hi = lo_box, hi_box
        elif W.is_symbolic:
            method = "taylor"
        else:
            method = "chebyshev"
            lo, hi = lo_box, hi_box
    if method == "taylor":
        # shrink the interval until it fits inside the Taylor disk of W
        while True:
            try:
                W_poly = approximate_potential(W, (lo, hi), degree, method="taylor", center=y)
                break
            except FitDiverged:
                if halfwidth < 0.25:
                    raise
                halfwidth /= 2
                lo, hi = max(lo_box, y - halfwidth), min(hi_box, y + halfwidth)
    else:
        W_poly = approximate_potential(W, (lo, hi), degree, method=method)
    p = max(1, W_poly.trim().degree)
    if r_max is None:
        r_max = max(1, min(DEFAULT_R_MAX, degree_cap // p))
    return expansion_coefficients(W_poly, y, r_max, degree_cap=degree_cap)


class TableCache:
    """Coefficient tables of one model keyed by base point, built on demand.

    ``k(t, x, y)`` uses the table about ``y``; ``k_from(t, x, y)`` uses the
    table about ``x`` through the symmetry ``u(t, x, y) = u(t, y, x)``.
    """

    def __init__(self, model, r_max=None, mode="borel", orders=None, **table_kwargs):
        self.model = model
        self.r_max = r_max
        self.mode = mode
        self.orders = orders
        self.table_kwargs = table_kwargs
        self._tables = {}
        self.fallbacks = 0

    def table(self, y):
        key = round(float(y), 12)
        if key not in self._tables:
            self._tables[key] = model_table(self.model, key, self.r_max, **self.table_kwargs)
        return self._tables[key]

    def _u(self, t, x, base):
        table = self.table(base)
        try:
            return assemble_u(table, t, x, self.mode, orders=self.orders).value
        except (DegenerateHankel, PoleOnContour):
            # count and fall back to the plain partial sum
            self.fallbacks += 1
            return assemble_u(table, t, x, "truncated").value

    def u(self, t, x, y):
        return self._u(t, x, y)

    def k(self, t, x, y):
        return _psi_ratio(self.model, x, y) * self._u(t, x, y)

    def k_from(self, t, x, y):
        return _psi_ratio(self.model, x, y) * self._u(t, y, x)


# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class PDESolution:
    """Density ``k(t, x0, .)`` on a uniform grid from the forward equation."""

    grid: np.ndarray
    h: float
    dt: float
    t: float
    values: np.ndarray
    x0: float
    mollifier_width: float
    mass: float
    initial_mass: float
    boundary: str = "absorbing"
    steps: int = 0
    notes: dict = field(default_factory=dict)

    def __call__(self, z):
        return self._spline(np.asarray(z, dtype=float))

    @property
    def _spline(self):
        spline = self.__dict__.get("_spline_cache")
        if spline is None:
            spline = CubicSpline(self.grid, self.values)
            object.__setattr__(self, "_spline_cache", spline)
        return spline

    @property
    def dt_le_h(self):
        return self.dt <= self.h


# central difference weights (offsets -2..2) for d/dx and d^2/dx^2
_STENCILS = {
    2: (np.array([0.0, -0.5, 0.0, 0.5, 0.0]), np.array([0.0, 1.0, -2.0, 1.0, 0.0])),
    4: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12,
        np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12),
}


def _forward_operator(beta_vals, h, order):
    """Sparse ``p -> p'' - (beta p)'`` on the interior nodes (p = 0 outside)."""
    d1, d2 = _STENCILS[order]
    b = beta_vals[1:-1]
    n = b.size
    diags, offsets = [], []
    for k, off in enumerate(range(-2, 3)):
        if d1[k] == 0 and d2[k] == 0:
            continue
        # row i, column i + off: the drift weight multiplies beta at the column
        col_beta = b[max(off, 0):n + min(off, 0)]
        diags.append(d2[k] / h**2 - d1[k] * col_beta / h)
        offsets.append(off)
    return scipy.sparse.diags(diags, offsets, shape=(n, n), format="csc")


def _crank_nicolson(beta, grid, p, duration, dt, rannacher_steps, order=4):
    h = grid[1] - grid[0]
    A = _forward_operator(beta(grid), h, order)
    eye = scipy.sparse.identity(A.shape[0], format="csc")
    steps = max(1, int(round(duration / dt)))
    dt = duration / steps
    u = p[1:-1].copy()
    implicit = scipy.sparse.linalg.splu(eye - 0.5 * dt * A)
    # Rannacher start: implicit Euler half steps damp the stiff modes
    n_half = min(2 * rannacher_steps, 2 * steps)
    for _ in range(n_half):
        u = implicit.solve(u)
    explicit = (eye + 0.5 * dt * A).tocsr()
    for _ in range(steps - n_half // 2):
        u = implicit.solve(explicit @ u)
    out = np.zeros_like(p)
    out[1:-1] = u
    return out, steps, dt


def solve_pde_forward(model, t, y, *, L=12.0, h=1 / 512, dt=1e-4, width=None,
                      rannacher_steps=2, richardson=False, mass_tol=1e-4, order=4):
    """Crank-Nicolson solution of ``dp/dt = p'' - (beta_psi p)'`` started at ``y``.

    The returned density is ``z -> k(t, y, z)``. The initial delta is
    mollified to a Gaussian of standard deviation ``width`` (default ``2h``),
    the short-time density at ``t0 = width^2 / 2`` (centred at
    ``y + beta(y) t0``); the solver therefore runs for ``t - t0``. Space
    derivatives use central differences of ``order`` 4 (default) or 2. With
    ``richardson`` the solve is repeated at twice the width and the two
    results are extrapolated linearly in ``width^2``.

    Raises
    ------
    MassLoss
        More than ``mass_tol`` of the initial mass left through the
        absorbing boundary.
    """
    t = check_positive(t, "t")
    h = check_positive(h, "h")
    dt = check_positive(dt, "dt")
    if model.d != 1:
        raise InputError("the PDE reference is one-dimensional")
    width = 2 * h if width is None else check_positive(width, "width")
    if order not in _STENCILS:
        raise InputError(f"stencil order must be 2 or 4, got {order!r}")
    n_cells = int(round(2 * L / h))
    grid = np.linspace(-L, L, n_cells + 1)
    beta = model.beta_psi.components[0]

    def run(w):
        t0 = 0.5 * w**2
        if t0 >= t:
            raise InputError(f"mollifier time {t0:g} is not below t = {t:g}")
        # short-time density: the drift moves the centre by beta(y) t0
        centre = y + float(beta(y)) * t0
        p0 = np.exp(-(grid - centre) ** 2 / (2 * w**2)) / math.sqrt(2 * math.pi * w**2)
        p0[0] = p0[-1] = 0.0
        p, steps, used_dt = _crank_nicolson(beta, grid, p0, t - t0, dt, rannacher_steps, order)
        return p, p0, steps, used_dt

    p, p0, steps, used_dt = run(width)
    notes = {"time_offset": 0.5 * width**2, "stencil_order": order}
    if richardson:
        p2, _, _, _ = run(2 * width)
        p = (4 * p - p2) / 3
        notes["richardson"] = True
    initial_mass = float(np.sum(p0) * h)
    mass = float(np.sum(p) * h)
    if abs(mass - initial_mass) > mass_tol:
        raise MassLoss(f"mass changed from {initial_mass:.8f} to {mass:.8f}; enlarge L")
    return PDESolution(grid, h, used_dt, t, p, float(y), width, mass, initial_mass,
                       steps=steps, notes=notes)


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ConsistencyReport:
    chapman_kolmogorov: float
    mass: float
    detailed_balance: float
    heat_orders: dict
    heat_residuals: dict
    heat_times: tuple
    r: int
    fallbacks: int = 0

    @property
    def min_heat_order(self):
        return min(self.heat_orders.values()) if self.heat_orders else math.nan


def _mp_orders(W_coeffs, r, dps):
    """Transport recursion in ``rho = x - y`` carried out in mpmath."""
    with mpmath.workdps(dps):
        w = [mpmath.mpf(float(c)) for c in W_coeffs]
        orders = [[mpmath.mpf(1)]]
        for j in range(1, r + 1):
            prev = orders[-1]
            forcing = [mpmath.mpf(0)] * (len(w) + len(prev) - 1)
            for i, wi in enumerate(w):
                for k, ak in enumerate(prev):
                    forcing[i + k] -= wi * ak
            for k in range(2, len(prev)):
                forcing[k - 2] += k * (k - 1) * prev[k]
            orders.append([f / (j + k) for k, f in enumerate(forcing)])
    return orders


def _poly(coeffs, z):
    acc = mpmath.mpf(0)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def heat_residual(model, y, x, times, r=8, *, degree=40, dps=50):
    """Residual of the order-``r`` truncated expansion in the heat equation.

    With ``u_r = G sum_{j<r} a_j t^j`` (``G`` the free kernel) returns
    ``|(d_t - d_x^2 + W) u_r| / G`` at each time, evaluated in ``dps``-digit
    arithmetic with the model's own ``W``. Expected to scale like ``t^(r-1)``.
    """
    table = model_table(model, y, 1, degree=degree)
    W_coeffs = table.potential.coefficients
    a = _mp_orders(W_coeffs, r - 1, dps)
    W = model.W_total
    with mpmath.workdps(dps):
        if W.is_symbolic:
            W_x = sympy.lambdify(W.symbols, W.expr, modules="mpmath")(mpmath.mpf(x))
        else:
            W_x = mpmath.mpf(float(W(x)))
        rho = mpmath.mpf(x) - mpmath.mpf(y)
        vals = [_poly(c, rho) for c in a]
        d1 = [_poly([k * c for k, c in enumerate(cs)][1:] or [0], rho) for cs in a]
        d2 = [_poly([k * (k - 1) * c for k, c in enumerate(cs)][2:] or [0], rho) for cs in a]
        out = []
        for t in times:
            tt = mpmath.mpf(t)
            S = sum(v * tt**j for j, v in enumerate(vals))
            S_t = sum(j * v * tt ** (j - 1) for j, v in enumerate(vals) if j)
            S1 = sum(v * tt**j for j, v in enumerate(d1))
            S2 = sum(v * tt**j for j, v in enumerate(d2))
            # G'/G = -rho/2t and G''/G, d_t G/G cancel against each other
            res = S_t - S2 + rho / tt * S1 + W_x * S
            out.append(float(abs(res)))
    return out


def observed_order(times, residuals):
    """Log-log slope of residual against time (``inf`` if the residual vanishes)."""
    if not np.any(np.asarray(residuals, dtype=float)):
        return math.inf
    lt = np.log(np.asarray(times, dtype=float))
    lr = np.log(np.maximum(np.asarray(residuals, dtype=float), np.finfo(float).tiny))
    return float(np.polyfit(lt, lr, 1)[0])


def _table_span(cache, base, L):
    if not isinstance(cache, TableCache):
        return -L, L
    lo, hi = cache.table(base).working_interval
    return max(lo, -L), min(hi, L)


def consistency_suite(model, t, s, points, *, cache=None, L=None, nodes=400,
                      r=8, heat_times=(0.2, 0.1, 0.05, 0.025, 0.0125)):
    """Semigroup checks of an assembled transition kernel.

    Parameters
    ----------
    model : ModelSpec
    t, s : float
        Times for the Chapman-Kolmogorov check ``int k(t,x,z) k(s,z,y) dz =
        k(t+s,x,y)``; the mass and detailed-balance checks use ``t``.
    points : sequence of (x, y)
    cache : TableCache or callable, optional
        Kernel to test. A callable ``k(t, x, y)`` is used as is (e.g. an
        exact oracle); by default a Borel-mode :class:`TableCache`.
    L, nodes : float, int
        Gauss-Legendre rule on ``[-L, L]`` for the integrals; ``L`` defaults
        to the half-width of the model's domain box.
    r, heat_times
        Truncation order and times of the heat-equation residual check.
    """
    t = check_positive(t, "t")
    s = check_positive(s, "s")
    if cache is None:
        cache = TableCache(model)
    if isinstance(cache, TableCache):
        k_x = cache.k_from   # table about x, evaluated at the moving point
        k_y = cache.k        # table about y
    else:
        k_x = k_y = cache
    L = model.L if L is None else check_positive(L, "L")
    ck = mass = db = 0.0
    for x, y in points:
        # local tables (non-polynomial W) only cover a window about their base
        # point; the Gaussian factor is negligible outside it
        lo_x, hi_x = _table_span(cache, x, L)
        lo_y, hi_y = _table_span(cache, y, L)
        z, w = legendre_rule(nodes, lo_x, hi_x, 1)
        left = np.array([k_x(t, x, zi) for zi in z])
        mass = max(mass, abs(math.fsum(w * left) - 1.0))
        z, w = legendre_rule(nodes, max(lo_x, lo_y), min(hi_x, hi_y), 1)
        left = np.array([k_x(t, x, zi) for zi in z])
        right = np.array([k_y(s, zi, y) for zi in z])
        ck = max(ck, abs(math.fsum(w * left * right) - k_y(t + s, x, y)))
        psi2_x = float(model.psi(x)) ** 2
        psi2_y = float(model.psi(y)) ** 2
        # tables about y and about x respectively
        db = max(db, abs(psi2_x * k_y(t, x, y) - psi2_y * k_y(t, y, x)))
    orders = {}
    residuals = {}
    for x, y in points:
        res = heat_residual(model, y, x, heat_times, r)
        residuals[(x, y)] = tuple(res)
        orders[(x, y)] = observed_order(heat_times, res)
    return ConsistencyReport(ck, mass, db, orders, residuals, tuple(heat_times), r,
                             getattr(cache, "fallbacks", 0))
