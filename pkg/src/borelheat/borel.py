"""Borel-Pade-Laplace resummation of (possibly divergent) power series.

A series ``sum a_r t^r`` is mapped to its Borel transform ``sum a_r tau^r / r!``,
continued off its disk of convergence by a Pade approximant ``g`` and resummed
by the Laplace integral

    f(t) = (1/t) int_0^inf g(tau) exp(-tau/t) dtau = int_0^inf g(t u) exp(-u) du,

evaluated with Gauss-Laguerre quadrature.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import cmath
import math

import numpy as np
import scipy.linalg

from ._validation import check_int, check_positive
from .coeffs import PolynomialRep
from .exceptions import DegenerateHankel, InputError, PoleOnContour
from .quadrature import MAX_LAGUERRE_NODES, laguerre_rule

CONDITION_LIMIT = 1e12
MATCH_RTOL = 1e-10
POLE_CLEARANCE_MIN = 1e-8
QUADRATURE_RTOL = 1e-10
STABILITY_RTOL = 1e-4


@dataclass(frozen=True)
class FormalSeries:
    """Coefficients ``a_0, a_1, ...`` of a formal power series in ``t``."""

    coeffs: tuple

    def __post_init__(self):
        vals = tuple(np.asarray(self.coeffs).ravel().tolist())
        if not vals:
            raise InputError("a formal series needs at least one coefficient")
        # Python ints (e.g. exact factorials) are kept exact
        if not all(isinstance(v, int) or cmath.isfinite(v) for v in vals):
            raise InputError("series coefficients must be finite")
        object.__setattr__(self, "coeffs", vals)

    def __len__(self):
        return len(self.coeffs)

    @property
    def r_max(self):
        return len(self.coeffs) - 1

    def partial_sum(self, t, order=None):
        """``sum_{r <= order} a_r t^r`` (all terms by default)."""
        order = self.r_max if order is None else order
        return math.fsum(float(np.real(a)) * t**r for r, a in enumerate(self.coeffs[:order + 1]))


@dataclass(frozen=True)
class BorelSeries:
    """Borel coefficients ``b_r = a_r / r!``."""

    coeffs: tuple

    def __len__(self):
        return len(self.coeffs)


def _exact_quotient(value, r):
    return float(Fraction(value) / math.factorial(r))


def borel_transform(s):
    """Borel coefficients of a series, ``b_r = a_r / r!``.

    Each quotient is formed exactly in rational arithmetic and rounded once,
    so ``r!`` never overflows and zero coefficients need no special care.

    >>> borel_transform(FormalSeries([1, 1, 2, 6, 24])).coeffs
    (1.0, 1.0, 1.0, 1.0, 1.0)
    """
    if not isinstance(s, FormalSeries):
        s = FormalSeries(s)
    out = []
    for r, a in enumerate(s.coeffs):
        if isinstance(a, complex):
            out.append(complex(_exact_quotient(a.real, r), _exact_quotient(a.imag, r)))
        else:
            out.append(_exact_quotient(a, r))
    return BorelSeries(tuple(out))


# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class RationalApproximant:
    """Pade approximant ``numerator / denominator`` of a Borel transform.

    The polynomials are stored in the rescaled variable ``tau / scale``, which
    keeps their coefficients O(1); ``denominator(0) == 1``. Call the object
    with ``tau`` directly.
    """

    numerator: PolynomialRep
    denominator: PolynomialRep
    order: tuple
    poles: tuple
    scale: float = 1.0
    condition: float = 1.0

    def __call__(self, tau):
        z = np.asarray(tau) / self.scale
        return self.numerator(z) / self.denominator(z)

    def evaluate(self, tau):
        """Complex-safe evaluation (``PolynomialRep`` casts to float)."""
        z = np.asarray(tau, dtype=complex) / self.scale
        num = np.polynomial.polynomial.polyval(z, self.numerator.coefficients)
        den = np.polynomial.polynomial.polyval(z, self.denominator.coefficients)
        return num / den

    def taylor(self, n_terms):
        """First ``n_terms`` Taylor coefficients in ``tau``."""
        p = self.numerator.coefficients
        q = self.denominator.coefficients
        c = np.zeros(n_terms)
        for k in range(n_terms):
            acc = p[k] if k < p.size else 0.0
            j = np.arange(1, min(k, q.size - 1) + 1)
            if j.size:
                acc -= math.fsum(q[j] * c[k - j])
            c[k] = acc
        return c / self.scale ** np.arange(n_terms)

    @property
    def pole_clearance(self):
        return pole_clearance(self.poles)


def pole_clearance(poles):
    """Distance from the ray ``[0, inf)`` to the nearest pole (``inf`` if none)."""
    best = math.inf
    for p in poles:
        d = abs(p.imag) if p.real >= 0 else abs(p)
        best = min(best, d)
    return best


def _scale_for(b):
    # LS slope of log|b_r| so that b_r * scale^r stays O(1)
    r = np.arange(len(b))
    mag = np.abs(np.asarray(b, dtype=float))
    keep = mag > 0
    if keep.sum() < 2:
        return 1.0
    slope = np.polyfit(r[keep], np.log(mag[keep]), 1)[0]
    scale = math.exp(-slope)
    return float(np.clip(scale, 1e-6, 1e6))


def pade_continue(b, m, n):
    """``[m/n]`` Pade approximant of a Borel series.

    The variable is first rescaled so the coefficients are O(1). The
    denominator comes from the Toeplitz system of the matching conditions,
    solved with column equilibration and column-pivoted QR; the match through
    order ``m + n`` is then checked by re-expansion.

    Raises
    ------
    DegenerateHankel
        The (equilibrated) system has condition number above 1e12, or the
        re-expansion misses the input by more than 1e-10 relative. Retrying
        with ``(m - 1, n - 1)`` is the usual remedy.

    Examples
    --------
    >>> g = pade_continue(BorelSeries((1.0, -1.0, 1.0, -1.0)), 0, 1)
    >>> g.poles
    ((-1+0j),)
    """
    if not isinstance(b, BorelSeries):
        b = BorelSeries(tuple(b))
    m = check_int(m, "m", minimum=0)
    n = check_int(n, "n", minimum=0)
    if m + n + 1 > len(b):
        raise InputError(f"[{m}/{n}] needs {m + n + 1} coefficients, got {len(b)}")
    raw = np.asarray(b.coeffs[:m + n + 1], dtype=float)
    scale = _scale_for(raw)
    c = raw * scale ** np.arange(raw.size)

    def coef(k):
        return c[k] if k >= 0 else 0.0

    q = np.zeros(n + 1)
    q[0] = 1.0
    cond = 1.0
    if n > 0:
        A = np.array([[coef(m + 1 + i - j) for j in range(1, n + 1)] for i in range(n)])
        rhs = -np.array([coef(m + 1 + i) for i in range(n)])
        norms = np.linalg.norm(A, axis=0)
        norms[norms == 0] = 1.0
        Ae = A / norms
        cond = float(np.linalg.cond(Ae)) if np.any(Ae) else math.inf
        if not np.any(rhs):
            # the series already terminates at order m: q = 1 matches exactly
            cond = 1.0
        elif not cond <= CONDITION_LIMIT:
            raise DegenerateHankel(f"[{m}/{n}] system condition {cond:.3g} exceeds {CONDITION_LIMIT:g}")
        else:
            Q, R, piv = scipy.linalg.qr(Ae, pivoting=True)
            z = scipy.linalg.solve_triangular(R, Q.T @ rhs)
            sol = np.empty(n)
            sol[piv] = z
            q[1:] = sol / norms
    p = np.array([math.fsum(q[j] * coef(k - j) for j in range(min(k, n) + 1))
                  for k in range(m + 1)])

    num = PolynomialRep(p)
    den = PolynomialRep(q)
    q_trim = np.trim_zeros(q, "b")
    roots = np.roots(q_trim[::-1]) if q_trim.size > 1 else np.array([])
    poles = tuple(sorted((complex(z) * scale for z in roots), key=lambda z: (abs(z), z.imag)))
    approx = RationalApproximant(num, den, (m, n), poles, scale, cond)

    check = approx.taylor(m + n + 1) * scale ** np.arange(m + n + 1)
    floor = 1e3 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(c))))
    miss = np.abs(check - c) > MATCH_RTOL * np.abs(c) + floor
    if np.any(miss):
        worst = int(np.argmax(np.abs(check - c)))
        raise DegenerateHankel(f"[{m}/{n}] re-expansion misses coefficient {worst}")
    return approx


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class BorelSumResult:
    """Laplace-resummed value with its diagnostics.

    ``trusted`` requires positive pole clearance and a converged quadrature.
    """

    value: float
    t: float
    quadrature_error: float
    pole_clearance: float
    truncation_order: int
    order: tuple = (0, 0)
    poles: tuple = ()
    nodes: int = 0
    converged: bool = True
    attempts: tuple = field(default=())

    @property
    def trusted(self):
        return self.pole_clearance > POLE_CLEARANCE_MIN and self.converged


def laplace_sum(g, t, *, rtol=QUADRATURE_RTOL, start_nodes=16):
    """``(1/t) int_0^inf g(tau) exp(-tau/t) dtau`` by Gauss-Laguerre quadrature.

    The node count doubles from ``start_nodes`` until the relative change
    drops below ``rtol`` (at most 256 nodes); ``quadrature_error`` is the last
    relative change.

    Raises
    ------
    PoleOnContour
        A pole of ``g`` lies within 1e-8 of the positive real axis.
    """
    t = check_positive(t, "t")
    poles = tuple(getattr(g, "poles", ()))
    clearance = pole_clearance(poles)
    if clearance <= POLE_CLEARANCE_MIN:
        raise PoleOnContour(f"pole within {clearance:.3g} of the Laplace contour")
    order = tuple(getattr(g, "order", (0, 0)))
    previous = None
    change = math.inf
    nodes = start_nodes
    value = math.nan
    while nodes <= MAX_LAGUERRE_NODES:
        u, w = laguerre_rule(nodes)
        value = math.fsum(w * np.real(g(t * u)))
        if previous is not None:
            change = abs(value - previous) / max(abs(value), np.finfo(float).tiny)
            if change < rtol:
                break
        previous = value
        nodes *= 2
    converged = change < rtol
    nodes = min(nodes, MAX_LAGUERRE_NODES)
    return BorelSumResult(
        value=float(value), t=t, quadrature_error=float(change),
        pole_clearance=float(clearance), truncation_order=sum(order),
        order=order, poles=poles, nodes=nodes, converged=converged)


def default_orders(r_max):
    half = r_max // 2
    return half, half


def borel_sum(s, t, orders=None, *, retry=True):
    """Borel sum of a formal series at ``t`` through the full pipeline.

    With ``retry`` the orders step down ``(m, n) -> (m - 1, n - 1)`` while the
    Pade stage is degenerate or a pole sits on the contour; the orders tried
    are recorded in ``attempts``.

    >>> round(borel_sum(FormalSeries([1, -1, 0.5]), 0.2, (2, 0)).value, 12)
    0.82
    """
    if not isinstance(s, FormalSeries):
        s = FormalSeries(s)
    b = borel_transform(s)
    m, n = default_orders(s.r_max) if orders is None else orders
    attempts = []
    while True:
        attempts.append((m, n))
        try:
            g = pade_continue(b, m, n)
            result = laplace_sum(g, t)
        except (DegenerateHankel, PoleOnContour):
            if not retry or n == 0:
                raise
            m, n = m - 1, n - 1
            continue
        return BorelSumResult(**{**result.__dict__, "attempts": tuple(attempts)})


@dataclass(frozen=True)
class StabilityReport:
    values: dict
    spread: float
    stable: bool
    reference: BorelSumResult


def stability_sweep(s, t, orders=None, *, rtol=STABILITY_RTOL):
    """Compare the Borel sum at ``(m, n)`` with sums at adjacent orders.

    Neighbours are ``(m + 1, n)``, ``(m, n + 1)`` and ``(m + 1, n + 1)`` when
    the series is long enough; if none of them is usable, ``(m - 1, n - 1)``
    is used instead. ``(m, n)`` is the order actually reached by
    :func:`borel_sum` after any retries. ``spread`` is the largest relative
    deviation from the central value and ``stable`` is False above ``rtol``.
    """
    if not isinstance(s, FormalSeries):
        s = FormalSeries(s)
    m, n = default_orders(s.r_max) if orders is None else orders
    reference = borel_sum(s, t, (m, n))
    m, n = reference.order
    values = {(m, n): reference.value}

    def attempt(mm, nn):
        if mm < 0 or nn < 0 or mm + nn > s.r_max:
            return
        try:
            values[(mm, nn)] = borel_sum(s, t, (mm, nn), retry=False).value
        except (DegenerateHankel, PoleOnContour):
            pass

    for mm, nn in ((m + 1, n), (m, n + 1), (m + 1, n + 1)):
        attempt(mm, nn)
    if len(values) == 1:
        attempt(m - 1, n - 1)
    ref = reference.value
    spread = max(abs(v - ref) for v in values.values()) / max(abs(ref), np.finfo(float).tiny)
    return StabilityReport(values, float(spread), bool(spread <= rtol), reference)


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class GrowthReport:
    """Largest ``|g(tau)| exp(-C sqrt(tau))`` over the sampled ``tau``."""

    max_ratio: float
    tau_at_max: float
    C: float
    tau_max: float
    n_samples: int
    respected: bool


def growth_check(g, cert, tau_max, n_samples=200):
    """Sample ``g`` against the bound ``exp(C sqrt(tau))`` on ``[0, tau_max]``.

    ``cert`` is a regularity certificate (anything with a ``C`` attribute) or
    the constant itself. Points are ``tau = 0`` plus ``n_samples`` log-spaced
    values. Diagnostic only.
    """
    tau_max = check_positive(tau_max, "tau_max")
    n_samples = check_int(n_samples, "n_samples", minimum=200)
    C = float(getattr(cert, "C", cert))
    tau = np.concatenate([[0.0], np.logspace(math.log10(tau_max) - 6, math.log10(tau_max), n_samples)])
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.abs(np.asarray(g(tau), dtype=float))
        ratio = vals * np.exp(-C * np.sqrt(tau))
    ratio = np.where(np.isfinite(ratio), ratio, np.inf)
    i = int(np.argmax(ratio))
    worst = float(ratio[i])
    return GrowthReport(worst, float(tau[i]), C, tau_max, int(tau.size), worst <= 1.0 + 1e-12)
