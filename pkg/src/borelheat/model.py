"""Potentials from symmetric measures, ground-state transforms and the OU-shifted model.

Conventions: the diffusion generator is ``Delta + beta . grad`` (unit
diffusion coefficient in front of the Laplacian), the ground-state energy is
fixed to zero, and every field below is a :class:`~borelheat.fields.ScalarField`.
"""

from collections import defaultdict
from dataclasses import dataclass, field
import math

import numpy as np
import sympy

from ._validation import check_positive
from .exceptions import (
    InputError,
    MissingDerivative,
    NonPositiveGroundState,
    NormalizationDivergent,
    SymmetryViolation,
)
from .fields import DriftField, ScalarField
from .quadrature import integrate_box

_LOCATION_DIGITS = 12


@dataclass(frozen=True)
class SymmetricMeasure:
    """Finite atomic complex measure with ``mu(-A) = mu(A)``.

    Parameters
    ----------
    atoms : sequence of (location, weight)
        ``location`` is a float (d = 1) or a length-``d`` sequence; ``weight``
        may be complex.
    dimension : int, optional
        Inferred from the first atom when omitted.

    Raises
    ------
    SymmetryViolation
        If the aggregated weights at ``xi`` and ``-xi`` differ, or if an
        imaginary weight survives aggregation (it would make the potential
        complex).
    """

    atoms: tuple
    dimension: int = None

    def __post_init__(self):
        atoms = []
        for loc, weight in self.atoms:
            xi = np.atleast_1d(np.asarray(loc, dtype=float))
            atoms.append((tuple(float(v) for v in xi), complex(weight)))
        if not atoms:
            raise InputError("a measure needs at least one atom")
        dim = len(atoms[0][0]) if self.dimension is None else int(self.dimension)
        if any(len(xi) != dim for xi, _ in atoms):
            raise InputError("all atom locations must have the measure's dimension")
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "dimension", dim)
        _check_symmetry(self.aggregated())

    def aggregated(self):
        """Weights summed per distinct location."""
        agg = defaultdict(complex)
        for xi, w in self.atoms:
            agg[tuple(round(v, _LOCATION_DIGITS) + 0.0 for v in xi)] += w
        return dict(agg)

    @property
    def total_variation(self):
        return float(sum(abs(w) for _, w in self.atoms))

    @property
    def locations(self):
        return np.array([xi for xi, _ in self.atoms])

    @property
    def weights(self):
        return np.array([w for _, w in self.atoms])


def _check_symmetry(agg, tol=1e-12):
    scale = max(1.0, max(abs(w) for w in agg.values()))
    for xi, w in agg.items():
        mirror = tuple(-v + 0.0 for v in xi)
        partner = agg.get(mirror)
        if partner is None or abs(partner - w) > tol * scale:
            raise SymmetryViolation(f"atom at {xi} has no matching atom at {mirror}")
        if abs(w.imag) > tol * scale:
            raise SymmetryViolation(
                f"imaginary weight {w.imag:g} at {xi} would make the potential complex")


@dataclass(frozen=True)
class RegularityCertificate:
    """Constants of the Borel-transform growth bound ``exp(C |tau|^(1/2))``."""

    a: float
    R: float
    kappa: float
    C: float
    integral_value: float


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Gradient-drift diffusion ``dX = beta_psi(X) dt + sqrt(2) dW`` with its
    Schrodinger picture ``-Delta + W_total``.
    """

    d: int
    omega: float
    phi: ScalarField
    c_phi: float
    psi: ScalarField
    beta_phi: DriftField
    beta_psi: DriftField
    V_phi: ScalarField
    V_tilde: ScalarField
    W_total: ScalarField
    measure: SymmetricMeasure = None
    certificate: RegularityCertificate = None
    domain_box: tuple = field(default=None)
    name: str = None

    @property
    def L(self):
        return max(max(abs(lo), abs(hi)) for lo, hi in self.domain_box)

    def check_invariants(self, n=41, box=None):
        """Maximum defects of the model identities on a sample grid.

        Returns a dict with keys ``beta_psi`` (``beta_psi - (beta_phi - omega x)``),
        ``V_tilde`` (expanded formula), ``schrodinger`` (``V_tilde psi - Delta psi``)
        and ``normalization`` (``|int psi^2 - 1|``).
        """
        if box is None:
            half = min(self.L, 6.0 / math.sqrt(self.omega)) if self.omega > 0 else self.L
            box = [(-half, half)] * self.d
        probe = ScalarField(sympy.Integer(0), self.d, box)
        grid = probe.sample_grid(n if self.d == 1 else max(5, int(round(n ** (1 / self.d)))))
        pts = grid.reshape(-1, 1) if self.d == 1 else grid
        x2 = np.sum(pts**2, axis=1)
        b_phi = self.beta_phi(grid).reshape(len(pts), self.d)
        b_psi = self.beta_psi(grid).reshape(len(pts), self.d)
        x_dot_b = np.sum(pts * b_phi, axis=1)
        expanded = (self.V_phi(grid).reshape(-1) + 0.25 * self.omega**2 * x2
                    - 0.5 * self.omega * x_dot_b - 0.5 * self.omega * self.d)
        psi = self.psi(grid).reshape(-1)
        if self.omega == 0:
            # free model: psi = 1 is not normalizable, nothing to check
            norm = 1.0
        else:
            norm, _, _ = integrate_box(lambda p: self.psi(p if self.d > 1 else p[:, 0]) ** 2,
                                       self.domain_box)
        return {
            "beta_psi": float(np.max(np.abs(b_psi - (b_phi - self.omega * pts)))),
            "V_tilde": float(np.max(np.abs(self.V_tilde(grid).reshape(-1) - expanded))),
            "schrodinger": float(np.max(np.abs(
                self.V_tilde(grid).reshape(-1) * psi - self.psi.laplacian(grid).reshape(-1)))),
            "normalization": abs(norm - 1.0),
        }


# ---------------------------------------------------------------------------
def potential_from_measure(mu, domain_box=None):
    """Potential ``V(x) = -int exp(i x.xi) mu(dxi)`` of a symmetric atomic measure.

    Summed pairwise in cosine form, so the result is exactly real; derivatives
    are exact.

    >>> V = potential_from_measure(SymmetricMeasure([(1.0, 0.5), (-1.0, 0.5)]))
    >>> float(V(0.0))
    -1.0
    """
    if not isinstance(mu, SymmetricMeasure):
        mu = SymmetricMeasure(tuple(mu))
    d = mu.dimension
    probe = ScalarField(sympy.Integer(0), d, domain_box)
    xs = probe.symbols
    expr = sympy.Integer(0)
    for xi, w in mu.aggregated().items():
        phase = sum(sympy.Float(v) * s for v, s in zip(xi, xs))
        expr -= sympy.Float(w.real) * sympy.cos(phase)
    return ScalarField(expr, d, probe.domain_box, symbols=xs, name="V_mu")


def _positive_on_grid(phi):
    grid = phi.sample_grid(201 if phi.dimension == 1 else 21)
    vals = phi(grid)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise NonPositiveGroundState(f"{phi!r} is not strictly positive on its domain box")


def drift_from_ground_state(phi):
    """Drift ``beta = 2 grad(phi) / phi`` of a positive ground state.

    Raises NonPositiveGroundState when ``phi <= 0`` at a sample point.
    """
    _positive_on_grid(phi)
    if phi.is_symbolic:
        comps = [phi.with_expr(2 * sympy.diff(phi.expr, s) / phi.expr) for s in phi.symbols]
    else:
        comps = [
            ScalarField(lambda p, i=i: 2 * phi.partial(i, p) / phi(p) if phi.dimension > 1
                        else 2 * phi.partial(0, p[:, 0]) / phi(p[:, 0]),
                        phi.dimension, phi.domain_box, derivative_order=1)
            for i in range(phi.dimension)
        ]
    return DriftField(comps, gradient_flag=True)


def potential_from_drift(beta):
    """Schrodinger potential ``V = |beta|^2 / 4 + div(beta) / 2`` of a drift."""
    comps = beta.components
    if any(c.derivative_order < 1 for c in comps):
        raise MissingDerivative("divergence needs first derivatives of every component")
    if all(c.is_symbolic for c in comps):
        xs = comps[0].symbols
        expr = sum(c.expr**2 for c in comps) / 4 + sum(
            sympy.diff(c.expr, s) for c, s in zip(comps, xs)) / 2
        return comps[0].with_expr(expr, name="V_beta")
    d = beta.dimension

    def value(p):
        pts = p if d > 1 else p[:, 0]
        b = np.asarray(beta(pts)).reshape(len(p), d)
        return 0.25 * np.sum(b**2, axis=1) + 0.5 * beta.divergence(pts).reshape(-1)

    return ScalarField(value, d, comps[0].domain_box, derivative_order=0, name="V_beta")


def regularity_certificate(mu, a, R, kappa):
    """Growth-bound constant ``C = 2 e^(kappa/a) (sum |w| e^(a xi^2/2 + R|xi|))^(1/2)``."""
    a = check_positive(a, "a")
    R = check_positive(R, "R", allow_zero=True)
    kappa = check_positive(kappa, "kappa")
    if not isinstance(mu, SymmetricMeasure):
        mu = SymmetricMeasure(tuple(mu))
    norms = np.linalg.norm(mu.locations, axis=1)
    integral = float(np.sum(np.abs(mu.weights) * np.exp(0.5 * a * norms**2 + R * norms)))
    C = 2.0 * math.exp(kappa / a) * math.sqrt(integral)
    return RegularityCertificate(a=a, R=R, kappa=kappa, C=C, integral_value=integral)


def _normalization_integral(phi_sq, omega, d, L):
    """Value of ``int phi^2 e^(-omega|x|^2/2) / (4 pi/omega)^d`` over ``[-L, L]^d``."""
    scale = (2 * math.pi * 2 / omega) ** d

    def integrand(p):
        pts = p if d > 1 else p[:, 0]
        return phi_sq(pts) * np.exp(-0.5 * omega * np.sum(p**2, axis=1)) / scale

    return integrate_box(integrand, [(-L, L)] * d,
                         max_order=128 if d == 1 else 32)


def _choose_box(phi_sq, omega, d, tail=1e-10, max_steps=12):
    # Gaussian tail bound first, then grow until the mass outside is negligible
    L = math.sqrt(4.0 * math.log(1.0 / tail) / omega) + 1.0
    for _ in range(max_steps):
        inner, _, ok_inner = _normalization_integral(phi_sq, omega, d, L)
        outer, _, ok_outer = _normalization_integral(phi_sq, omega, d, 1.5 * L)
        if not (ok_inner and ok_outer) or not np.isfinite(outer) or outer <= 0:
            raise NormalizationDivergent("normalization quadrature did not converge")
        if abs(outer - inner) <= tail * outer:
            return L, inner
        L *= 1.5
    raise NormalizationDivergent(
        "phi^2 exp(-omega|x|^2/2) does not look integrable: mass keeps growing with the box")


def build_ou_shifted_model(phi, omega, d=1, mu=None, *, L=None, certificate=None,
                           name=None):
    """Ornstein-Uhlenbeck-shifted model generated by a positive function ``phi``.

    ``psi = c_phi phi e^(-omega|x|^2/4) / (4 pi/omega)^(d/2)`` with ``c_phi``
    chosen so that ``int psi^2 = 1``; the drift is ``beta_psi = 2 grad ln psi``
    and the Schrodinger potential ``V_tilde = |beta_psi|^2/4 + div(beta_psi)/2``.

    Parameters
    ----------
    phi : ScalarField or str
        Positive, symbolic ground state (an expression string is parsed with
        the whitelist grammar).
    omega : float
        Confinement strength, > 0.
    d : int
    mu : SymmetricMeasure, optional
        Measure representing ``V_phi``; stored for certificates only.
    L : float, optional
        Half-width of the domain box; chosen adaptively when omitted.
    certificate : RegularityCertificate, optional
    """
    omega = check_positive(omega, "omega")
    if isinstance(phi, str):
        phi = ScalarField.from_expression(phi, d)
    if phi.dimension != d:
        raise InputError(f"phi has dimension {phi.dimension}, expected {d}")
    if not phi.is_symbolic:
        raise InputError("build_ou_shifted_model needs a symbolic phi (exact derivatives)")
    if phi.derivative_order < 2:
        raise MissingDerivative("phi must be differentiable to order 2")

    phi_sq = phi.with_expr(phi.expr**2)
    if L is None:
        L, integral = _choose_box(phi_sq, omega, d)
    else:
        L = check_positive(L, "L")
        integral, _, ok = _normalization_integral(phi_sq, omega, d, L)
        if not ok:
            raise NormalizationDivergent("normalization quadrature did not converge")
    box = tuple([(-L, L)] * d)
    c_phi = integral ** -0.5

    xs = phi.symbols
    r2 = sum(s**2 for s in xs)
    om = sympy.Float(omega)
    gauss = sympy.exp(-om * r2 / 4) / (2 * sympy.pi * 2 / om) ** sympy.Rational(d, 2)
    psi_expr = sympy.Float(c_phi) * phi.expr * gauss

    def make(expr, label):
        return ScalarField(expr, d, box, symbols=xs, name=label)

    phi_f = make(phi.expr, "phi")
    _positive_on_grid(phi_f)
    b_phi = [2 * sympy.diff(phi.expr, s) / phi.expr for s in xs]
    # beta_psi straight from psi, so the (beta_phi - omega x) identity stays a real check
    log_psi = sympy.expand_log(sympy.log(psi_expr), force=True)
    b_psi = [2 * sympy.diff(log_psi, s) for s in xs]
    v_phi = sum(b**2 for b in b_phi) / 4 + sum(sympy.diff(b, s) for b, s in zip(b_phi, xs)) / 2
    v_tilde = sum(b**2 for b in b_psi) / 4 + sum(sympy.diff(b, s) for b, s in zip(b_psi, xs)) / 2

    V_tilde = make(v_tilde, "V_tilde")
    return ModelSpec(
        d=d,
        omega=omega,
        phi=phi_f,
        c_phi=c_phi,
        psi=make(psi_expr, "psi"),
        beta_phi=DriftField([make(b, "beta_phi") for b in b_phi], gradient_flag=True),
        beta_psi=DriftField([make(b, "beta_psi") for b in b_psi], gradient_flag=True),
        V_phi=make(v_phi, "V_phi"),
        V_tilde=V_tilde,
        W_total=V_tilde,
        measure=mu,
        certificate=certificate,
        domain_box=box,
        name=name,
    )


def build_free_model(d=1, L=10.0):
    """Pure heat flow: ``phi = psi = 1``, ``omega = 0``, no drift, ``W = 0``.

    ``psi`` is not normalizable here, so ``c_phi`` is set to 1 and the
    normalization check is skipped.
    """
    L = check_positive(L, "L")
    box = tuple([(-L, L)] * d)
    zero = ScalarField(sympy.Integer(0), d, box, name="zero")
    one = ScalarField(sympy.Integer(1), d, box, symbols=zero.symbols, name="one")
    drift = DriftField([zero] * d, gradient_flag=True)
    return ModelSpec(d=d, omega=0.0, phi=one, c_phi=1.0, psi=one, beta_phi=drift,
                     beta_psi=drift, V_phi=zero, V_tilde=zero, W_total=zero,
                     measure=None, certificate=None, domain_box=box, name="free")
