"""Energy, Gauss constraint, smeared momentum map and electric flux.

Phase points store the electric field as the 1-form ``calE`` with
``E = *calE`` (flat Hodge star on the ``sigma`` chart).

Partial integration is exact for the spectral operators, so the smeared
constraint splits into bulk and boundary terms up to contributions from the
coordinate faces at the origin and on the polar axis. For fields regular
there those are spectrally small and are reported as ``defect``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lie
from .forms import (
    LieForm,
    conformal_reweight,
    covariant_derivative,
    curvature,
    hodge,
    integrate_pairing,
    l2_norm_sq,
)
from .gauge import fundamental_vector
from .geometry import FLAT, ROUND, SIGMA, SIGMA_HAT

H_MIN, H_MAX = 1e-6, 1e-2
DEFAULT_STEP = 1e-4
BOUNDARY = "boundary"


@dataclass(frozen=True, eq=False)
class PhasePoint:
    A: LieForm
    calE: LieForm

    def __post_init__(self):
        if self.A.degree != 1 or self.calE.degree != 1:
            raise ValueError("phase point needs a 1-form connection and a 1-form electric field")
        if self.A.chart != SIGMA:
            raise ValueError("phase points live on the sigma chart")
        self.A._check(self.calE)

    @classmethod
    def from_E(cls, A: LieForm, E: LieForm):
        if E.degree != 2:
            raise ValueError("E must be a 2-form")
        return cls(A, hodge(E, FLAT))

    @property
    def E(self) -> LieForm:
        return hodge(self.calE, FLAT)

    @property
    def grid(self):
        return self.A.grid

    @property
    def group_tag(self):
        return self.A.group_tag

    def shifted(self, h, delta):
        """``(A + h dA, E + h dE)`` for a tangent vector ``delta = (dA, dE)``."""
        dA, dE = delta
        return PhasePoint.from_E(self.A + h * dA, self.E + h * dE)

    def consistency_error(self):
        """How far ``*(*calE)`` is from ``calE`` (should be roundoff)."""
        return float(np.max(np.abs(hodge(self.E, FLAT).data - self.calE.data)))


@dataclass(frozen=True)
class SplitConstraint:
    bulk: float
    boundary: float
    total: float
    defect: float = 0.0

    @property
    def stokes_residual(self):
        return self.total - self.bulk - self.boundary

    @property
    def relative_residual(self):
        return abs(self.stokes_residual) / max(1.0, abs(self.total))

    def to_dict(self):
        return {
            "bulk": self.bulk,
            "boundary": self.boundary,
            "total": self.total,
            "defect": self.defect,
            "stokes_residual": self.stokes_residual,
        }


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------


def energy(alpha: LieForm, F: LieForm) -> float:
    """``1/2 ||alpha||^2 + 1/2 ||F||^2`` on the flat chart."""
    if alpha.degree != 1 or F.degree != 2:
        raise ValueError("energy takes a 1-form velocity and a 2-form curvature")
    alpha._check(F)
    return 0.5 * l2_norm_sq(alpha, FLAT) + 0.5 * l2_norm_sq(F, FLAT)


def lagrangian(A: LieForm, alpha: LieForm) -> float:
    """``1/2 ||alpha||^2 - 1/2 ||F(A)||^2``."""
    A._check(alpha)
    return 0.5 * l2_norm_sq(alpha, FLAT) - 0.5 * l2_norm_sq(curvature(A), FLAT)


def gauss_constraint(p: PhasePoint) -> LieForm:
    """``D_A E = dE + [A ^ E]``."""
    return covariant_derivative(p.A, p.E)


def _check_parameter(p, xi):
    if xi.degree != 0:
        raise ValueError("gauge parameter must be a 0-form")
    p.A._check(xi)


def smeared_constraint(p: PhasePoint, xi: LieForm) -> float:
    """``<mu, xi> = int Tr(D_A E ^ xi)``."""
    _check_parameter(p, xi)
    return integrate_pairing(gauss_constraint(p), xi)


def _face_terms(E: LieForm, xi: LieForm):
    """Polynomial extensions of ``Tr(E ^ xi)`` to the coordinate faces.

    Returns ``(outer, defect)``: the integral over the sphere at ``R = pi``
    and the combined origin and polar-axis contributions.
    """
    grid = E.grid
    w_sph = grid.sphere_weights
    x = xi.data[0]
    # products of interpolants, not interpolants of products
    tp, rp = E.data[2], E.data[1]
    outer = float(np.sum(w_sph * lie.pair_coeffs(grid.at_outer(tp), grid.at_outer(x))))
    inner = float(np.sum(w_sph * lie.pair_coeffs(grid.at_inner(tp), grid.at_inner(x))))
    # r-phi component against the theta faces, integrated over dR (or dr) dphi
    w_rp = (grid.w_R[:, None] * grid.w_phi[None, :]) / (grid.K[:, None] if E.chart == SIGMA else 1.0)

    def face(theta0):
        row = grid.polar_row(theta0)
        return lie.pair_coeffs(np.tensordot(row, rp, axes=(0, 1)), np.tensordot(row, x, axes=(0, 1)))

    # d(E_rphi xi) enters with a minus sign from the wedge ordering
    polar = -float(np.sum(w_rp * (face(np.pi) - face(0.0))))
    return outer, polar - inner


def boundary_term(p: PhasePoint, xi: LieForm) -> float:
    """``int_{boundary} Tr(E ^ xi)`` on the sphere at infinity."""
    _check_parameter(p, xi)
    return _face_terms(p.E, xi)[0]


def bulk_boundary_split(p: PhasePoint, xi: LieForm) -> SplitConstraint:
    """``<mu, xi> = -int Tr(E ^ D_A xi) + int_{boundary} Tr(E ^ xi)``."""
    _check_parameter(p, xi)
    E = p.E
    total = integrate_pairing(covariant_derivative(p.A, E), xi)
    bulk = -integrate_pairing(E, covariant_derivative(p.A, xi))
    outer, defect = _face_terms(E, xi)
    return SplitConstraint(bulk, outer, total, defect)


# ---------------------------------------------------------------------------
# electric flux
# ---------------------------------------------------------------------------


def _sphere_integral(tp, grid):
    return np.tensordot(grid.sphere_weights, tp, axes=([0, 1], [0, 1]))


def hat_electric_field(p: PhasePoint) -> LieForm:
    """``E_hat`` computed on the compactified chart.

    ``calE`` is carried over to ``sigma_hat`` by the conformal reweighting,
    dualized with the round metric and then multiplied by ``K^{-1}``.
    """
    cal_hat = conformal_reweight(p.calE, "to_sigma_hat")
    star = hodge(cal_hat, ROUND)
    return star * (1.0 / star.grid.K_b * np.ones(star.grid.shape))


def electric_flux(p: PhasePoint, shell=BOUNDARY, chart=SIGMA) -> lie.AlgebraElement:
    """Flux of ``E`` through a radial shell or through the sphere at infinity.

    ``shell`` is a radial layer index or ``"boundary"``. With
    ``chart="sigma_hat"`` the field is first transported to the compactified
    chart (see :func:`hat_electric_field`).
    """
    if chart == SIGMA:
        E = p.E
    elif chart == SIGMA_HAT:
        E = hat_electric_field(p)
    else:
        raise ValueError(f"unknown chart {chart!r}")
    grid = E.grid
    tp = E.data[2]
    if shell == BOUNDARY:
        layer = grid.at_outer(tp)
    else:
        layer = tp[int(shell)]
    return lie.AlgebraElement(p.group_tag, _sphere_integral(layer, grid))


def shell_fluxes(p: PhasePoint) -> np.ndarray:
    """Flux through every radial layer, shape ``(n_r, dim)``."""
    tp = p.E.data[2]
    return np.tensordot(tp, p.grid.sphere_weights, axes=([1, 2], [0, 1]))


# ---------------------------------------------------------------------------
# symplectic structure
# ---------------------------------------------------------------------------


def symplectic_eval(delta1, delta2) -> float:
    """``omega(d1, d2) = int Tr(d1_A ^ d2_E) - int Tr(d2_A ^ d1_E)``."""
    a1, e1 = delta1
    a2, e2 = delta2
    if a1.degree != 1 or a2.degree != 1 or e1.degree != 2 or e2.degree != 2:
        raise ValueError("tangent vectors are (1-form, 2-form) pairs")
    return integrate_pairing(a1, e2) - integrate_pairing(a2, e1)


@dataclass(frozen=True)
class MomentumResidual:
    residual: float
    boundary_term: float
    derivative: float
    symplectic: float
    steps: tuple
    estimates: tuple

    def to_dict(self):
        return {
            "residual": self.residual,
            "boundary_term": self.boundary_term,
            "derivative": self.derivative,
            "symplectic": self.symplectic,
            "steps": list(self.steps),
        }


def _central(p, xi, delta, h):
    plus = smeared_constraint(p.shifted(h, delta), xi)
    minus = smeared_constraint(p.shifted(-h, delta), xi)
    return (plus - minus) / (2.0 * h)


def momentum_identity_residual(p: PhasePoint, xi: LieForm, delta, h=DEFAULT_STEP, max_halvings=4) -> MomentumResidual:
    """Defect of ``d<mu, xi>(delta) = omega(delta, X_xi)``.

    The field-space derivative is a central difference, Richardson-combined
    over successive step halvings until two extrapolated values agree. The
    boundary term ``int Tr(E ^ xi)`` at ``p`` is reported alongside; the
    residual itself equals the boundary term of ``delta_E``.
    """
    if not (H_MIN <= h <= H_MAX):
        raise ValueError(f"step h must lie in [{H_MIN}, {H_MAX}], got {h}")
    _check_parameter(p, xi)
    steps, raw, rich = [h], [_central(p, xi, delta, h)], []
    for _ in range(max_halvings):
        steps.append(steps[-1] / 2.0)
        raw.append(_central(p, xi, delta, steps[-1]))
        rich.append((4.0 * raw[-1] - raw[-2]) / 3.0)
        if len(rich) >= 2 and abs(rich[-1] - rich[-2]) <= 1e-12 * max(1.0, abs(rich[-1])):
            break
    derivative = rich[-1]
    X = fundamental_vector(xi, p.A, p.E)
    sym = symplectic_eval(delta, X)
    return MomentumResidual(
        derivative - sym,
        boundary_term(p, xi),
        derivative,
        sym,
        tuple(steps),
        tuple(rich),
    )


# ---------------------------------------------------------------------------
# analytic Coulomb field
# ---------------------------------------------------------------------------


def coulomb_field(grid, q=1.0, a=0.5, group_tag=lie.U1, direction=None, tail_start=None) -> LieForm:
    """Softened Coulomb field ``calE = q r (r^2 + a^2)^{-3/2} dr``.

    With ``tail_start`` the profile is switched to the exact ``q / r^2``
    beyond that radius through a smooth blend, so every shell outside
    carries flux ``4 pi q`` up to the blend.
    """
    r = grid.r_b * np.ones(grid.shape)
    prof = q * r * (r * r + a * a) ** -1.5
    if tail_start is not None:
        prof = q * r * (r * r + a * a * _soft_core(r, tail_start)) ** -1.5
    dim = lie.algebra_dim(group_tag)
    e = np.zeros(dim)
    e[0 if direction is None else direction] = 1.0
    data = np.zeros((3,) + grid.shape + (dim,))
    data[0] = prof[..., None] * e
    return LieForm(1, SIGMA, group_tag, grid.with_chart(SIGMA), data)


def _soft_core(r, r0):
    """Smooth factor equal to 1 near the origin and 0 beyond ``r0``."""
    t = np.clip(r / r0, 0.0, 1.0)
    out = np.zeros_like(t)
    inside = t < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out
