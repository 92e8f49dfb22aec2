"""Lie-algebra-valued differential forms sampled on a :class:`Grid`.

Components are stored in the coordinate frame of the form's chart
(``dr, dtheta, dphi`` on ``sigma``; ``dR, dtheta, dphi`` on ``sigma_hat``)
as an array of shape ``(n_components, n_r, n_theta, n_phi, dim g)``.
Component order is ``(1, 2, 3)`` for 1-forms and ``(12, 13, 23)`` for
2-forms, where ``1`` is the radial coordinate. All metric factors live in
:func:`hodge` and :func:`l2_norm_sq`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lie
from .geometry import FLAT, ROUND, SIGMA, SIGMA_HAT, Grid, GridMismatchError

N_COMPONENTS = {0: 1, 1: 3, 2: 3, 3: 1}
_PAIRS = ((0, 1), (0, 2), (1, 2))
_AXIS_NAMES = ("r", "theta", "phi")

#: Amplitudes at or below this are treated as exactly zero by fall-off fits.
FALLOFF_FLOOR = 1e-12
FALLOFF_RESIDUAL = 0.05


class DegreeError(ValueError):
    pass


def component_labels(degree, chart=SIGMA):
    names = list(_AXIS_NAMES)
    if chart == SIGMA_HAT:
        names[0] = "R"
    if degree == 0:
        return ("scalar",)
    if degree == 1:
        return tuple(names)
    if degree == 2:
        return tuple(f"{names[i]}_{names[j]}" for i, j in _PAIRS)
    return ("_".join(names),)


@dataclass(frozen=True, eq=False)
class LieForm:
    degree: int
    chart: str
    group_tag: str
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        if self.degree not in N_COMPONENTS:
            raise DegreeError(f"degree must be 0..3, got {self.degree}")
        lie.check_tag(self.group_tag)
        if self.chart not in (SIGMA, SIGMA_HAT):
            raise ValueError(f"unknown chart {self.chart!r}")
        d = np.array(self.data, dtype=float)
        expected = (N_COMPONENTS[self.degree],) + self.grid.shape + (lie.algebra_dim(self.group_tag),)
        if d.shape != expected:
            raise ValueError(f"form data has shape {d.shape}, expected {expected}")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)
        if self.grid.chart != self.chart:
            object.__setattr__(self, "grid", self.grid.with_chart(self.chart))

    # -- construction ------------------------------------------------------
    @classmethod
    def zeros(cls, grid, degree, group_tag, chart=None):
        shape = (N_COMPONENTS[degree],) + grid.shape + (lie.algebra_dim(group_tag),)
        return cls(degree, chart or grid.chart, group_tag, grid, np.zeros(shape))

    @classmethod
    def from_components(cls, grid, degree, group_tag, components, chart=None):
        """Build from a list of per-component arrays of shape grid.shape (+ (dim,))."""
        dim = lie.algebra_dim(group_tag)
        arrs = []
        for c in components:
            c = np.asarray(c, dtype=float)
            if c.shape == grid.shape:
                c = c[..., None] * np.ones(dim)
            arrs.append(np.broadcast_to(c, grid.shape + (dim,)))
        return cls(degree, chart or grid.chart, group_tag, grid, np.stack(arrs))

    def _new(self, data, degree=None, chart=None):
        return LieForm(
            self.degree if degree is None else degree,
            chart or self.chart,
            self.group_tag,
            self.grid,
            data,
        )

    @property
    def labels(self):
        return component_labels(self.degree, self.chart)

    def component(self, label):
        if isinstance(label, int):
            return self.data[label]
        aliases = {lab: i for i, lab in enumerate(self.labels)}
        aliases.update({lab: i for i, lab in enumerate(component_labels(self.degree, SIGMA))})
        aliases.update({lab: i for i, lab in enumerate(component_labels(self.degree, SIGMA_HAT))})
        if label not in aliases:
            raise KeyError(f"no component {label!r} in a {self.degree}-form; have {self.labels}")
        return self.data[aliases[label]]

    # -- linear structure ----------------------------------------------------
    def _check(self, other):
        if not isinstance(other, LieForm):
            raise TypeError("expected a LieForm")
        if other.group_tag != self.group_tag:
            raise lie.GroupMismatchError(f"{self.group_tag} vs {other.group_tag}")
        if other.chart != self.chart:
            raise ValueError(f"chart mismatch: {self.chart} vs {other.chart}")
        self.grid.check_same(other.grid)

    def __add__(self, other):
        self._check(other)
        if other.degree != self.degree:
            raise DegreeError("cannot add forms of different degree")
        return self._new(self.data + other.data)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __neg__(self):
        return self._new(-self.data)

    def __mul__(self, s):
        if isinstance(s, LieForm):
            return NotImplemented
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            return self._new(float(s) * self.data)
        # pointwise scalar function on the grid
        return self._new(self.data * s[None, ..., None])

    __rmul__ = __mul__

    def with_chart_tag(self, chart):
        return LieForm(self.degree, chart, self.group_tag, self.grid.with_chart(chart), self.data)

    def max_abs(self):
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def __repr__(self):
        return f"LieForm(degree={self.degree}, chart={self.chart}, group={self.group_tag}, grid={self.grid})"


# ---------------------------------------------------------------------------
# algebraic operations
# ---------------------------------------------------------------------------


def _wedge_components(a, b, op):
    """Generic wedge of component arrays; ``op`` combines algebra coefficients."""
    p, q = a.degree, b.degree
    A, B = a.data, b.data
    if p + q > 3:
        raise DegreeError("wedge degree exceeds 3")
    if p == 0:
        return [op(A[0], B[i]) for i in range(N_COMPONENTS[q])]
    if q == 0:
        return [op(A[i], B[0]) for i in range(N_COMPONENTS[p])]
    if p == 1 and q == 1:
        return [op(A[i], B[j]) - op(A[j], B[i]) for i, j in _PAIRS]
    if p == 1 and q == 2:
        return [op(A[0], B[2]) - op(A[1], B[1]) + op(A[2], B[0])]
    # p == 2, q == 1: (12)x3 - (13)x2 + (23)x1
    return [op(A[0], B[2]) - op(A[1], B[1]) + op(A[2], B[0])]


def wedge_trace(omega: LieForm, eta: LieForm):
    """Density of ``Tr(omega ^ eta)`` for complementary degrees.

    Returns the coefficient of ``dx1 ^ dx2 ^ dx3`` in the common chart as a
    plain array of the grid shape.
    """
    omega._check(eta)
    if omega.degree + eta.degree != 3:
        raise DegreeError("wedge_trace needs degrees summing to 3")
    return _wedge_components(omega, eta, lie.pair_coeffs)[0]


def wedge_bracket(omega: LieForm, eta: LieForm) -> LieForm:
    """``[omega ^ eta]`` with the Lie bracket on the coefficients."""
    omega._check(eta)
    tag = omega.group_tag
    comps = _wedge_components(omega, eta, lambda x, y: lie.bracket_coeffs(tag, x, y))
    return omega._new(np.stack(comps), degree=omega.degree + eta.degree)


def integrate_density(density, grid: Grid, chart: str) -> float:
    """``int f dx1 dx2 dx3`` for a top-degree coefficient in ``chart``."""
    density = np.asarray(density, dtype=float)
    if density.shape != grid.shape:
        raise GridMismatchError("density does not match grid")
    return float(np.sum(grid.coord_weights(chart) * density))


def integrate_pairing(omega: LieForm, eta: LieForm) -> float:
    """``int Tr(omega ^ eta)`` over the whole grid."""
    return integrate_density(wedge_trace(omega, eta), omega.grid, omega.chart)


# ---------------------------------------------------------------------------
# differential operators
# ---------------------------------------------------------------------------


def exterior_derivative(omega: LieForm) -> LieForm:
    k = omega.degree
    if k >= 3:
        raise DegreeError("exterior derivative of a 3-form is zero-dimensional here")
    g, chart, A = omega.grid, omega.chart, omega.data

    def d(f, axis):
        return g.derivative(f, axis, chart)

    if k == 0:
        comps = [d(A[0], ax) for ax in range(3)]
    elif k == 1:
        comps = [d(A[j], i) - d(A[i], j) for i, j in _PAIRS]
    else:
        comps = [d(A[2], 0) - d(A[1], 1) + d(A[0], 2)]
    return omega._new(np.stack(comps), degree=k + 1)


def covariant_derivative(A: LieForm, omega: LieForm) -> LieForm:
    """``D_A omega = d omega + [A ^ omega]`` for adjoint-valued ``omega``."""
    if A.degree != 1:
        raise DegreeError("connection must be a 1-form")
    A._check(omega)
    return exterior_derivative(omega) + wedge_bracket(A, omega)


def curvature(A: LieForm) -> LieForm:
    """``F = dA + (1/2)[A ^ A]``, i.e. ``F_ij = d_i A_j - d_j A_i + [A_i, A_j]``."""
    if A.degree != 1:
        raise DegreeError("curvature needs a 1-form")
    dA = exterior_derivative(A)
    if A.group_tag == lie.U1:
        return dA
    return dA + 0.5 * wedge_bracket(A, A)


def _metric_for(omega, metric):
    expected = SIGMA if metric == FLAT else SIGMA_HAT if metric == ROUND else None
    if expected is None:
        raise ValueError(f"unknown metric {metric!r}")
    if omega.chart != expected:
        raise ValueError(f"metric {metric} requires chart {expected}, form is on {omega.chart}")
    (g1, g2, g3), sq = omega.grid.metric_diagonal(metric)
    return (g1[..., None], g2[..., None], g3[..., None]), sq[..., None]


def hodge(omega: LieForm, metric: str) -> LieForm:
    """Hodge star of a diagonal Riemannian metric in three dimensions."""
    (g1, g2, g3), sq = _metric_for(omega, metric)
    A = omega.data
    k = omega.degree
    if k == 0:
        comps = [A[0] * sq]
    elif k == 3:
        comps = [A[0] / sq]
    elif k == 1:
        comps = [sq * A[2] / g3, -sq * A[1] / g2, sq * A[0] / g1]
    else:
        comps = [A[2] * g1 / sq, -A[1] * g2 / sq, A[0] * g3 / sq]
    return omega._new(np.stack(comps), degree=3 - k)


def l2_norm_sq(omega: LieForm, metric: str = FLAT) -> float:
    """``||omega||^2 = int Tr(omega ^ *omega)``."""
    star = hodge(omega, metric)
    return integrate_density(wedge_trace(omega, star), omega.grid, omega.chart)


def radial_index_count(degree):
    """How many radial indices each stored component carries."""
    if degree == 0:
        return (0,)
    if degree == 1:
        return (1, 0, 0)
    if degree == 2:
        return (1, 1, 0)
    return (1,)


def conformal_reweight(omega: LieForm, direction: str) -> LieForm:
    """Change the radial coordinate between ``r`` and ``R = 2 arctan r``.

    Since ``dR = K dr``, every radial index of a pulled-back component picks
    up one factor of ``K`` (``alpha_r = K alpha_hat_R``); purely angular
    components are unchanged.
    """
    if direction == "to_sigma":
        if omega.chart != SIGMA_HAT:
            raise ValueError("form is already on sigma")
        power, target = 1, SIGMA
    elif direction == "to_sigma_hat":
        if omega.chart != SIGMA:
            raise ValueError("form is already on sigma_hat")
        power, target = -1, SIGMA_HAT
    else:
        raise ValueError(f"unknown direction {direction!r}")
    K = omega.grid.K[:, None, None, None]
    data = np.stack(
        [c * K ** (power * n) if n else c for c, n in zip(omega.data, radial_index_count(omega.degree))]
    )
    return LieForm(omega.degree, target, omega.group_tag, omega.grid.with_chart(target), data)


# ---------------------------------------------------------------------------
# Cartesian construction helpers
# ---------------------------------------------------------------------------


def _frames(grid):
    st, ct = np.sin(grid.theta_b), np.cos(grid.theta_b)
    sp, cp = np.sin(grid.phi_b), np.cos(grid.phi_b)
    rhat = (st * cp, st * sp, ct * np.ones_like(sp))
    that = (ct * cp, ct * sp, -st * np.ones_like(sp))
    phat = (-sp * np.ones_like(st), cp * np.ones_like(st), np.zeros_like(st * sp))
    return rhat, that, phat


def one_form_from_cartesian(grid: Grid, vx, vy, vz, group_tag=None, chart=SIGMA) -> LieForm:
    """Spherical coordinate components of ``vx dx + vy dy + vz dz``.

    The inputs may carry a trailing algebra axis; without one the form is
    U(1)-valued (or ``group_tag`` if given, broadcasting the coefficient).
    """
    v = [np.asarray(c, dtype=float) for c in (vx, vy, vz)]
    if v[0].ndim == 3:
        tag = group_tag or lie.U1
        v = [np.broadcast_to(c, grid.shape)[..., None] * np.ones(lie.algebra_dim(tag)) for c in v]
    else:
        tag = group_tag or (lie.SU2 if v[0].shape[-1] == 3 else lie.U1)
    rhat, that, phat = _frames(grid)
    r = grid.r_b[..., None]
    st = np.sin(grid.theta_b)[..., None]

    def dot(e):
        return sum(e[i][..., None] * v[i] for i in range(3))

    comps = [dot(rhat), r * dot(that), r * st * dot(phat)]
    form = LieForm(1, SIGMA, tag, grid.with_chart(SIGMA), np.stack([np.broadcast_to(c, grid.shape + c.shape[-1:]) for c in comps]))
    return form if chart == SIGMA else conformal_reweight(form, "to_sigma_hat")


def two_form_from_vector(grid: Grid, vx, vy, vz, group_tag=None) -> LieForm:
    """Flux 2-form ``*(v_flat)`` of a Cartesian vector field (flat chart)."""
    return hodge(one_form_from_cartesian(grid, vx, vy, vz, group_tag), FLAT)


def scalar_form(grid: Grid, values, group_tag=lie.U1, chart=None) -> LieForm:
    """0-form from values of shape grid.shape (+ (dim,))."""
    return LieForm.from_components(grid, 0, group_tag, [values], chart)


# ---------------------------------------------------------------------------
# asymptotic fall-off
# ---------------------------------------------------------------------------


POWER_LAW = "power_law"
FASTER = "faster_than_any_power"
NO_POWER_LAW = "no_power_law"


@dataclass(frozen=True)
class DecayProfile:
    """Result of a log-log fit ``amplitude ~ C r^p`` over the outer window."""

    kind: str
    exponent: float
    amplitude: float
    residual: float
    r_min: float = float("nan")
    r_max: float = float("nan")

    @property
    def is_power_law(self):
        return self.kind == POWER_LAW

    def satisfies(self, threshold: float) -> bool:
        """True when decay is at least as fast as ``r**threshold``."""
        if self.kind == FASTER:
            return True
        return self.kind == POWER_LAW and self.exponent <= threshold


def fit_power_law(r, amplitude, residual_threshold=FALLOFF_RESIDUAL, floor=FALLOFF_FLOOR, correction=False) -> DecayProfile:
    """Least-squares slope of ``log amplitude`` against ``log r``.

    Points at or below ``floor`` are dropped. A profile that reaches the
    floor before the end of the window without looking like a power law is
    tagged as decaying faster than any power. With ``correction`` the model
    is ``a r^p (1 + b/r)``, linearized as an extra ``1/r`` column, so that a
    subleading tail in the inner part of the window does not spoil the fit.
    """
    r = np.asarray(r, dtype=float)
    amp = np.abs(np.asarray(amplitude, dtype=float))
    keep = amp > floor
    span = (float(r.min()), float(r.max())) if r.size else (np.nan, np.nan)
    if keep.sum() < 3:
        if keep.sum() == 0 or not keep[-1]:
            return DecayProfile(FASTER, -np.inf, 0.0, 0.0, *span)
        return DecayProfile(NO_POWER_LAW, np.nan, np.nan, np.inf, *span)
    x, y = np.log(r[keep]), np.log(amp[keep])
    cols = [np.ones_like(x), x] + ([1.0 / r[keep]] if correction and keep.sum() > 3 else [])
    design = np.stack(cols, axis=1)
    coef = np.linalg.lstsq(design, y, rcond=None)[0]
    intercept, slope = coef[0], coef[1]
    resid = float(np.sqrt(np.mean((y - design @ coef) ** 2)))
    if resid < residual_threshold:
        return DecayProfile(POWER_LAW, float(slope), float(np.exp(intercept)), resid, *span)
    if not keep[-1]:
        return DecayProfile(FASTER, -np.inf, 0.0, resid, *span)
    return DecayProfile(NO_POWER_LAW, float(slope), float(np.exp(intercept)), resid, *span)


def shell_sup(values, grid: Grid):
    """Per-layer maximum of the pointwise algebra norm; ``values`` has shape grid.shape + (dim,)."""
    mag = np.linalg.norm(np.asarray(values, dtype=float), axis=-1)
    return mag.reshape(grid.n_r, -1).max(axis=1)


def estimate_falloff(omega: LieForm, component=0, window_fraction=0.25) -> DecayProfile:
    """Fall-off exponent of one component over the outermost radial layers.

    The radial variable is always the flat radius ``r``.
    """
    grid = omega.grid
    idx = grid.outer_window(window_fraction)
    if idx.size < 6:
        raise ValueError("fit window needs at least 6 radial layers")
    prof = shell_sup(omega.component(component), grid)
    return fit_power_law(grid.r[idx], prof[idx])
