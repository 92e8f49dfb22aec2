"""Gauge transformations: action on fields, asymptotic classification, winding.

A :class:`GaugeMap` stores one group element per grid node. For U(1) the
stored angle is a *lift* (not wrapped) so that ``g^{-1} dg = i d(angle)`` is
an exact discrete gradient; wrapping happens only when single elements are
extracted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import lie
from .forms import (
    FASTER,
    POWER_LAW,
    DecayProfile,
    LieForm,
    covariant_derivative,
    fit_power_law,
    shell_sup,
    wedge_bracket,
)
from .geometry import SIGMA, SIGMA_HAT, Grid

FORMAL = "Formal"
BOUNDARY_PRESERVING = "BoundaryPreserving"
ASYMPTOTICALLY_TRIVIAL = "AsymptoticallyTrivial"
NOT_CLASSIFIABLE = "NotClassifiable"

#: slack in the ``r^(-1/2 - eps)`` rate requirement
EPSILON_0 = 0.01
#: maximum pairwise group distance between boundary values on different rays
UNIFORMITY_TOL = 1e-3
#: distance below which a boundary constant counts as the identity
IDENTITY_TOL = 1e-3
WINDING_ROUNDING_TOL = 0.05
# tails c + b rho^p with p below this are extrapolated with the fitted power;
# linear tails (p = 1) are analytic in rho and left to the spectral extension
SLOW_TAIL_EXPONENT = 0.9
ENDPOINT_STENCIL = 6
#: the only supported fixed boundary connection
BOUNDARY_CONNECTION = "zero"


class PreconditionError(ValueError):
    """Raised when an analysis is asked for outside its hypotheses."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


# ---------------------------------------------------------------------------
# gauge maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaugeMap:
    group_tag: str
    grid: Grid
    data: np.ndarray
    family: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lie.check_tag(self.group_tag)
        d = np.array(self.data, dtype=float)
        expected = self.grid.shape + (lie.group_dim(self.group_tag),)
        if d.shape != expected:
            raise ValueError(f"gauge map data has shape {d.shape}, expected {expected}")
        if self.group_tag == lie.SU2:
            norm = np.linalg.norm(d, axis=-1)
            if np.any(np.abs(norm - 1.0) > 1e-12):
                d = lie.normalize_quat(d)
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @classmethod
    def identity(cls, grid, group_tag):
        return cls(group_tag, grid, lie.identity_data(group_tag, grid.shape), "identity")

    @classmethod
    def constant(cls, grid, element: lie.GroupElement):
        data = np.broadcast_to(element.data, grid.shape + element.data.shape)
        return cls(element.group_tag, grid, data, "constant")

    @classmethod
    def from_algebra(cls, grid, group_tag, coeffs, family=None, params=None):
        """Pointwise exponential of an algebra-valued field ``grid.shape + (dim,)``."""
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(group_tag, grid, lie.exp_coeffs(group_tag, coeffs), family, dict(params or {}))

    def __matmul__(self, other):
        if not isinstance(other, GaugeMap):
            return NotImplemented
        if other.group_tag != self.group_tag:
            raise lie.GroupMismatchError(f"{self.group_tag} vs {other.group_tag}")
        self.grid.check_same(other.grid)
        return GaugeMap(self.group_tag, self.grid, lie.group_mul(self.group_tag, self.data, other.data))

    def inverse(self):
        return GaugeMap(self.group_tag, self.grid, lie.group_inv(self.group_tag, self.data))

    def at(self, index) -> lie.GroupElement:
        return lie.GroupElement(self.group_tag, self.data[index])

    def embedding(self):
        """Unit vectors representing the map: ``(cos, sin)`` for U(1), the quaternion for SU(2)."""
        if self.group_tag == lie.U1:
            a = self.data[..., 0]
            return np.stack([np.cos(a), np.sin(a)], axis=-1)
        return self.data

    def distance_to(self, element: lie.GroupElement):
        return lie.group_distance(self.group_tag, element.data, self.data)

    def __repr__(self):
        return f"GaugeMap({self.group_tag}, {self.grid}, family={self.family})"


def _from_embedding(tag, vec):
    if tag == lie.U1:
        return np.arctan2(vec[..., 1], vec[..., 0])[..., None]
    return lie.normalize_quat(vec)


def maurer_cartan(g: GaugeMap, chart: str | None = None) -> LieForm:
    """``g^{-1} dg`` as an algebra-valued 1-form."""
    chart = chart or g.grid.chart
    grid = g.grid
    comps = []
    for axis in range(3):
        dg = grid.derivative(g.data, axis, chart)
        if g.group_tag == lie.U1:
            comps.append(dg)
        else:
            comps.append(2.0 * lie.quat_mul(lie.quat_conj(g.data), dg)[..., 1:])
    return LieForm(1, chart, g.group_tag, grid, np.stack(comps))


def _check_pair(g: GaugeMap, form: LieForm):
    if g.group_tag != form.group_tag:
        raise lie.GroupMismatchError(f"{g.group_tag} vs {form.group_tag}")
    g.grid.check_same(form.grid)


def conjugate(g: GaugeMap, form: LieForm) -> LieForm:
    """``g^{-1} omega g`` applied componentwise."""
    _check_pair(g, form)
    ginv = lie.group_inv(g.group_tag, g.data)
    data = lie.adjoint_coeffs(g.group_tag, ginv[None], form.data)
    return LieForm(form.degree, form.chart, form.group_tag, form.grid, data)


def act_on_connection(g: GaugeMap, A: LieForm) -> LieForm:
    """``g . A = g^{-1} A g + g^{-1} dg``."""
    if A.degree != 1:
        raise ValueError("connection must be a 1-form")
    return conjugate(g, A) + maurer_cartan(g, A.chart)


def act_on_electric(g: GaugeMap, E: LieForm) -> LieForm:
    """``g . E = g^{-1} E g``."""
    return conjugate(g, E)


def fundamental_vector(xi: LieForm, A: LieForm, E: LieForm):
    """Infinitesimal action ``(D_A xi, [E, xi])`` of ``xi`` at ``(A, E)``."""
    if xi.degree != 0:
        raise ValueError("gauge parameter must be a 0-form")
    return covariant_derivative(A, xi), wedge_bracket(E, xi)


# ---------------------------------------------------------------------------
# boundary limits
# ---------------------------------------------------------------------------


def _max_pairwise(tag, vecs):
    """Largest pairwise group distance among unit-vector representatives."""
    v = vecs.reshape(-1, vecs.shape[-1])
    gram = np.clip(v @ v.T, -1.0, 1.0)
    if tag == lie.U1:
        return float(np.arccos(gram.min()))
    # q and -q are different SU(2) elements; distance is 2 acos(<p, q>)
    return float(2.0 * np.arccos(gram.min()))


def _mean_element(tag, vecs):
    m = vecs.reshape(-1, vecs.shape[-1]).mean(axis=0)
    n = np.linalg.norm(m)
    if n < 1e-12:
        m = vecs.reshape(-1, vecs.shape[-1])[0]
        n = np.linalg.norm(m)
    return lie.GroupElement(tag, _from_embedding(tag, m / n))


def power_extrapolate(f, rho, iterations=80):
    """Limit of ``f = c + b rho^p`` from three layers (``rho`` decreasing).

    Works on arrays whose first axis has length 3. Returns ``(c, p, ok)``
    where ``ok`` marks rays whose increments are consistent with a limit.
    """
    f = np.asarray(f, dtype=float)
    d1 = f[1] - f[0]
    d2 = f[2] - f[1]
    scale = np.maximum(np.abs(f).max(axis=0), 1.0)
    flat = np.abs(d2) <= 1e-14 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(flat, 1.0, d1 / np.where(flat, 1.0, d2))

    def ratio(p):
        a = rho[:, None] ** p[None]
        return (a[0] - a[1]) / (a[1] - a[2])

    # ratio(p) increases with p; bracket p in (0, 12]
    lo = np.full(q.shape, 1e-6)
    hi = np.full(q.shape, 12.0)
    shape = q.shape
    qf = q.reshape(-1)
    lo, hi = lo.reshape(-1), hi.reshape(-1)
    r_lo, r_hi = ratio(lo), ratio(hi)
    ok = (qf > r_lo) & (qf < r_hi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        up = ratio(mid) < qf
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    p = 0.5 * (lo + hi)
    a = rho[:, None] ** p[None]
    b = d2.reshape(-1) / (a[2] - a[1])
    c = f[2].reshape(-1) - b * a[2]
    flat_f = flat.reshape(-1)
    c = np.where(flat_f, f[2].reshape(-1), c)
    ok = ok | flat_f
    return c.reshape(shape), p.reshape(shape), ok.reshape(shape)


def ray_limits(f, grid: Grid):
    """Limit at ``rho = 0`` along every ray of a field sampled on ``grid``.

    Smooth tails are extrapolated with the polynomial in ``rho`` through the
    outermost ``ENDPOINT_STENCIL`` layers; being local, it is not disturbed
    by structure deep in the interior. A ray keeps the fitted
    ``c + b rho^p`` limit instead when the fit gives ``p`` clearly below one
    consistently on the last two triples of layers, since a polynomial cannot
    follow such slow tails. Rays whose last two layers agree to roundoff
    keep their last value.
    """
    f = np.asarray(f, dtype=float)
    tail, rho = f[-4:], grid.rho[-4:]
    c, p, ok = power_extrapolate(tail[1:], rho[1:])
    _, p_in, ok_in = power_extrapolate(tail[:3], rho[:3])
    slow = ok & ok_in & (p < SLOW_TAIL_EXPONENT) & (np.abs(p - p_in) < 0.1)
    scale = np.maximum(np.abs(tail).max(axis=0), 1.0)
    flat = np.abs(tail[-1] - tail[-2]) <= 1e-14 * scale
    k = min(ENDPOINT_STENCIL, grid.n_r)
    nodes = grid.rho[-k:]
    weights = [np.prod([nodes[j] / (nodes[j] - nodes[i]) for j in range(k) if j != i]) for i in range(k)]
    poly = np.tensordot(np.asarray(weights), f[-k:], axes=(0, 0))
    return np.where(flat, tail[-1], np.where(slow, c, poly))


def boundary_values(g: GaugeMap):
    """Per-ray boundary elements (unit embedding vectors) extrapolated to ``rho = 0``."""
    vec = ray_limits(g.embedding(), g.grid)
    return vec / np.linalg.norm(vec, axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FallOffClass:
    variant: str
    boundary_constant: lie.GroupElement | None
    rate_exponent: float
    residual: float
    angular_spread: float
    profile: DecayProfile | None = None

    @property
    def is_boundary_preserving(self):
        return self.variant in (BOUNDARY_PRESERVING, ASYMPTOTICALLY_TRIVIAL)

    def to_dict(self):
        c = self.boundary_constant
        return {
            "variant": self.variant,
            "boundary_constant": None if c is None else [float(x) for x in c.data],
            "rate_exponent": float(self.rate_exponent),
            "fit_residual": float(self.residual),
            "angular_spread": float(self.angular_spread),
        }


def classify(g: GaugeMap, epsilon_0=EPSILON_0, window_fraction=0.25) -> FallOffClass:
    """Place ``g`` in the hierarchy formal > boundary preserving > asymptotically trivial."""
    if not np.all(np.isfinite(g.data)):
        return FallOffClass(NOT_CLASSIFIABLE, None, np.nan, np.nan, np.nan)
    tag = g.group_tag
    vec = boundary_values(g)
    spread = _max_pairwise(tag, vec)
    c = _mean_element(tag, vec)
    if spread >= UNIFORMITY_TOL:
        return FallOffClass(FORMAL, None, np.nan, np.nan, spread)
    grid = g.grid
    idx = grid.outer_window(window_fraction)
    amp = shell_sup(g.distance_to(c)[..., None], grid)
    prof = fit_power_law(grid.r[idx], amp[idx], correction=True)
    rate_ok = prof.kind == FASTER or (prof.kind == POWER_LAW and prof.exponent <= -0.5 - epsilon_0)
    if not rate_ok:
        return FallOffClass(FORMAL, None, prof.exponent, prof.residual, spread, prof)
    ident = lie.GroupElement.identity(tag)
    variant = ASYMPTOTICALLY_TRIVIAL if c.distance(ident) < IDENTITY_TOL else BOUNDARY_PRESERVING
    if variant == ASYMPTOTICALLY_TRIVIAL:
        c = ident
    return FallOffClass(variant, c, prof.exponent, prof.residual, spread, prof)


# ---------------------------------------------------------------------------
# winding number
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Winding:
    value: int
    raw: float

    @property
    def rounding_distance(self):
        return abs(self.raw - self.value)

    @property
    def confident(self):
        return self.rounding_distance < WINDING_ROUNDING_TOL


def degree_integral(g: GaugeMap) -> float:
    """Unrounded degree ``(1/24 pi^2) int Tr (g^{-1} dg)^3`` of an SU(2) map.

    With the orthonormal basis ``tau_a = -(i/2) sigma_a`` the integrand is
    ``-(3/2) det[L_i^a]``; the sign is fixed so that a hedgehog whose profile
    rises from 0 to 2 pi has degree +1.
    """
    if g.group_tag != lie.SU2:
        raise PreconditionError("winding numbers are only defined here for SU(2)")
    L = maurer_cartan(g, SIGMA_HAT).data  # (3 coords, nr, nt, np, 3 algebra)
    det = np.linalg.det(np.moveaxis(L, 0, -2))
    total = float(np.sum(g.grid.coord_weights_hat * det))
    return total / (16.0 * np.pi**2)


def winding_number(g: GaugeMap, boundary_constant: lie.GroupElement | None = None, check=True) -> Winding:
    if g.group_tag == lie.U1:
        return Winding(0, 0.0)
    if check:
        cls = classify(g)
        if not cls.is_boundary_preserving:
            raise PreconditionError("winding number needs a boundary-preserving map")
    raw = degree_integral(g)
    return Winding(int(np.rint(raw)), raw)


# ---------------------------------------------------------------------------
# quotient
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuotientRep:
    boundary_constant: lie.GroupElement
    winding: int

    def matches(self, other, tol=IDENTITY_TOL):
        return self.winding == other.winding and self.boundary_constant.distance(other.boundary_constant) < tol


def quotient_representative(g: GaugeMap) -> QuotientRep:
    cls = classify(g)
    if not cls.is_boundary_preserving:
        raise PreconditionError(f"map classified {cls.variant}; no quotient class")
    w = winding_number(g, cls.boundary_constant, check=False).value
    return QuotientRep(cls.boundary_constant, w)


# ---------------------------------------------------------------------------
# rate lemma
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateLemmaReport:
    epsilon: float
    C: float
    limits_exist: bool
    angular_spread: float
    boundary_value: np.ndarray
    fraction_satisfied: float
    worst_ratio: float

    @property
    def holds(self):
        return self.limits_exist and self.angular_spread < UNIFORMITY_TOL and self.fraction_satisfied == 1.0


def rate_lemma_check(xi: LieForm, epsilon, C, dxi_dr=None, window_fraction=0.25, rtol=1e-9) -> RateLemmaReport:
    """Check the integrated bound ``|xi - c| <= 2 C r^(-1/2 - eps)``.

    The hypothesis ``|d xi / dr| <= C r^(-3/2 - eps)`` is verified at every
    node first; ``dxi_dr`` may supply the radial derivative exactly (shape
    ``grid.shape + (dim,)``), otherwise it is computed spectrally.
    """
    if xi.degree != 0:
        raise ValueError("rate lemma applies to 0-forms")
    grid = xi.grid
    vals = xi.data[0]
    if dxi_dr is None:
        dxi_dr = grid.derivative(vals, 0, SIGMA)
    dxi_dr = np.asarray(dxi_dr, dtype=float).reshape(vals.shape)
    r = grid.r_b
    slope = np.linalg.norm(dxi_dr, axis=-1)
    allowed = C * r ** (-1.5 - epsilon) * np.ones(grid.shape)
    bad = slope > allowed * (1.0 + rtol)
    if np.any(bad):
        ratio = np.where(bad, slope / allowed, 0.0)
        node = np.unravel_index(int(np.argmax(ratio)), grid.shape)
        raise PreconditionError(
            f"|d xi/dr| = {slope[node]:.3e} exceeds C r^(-3/2-eps) = {allowed[node]:.3e} at node {node} (r = {grid.r[node[0]]:.4g})",
            node=node,
        )
    c_ray = ray_limits(vals, grid)
    ok = np.ones(c_ray.shape, dtype=bool)
    spread = float(np.max(np.abs(c_ray - c_ray.reshape(-1, c_ray.shape[-1]).mean(axis=0))) * 2.0)
    c = c_ray.reshape(-1, c_ray.shape[-1]).mean(axis=0)
    idx = grid.outer_window(window_fraction)
    dev = np.linalg.norm(vals[idx] - c, axis=-1)
    bound = 2.0 * C * grid.r[idx, None, None] ** (-0.5 - epsilon)
    ratio = dev / bound
    return RateLemmaReport(
        float(epsilon),
        float(C),
        bool(np.all(ok)),
        spread,
        c,
        float(np.mean(ratio <= 1.0)),
        float(ratio.max()),
    )


# ---------------------------------------------------------------------------
# localizability
# ---------------------------------------------------------------------------


def _index_distance(mask):
    """Euclidean index-space distance to ``mask`` with periodic ``phi``."""
    n_phi = mask.shape[2]
    tiled = np.concatenate([mask, mask, mask], axis=2)
    if not tiled.any():
        return np.full(mask.shape, np.inf)
    dist = ndimage.distance_transform_edt(~tiled)
    return dist[:, :, n_phi : 2 * n_phi]


def smoothstep5(t):
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def transition_function(U, V):
    """Equal to 1 on ``U``, 0 on ``V``, quintic in between."""
    du = _index_distance(U)
    dv = _index_distance(V)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(np.isinf(dv), 1.0, dv / (du + dv))
    f = smoothstep5(t)
    f[U] = 1.0
    f[V] = 0.0
    return f


def boundary_limit(xi: LieForm):
    """Per-ray limit of a 0-form at the conformal boundary."""
    return ray_limits(xi.data[0], xi.grid)


def is_localizable(xi: LieForm, U, V, separation=2, tol=IDENTITY_TOL):
    """Try to build ``xi'`` equal to ``xi`` on ``U``, zero on ``V`` and at infinity.

    Returns ``(True, xi')`` or ``(False, None)``.
    """
    grid = xi.grid
    U = np.asarray(U, dtype=bool)
    V = np.asarray(V, dtype=bool)
    if U.shape != grid.shape or V.shape != grid.shape:
        raise ValueError("region masks must have the grid shape")
    if np.any(U & V) or (U.any() and np.any(_index_distance(U)[V] < separation)):
        raise ValueError(f"regions U and V must be separated by at least {separation} cells")
    limit = np.linalg.norm(boundary_limit(xi), axis=-1)
    vanishes = float(limit.max()) < tol
    touches = bool(U[-1].any())
    if not vanishes:
        if touches:
            return False, None
        # switch xi off before the boundary as well
        outer = np.zeros(grid.shape, dtype=bool)
        outer[-1] = True
        if np.any(_index_distance(U)[outer] < separation):
            return False, None
        V = V | outer
    f = transition_function(U, V)
    return True, xi * f
