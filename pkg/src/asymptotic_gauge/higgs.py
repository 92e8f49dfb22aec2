"""Higgs sector: potential, Yang-Mills-Higgs Lagrangian and phase analysis.

A Higgs field takes values in ``C`` (U(1)) or ``C^2`` (SU(2), fundamental
representation), stored as interleaved real and imaginary parts. Gauge maps
act by ``phi -> rho(g^{-1}) phi``, matching ``A -> g^{-1} A g + g^{-1} dg``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lie
from .forms import LieForm, curvature, l2_norm_sq
from .gauge import GaugeMap, PreconditionError
from .geometry import FLAT, SIGMA, Grid

UNBROKEN = "unbroken"
BROKEN = "broken"
RANK_TOL = 1e-10
#: growth exponent of the partial energy above which it is called divergent
DIVERGENCE_EXPONENT = 1.5
#: default cutoffs as fractions of the outermost node radius; they have to
#: sit far out, where a nonzero boundary value dominates any 1/r tail
CUTOFF_FRACTIONS = (0.125, 0.25, 0.5)


def default_cutoffs(grid):
    r_out = float(grid.r[-1])
    return tuple(f * r_out for f in CUTOFF_FRACTIONS)


class NonIntegrableError(ValueError):
    """A Lagrangian term diverges on the given configuration."""

    def __init__(self, term, message):
        super().__init__(f"{term}: {message}")
        self.term = term


def rep_dim(group_tag):
    """Complex dimension of the Higgs representation."""
    return 1 if lie.check_tag(group_tag) == lie.U1 else 2


def to_complex(data):
    data = np.asarray(data, dtype=float)
    return data[..., 0::2] + 1j * data[..., 1::2]


def to_real(z):
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def generator_action(group_tag, x, z):
    """``rho'(X) z`` for algebra coefficients ``x`` and complex vectors ``z``."""
    x = np.asarray(x, dtype=float)
    if group_tag == lie.U1:
        return 1j * x * z
    return np.einsum("...ij,...j->...i", lie.su2_algebra_matrix(x), z)


def group_action(group_tag, g, z):
    """``rho(g) z`` pointwise."""
    g = np.asarray(g, dtype=float)
    if group_tag == lie.U1:
        return np.exp(1j * g) * z
    return np.einsum("...ij,...j->...i", lie.su2_matrix(g), z)


@dataclass(frozen=True, eq=False)
class HiggsField:
    group_tag: str
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        lie.check_tag(self.group_tag)
        d = np.array(self.data, dtype=float)
        expected = self.grid.shape + (2 * rep_dim(self.group_tag),)
        if d.shape != expected:
            raise ValueError(f"Higgs data has shape {d.shape}, expected {expected}")
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @classmethod
    def constant(cls, grid, group_tag, vector):
        v = np.asarray(vector, dtype=complex).reshape(-1)
        if v.size != rep_dim(group_tag):
            raise ValueError("vector does not match the representation")
        return cls(group_tag, grid, np.broadcast_to(to_real(v), grid.shape + (2 * v.size,)))

    @classmethod
    def from_complex(cls, grid, group_tag, z):
        z = np.asarray(z, dtype=complex)
        if z.shape == grid.shape:
            z = z[..., None]
        return cls(group_tag, grid, to_real(z))

    @classmethod
    def zeros(cls, grid, group_tag):
        return cls(group_tag, grid, np.zeros(grid.shape + (2 * rep_dim(group_tag),)))

    @property
    def z(self):
        return to_complex(self.data)

    def norm_sq(self):
        return np.sum(self.data**2, axis=-1)

    def __add__(self, other):
        self.grid.check_same(other.grid)
        return HiggsField(self.group_tag, self.grid, self.data + other.data)

    def __mul__(self, s):
        s = np.asarray(s, dtype=float)
        if s.ndim:
            s = s[..., None]
        return HiggsField(self.group_tag, self.grid, self.data * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class PhaseSpec:
    phase: str
    mu: float
    lam: float
    phi_inf: tuple = field(default=())

    def __post_init__(self):
        if self.phase not in (UNBROKEN, BROKEN):
            raise ValueError(f"phase must be {UNBROKEN!r} or {BROKEN!r}")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.phase == BROKEN:
            if self.mu <= 0:
                raise ValueError("broken phase requires mu > 0")
            v2 = float(np.sum(np.abs(np.asarray(self.phi_inf, dtype=complex)) ** 2))
            if abs(v2 - self.mu / (2.0 * self.lam)) > 1e-10:
                raise ValueError(f"|phi_inf|^2 = {v2} is not the vacuum value mu/(2 lambda) = {self.mu / (2 * self.lam)}")

    @property
    def vacuum(self):
        return np.asarray(self.phi_inf, dtype=complex) if self.phase == BROKEN else None


# ---------------------------------------------------------------------------
# potential
# ---------------------------------------------------------------------------


def _check_lambda(lam):
    if lam <= 0:
        raise ValueError("lambda must be positive")


def potential_density(phi, mu, lam):
    """``V = -mu |phi|^2 + lam |phi|^4`` pointwise."""
    _check_lambda(lam)
    n2 = phi.norm_sq() if isinstance(phi, HiggsField) else np.sum(np.abs(np.asarray(phi)) ** 2, axis=-1)
    return -mu * n2 + lam * n2**2


def vacuum_radius(mu, lam):
    _check_lambda(lam)
    return 0.0 if mu <= 0 else float(np.sqrt(mu / (2.0 * lam)))


def potential_minimum(mu, lam):
    _check_lambda(lam)
    return 0.0 if mu <= 0 else -(mu**2) / (4.0 * lam)


# ---------------------------------------------------------------------------
# kinetic terms
# ---------------------------------------------------------------------------


def covariant_gradient(A: LieForm, phi: HiggsField):
    """Coordinate components of ``D_A phi = d phi + rho'(A) phi`` (complex)."""
    if A.group_tag != phi.group_tag:
        raise lie.GroupMismatchError(f"{A.group_tag} vs {phi.group_tag}")
    A.grid.check_same(phi.grid)
    z = phi.z
    grid = phi.grid
    return np.stack(
        [grid.derivative(z.real, ax, A.chart) + 1j * grid.derivative(z.imag, ax, A.chart) + generator_action(phi.group_tag, A.data[ax], z) for ax in range(3)]
    )


def gradient_norm_sq(A: LieForm, phi: HiggsField) -> float:
    """``||D_A phi||^2`` with the flat metric."""
    if A.chart != SIGMA:
        raise ValueError("gradient energy is evaluated on the flat chart")
    D = covariant_gradient(A, phi)
    (g1, g2, g3), sq = phi.grid.metric_diagonal(FLAT)
    dens = sum(np.sum(np.abs(D[i]) ** 2, axis=-1) / gi for i, gi in enumerate((g1, g2, g3)))
    return float(np.sum(phi.grid.coord_weights_sigma * sq * dens))


def field_norm_sq(psi: HiggsField) -> float:
    return float(np.sum(psi.grid.volume_weights_flat * psi.norm_sq()))


@dataclass(frozen=True)
class YMHTerms:
    gauge_kinetic: float
    magnetic: float
    higgs_kinetic: float
    gradient: float
    potential: float
    offset: float

    @property
    def total(self):
        return 0.5 * self.gauge_kinetic - 0.5 * self.magnetic + 0.5 * self.higgs_kinetic - 0.5 * self.gradient - self.potential

    def to_dict(self):
        return {
            "half_alpha_norm_sq": 0.5 * self.gauge_kinetic,
            "half_F_norm_sq": 0.5 * self.magnetic,
            "half_psi_norm_sq": 0.5 * self.higgs_kinetic,
            "half_DA_phi_norm_sq": 0.5 * self.gradient,
            "potential_integral": self.potential,
            "potential_offset": self.offset,
            "lagrangian": self.total,
        }


def ymh_lagrangian(A, alpha, phi, psi, mu, lam, offset="auto", tol=1e-6) -> YMHTerms:
    """Yang-Mills-Higgs Lagrangian, term by term.

    ``offset="auto"`` subtracts the potential minimum so that the vacuum has
    zero energy density; ``offset=None`` integrates ``V`` as is and raises
    :class:`NonIntegrableError` if the density does not vanish at infinity.
    A number is used as the offset directly.
    """
    _check_lambda(lam)
    if offset == "auto":
        off = potential_minimum(mu, lam)
    elif offset is None:
        off = 0.0
    else:
        off = float(offset)
    dens = potential_density(phi, mu, lam) - off
    tail = float(np.max(np.abs(phi.grid.richardson_outer(dens))))
    if tail > tol:
        hint = "subtract the potential minimum" if offset is None and mu > 0 else "V(phi) - offset must vanish at infinity"
        raise NonIntegrableError("potential", f"density tends to {tail:.3e} at infinity; {hint}")
    return YMHTerms(
        l2_norm_sq(alpha, FLAT),
        l2_norm_sq(curvature(A), FLAT),
        field_norm_sq(psi),
        gradient_norm_sq(A, phi),
        float(np.sum(phi.grid.volume_weights_flat * dens)),
        off,
    )


def act_on_higgs(g: GaugeMap, phi: HiggsField) -> HiggsField:
    """``phi -> rho(g^{-1}) phi``."""
    if g.group_tag != phi.group_tag:
        raise lie.GroupMismatchError(f"{g.group_tag} vs {phi.group_tag}")
    g.grid.check_same(phi.grid)
    ginv = lie.group_inv(g.group_tag, g.data)
    if g.group_tag == lie.U1:
        ginv = ginv[..., 0][..., None]
    return HiggsField(phi.group_tag, phi.grid, to_real(group_action(g.group_tag, ginv, phi.z)))


# ---------------------------------------------------------------------------
# vacuum orbit and stabilizer
# ---------------------------------------------------------------------------


def generator_images(phi_inf, group_tag):
    """Real matrix whose columns are ``rho'(tau_a) phi_inf``."""
    v = np.asarray(phi_inf, dtype=complex).reshape(-1)
    if v.size != rep_dim(group_tag):
        raise ValueError("vector does not match the representation")
    dim = lie.algebra_dim(group_tag)
    cols = [to_real(generator_action(group_tag, np.eye(dim)[a] if dim > 1 else np.ones(1), v)) for a in range(dim)]
    return np.stack(cols, axis=1)


def orbit_tangent_dim_at_infinity(phi_inf, group_tag) -> int:
    M = generator_images(phi_inf, group_tag)
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > RANK_TOL))


def _candidate_elements(group_tag, rng, n=256):
    if group_tag == lie.U1:
        return (2.0 * np.pi * np.arange(n) / n)[:, None]
    special = np.array([[1, 0, 0, 0], [-1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=float)
    return np.concatenate([special, lie.random_group_data(lie.SU2, rng, (n,))])


def stabilizer_elements(phi_inf, group_tag, seed=0, tol=1e-10):
    """Constant group elements fixing ``phi_inf`` among a deterministic probe set."""
    v = np.asarray(phi_inf, dtype=complex).reshape(-1)
    cands = _candidate_elements(group_tag, np.random.default_rng(seed))
    moved = group_action(group_tag, cands, np.broadcast_to(v, (len(cands), v.size)))
    keep = np.linalg.norm(moved - v, axis=-1) < tol
    return [lie.GroupElement(group_tag, c) for c in cands[keep]]


@dataclass(frozen=True)
class PhaseReport:
    phase: str
    group_tag: str
    boundary_condition: str
    orbit_dim: int
    stabilizer_dim: int
    stabilizer_sample: tuple
    boundary_group: str
    quotient: str

    def to_dict(self):
        return {
            "phase": self.phase,
            "group": self.group_tag,
            "boundary_condition": self.boundary_condition,
            "orbit_tangent_dim": self.orbit_dim,
            "stabilizer_dim": self.stabilizer_dim,
            "stabilizer_sample": [list(map(float, g.data)) for g in self.stabilizer_sample],
            "boundary_preserving_group": self.boundary_group,
            "quotient": self.quotient,
        }


def phase_boundary_group(spec: PhaseSpec, group_tag) -> PhaseReport:
    """Which constant gauge transformations survive at infinity in a given phase."""
    dim = lie.algebra_dim(group_tag)
    name = "U(1)" if group_tag == lie.U1 else "SU(2)"
    windings = "" if group_tag == lie.U1 else ", one per winding number in Z"
    if spec.phase == UNBROKEN:
        ident = lie.GroupElement.identity(group_tag)
        return PhaseReport(
            UNBROKEN,
            group_tag,
            "phi -> 0",
            0,
            dim,
            (ident,),
            "asymptotically constant maps",
            f"copies of {name}{windings}",
        )
    v = spec.vacuum
    if v.size != rep_dim(group_tag):
        raise ValueError("phi_inf does not match the representation")
    orbit = orbit_tangent_dim_at_infinity(v, group_tag)
    stab = stabilizer_elements(v, group_tag)
    stab_dim = dim - orbit
    only_identity = stab_dim == 0 and len(stab) == 1
    if only_identity:
        group = "maps tending to the identity"
        quotient = "trivial" if group_tag == lie.U1 else "discrete (winding number in Z)"
    else:
        group = "maps tending to the stabilizer of phi_inf"
        quotient = f"stabilizer of phi_inf (dimension {stab_dim}){windings}"
    return PhaseReport(BROKEN, group_tag, "phi -> phi_inf", orbit, stab_dim, tuple(stab), group, quotient)


# ---------------------------------------------------------------------------
# velocities generated at infinity
# ---------------------------------------------------------------------------


def induced_velocity(g: GaugeMap, phi: HiggsField) -> HiggsField:
    """``psi = d/dt rho(exp(t xi))^{-1} phi`` at ``t = 0`` with ``xi = log g``."""
    if g.group_tag == lie.U1:
        xi = g.data  # the stored lift is the logarithm
    else:
        xi = lie.log_data(lie.SU2, g.data)
    return HiggsField(phi.group_tag, phi.grid, to_real(-generator_action(g.group_tag, xi, phi.z)))


@dataclass(frozen=True)
class GrowthReport:
    cutoffs: tuple
    energies: tuple
    exponent: float
    divergent: bool

    def to_dict(self):
        return {
            "cutoffs": list(self.cutoffs),
            "partial_energies": list(self.energies),
            "growth_exponent": self.exponent,
            "divergent": self.divergent,
        }


def partial_energy(psi: HiggsField, cutoff: float, order=None) -> float:
    """``1/2 int_{r < cutoff} |psi|^2 dVol``.

    The shell density divided by ``r^2`` is bounded for the fields considered,
    so it is interpolated spectrally in ``R`` and integrated with a fresh
    Gauss-Legendre rule on ``[0, R(cutoff)]``.
    """
    grid = psi.grid
    shell = np.tensordot(psi.norm_sq() * np.sin(grid.theta_b), grid.sphere_weights, axes=([1, 2], [0, 1]))
    n = order or 2 * grid.n_r
    Rc = 2.0 * np.arctan(cutoff)
    x, w = np.polynomial.legendre.leggauss(n)
    Rq = 0.5 * Rc * (x + 1.0)
    wq = 0.5 * Rc * w
    vals = np.array([grid.radial_row(R) @ shell for R in Rq])
    r = np.tan(0.5 * Rq)
    # dr = dR / K and dVol = r^2 dr dOmega
    return float(0.5 * np.sum(wq * vals * r * r * (1.0 + r * r) / 2.0))


def velocity_energy_growth(g: GaugeMap, phi: HiggsField, cutoffs=None) -> GrowthReport:
    psi = induced_velocity(g, phi)
    if cutoffs is None:
        cutoffs = default_cutoffs(phi.grid)
    energies = tuple(partial_energy(psi, c) for c in cutoffs)
    e = np.asarray(energies)
    c = np.asarray(cutoffs, dtype=float)
    if np.all(e[-2:] > 1e-300):
        exponent = float(np.log(e[-1] / e[-2]) / np.log(c[-1] / c[-2]))
    else:
        exponent = 0.0
    return GrowthReport(tuple(map(float, cutoffs)), energies, exponent, exponent > DIVERGENCE_EXPONENT)


def boundary_violation_energy(g: GaugeMap, spec: PhaseSpec, phi: HiggsField | None = None, cutoffs=None) -> GrowthReport:
    """Whether the velocity ``g`` induces on the broken vacuum has infinite energy.

    The partial energy is evaluated at three cutoffs (by default 1/8, 1/4
    and 1/2 of the outermost node radius) and called divergent when it grows
    faster than ``cutoff**1.5`` between the last two.
    """
    if spec.phase != BROKEN:
        raise PreconditionError("boundary violation is only meaningful in the broken phase")
    if phi is None:
        phi = HiggsField.constant(g.grid, g.group_tag, spec.vacuum)
    return velocity_energy_growth(g, phi, cutoffs)
