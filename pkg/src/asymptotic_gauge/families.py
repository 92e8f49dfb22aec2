"""Named analytic field generators evaluated directly on grid nodes.

Every family is regular at the origin and on the polar axis. Radial tails are
expressed through ``(1 + r^2)`` rather than bare powers of ``r`` so the
fields are smooth functions of ``R`` as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lie
from .constraints import coulomb_field
from .forms import LieForm, one_form_from_cartesian, scalar_form
from .gauge import GaugeMap, maurer_cartan
from .geometry import Grid
from .higgs import HiggsField, rep_dim

FORM = "form"
GAUGE = "gauge"
HIGGS = "higgs"


class UnknownFamilyError(KeyError):
    pass


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class Param:
    kind: type
    default: object
    doc: str
    low: float | None = None
    high: float | None = None
    choices: tuple = ()

    def coerce(self, name, value):
        try:
            if self.kind is bool:
                v = value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
            elif self.kind is tuple:
                v = tuple(float(x) for x in (value if isinstance(value, (list, tuple)) else str(value).split()))
            else:
                v = self.kind(value)
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"parameter {name!r}: cannot read {value!r} as {self.kind.__name__}") from exc
        if self.choices and v not in self.choices:
            raise ParameterError(f"parameter {name!r} must be one of {self.choices}, got {v!r}")
        if self.low is not None and v < self.low:
            raise ParameterError(f"parameter {name!r} must be >= {self.low}, got {v}")
        if self.high is not None and v > self.high:
            raise ParameterError(f"parameter {name!r} must be <= {self.high}, got {v}")
        return v

    def describe(self):
        out = {"type": self.kind.__name__, "default": self.default, "doc": self.doc}
        if self.low is not None:
            out["min"] = self.low
        if self.high is not None:
            out["max"] = self.high
        if self.choices:
            out["choices"] = list(self.choices)
        return out


@dataclass(frozen=True)
class Family:
    name: str
    kind: str
    groups: tuple
    doc: str
    params: dict
    builder: object = field(repr=False)

    def resolve(self, values: dict) -> dict:
        unknown = set(values) - set(self.params)
        if unknown:
            raise ParameterError(f"family {self.name!r} has no parameter(s) {sorted(unknown)}")
        return {k: p.coerce(k, values.get(k, p.default)) for k, p in self.params.items()}

    def build(self, grid: Grid, group_tag: str, **values):
        if group_tag not in self.groups:
            raise ParameterError(f"family {self.name!r} supports groups {self.groups}, not {group_tag}")
        return self.builder(grid, group_tag, **self.resolve(values))

    def describe(self):
        return {
            "name": self.name,
            "kind": self.kind,
            "groups": list(self.groups),
            "doc": self.doc,
            "params": {k: p.describe() for k, p in self.params.items()},
        }


REGISTRY: dict[str, Family] = {}


def register(name, kind, groups, doc, **params):
    def deco(fn):
        REGISTRY[name] = Family(name, kind, tuple(groups), doc, params, fn)
        return fn

    return deco


def get_family(name) -> Family:
    if name not in REGISTRY:
        raise UnknownFamilyError(f"unknown family {name!r}; known: {sorted(REGISTRY)}")
    return REGISTRY[name]


def build(name, grid, group_tag, **params):
    return get_family(name).build(grid, group_tag, **params)


def list_families():
    return [REGISTRY[k].describe() for k in sorted(REGISTRY)]


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

_BOTH = (lie.U1, lie.SU2)


def _r(grid):
    return grid.r_b * np.ones(grid.shape)


def _unit(group_tag, direction):
    e = np.zeros(lie.algebra_dim(group_tag))
    e[0 if group_tag == lie.U1 else int(direction)] = 1.0
    return e


def radial_tail(r, kind, power=1.0):
    """Profiles that vanish at infinity (or fail to, for ``oscillating``)."""
    if kind == "power":
        return (1.0 + r * r) ** (-0.5 * power)
    if kind == "exp":
        return np.exp(-r)
    if kind == "gaussian":
        return np.exp(-r * r)
    if kind == "oscillating":
        return np.sin(r)
    if kind == "none":
        return np.zeros_like(r)
    raise ParameterError(f"unknown tail {kind!r}")


def radial_tail_derivative(r, kind, power=1.0):
    if kind == "power":
        return -power * r * (1.0 + r * r) ** (-0.5 * power - 1.0)
    if kind == "exp":
        return -np.exp(-r)
    if kind == "gaussian":
        return -2.0 * r * np.exp(-r * r)
    if kind == "oscillating":
        return np.cos(r)
    return np.zeros_like(r)


def compact_bump(grid, center=(0.0, 0.0, 0.0), radius=1.0):
    """C-infinity bump supported in a ball."""
    x, y, z = grid.cartesian()
    d2 = ((x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2) / radius**2
    out = np.zeros(grid.shape)
    inside = d2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - d2[inside]))
    return out


_TAILS = ("power", "exp", "gaussian", "oscillating", "none")


# ---------------------------------------------------------------------------
# electric fields and connections
# ---------------------------------------------------------------------------


@register(
    "coulomb",
    FORM,
    _BOTH,
    "electric 1-form q r (r^2 + a^2)^(-3/2) dr; exact q/r^2 beyond tail_start when > 0",
    q=Param(float, 1.0, "charge"),
    a=Param(float, 0.5, "core softening radius", low=1e-3),
    tail_start=Param(float, 0.0, "radius beyond which the tail is exactly q/r^2 (0: off)", low=0.0),
    direction=Param(int, 0, "algebra direction for SU(2)", low=0, high=2),
)
def _coulomb(grid, tag, q, a, tail_start, direction):
    return coulomb_field(grid, q, a, tag, direction if tag == lie.SU2 else None, tail_start or None)


@register(
    "dipole_tail",
    FORM,
    _BOTH,
    "electric 1-form q (1+r^2)^(-p/2) dr: flux through infinity vanishes for p > 2",
    q=Param(float, 1.0, "amplitude"),
    power=Param(float, 3.0, "tail exponent p", low=0.5),
    direction=Param(int, 0, "algebra direction for SU(2)", low=0, high=2),
)
def _dipole_tail(grid, tag, q, power, direction):
    r = _r(grid)
    prof = q * r * (1.0 + r * r) ** (-0.5 * (power + 1.0))
    data = np.zeros((3,) + grid.shape + (lie.algebra_dim(tag),))
    data[0] = prof[..., None] * _unit(tag, direction)
    return LieForm(1, "sigma", tag, grid, data)


@register(
    "smooth_connection",
    FORM,
    _BOTH,
    "random 1-form: Cartesian polynomial coefficients times (1+r^2)^(-decay/2)",
    seed=Param(int, 0, "random seed"),
    amplitude=Param(float, 1.0, "overall scale"),
    decay=Param(float, 4.0, "tail exponent", low=1.0),
)
def _smooth_connection(grid, tag, seed, amplitude, decay):
    return random_smooth_one_form(grid, tag, np.random.default_rng(seed), amplitude, decay)


def random_smooth_one_form(grid, tag, rng, amplitude=1.0, decay=4.0):
    x, y, z = grid.cartesian()
    r = _r(grid)
    w = (1.0 + r * r) ** (-0.5 * decay)
    monos = [np.ones(grid.shape), x, y, z, x * y, y * z, z * x]
    dim = lie.algebra_dim(tag)
    comps = []
    for _ in range(3):
        c = rng.normal(size=(len(monos), dim))
        comps.append(amplitude * w[..., None] * sum(m[..., None] * ci for m, ci in zip(monos, c)))
    return one_form_from_cartesian(grid, *comps, group_tag=tag)


def random_smooth_scalar(grid, tag, rng, boundary=None, decay=4.0):
    """Random 0-form ``c + P(x) (1+r^2)^(-decay/2)`` with ``P`` polynomial of degree 2 or less.

    ``boundary`` fixes ``c`` (algebra coefficients); default is random. The
    field tends to ``c`` like ``r^(2 - decay)``, so ``decay`` must exceed 2.
    """
    if decay <= 2.0:
        raise ValueError("decay must exceed the polynomial degree 2")
    x, y, z = grid.cartesian()
    r = _r(grid)
    dim = lie.algebra_dim(tag)
    w = (1.0 + r * r) ** (-0.5 * decay)
    monos = [np.ones(grid.shape), x, y, z, x * x - y * y, y * z]
    coef = rng.normal(size=(len(monos), dim))
    c = rng.normal(size=dim) if boundary is None else np.asarray(boundary, dtype=float)
    vals = c + w[..., None] * sum(m[..., None] * ci for m, ci in zip(monos, coef))
    return scalar_form(grid, vals, tag)


@register(
    "gaussian_bump",
    FORM,
    _BOTH,
    "0-form c + amplitude exp(-|x - center|^2 / width^2), or compactly supported when compact = true",
    amplitude=Param(float, 1.0, "bump height"),
    width=Param(float, 1.0, "bump width", low=1e-2),
    center=Param(tuple, (0.0, 0.0, 0.0), "bump centre (x y z)"),
    offset=Param(float, 0.0, "constant value c"),
    compact=Param(bool, False, "use a compactly supported bump"),
    direction=Param(int, 0, "algebra direction for SU(2)", low=0, high=2),
)
def _gaussian_bump(grid, tag, amplitude, width, center, offset, compact, direction):
    if len(center) != 3:
        raise ParameterError("center needs three coordinates")
    if compact:
        f = compact_bump(grid, center, width)
    else:
        x, y, z = grid.cartesian()
        f = np.exp(-((x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2) / width**2)
    vals = (offset + amplitude * f)[..., None] * _unit(tag, direction)
    return scalar_form(grid, vals, tag)


@register(
    "power_tail",
    FORM,
    _BOTH,
    "0-form c + amplitude * tail(r) with tail power (1+r^2)^(-p/2), exp, gaussian or oscillating sin(r)",
    offset=Param(float, 0.0, "limit value c"),
    amplitude=Param(float, 1.0, "tail amplitude"),
    tail=Param(str, "power", "tail profile", choices=_TAILS),
    power=Param(float, 1.0, "exponent p of the power tail", low=0.0),
    direction=Param(int, 0, "algebra direction for SU(2)", low=0, high=2),
)
def _power_tail(grid, tag, offset, amplitude, tail, power, direction):
    r = _r(grid)
    vals = (offset + amplitude * radial_tail(r, tail, power))[..., None] * _unit(tag, direction)
    return scalar_form(grid, vals, tag)


def power_tail_derivative(grid, tag, amplitude=1.0, tail="power", power=1.0, direction=0):
    """Exact ``d/dr`` of :func:`_power_tail`, shaped like the 0-form values."""
    r = _r(grid)
    return (amplitude * radial_tail_derivative(r, tail, power))[..., None] * _unit(tag, direction)


# ---------------------------------------------------------------------------
# gauge maps
# ---------------------------------------------------------------------------


@register(
    "constant_map",
    GAUGE,
    _BOTH,
    "constant gauge map exp(angle * e_direction)",
    angle=Param(float, 0.0, "rotation angle"),
    direction=Param(int, 2, "algebra direction for SU(2)", low=0, high=2),
)
def _constant_map(grid, tag, angle, direction):
    x = np.broadcast_to(angle * _unit(tag, direction), grid.shape + (lie.algebra_dim(tag),))
    return GaugeMap.from_algebra(grid, tag, x, "constant_map", {"angle": angle})


@register(
    "phase_winding",
    GAUGE,
    _BOTH,
    "exp((c + amplitude * tail(r) * (1 + x/(1+r))) e_direction): boundary value exp(c) for decaying tails",
    c=Param(float, 0.0, "boundary angle"),
    amplitude=Param(float, 1.0, "tail amplitude"),
    tail=Param(str, "power", "tail profile", choices=_TAILS),
    power=Param(float, 1.0, "exponent of the power tail", low=0.0),
    direction=Param(int, 2, "algebra direction for SU(2)", low=0, high=2),
    angular=Param(bool, False, "modulate the tail by a smooth angular factor"),
)
def _phase_winding(grid, tag, c, amplitude, tail, power, direction, angular):
    r = _r(grid)
    prof = radial_tail(r, tail, power)
    if angular:
        x, _, _ = grid.cartesian()
        prof = prof * (1.0 + 0.5 * x / np.sqrt(1.0 + r * r))
    angle = c + amplitude * prof
    x = angle[..., None] * _unit(tag, direction)
    return GaugeMap.from_algebra(grid, tag, x, "phase_winding", {"c": c})


def hedgehog_profile(r, winding, scale=1.0):
    """``chi(r) = 4 k arctan(r / scale)``: rises from 0 to ``2 pi k``."""
    return 4.0 * winding * np.arctan(r / scale)


@register(
    "hedgehog",
    GAUGE,
    (lie.SU2,),
    "SU(2) hedgehog exp(chi(r) x_hat . tau), chi(r) = 4 k arctan(r/scale) from 0 to 2 pi k",
    winding=Param(int, 1, "number of times the profile covers SU(2)", low=-4, high=4),
    scale=Param(float, 1.0, "profile scale", low=0.1, high=10.0),
)
def _hedgehog(grid, tag, winding, scale):
    return hedgehog(grid, winding, scale)


def hedgehog(grid, winding=1, scale=1.0, center=None):
    x, y, z = grid.cartesian()
    if center is not None:
        x, y, z = x - center[0], y - center[1], z - center[2]
    r = np.sqrt(x * x + y * y + z * z)
    safe = np.where(r > 0, r, 1.0)
    chi = hedgehog_profile(r, winding, scale)
    xhat = np.stack([x / safe, y / safe, z / safe], axis=-1)
    return GaugeMap.from_algebra(grid, lie.SU2, chi[..., None] * xhat, "hedgehog", {"winding": winding})


@register(
    "pure_gauge",
    FORM,
    _BOTH,
    "connection g^{-1} dg of a hedgehog (SU(2)) or a phase map (U(1))",
    winding=Param(int, 1, "hedgehog winding (SU(2))", low=-4, high=4),
    c=Param(float, 0.5, "boundary angle of the phase map (U(1))"),
)
def _pure_gauge(grid, tag, winding, c):
    if tag == lie.SU2:
        g = hedgehog(grid, winding)
    else:
        g = _phase_winding(grid, tag, c, 1.0, "power", 1.0, 0, True)
    return maurer_cartan(g, "sigma")


# ---------------------------------------------------------------------------
# Higgs fields
# ---------------------------------------------------------------------------


@register(
    "higgs_vacuum",
    HIGGS,
    _BOTH,
    "Higgs field phi_inf * f(r): f = 1 (constant), r/sqrt(1+r^2) (kink) or (1+r^2)^(-1/2) (decaying)",
    mu=Param(float, 2.0, "potential parameter mu"),
    lam=Param(float, 1.0, "potential parameter lambda", low=1e-12),
    profile=Param(str, "constant", "radial profile", choices=("constant", "kink", "decaying")),
)
def _higgs_vacuum(grid, tag, mu, lam, profile):
    v = np.sqrt(max(mu, 0.0) / (2.0 * lam)) if profile != "decaying" else 1.0
    r = _r(grid)
    f = {"constant": np.ones_like(r), "kink": r / np.sqrt(1.0 + r * r), "decaying": 1.0 / np.sqrt(1.0 + r * r)}[profile]
    z = np.zeros(grid.shape + (rep_dim(tag),), dtype=complex)
    z[..., 0] = v * f
    return HiggsField.from_complex(grid, tag, z)
