"""Lie group and Lie algebra arithmetic for U(1) and SU(2).

Conventions
-----------
* SU(2) algebra basis ``tau_a = -(i/2) sigma_a`` so that
  ``[tau_a, tau_b] = eps_abc tau_c``. Coefficient vectors therefore bracket
  with the cross product.
* The invariant pairing is ``<X, Y> = -2 Tr(XY)`` (defining representation),
  which makes ``{tau_a}`` orthonormal; on coefficients it is the dot product.
* U(1) algebra elements ``i*lam`` are stored as the real ``lam``; group
  elements ``exp(i*theta)`` as the angle ``theta``.
* SU(2) group elements are unit quaternions ``(w, x, y, z)``; the quaternion
  units ``i, j, k`` correspond to ``2 tau_1, 2 tau_2, 2 tau_3``.

Every function in the vectorised part of this module works on numpy arrays
whose trailing axis holds the coefficients (algebra: length 1 or 3, group:
length 1 or 4), so whole grid fields go through the same code as single
elements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

U1 = "U1"
SU2 = "SU2"
GROUP_TAGS = (U1, SU2)

_ALGEBRA_DIM = {U1: 1, SU2: 3}
_GROUP_DIM = {U1: 1, SU2: 4}

#: SU(2) elements closer than this to -1 have no principal logarithm.
BRANCH_TOL = 1e-12


class GroupMismatchError(ValueError):
    """Operands belong to different structure groups."""


class BranchCutError(ValueError):
    """Logarithm requested at the SU(2) antipode of the identity."""


def check_tag(tag: str) -> str:
    if tag not in GROUP_TAGS:
        raise ValueError(f"unknown group tag {tag!r}; expected one of {GROUP_TAGS}")
    return tag


def algebra_dim(tag: str) -> int:
    return _ALGEBRA_DIM[check_tag(tag)]


def group_dim(tag: str) -> int:
    return _GROUP_DIM[check_tag(tag)]


# ---------------------------------------------------------------------------
# vectorised kernels
# ---------------------------------------------------------------------------


def wrap_angle(theta):
    """Map angles into (-pi, pi]."""
    out = np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)


def bracket_coeffs(tag: str, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if check_tag(tag) == U1:
        return np.zeros(np.broadcast(x, y).shape)
    return np.cross(x, y)


def pair_coeffs(x, y):
    """Invariant pairing on coefficient arrays (sums the trailing axis)."""
    return np.sum(np.asarray(x, dtype=float) * np.asarray(y, dtype=float), axis=-1)


def identity_data(tag: str, shape=()):
    out = np.zeros(tuple(shape) + (group_dim(tag),))
    if tag == SU2:
        out[..., 0] = 1.0
    return out


def quat_mul(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def quat_conj(q):
    q = np.array(q, dtype=float, copy=True)
    q[..., 1:] *= -1.0
    return q


def normalize_quat(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def group_mul(tag: str, g, h):
    if check_tag(tag) == U1:
        return np.asarray(g, dtype=float) + np.asarray(h, dtype=float)
    return normalize_quat(quat_mul(g, h))


def group_inv(tag: str, g):
    if check_tag(tag) == U1:
        return -np.asarray(g, dtype=float)
    return quat_conj(g)


def exp_coeffs(tag: str, x):
    x = np.asarray(x, dtype=float)
    if check_tag(tag) == U1:
        return x.copy()
    half = 0.5 * np.linalg.norm(x, axis=-1)
    # sin(half)/|x| = 0.5*sinc(half/pi)
    factor = 0.5 * np.sinc(half / np.pi)
    return normalize_quat(np.concatenate([np.cos(half)[..., None], factor[..., None] * x], axis=-1))


def log_data(tag: str, g):
    """Principal logarithm; U(1) angles are wrapped into (-pi, pi]."""
    g = np.asarray(g, dtype=float)
    if check_tag(tag) == U1:
        return wrap_angle(g)
    w = g[..., 0]
    v = g[..., 1:]
    s = np.linalg.norm(v, axis=-1)
    if np.any((w < 0) & (s < BRANCH_TOL)):
        raise BranchCutError("SU(2) logarithm undefined at the antipode -1")
    angle = 2.0 * np.arctan2(s, w)
    small = s < 1e-8
    safe_s = np.where(small, 1.0, s)
    with np.errstate(over="ignore", divide="ignore"):
        factor = np.where(small, 2.0 / np.where(w == 0, 1.0, w), angle / safe_s)
    return factor[..., None] * v


def adjoint_coeffs(tag: str, g, x):
    """``Ad_g(X) = g X g^{-1}`` on coefficient arrays."""
    x = np.asarray(x, dtype=float)
    if check_tag(tag) == U1:
        return np.broadcast_to(x, np.broadcast_shapes(x.shape, np.shape(g))).copy()
    g = np.asarray(g, dtype=float)
    w = g[..., :1]
    u = g[..., 1:]
    t = 2.0 * np.cross(u, x)
    return x + w * t + np.cross(u, t)


def group_distance(tag: str, g, h):
    """Geodesic distance ``|log(g^{-1} h)|`` (pointwise)."""
    if check_tag(tag) == U1:
        return np.abs(wrap_angle(np.asarray(h, dtype=float) - np.asarray(g, dtype=float)))[..., 0]
    q = quat_mul(quat_conj(g), h)
    s = np.linalg.norm(q[..., 1:], axis=-1)
    return 2.0 * np.arctan2(s, q[..., 0])


# ---------------------------------------------------------------------------
# single-element value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """An element of u(1) or su(2) given by its basis coefficients."""

    group_tag: str
    coeffs: np.ndarray

    def __post_init__(self):
        check_tag(self.group_tag)
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.shape != (algebra_dim(self.group_tag),):
            raise ValueError(
                f"{self.group_tag} algebra element needs {algebra_dim(self.group_tag)} coefficients, got {c.size}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, tag: str) -> "AlgebraElement":
        return cls(tag, np.zeros(algebra_dim(tag)))

    @classmethod
    def basis(cls, tag: str, a: int) -> "AlgebraElement":
        c = np.zeros(algebra_dim(tag))
        c[a] = 1.0
        return cls(tag, c)

    def __add__(self, other):
        _same(self, other)
        return AlgebraElement(self.group_tag, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same(self, other)
        return AlgebraElement(self.group_tag, self.coeffs - other.coeffs)

    def __neg__(self):
        return AlgebraElement(self.group_tag, -self.coeffs)

    def __mul__(self, s):
        return AlgebraElement(self.group_tag, float(s) * self.coeffs)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def allclose(self, other, atol=1e-12) -> bool:
        return self.group_tag == other.group_tag and np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol)

    def __repr__(self):
        return f"AlgebraElement({self.group_tag}, {self.coeffs.tolist()})"


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of U(1) (angle) or SU(2) (unit quaternion)."""

    group_tag: str
    data: np.ndarray

    def __post_init__(self):
        check_tag(self.group_tag)
        d = np.array(self.data, dtype=float).reshape(-1)
        if d.shape != (group_dim(self.group_tag),):
            raise ValueError(f"{self.group_tag} group element needs {group_dim(self.group_tag)} numbers")
        if self.group_tag == U1:
            d = wrap_angle(d)
        else:
            n = np.linalg.norm(d)
            if n == 0:
                raise ValueError("zero quaternion is not a group element")
            d = d / n
        d.setflags(write=False)
        object.__setattr__(self, "data", d)

    @classmethod
    def identity(cls, tag: str) -> "GroupElement":
        return cls(tag, identity_data(tag))

    @property
    def angle(self) -> float:
        if self.group_tag != U1:
            raise AttributeError("angle is only defined for U(1) elements")
        return float(self.data[0])

    def __matmul__(self, other):
        _same(self, other)
        return GroupElement(self.group_tag, group_mul(self.group_tag, self.data, other.data))

    def inverse(self) -> "GroupElement":
        return GroupElement(self.group_tag, group_inv(self.group_tag, self.data))

    def distance(self, other) -> float:
        _same(self, other)
        return float(group_distance(self.group_tag, self.data, other.data))

    def allclose(self, other, atol=1e-12) -> bool:
        return self.group_tag == other.group_tag and self.distance(other) <= atol

    def __repr__(self):
        return f"GroupElement({self.group_tag}, {self.data.tolist()})"


def _same(a, b):
    if a.group_tag != b.group_tag:
        raise GroupMismatchError(f"group tags differ: {a.group_tag} vs {b.group_tag}")


def bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    _same(x, y)
    return AlgebraElement(x.group_tag, bracket_coeffs(x.group_tag, x.coeffs, y.coeffs))


def exp(x: AlgebraElement) -> GroupElement:
    return GroupElement(x.group_tag, exp_coeffs(x.group_tag, x.coeffs))


def log(g: GroupElement) -> AlgebraElement:
    """Principal-branch logarithm.

    Raises :class:`BranchCutError` for the SU(2) element ``-1``.
    """
    return AlgebraElement(g.group_tag, log_data(g.group_tag, g.data))


def adjoint(g: GroupElement, x: AlgebraElement) -> AlgebraElement:
    _same(g, x)
    return AlgebraElement(x.group_tag, adjoint_coeffs(x.group_tag, g.data, x.coeffs))


def trace_pair(x: AlgebraElement, y: AlgebraElement) -> float:
    _same(x, y)
    return float(pair_coeffs(x.coeffs, y.coeffs))


def random_group_data(tag: str, rng: np.random.Generator, shape=()):
    if check_tag(tag) == U1:
        return rng.uniform(-np.pi, np.pi, size=tuple(shape) + (1,))
    return normalize_quat(rng.normal(size=tuple(shape) + (4,)))


def su2_matrix(q):
    """2x2 complex matrices of unit quaternions (defining representation)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    m = np.empty(q.shape[:-1] + (2, 2), dtype=complex)
    m[..., 0, 0] = w - 1j * z
    m[..., 0, 1] = -1j * x - y
    m[..., 1, 0] = -1j * x + y
    m[..., 1, 1] = w + 1j * z
    return m


def su2_algebra_matrix(x):
    """Matrices ``x^a tau_a`` with ``tau_a = -(i/2) sigma_a``."""
    x = np.asarray(x, dtype=float)
    a, b, c = np.moveaxis(x, -1, 0)
    m = np.empty(x.shape[:-1] + (2, 2), dtype=complex)
    m[..., 0, 0] = -0.5j * c
    m[..., 0, 1] = -0.5j * a - 0.5 * b
    m[..., 1, 0] = -0.5j * a + 0.5 * b
    m[..., 1, 1] = 0.5j * c
    return m
