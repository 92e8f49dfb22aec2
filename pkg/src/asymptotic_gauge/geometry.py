"""Conformal chart between flat space and its compactification, plus grids.

The flat Cauchy surface (chart ``"sigma"``, radial coordinate ``r``) is
mapped into the compact ball (chart ``"sigma_hat"``, radial coordinate
``R``) by ``R = 2 arctan(r)``; the round metric ``dR^2 + sin^2 R dOmega^2``
pulls back to ``K^2`` times the flat metric with ``K = 2 / (1 + r^2)``.
Spatial infinity sits at ``R = pi``.

Grids are tensor products of Gauss-Legendre nodes in ``R`` and ``theta``
(both on ``(0, pi)``, so no node touches the origin, the poles or infinity)
and uniform nodes in ``phi``. Derivatives are collocation derivatives of the
polynomial interpolant (``R``, ``theta``) and Fourier derivatives (``phi``).
With these choices the discrete product rule integrates exactly:
``sum w (f' g + f g') = [f g]`` at the interval ends, which is what makes
the bulk/boundary split of the smeared Gauss law hold to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

SIGMA = "sigma"
SIGMA_HAT = "sigma_hat"
CHARTS = (SIGMA, SIGMA_HAT)

FLAT = "flat_sigma"
ROUND = "round_sigma_hat"
METRICS = (FLAT, ROUND)

MIN_RADIAL = 8
MIN_THETA = 8
MIN_PHI = 8


class GridMismatchError(ValueError):
    pass


# ---------------------------------------------------------------------------
# chart maps
# ---------------------------------------------------------------------------


def r_to_R(r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    return 2.0 * np.arctan(r)


def R_to_r(R):
    R = np.asarray(R, dtype=float)
    if np.any((R < 0) | (R >= np.pi)):
        raise ValueError("R must lie in [0, pi)")
    return np.tan(0.5 * R)


def conformal_factor(r):
    """``K = 2 / (1 + r^2)`` on the t = 0 slice."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    return 2.0 / (1.0 + r * r)


def conformal_factor_t(t, r):
    """Conformal factor on an arbitrary Minkowski time slice.

    Exposed for reference only; everything else in the package works at t = 0.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    return 2.0 / np.sqrt(((t + r) ** 2 + 1.0) * ((t - r) ** 2 + 1.0))


def conformal_factor_R(R):
    """K expressed through the compact radius: ``2 cos^2(R/2)``."""
    return 2.0 * np.cos(0.5 * np.asarray(R, dtype=float)) ** 2


def boundary_coordinate(r):
    """Distance to the conformal boundary, ``rho = pi - R``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    # pi - 2 arctan(r) = 2 arctan(1/r), which keeps full precision at large r
    return 2.0 * np.arctan(1.0 / r)


@dataclass(frozen=True)
class ConformalChart:
    """Namespace object bundling the chart maps."""

    r_to_R = staticmethod(r_to_R)
    R_to_r = staticmethod(R_to_r)
    K = staticmethod(conformal_factor)
    rho = staticmethod(boundary_coordinate)


# ---------------------------------------------------------------------------
# 1-D spectral building blocks
# ---------------------------------------------------------------------------


def _gauss_legendre(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    bary = np.sqrt((1.0 - x * x) * w) * (-1.0) ** np.arange(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w, x, bary, half


def _collocation_matrix(x, bary):
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def _interp_row(x, bary, x0):
    d = x0 - x
    if np.any(d == 0):
        row = (d == 0).astype(float)
        return row
    t = bary / d
    return t / t.sum()


def _fourier_derivative(f, axis, n):
    k = np.fft.rfftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[-1] = 0.0
    shape = [1] * f.ndim
    shape[axis] = k.size
    fh = np.fft.rfft(f, axis=axis)
    return np.fft.irfft(1j * k.reshape(shape) * fh, n=n, axis=axis)


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Grid:
    """Spherical tensor grid shared by both charts.

    Node arrays are one-dimensional; the ``*_b`` properties broadcast them to
    the ``(n_r, n_theta, n_phi)`` field shape.
    """

    n_r: int
    n_theta: int
    n_phi: int
    chart: str = SIGMA

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ValueError(f"unknown chart {self.chart!r}")

    # -- nodes -----------------------------------------------------------
    @cached_property
    def _radial(self):
        return _gauss_legendre(self.n_r, 0.0, np.pi)

    @cached_property
    def _polar(self):
        return _gauss_legendre(self.n_theta, 0.0, np.pi)

    @property
    def shape(self):
        return (self.n_r, self.n_theta, self.n_phi)

    @property
    def R(self):
        return self._radial[0]

    @property
    def theta(self):
        return self._polar[0]

    @cached_property
    def phi(self):
        return 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi

    @cached_property
    def r(self):
        return np.tan(0.5 * self.R)

    @cached_property
    def K(self):
        return conformal_factor_R(self.R)

    @cached_property
    def rho(self):
        return np.pi - self.R

    @property
    def boundary_shell(self) -> int:
        return self.n_r - 1

    @property
    def r_b(self):
        return self.r[:, None, None]

    @property
    def R_b(self):
        return self.R[:, None, None]

    @property
    def K_b(self):
        return self.K[:, None, None]

    @property
    def theta_b(self):
        return self.theta[None, :, None]

    @property
    def phi_b(self):
        return self.phi[None, None, :]

    def cartesian(self):
        """Cartesian coordinates ``(x, y, z)`` of the nodes in flat space."""
        st = np.sin(self.theta_b)
        return (
            self.r_b * st * np.cos(self.phi_b),
            self.r_b * st * np.sin(self.phi_b),
            self.r_b * np.cos(self.theta_b) * np.ones_like(self.phi_b),
        )

    # -- weights ---------------------------------------------------------
    @property
    def w_R(self):
        return self._radial[1]

    @property
    def w_theta(self):
        return self._polar[1]

    @cached_property
    def w_phi(self):
        return np.full(self.n_phi, 2.0 * np.pi / self.n_phi)

    @cached_property
    def coord_weights_hat(self):
        """Weights for ``int f dR dtheta dphi``."""
        return self.w_R[:, None, None] * self.w_theta[None, :, None] * self.w_phi[None, None, :]

    @cached_property
    def coord_weights_sigma(self):
        """Weights for ``int f dr dtheta dphi`` (``dr = dR / K``)."""
        return self.coord_weights_hat / self.K_b

    def coord_weights(self, chart):
        return self.coord_weights_sigma if chart == SIGMA else self.coord_weights_hat

    @cached_property
    def sqrt_det_flat(self):
        return self.r_b**2 * np.sin(self.theta_b) * np.ones_like(self.phi_b)

    @cached_property
    def sqrt_det_round(self):
        return np.sin(self.R_b) ** 2 * np.sin(self.theta_b) * np.ones_like(self.phi_b)

    @cached_property
    def volume_weights_flat(self):
        return self.coord_weights_sigma * self.sqrt_det_flat

    @cached_property
    def volume_weights_round(self):
        return self.coord_weights_hat * self.sqrt_det_round

    @cached_property
    def sphere_weights(self):
        """Weights for ``int f dtheta dphi`` on one shell."""
        return self.w_theta[:, None] * self.w_phi[None, :]

    # -- metrics -----------------------------------------------------------
    def metric_diagonal(self, metric):
        """Diagonal metric components ``(g_11, g_22, g_33)`` and ``sqrt(det g)``."""
        ones = np.ones(self.shape)
        st2 = np.sin(self.theta_b) ** 2
        if metric == FLAT:
            r2 = self.r_b**2 * ones
            return (ones, r2, r2 * st2), self.sqrt_det_flat
        if metric == ROUND:
            s2 = np.sin(self.R_b) ** 2 * ones
            return (ones, s2, s2 * st2), self.sqrt_det_round
        raise ValueError(f"unknown metric {metric!r}")

    # -- differentiation ---------------------------------------------------
    @cached_property
    def D_R(self):
        _, _, x, bary, half = self._radial
        return _collocation_matrix(x, bary) / half

    @cached_property
    def D_theta(self):
        _, _, x, bary, half = self._polar
        return _collocation_matrix(x, bary) / half

    def radial_row(self, R0):
        _, _, x, bary, half = self._radial
        return _interp_row(x, bary, R0 / half - 1.0)

    def polar_row(self, theta0):
        _, _, x, bary, half = self._polar
        return _interp_row(x, bary, theta0 / half - 1.0)

    @cached_property
    def outer_row(self):
        """Interpolation weights evaluating a radial profile at ``R = pi``."""
        return self.radial_row(np.pi)

    @cached_property
    def inner_row(self):
        return self.radial_row(0.0)

    def derivative(self, f, axis, chart=None):
        """Partial derivative of a field along coordinate ``axis`` (0, 1, 2).

        ``f`` has the field shape in its first three axes. In chart
        ``sigma`` the radial derivative is with respect to ``r``.
        """
        chart = chart or self.chart
        f = np.asarray(f, dtype=float)
        if axis == 0:
            out = np.tensordot(self.D_R, f, axes=(1, 0))
            if chart == SIGMA:
                out = out * self.K.reshape((-1,) + (1,) * (f.ndim - 1))
            return out
        if axis == 1:
            return np.moveaxis(np.tensordot(self.D_theta, f, axes=(1, 1)), 0, 1)
        if axis == 2:
            return _fourier_derivative(f, 2, self.n_phi)
        raise ValueError("axis must be 0, 1 or 2")

    def at_outer(self, f):
        """Polynomial extension of a field to the conformal boundary ``R = pi``."""
        return np.tensordot(self.outer_row, np.asarray(f, dtype=float), axes=(0, 0))

    def at_inner(self, f):
        return np.tensordot(self.inner_row, np.asarray(f, dtype=float), axes=(0, 0))

    def richardson_outer(self, f):
        """Quadratic extrapolation to ``rho = 0`` from the last three layers."""
        rho = self.rho[-3:]
        f = np.asarray(f, dtype=float)[-3:]
        l0 = rho[1] * rho[2] / ((rho[0] - rho[1]) * (rho[0] - rho[2]))
        l1 = rho[0] * rho[2] / ((rho[1] - rho[0]) * (rho[1] - rho[2]))
        l2 = rho[0] * rho[1] / ((rho[2] - rho[0]) * (rho[2] - rho[1]))
        return l0 * f[0] + l1 * f[1] + l2 * f[2]

    def outer_window(self, fraction=0.25, minimum=6):
        """Indices of the outermost radial layers used for asymptotic fits."""
        n = max(minimum, int(round(fraction * self.n_r)))
        n = min(n, self.n_r)
        return np.arange(self.n_r - n, self.n_r)

    # -- identity ----------------------------------------------------------
    def with_chart(self, chart):
        if chart == self.chart:
            return self
        g = Grid(self.n_r, self.n_theta, self.n_phi, chart)
        # share the (expensive) cached node data
        for key in ("_radial", "_polar", "D_R", "D_theta"):
            if key in self.__dict__:
                g.__dict__[key] = self.__dict__[key]
        return g

    def same_nodes(self, other) -> bool:
        return isinstance(other, Grid) and self.shape == other.shape

    def check_same(self, other):
        if not self.same_nodes(other):
            raise GridMismatchError(f"grid {self.shape} does not match {getattr(other, 'shape', other)}")

    def scaled(self, factor: int):
        return Grid(self.n_r * factor, self.n_theta * factor, self.n_phi * factor, self.chart)

    def __repr__(self):
        return f"Grid({self.n_r}x{self.n_theta}x{self.n_phi}, chart={self.chart})"


def build_grid(n_r: int, n_theta: int, n_phi: int, chart: str = SIGMA) -> Grid:
    if n_r < MIN_RADIAL or n_theta < MIN_THETA:
        raise ValueError(f"n_r and n_theta must be >= {MIN_RADIAL}")
    if n_phi < MIN_PHI or n_phi % 2:
        raise ValueError(f"n_phi must be even and >= {MIN_PHI}")
    if chart not in CHARTS:
        raise ValueError(f"unknown chart {chart!r}")
    return Grid(int(n_r), int(n_theta), int(n_phi), chart)


def integrate_scalar(f, grid: Grid, weights: str = FLAT) -> float:
    """Integrate a scalar field against the flat or round volume element."""
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise GridMismatchError(f"field shape {f.shape} does not match grid {grid.shape}")
    if weights == FLAT:
        w = grid.volume_weights_flat
    elif weights == ROUND:
        w = grid.volume_weights_round
    else:
        raise ValueError(f"unknown weights {weights!r}")
    return float(np.sum(w * f))
