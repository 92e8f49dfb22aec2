"""End-to-end acceptance checks, one test per criterion.

Every test prints a single ``[criterion N] PASS|FAIL`` line (also visible
without ``-s``) and enforces its runtime budget.
"""

import time

import numpy as np
import pytest
from scipy import ndimage

from asymptotic_gauge import families, lie
from asymptotic_gauge.constraints import (
    PhasePoint,
    bulk_boundary_split,
    coulomb_field,
    electric_flux,
    momentum_identity_residual,
)
from asymptotic_gauge.forms import LieForm, curvature, hodge, l2_norm_sq, scalar_form
from asymptotic_gauge.gauge import (
    ASYMPTOTICALLY_TRIVIAL,
    BOUNDARY_PRESERVING,
    FORMAL,
    GaugeMap,
    PreconditionError,
    act_on_connection,
    classify,
    is_localizable,
    quotient_representative,
    rate_lemma_check,
    winding_number,
)
from asymptotic_gauge.geometry import FLAT, SIGMA_HAT, R_to_r, boundary_coordinate, build_grid, r_to_R
from asymptotic_gauge.higgs import (
    BROKEN,
    UNBROKEN,
    PhaseSpec,
    boundary_violation_energy,
    orbit_tangent_dim_at_infinity,
    phase_boundary_group,
    stabilizer_elements,
    velocity_energy_growth,
)


class Criterion:
    """Collects checks, times the block and prints one verdict line."""

    def __init__(self, capsys, number, title, budget):
        self.capsys, self.number, self.title, self.budget = capsys, number, title, budget
        self.failures = []
        self.notes = []

    def check(self, ok, message):
        if not ok:
            self.failures.append(message)

    def note(self, text):
        self.notes.append(text)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        if elapsed >= self.budget:
            self.failures.append(f"runtime {elapsed:.1f}s over the {self.budget:.0f}s budget")
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures or self.notes)
        with self.capsys.disabled():
            print(f"\n[criterion {self.number:2d}] {status} {self.title} ({elapsed:.1f}s): {detail}")
        if exc is None and self.failures:
            pytest.fail("; ".join(self.failures))
        return False


@pytest.fixture
def criterion(capsys):
    def make(number, title, budget):
        return Criterion(capsys, number, title, budget)

    return make


def _zero(grid, degree=1, tag=lie.U1):
    return LieForm.zeros(grid, degree, tag)


def _constant_xi(grid, c, tag=lie.U1):
    return scalar_form(grid, np.broadcast_to(np.asarray(c, dtype=float), grid.shape + (lie.algebra_dim(tag),)), tag)


def _orders(changes, floor):
    c = np.maximum(np.asarray(changes, dtype=float), floor)
    return np.log2(c[:-1] / c[1:])


# ---------------------------------------------------------------------------


def test_conformal_chart(criterion):
    with criterion(1, "conformal chart", 1.0) as c:
        r = np.geomspace(1e-3, 1e3, 10_000)
        trip = np.abs(R_to_r(r_to_R(r)) - r) / r
        c.check(trip.max() < 1e-12, f"round trip error {trip.max():.2e}")
        far = np.geomspace(10.0, 1e6, 10_000)
        excess = np.abs(boundary_coordinate(far) - 2.0 / far) * far**3
        c.check(excess.max() <= 1.0, f"max r^3 |rho - 2/r| = {excess.max():.3f}")
        c.note(f"round trip {trip.max():.1e}, max r^3 |rho - 2/r| = {excess.max():.3f}")


def test_yang_mills_gauge_invariance(criterion):
    with criterion(2, "gauge invariance of the magnetic energy", 120.0) as c:
        grid = build_grid(64, 32, 64)
        A = families.build("smooth_connection", grid, lie.U1, seed=1)
        base = l2_norm_sq(curvature(A))
        worst = 0.0
        for s in range(20):
            xi = families.random_smooth_scalar(grid, lie.U1, np.random.default_rng(100 + s))
            g = GaugeMap.from_algebra(grid, lie.U1, xi.data[0])
            moved = l2_norm_sq(curvature(act_on_connection(g, A)))
            worst = max(worst, abs(moved - base) / abs(base))
        c.check(worst < 1e-6, f"abelian relative change {worst:.2e}")

        changes = []
        for n in (8, 16, 32):
            grid = build_grid(n, n, n)
            A = families.build("smooth_connection", grid, lie.SU2, seed=3, amplitude=0.5)
            xi = families.random_smooth_scalar(grid, lie.SU2, np.random.default_rng(7))
            g = GaugeMap.from_algebra(grid, lie.SU2, 0.5 * xi.data[0])
            before = l2_norm_sq(curvature(A))
            changes.append(abs(l2_norm_sq(curvature(act_on_connection(g, A))) - before) / abs(before))
        orders = _orders(changes, 1e-13)
        c.check(changes[-1] < changes[0], f"SU(2) changes do not decrease: {changes}")
        c.check(orders.min() >= 2.0, f"observed orders {orders}")
        c.note(f"abelian {worst:.1e}; SU(2) changes {', '.join(f'{x:.1e}' for x in changes)}, min order {orders.min():.1f}")


def test_discrete_stokes(criterion):
    with criterion(3, "bulk + boundary split", 60.0) as c:
        grid = build_grid(16, 24, 24)
        worst = 0.0
        for k in range(50):
            tag = lie.U1 if k % 2 == 0 else lie.SU2
            rng = np.random.default_rng(500 + k)
            A = families.random_smooth_one_form(grid, tag, rng, amplitude=0.5)
            calE = families.random_smooth_one_form(grid, tag, rng)
            xi = families.random_smooth_scalar(grid, tag, rng)
            worst = max(worst, bulk_boundary_split(PhasePoint(A, calE), xi).relative_residual)
        c.check(worst < 1e-6, f"worst relative Stokes residual {worst:.2e}")
        c.note(f"worst relative residual {worst:.1e} over 50 pairs")


def test_coulomb_flux(criterion):
    with criterion(4, "Coulomb flux", 60.0) as c:
        grid = build_grid(24, 12, 12)
        for q in (1.0, 2.5):
            p = PhasePoint(_zero(grid), coulomb_field(grid, q=q))
            flux = electric_flux(p).coeffs[0]
            hat = electric_flux(p, chart=SIGMA_HAT).coeffs[0]
            err = abs(flux / (4 * np.pi * q) - 1)
            side = abs(hat / flux - 1)
            c.check(err < 1e-2, f"q={q}: flux off by {err:.2e}")
            c.check(side < 1e-3, f"q={q}: compactified side differs by {side:.2e}")
            c.note(f"q={q}: flux error {err:.1e}, chart difference {side:.1e}")


def test_momentum_map_dichotomy(criterion):
    with criterion(5, "momentum map dichotomy", 120.0) as c:
        grid = build_grid(24, 24, 24)
        vanishing = []
        for k in range(10):
            rng = np.random.default_rng(900 + k)
            A = families.random_smooth_one_form(grid, lie.SU2, rng, amplitude=0.5)
            calE = families.random_smooth_one_form(grid, lie.SU2, rng)
            xi = families.random_smooth_scalar(grid, lie.SU2, rng, boundary=[0.0, 0.0, 0.0])
            delta = (families.random_smooth_one_form(grid, lie.SU2, rng), hodge(families.random_smooth_one_form(grid, lie.SU2, rng), FLAT))
            vanishing.append(abs(momentum_identity_residual(PhasePoint(A, calE), xi, delta).residual))
        c.check(max(vanishing) < 1e-6, f"boundary-vanishing residual {max(vanishing):.2e}")

        cases = [(lie.U1, 0.7, 1.0, None), (lie.U1, -1.3, 2.5, None), (lie.SU2, 0.5, 1.5, 0)]
        for tag, const, q, direction in cases:
            E0 = families.build("dipole_tail", grid, tag, q=0.5)
            A = families.build("smooth_connection", grid, tag, seed=4, amplitude=0.3)
            p = PhasePoint(A, E0)
            value = np.zeros(lie.algebra_dim(tag))
            value[0] = const
            delta = (_zero(grid, 1, tag), hodge(coulomb_field(grid, q=q, group_tag=tag, direction=direction), FLAT))
            res = momentum_identity_residual(p, _constant_xi(grid, value, tag), delta).residual
            target = const * 4 * np.pi * q
            c.check(abs(res / target - 1) < 1e-2, f"{tag} c={const}: residual {res:.6g} vs c Phi = {target:.6g}")
            c.check(abs(res) > 10 * max(vanishing), f"{tag} c={const}: residual not separated from zero")
        c.note(f"max vanishing residual {max(vanishing):.1e}; constant-parameter residuals within 1% of c Phi")


@pytest.mark.parametrize("epsilon", [0.1, 0.5])
def test_rate_lemma(criterion, epsilon):
    with criterion(6, f"rate lemma (eps={epsilon})", 30.0) as c:
        grid = build_grid(32, 8, 8)
        p = 0.5 + epsilon
        for offset in (0.0, 0.8, -2.0):
            xi = families.build("power_tail", grid, lie.U1, offset=offset, power=p)
            d = families.power_tail_derivative(grid, lie.U1, power=p)
            rep = rate_lemma_check(xi, epsilon, p, dxi_dr=d)
            c.check(rep.fraction_satisfied == 1.0, f"c={offset}: bound holds at {rep.fraction_satisfied:.0%} of nodes")
            c.check(abs(rep.boundary_value[0] - offset) < 1e-2, f"c={offset}: limit {rep.boundary_value[0]:.4f}")
        wave = families.build("power_tail", grid, lie.U1, offset=0.3, tail="oscillating")
        try:
            rate_lemma_check(wave, epsilon, p)
            c.check(False, "oscillating family passed the precondition")
        except PreconditionError:
            pass
        c.note("bound holds at 100% of window nodes; sin(r) rejected at the precondition")


def _labeled_suite(grid):
    cases = []
    for angle in (0.4, -1.2, 2.5):
        g = families.build("constant_map", grid, lie.U1, angle=angle)
        cases.append(("U(1) constant", g, BOUNDARY_PRESERVING, g.at((0, 0, 0))))
    for angle, direction in ((0.6, 0), (-1.1, 1), (2.2, 2)):
        g = families.build("constant_map", grid, lie.SU2, angle=angle, direction=direction)
        cases.append(("SU(2) constant", g, BOUNDARY_PRESERVING, g.at((0, 0, 0))))
    rng = np.random.default_rng(31)
    for k in range(8):
        tag = lie.U1 if k % 2 == 0 else lie.SU2
        const = families.build("constant_map", grid, tag, angle=rng.uniform(0.3, 2.5), direction=k % 3)
        bump = families.compact_bump(grid, center=rng.uniform(-1, 1, 3), radius=rng.uniform(1.0, 3.0))
        amp = rng.normal(size=lie.algebra_dim(tag))
        g = const @ GaugeMap.from_algebra(grid, tag, bump[..., None] * amp)
        cases.append(("compact perturbation", g, BOUNDARY_PRESERVING, const.at((0, 0, 0))))
    for k in range(8):
        tag = lie.U1 if k % 2 == 0 else lie.SU2
        g = families.build("phase_winding", grid, tag, c=0.0, tail="exp", amplitude=0.5 + 0.3 * k, angular=k % 3 == 0, direction=k % 3)
        cases.append(("exp decay to identity", g, ASYMPTOTICALLY_TRIVIAL, lie.GroupElement.identity(tag)))
    for k in range(8):
        tag = lie.U1 if k % 2 == 0 else lie.SU2
        g = families.build("phase_winding", grid, tag, c=0.2 * k, tail="oscillating", amplitude=0.5 + 0.1 * k, direction=k % 3)
        cases.append(("sin(r) phase", g, FORMAL, None))
    return cases


def test_classification_hierarchy(criterion):
    with criterion(7, "classification hierarchy", 60.0) as c:
        cases = _labeled_suite(build_grid(24, 12, 12))
        wrong = []
        for label, g, expected, const in cases:
            cls = classify(g)
            if cls.variant != expected:
                wrong.append(f"{label}: {cls.variant}")
            elif const is not None and cls.boundary_constant.distance(const) >= 1e-3:
                wrong.append(f"{label}: constant off by {cls.boundary_constant.distance(const):.1e}")
        c.check(len(cases) == 30, f"suite has {len(cases)} cases")
        c.check(not wrong, f"{len(wrong)} misclassified: {wrong}")
        c.note(f"0 misclassifications over {len(cases)} labeled maps")


def test_winding(criterion):
    with criterion(8, "winding number", 120.0) as c:
        grid = build_grid(24, 24, 24)
        w0 = winding_number(families.build("constant_map", grid, lie.SU2, angle=1.3))
        c.check(w0.value == 0 and w0.rounding_distance < 0.05, f"constant map winding {w0.raw:.4f}")
        w1 = winding_number(families.hedgehog(grid, 1))
        c.check(w1.value == 1 and w1.rounding_distance < 0.05, f"hedgehog winding {w1.raw:.4f}")
        w2 = winding_number(families.hedgehog(grid, 2))
        c.check(w2.value == 2 and w2.rounding_distance < 0.05, f"doubled hedgehog winding {w2.raw:.4f}")
        rng = np.random.default_rng(8)
        for _ in range(5):
            k1, k2 = rng.choice([-1, 1, 2], size=2)
            h1 = families.hedgehog(grid, int(k1), center=rng.uniform(-0.5, 0.5, 3))
            h2 = families.hedgehog(grid, int(k2), center=rng.uniform(-0.5, 0.5, 3))
            a, b, ab = winding_number(h1), winding_number(h2), winding_number(h1 @ h2)
            c.check(ab.value == a.value + b.value and ab.confident, f"w({k1}) * w({k2}) gave {ab.raw:.4f}")
        c.note(f"hedgehog {w1.raw:.4f}, doubled {w2.raw:.4f}; additivity holds on 5 random pairs")


def _trivial_factor(grid, rng):
    xi = families.random_smooth_scalar(grid, lie.SU2, rng, boundary=[0.0, 0.0, 0.0])
    return GaugeMap.from_algebra(grid, lie.SU2, 0.5 * xi.data[0])


def test_quotient_soundness(criterion):
    with criterion(9, "quotient soundness", 120.0) as c:
        grid = build_grid(24, 12, 12)
        rng = np.random.default_rng(9)
        for _ in range(20):
            const = GaugeMap.constant(grid, lie.exp(lie.AlgebraElement(lie.SU2, rng.normal(size=3))))
            k = int(rng.integers(-1, 2))
            core = families.hedgehog(grid, k) if k else GaugeMap.identity(grid, lie.SU2)
            g = const @ core @ _trivial_factor(grid, rng)
            h = const @ core @ _trivial_factor(grid, rng)
            qg, qh = quotient_representative(g), quotient_representative(h)
            c.check(qg.matches(qh), f"pair built equal has classes {qg} and {qh}")
            quotient = g.inverse() @ h
            cls = classify(quotient)
            c.check(cls.variant == ASYMPTOTICALLY_TRIVIAL, f"equal pair quotient is {cls.variant}")
            c.check(winding_number(quotient, check=False).value == 0, "equal pair quotient winds")
        for _ in range(10):
            a, b = (GaugeMap.constant(grid, lie.exp(lie.AlgebraElement(lie.SU2, rng.normal(size=3)))) for _ in range(2))
            g, h = a @ _trivial_factor(grid, rng), b @ _trivial_factor(grid, rng)
            cls = classify(g.inverse() @ h)
            c.check(cls.variant != ASYMPTOTICALLY_TRIVIAL, "quotient of different constants classified trivial")
        c.note("20 equal-class pairs give trivial quotients with winding 0; 10 different-constant pairs do not")


def test_higgs_phase_dichotomy(criterion):
    with criterion(10, "Higgs phase dichotomy", 120.0) as c:
        grid = build_grid(48, 8, 8)
        unbroken = PhaseSpec(UNBROKEN, -1.0, 1.0)
        c.check(phase_boundary_group(unbroken, lie.U1).stabilizer_dim == 1, "unbroken phase should keep all of U(1)")
        phi0 = families.build("higgs_vacuum", grid, lie.U1, profile="decaying")
        for theta in (0.1, 0.3, -0.7, 1.5):
            g = families.build("phase_winding", grid, lie.U1, c=theta, tail="power")
            rep = velocity_energy_growth(g, phi0)
            c.check(not rep.divergent, f"unbroken theta={theta}: flagged with exponent {rep.exponent:.2f}")

        spec = PhaseSpec(BROKEN, 2.0, 1.0, (1.0,))
        exponents = []
        for theta in (0.1, 0.3, -0.7, 1.5):
            for tail in ("power", "exp"):
                g = families.build("phase_winding", grid, lie.U1, c=theta, tail=tail, angular=True)
                rep = boundary_violation_energy(g, spec)
                exponents.append(rep.exponent)
                c.check(rep.divergent, f"broken theta={theta} ({tail}): not flagged")
                c.check(abs(rep.exponent / 3.0 - 1) < 0.1, f"broken theta={theta} ({tail}): exponent {rep.exponent:.3f}")
        for tail in ("power", "exp", "gaussian"):
            g = families.build("phase_winding", grid, lie.U1, c=0.0, tail=tail, angular=True)
            rep = boundary_violation_energy(g, spec)
            c.check(not rep.divergent, f"identity at infinity ({tail}) flagged with exponent {rep.exponent:.2f}")

        vac = (1.0, 0.0)
        c.check(orbit_tangent_dim_at_infinity(vac, lie.SU2) == 3, "SU(2) orbit dimension")
        stab = stabilizer_elements(vac, lie.SU2)
        c.check(len(stab) == 1 and stab[0].distance(lie.GroupElement.identity(lie.SU2)) < 1e-12, "SU(2) stabilizer not trivial")
        c.note(f"broken-phase exponents {min(exponents):.2f}..{max(exponents):.2f}; SU(2) orbit 3, trivial stabilizer")


def _box(shape, rng, touch_outer):
    n_r, n_t, n_p = shape
    mask = np.zeros(shape, dtype=bool)
    depth = int(rng.integers(2, n_r // 3))
    r0 = n_r - depth if touch_outer else int(rng.integers(0, n_r // 2 - depth))
    t0, t1 = sorted(rng.choice(np.arange(1, n_t), size=2, replace=False))
    p0 = int(rng.integers(0, n_p))
    width = int(rng.integers(2, n_p // 3))
    phis = (p0 + np.arange(width)) % n_p
    mask[r0 : r0 + depth, t0:t1][:, :, phis] = True
    return mask


def _disjoint_pair(shape, rng, separation=2):
    while True:
        U = _box(shape, rng, touch_outer=True)
        V = _box(shape, rng, touch_outer=bool(rng.integers(0, 2)))
        far = ndimage.distance_transform_edt(~np.concatenate([U, U, U], axis=2))[:, :, shape[2] : 2 * shape[2]]
        if not (U & V).any() and far[V].min() >= separation:
            return U, V


def test_localizability(criterion):
    with criterion(11, "localizability", 60.0) as c:
        grid = build_grid(24, 12, 12)
        rng = np.random.default_rng(11)
        for k in range(20):
            tag = lie.U1 if k % 2 == 0 else lie.SU2
            xi = families.random_smooth_scalar(grid, tag, rng, boundary=np.zeros(lie.algebra_dim(tag)))
            U, V = _disjoint_pair(grid.shape, rng)
            ok, local = is_localizable(xi, U, V)
            c.check(ok, f"case {k}: boundary-vanishing parameter reported not localizable")
            if ok:
                c.check(np.abs(local.data[0][U] - xi.data[0][U]).max() <= 1e-12, f"case {k}: xi' differs from xi on U")
                c.check(np.all(local.data[0][V] == 0.0), f"case {k}: xi' is not zero on V")
        for k in range(10):
            tag = lie.U1 if k % 2 == 0 else lie.SU2
            value = rng.normal(size=lie.algebra_dim(tag))
            value *= max(0.1, np.linalg.norm(value)) / np.linalg.norm(value)
            xi = families.random_smooth_scalar(grid, tag, rng, boundary=value)
            U, V = _disjoint_pair(grid.shape, rng)
            ok, _ = is_localizable(xi, U, V)
            c.check(not ok, f"case {k}: parameter with boundary value {value} reported localizable")
        c.note("20 boundary-vanishing parameters localized; 10 with boundary values refused")
