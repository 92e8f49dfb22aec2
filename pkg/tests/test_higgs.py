import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from asymptotic_gauge import families, lie
from asymptotic_gauge.forms import LieForm
from asymptotic_gauge.gauge import GaugeMap, PreconditionError, act_on_connection
from asymptotic_gauge.geometry import build_grid
from asymptotic_gauge.higgs import (
    BROKEN,
    UNBROKEN,
    HiggsField,
    NonIntegrableError,
    PhaseSpec,
    act_on_higgs,
    boundary_violation_energy,
    orbit_tangent_dim_at_infinity,
    phase_boundary_group,
    potential_density,
    stabilizer_elements,
    vacuum_radius,
    ymh_lagrangian,
)

from oracles import su2_expm

G = build_grid(24, 12, 12)
BROKEN_U1 = PhaseSpec(BROKEN, 2.0, 1.0, (1.0,))


def radial(grid):
    return grid.r_b * np.ones(grid.shape)


# -- potential ----------------------------------------------------------------------


def test_potential_examples():
    assert np.all(potential_density(HiggsField.zeros(G, lie.U1), 2.0, 1.0) == 0)
    one = HiggsField.constant(G, lie.U1, [1.0])
    np.testing.assert_allclose(potential_density(one, 2.0, 1.0), -1.0)
    mu, lam = 3.0, 0.7
    v = HiggsField.constant(G, lie.SU2, [np.sqrt(mu / (2 * lam)), 0])
    np.testing.assert_allclose(potential_density(v, mu, lam), -(mu**2) / (4 * lam), rtol=1e-14)


def test_potential_requires_positive_lambda():
    with pytest.raises(ValueError):
        potential_density(HiggsField.zeros(G, lie.U1), 1.0, 0.0)


@given(st.floats(-5, 5).filter(lambda m: m <= 0 or m > 1e-6), st.floats(0.01, 5))
def test_vacuum_radius_minimizes_the_potential(mu, lam):
    v = vacuum_radius(mu, lam)
    if mu <= 0:
        assert v == 0.0
    else:
        s = np.linspace(0, 3 * v, 601)
        V = -mu * s**2 + lam * s**4
        assert abs(s[np.argmin(V)] - v) <= 3 * v / 600
    assert vacuum_radius(4 * mu, 4 * lam) == pytest.approx(v, rel=1e-12)


def test_vacuum_radius_examples():
    assert vacuum_radius(-1.0, 1.0) == 0.0
    assert vacuum_radius(2.0, 1.0) == 1.0


# -- Lagrangian ----------------------------------------------------------------------------


def _zero1(grid=G, tag=lie.U1):
    return LieForm.zeros(grid, 1, tag)


def test_ymh_zero_fields():
    t = ymh_lagrangian(_zero1(), _zero1(), HiggsField.zeros(G, lie.U1), HiggsField.zeros(G, lie.U1), -1.0, 1.0)
    assert t.total == 0.0


def test_ymh_vacuum_has_no_potential_or_gradient_energy():
    phi = HiggsField.constant(G, lie.U1, [1.0])
    t = ymh_lagrangian(_zero1(), _zero1(), phi, HiggsField.zeros(G, lie.U1), 2.0, 1.0)
    assert abs(t.potential) < 1e-12 and abs(t.gradient) < 1e-12
    assert t.offset == -1.0
    assert t.to_dict()["potential_offset"] == -1.0


def test_ymh_without_offset_names_the_potential():
    phi = HiggsField.constant(G, lie.U1, [1.0])
    with pytest.raises(NonIntegrableError) as info:
        ymh_lagrangian(_zero1(), _zero1(), phi, HiggsField.zeros(G, lie.U1), 2.0, 1.0, offset=None)
    assert info.value.term == "potential"


def test_ymh_gradient_oracle():
    g = build_grid(32, 12, 12)
    r = radial(g)
    v, amp = 1.0, 0.8
    chi = amp * (1 - np.exp(-r * r))
    phi = HiggsField.from_complex(g, lie.U1, v * np.exp(1j * chi))
    t = ymh_lagrangian(_zero1(g), _zero1(g), phi, HiggsField.zeros(g, lie.U1), 2.0, 1.0)
    dchi = lambda s: 2 * amp * s * np.exp(-s * s)  # noqa: E731
    ref = v**2 * 4 * np.pi * integrate.quad(lambda s: dchi(s) ** 2 * s * s, 0, np.inf)[0]
    assert t.gradient == pytest.approx(ref, rel=1e-6)
    assert abs(t.potential) < 1e-12


def test_ymh_gauge_covariance():
    A = families.build("smooth_connection", G, lie.U1, seed=1, amplitude=0.5)
    alpha = families.build("smooth_connection", G, lie.U1, seed=2)
    phi = families.build("higgs_vacuum", G, lie.U1, profile="kink")
    psi = HiggsField.from_complex(G, lie.U1, np.exp(-radial(G) ** 2) * (1 + 0.3j))
    g = families.build("phase_winding", G, lie.U1, c=0.3, angular=True)
    before = ymh_lagrangian(A, alpha, phi, psi, 2.0, 1.0)
    after = ymh_lagrangian(act_on_connection(g, A), alpha, act_on_higgs(g, phi), act_on_higgs(g, psi), 2.0, 1.0)
    assert after.total == pytest.approx(before.total, rel=1e-9)
    assert after.gradient == pytest.approx(before.gradient, rel=1e-9)


# -- representation -----------------------------------------------------------------------


def test_act_on_higgs_examples():
    phi = HiggsField.constant(G, lie.U1, [0.6 + 0.8j])
    np.testing.assert_array_equal(act_on_higgs(GaugeMap.identity(G, lie.U1), phi).data, phi.data)
    theta = 0.9
    moved = act_on_higgs(GaugeMap.constant(G, lie.GroupElement(lie.U1, [theta])), phi)
    np.testing.assert_allclose(moved.z[..., 0], (0.6 + 0.8j) * np.exp(-1j * theta), atol=1e-15)


def test_su2_action_matches_matrix_oracle():
    x = np.array([0.4, -1.1, 0.7])
    v = np.array([0.3 + 0.1j, -0.5j])
    g = GaugeMap.constant(G, lie.exp(lie.AlgebraElement(lie.SU2, x)))
    moved = act_on_higgs(g, HiggsField.constant(G, lie.SU2, v))
    expected = np.linalg.inv(su2_expm(x)) @ v
    np.testing.assert_allclose(moved.z[0, 0, 0], expected, atol=1e-14)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_higgs_action_is_unitary(seed):
    rng = np.random.default_rng(seed)
    xi = families.random_smooth_scalar(G, lie.SU2, rng)
    g = GaugeMap.from_algebra(G, lie.SU2, xi.data[0])
    z = rng.normal(size=G.shape + (2,)) + 1j * rng.normal(size=G.shape + (2,))
    phi = HiggsField.from_complex(G, lie.SU2, z)
    np.testing.assert_allclose(act_on_higgs(g, phi).norm_sq(), phi.norm_sq(), rtol=1e-12)


def test_representation_mismatch():
    with pytest.raises(lie.GroupMismatchError):
        act_on_higgs(GaugeMap.identity(G, lie.SU2), HiggsField.zeros(G, lie.U1))


# -- vacuum orbit and phases ------------------------------------------------------------------


def test_orbit_dimensions():
    assert orbit_tangent_dim_at_infinity([0.0], lie.U1) == 0
    assert orbit_tangent_dim_at_infinity([0.0, 0.0], lie.SU2) == 0
    assert orbit_tangent_dim_at_infinity([1.0], lie.U1) == 1
    assert orbit_tangent_dim_at_infinity([0.7, 0.0], lie.SU2) == 3


def test_stabilizers():
    assert len(stabilizer_elements([1.0], lie.U1)) == 1
    (only,) = stabilizer_elements([1.0, 0.0], lie.SU2)
    assert only.distance(lie.GroupElement.identity(lie.SU2)) < 1e-12


def test_phase_spec_validation():
    with pytest.raises(ValueError):
        PhaseSpec(BROKEN, -1.0, 1.0, (1.0,))
    with pytest.raises(ValueError):
        PhaseSpec(BROKEN, 2.0, 1.0, (0.5,))
    with pytest.raises(ValueError):
        PhaseSpec("confined", 2.0, 1.0)
    assert PhaseSpec(UNBROKEN, -1.0, 1.0).vacuum is None


def test_phase_boundary_group_reports():
    u = phase_boundary_group(PhaseSpec(UNBROKEN, -1.0, 1.0), lie.U1)
    assert u.boundary_condition == "phi -> 0" and u.stabilizer_dim == 1 and "U(1)" in u.quotient
    b = phase_boundary_group(BROKEN_U1, lie.U1)
    assert b.orbit_dim == 1 and b.stabilizer_dim == 0 and b.quotient == "trivial"
    s = phase_boundary_group(PhaseSpec(BROKEN, 2.0, 1.0, (1.0, 0.0)), lie.SU2)
    assert s.orbit_dim == 3 and s.stabilizer_dim == 0 and "discrete" in s.quotient
    assert s.to_dict()["orbit_tangent_dim"] == 3


# -- energy of boundary violations --------------------------------------------------------------


@pytest.mark.parametrize("tail", ["power", "exp"])
def test_rotating_the_broken_vacuum_costs_infinite_energy(tail):
    rep = boundary_violation_energy(families.build("phase_winding", G, lie.U1, c=0.5, tail=tail), BROKEN_U1)
    assert rep.divergent
    assert rep.exponent == pytest.approx(3.0, rel=0.1)


def test_maps_tending_to_identity_are_not_flagged():
    g = families.build("phase_winding", G, lie.U1, c=0.0, tail="exp", angular=True)
    rep = boundary_violation_energy(g, BROKEN_U1)
    assert not rep.divergent


def test_su2_boundary_violation():
    spec = PhaseSpec(BROKEN, 2.0, 1.0, (1.0, 0.0))
    g = families.build("phase_winding", G, lie.SU2, c=0.5, tail="exp", direction=0)
    assert boundary_violation_energy(g, spec).divergent
    trivial = families.build("phase_winding", G, lie.SU2, c=0.0, tail="exp")
    assert not boundary_violation_energy(trivial, spec).divergent


def test_boundary_violation_needs_broken_phase():
    with pytest.raises(PreconditionError):
        boundary_violation_energy(GaugeMap.identity(G, lie.U1), PhaseSpec(UNBROKEN, -1.0, 1.0))
