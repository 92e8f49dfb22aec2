"""Numerics for the asymptotic gauge group of Yang-Mills(-Higgs) theory on R^3."""

from .constraints import (
    PhasePoint,
    SplitConstraint,
    bulk_boundary_split,
    coulomb_field,
    electric_flux,
    energy,
    gauss_constraint,
    lagrangian,
    momentum_identity_residual,
    smeared_constraint,
    symplectic_eval,
)
from .forms import (
    DecayProfile,
    LieForm,
    conformal_reweight,
    covariant_derivative,
    curvature,
    estimate_falloff,
    exterior_derivative,
    hodge,
    l2_norm_sq,
    wedge_bracket,
    wedge_trace,
)
from .gauge import (
    ASYMPTOTICALLY_TRIVIAL,
    BOUNDARY_PRESERVING,
    FORMAL,
    FallOffClass,
    GaugeMap,
    PreconditionError,
    act_on_connection,
    act_on_electric,
    classify,
    fundamental_vector,
    is_localizable,
    maurer_cartan,
    quotient_representative,
    rate_lemma_check,
    winding_number,
)
from .geometry import ConformalChart, Grid, build_grid
from .higgs import (
    HiggsField,
    PhaseSpec,
    boundary_violation_energy,
    orbit_tangent_dim_at_infinity,
    phase_boundary_group,
    ymh_lagrangian,
)
from .lie import SU2, U1, AlgebraElement, GroupElement

__version__ = "0.1.0"

__all__ = [
    "ASYMPTOTICALLY_TRIVIAL",
    "BOUNDARY_PRESERVING",
    "FORMAL",
    "SU2",
    "U1",
    "AlgebraElement",
    "ConformalChart",
    "DecayProfile",
    "FallOffClass",
    "GaugeMap",
    "Grid",
    "GroupElement",
    "HiggsField",
    "LieForm",
    "PhasePoint",
    "PhaseSpec",
    "PreconditionError",
    "SplitConstraint",
    "act_on_connection",
    "act_on_electric",
    "boundary_violation_energy",
    "build_grid",
    "bulk_boundary_split",
    "classify",
    "conformal_reweight",
    "coulomb_field",
    "covariant_derivative",
    "curvature",
    "electric_flux",
    "energy",
    "estimate_falloff",
    "exterior_derivative",
    "fundamental_vector",
    "gauss_constraint",
    "hodge",
    "is_localizable",
    "l2_norm_sq",
    "lagrangian",
    "maurer_cartan",
    "momentum_identity_residual",
    "orbit_tangent_dim_at_infinity",
    "phase_boundary_group",
    "quotient_representative",
    "rate_lemma_check",
    "smeared_constraint",
    "symplectic_eval",
    "wedge_bracket",
    "wedge_trace",
    "winding_number",
    "ymh_lagrangian",
]
