"""Analysis runners behind scenario ``[analysis NAME]`` sections.

Each runner receives a :class:`Context` (objects built on one grid) and the
section options, and returns ``(results, checks)``: ``results`` maps quantity
names to numbers, strings or booleans, ``checks`` is a list of
:class:`Check` records built from the declared expectations.

Options understood by every runner: ``rtol`` and ``atol`` (defaults 1e-6 and
0) for numeric comparisons against ``expect``.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass

import numpy as np

from . import families, lie, serialization
from .constraints import (
    PhasePoint,
    boundary_term,
    bulk_boundary_split,
    electric_flux,
    energy,
    momentum_identity_residual,
)
from .forms import LieForm, curvature, estimate_falloff, hodge, l2_norm_sq
from .gauge import (
    PreconditionError,
    act_on_connection,
    classify,
    rate_lemma_check,
    winding_number,
)
from .geometry import FLAT, SIGMA, SIGMA_HAT, build_grid
from .higgs import HiggsField, boundary_violation_energy, phase_boundary_group
from .scenario import Scenario, ScenarioValidationError, phase_spec

DEFAULT_RTOL = 1e-6
DEFAULT_RESIDUAL = 1e-6


@dataclass
class Check:
    quantity: str
    value: object
    expected: object
    tolerance: object
    passed: bool

    def to_dict(self):
        return {
            "quantity": self.quantity,
            "value": self.value,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _close(value, expected, rtol, atol):
    return math.isfinite(value) and abs(value - expected) <= atol + rtol * abs(expected)


def numeric_check(quantity, value, expected, opts):
    rtol = float(opts.get("rtol", DEFAULT_RTOL))
    atol = float(opts.get("atol", 0.0))
    return Check(quantity, value, float(expected), {"rtol": rtol, "atol": atol}, _close(value, float(expected), rtol, atol))


def bound_check(quantity, value, limit):
    return Check(quantity, value, 0.0, {"max": float(limit)}, math.isfinite(value) and abs(value) <= limit)


def equal_check(quantity, value, expected):
    return Check(quantity, value, expected, "exact", value == expected)


def derived_seed(seed, name):
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


class Context:
    """Builds and caches the scenario objects on one grid."""

    def __init__(self, scenario: Scenario, grid_dims):
        self.scenario = scenario
        self.group = scenario.group
        self.grid = build_grid(*grid_dims, chart=SIGMA)
        self._cache = {}

    def get(self, name):
        if name not in self._cache:
            self._cache[name] = self._build(self.scenario.objects[name])
        return self._cache[name]

    def params(self, name):
        spec = self.scenario.objects[name]
        fam = families.get_family(spec.family)
        values = dict(spec.params)
        if "seed" in fam.params and "seed" not in values:
            values["seed"] = derived_seed(self.scenario.seed, name)
        return fam.resolve(values)

    def _build(self, spec):
        if spec.family is None:
            obj = serialization.load(os.path.join(self.scenario.source_dir, spec.data_path))
            dims = (obj.grid.n_r, obj.grid.n_theta, obj.grid.n_phi)
            if dims != self.grid.shape:
                raise ScenarioValidationError(f"data object {spec.name!r} is stored on grid {dims}, scenario uses {self.grid.shape}")
            return obj
        fam = families.get_family(spec.family)
        return fam.build(self.grid, self.group, **self.params(spec.name))

    def form(self, name, degree=None):
        obj = self.get(name)
        if not isinstance(obj, LieForm) or (degree is not None and obj.degree != degree):
            raise ScenarioValidationError(f"object {name!r} is not a {degree}-form")
        return obj

    def zero_one_form(self):
        return LieForm.zeros(self.grid, 1, self.group, SIGMA)


def _float(x):
    return float(x)


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------


def run_flux(ctx, opts):
    calE = ctx.form(opts["field"], 1)
    A = ctx.get(opts["connection"]) if "connection" in opts else ctx.zero_one_form()
    p = PhasePoint(A, calE)
    shell = opts.get("shell", "boundary")
    chart = opts.get("chart", SIGMA)
    if chart not in (SIGMA, SIGMA_HAT):
        raise ScenarioValidationError(f"flux chart must be {SIGMA} or {SIGMA_HAT}")
    direction = int(opts.get("direction", 0))
    flux = electric_flux(p, shell, chart)
    value = float(np.asarray(flux.coeffs)[direction])
    results = {"flux": value, "flux_norm": float(np.linalg.norm(flux.coeffs))}
    if chart == SIGMA:
        hat = float(np.asarray(electric_flux(p, shell, SIGMA_HAT).coeffs)[direction])
        results["flux_sigma_hat"] = hat
        results["chart_relative_difference"] = abs(hat - value) / max(abs(value), 1e-300)
    checks = []
    if "expect" in opts:
        checks.append(numeric_check("flux", value, _expression(opts["expect"]), opts))
    return results, checks


def _expression(value):
    """Numbers, or the strings ``pi``, ``4pi``, ``<number>pi``."""
    if isinstance(value, (int, float)):
        return float(value)
    s = str(value).strip().lower()
    if s.endswith("pi"):
        head = s[:-2].rstrip("*")
        return (float(head) if head else 1.0) * math.pi
    raise ScenarioValidationError(f"cannot read {value!r} as a number")


def run_classify(ctx, opts):
    g = ctx.get(opts["gauge"])
    cls = classify(g)
    d = cls.to_dict()
    results = {
        "variant": d["variant"],
        "rate_exponent": _float(d["rate_exponent"]),
        "fit_residual": _float(d["fit_residual"]),
        "angular_spread": _float(d["angular_spread"]),
    }
    if d["boundary_constant"] is not None:
        c = cls.boundary_constant
        results["boundary_constant"] = [float(x) for x in c.data]
    checks = []
    if "expect_variant" in opts:
        checks.append(equal_check("variant", d["variant"], str(opts["expect_variant"])))
    if "expect_constant" in opts:
        exp = opts["expect_constant"]
        exp = exp if isinstance(exp, list) else [exp]
        tol = float(opts.get("constant_tol", 1e-3))
        if cls.boundary_constant is None:
            checks.append(Check("boundary_constant_distance", None, 0.0, {"max": tol}, False))
        else:
            target = lie.GroupElement(ctx.group, np.asarray(exp, dtype=float))
            dist = float(cls.boundary_constant.distance(target))
            results["boundary_constant_distance"] = dist
            checks.append(bound_check("boundary_constant_distance", dist, tol))
    return results, checks


def run_winding(ctx, opts):
    g = ctx.get(opts["gauge"])
    w = winding_number(g, check=bool(opts.get("check_class", True)))
    results = {"winding": w.value, "degree_integral": w.raw, "rounding_distance": w.rounding_distance}
    checks = [bound_check("rounding_distance", w.rounding_distance, float(opts.get("rounding_tol", 0.05)))]
    if "expect" in opts or "expect_winding" in opts:
        checks.append(equal_check("winding", w.value, int(opts.get("expect_winding", opts.get("expect")))))
    return results, checks


def run_split(ctx, opts):
    calE = ctx.form(opts["field"], 1)
    xi = ctx.form(opts["xi"], 0)
    A = ctx.get(opts["connection"]) if "connection" in opts else ctx.zero_one_form()
    s = bulk_boundary_split(PhasePoint(A, calE), xi)
    results = {k: float(v) for k, v in s.to_dict().items()}
    results["relative_residual"] = s.relative_residual
    checks = [bound_check("relative_residual", s.relative_residual, float(opts.get("max_residual", DEFAULT_RESIDUAL)))]
    if "expect_boundary" in opts:
        checks.append(numeric_check("boundary", s.boundary, _expression(opts["expect_boundary"]), opts))
    return results, checks


def run_momentum(ctx, opts):
    calE = ctx.form(opts["field"], 1)
    xi = ctx.form(opts["xi"], 0)
    A = ctx.get(opts["connection"]) if "connection" in opts else ctx.zero_one_form()
    p = PhasePoint(A, calE)
    dA = ctx.form(opts["delta_A"], 1) if "delta_A" in opts else ctx.zero_one_form()
    dcal = ctx.form(opts["delta_E"], 1) if "delta_E" in opts else ctx.zero_one_form()
    h = float(opts.get("h", 1e-4))
    try:
        m = momentum_identity_residual(p, xi, (dA, hodge(dcal, FLAT)), h)
    except ValueError as exc:
        raise ScenarioValidationError(str(exc)) from exc
    predicted = boundary_term(PhasePoint(ctx.zero_one_form(), dcal), xi)
    results = {
        "residual": m.residual,
        "boundary_term": m.boundary_term,
        "boundary_variation": predicted,
        "derivative": m.derivative,
        "symplectic": m.symplectic,
        "richardson_steps": len(m.steps),
    }
    checks = []
    if "expect" in opts:
        checks.append(numeric_check("residual", m.residual, _expression(opts["expect"]), opts))
    if "max_residual" in opts:
        checks.append(bound_check("residual", m.residual, float(opts["max_residual"])))
    return results, checks


def run_gauge_invariance(ctx, opts):
    A = ctx.form(opts["connection"], 1)
    g = ctx.get(opts["gauge"])
    before = l2_norm_sq(curvature(A), FLAT)
    after = l2_norm_sq(curvature(act_on_connection(g, A)), FLAT)
    rel = abs(after - before) / max(abs(before), 1e-300)
    results = {"norm_sq_before": before, "norm_sq_after": after, "relative_change": rel}
    checks = []
    if "max_residual" in opts or "expect" not in opts:
        checks.append(bound_check("relative_change", rel, float(opts.get("max_residual", DEFAULT_RESIDUAL))))
    return results, checks


def run_energy(ctx, opts):
    alpha = ctx.form(opts["velocity"], 1)
    A = ctx.get(opts["connection"]) if "connection" in opts else ctx.zero_one_form()
    F = curvature(A)
    e = energy(alpha, F)
    results = {"energy": e, "electric": 0.5 * l2_norm_sq(alpha, FLAT), "magnetic": 0.5 * l2_norm_sq(F, FLAT)}
    checks = []
    if "expect" in opts:
        checks.append(numeric_check("energy", e, _expression(opts["expect"]), opts))
    return results, checks


def run_rate_lemma(ctx, opts):
    name = opts["xi"]
    xi = ctx.form(name, 0)
    spec = ctx.scenario.objects[name]
    deriv = None
    if spec.family == "power_tail":
        p = ctx.params(name)
        deriv = families.power_tail_derivative(ctx.grid, ctx.group, p["amplitude"], p["tail"], p["power"], p["direction"])
    eps, C = float(opts["epsilon"]), float(opts["C"])
    results = {"derivative": "analytic" if deriv is not None else "spectral"}
    try:
        rep = rate_lemma_check(xi, eps, C, dxi_dr=deriv)
    except PreconditionError as exc:
        results.update({"precondition": "rejected", "reason": str(exc), "holds": False})
    else:
        results.update(
            {
                "precondition": "accepted",
                "holds": rep.holds,
                "fraction_satisfied": rep.fraction_satisfied,
                "worst_ratio": rep.worst_ratio,
                "angular_spread": rep.angular_spread,
                "boundary_value": [float(x) for x in rep.boundary_value],
            }
        )
    checks = []
    if "expect_holds" in opts:
        checks.append(equal_check("holds", results["holds"], bool(opts["expect_holds"])))
    if "expect_precondition" in opts:
        checks.append(equal_check("precondition", results["precondition"], str(opts["expect_precondition"])))
    return results, checks


def run_phase_group(ctx, opts):
    rep = phase_boundary_group(phase_spec(ctx.scenario), ctx.group).to_dict()
    results = {k: v for k, v in rep.items() if k != "stabilizer_sample"}
    results["stabilizer_size"] = len(rep["stabilizer_sample"])
    checks = []
    if "expect_orbit_dim" in opts:
        checks.append(equal_check("orbit_tangent_dim", rep["orbit_tangent_dim"], int(opts["expect_orbit_dim"])))
    if "expect_stabilizer_dim" in opts:
        checks.append(equal_check("stabilizer_dim", rep["stabilizer_dim"], int(opts["expect_stabilizer_dim"])))
    return results, checks


def run_boundary_violation(ctx, opts):
    g = ctx.get(opts["gauge"])
    spec = phase_spec(ctx.scenario)
    phi = ctx.get(opts["higgs"]) if "higgs" in opts else None
    if phi is not None and not isinstance(phi, HiggsField):
        raise ScenarioValidationError(f"{opts['higgs']!r} is not a Higgs field")
    cutoffs = opts.get("cutoffs")
    if cutoffs is not None:
        cutoffs = tuple(float(c) for c in (cutoffs if isinstance(cutoffs, list) else [cutoffs]))
        if len(cutoffs) < 2 or any(c <= 0 for c in cutoffs):
            raise ScenarioValidationError("cutoffs needs at least two positive radii")
    try:
        rep = boundary_violation_energy(g, spec, phi, cutoffs)
    except PreconditionError as exc:
        raise ScenarioValidationError(str(exc)) from exc
    d = rep.to_dict()
    results = {"growth_exponent": d["growth_exponent"], "divergent": d["divergent"]}
    for i, (c, e) in enumerate(zip(d["cutoffs"], d["partial_energies"]), 1):
        results[f"cutoff_{i}"] = c
        results[f"partial_energy_{i}"] = e
    checks = []
    if "expect_divergent" in opts:
        checks.append(equal_check("divergent", rep.divergent, bool(opts["expect_divergent"])))
    if "expect_exponent" in opts:
        checks.append(numeric_check("growth_exponent", rep.exponent, float(opts["expect_exponent"]), {"rtol": opts.get("rtol", 0.1), "atol": opts.get("atol", 0.0)}))
    return results, checks


def run_falloff(ctx, opts):
    f = ctx.form(opts["field"])
    prof = estimate_falloff(f, int(opts.get("component", 0)))
    results = {"kind": prof.kind, "exponent": _float(prof.exponent), "fit_residual": _float(prof.residual)}
    checks = []
    if "expect_kind" in opts:
        checks.append(equal_check("kind", prof.kind, str(opts["expect_kind"])))
    if "expect_exponent" in opts:
        checks.append(numeric_check("exponent", _float(prof.exponent), float(opts["expect_exponent"]), {"rtol": opts.get("rtol", 0.0), "atol": opts.get("atol", 0.05)}))
    return results, checks


def run_quotient(ctx, opts):
    g = ctx.get(opts["gauge"])
    results = {}
    if "other" in opts:
        g = g.inverse() @ ctx.get(opts["other"])
    cls = classify(g)
    results["variant"] = cls.variant
    if cls.is_boundary_preserving:
        w = winding_number(g, check=False)
        results["winding"] = w.value
        results["boundary_constant"] = [float(x) for x in cls.boundary_constant.data]
    trivial = cls.variant == "AsymptoticallyTrivial" and results.get("winding", 0) == 0
    results["same_class"] = trivial
    checks = []
    if "expect_same_class" in opts:
        checks.append(equal_check("same_class", trivial, bool(opts["expect_same_class"])))
    return results, checks


RUNNERS = {
    "flux": run_flux,
    "classify": run_classify,
    "winding": run_winding,
    "split": run_split,
    "momentum": run_momentum,
    "gauge_invariance": run_gauge_invariance,
    "energy": run_energy,
    "rate_lemma": run_rate_lemma,
    "phase_group": run_phase_group,
    "boundary_violation": run_boundary_violation,
    "falloff": run_falloff,
    "quotient": run_quotient,
}
