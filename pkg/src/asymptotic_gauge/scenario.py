"""Scenario files: INI-style sections with typed ``key = value`` lines.

Grammar (one item per line, ``#`` or ``;`` start a comment)::

    [scenario]            name, group (U1|SU2), grid (n_r n_theta n_phi), seed,
                          boundary_connection (only "zero")
    [field NAME]          family = ..., family parameters   (or data = path)
    [gauge NAME]          family = ..., family parameters   (or data = path)
    [higgs NAME]          family = ..., family parameters   (or data = path)
    [phase]               phase (unbroken|broken), mu, lambda, phi_inf (list)
    [analysis NAME]       type = ..., references and expectations

Values are typed on read: ``true``/``false`` become booleans, integers and
floats become numbers, whitespace-separated tokens become lists, anything
else stays a string.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import re
from dataclasses import dataclass, field

from . import families, lie
from .geometry import MIN_PHI, MIN_RADIAL, MIN_THETA

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_UNKNOWN_FAMILY = 3
EXIT_VALIDATION = 4
EXIT_CHECK_FAILED = 5

ANALYSIS_TYPES = {
    "flux": {"field"},
    "classify": {"gauge"},
    "winding": {"gauge"},
    "split": {"field", "xi"},
    "momentum": {"field", "xi"},
    "gauge_invariance": {"connection", "gauge"},
    "energy": {"velocity"},
    "rate_lemma": {"xi", "epsilon", "C"},
    "phase_group": set(),
    "boundary_violation": {"gauge"},
    "falloff": {"field"},
    "quotient": {"gauge"},
}
_OBJECT_SECTIONS = ("field", "gauge", "higgs")


class ScenarioError(Exception):
    exit_code = EXIT_VALIDATION


class ScenarioParseError(ScenarioError):
    exit_code = EXIT_PARSE

    def __init__(self, message, line=None, column=None):
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)
        self.line, self.column = line, column


class ScenarioValidationError(ScenarioError):
    exit_code = EXIT_VALIDATION


class ScenarioFamilyError(ScenarioError):
    exit_code = EXIT_UNKNOWN_FAMILY


_INT = re.compile(r"[+-]?\d+$")


def typed_value(text: str):
    s = text.strip()
    low = s.lower()
    if low in ("true", "false"):
        return low == "true"
    parts = s.split()
    if len(parts) > 1:
        return [typed_value(p) for p in parts]
    if _INT.match(s):
        return int(s)
    try:
        return float(s)
    except ValueError:
        return s


@dataclass
class ObjectSpec:
    kind: str
    name: str
    family: str | None
    params: dict
    data_path: str | None = None


@dataclass
class AnalysisSpec:
    name: str
    type: str
    options: dict


@dataclass
class Scenario:
    name: str
    group: str
    grid: tuple
    seed: int
    objects: dict = field(default_factory=dict)
    phase: dict | None = None
    analyses: list = field(default_factory=list)
    source_dir: str = "."

    def scaled_grid(self, factor):
        return tuple(int(n * factor) for n in self.grid)

    def digest(self, analysis: AnalysisSpec, grid):
        refs = {k: v for k, v in analysis.options.items() if isinstance(v, str) and v in self.objects}
        payload = {
            "analysis": {"name": analysis.name, "type": analysis.type, "options": analysis.options},
            "objects": {v: vars(self.objects[v]) for v in sorted(set(refs.values()))},
            "phase": self.phase,
            "group": self.group,
            "grid": list(grid),
            "seed": self.seed,
        }
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _line_of(text, section):
    for i, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{section}]":
            return i
    return None


def parse(text: str, source_dir=".") -> Scenario:
    cp = configparser.ConfigParser(interpolation=None, strict=True, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ScenarioParseError("expected a [section] header", exc.lineno, 1) from exc
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ScenarioParseError(str(exc).split(":")[-1].strip() or str(exc), exc.lineno, 1) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0]
        line = text.splitlines()[lineno - 1]
        column = len(line) - len(line.lstrip()) + 1
        raise ScenarioParseError(f"cannot parse {line.strip()!r}; expected 'key = value'", lineno, column) from exc

    if "scenario" not in cp:
        raise ScenarioValidationError("missing [scenario] section")
    head = {k: typed_value(v) for k, v in cp["scenario"].items()}
    group = str(head.get("group", ""))
    if group not in lie.GROUP_TAGS:
        raise ScenarioValidationError(f"[scenario] group must be one of {lie.GROUP_TAGS}, got {group!r}")
    grid = head.get("grid")
    if not (isinstance(grid, list) and len(grid) == 3 and all(isinstance(n, int) for n in grid)):
        raise ScenarioValidationError("[scenario] grid must be three integers: n_r n_theta n_phi")
    n_r, n_t, n_p = grid
    if n_r < MIN_RADIAL or n_t < MIN_THETA or n_p < MIN_PHI or n_p % 2:
        raise ScenarioValidationError(f"grid {grid} below minimum ({MIN_RADIAL} {MIN_THETA} {MIN_PHI}, n_phi even)")
    if str(head.get("boundary_connection", "zero")) != "zero":
        raise ScenarioValidationError("only boundary_connection = zero is supported")
    seed = head.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ScenarioValidationError("seed must be a non-negative 64-bit integer")
    sc = Scenario(str(head.get("name", "scenario")), group, tuple(grid), seed, source_dir=source_dir)

    for section in cp.sections():
        if section == "scenario":
            continue
        values = {k: typed_value(v) for k, v in cp[section].items()}
        kind, _, name = section.partition(" ")
        name = name.strip()
        line = _line_of(text, section)
        if kind == "phase" and not name:
            sc.phase = values
        elif kind in _OBJECT_SECTIONS and name:
            if name in sc.objects:
                raise ScenarioValidationError(f"object {name!r} defined twice (line {line})")
            fam = values.pop("family", None)
            path = values.pop("data", None)
            if (fam is None) == (path is None):
                raise ScenarioValidationError(f"[{section}] needs exactly one of 'family' or 'data' (line {line})")
            sc.objects[name] = ObjectSpec(kind, name, fam, values, None if path is None else str(path))
        elif kind == "analysis" and name:
            atype = values.pop("type", None)
            if atype not in ANALYSIS_TYPES:
                raise ScenarioValidationError(f"[{section}] unknown analysis type {atype!r}; known: {sorted(ANALYSIS_TYPES)} (line {line})")
            sc.analyses.append(AnalysisSpec(name, atype, values))
        else:
            raise ScenarioParseError(f"unknown section [{section}]", line, 1)
    validate(sc)
    return sc


def validate(sc: Scenario):
    """Semantic checks; raises before anything is computed."""
    for obj in sc.objects.values():
        if obj.family is not None:
            try:
                fam = families.get_family(obj.family)
            except families.UnknownFamilyError as exc:
                raise ScenarioFamilyError(exc.args[0]) from exc
            expected_kind = {"field": families.FORM, "gauge": families.GAUGE, "higgs": families.HIGGS}[obj.kind]
            if fam.kind != expected_kind:
                raise ScenarioValidationError(f"family {obj.family!r} builds a {fam.kind}, not a {obj.kind}")
            if sc.group not in fam.groups:
                raise ScenarioValidationError(f"family {obj.family!r} does not support group {sc.group}")
            try:
                fam.resolve(obj.params)
            except families.ParameterError as exc:
                raise ScenarioValidationError(f"[{obj.kind} {obj.name}] {exc}") from exc
        else:
            path = os.path.join(sc.source_dir, obj.data_path)
            if not os.path.exists(path):
                raise ScenarioValidationError(f"data file {obj.data_path!r} not found")
    if sc.phase is not None:
        try:
            phase_spec(sc)
        except (ValueError, TypeError) as exc:
            raise ScenarioValidationError(f"[phase] {exc}") from exc
    names = set()
    for a in sc.analyses:
        if a.name in names:
            raise ScenarioValidationError(f"analysis {a.name!r} declared twice")
        names.add(a.name)
        missing = ANALYSIS_TYPES[a.type] - set(a.options)
        if missing:
            raise ScenarioValidationError(f"analysis {a.name!r} ({a.type}) is missing {sorted(missing)}")
        for key in ("field", "xi", "connection", "velocity", "delta_A", "delta_E", "higgs", "gauge", "other"):
            ref = a.options.get(key)
            if ref is not None and ref not in sc.objects:
                raise ScenarioValidationError(f"analysis {a.name!r}: {key} refers to undefined object {ref!r}")
        if a.type in ("phase_group", "boundary_violation") and sc.phase is None:
            raise ScenarioValidationError(f"analysis {a.name!r} needs a [phase] section")


def phase_spec(sc: Scenario):
    from .higgs import PhaseSpec

    p = dict(sc.phase)
    phi = p.get("phi_inf", [])
    phi = phi if isinstance(phi, list) else [phi]
    return PhaseSpec(str(p.get("phase")), float(p.get("mu", 0.0)), float(p.get("lambda", 1.0)), tuple(complex(v) for v in phi))


def load(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc.strerror}") from exc
    return parse(text, os.path.dirname(os.path.abspath(path)))
