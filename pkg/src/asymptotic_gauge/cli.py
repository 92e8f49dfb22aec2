"""Command-line front end: ``asymgauge run | convergence | list-families``.

Exit codes
----------
0  every declared check passed
1  usage error (bad flags, ``--levels`` outside 2..4)
2  scenario parse error (reported with line and column)
3  unknown analytic family
4  validation failure (missing objects, bad parameters, grid too small, ...)
5  the scenario ran but at least one declared check failed

Reports
-------
``run`` and ``convergence`` write one JSON document (``--out``, default
``<scenario>.report.json``) and a flat CSV table next to it with the same
stem. The JSON document is::

    {"format": "asymgauge-report 1", "mode": "run" | "convergence",
     "scenario": ..., "group": ..., "seed": ..., "levels": [grid, ...],
     "analyses": [record, ...], "passed": bool}

and each record holds ``name``, ``type``, ``inputs_digest``, ``results``
(quantity -> ``{"value", "tolerance", "grid_level"}`` at the finest level),
``checks``, ``convergence`` (one row of values per grid level),
``observed_order`` (per numeric quantity; ``null`` with a note when the
errors sit at roundoff) and ``passed``. Nothing is written when the scenario
fails to parse or validate. Output is byte-identical for identical inputs.

The CSV columns are ``analysis, type, quantity, grid_level, n_r, n_theta,
n_phi, value, tolerance, passed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import families
from .analyses import RUNNERS, Check, Context
from .gauge import PreconditionError
from .scenario import (
    EXIT_CHECK_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    ScenarioError,
    ScenarioValidationError,
    load,
)

REPORT_FORMAT = "asymgauge-report 1"
ROUNDOFF = 1e-13


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _clean(value):
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    return str(value)


def run_analysis(ctx, spec):
    """Run one analysis; precondition failures become a failed record."""
    try:
        results, checks = RUNNERS[spec.type](ctx, spec.options)
    except PreconditionError as exc:
        results = {"error": str(exc)}
        checks = [Check("precondition", "failed", "satisfied", "exact", False)]
    return _clean(results), [_clean(c.to_dict()) for c in checks]


def _numeric(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def observed_orders(rows, checks):
    """Per-quantity convergence order from successive grid doublings.

    With a declared numeric expectation the errors against it are used,
    otherwise differences between consecutive levels (needs three levels).
    """
    expected = {c["quantity"]: c["expected"] for c in checks if _numeric(c.get("expected")) and isinstance(c.get("tolerance"), dict) and "rtol" in c["tolerance"]}
    out = {}
    if len(rows) < 2:
        return out
    for q in rows[0]["values"]:
        vals = [row["values"].get(q) for row in rows]
        if not all(_numeric(v) for v in vals):
            continue
        vals = np.asarray(vals, dtype=float)
        scale = max(1.0, float(np.max(np.abs(vals))))
        if q in expected:
            errs = np.abs(vals - expected[q])
        elif len(vals) >= 3:
            errs = np.abs(np.diff(vals))
        else:
            continue
        if errs.size < 2:
            continue
        if np.all(errs[-2:] <= ROUNDOFF * scale):
            out[q] = {"order": None, "errors": errs.tolist(), "note": "roundoff"}
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            orders = np.log2(errs[:-1] / np.maximum(errs[1:], ROUNDOFF * scale))
        order = float(orders[-1])
        note = "reaches roundoff" if errs[-1] <= ROUNDOFF * scale else ""
        out[q] = {"order": order if math.isfinite(order) else None, "errors": errs.tolist(), "note": note}
    return out


def build_report(scenario, grids, mode):
    """Evaluate every analysis on every grid; the finest level is the reported one."""
    contexts = [Context(scenario, g) for g in grids]
    records = []
    for spec in scenario.analyses:
        rows, final = [], None
        for level, ctx in enumerate(contexts):
            results, checks = run_analysis(ctx, spec)
            rows.append({"grid_level": level, "grid": list(grids[level]), "values": results})
            final = (results, checks)
        results, checks = final
        tol = {c["quantity"]: c["tolerance"] for c in checks}
        top = len(grids) - 1
        record = {
            "name": spec.name,
            "type": spec.type,
            "inputs_digest": scenario.digest(spec, grids[top]),
            "grid_level": top,
            "grid": list(grids[top]),
            "results": {q: {"value": v, "tolerance": tol.get(q), "grid_level": top} for q, v in results.items()},
            "checks": checks,
            "convergence": rows,
            "observed_order": observed_orders(rows, checks) if mode == "convergence" else {},
            "passed": all(c["passed"] for c in checks),
        }
        if mode == "convergence" and "min_order" in spec.options:
            record["checks"].append(_order_check(record["observed_order"], float(spec.options["min_order"]), spec.options.get("order_quantity")))
            record["passed"] = all(c["passed"] for c in record["checks"])
        records.append(record)
    return {
        "format": REPORT_FORMAT,
        "mode": mode,
        "scenario": scenario.name,
        "group": scenario.group,
        "seed": scenario.seed,
        "levels": [list(g) for g in grids],
        "analyses": records,
        "passed": all(r["passed"] for r in records),
    }


def _order_check(orders, minimum, quantity=None):
    items = {quantity: orders.get(quantity)} if quantity else orders
    ok = bool(items) and all(v is not None and (v["note"] in ("roundoff", "reaches roundoff") or (v["order"] is not None and v["order"] >= minimum)) for v in items.values())
    seen = {q: (None if v is None else v["order"]) for q, v in items.items()}
    return {"quantity": "observed_order", "value": seen, "expected": minimum, "tolerance": {"min": minimum}, "passed": ok}


def report_json(report):
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def report_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["analysis", "type", "quantity", "grid_level", "n_r", "n_theta", "n_phi", "value", "tolerance", "passed"])
    for rec in report["analyses"]:
        tol = {c["quantity"]: c for c in rec["checks"]}
        for row in rec["convergence"]:
            for q, v in row["values"].items():
                if not _numeric(v):
                    continue
                c = tol.get(q)
                w.writerow(
                    [
                        rec["name"],
                        rec["type"],
                        q,
                        row["grid_level"],
                        *row["grid"],
                        repr(float(v)),
                        "" if c is None else json.dumps(c["tolerance"], sort_keys=True),
                        "" if c is None else c["passed"],
                    ]
                )
    return buf.getvalue()


def _write(report, out):
    text = report_json(report)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    stem, _ = os.path.splitext(out)
    with open(stem + ".csv", "w", encoding="utf-8") as fh:
        fh.write(report_csv(report))


def _default_out(path):
    stem = os.path.splitext(os.path.basename(path))[0]
    return stem + ".report.json"


def _summary(report, out, stream):
    for rec in report["analyses"]:
        status = "pass" if rec["passed"] else "FAIL"
        print(f"{status}  {rec['name']} ({rec['type']})", file=stream)
    print(f"report written to {out}", file=stream)


def cmd_run(args):
    scenario = load(args.scenario)
    if args.grid_scale < 1:
        raise UsageError("--grid-scale must be a positive integer")
    grid = scenario.scaled_grid(args.grid_scale)
    if args.grid_scale != 1 and any(o.data_path for o in scenario.objects.values()):
        raise ScenarioValidationError("objects loaded from data files cannot be rescaled")
    report = build_report(scenario, [grid], "run")
    out = args.out or _default_out(args.scenario)
    _write(report, out)
    _summary(report, out, sys.stdout)
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def cmd_convergence(args):
    if not 2 <= args.levels <= 4:
        raise UsageError("--levels must be between 2 and 4")
    scenario = load(args.scenario)
    if any(o.data_path for o in scenario.objects.values()):
        raise ScenarioValidationError("objects loaded from data files cannot be refined")
    grids = [scenario.scaled_grid(2**k) for k in range(args.levels)]
    report = build_report(scenario, grids, "convergence")
    out = args.out or _default_out(args.scenario).replace(".report.", ".convergence.")
    _write(report, out)
    for rec in report["analyses"]:
        for q, o in sorted(rec["observed_order"].items()):
            shown = "roundoff" if o["order"] is None else f"{o['order']:.2f}"
            print(f"  {rec['name']}.{q}: order {shown}")
    _summary(report, out, sys.stdout)
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def cmd_list_families(args):
    listing = families.list_families()
    if args.machine:
        print(json.dumps(listing, indent=2, sort_keys=True))
        return EXIT_OK
    for fam in listing:
        print(f"{fam['name']}  [{fam['kind']}; groups {', '.join(fam['groups'])}]")
        print(f"    {fam['doc']}")
        for pname, p in fam["params"].items():
            print(f"    {pname:<12} {p['type']:<6} default {p['default']!r:<18} {p['doc']}{_range(p)}")
    return EXIT_OK


def _range(p):
    parts = []
    if "min" in p:
        parts.append(f">= {p['min']}")
    if "max" in p:
        parts.append(f"<= {p['max']}")
    if p.get("choices"):
        parts.append("one of " + "|".join(p["choices"]))
    return f" ({', '.join(parts)})" if parts else ""


def make_parser():
    p = _Parser(prog="asymgauge", description="Asymptotic gauge-group verification scenarios.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    r = sub.add_parser("run", help="run a scenario and write its report")
    r.add_argument("scenario")
    r.add_argument("--out")
    r.add_argument("--grid-scale", type=int, default=1)
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("convergence", help="rerun a scenario on doubled grids")
    c.add_argument("scenario")
    c.add_argument("--levels", type=int, required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_convergence)
    f = sub.add_parser("list-families", help="print the analytic family registry")
    f.add_argument("--machine", action="store_true", help="JSON output")
    f.set_defaults(func=cmd_list_families)
    return p


def main(argv=None):
    try:
        args = make_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
