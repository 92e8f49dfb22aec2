import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from asymptotic_gauge import cli, families, lie, serialization
from asymptotic_gauge.geometry import build_grid
from asymptotic_gauge.scenario import ScenarioParseError, load, typed_value

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def write(tmp_path, text, name="s.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(argv):
    return cli.main([str(a) for a in argv])


CONSTANT = """
[scenario]
group = SU2
grid = 24 12 12

[gauge g]
family = constant_map
angle = 0.5

[analysis c]
type = classify
gauge = g
expect_variant = BoundaryPreserving
"""


# -- run ------------------------------------------------------------------------


def test_classify_constant_map(tmp_path):
    out = tmp_path / "r.json"
    assert run(["run", write(tmp_path, CONSTANT), "--out", out]) == 0
    report = json.loads(out.read_text())
    (rec,) = report["analyses"]
    assert rec["results"]["variant"]["value"] == "BoundaryPreserving"
    assert rec["passed"] and report["passed"]
    assert rec["results"]["variant"]["grid_level"] == 0
    assert (tmp_path / "r.csv").exists()


def test_coulomb_flux_scenario(tmp_path):
    out = tmp_path / "flux.json"
    assert run(["run", SCENARIOS / "coulomb_flux.ini", "--out", out]) == 0
    rec = json.loads(out.read_text())["analyses"][0]
    assert rec["results"]["flux"]["value"] == pytest.approx(4 * np.pi, rel=0.01)
    assert rec["results"]["flux"]["tolerance"] == {"rtol": 0.01, "atol": 0.0}


@pytest.mark.parametrize("name", sorted(p.name for p in SCENARIOS.glob("*.ini")))
def test_shipped_scenarios_pass(tmp_path, name):
    assert run(["run", SCENARIOS / name, "--out", tmp_path / "r.json"]) == 0


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    src = SCENARIOS / "momentum.ini"
    assert run(["run", src, "--out", a]) == 0
    assert run(["run", src, "--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_failed_check_exit_code(tmp_path):
    text = CONSTANT.replace("BoundaryPreserving", "Formal")
    out = tmp_path / "r.json"
    assert run(["run", write(tmp_path, text), "--out", out]) == 5
    assert json.loads(out.read_text())["passed"] is False


def test_grid_scale(tmp_path):
    out = tmp_path / "r.json"
    assert run(["run", write(tmp_path, CONSTANT), "--out", out, "--grid-scale", 2]) == 0
    assert json.loads(out.read_text())["levels"] == [[48, 24, 24]]


def test_data_objects(tmp_path):
    grid = build_grid(16, 8, 8)
    serialization.save(families.build("coulomb", grid, lie.U1, q=2.0), tmp_path / "E.bin")
    text = """
[scenario]
group = U1
grid = 16 8 8

[field E]
data = E.bin

[analysis f]
type = flux
field = E
expect = 8pi
rtol = 0.01
"""
    path = write(tmp_path, text)
    assert run(["run", path, "--out", tmp_path / "r.json"]) == 0
    assert run(["run", path, "--out", tmp_path / "r.json", "--grid-scale", 2]) == 4


# -- error paths --------------------------------------------------------------------------


def test_malformed_file_exit_2_without_report(tmp_path, capsys):
    path = write(tmp_path, "[scenario]\ngroup = U1\nthis line is broken\n")
    out = tmp_path / "r.json"
    assert run(["run", path, "--out", out]) == 2
    assert not out.exists()
    assert "line 3" in capsys.readouterr().err


def test_parse_error_position(tmp_path):
    with pytest.raises(ScenarioParseError) as info:
        load(write(tmp_path, "[scenario]\ngroup = U1\n[field E\n"))
    assert info.value.line == 3 and info.value.column == 1


def test_unknown_family_exit_3(tmp_path):
    text = CONSTANT.replace("constant_map", "instanton")
    out = tmp_path / "r.json"
    assert run(["run", write(tmp_path, text), "--out", out]) == 3
    assert not out.exists()


@pytest.mark.parametrize(
    "old, new",
    [
        ("grid = 24 12 12", "grid = 4 4 4"),
        ("group = SU2", "group = SO3"),
        ("gauge = g\n", "gauge = h\n"),
        ("angle = 0.5", "angle = wide"),
        ("type = classify", "type = holonomy"),
        ("gauge = g\nexpect", "expect"),
    ],
)
def test_validation_failures_exit_4(tmp_path, old, new):
    text = CONSTANT.replace(old, new, 1)
    assert text != CONSTANT
    out = tmp_path / "r.json"
    assert run(["run", write(tmp_path, text), "--out", out]) == 4
    assert not out.exists()


def test_unknown_flag_is_usage_error(capsys):
    assert run(["list-families", "--verbose"]) == 1
    assert run(["frobnicate"]) == 1


# -- list-families ---------------------------------------------------------------------------


def test_list_families_text(capsys):
    assert run(["list-families"]) == 0
    text = capsys.readouterr().out
    assert "hedgehog" in text and "winding" in text and "scale" in text


def test_list_families_machine(capsys):
    assert run(["list-families", "--machine"]) == 0
    listing = json.loads(capsys.readouterr().out)
    hedgehog = next(f for f in listing if f["name"] == "hedgehog")
    assert hedgehog["params"]["winding"]["type"] == "int"


# -- convergence -------------------------------------------------------------------------------


def test_convergence_levels_outside_range(tmp_path):
    path = write(tmp_path, CONSTANT)
    assert run(["convergence", path, "--levels", 1]) == 1
    assert run(["convergence", path, "--levels", 5]) == 1


def test_exact_tail_flux_converges_with_order_two(tmp_path):
    out = tmp_path / "c.json"
    assert run(["convergence", SCENARIOS / "coulomb_flux.ini", "--levels", 3, "--out", out]) == 0
    rec = next(r for r in json.loads(out.read_text())["analyses"] if r["name"] == "flux_exact_tail")
    order = rec["observed_order"]["flux"]
    assert order["note"] in ("roundoff", "reaches roundoff") or order["order"] >= 2
    assert len(rec["convergence"]) == 3


def test_hedgehog_winding_stable_across_levels(tmp_path):
    text = (SCENARIOS / "hedgehog.ini").read_text().replace("grid = 24 16 16", "grid = 24 8 8")
    out = tmp_path / "c.json"
    assert run(["convergence", write(tmp_path, text), "--levels", 3, "--out", out]) == 0
    rec = next(r for r in json.loads(out.read_text())["analyses"] if r["name"] == "w1")
    assert [row["values"]["winding"] for row in rec["convergence"]] == [1, 1, 1]


# -- scenario values and the installed entry point ---------------------------------------------------


@pytest.mark.parametrize("text, value", [("true", True), ("3", 3), ("-2.5e-1", -0.25), ("1 2 3", [1, 2, 3]), ("4pi", "4pi")])
def test_typed_values(text, value):
    assert typed_value(text) == value


def test_console_script(tmp_path):
    exe = shutil.which("asymgauge")
    cmd = [exe] if exe else [sys.executable, "-m", "asymptotic_gauge.cli"]
    done = subprocess.run(cmd + ["run", write(tmp_path, CONSTANT), "--out", str(tmp_path / "r.json")], capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
    assert "pass" in done.stdout
