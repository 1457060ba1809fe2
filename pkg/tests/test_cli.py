import csv
import json
import subprocess
import sys

import pytest

from periodic_cubics import cli, curve
from periodic_cubics.dynamics import NumericalError


def run(capsys, *argv):
    code = cli.main(list(argv))
    report = json.loads(capsys.readouterr().out)
    assert report["exit_code"] == code
    return code, report


def test_angle(capsys):
    code, rep = run(capsys, "angle", "1/24", "--partition", "3/10", "--ell", "2")
    assert code == 0 and rep["status"] == "ok"
    res = rep["metrics"]["result"]
    assert (res["preperiod"], res["period"]) == (1, 2)
    assert (res["alpha"], res["beta"]) == ("5/24", "7/24")


def test_knead_csv(capsys, tmp_path):
    out = tmp_path / "path.csv"
    code, rep = run(capsys, "knead", "0010", "--out", str(out))
    assert code == 0 and rep["artifacts"] == [str(out)]
    raw = out.read_bytes()
    assert b"\r\n" in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["source", "target", "kind", "position"]
    assert rows[1:] == [["0010", "0110", "B", "2"], ["0110", "1110", "B", "1"]]


def test_invalid_inputs(capsys):
    assert run(capsys, "verify", "everything")[0] == 1
    assert run(capsys, "knead", "0101")[0] == 1
    assert run(capsys, "angle", "one third")[0] == 1
    assert run(capsys, "no-such-command")[0] == 1
    code, rep = run(capsys, "render-dyn", "--a", "0", "--v", "0", "--pixels", "5000x5000")
    assert code == 1 and rep["status"] == "invalid_input"
    assert run(capsys, "classify", "--a", "0.1", "--v", "0.3")[0] == 1


def test_numerical_failure_maps_to_exit_2(capsys, monkeypatch):
    def broken(*a, **k):
        raise NumericalError("no convergence")

    monkeypatch.setattr(curve, "fiber", broken)
    code, rep = run(capsys, "curve-fiber", "--p", "2")
    assert code == 2 and rep["status"] == "numerical_error"


def test_verify_combinatorics(capsys):
    code, rep = run(capsys, "verify", "combinatorics")
    assert code == 0
    assert [c["number"] for c in rep["metrics"]["criteria"]] == [2, 3]


def test_verify_detects_stubbed_monodromy(capsys, monkeypatch):
    def stubbed(p, basepoint=1.3 + 0.1j, **kw):
        # every loop acts trivially, so each root is its own orbit
        base = curve.fiber(basepoint, p)
        ident = [curve.MonodromyPerm(tuple(range(base.degree)))]
        count = curve.orbit_count(base.degree, ident)
        return curve.MonodromyResult(p, count == 1, count, ident, [], basepoint, base)

    monkeypatch.setattr(curve, "monodromy_transitive", stubbed)
    code, rep = run(capsys, "verify", "curve")
    assert code == 3 and rep["status"] == "verification_failed"
    first = rep["metrics"]["criteria"][0]
    assert first["number"] == 1 and not first["passed"]
    assert first["metrics"]["p2"][0]["orbit_count"] == 2


def test_render_round_trip(capsys, tmp_path):
    png = tmp_path / "z3.png"
    code, rep = run(capsys, "render-dyn", "--a", "0", "--v", "0", "--pixels", "64x48", "--png", str(png))
    assert code == 0 and rep["artifacts"] == [str(png), str(tmp_path / "z3.json")]
    meta = json.loads((tmp_path / "z3.json").read_text())
    assert meta["config"]["pixels"] == [64, 48] and "seconds" in meta
    again = tmp_path / "again.png"
    assert run(capsys, "render-dyn", "--from-png", str(png), "--png", str(again))[0] == 0
    assert png.read_bytes() == again.read_bytes()


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"width": 3.0, "max_iter": 50, "render-param": {"pixels": "30x20", "max_iter": 80}}))
    png = tmp_path / "s.png"
    code, _ = run(capsys, "--config", str(cfg), "render-param", "--p", "2", "--max-iter", "90", "--png", str(png))
    assert code == 0
    echoed = json.loads((tmp_path / "s.json").read_text())["config"]
    assert echoed["width"] == 3.0 and echoed["pixels"] == [30, 20] and echoed["max_iter"] == 90
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run(capsys, "--config", str(cfg), "render-param", "--png", str(png))[0] == 1


def test_curve_commands(capsys, tmp_path):
    code, rep = run(capsys, "curve-branch", "--p", "2")
    assert code == 0 and sorted(x for x, _ in rep["metrics"]["result"]["branch_points"]) == pytest.approx([-2 / 3, 2 / 3])
    code, rep = run(capsys, "curve-monodromy", "--p", "3")
    assert code == 0 and rep["metrics"]["transitive"] and rep["metrics"]["orbit_count"] == 1
    out = tmp_path / "fiber.csv"
    assert run(capsys, "curve-fiber", "--p", "3", "--a", "0.1+0.2i", "--out", str(out))[0] == 0
    assert len(out.read_text().splitlines()) == 9


def test_dynamics_commands(capsys):
    code, rep = run(capsys, "ray", "--theta", "1/8", "--g-floor", "0.01")
    assert code == 0 and rep["metrics"]["terminated_at"] == "green_floor"
    code, rep = run(capsys, "classify", "--a", "0", "--v", "1j")
    assert code == 0 and rep["metrics"]["result"]["tag"] == "A"


def test_regions_and_param_ray(capsys):
    code, rep = run(capsys, "regions", "--p", "2")
    assert code == 0 and rep["metrics"]["kneading"] == ["00", "10"]
    code, rep = run(capsys, "param-ray", "--p", "2", "--kneading", "00", "--theta", "0", "--land")
    assert code == 0 and rep["metrics"]["landing"]["kind"] == "pcf"
    assert run(capsys, "param-ray", "--p", "2", "--kneading", "11")[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "periodic_cubics", "angle", "1/3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["metrics"]["result"]["preperiod"] == 1
