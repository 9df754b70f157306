import json
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import WORKED_COMPUTE_TO_0_3
from lawtraverse import io as lio
from lawtraverse.cli import main
from lawtraverse.lawcore import LawFamily, PowerLaw, evaluate
from lawtraverse.lawfit import RunSeries
from lawtraverse.svg import read_polylines


def run(*argv, env=None):
    """Black-box invocation through the module entry point."""
    full_env = dict(os.environ)
    full_env.pop("LAWTRAVERSE_CONFIG", None)
    full_env.update(env or {})
    proc = subprocess.run(
        [sys.executable, "-m", "lawtraverse", *map(str, argv)],
        capture_output=True,
        text=True,
        env=full_env,
    )
    return proc.returncode, proc.stdout, proc.stderr


def call(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def fam_path(tmp_path, worked_family):
    path = tmp_path / "worked.json"
    lio.save_family(worked_family, path)
    return path


@pytest.fixture
def greedy_path(tmp_path, fam_path, capsys):
    code, out, _ = call(capsys, "schedule", fam_path, "--e-start", 0.85, "--e-end", 0.25)
    assert code == 0
    path = tmp_path / "greedy.json"
    path.write_text(out)
    return path


def test_fit_noiseless_csv(tmp_path):
    law = PowerLaw(0.8, 1.0, 0.1, 1.0)
    c = np.geomspace(1e-2, 1e2, 32)
    path = tmp_path / "patch=8.csv"
    path.write_text(lio.series_to_csv(RunSeries(c, evaluate(law, c))))
    out_path = tmp_path / "fam.json"
    code, out, err = run("fit", path, "--out", out_path)
    assert code == 0, err
    payload = json.loads(out)
    (entry,) = payload["family"]["laws"]
    assert entry["shape"] == "patch=8"
    for k, want in zip("abcd", law.params):
        assert entry[k] == pytest.approx(want, rel=1e-4)
    assert len(payload["reports"][0]["starts"]) == 36
    assert lio.load_family(out_path).labels == ("patch=8",)


def test_fit_empty_csv_exit_2(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    path.write_text("")
    code, out, err = call(capsys, "fit", path)
    assert code == 2 and out == ""
    assert "line 1" in err


def test_fit_bad_row_names_line(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("compute,error\n1,0.5\n2,zzz\n")
    code, _, err = call(capsys, "fit", path)
    assert code == 2 and "line 3" in err


def test_fit_duplicate_labels_exit_2(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    for d in (a, b):
        (d / "p8.csv").write_text("compute,error\n1,0.5\n2,0.4\n")
    code, out, err = call(capsys, "fit", a / "p8.csv", b / "p8.csv")
    assert code == 2 and out == ""
    assert "p8" in err


def test_fit_too_few_points_exit_1(tmp_path, capsys):
    path = tmp_path / "short.csv"
    path.write_text("compute,error\n1,0.5\n2,0.4\n")
    code, out, _ = call(capsys, "fit", path)
    assert code == 1 and out == ""


def test_schedule_worked(fam_path, capsys):
    code, out, _ = call(capsys, "schedule", fam_path)
    assert code == 0
    payload = json.loads(out)
    (t,) = payload["schedule"]["transitions"]
    assert payload["schedule"]["initial"] == "B" and t["shape"] == "A"
    assert t["value"] == pytest.approx(0.550, abs=1e-3)
    assert [s["shape"] for s in payload["partition"]["segments"]] == ["B", "A"]


def test_schedule_single_law(tmp_path, capsys):
    path = tmp_path / "one.json"
    lio.save_family(LawFamily.from_laws([PowerLaw(0.8, 1, 0.1, 1, "A")]), path)
    code, out, _ = call(capsys, "schedule", path)
    assert code == 0
    assert json.loads(out)["schedule"]["transitions"] == []


def test_schedule_linear_baseline(fam_path, capsys):
    code, out, _ = call(capsys, "schedule", fam_path, "--baseline", "linear", "--budget", 10)
    assert code == 0
    sched = json.loads(out)["schedule"]
    assert sched["kind"] == "linear"
    assert [t["value"] for t in sched["transitions"]] == [5.0]
    code, _, err = call(capsys, "schedule", fam_path, "--baseline", "linear")
    assert code == 2 and "--budget" in err


def test_schedule_steps(fam_path, capsys):
    code, out, _ = call(capsys, "schedule", fam_path, "--e-end", 0.4, "--steps-with", "B=0.1,A=0.2")
    assert code == 0
    assert json.loads(out)["steps"] == [{"shape": "A", "step": 6}]
    code, _, _ = call(capsys, "schedule", fam_path, "--steps-with", "B=0.1,A")
    assert code == 2
    code, _, _ = call(capsys, "schedule", fam_path, "--steps-with", "B=0.1")
    assert code == 1


def test_schedule_empty_domain_exit_1(fam_path, capsys):
    code, out, _ = call(capsys, "schedule", fam_path, "--e-start", 0.99, "--e-end", 0.95)
    assert code == 1 and out == ""


def test_simulate_greedy(tmp_path, fam_path, greedy_path, capsys):
    csv_path, svg_path = tmp_path / "t.csv", tmp_path / "t.svg"
    code, out, _ = call(
        capsys, "simulate", fam_path, greedy_path, "--e-start", 0.85, "--target", 0.3, "--csv", csv_path, "--svg", svg_path
    )
    assert code == 0
    s = json.loads(out)
    assert s["compute_at_target"] == pytest.approx(WORKED_COMPUTE_TO_0_3, rel=1e-6)
    assert s["best_static"] == {"shape": "A", "compute": pytest.approx(3.0)}
    assert s["savings"] == pytest.approx(0.066, abs=5e-4)
    assert s["transitions"][0]["from"] == "B"

    rows = [line.split(",") for line in csv_path.read_text().splitlines()[1:]]
    curves = read_polylines(svg_path.read_text())
    sched_curve = curves["greedy schedule"]
    positive = [(float(c), float(e)) for c, e, _ in rows if float(c) > 0]
    assert len(sched_curve) == len(positive)
    np.testing.assert_allclose(np.array(sched_curve), np.array(positive), rtol=2e-3)


def test_simulate_static_and_log_baseline(tmp_path, fam_path, greedy_path, capsys):
    static = tmp_path / "static.json"
    static.write_text(lio.dumps({"kind": "explicit", "initial": "A", "transitions": []}))
    code, out, _ = call(capsys, "simulate", fam_path, static, "--e-start", 0.9, "--target", 0.3)
    assert code == 0 and json.loads(out)["savings"] == pytest.approx(0.0, abs=1e-12)

    code, out, _ = call(capsys, "schedule", fam_path, "--baseline", "log", "--budget", 3.0)
    log_path = tmp_path / "log.json"
    log_path.write_text(out)
    code, out, _ = call(capsys, "simulate", fam_path, log_path, "--e-start", 0.85, "--target", 0.3)
    log_savings = json.loads(out)["savings"]
    code, out, _ = call(capsys, "simulate", fam_path, greedy_path, "--e-start", 0.85, "--target", 0.3)
    assert log_savings <= json.loads(out)["savings"]


def test_simulate_shape_mismatch_exit_1(tmp_path, fam_path, capsys):
    sched = tmp_path / "z.json"
    sched.write_text(lio.dumps({"kind": "explicit", "initial": "Z", "transitions": []}))
    code, out, _ = call(capsys, "simulate", fam_path, sched)
    assert code == 1 and out == ""


def test_frontier(tmp_path, fam_path, capsys):
    code, out, _ = call(capsys, "frontier", fam_path, "--grid-min", 1.0, "--grid-max", 1.0, "--points", 1)
    assert code == 2  # degenerate range
    csv_path, svg_path = tmp_path / "f.csv", tmp_path / "f.svg"
    code, out, _ = call(
        capsys, "frontier", fam_path, "--grid-min", 0.01, "--grid-max", 100, "--points", 9, "--csv", csv_path, "--svg", svg_path
    )
    assert code == 0
    pts = json.loads(out)["points"]
    at_one = next(p for p in pts if p["compute"] == pytest.approx(1.0))
    assert at_one["static_error"] == pytest.approx(0.475) and at_one["static_shape"] == "B"
    assert all(p["scheduled_error"] <= p["static_error"] + 1e-12 for p in pts)
    assert len(csv_path.read_text().splitlines()) == 10
    assert set(read_polylines(svg_path.read_text())) == {"static", "scheduled"}


def test_frontier_single_law(tmp_path, capsys):
    law = PowerLaw(0.8, 1, 0.1, 1, "A")
    path = tmp_path / "one.json"
    lio.save_family(LawFamily.from_laws([law]), path)
    code, out, _ = call(capsys, "frontier", path, "--grid-min", 0.1, "--grid-max", 10, "--points", 5)
    pts = json.loads(out)["points"]
    np.testing.assert_allclose([p["static_error"] for p in pts], evaluate(law, np.geomspace(0.1, 10, 5)))


def test_flops(capsys):
    code, out, _ = call(capsys, "flops", "vit:d=768,L=12,p=8,img=120x120x3", "--batch", 256)
    p = json.loads(out)
    assert code == 0 and p["tokens"] == 225
    assert p["forward_flops"] == pytest.approx(2.004e10, rel=1e-3)
    assert p["step_flops"] == pytest.approx(1.539e13, rel=1e-3)
    code, out, _ = call(capsys, "flops", "lm:d=1,L=1,n=1")
    assert json.loads(out)["forward_flops"] == 14
    code, out, _ = call(capsys, "flops", "vit:d=384,L=12,p=12", "--teacher", "vit:d=640,L=10,p=12", "--batch", 1)
    p = json.loads(out)
    assert p["step_flops"] == 3 * p["forward_flops"] + p["teacher_forward_flops"]


def test_flops_bad_shape_exit_2(capsys):
    code, out, err = call(capsys, "flops", "vit:d=768")
    assert code == 2 and out == "" and "missing" in err


def test_carbon(capsys):
    code, out, _ = call(capsys, "carbon", "--gpu-hours", 120, "--watts", 280, "--pue", 1.1)
    p = json.loads(out)
    assert code == 0 and f"{p['tco2eq']:.2g}" == "0.014"
    code, _, _ = call(capsys, "carbon", "--gpu-hours", 1, "--watts", 0)
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [[], ["nope"], ["carbon"], ["schedule"], ["flops", "vit:d=8,L=1,p=2", "--batch", "x"], ["fit", "/no/such/file.csv"]],
)
def test_usage_errors_exit_2(argv, capsys):
    code, out, _ = call(capsys, *argv)
    assert code == 2 and out == ""


def test_missing_family_file_exit_2(capsys, tmp_path):
    code, _, _ = call(capsys, "schedule", tmp_path / "missing.json")
    assert code == 2


def test_black_box_exit_codes(fam_path, tmp_path):
    assert run("flops", "lm:d=1,L=1,n=1")[0] == 0
    assert run("schedule", fam_path, "--e-start", 0.99, "--e-end", 0.95)[0] == 1
    assert run("flops", "bad")[0] == 2


def test_output_is_byte_identical(fam_path, greedy_path):
    a = run("simulate", fam_path, greedy_path, "--target", 0.3, "--json-trajectory")
    b = run("simulate", fam_path, greedy_path, "--target", 0.3, "--json-trajectory")
    assert a[0] == 0 and a[1] == b[1]
    json.loads(a[1])


def test_config_precedence(tmp_path, fam_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"carbon": {"pue": 2.0, "intensity": 1.0}}))
    env = {"LAWTRAVERSE_CONFIG": str(cfg)}
    _, out, _ = run("carbon", "--gpu-hours", 1000, "--watts", 1000, env=env)
    assert json.loads(out)["pue"] == 2.0 and json.loads(out)["tco2eq"] == pytest.approx(2.0)
    _, out, _ = run("carbon", "--gpu-hours", 1000, "--watts", 1000, "--pue", 1.5, env=env)
    assert json.loads(out)["pue"] == 1.5
    _, out, _ = run("carbon", "--gpu-hours", 1000, "--watts", 1000)
    assert json.loads(out)["pue"] == 1.1
    cfg.write_text(json.dumps({"carbon": {"colour": "red"}}))
    assert run("carbon", "--gpu-hours", 1, "--watts", 1, env=env)[0] == 2
    cfg.write_text("{broken")
    assert run("carbon", "--gpu-hours", 1, "--watts", 1, env=env)[0] == 2
