import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from specflow.cli import main
from specflow.cube import ImageCube, load_cube, save_cube
from specflow.metrics import compare_fields
from specflow.spectral import load_velocity

SMALL = ["--size", "64", "--feature-scale", "10", "--seed", "3"]


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def generated(tmp_path, capsys):
    code, out, _ = run(["generate", "--flow", "random", "--rms", 0.15, "--modes", 2, "--frames", 6,
                        *SMALL, "--out", tmp_path / "g"], capsys)
    assert code == 0
    return tmp_path, json.loads(out)


def test_generate_writes_files_and_manifest(generated):
    d, manifest = generated
    for name in ("g.ofc", "g_truth.ofv", "g_truth.csv", "g.json"):
        assert (d / name).exists()
    assert manifest["rms"] == 0.15 and manifest["seed"] == 3 and manifest["frames"] == 6
    assert json.loads((d / "g.json").read_text()) == manifest
    assert load_cube(d / "g.ofc").shape == (6, 64, 64)
    assert abs(manifest["truth_rms"] - 0.15) < 1e-9


def test_generate_22_mode_configuration(tmp_path, capsys):
    code, out, _ = run(["generate", "--flow", "random", "--rms", 0.2, "--modes", 22, "--frames", 10,
                        "--out", tmp_path / "c"], capsys)
    assert code == 0 and json.loads(out)["rms"] == 0.2
    assert load_velocity(tmp_path / "c_truth.ofv").n_x == 22


def test_generate_zero_flow_static(tmp_path, capsys):
    code, _, _ = run(["generate", "--flow", "zero", "--frames", 3, *SMALL, "--out", tmp_path / "z"], capsys)
    frames = load_cube(tmp_path / "z.ofc").frames
    assert code == 0 and np.array_equal(frames[0], frames[2])


def test_generate_deterministic(tmp_path, capsys):
    args = ["generate", "--flow", "random", "--rms", 0.1, "--modes", 2, "--frames", 3, *SMALL, "--noise", 5]
    run(args + ["--out", tmp_path / "a" / "run"], capsys)
    run(args + ["--out", tmp_path / "b" / "run"], capsys)
    for name in ("run.ofc", "run_truth.ofv", "run_truth.csv", "run.json"):
        assert digest(tmp_path / "a" / name) == digest(tmp_path / "b" / name)


@pytest.mark.parametrize("extra", [
    ["--flow", "random", "--modes", "2"],           # no rms
    ["--flow", "random", "--rms", "0.1"],           # no modes
    ["--flow", "hexagonal"],                        # no wavelength
    ["--flow", "zero", "--modes", "3"],             # modes on a zero flow
])
def test_generate_usage_errors(tmp_path, capsys, extra):
    code, _, err = run(["generate", *extra, *SMALL, "--out", tmp_path / "x"], capsys)
    assert code == 2 and "error" in err


def test_generate_hexagonal(tmp_path, capsys):
    code, out, _ = run(["generate", "--flow", "hexagonal", "--wavelength", 32, "--frames", 2,
                        "--boundary", "clamp", "--interp", "bicubic", *SMALL, "--out", tmp_path / "h"], capsys)
    assert code == 0 and json.loads(out)["flow"] == "hexagonal"


def test_estimate_end_to_end(generated, capsys):
    d, _ = generated
    code, out, _ = run(["estimate", d / "g.ofc", "--modes", 2, "--out", d / "fit",
                        "--pixel-scale", 725, "--cadence", 60, "--grid-csv", d / "fit.csv",
                        "--csv-units", "kms"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["report"]["residual"] <= 1e-8
    assert set(report["report"]) >= {"residual", "iterations", "wall_time", "symmetry_deviation"}
    assert report["units"]["kms_per_ppf"] == pytest.approx(725 / 60)
    assert report["rms_speed_kms"] == pytest.approx(report["rms_speed"] * 725 / 60)
    assert json.loads((d / "fit_report.json").read_text()) == report
    fit = load_velocity(d / "fit.ofv")
    truth = load_velocity(d / "g_truth.ofv")
    assert compare_fields(fit, truth, 16).relative_error < 0.01


def test_estimate_solvers_agree(generated, capsys):
    d, _ = generated
    run(["estimate", d / "g.ofc", "--modes", 3, "--out", d / "dir"], capsys)
    run(["estimate", d / "g.ofc", "--modes", 3, "--solver", "iterative", "--tol", 1e-8, "--out", d / "it"], capsys)
    a, b = load_velocity(d / "dir.ofv"), load_velocity(d / "it.ofv")
    assert compare_fields(b, a).relative_error < 1e-6


def test_estimate_constant_cube_exit_3(tmp_path, capsys):
    save_cube(ImageCube(np.full((3, 32, 32), 4.0)), tmp_path / "k.ofc")
    code, _, err = run(["estimate", tmp_path / "k.ofc", "--modes", 2, "--out", tmp_path / "f"], capsys)
    assert code == 3 and "gradient" in err


def test_estimate_nonconvergence_exit_4(generated, capsys):
    d, _ = generated
    code, _, _ = run(["estimate", d / "g.ofc", "--modes", 3, "--solver", "iterative", "--tol", 1e-12,
                      "--max-iter", 1, "--out", d / "f"], capsys)
    assert code == 4


def test_estimate_io_and_usage_errors(generated, capsys):
    d, _ = generated
    assert run(["estimate", d / "none.ofc", "--modes", 2, "--out", d / "f"], capsys)[0] == 5
    (d / "junk.ofc").write_bytes(b"nonsense bytes here, definitely not a cube")
    assert run(["estimate", d / "junk.ofc", "--modes", 2, "--out", d / "f"], capsys)[0] == 5
    assert run(["estimate", d / "g.ofc", "--modes", 16, "--out", d / "f"], capsys)[0] == 2
    assert run(["estimate", d / "g.ofc", "--modes", 2, "--tol", 2, "--out", d / "f"], capsys)[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["estimate", str(d / "g.ofc"), "--modes", "2", "--solver", "lu", "--out", "x"])
    assert info.value.code == 2


def test_evaluate_recover(generated, capsys):
    d, _ = generated
    run(["estimate", d / "g.ofc", "--modes", 2, "--out", d / "fit"], capsys)
    code, out, err = run(["evaluate", "--recipe", "recover", "--solution", d / "fit.ofv",
                          "--truth", d / "g_truth.csv", "--cube", d / "g.ofc", "--out", d / "ev"], capsys)
    result = json.loads(out)
    assert code == 0 and result["passed"] and "PASS" in err
    assert result["metrics"]["relative_error"] < 0.01 and result["chi2"] < result["chi0"]
    for name in ("metrics.json", "histogram.csv", "boundary_profile.csv", "zonal_profile.csv"):
        assert (d / "ev" / name).exists()


def test_evaluate_recover_needs_truth(generated, capsys):
    d, _ = generated
    run(["estimate", d / "g.ofc", "--modes", 2, "--out", d / "fit"], capsys)
    assert run(["evaluate", "--recipe", "recover", "--solution", d / "fit.ofv"], capsys)[0] == 2
    assert run(["evaluate", "--recipe", "recover"], capsys)[0] == 2


def test_evaluate_experiment_recipe_writes_csv(tmp_path, capsys, monkeypatch):
    from specflow import experiments
    monkeypatch.setitem(experiments.RECIPES, "noise-sweep",
                        lambda: dict(recipe="noise-sweep", sigma=[0, 1], relative_error=[0.1, 0.2], passed=True))
    code, out, err = run(["evaluate", "--recipe", "noise-sweep", "--out", tmp_path], capsys)
    assert code == 0 and "PASS" in err
    assert (tmp_path / "noise-sweep.csv").read_text().splitlines()[0] == "sigma,relative_error"


def test_bench_report(tmp_path, capsys):
    code, out, _ = run(["bench", "--modes", 2, 3, "--size", 64, "--repeats", 1, "--out", tmp_path / "b.json"], capsys)
    report = json.loads(out)
    assert code == 0 and len(report["rows"]) == 2
    assert np.isfinite(report["direct_exponent"])
    assert json.loads((tmp_path / "b.json").read_text())["size"] == 64


def test_import_pgm(tmp_path, capsys):
    from specflow.cube import write_pgm
    paths = []
    for i in range(3):
        img = np.full((8, 8), 0 if i == 1 else 100 + i)
        write_pgm(tmp_path / f"{i}.pgm", img)
        paths.append(tmp_path / f"{i}.pgm")
    code, out, _ = run(["import-pgm", *paths, "--out", tmp_path / "p.ofc", "--cadence", 45], capsys)
    cube = load_cube(tmp_path / "p.ofc")
    assert code == 0 and cube.valid.tolist() == [True, False, True] and cube.cadence == 45.0


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "specflow.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
