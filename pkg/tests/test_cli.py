import json

import numpy as np
import pytest

from areavar import cli, variations
from areavar.ambient import ConsistencyError


def run(tmp_path, *args):
    out = tmp_path / "out"
    rc = cli.main([*args, "--out", str(out)])
    report = {}
    if (out / "report.json").exists():
        report = json.loads((out / "report.json").read_text())
    return rc, report, out


def write_config(tmp_path, text):
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return str(p)


# -- configuration errors ----------------------------------------------------


def test_unknown_config_key(tmp_path):
    cfg = write_config(tmp_path, "surfface = t4-holomorphic\n")
    rc, _, _ = run(tmp_path, "angle", "--config", cfg)
    assert rc == 2


def test_malformed_config_line(tmp_path):
    cfg = write_config(tmp_path, "surface t4-holomorphic\n")
    assert run(tmp_path, "angle", "--config", cfg)[0] == 2


def test_comments_and_blank_lines_are_ignored(tmp_path):
    cfg = write_config(
        tmp_path,
        "# a comment\n\nsurface = t4-holomorphic  # trailing\nresolution = 16\n",
    )
    rc, report, _ = run(tmp_path, "angle", "--config", cfg)
    assert rc == 0
    assert report["config"]["surface"] == "t4-holomorphic"


def test_unknown_surface(tmp_path):
    cfg = write_config(tmp_path, "surface = moebius\n")
    assert run(tmp_path, "angle", "--config", cfg)[0] == 2


def test_resolution_floor(tmp_path):
    assert run(tmp_path, "angle", "--resolution", "8")[0] == 2


def test_bad_oracle_dt(tmp_path):
    cfg = write_config(tmp_path, "oracle.dt = 0.5\n")
    assert run(tmp_path, "first-variation", "--config", cfg)[0] == 2


def test_killing_check_needs_projective_surface(tmp_path):
    assert run(tmp_path, "killing-check", "--resolution", "16")[0] == 2


def test_bump_path_needs_curved_model(tmp_path):
    cfg = write_config(tmp_path, "path.kind = bump\nresolution = 16\n")
    assert run(tmp_path, "first-variation", "--config", cfg)[0] == 2


def test_affine_surface_requires_directions(tmp_path):
    cfg = write_config(tmp_path, "surface = t4-affine\nresolution = 16\n")
    assert run(tmp_path, "angle", "--config", cfg)[0] == 2


def test_affine_surface_custom_run(tmp_path):
    cfg = write_config(
        tmp_path,
        "surface = t4-affine\n"
        "surface.d1 = 1,0,0,0\n"
        "surface.d2 = 0,0.6,0.8,0\n"
        "surface.L1 = 6.283185307179586\n"
        "surface.L2 = 31.41592653589793\n"
        "resolution = 16\n",
    )
    rc, report, _ = run(tmp_path, "angle", "--config", cfg)
    assert rc == 0
    assert abs(report["results"]["cos_alpha_max"] - 0.6) < 1e-12
    assert abs(report["results"]["area"] - 20.0 * np.pi**2) < 1e-8


def test_rank_deficient_affine_surface_is_a_config_error(tmp_path):
    cfg = write_config(
        tmp_path,
        "surface = t4-affine\n"
        "surface.d1 = 1,0,0,0\n"
        "surface.d2 = 2,0,0,0\n"
        "surface.L1 = 6.28\nsurface.L2 = 6.28\nresolution = 16\n",
    )
    assert run(tmp_path, "angle", "--config", cfg)[0] == 2


# -- command behavior --------------------------------------------------------


def test_angle_command_outputs(tmp_path):
    rc, report, out = run(tmp_path, "angle", "--resolution", "16")
    assert rc == 0
    res = report["results"]
    assert abs(res["cos_alpha_min"] - 0.6) < 1e-12
    assert abs(res["angle_integral"] - 0.64 * res["area"]) < 1e-9
    lines = (out / "angle.csv").read_text().splitlines()
    assert lines[0] == "node,i1,i2,u1,u2,cos_alpha,sin_alpha,dmu"
    assert len(lines) == 1 + 16 * 16
    first = lines[1].split(",")
    assert first[:3] == ["0", "0", "0"]
    assert abs(float(first[5]) - 0.6) < 1e-12
    assert (out / "meta.json").exists()


def test_reports_are_byte_deterministic(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert cli.main(["angle", "--resolution", "16", "--out", str(out1)]) == 0
    assert cli.main(["angle", "--resolution", "16", "--out", str(out2)]) == 0
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
    assert (out1 / "angle.csv").read_bytes() == (out2 / "angle.csv").read_bytes()


def test_first_variation_command(tmp_path):
    rc, report, _ = run(tmp_path, "first-variation", "--resolution", "16")
    assert rc == 0
    res = report["results"]
    assert res["path"] == "distance-squared"
    assert abs(res["first_variation"] - 0.64 * 20.0 * np.pi**2) < 1e-6
    assert res["difference"] <= res["tolerance"]
    assert report["config_hash"] == cli.config_hash(
        {k: report["config"][k] for k in report["config"]}
    )


def test_second_variation_command_frame_killing(tmp_path):
    cfg = write_config(
        tmp_path, "surface = cp2-clifford\npath.kind = frame-killing\nresolution = 16\n"
    )
    rc, report, _ = run(tmp_path, "second-variation", "--config", cfg)
    assert rc == 0
    res = report["results"]
    assert res["second_variation"] < 0
    assert res["difference"] <= res["tolerance"]


def test_destabilize_holomorphic(tmp_path):
    cfg = write_config(tmp_path, "surface = t4-holomorphic\nresolution = 16\n")
    rc, report, out = run(tmp_path, "destabilize", "--config", cfg)
    assert rc == 0
    assert report["results"]["certificate"] == "holomorphic"
    assert not (out / "fields.csv").exists()


def test_destabilize_tilted_writes_fields(tmp_path):
    rc, report, out = run(tmp_path, "destabilize", "--resolution", "16")
    assert rc == 0
    assert report["results"]["certificate"] == "destabilized"
    lines = (out / "fields.csv").read_text().splitlines()
    assert lines[0] == "node,i1,i2,u1,u2,sin_alpha,d1,d2"
    assert len(lines) == 1 + 16 * 16


def test_killing_check_command(tmp_path):
    cfg = write_config(tmp_path, "surface = cp2-clifford\nresolution = 16\n")
    rc, report, _ = run(tmp_path, "killing-check", "--config", cfg)
    assert rc == 0
    res = report["results"]
    assert abs(res["pairing_unscaled"] - 0.5) < 1e-10
    assert abs(res["pairing_scaled"] - 1.0) < 1e-10
    assert res["killing_defect"] < 1e-10
    assert res["lie_metric_residual"] < 1e-6


def test_invariance_command(tmp_path):
    cfg = write_config(
        tmp_path, "surface = t4-holomorphic\nresolution = 16\npath.count = 5\n"
    )
    rc, report, _ = run(tmp_path, "invariance", "--config", cfg)
    assert rc == 0
    res = report["results"]
    assert res["holomorphic"]
    assert res["max_first_variation"] <= res["first_variation_bound"]


# -- exit-code mapping -------------------------------------------------------


def test_consistency_failure_exits_three(tmp_path, monkeypatch):
    real = variations.first_variation
    monkeypatch.setattr(variations, "first_variation", lambda g, s: real(g, s) + 1.0)
    rc, _, _ = run(tmp_path, "first-variation", "--resolution", "16")
    assert rc == 3


def test_inconclusive_destabilization_exits_one(tmp_path, monkeypatch):
    real = variations.destabilize

    def fuzzed(grid, seed=0, dt=1e-3):
        report = real(grid, seed, dt)
        report.certificate = "inconclusive"
        return report

    monkeypatch.setattr(variations, "destabilize", fuzzed)
    rc, report, _ = run(tmp_path, "destabilize", "--resolution", "16")
    assert rc == 1
    assert report["results"]["certificate"] == "inconclusive"


def test_internal_errors_are_not_swallowed(tmp_path, monkeypatch):
    def boom(grid, cfg, outdir):
        raise RuntimeError("internal")

    monkeypatch.setitem(cli.COMMANDS, "angle", boom)
    with pytest.raises(RuntimeError):
        cli.main(["angle", "--resolution", "16", "--out", str(tmp_path / "x")])
