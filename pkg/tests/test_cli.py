import json
import math
import os

import numpy as np
import pytest

from covlab import geometry as geo
from covlab.cli import main
from covlab.sampling import save_cloud_csv, uniform_sample


def test_constants_table(capsys):
    assert main(["constants", "--d", "2..4", "--k", "1..3"]) == 0
    table = json.loads(capsys.readouterr().out)
    assert table["c_dk"]["3,1"] == pytest.approx(2 ** -4 * math.pi ** (5 / 3),
                                                 rel=1e-12)
    assert table["theta_d"]["3"] == pytest.approx(4 * math.pi / 3)
    assert table["c_d"]["3"] == pytest.approx(3 * math.pi ** 2 / 32)


def test_cover_subcommand(tmp_path, capsys):
    cloud = uniform_sample(geo.unit_disk(), 150, 3)
    path = str(tmp_path / "pts.csv")
    save_cloud_csv(cloud, path)
    rc = main(["cover", "--cloud", path, "--spec", "disk", "--k", "1",
               "--h", "0.02"])
    assert rc == 0
    est = json.loads(capsys.readouterr().out)
    assert est["hi"] - est["lo"] == pytest.approx(0.02)
    assert est["k"] == 1 and est["metric"] == "geodesic"


def test_cover_with_region_and_refinement(tmp_path, capsys):
    cloud = uniform_sample(geo.unit_disk(), 200, 4)
    path = str(tmp_path / "pts.csv")
    save_cloud_csv(cloud, path)
    rc = main(["cover", "--cloud", path, "--spec", "disk", "--k", "2",
               "--h", "0.05", "--refine-to", "0.002",
               "--region", '{"kind": "interior_body", "delta": 0.2}',
               "--metric", "euclidean"])
    assert rc == 0
    est = json.loads(capsys.readouterr().out)
    assert est["h"] == pytest.approx(0.002)
    assert est["metric"] == "euclidean"
    # the argmax node respects the interior constraint
    assert np.hypot(*est["argmax"]) <= 0.8 + 1e-9


def test_cover_rejects_outside_points(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("idx,x1,x2\n0,2.0,0.0\n")
    rc = main(["cover", "--cloud", str(bad), "--spec", "disk", "--k", "1",
               "--h", "0.1"])
    assert rc == 1


def _write_cfg(tmp_path, **kw):
    doc = {
        "spec": {"family": "unit_disk"},
        "region": {"kind": "all"},
        "sampler": "binomial",
        "sizes": [64],
        "k": {"kind": "constant", "k": 1},
        "replications": 3,
        "base_seed": 11,
    }
    doc.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_weak_run_outputs_and_determinism(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    out1, out2 = str(tmp_path / "r1"), str(tmp_path / "r2")
    assert main(["weak", "--config", cfg, "--out", out1]) == 0
    assert main(["weak", "--config", cfg, "--out", out2]) == 0
    rows1 = open(os.path.join(out1, "rows.csv"), "rb").read()
    rows2 = open(os.path.join(out2, "rows.csv"), "rb").read()
    assert rows1 == rows2
    s1 = open(os.path.join(out1, "summary.json"), "rb").read()
    s2 = open(os.path.join(out2, "summary.json"), "rb").read()
    assert s1 == s2
    assert os.path.exists(os.path.join(out1, "run_meta.json"))


def test_weak_run_seed_override_changes_rows(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["weak", "--config", cfg, "--out", out1]) == 0
    assert main(["weak", "--config", cfg, "--seed", "99", "--out", out2]) == 0
    assert (open(os.path.join(out1, "rows.csv")).read()
            != open(os.path.join(out2, "rows.csv")).read())


def test_summary_config_echo_round_trips(tmp_path, capsys):
    from covlab.harness import ExperimentConfig
    cfg = _write_cfg(tmp_path)
    out = str(tmp_path / "r")
    assert main(["weak", "--config", cfg, "--out", out]) == 0
    doc = json.loads(open(os.path.join(out, "summary.json")).read())
    echoed = ExperimentConfig.from_json(doc["config"])
    assert echoed.to_json() == doc["config"]


def test_interior_and_slln_subcommands(tmp_path, capsys):
    cfg_i = _write_cfg(tmp_path, region={"kind": "interior_body", "delta": 0.3})
    out = str(tmp_path / "ri")
    assert main(["interior", "--config", cfg_i, "--out", out]) == 0
    cfg_s = _write_cfg(tmp_path, spec={"family": "unit_square"},
                       sizes=[64, 256])
    out2 = str(tmp_path / "rs")
    assert main(["slln", "--config", cfg_s, "--out", out2]) == 0
    summary = json.loads(open(os.path.join(out2, "summary.json")).read())
    assert "reference" in summary["summary"]


def test_refusal_exit_code_2(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, region={"kind": "interior_body", "delta": 0.3},
                     k={"kind": "constant", "k": 2})
    assert main(["weak", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_unknown_subcommand_exit_1(capsys):
    assert main(["frobnicate"]) == 1
    assert main([]) == 1


def test_selftest_subcommand(capsys):
    assert main(["selftest", "--fast"]) == 0
    out = capsys.readouterr().out
    assert "checks passed" in out and "FAIL" not in out


def test_sizes_and_reps_overrides(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    out = str(tmp_path / "o")
    assert main(["weak", "--config", cfg, "--reps", "2", "--sizes", "64,128",
                 "--out", out]) == 0
    rows = open(os.path.join(out, "rows.csv")).read().strip().splitlines()
    assert len(rows) == 1 + 4  # header + 2 sizes x 2 reps
