import json
import math

import numpy as np
import pytest

from longarm import analysis
from longarm.cli import main
from longarm.gw import OffspringDist, total_progeny_pmf


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exponents_json(capsys):
    code, out, _ = _run(capsys, ["exponents", "--alpha", "0.8"])
    assert code == 0
    obj = json.loads(out)
    assert obj["rho"] == pytest.approx(0.4)
    assert obj["xi"] == pytest.approx(0.8 / 3.6)
    es = analysis.exponents(0.8)
    assert obj["beta_lo"] == pytest.approx(es.beta_lo)
    assert obj["beta_hi"] == pytest.approx(es.beta_hi)


def test_exponents_rejects_alpha_two(capsys):
    code, _, err = _run(capsys, ["exponents", "--alpha", "2.0"])
    assert code == 2
    assert "error" in err


def test_check_beta_midpoint_default(capsys):
    code, out, _ = _run(capsys, ["check-beta", "--alpha", "0.8"])
    assert code == 0
    obj = json.loads(out)
    assert obj["all_hold"] is True
    assert set(obj["constraints"]) == {"sandwich", "kolmogorov", "ersatz"}


def test_check_beta_explicit_failure(capsys):
    code, out, _ = _run(capsys, ["check-beta", "--alpha", "0.8", "--beta", "0.1"])
    assert code == 0
    assert json.loads(out)["all_hold"] is False


def test_progeny_csv(capsys):
    code, out, err = _run(capsys, ["progeny", "--offspring", "binary",
                                   "--n-max", "5"])
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "n,pmf"
    pmf = total_progeny_pmf(OffspringDist.binary(), 5)
    for n in range(1, 6):
        assert float(lines[n].split(",")[1]) == pmf[n - 1]
    meta = json.loads(err)
    assert meta["n_max"] == 5


def test_enumerate_and_bk(capsys, tmp_path):
    graph = {"n_vertices": 3, "edges": [[0, 1, 0.5], [1, 2, 0.25]]}
    path = tmp_path / "g.json"
    path.write_text(json.dumps(graph))
    code, out, _ = _run(capsys, ["enumerate", "--graph", str(path),
                                 "--source", "0", "--target", "2"])
    assert code == 0
    assert json.loads(out)["probability"] == pytest.approx(0.125)

    code, out, _ = _run(capsys, ["bk-check", "--graph", str(path),
                                 "--a", "0,1", "--b", "1,2"])
    assert code == 0
    obj = json.loads(out)
    assert obj["holds"] is True
    assert obj["p_disjoint"] <= obj["p_product"] + 1e-12


def test_green_outputs(capsys, tmp_path):
    out_path = tmp_path / "green.csv"
    code, _, _ = _run(capsys, ["green", "--d", "1", "--alpha", "0.8",
                               "--N", "64", "--R", "32",
                               "--tab-radius", "256", "-o", str(out_path)])
    assert code == 0
    lines = out_path.read_text().strip().split("\n")
    assert lines[0] == "x,g"
    assert len(lines) == 34  # header + x = 0..32
    g0 = float(lines[1].split(",")[1])
    assert g0 > 1.0  # Green at the origin includes generation zero
    meta = json.loads((tmp_path / "green.csv.meta.json").read_text())
    assert meta["N"] == 64
    assert meta["residual"] > 0


def test_green_rejects_recurrent(capsys):
    code, _, err = _run(capsys, ["green", "--d", "1", "--alpha", "3.0",
                                 "--N", "16", "--R", "16"])
    assert code == 2


def test_brw_gamma_job_and_fit(capsys, tmp_path):
    out_path = tmp_path / "brw.csv"
    argv = ["brw-gamma", "--d", "1", "--alpha", "0.8", "--tab-radius", "512",
            "--radii", "2,4,8", "--samples", "4000", "--seed", "3",
            "--offspring", "geometric-half", "-o", str(out_path)]
    code, _, _ = _run(capsys, argv)
    assert code == 0
    lines = out_path.read_text().strip().split("\n")
    assert lines[0].startswith("r,hits,trials,gamma_hat")
    assert len(lines) == 4
    meta = json.loads((out_path.with_suffix(".csv.meta.json")).read_text())
    assert meta["model"] == "BRW"
    assert meta["samples"] == 4000

    code, out, _ = _run(capsys, ["fit", "--input", str(out_path)])
    assert code == 0
    fit = json.loads(out)
    assert -1.0 < fit["slope"] < 0.0
    assert fit["slope_stderr"] > 0


def test_brw_gamma_worker_independence(capsys, tmp_path):
    texts = []
    for w, name in ((1, "a.csv"), (3, "b.csv")):
        out_path = tmp_path / name
        code, _, _ = _run(capsys, ["brw-gamma", "--d", "1", "--alpha", "0.8",
                                   "--tab-radius", "512", "--radii", "2,4",
                                   "--samples", "3000", "--seed", "12",
                                   "--workers", str(w), "-o", str(out_path)])
        assert code == 0
        texts.append(out_path.read_bytes())
    assert texts[0] == texts[1]


def test_brw_gamma_config_overrides_flags(capsys, tmp_path):
    cfg = {"kernel": {"d": 1, "alpha": 0.8, "lambda": 1.0},
           "radii": [2, 4], "samples": 500, "seed": 1,
           "offspring": "binary", "workers": 1}
    cfg_path = tmp_path / "job.json"
    cfg_path.write_text(json.dumps(cfg))
    out_path = tmp_path / "out.csv"
    code, _, _ = _run(capsys, ["brw-gamma", "--config", str(cfg_path),
                               "--samples", "99999", "--tab-radius", "512",
                               "-o", str(out_path)])
    assert code == 0
    meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
    assert meta["samples"] == 500  # config wins over the flag


def test_lrp_gamma_explicit_p(capsys, tmp_path):
    out_path = tmp_path / "lrp.csv"
    code, _, _ = _run(capsys, ["lrp-gamma", "--d", "1", "--alpha", "0.8",
                               "--tab-radius", "512", "--p", "2.0",
                               "--radii", "2,4", "--window", "32",
                               "--samples", "500", "--seed", "4",
                               "-o", str(out_path)])
    assert code == 0
    lines = out_path.read_text().strip().split("\n")
    assert lines[0].endswith("indeterminate_fraction")
    meta = json.loads((tmp_path / "lrp.csv.meta.json").read_text())
    assert meta["model"] == "LRP"
    assert meta["p"] == 2.0


def test_lrp_gamma_radius_guard(capsys):
    code, _, err = _run(capsys, ["lrp-gamma", "--d", "1", "--alpha", "0.8",
                                 "--p", "1.0", "--radii", "16",
                                 "--window", "32", "--samples", "10"])
    assert code == 2


def test_missing_dimension_is_validation_error(capsys):
    code, _, err = _run(capsys, ["brw-gamma", "--alpha", "0.8",
                                 "--samples", "10"])
    assert code == 2
    assert "error" in err


def test_fit_missing_column(capsys, tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("r,value\n2,1.0\n4,0.5\n8,0.25\n")
    code, _, _ = _run(capsys, ["fit", "--input", str(path)])
    assert code == 2
    code, out, _ = _run(capsys, ["fit", "--input", str(path),
                                 "--value-column", "value"])
    assert code == 0
    assert json.loads(out)["slope"] == pytest.approx(-1.0, abs=1e-9)
