import json

import numpy as np
import pytest

from shgspec.cli import main
from shgspec.monodromy import lam_zero
from shgspec.potential import Potential


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("pot")
    zero = d / "zero.json"
    zero.write_text(Potential.zero().to_json())
    cos = d / "cos.json"
    cos.write_text(Potential.cosine(0.1).to_json())
    cfg = d / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "n_max": 6,
                "K": 6,
                "product_K_list": [4, 6],
                "differentials_n_list": [0],
                "thresholds": {"product_reps": 2e-3},
            }
        )
    )
    return d, zero, cos, cfg


def test_eval_zero_potential(files, capsys):
    d, zero, cos, cfg = files
    assert main(["eval", str(zero), "--lambda", "0.25,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["Delta"][0] - 1.0) < 1e-9
    assert abs(out["Delta"][1]) < 1e-12
    assert abs(out["sqrtc_chi_p"][0]) < 1e-9


def test_eval_input_errors(files, capsys):
    d, zero, cos, cfg = files
    assert main(["eval", str(d / "missing.json"), "--lambda", "1,0"]) == 2
    assert main(["eval", str(zero), "--lambda", "oops"]) == 2
    assert main(["eval", str(zero), "--lambda", "0,0"]) == 3  # outside annulus


def test_spectrum_zero(files, capsys):
    d, zero, cos, cfg = files
    assert main(["spectrum", str(zero), "--nmax", "4", "--K", "4"]) == 0
    table = json.loads(capsys.readouterr().out)
    assert table["N_max"] == 4
    for row in table["lambda"]:
        want = lam_zero(row["n"])
        assert abs(row["minus"][0] - want) < 1e-9
        assert abs(row["plus"][0] - want) < 1e-9
    assert abs(table["lambda_dot_star"][1] - 0.25) < 1e-10


def test_spectrum_csv(files, capsys):
    d, zero, cos, cfg = files
    assert main(["spectrum", str(cos), "--nmax", "3", "--K", "3",
                 "--format", "csv"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n,quantity,re,im"
    assert any("lambda_dot_star" in ln for ln in lines)
    assert any("U_center" in ln for ln in lines)


def test_differentials_round_trip(files, capsys, tmp_path):
    """A spectrum JSON re-read as table injection reproduces identical sigma."""
    d, zero, cos, cfg = files
    tab_path = tmp_path / "table.json"
    assert main(["spectrum", str(cos), "--nmax", "6", "--K", "6",
                 "--out", str(tab_path)]) == 0
    assert main(["differentials", str(cos), "--n-list", "1", "--nmax", "6",
                 "--K", "6"]) == 0
    direct = capsys.readouterr().out
    assert main(["differentials", str(cos), "--n-list", "1", "--nmax", "6",
                 "--K", "6", "--table", str(tab_path)]) == 0
    injected = capsys.readouterr().out
    assert json.loads(direct)[0]["sigma1"] == json.loads(injected)[0]["sigma1"]
    assert json.loads(direct)[0]["sigma2"] == json.loads(injected)[0]["sigma2"]
    sol = json.loads(direct)[0]
    assert sol["normalization_max_dev"] < 1e-6
    assert sol["iters"] <= 10


def test_differentials_rejects_negative_n(files, capsys):
    d, zero, cos, cfg = files
    assert main(["differentials", str(cos), "--n-list", "-1"]) == 2


def test_verify_exit_codes(files, capsys):
    d, zero, cos, cfg = files
    assert (
        main(["verify", str(cos), "--config", str(cfg), "--format", "csv"]) == 0
    )
    text = capsys.readouterr().out
    assert "[PASS" in text and "FAIL" not in text


def test_gradients_csv(files, capsys):
    d, zero, cos, cfg = files
    assert main(["gradients", str(cos), "--config", str(cfg)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "quantity,n,direction,analytic,fd,rel_error"
    assert len(lines) > 9
    rels = [float(ln.rsplit(",", 1)[1]) for ln in lines[1:]]
    assert max(rels) < 1e-5
