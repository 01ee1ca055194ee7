import csv
import json
import math
from pathlib import Path

import pytest

from banachmet import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def report(out):
    return json.loads((out / "report.json").read_text())


def test_exponents_diag42(tmp_path, capsys):
    code, out = run(tmp_path, "exponents", "--config", str(CONFIGS / "diag42.json"))
    assert code == 0
    r = report(out)
    lam = r["results"]["exponents"]["lambda"]
    assert lam == pytest.approx([math.log(4), math.log(2)], abs=1e-2)
    assert r["passed"] and all(c["passed"] for c in r["certificates"])
    assert r["space"]["norm"]["kind"] == "euclidean"
    rows = list(csv.reader(open(out / "ledger.csv")))
    assert rows[0] == ["n", "q", "running_mean"]
    assert "lambda" in capsys.readouterr().out


def test_report_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["exponents", "--config", str(CONFIGS / "diag42.json"), "--n", "300"]
    assert cli.main([*argv, "--out", str(a)]) == 0
    assert cli.main([*argv, "--out", str(b)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "ledger.csv").read_bytes() == (b / "ledger.csv").read_bytes()


def test_seed_changes_random_cocycle(tmp_path):
    argv = ["exponents", "--config", str(CONFIGS / "iid_diagonal.json"), "--n", "300"]
    cli.main([*argv, "--seed", "1", "--out", str(tmp_path / "a")])
    cli.main([*argv, "--seed", "2", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "report.json").read_bytes() != (tmp_path / "b" / "report.json").read_bytes()


def test_unknown_key_exit_2(tmp_path, capsys):
    code, _ = run(tmp_path, "exponents", "--config", str(CONFIGS / "malformed.json"))
    assert code == 2
    assert "sead" in capsys.readouterr().err


def test_malformed_json_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert cli.main(["exponents", "--config", str(bad)]) == 2


def test_usage_error_exit_2():
    assert cli.main(["exponents", "--qmax", "x"]) == 2
    assert cli.main(["nosuchcommand"]) == 2


def test_bad_overrides_exit_2(tmp_path):
    cfg = str(CONFIGS / "diag42.json")
    assert cli.main(["exponents", "--config", cfg, "--qmax", "9"]) == 2
    assert cli.main(["exponents", "--config", cfg, "--tol", "-1"]) == 2
    assert cli.main(["exponents", "--config", cfg, "--n", "0"]) == 2


def test_certificate_failure_exit_3(tmp_path):
    code, out = run(tmp_path, "exponents", "--config", str(CONFIGS / "diag42.json"),
                    "--n", "50", "--tol", "1e-12")
    assert code == 3
    assert not report(out)["passed"]


def test_filtration(tmp_path):
    code, out = run(tmp_path, "filtration", "--config", str(CONFIGS / "diag421_l1.json"))
    assert code == 0
    r = report(out)
    assert r["results"]["filtration"]["codims"][1:] == [1, 2]
    assert (out / "cauchy.csv").exists()


def test_spectral_table(tmp_path, capsys):
    code, out = run(tmp_path, "spectral", "--config", str(CONFIGS / "spectral_w15.json"), "--qmax", "3")
    assert code == 0
    text = capsys.readouterr().out
    assert "V_q" in text and "c_q" in text
    r = report(out)
    assert set(r["results"]["profile"]["vq"]) == {"1", "2", "3"}


def test_geometry(tmp_path):
    code, out = run(tmp_path, "geometry", "--config", str(CONFIGS / "geometry_linf.json"))
    assert code == 0
    r = report(out)
    assert r["results"]["auerbach_complement"]["proj_norm"] <= 1 + 1e-6
    # matrices are serialized row-major, one list per row
    assert len(r["results"]["auerbach_complement"]["projection_matrix"]) == 3


def test_geometry_needs_subspaces(tmp_path):
    assert cli.main(["geometry", "--config", str(CONFIGS / "diag42.json"), "--out", str(tmp_path)]) == 2


def test_sublevel(tmp_path):
    code, out = run(tmp_path, "sublevel", "--config", str(CONFIGS / "sublevel_diag.json"))
    assert code == 0
    r = report(out)
    assert r["results"]["sequence"]["first_below"] <= 60


def test_verify_geometry_small(tmp_path, capsys):
    code, out = run(tmp_path, "verify", "--suite", "volume", "--n", "1", "--seed", "3")
    assert code == 0
    assert "PASS john_sandwich[l1]" in capsys.readouterr().out
    assert report(out)["results"]["suite"] == "volume"


def test_cocycles_list(capsys):
    assert cli.main(["cocycles", "list"]) == 0
    assert "rank_deficient" in capsys.readouterr().out


def test_jsonable_non_finite():
    assert cli.jsonable([math.inf, -math.inf, math.nan, -0.0]) == ["inf", "-inf", "nan", 0.0]
