import json
import math

import pytest

from heatpert.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fourg_simple(capsys):
    code, out, _ = run(capsys, "fourg", "--a", "0.9", "--b", "1", "--d", "1", "--no-search")
    rep = json.loads(out)
    assert code == 0
    assert rep["result"]["M"] == pytest.approx(10.0)
    assert rep["version"] == "0.1.0" and rep["command"] == "fourg"
    assert "M" in rep["provenance"]


def test_fourg_alpha(capsys):
    code, out, _ = run(capsys, "fourg", "--alpha", "3", "--starts", "4")
    rep = json.loads(out)
    assert rep["result"]["L"] == pytest.approx(math.log(4.0), abs=1e-10)
    assert abs(rep["result"]["optimality"]["sup_gap"]) <= 1e-6


def test_fourg_alpha_half_has_witness(capsys):
    _, out, _ = run(capsys, "fourg", "--alpha", "0.5", "--no-search")
    rep = json.loads(out)
    assert rep["result"]["L_minus_log1p_alpha"] > 1e-6
    assert abs(rep["result"]["witness"]["gap"]) <= 1e-6


def test_series_constant(capsys):
    _, out, _ = run(capsys, "series", "--potential", '{"variant": "constant", "q0": 1}',
                    "--tilde")
    rep = json.loads(out)
    assert rep["result"]["partial_sum"] == pytest.approx(math.e / math.sqrt(4 * math.pi),
                                                         rel=1e-10)


def test_series_zero(capsys):
    _, out, _ = run(capsys, "series", "--potential", '{"variant": "zero"}', "--n-terms", "0")
    assert json.loads(out)["result"]["terms"] == [pytest.approx(1 / math.sqrt(4 * math.pi))]


def test_series_incompatible_engine(capsys):
    code, _, err = run(capsys, "series", "--potential",
                       '{"variant": "indicator_sum", "d": 3}')
    assert code == 2
    assert "monte_carlo" in json.loads(err)["message"]


def test_split_csv(capsys):
    code, out, _ = run(capsys, "split", "--beta", "1", "--theta", "0.25", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "i,lo,hi,Q" and len(lines) == 5


def test_csv_rejected_for_reports(capsys):
    code, _, _ = run(capsys, "fourg", "--alpha", "2", "--no-search", "--format", "csv")
    assert code == 2


def test_kato_heat_potential(capsys):
    _, out, _ = run(capsys, "kato", "--heat-potential", "--d", "3", "--x", "1,0,0")
    hp = json.loads(out)["result"]["heat_potential"]
    assert hp["value"] == pytest.approx(1 / (4 * math.pi), rel=1e-10)


def test_verify_success_and_violation(capsys):
    code, out, _ = run(capsys, "verify", "--potential", '{"variant": "constant", "q0": 0.5}',
                       "--beta", "0.6", "--samples", "5")
    assert code == 0 and json.loads(out)["result"]["samples"] == 5
    code, _, err = run(capsys, "verify", "--potential", '{"variant": "constant", "q0": 0.5}',
                       "--eta", "0", "--samples", "3")
    assert code == 3 and "witness" in json.loads(err)


def test_bound_compare_and_error(capsys):
    code, out, _ = run(capsys, "bound", "--I", "1e-4", "--compare", "10", "--format", "csv")
    rows = out.strip().splitlines()[1:]
    assert code == 0 and len(rows) == 10
    assert all(float(r.split(",")[-1]) >= 1.0 for r in rows)
    code, _, err = run(capsys, "bound", "--I", "1")
    assert code == 2 and "Reduce" in json.loads(err)["message"]


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"a": 2.0, "t": 3.0}))
    _, out, _ = run(capsys, "kernel", "--config", str(cfg), "--a", "4")
    rep = json.loads(out)
    assert rep["config"]["a"] == 4.0 and rep["config"]["t"] == 3.0
    code, _, _ = run(capsys, "kernel", "--config", '{"nope": 1}')
    assert code == 2


def test_byte_identical_and_seed_env(capsys, monkeypatch, tmp_path):
    args = ["fourg", "--a", "1", "--b", "2", "--samples", "200", "--starts", "2"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b
    monkeypatch.setenv("HEATPERT_SEED", "7")
    _, c, _ = run(capsys, *args)
    assert json.loads(c)["config"]["seed"] == 7
    out = tmp_path / "r.json"
    assert main(args + ["--output", str(out)]) == 0
    assert out.read_text() == c


def test_verify_lambda_checks_stricter_class(capsys):
    base = ["verify", "--potential", '{"variant": "constant", "q0": 0.05}', "--beta", "0.2",
            "--samples", "3"]
    code, out, _ = run(capsys, *base, "--Lambda", "2")
    res = json.loads(out)["result"]
    assert code == 0
    assert res["eta"] == pytest.approx(0.05) and res["Q"]["beta"] == pytest.approx(0.1)
    assert res["implies"]["eta"] == pytest.approx(0.1)
    code, _, _ = run(capsys, *base, "--Lambda", "0.5")
    assert code == 2


def test_series_monte_carlo_csv(capsys):
    code, out, _ = run(capsys, "series", "--potential", '{"variant": "constant", "q0": 1}',
                       "--engine", "monte_carlo", "--mc-paths", "2000", "--format", "csv")
    rows = out.strip().splitlines()
    assert code == 0 and rows[0] == "n,partial_sum"
    assert float(rows[-1].split(",")[1]) == pytest.approx(math.exp(1) / (2 * math.sqrt(math.pi)),
                                                          rel=1e-3)
