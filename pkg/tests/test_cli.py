import json
import math

import pytest

from qrlab.cli import main


def _read(outdir):
    return json.loads((outdir / "results.json").read_text())


def test_lambda_star_closed_form_via_cli(tmp_path, capsys):
    out = tmp_path / "ls"
    code = main([
        "lambda-star",
        "--alpha", "1", "--kernel", "quartic:1,1,1", "--cov", "identity",
        "--lambda", "0.5", "--a-star-override", "0", "--asymptotic-nu",
        "--d", "40", "--out", str(out),
    ])
    assert code == 0
    payload = _read(out)
    assert payload["records"][0]["lambda_star"] == pytest.approx(1.0 + math.sqrt(5.0), abs=1e-9)
    assert "3.23606797" in capsys.readouterr().out


def test_results_json_is_reproducible(tmp_path):
    args = [
        "lambda-star", "--alpha", "1", "--kernel", "quartic:1,1,1",
        "--cov", "identity", "--lambda", "0.5", "--d", "30",
    ]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert (out1 / "results.json").read_bytes() == (out2 / "results.json").read_bytes()
    assert (out1 / "results.meta.json").exists()


def test_config_hash_tracks_fields(tmp_path):
    base = ["lambda-star", "--alpha", "1", "--kernel", "quartic:1,1,1", "--d", "30"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(base + ["--lambda", "0.5", "--out", str(out1)]) == 0
    assert main(base + ["--lambda", "0.6", "--out", str(out2)]) == 0
    assert _read(out1)["config_hash"] != _read(out2)["config_hash"]


def test_approx_norm_experiment(tmp_path):
    out = tmp_path / "gap"
    code = main([
        "approx-norm", "--d", "8,12", "--alpha", "1", "--kernel", "exp",
        "--sampler", "gh_discrete:5", "--seeds", "2", "--compare-naive",
        "--out", str(out),
    ])
    assert code == 0
    payload = _read(out)
    assert len(payload["records"]) == 4
    assert set(payload["summary"]["median_gap_by_d"]) == {"8", "12"}
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == "d,n,seed,gap,gap_naive"
    # 4 per-seed rows plus one median summary row per dimension.
    assert len(lines) == 7
    assert sum("median" in line for line in lines) == 2


def test_esd_experiment_writes_overlay(tmp_path):
    out = tmp_path / "esd"
    code = main([
        "esd", "--d", "20", "--alpha", "1", "--kernel", "quartic:1,1,1",
        "--cov", "identity", "--seeds", "1", "--out", str(out),
    ])
    assert code == 0
    svg = (out / "overlay.svg").read_text()
    assert svg.startswith("<svg")
    assert "polyline" in svg
    law_lines = (out / "law.csv").read_text().splitlines()
    assert law_lines[0].startswith("# atom0_mass=")
    payload = _read(out)
    assert 0.0 <= payload["records"][0]["ks"] <= 1.0


def test_mp_law_experiment(tmp_path):
    out = tmp_path / "law"
    code = main([
        "mp_law", "--d", "10", "--alpha", "0.5", "--cov", "identity", "--out", str(out),
    ])
    assert code == 0
    payload = _read(out)
    assert payload["records"][0]["atom0_mass"] == pytest.approx(0.5, abs=1e-10)
    assert payload["records"][0]["total_mass"] == pytest.approx(1.0, abs=2e-3)


def test_train_error_experiment(tmp_path):
    out = tmp_path / "tr"
    code = main([
        "train-error", "--d", "24", "--alpha", "1", "--kernel", "quartic:1,1,1",
        "--cov", "identity", "--seeds", "2", "--sigma-eps", "0.5", "--lambda", "1",
        "--out", str(out),
    ])
    assert code == 0
    payload = _read(out)
    assert payload["summary"]["predicted"] > 0
    assert len(payload["records"]) == 2


def test_risk_experiment_small(tmp_path):
    out = tmp_path / "risk"
    code = main([
        "risk", "--d", "20", "--alpha", "1", "--kernel", "quartic:1,1,1",
        "--cov", "identity", "--teacher", "deterministic_sigma", "--seeds", "1",
        "--n-test", "200", "--n-repl", "2", "--out", str(out),
    ])
    assert code == 0
    payload = _read(out)
    assert payload["records"][0]["empirical"] > 0


def test_oracle_check_subcommand(tmp_path, capsys):
    out = tmp_path / "oracle"
    code = main(["oracle-check", "--mc-draws", "200000", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "PASS" in text and "FAIL" not in text


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "d": [30],
        "alpha": 1.0,
        "kernel": {"type": "quartic", "b0": 1, "b2": 1, "b4": 1},
        "lambda": 0.25,
        "a_star_override": 0.0,
        "asymptotic_nu": True,
    }))
    out = tmp_path / "o"
    code = main(["lambda-star", "--config", str(cfg), "--lambda", "0.5", "--out", str(out)])
    assert code == 0
    # The flag overrides the file: a_star + lambda = 0.5 gives 1 + sqrt(5).
    assert _read(out)["records"][0]["lambda_star"] == pytest.approx(1.0 + math.sqrt(5.0), abs=1e-9)
    assert _read(out)["config"]["lambda"] == 0.5


def test_exit_codes():
    # Unparseable kernel spec is a configuration error.
    assert main(["esd", "--kernel", "mystery", "--d", "10"]) == 1
    # Broken config file.
    assert main(["esd", "--config", "/nonexistent/cfg.json"]) == 1
    # exp kernel violates the generalization assumptions in a risk run.
    assert main(["risk", "--d", "10", "--kernel", "exp", "--seeds", "1", "--n-test", "10",
                 "--n-repl", "1", "--out", "/tmp/qrlab-exit2"]) == 2


def test_thread_cap_env(tmp_path, monkeypatch):
    monkeypatch.setenv("QRLAB_THREADS", "1")
    out = tmp_path / "seq"
    code = main([
        "approx-norm", "--d", "8", "--alpha", "1", "--kernel", "exp",
        "--seeds", "2", "--out", str(out),
    ])
    assert code == 0
    assert len(_read(out)["records"]) == 2


def test_run_alias_and_other_kernels(tmp_path):
    out = tmp_path / "alias"
    code = main([
        "run", "lambda_star", "--alpha", "1", "--kernel", "cosh",
        "--cov", "identity", "--lambda", "0.5", "--d", "30", "--out", str(out),
    ])
    assert code == 0
    out2 = tmp_path / "poly"
    code = main([
        "run", "lambda_star", "--alpha", "1", "--kernel", "custom_poly:1,0,0.5,0,0.02",
        "--cov", "identity", "--lambda", "0.5", "--d", "30", "--out", str(out2),
    ])
    assert code == 0
    assert _read(out)["records"][0]["lambda_star"] > 0


def test_esd_exports_eigenvalues(tmp_path):
    out = tmp_path / "eigs"
    code = main([
        "esd", "--d", "16", "--alpha", "1", "--kernel", "quartic:1,1,1",
        "--seeds", "1", "--out", str(out),
    ])
    assert code == 0
    lines = (out / "eigs.csv").read_text().splitlines()
    assert lines[0] == "eigenvalue"
    assert len(lines) == 1 + 16 * 16 // 2


def test_exit_code_numerical_failure(monkeypatch, tmp_path):
    import qrlab.cli as cli
    from qrlab.errors import NumericalFailureError

    def boom(cfg):
        raise NumericalFailureError("forced failure")

    monkeypatch.setitem(cli._RUNNERS, "mp_law", boom)
    assert main(["mp-law", "--d", "10", "--out", str(tmp_path / "x")]) == 3
