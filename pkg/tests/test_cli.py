import json

import numpy as np
import pytest

from behaviors import save_behavior, uniform_behavior
from cli import EXIT_DOMAIN, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, parse_list
from main import app
from schemas import ExtendedBehavior


def _run_dir(root):
    dirs = [p for p in root.iterdir() if p.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


def _manifest(root):
    with open(_run_dir(root) / "manifest.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture
def uniform_file(tmp_path):
    path = tmp_path / "uniform.json"
    save_behavior(uniform_behavior(2), path)
    return path


def test_unknown_subcommand(tmp_path, capsys):
    assert app.run(["frobnicate"], output_dir=str(tmp_path)) == EXIT_USAGE
    assert "unknown subcommand" in capsys.readouterr().err
    assert app.run([], output_dir=str(tmp_path)) == EXIT_USAGE


def test_eval_writes_manifest_and_result(tmp_path, uniform_file, capsys):
    runs = tmp_path / "runs"
    status = app.run(["eval", "--behavior", str(uniform_file), "--inequality", "all"], output_dir=str(runs))
    assert status == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert {r["inequality"] for r in summary["results"]} >= {"I1", "trivial", "Il22"}
    manifest = _manifest(runs)
    assert manifest["exit_status"] == 0
    assert manifest["subcommand"] == "eval"
    assert "numpy" in manifest["versions"]
    assert (_run_dir(runs) / "result.json").exists()


def test_invalid_behavior_exits_with_domain_code(tmp_path):
    obs = np.full((2, 2, 2), 0.3)
    path = tmp_path / "bad.json"
    save_behavior(ExtendedBehavior(obs=obs, do_=np.full((2, 2), 0.5)), path)
    runs = tmp_path / "runs"
    assert app.run(["membership", "--behavior", str(path)], output_dir=str(runs)) == EXIT_DOMAIN
    manifest = _manifest(runs)
    assert manifest["exit_status"] == EXIT_DOMAIN
    assert manifest["error"].startswith("DomainError")


def test_config_file_and_flag_override(tmp_path, uniform_file, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"subcommand": "eval", "behavior": str(uniform_file), "inequality": "I1"}))
    runs = tmp_path / "runs"
    assert app.run(["eval", "--config", str(config), "--inequality", "trivial"], output_dir=str(runs)) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["inequality"] == "trivial"
    assert summary["min_value"] == pytest.approx(0.25)


def test_config_for_another_subcommand(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"subcommand": "facets"}))
    assert app.run(["eval", "--config", str(config)], output_dir=str(tmp_path / "runs")) == EXIT_DOMAIN


def test_out_of_range_visibility(tmp_path):
    runs = tmp_path / "runs"
    assert app.run(["witness-verify", "--v", "1.5"], output_dir=str(runs)) == EXIT_DOMAIN
    assert "error" in _manifest(runs)


def test_missing_behavior_file(tmp_path):
    runs = tmp_path / "runs"
    assert app.run(["eval", "--behavior", str(tmp_path / "nope.json")], output_dir=str(runs)) == EXIT_DOMAIN


def test_witness_verify_defaults(tmp_path, capsys):
    assert app.run(["witness-verify"], output_dir=str(tmp_path)) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["feasible"]
    assert summary["prop3_rhs"] == pytest.approx(0.542, abs=0.005)


def test_exogenize_named_dag(tmp_path, capsys):
    runs = tmp_path / "runs"
    assert app.run(["exogenize", "--dag", "instrumental", "--targets", "A"], output_dir=str(runs)) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["isomorphic_to_bell"]
    assert (_run_dir(runs) / "exogenized.json").exists()


def test_hardy_check_default(tmp_path, capsys):
    assert app.run(["hardy-check"], output_dir=str(tmp_path)) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["source"] == "tsirelson"
    assert summary["chsh_max"] == pytest.approx(2 * np.sqrt(2))


def test_parse_list():
    assert parse_list("0, 0,1 ,0", int) == [0, 0, 1, 0]
    assert parse_list(["a", "b"]) == ["a", "b"]
    assert parse_list("") == []


def test_bad_flag_is_a_usage_error(tmp_path):
    runs = tmp_path / "runs"
    assert app.run(["eval", "--no-such-flag"], output_dir=str(runs)) == EXIT_USAGE
    assert _manifest(runs)["exit_status"] == EXIT_USAGE


def test_unexpected_failure_is_recorded_before_raising(tmp_path, uniform_file, monkeypatch):
    def broken(cfg, run_dir):
        raise np.linalg.LinAlgError("eigenvalues did not converge")

    monkeypatch.setattr(app.commands["eval"], "handler", broken)
    runs = tmp_path / "runs"
    with pytest.raises(np.linalg.LinAlgError):
        app.run(["eval", "--behavior", str(uniform_file)], output_dir=str(runs))
    manifest = _manifest(runs)
    assert manifest["exit_status"] == EXIT_SOLVER
    assert manifest["error"].startswith("LinAlgError")


def test_eval_csv_option_writes_behavior_table(tmp_path, uniform_file, capsys):
    runs = tmp_path / "runs"
    assert app.run(["eval", "--behavior", str(uniform_file), "--csv"], output_dir=str(runs)) == EXIT_OK
    lines = (_run_dir(runs) / "behavior.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x,a,b,p"
    assert lines[1] == "0,0,0,0.25"
    assert "a,b,p_do" in lines
    assert len(lines) == 1 + 8 + 1 + 1 + 4


def test_membership_without_csv_writes_no_table(tmp_path, uniform_file, capsys):
    runs = tmp_path / "runs"
    assert app.run(["membership", "--behavior", str(uniform_file)], output_dir=str(runs)) == EXIT_OK
    assert not (_run_dir(runs) / "behavior.csv").exists()


def test_partial_ace_gap_model_summary(tmp_path, capsys):
    assert app.run(["quantum-violation", "--model", "ace-gap-partial"], output_dir=str(tmp_path)) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert 0.0 < summary["qace"] < summary["C1"]
