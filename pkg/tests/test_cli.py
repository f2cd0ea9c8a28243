import json

import pytest

from leaper import cli
from leaper.cli import run

from conftest import PARAMS_FILE, SPACE_FILE, run_pipeline

S, P = str(SPACE_FILE), str(PARAMS_FILE)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    return run_pipeline(tmp_path_factory.mktemp("pipeline"))


def error_lines(err):
    return [line for line in err.splitlines() if line.startswith("leaper: error:")]


class TestErrors:
    def test_doe_n_zero(self, capsys):
        assert run(["doe", "--space", S, "--n", "0"]) == 1
        captured = capsys.readouterr()
        assert error_lines(captured.err) == ["leaper: error: n must be ≥ 1"]
        assert captured.out == ""

    def test_unknown_subcommand(self, capsys):
        assert run(["explode"]) == 1
        err = capsys.readouterr().err
        assert "usage:" in err and len(error_lines(err)) == 1

    def test_unknown_flag(self, capsys):
        assert run(["doe", "--space", S, "--bogus"]) == 1
        assert len(error_lines(capsys.readouterr().err)) == 1

    def test_missing_file(self, capsys, tmp_path):
        assert run(["doe", "--space", str(tmp_path / "nope.json")]) == 1
        assert len(error_lines(capsys.readouterr().err)) == 1

    def test_bad_json(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        assert run(["doe", "--space", str(bad)]) == 1
        assert "not valid JSON" in capsys.readouterr().err

    def test_bad_threads(self, capsys):
        assert run(["--threads", "0", "doe", "--space", S]) == 1
        assert "--threads" in capsys.readouterr().err

    def test_internal_error(self, capsys, monkeypatch):
        def boom(args):
            raise RuntimeError("kaboom")

        monkeypatch.setattr(cli, "cmd_doe", boom)
        assert run(["doe", "--space", S]) == 2
        assert error_lines(capsys.readouterr().err) == ["leaper: error: internal error: RuntimeError: kaboom"]

    def test_transfer_model_as_base(self, capsys, tmp_path, pipeline):
        paths = pipeline
        code = run(["transfer", "--base", str(paths["target.json"]), "--shots", str(paths["shots.csv"]),
                    "--out", str(tmp_path / "x.json")])
        assert code == 1
        assert "expected a base model" in capsys.readouterr().err


class TestPayloads:
    def test_doe_stdout_is_json(self, capsys):
        assert run(["doe", "--space", S, "--n", "4", "--seed", "2"]) == 0
        captured = capsys.readouterr()
        doc = json.loads(captured.out)
        assert len(doc["configurations"]) == 4 and captured.err == ""

    def test_synth_stdout_is_csv(self, capsys, tmp_path):
        plan = tmp_path / "plan.json"
        assert run(["doe", "--space", S, "--n", "3", "--out", str(plan)]) == 0
        assert run(["synth", "--space", S, "--params", P, "--plan", str(plan)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("env_id,") and len(lines) == 4

    def test_version(self, capsys):
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["--version"])
        assert "leaper" in capsys.readouterr().out


class TestPipeline:
    def test_full_pipeline(self, pipeline):
        paths = pipeline
        report = json.loads(paths["report.json"].read_text())
        assert set(report) == {"accuracy_pct", "mre", "n"} and report["n"] == 200
        assert report["accuracy_pct"] > 50
        preds = paths["preds.csv"].read_text().splitlines()
        assert preds[0] == "row,exec_ms" and len(preds) == 201
        rel = json.loads(paths["relatedness.json"].read_text())
        assert 0 <= rel["jsd"] <= 1
        assert (paths["source.csv"].parent / "source.csv.params.json").exists()

    def test_evaluate_interpolated(self, tmp_path, capsys):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({
            "forest": [{"n_estimators": 3, "bootstrap": False, "max_features": None}],
            "boosting": [{"n_estimators": 5, "learning_rate": 1.0, "max_depth": None}],
        }))
        plan, data, model = tmp_path / "plan.json", tmp_path / "d.csv", tmp_path / "m.json"
        assert run(["doe", "--space", S, "--n", "30", "--seed", "3", "--out", str(plan)]) == 0
        assert run(["synth", "--space", S, "--params", P, "--plan", str(plan), "--out", str(data)]) == 0
        assert run(["train-base", "--data", str(data), "--space", S, "--grid", str(grid),
                    "--folds", "2", "--out", str(model)]) == 0
        capsys.readouterr()
        assert run(["evaluate", "--model", str(model), "--data", str(data)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["accuracy_pct"] >= 99.9

    def test_resource_target(self, tmp_path, pipeline):
        paths = pipeline
        out = tmp_path / "bram.json"
        assert run(["train-base", "--data", str(paths["source.csv"]), "--space", S, "--target", "bram",
                    "--grid", "single", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["target_metric"] == "bram_frac"
