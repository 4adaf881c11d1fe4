import io
import json
from unittest.mock import patch

import polars as pl
import pytest
from pydantic import ValidationError
from typer.testing import CliRunner

from app.cli import app
from app.core.config import settings
from app.core.errors import SolverError
from app.models.reports import RunManifest, SelfCheckResult

runner = CliRunner()


def read_table(path):
    """Split a written table into its manifest and its CSV body"""
    header, body = path.read_text(encoding="utf-8").split("\n", 1)
    assert header.startswith("# ")
    return json.loads(header[2:]), pl.read_csv(io.BytesIO(body.encode()), infer_schema_length=0)


@pytest.fixture
def counts_file(tmp_path):
    lines = [
        {"input_id": "img-0", "phase": "selection", "n": 100, "counts": {"0": 95, "1": 5}},
        {"input_id": "img-0", "phase": "estimation", "n": 10000, "counts": {"0": 9500, "1": 400, "2": 100}},
        {"input_id": "img-1", "phase": "selection", "n": 100, "counts": {"1": 55, "2": 45}},
        {"input_id": "img-1", "phase": "estimation", "n": 10000, "counts": {"1": 5000, "2": 5000}},
    ]
    path = tmp_path / "counts.jsonl"
    path.write_text("\n".join(json.dumps(line) for line in lines), encoding="utf-8")
    return path


class TestCertifyCommand:
    """Tests for the certify command"""

    def test_writes_manifest_and_rows(self, counts_file, tmp_path):
        out = tmp_path / "certs.csv"
        result = runner.invoke(app, ["certify", str(counts_file), "--out", str(out)])

        assert result.exit_code == 0, result.output
        manifest, table = read_table(out)
        assert manifest["command"] == "certify"
        assert manifest["method"] == "cpm"
        assert manifest["alpha"] == 0.001
        assert "counts.jsonl" in manifest["inputs"]
        assert table["input_id"].to_list() == ["img-0", "img-1"]
        assert "abstain" not in table.columns

    def test_abstain_marker(self, counts_file, tmp_path):
        out = tmp_path / "certs.csv"
        runner.invoke(app, ["certify", str(counts_file), "--method", "pearson_clopper", "--out", str(out)])

        _, table = read_table(out)
        radius = dict(zip(table["input_id"].to_list(), table["radius"].to_list()))
        assert float(radius["img-0"]) > 0
        assert radius["img-1"] == "abstain"

    def test_unknown_method(self, counts_file):
        result = runner.invoke(app, ["certify", str(counts_file), "--method", "bogus"])
        assert result.exit_code == 1
        assert "configuration error" in result.output

    def test_missing_file(self, tmp_path):
        result = runner.invoke(app, ["certify", str(tmp_path / "absent.jsonl")])
        assert result.exit_code == 2
        assert "data error" in result.output

    def test_invalid_record_becomes_error_row(self, tmp_path):
        lines = [
            {"input_id": "good", "phase": "selection", "n": 100, "counts": {"0": 95, "1": 5}},
            {"input_id": "good", "phase": "estimation", "n": 10000, "counts": {"0": 9500, "1": 400, "2": 100}},
            {"input_id": "short", "phase": "estimation", "n": 10, "counts": {"0": 9}},
        ]
        path = tmp_path / "mixed.jsonl"
        path.write_text("\n".join(json.dumps(line) for line in lines), encoding="utf-8")
        out = tmp_path / "certs.csv"
        result = runner.invoke(app, ["certify", str(path), "--method", "bonferroni", "--out", str(out)])

        assert result.exit_code == 0, result.output
        _, table = read_table(out)
        rows = {row["input_id"]: row for row in table.iter_rows(named=True)}
        assert set(rows) == {"good", "short"}
        assert float(rows["good"]["radius"]) > 0
        assert rows["good"]["error"] is None
        assert rows["short"]["radius"] is None
        assert "line 3" in rows["short"]["error"]
        assert "'short'" in rows["short"]["error"]

    def test_sum_mismatch(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({"input_id": "x", "phase": "estimation", "n": 10, "counts": {"0": 9}}),
                        encoding="utf-8")
        out = tmp_path / "certs.csv"
        result = runner.invoke(app, ["certify", str(path), "--method", "bonferroni", "--out", str(out)])
        assert result.exit_code == 0, result.output
        _, table = read_table(out)
        assert table["input_id"].to_list() == ["x"]
        assert table["error"][0].startswith("line 1, record 'x'")

    def test_manifest_records_round_sizes_and_seed(self, counts_file, tmp_path):
        out = tmp_path / "certs.csv"
        result = runner.invoke(app, ["certify", str(counts_file), "--seed", "3", "--out", str(out)])

        assert result.exit_code == 0, result.output
        manifest, _ = read_table(out)
        assert manifest["n0"] == 100
        assert manifest["n"] == 10000
        assert manifest["seed"] == 3
        assert manifest["sigma"] == settings.SIGMA
        assert None not in manifest.values()

    def test_default_seed_in_manifest(self, counts_file, tmp_path):
        out = tmp_path / "certs.csv"
        runner.invoke(app, ["certify", str(counts_file), "--out", str(out)])
        manifest, _ = read_table(out)
        assert manifest["seed"] == settings.SEED

    def test_repeated_runs_write_identical_tables(self, counts_file, tmp_path):
        first, second = tmp_path / "first.csv", tmp_path / "second.csv"
        for out in (first, second):
            result = runner.invoke(app, ["certify", str(counts_file), "--method", "cpm", "--out", str(out)])
            assert result.exit_code == 0, result.output

        assert first.read_bytes() == second.read_bytes()
        assert first.read_bytes().split(b"\n", 1)[1] == second.read_bytes().split(b"\n", 1)[1]

    def test_requested_round_size_rejects_other_sizes(self, counts_file, tmp_path):
        out = tmp_path / "certs.csv"
        result = runner.invoke(app, ["certify", str(counts_file), "--n", "5000", "--out", str(out)])

        assert result.exit_code == 0, result.output
        manifest, table = read_table(out)
        assert manifest["n"] == 5000
        assert manifest["n0"] == 100
        assert table["input_id"].to_list() == ["img-0", "img-1"]
        assert all("differs from the requested 5000" in error for error in table["error"].to_list())

    def test_matching_round_sizes_certify(self, counts_file, tmp_path):
        out = tmp_path / "certs.csv"
        result = runner.invoke(app, ["certify", str(counts_file), "--n0", "100", "--n", "10000",
                                     "--method", "pearson_clopper", "--out", str(out)])

        assert result.exit_code == 0, result.output
        _, table = read_table(out)
        assert table["error"].null_count() == 2


class TestCurvesCommand:
    """Tests for the curves command"""

    def test_table(self, tmp_path):
        out = tmp_path / "curves.csv"
        result = runner.invoke(app, ["curves", "--points", "20", "--out", str(out)])

        assert result.exit_code == 0, result.output
        manifest, table = read_table(out)
        assert manifest["sigma"] == 0.12
        assert manifest["alpha"] == 0.0
        assert manifest["method"] == "exact"
        assert manifest["n0"] == 0 and manifest["n"] == 0
        assert manifest["seed"] == settings.SEED
        assert table.height == 20
        assert table.columns == ["p1", "p2", "r_mono", "r_mult", "r_mono_lip", "r_mult_lip", "fallback"]

    def test_bad_grid(self):
        result = runner.invoke(app, ["curves", "--points", "1"])
        assert result.exit_code == 1

    def test_solver_failure(self):
        with patch("app.cli.radius_curves", side_effect=SolverError("could not bracket s0")):
            result = runner.invoke(app, ["curves", "--no-fallback"])
        assert result.exit_code == 3
        assert "could not bracket" in result.output


class TestCoverageCommand:
    """Tests for the coverage command"""

    def test_experiment_list(self, tmp_path):
        experiments = tmp_path / "experiments.json"
        experiments.write_text(json.dumps([
            {"true_p": [0.6, 0.3, 0.1], "n": 100, "replications": 500},
            {"true_p": [0.5, 0.5], "n": 100, "procedure": "bonferroni_half", "criterion": "intervals",
             "replications": 500},
        ]), encoding="utf-8")
        out = tmp_path / "coverage.csv"
        result = runner.invoke(app, ["coverage", str(experiments), "--seed", "5", "--out", str(out)])

        assert result.exit_code == 0, result.output
        manifest, table = read_table(out)
        assert manifest["seed"] == 5
        assert table["procedure"].to_list() == ["bonferroni_c", "bonferroni_half"]
        assert table["true_p"][0] == "0.6;0.3;0.1"

    def test_single_experiment_object(self, tmp_path):
        experiment = tmp_path / "one.json"
        experiment.write_text(json.dumps({"true_p": [0.7, 0.3], "n": 50, "replications": 200}), encoding="utf-8")
        out = tmp_path / "coverage.csv"
        result = runner.invoke(app, ["coverage", str(experiment), "--out", str(out)])

        assert result.exit_code == 0, result.output
        assert read_table(out)[1].height == 1

    def test_malformed_json(self, tmp_path):
        experiment = tmp_path / "broken.json"
        experiment.write_text("{\"true_p\": [0.5,", encoding="utf-8")
        result = runner.invoke(app, ["coverage", str(experiment)])
        assert result.exit_code == 2

    def test_invalid_experiment(self, tmp_path):
        experiment = tmp_path / "invalid.json"
        experiment.write_text(json.dumps({"true_p": [0.5, 0.5], "alpha": 2.0}), encoding="utf-8")
        result = runner.invoke(app, ["coverage", str(experiment)])
        assert result.exit_code == 1


class TestPubCommand:
    """Tests for the pub command"""

    def test_layer_chain(self, tmp_path):
        layers = tmp_path / "layers.json"
        layers.write_text(json.dumps([
            {"kind": "dense", "matrix": [[3.0, 0.0], [0.0, 1.0]]},
            {"kind": "activation"},
            {"kind": "dense", "norm": 2.0},
        ]), encoding="utf-8")
        out = tmp_path / "pub.csv"
        result = runner.invoke(app, ["pub", str(layers), "--out", str(out)])

        assert result.exit_code == 0, result.output
        assert "log_pub=" in result.output
        assert "PUB=6" in result.output
        manifest, table = read_table(out)
        assert manifest["method"] == "power_iteration"
        assert None not in manifest.values()
        assert table["kind"].to_list() == ["dense", "activation", "dense"]

    def test_unknown_layer_kind(self, tmp_path):
        layers = tmp_path / "layers.json"
        layers.write_text(json.dumps([{"kind": "attention"}]), encoding="utf-8")
        result = runner.invoke(app, ["pub", str(layers)])
        assert result.exit_code == 1


class TestSelfCheckCommand:
    """Tests for the selfcheck command"""

    def test_all_pass(self):
        passing = [SelfCheckResult(name="quantile", passed=True, detail="fine")]
        with patch("app.cli.run_selfcheck", return_value=passing):
            result = runner.invoke(app, ["selfcheck"])
        assert result.exit_code == 0
        assert "ok" in result.output

    def test_failure_sets_exit_code(self):
        failing = [
            SelfCheckResult(name="quantile", passed=True, detail="fine"),
            SelfCheckResult(name="s0_residuals", passed=False, detail="max residual 1e-3"),
        ]
        with patch("app.cli.run_selfcheck", return_value=failing):
            result = runner.invoke(app, ["selfcheck"])
        assert result.exit_code == 4
        assert "FAIL s0_residuals" in result.output


class TestRunManifest:
    """Tests for the provenance line"""

    FIELDS = {"command": "certify", "version": "1.0", "alpha": 0.001, "sigma": 0.5, "n0": 100, "n": 10000,
              "seed": 0, "method": "cpm"}

    @pytest.mark.parametrize("missing", ["alpha", "sigma", "n0", "n", "seed", "method"])
    def test_missing_field_rejected(self, missing):
        fields = {key: value for key, value in self.FIELDS.items() if key != missing}
        with pytest.raises(ValidationError):
            RunManifest(**fields)

    @pytest.mark.parametrize("field", ["n0", "n", "seed"])
    def test_null_field_rejected(self, field):
        with pytest.raises(ValidationError):
            RunManifest(**{**self.FIELDS, field: None})

    def test_empty_list_rejected(self):
        with pytest.raises(ValidationError):
            RunManifest(**{**self.FIELDS, "sigma": []})

    def test_mixed_values_as_list(self):
        manifest = RunManifest(**{**self.FIELDS, "n": [100, 10000]})
        assert manifest.n == [100, 10000]
