import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from civex.baselines import ALL_METHODS, replay_method
from civex.cli import main
from civex.runner import (
    RunConfig,
    load_instances_dir,
    run_benchmark,
    run_weight_sweep,
)
from civex.scm import BenchmarkSpec

TINY = {
    "seeds": [42, 43],
    "moderate_per_family": 3,
    "adversarial_per_family": 2,
    "n_rows": 400,
}


def write_config(tmp_path: Path, out_name: str, **extra) -> Path:
    cfg = dict(TINY)
    cfg["output_dir"] = str(tmp_path / out_name)
    cfg.update(extra)
    path = tmp_path / f"{out_name}.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def read_bytes_map(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


class TestGenerateCommand:
    def test_writes_one_file_per_seed_and_regime(self, tmp_path):
        cfg = write_config(tmp_path, "gen")
        result = CliRunner().invoke(main, ["generate", "--config", str(cfg)])
        assert result.exit_code == 0, result.output
        out = tmp_path / "gen"
        files = sorted(p.name for p in out.glob("instances_*.jsonl"))
        assert files == [
            "instances_s42_adversarial.jsonl",
            "instances_s42_moderate.jsonl",
            "instances_s43_adversarial.jsonl",
            "instances_s43_moderate.jsonl",
        ]
        assert (out / "counterbalance.csv").is_file()

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, "gen2")
        runner = CliRunner()
        assert runner.invoke(main, ["generate", "--config", str(cfg)]).exit_code == 0
        first = read_bytes_map(tmp_path / "gen2")
        assert runner.invoke(main, ["generate", "--config", str(cfg)]).exit_code == 0
        assert read_bytes_map(tmp_path / "gen2") == first

    def test_zero_seeds_is_a_validation_error(self, tmp_path):
        cfg = write_config(tmp_path, "bad", seeds=[])
        result = CliRunner().invoke(main, ["generate", "--config", str(cfg)])
        assert result.exit_code != 0
        assert "invalid configuration" in result.output

    def test_generated_files_round_trip(self, tmp_path):
        cfg = write_config(tmp_path, "gen3")
        assert CliRunner().invoke(main, ["generate", "--config", str(cfg)]).exit_code == 0
        instances = load_instances_dir(tmp_path / "gen3")
        assert len(instances) == 2 * 6 * (3 + 2)


class TestRunCommand:
    def test_run_writes_summaries_and_gates_on_safety(self, tmp_path):
        cfg = write_config(tmp_path, "run")
        result = CliRunner().invoke(main, ["run", "--config", str(cfg)])
        assert result.exit_code == 0, result.output
        out = tmp_path / "run"
        for name in ("summary_moderate.csv", "summary_adversarial.csv",
                     "records.csv", "counterbalance.csv", "manifest.json",
                     "pairwise_wilcoxon.csv"):
            assert (out / name).is_file(), name
        summary = (out / "summary_moderate.csv").read_text(encoding="utf-8")
        assert summary.count("\n") == len(ALL_METHODS) + 1
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["civex_false_executions"] == 0
        assert manifest["n_instances"] == 60

    def test_rerun_and_parallel_outputs_identical(self, tmp_path):
        cfg_a = write_config(tmp_path, "runa")
        cfg_b = write_config(tmp_path, "runb", parallelism=4)
        runner = CliRunner()
        assert runner.invoke(main, ["run", "--config", str(cfg_a)]).exit_code == 0
        assert runner.invoke(main, ["run", "--config", str(cfg_b)]).exit_code == 0
        a = read_bytes_map(tmp_path / "runa")
        b = read_bytes_map(tmp_path / "runb")
        # Manifests record their own configs; everything else must match.
        a.pop("manifest.json"), b.pop("manifest.json")
        assert a == b

    def test_method_override(self, tmp_path):
        cfg = write_config(tmp_path, "runm")
        result = CliRunner().invoke(
            main, ["run", "--config", str(cfg), "--methods", "AlwaysAbstain,OracleSCM"])
        assert result.exit_code == 0
        text = (tmp_path / "runm" / "summary_moderate.csv").read_text(encoding="utf-8")
        assert "AlwaysAbstain" in text and "OracleSCM" in text and "CIVeX" not in text


class TestSweepCommands:
    def test_weights_sweep_emits_twenty_configurations(self, tmp_path):
        cfg = write_config(tmp_path, "sw")
        result = CliRunner().invoke(main, ["sweep", "weights", "--config", str(cfg)])
        assert result.exit_code == 0, result.output
        rows = (tmp_path / "sw" / "sweep_weights.csv").read_text(encoding="utf-8")
        header, *body = rows.strip().split("\n")
        assert "w_miss" in header and "c_exp" in header
        pairs = {tuple(line.split(",")[:2]) for line in body}
        assert len(pairs) == 20

    def test_strength_sweep_runs_on_reduced_grid(self, tmp_path):
        cfg = write_config(tmp_path, "ss")
        result = CliRunner().invoke(
            main, ["sweep", "strength", "--config", str(cfg),
                   "--methods", "CIVeX,PolicyGate,AlwaysAbstain"])
        assert result.exit_code == 0, result.output
        body = (tmp_path / "ss" / "sweep_strength.csv").read_text(encoding="utf-8")
        assert body.count("\n") == 8 * 3 + 1

    def test_misspec_sweep(self, tmp_path):
        cfg = write_config(tmp_path, "sm")
        result = CliRunner().invoke(
            main, ["sweep", "misspec", "--config", str(cfg), "--methods", "CIVeX"])
        assert result.exit_code == 0, result.output
        body = (tmp_path / "sm" / "sweep_misspec.csv").read_text(encoding="utf-8")
        assert body.count("\n") == 4 + 1


class TestReportCommand:
    def test_report_renders_tables(self, tmp_path):
        cfg = write_config(tmp_path, "rep")
        runner = CliRunner()
        assert runner.invoke(main, ["run", "--config", str(cfg)]).exit_code == 0
        assert runner.invoke(main, ["report", str(tmp_path / "rep")]).exit_code == 0
        text = (tmp_path / "rep" / "report.md").read_text(encoding="utf-8")
        assert "## Moderate confounding" in text
        assert "## Adversarial confounding" in text
        assert "| Method |" in text
        assert "Certificate-only ablation" in text


class TestVerifyCertCommand:
    def test_stored_certificates_verify_and_tamper_fails(self, tmp_path):
        cfg = write_config(tmp_path, "vc")
        runner = CliRunner()
        assert runner.invoke(main, ["run", "--config", str(cfg)]).exit_code == 0
        certs = sorted((tmp_path / "vc" / "certificates").rglob("*.cert.json"))
        assert certs
        cert = certs[0]
        data = cert.with_name(cert.name.replace(".cert.json", ".data.txt"))
        ok = runner.invoke(main, ["verify-cert", str(cert), str(data)])
        assert ok.exit_code == 0, ok.output
        blob = bytearray(data.read_bytes())
        blob[40] ^= 1
        tampered = tmp_path / "tampered.txt"
        tampered.write_bytes(bytes(blob))
        bad = runner.invoke(main, ["verify-cert", str(cert), str(tampered)])
        assert bad.exit_code == 1
        assert "provenance" in bad.output


class TestImportReplay:
    def test_import_then_run_with_replay_method(self, tmp_path):
        shard = tmp_path / "shard.csv"
        shard.write_text(
            "seed,regime,family,index,stage1,terminal\n"
            "42,moderate,db_index_operation,0,EXECUTE,EXECUTE\n"
            "43,moderate,db_index_operation,0,ABSTAIN,ABSTAIN\n",
            encoding="utf-8",
        )
        cfg = write_config(tmp_path, "rp",
                           methods=["AlwaysAbstain", replay_method("demo")])
        runner = CliRunner()
        imp = runner.invoke(main, ["import-replay", "demo", str(shard),
                                   "--config", str(cfg)])
        assert imp.exit_code == 0, imp.output
        assert (tmp_path / "rp" / "replay" / "demo" / "shard.csv").is_file()
        run = runner.invoke(main, ["run", "--config", str(cfg)])
        assert run.exit_code == 0, run.output
        summary = (tmp_path / "rp" / "summary_moderate.csv").read_text(encoding="utf-8")
        assert "Replay(demo)" in summary
        manifest = json.loads((tmp_path / "rp" / "manifest.json").read_text())
        assert manifest["replay_coverage"]["demo"] == 2
        # Shard covers one instance per seed; everything else abstains.
        row = next(line for line in summary.splitlines() if "Replay(demo)" in line)
        assert ",2," in row  # seeds_covered column

    def test_import_rejects_all_bad_shards(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("nope\n1\n", encoding="utf-8")
        cfg = write_config(tmp_path, "rp2")
        result = CliRunner().invoke(main, ["import-replay", "x", str(bad),
                                           "--config", str(cfg)])
        assert result.exit_code != 0


class TestRunnerApi:
    def test_run_config_validation(self):
        with pytest.raises(ValueError, match="methods"):
            RunConfig(methods=())
        with pytest.raises(ValueError, match="unknown method"):
            RunConfig(methods=("NotAMethod",))

    def test_env_var_output_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CIVEX_OUTPUT_ROOT", str(tmp_path))
        config = RunConfig(output_dir="nested/run")
        assert config.resolved_output_dir() == tmp_path / "nested" / "run"

    def test_weight_sweep_reuses_cached_decisions(self):
        config = RunConfig(
            bench=BenchmarkSpec(seeds=(42,), moderate_per_family=3,
                                adversarial_per_family=2),
            methods=("CIVeX", "AlwaysAbstain"),
            output_dir="unused",
        )
        result = run_benchmark(config)
        rows = run_weight_sweep(result)
        assert len(rows) == 20 * 2 * 2
        default = [r for r in rows
                   if r.point == {"w_miss": 0.3, "c_exp": 0.05}
                   and r.method == "CIVeX" and r.regime == "moderate"]
        summary = result.summaries[("CIVeX", "moderate")]
        assert default[0].mean_utility == pytest.approx(summary.mean_utility, abs=1e-12)
