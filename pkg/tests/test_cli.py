"""CLI contract tests: exit codes, determinism, artifacts, protocols."""

import subprocess
import sys

import numpy as np
import pytest

from lfmgp import data
from lfmgp.cli import main, parse_config_text
from lfmgp.errors import ConfigError


def run_cli(*argv):
    return main(list(argv))


def run_subprocess(*argv):
    return subprocess.run(
        [sys.executable, "-m", "lfmgp.cli", *argv],
        capture_output=True, text=True,
    )


@pytest.fixture(scope="module")
def synthetic_file(tmp_path_factory):
    base = tmp_path_factory.mktemp("syn")
    cfg = base / "syn.cfg"
    cfg.write_text(
        "kernel.family = ode1\nkernel.forces = 1\nsynthetic.outputs = 2\n"
        "synthetic.points = 30\nsynthetic.t_max = 8.0\nsynthetic.snr_db = 25\n"
    )
    out = base / "out"
    assert run_cli("make-synthetic", "--config", str(cfg), "--out", str(out),
                   "--seed", "3") == 0
    return out / "synthetic.txt"


def fit_config(tmp_path, data_path, extra=""):
    cfg = tmp_path / "fit.cfg"
    cfg.write_text(
        f"kernel.family = ode1\nkernel.forces = 1\ndata.path = {data_path}\n"
        "data.inputs = t\ndata.outputs = out0,out1\n"
        "fit.restarts = 2\nfit.max_iters = 60\n" + extra
    )
    return cfg


class TestConfigParsing:
    def test_key_value_with_comments(self):
        cfg = parse_config_text("a.b = 1 # trailing\n# full comment\nc = x y\n")
        assert cfg == {"a.b": "1", "c": "x y"}

    def test_malformed_line(self):
        with pytest.raises(ConfigError):
            parse_config_text("just some words\n")


class TestFitCommand:
    def test_writes_model_log_and_resolved_config(self, synthetic_file, tmp_path):
        out = tmp_path / "fit"
        cfg = fit_config(tmp_path, synthetic_file)
        assert run_cli("fit", "--config", str(cfg), "--out", str(out),
                       "--seed", "0") == 0
        assert (out / "model.txt").exists()
        assert (out / "resolved.cfg").exists()
        log = (out / "fit_log.txt").read_text()
        assert "final_lml" in log and "trace[0]" in log and "seed = 0" in log

    def test_invalid_family_is_usage_error(self, synthetic_file, tmp_path):
        cfg = fit_config(tmp_path, synthetic_file,
                         extra="kernel.family = nonsense\n")
        assert run_cli("fit", "--config", str(cfg),
                       "--out", str(tmp_path / "x")) == 2

    def test_unreadable_data_is_runtime_error(self, tmp_path):
        cfg = fit_config(tmp_path, "/nonexistent/file.txt")
        assert run_cli("fit", "--config", str(cfg),
                       "--out", str(tmp_path / "x")) == 1

    def test_size_guard(self, tmp_path):
        big = tmp_path / "big.txt"
        rows = ["t a"] + [f"{i * 0.01} {i % 7}" for i in range(2100)]
        big.write_text("\n".join(rows) + "\n")
        cfg = tmp_path / "b.cfg"
        cfg.write_text(
            f"kernel.family = se\ndata.path = {big}\ndata.inputs = t\n"
            "data.outputs = a\n"
        )
        assert run_cli("fit", "--config", str(cfg),
                       "--out", str(tmp_path / "x")) == 2


class TestValidateCommand:
    def test_holdout_metrics_round_trip(self, synthetic_file, tmp_path):
        out = tmp_path / "val"
        cfg = fit_config(
            tmp_path, synthetic_file,
            extra="validate.protocol = holdout\nvalidate.repeats = 2\n"
                  "validate.holdout_fraction = 0.25\nfit.restarts = 1\n",
        )
        assert run_cli("validate", "--config", str(cfg), "--out", str(out),
                       "--seed", "1") == 0
        metrics = data.load_columnar(
            out / "metrics.txt",
            data.ColumnSchema(("output_index",),
                              ("rmse_mean", "rmse_std", "r2_mean", "r2_std")),
        )
        assert metrics.outputs[0].n == 2  # both outputs reported
        assert np.all(metrics.outputs[0].y >= 0.0)  # rmse nonnegative
        r2 = metrics.outputs[2].y
        assert np.all(r2 <= 100.0)

    def test_deterministic_given_seed(self, synthetic_file, tmp_path):
        cfg = fit_config(
            tmp_path, synthetic_file,
            extra="validate.protocol = holdout\nvalidate.repeats = 1\n"
                  "fit.restarts = 1\n",
        )
        outs = []
        for name in ("v1", "v2"):
            out = tmp_path / name
            assert run_cli("validate", "--config", str(cfg), "--out", str(out),
                           "--seed", "7") == 0
            outs.append((out / "metrics.txt").read_text())
        assert outs[0] == outs[1]

    def test_zero_validation_size_rejected(self, synthetic_file, tmp_path):
        cfg = fit_config(
            tmp_path, synthetic_file,
            extra="validate.protocol = cokriging\nvalidate.train = 10\n"
                  "validate.test = 0\nvalidate.primary = out0\n",
        )
        assert run_cli("validate", "--config", str(cfg),
                       "--out", str(tmp_path / "x")) == 2


class TestPosteriorCommand:
    def test_latent_forces_written_with_nonnegative_variance(
        self, synthetic_file, tmp_path
    ):
        fit_out = tmp_path / "fit"
        cfg = fit_config(tmp_path, synthetic_file)
        assert run_cli("fit", "--config", str(cfg), "--out", str(fit_out),
                       "--seed", "0") == 0
        post_cfg = tmp_path / "post.cfg"
        post_cfg.write_text(
            f"kernel.family = ode1\ndata.path = {synthetic_file}\n"
            "data.inputs = t\ndata.outputs = out0,out1\n"
            f"posterior.model = {fit_out / 'model.txt'}\nposterior.grid = 40\n"
        )
        out = tmp_path / "post"
        assert run_cli("posterior", "--config", str(post_cfg),
                       "--out", str(out)) == 0
        table = data.load_columnar(
            out / "latent_forces.txt",
            data.ColumnSchema(("x0",), ("force0.mean", "force0.var")),
        )
        assert table.outputs[0].n == 40
        assert np.all(table.outputs[1].y >= 0.0)

    def test_baseline_family_unsupported(self, synthetic_file, tmp_path):
        fit_out = tmp_path / "fitmt"
        cfg = fit_config(tmp_path, synthetic_file,
                         extra="kernel.family = mtgp\n")
        assert run_cli("fit", "--config", str(cfg), "--out", str(fit_out),
                       "--seed", "0") == 0
        post_cfg = tmp_path / "postmt.cfg"
        post_cfg.write_text(
            f"kernel.family = mtgp\ndata.path = {synthetic_file}\n"
            "data.inputs = t\ndata.outputs = out0,out1\n"
            f"posterior.model = {fit_out / 'model.txt'}\n"
        )
        assert run_cli("posterior", "--config", str(post_cfg),
                       "--out", str(tmp_path / "px")) == 1


class TestOracleCheckCommand:
    def test_pass_and_golden_regeneration(self, tmp_path):
        golden = tmp_path / "golden.txt"
        r = run_subprocess("oracle-check", "--family", "ode1", "--points", "4",
                           "--seed", "2", "--regenerate-golden", str(golden))
        assert r.returncode == 0, r.stderr
        lines = golden.read_text().strip().splitlines()
        assert len(lines) == 4
        assert all(line.startswith("ode1 point=") for line in lines)

    def test_corrupted_parameters_fail_with_point_identified(self):
        r = run_subprocess("oracle-check", "--family", "ode1", "--points", "3",
                           "--seed", "2", "--corrupt")
        assert r.returncode == 1
        assert "FAIL" in r.stdout
        assert "exceeded tolerance" in r.stderr

    def test_unknown_family_usage_error(self):
        r = run_subprocess("oracle-check", "--family", "bogus")
        assert r.returncode == 2


class TestSnrReportCommand:
    def test_report_written(self, tmp_path):
        rng = np.random.default_rng(0)
        t = np.linspace(0, 6, 60)
        path = tmp_path / "d.txt"
        data.write_columnar(
            path, ["t", "sig", "static"],
            [t, np.sin(2 * t) + 0.001 * rng.standard_normal(60),
             rng.standard_normal(60)],
        )
        cfg = tmp_path / "snr.cfg"
        cfg.write_text(
            f"data.path = {path}\ndata.inputs = t\ndata.outputs = sig,static\n"
        )
        out = tmp_path / "snr"
        assert run_cli("snr-report", "--config", str(cfg), "--out", str(out),
                       "--seed", "0") == 0
        report = (out / "snr_report.txt").read_text()
        assert "sig" in report and "dropped" in report
