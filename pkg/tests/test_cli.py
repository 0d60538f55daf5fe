"""CLI dispatch, subcommands, exit codes, and emitted artifacts."""

import csv
import os

import pytest

from priorbench.cli import _parse_step_range, cli_dispatch
from priorbench.errors import ConfigError

SMALL_CONFIG = """
[run]
objective = flow
seed = 3

[task]
conditions = 3
dim = 3
n_per_condition = 30

[training]
epochs = 2
batch_size = 12

[schedule]
steps = 40

[network]
hidden = 12
time_dim = 8

[eval]
n_generate = 48
diffusion_steps = 5
flow_steps = 4
diversity_pairs = 30
multimodality_reps = 3

[latency]
batch_size = 8
warmup = 1
timed = 2
"""


@pytest.fixture()
def runs_root(tmp_path, monkeypatch):
    root = tmp_path / "runs"
    monkeypatch.setenv("PRIORBENCH_RUNS", str(root))
    return root


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL_CONFIG)
    return str(path)


@pytest.fixture()
def trained_run(runs_root, config_path, capsys):
    rc = cli_dispatch(["train", "--config", config_path, "--run-id", "smoke"])
    assert rc == 0
    train_output = capsys.readouterr().out
    run_dir = runs_root / "smoke"
    return run_dir, config_path, train_output


def test_no_arguments_prints_usage(capsys):
    assert cli_dispatch([]) == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_subcommand_is_usage_error(capsys):
    assert cli_dispatch(["frobnicate"]) == 2


def test_missing_required_flag_is_usage_error():
    assert cli_dispatch(["eval"]) == 2


def test_parse_step_range():
    assert _parse_step_range("2..5") == [2, 3, 4, 5]
    assert _parse_step_range("7") == [7]
    for bad in ("a..b", "5..2", "0..3", "x"):
        with pytest.raises(ConfigError):
            _parse_step_range(bad)


def test_train_writes_artifacts(trained_run):
    run_dir, _, out = trained_run
    assert "epochs completed: 2" in out
    assert "peak epoch" in out
    assert (run_dir / "manifest.ini").exists()
    assert (run_dir / "epoch_log.csv").exists()
    assert (run_dir / "epoch-1.ckpt").exists()
    assert (run_dir / "epoch-2.ckpt").exists()
    lines = (run_dir / "epoch_log.csv").read_text().splitlines()
    assert len(lines) == 3


def test_eval_prints_metrics(trained_run, capsys):
    run_dir, config_path, _ = trained_run
    rc = cli_dispatch(["eval", "--checkpoint", str(run_dir / "epoch-2.ckpt"),
                       "--config", config_path])
    assert rc == 0
    out = capsys.readouterr().out
    for name in ("fid:", "r1:", "r2:", "r3:", "mm_dist:", "diversity:",
                 "mmodality:"):
        assert name in out


def test_eval_missing_checkpoint_is_io_error(config_path, capsys):
    rc = cli_dispatch(["eval", "--checkpoint", "/nonexistent/x.ckpt",
                       "--config", config_path])
    assert rc == 1
    assert "checkpoint not found" in capsys.readouterr().err


def test_bench_reports_latency(trained_run, capsys):
    run_dir, config_path, _ = trained_run
    rc = cli_dispatch(["bench", "--checkpoint", str(run_dir / "epoch-1.ckpt"),
                       "--config", config_path, "--steps", "3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "mean latency per batch" in out
    assert "steps: 3" in out


def test_pareto_writes_requested_rows(trained_run, tmp_path):
    run_dir, config_path, _ = trained_run
    out_dir = tmp_path / "sweep"
    rc = cli_dispatch(["pareto", "--checkpoint", str(run_dir / "epoch-2.ckpt"),
                       "--config", config_path, "--steps", "2..4",
                       "--out", str(out_dir)])
    assert rc == 0
    csv_path = out_dir / "pareto.csv"
    assert csv_path.exists()
    assert (out_dir / "pareto.svg").exists()
    rows = list(csv.DictReader(csv_path.open()))
    assert [int(r["steps"]) for r in rows] == [2, 3, 4]
    assert {r["objective"] for r in rows} == {"flow"}


def test_report_renders_curves_and_scatter(trained_run, tmp_path):
    run_dir, config_path, _ = trained_run
    rc = cli_dispatch(["pareto", "--checkpoint", str(run_dir / "epoch-2.ckpt"),
                       "--config", config_path, "--steps", "2..3",
                       "--out", str(run_dir)])
    assert rc == 0
    rc = cli_dispatch(["report", "--run-dir", str(run_dir)])
    assert rc == 0
    for name in ("curve_fid.svg", "curve_loss.svg", "pareto_scatter.svg"):
        assert (run_dir / name).exists(), name


def test_report_empty_dir_is_config_error(tmp_path, capsys):
    rc = cli_dispatch(["report", "--run-dir", str(tmp_path)])
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_invalid_config_value_names_field(runs_root, tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[task]\nconditions = 1\n")
    rc = cli_dispatch(["train", "--config", str(bad)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "config error" in err and "task.conditions" in err


def test_train_default_run_id(runs_root, config_path, capsys):
    rc = cli_dispatch(["train", "--config", config_path,
                       "--objective", "diffusion", "--seed", "5",
                       "--epochs", "1"])
    assert rc == 0
    assert (runs_root / "diffusion-s5" / "epoch-1.ckpt").exists()
