import csv
import os
import xml.etree.ElementTree as ET

import pytest

from ciotrl.cli import COMPARE_ORDER, main
from ciotrl.config import dumps_config, load_config
from ciotrl.trainer import METRIC_NAMES, read_metrics_csv

from conftest import tiny_cfg


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(dumps_config(tiny_cfg()), encoding="utf-8")
    return str(path)


# --- exit codes -------------------------------------------------------------------

def test_usage_errors_exit_1(tmp_path):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["train", "--out", str(tmp_path / "x")]) == 1  # missing --strategy
    assert main(["train", "--strategy", "nope", "--out", str(tmp_path / "y")]) == 1
    assert main(["sweep", "--sweep", "sigma", "--values", "1",
                 "--out", str(tmp_path / "z")]) == 1


def test_validation_errors_exit_2(tmp_path, capsys):
    out = str(tmp_path / "run")
    assert main(["train", "--strategy", "h_sac", "--out", out,
                 "--set", "mu=2"]) == 2
    assert main(["train", "--strategy", "h_sac", "--out", out,
                 "--set", "nonsense"]) == 2
    assert main(["train", "--strategy", "h_sac", "--out", out,
                 "--episodes", "0"]) == 2
    assert main(["train", "--strategy", "h_sac", "--out", out,
                 "--seeds", "a,b"]) == 2
    assert "validation error" in capsys.readouterr().err
    assert not os.path.exists(out)


def test_runtime_errors_exit_3(tmp_path, capsys):
    assert main(["train", "--strategy", "h_sac",
                 "--config", str(tmp_path / "missing.cfg"),
                 "--out", str(tmp_path / "run")]) == 3
    assert "error" in capsys.readouterr().err


# --- train ------------------------------------------------------------------------

def test_train_writes_seed_dirs(tmp_path, cfg_file, capsys):
    out = str(tmp_path / "runs")
    code = main(["train", "--strategy", "h_sac", "--config", cfg_file,
                 "--seeds", "1,2", "--out", out])
    assert code == 0
    assert capsys.readouterr().out.count("run written:") == 2
    for seed in (1, 2):
        rows = read_metrics_csv(os.path.join(out, f"seed_{seed}", "metrics.csv"))
        assert len(rows) == 3
    a = open(os.path.join(out, "seed_1", "metrics.csv"), "rb").read()
    b = open(os.path.join(out, "seed_2", "metrics.csv"), "rb").read()
    assert a != b


def test_train_episode_override_wins(tmp_path, cfg_file):
    out = str(tmp_path / "runs")
    assert main(["train", "--strategy", "random", "--config", cfg_file,
                 "--episodes", "2", "--seed", "4", "--out", out]) == 0
    rows = read_metrics_csv(os.path.join(out, "seed_4", "metrics.csv"))
    assert len(rows) == 2


def test_train_does_not_overwrite(tmp_path, cfg_file):
    out = str(tmp_path / "runs")
    for _ in range(2):
        assert main(["train", "--strategy", "random", "--config", cfg_file,
                     "--seed", "0", "--out", out]) == 0
    assert os.path.isfile(os.path.join(out, "seed_0", "metrics.csv"))
    assert os.path.isfile(os.path.join(out + "_2", "seed_0", "metrics.csv"))


def test_train_trace_last_flag(tmp_path, cfg_file):
    out = str(tmp_path / "runs")
    assert main(["train", "--strategy", "h_sac", "--config", cfg_file,
                 "--trace-last", "--seed", "1", "--out", out]) == 0
    trace = os.path.join(out, "seed_1", "episode_trace.csv")
    assert len(open(trace).read().splitlines()) == 1 + tiny_cfg().T


# --- compare ----------------------------------------------------------------------

def test_compare_emits_summary_curves_and_plots(tmp_path, cfg_file):
    out = str(tmp_path / "cmp")
    code = main(["compare", "--config", cfg_file, "--seed", "1", "--out", out])
    assert code == 0

    with open(os.path.join(out, "summary.csv"), newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["rank", "strategy"] + list(METRIC_NAMES)
    assert len(rows) == 1 + len(COMPARE_ORDER)
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4", "5"]
    assert {r[1] for r in rows[1:]} == set(COMPARE_ORDER)
    rewards = [float(r[2]) for r in rows[1:]]
    assert rewards == sorted(rewards, reverse=True)

    for strategy in COMPARE_ORDER:
        assert os.path.isfile(os.path.join(out, strategy, "seed_1", "metrics.csv"))
    for name in METRIC_NAMES:
        with open(os.path.join(out, f"curves_{name}.csv"), newline="") as fh:
            curve_rows = list(csv.reader(fh))
        assert curve_rows[0] == ["episode"] + list(COMPARE_ORDER)
        assert len(curve_rows) == 1 + 3  # tiny run has 3 episodes
        svg = os.path.join(out, f"{name}.svg")
        assert os.path.isfile(svg)
        ET.fromstring(open(svg).read())  # well-formed XML


def test_compare_summary_matches_run_files(tmp_path, cfg_file):
    out = str(tmp_path / "cmp")
    assert main(["compare", "--config", cfg_file, "--seed", "2", "--out", out]) == 0
    with open(os.path.join(out, "summary.csv"), newline="") as fh:
        summary = {r[1]: float(r[2]) for r in list(csv.reader(fh))[1:]}
    for strategy in COMPARE_ORDER:
        rows = read_metrics_csv(os.path.join(out, strategy, "seed_2", "metrics.csv"))
        assert summary[strategy] == pytest.approx(rows[-1]["reward_ema"], rel=1e-5)


# --- sweep ------------------------------------------------------------------------

def test_sweep_t_rescales_occupancy(tmp_path, cfg_file):
    out = str(tmp_path / "sweep")
    code = main(["sweep", "--sweep", "T", "--values", "2,8", "--config", cfg_file,
                 "--seed", "1", "--out", out])
    assert code == 0
    cfg_2 = load_config(os.path.join(out, "T_2", "seed_1", "config.txt"))
    cfg_8 = load_config(os.path.join(out, "T_8", "seed_1", "config.txt"))
    assert (cfg_2.T, cfg_2.L) == (2, 1)  # L = round(2 * 2 / 4)
    assert (cfg_8.T, cfg_8.L) == (8, 4)
    with open(os.path.join(out, "sweep_summary.csv"), newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["T"] + list(METRIC_NAMES)
    assert [r[0] for r in rows[1:]] == ["2", "8"]


def test_sweep_validates_before_running(tmp_path, cfg_file):
    out = str(tmp_path / "sweep")
    assert main(["sweep", "--sweep", "tau", "--values", "1.0,abc",
                 "--config", cfg_file, "--out", out]) == 2
    assert main(["sweep", "--sweep", "tau", "--values", "1.0,0",
                 "--config", cfg_file, "--out", out]) == 2
    assert not os.path.exists(out)


def test_sweep_b0_zero_matches_plain_train(tmp_path, cfg_file):
    sweep_out = str(tmp_path / "sweep")
    train_out = str(tmp_path / "train")
    cfg_zero = tmp_path / "zero.cfg"
    cfg_zero.write_text(dumps_config(tiny_cfg(B0=0.0)), encoding="utf-8")
    assert main(["sweep", "--sweep", "B0", "--values", "0", "--config",
                 str(cfg_zero), "--seed", "3", "--out", sweep_out]) == 0
    assert main(["train", "--strategy", "h_sac", "--config", str(cfg_zero),
                 "--seed", "3", "--out", train_out]) == 0
    swept = open(os.path.join(sweep_out, "B0_0", "seed_3", "metrics.csv"), "rb").read()
    plain = open(os.path.join(train_out, "seed_3", "metrics.csv"), "rb").read()
    assert swept == plain


# --- plot -------------------------------------------------------------------------

def test_plot_is_deterministic(tmp_path, cfg_file):
    runs = str(tmp_path / "runs")
    assert main(["train", "--strategy", "random", "--config", cfg_file,
                 "--seeds", "1,2", "--out", runs]) == 0
    outs = []
    for sub in ("p1", "p2"):
        out = str(tmp_path / sub)
        assert main(["plot", "--runs", runs, "--out", out]) == 0
        outs.append(out)
    for name in METRIC_NAMES:
        first = open(os.path.join(outs[0], f"{name}.svg"), "rb").read()
        second = open(os.path.join(outs[1], f"{name}.svg"), "rb").read()
        assert first == second


def test_plot_missing_runs_exit_3(tmp_path):
    assert main(["plot", "--runs", str(tmp_path / "nothing"),
                 "--out", str(tmp_path / "plots")]) == 3
