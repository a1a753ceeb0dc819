"""Command-line front end: train, compare, sweep, plot.

    ciotrl train   --strategy h_sac --seeds 1,2,3 --out runs/h_sac
    ciotrl compare --seeds 1,2,3 --out runs/compare
    ciotrl sweep   --sweep T --values 10,20,30 --seeds 1,2 --out runs/sweep_T
    ciotrl plot    --runs runs/h_sac/seed_1,runs/h_sac/seed_2 --out plots

Shared flags: --config FILE (flat key=value text), --set KEY=VALUE
(repeatable override), --episodes N (override), --jobs N (process
parallelism across runs).  Output directories are never overwritten: an
existing non-empty target gets a numbered sibling.

Exit codes: 0 success, 1 usage error, 2 config/validation error,
3 runtime failure.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import (ConfigError, SimConfig, load_config, loads_config,
                     dumps_config, parse_overrides, validate, with_updates)
from .plots import render_line_chart
from .trainer import (METRIC_NAMES, STRATEGIES, claim_dir,
                      read_metrics_csv, train)

USAGE_EXIT, VALIDATION_EXIT, RUNTIME_EXIT = 1, 2, 3

COMPARE_ORDER = ("h_sac", "h_td3", "h_ddpg", "two_layer_h_sac", "random")
SWEEP_AXES = ("T", "tau", "B0")


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def _parse_seeds(ns) -> list[int]:
    if ns.seeds is not None:
        try:
            seeds = [int(s) for s in ns.seeds.split(",") if s.strip() != ""]
        except ValueError:
            raise ConfigError(f"--seeds: not an integer list: {ns.seeds!r}")
        if not seeds:
            raise ConfigError("--seeds: empty list")
        return seeds
    return [ns.seed]


def _base_config(ns) -> SimConfig:
    cfg = load_config(ns.config) if ns.config else SimConfig()
    overrides = parse_overrides(ns.set or [])
    if ns.episodes is not None:
        if ns.episodes < 1:
            raise ConfigError(f"episodes: must be >= 1, got {ns.episodes}")
        overrides["episodes"] = ns.episodes
    if overrides:
        cfg = with_updates(cfg, **overrides)
    else:
        validate(cfg)
    return cfg


def _train_job(payload):
    strategy, cfg_text, seed, out_dir, trace_last = payload
    cfg = loads_config(cfg_text)
    result = train(strategy, cfg, seed, out_dir=out_dir, trace_last=trace_last)
    return result.out_dir


def _run_all(jobs_payloads: list[tuple], jobs: int) -> list[str]:
    """Run train jobs inline or across processes; returns run dirs in order."""
    if jobs <= 1 or len(jobs_payloads) <= 1:
        return [_train_job(p) for p in jobs_payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_train_job, jobs_payloads))


def _final_ema_means(run_dirs: list[str]) -> dict[str, float]:
    """Seed-mean of the final-episode EMA for each metric."""
    totals = {name: 0.0 for name in METRIC_NAMES}
    for run_dir in run_dirs:
        last = read_metrics_csv(os.path.join(run_dir, "metrics.csv"))[-1]
        for name in METRIC_NAMES:
            totals[name] += last[f"{name}_ema"]
    return {name: totals[name] / len(run_dirs) for name in METRIC_NAMES}


def _mean_curves(run_dirs: list[str]) -> tuple[list[float], dict[str, list[float]]]:
    """Seed-mean EMA curve per metric; x axis is the episode column."""
    all_rows = [read_metrics_csv(os.path.join(d, "metrics.csv")) for d in run_dirs]
    episodes = [row["episode"] for row in all_rows[0]]
    curves = {}
    for name in METRIC_NAMES:
        key = f"{name}_ema"
        curves[name] = [sum(rows[i][key] for rows in all_rows) / len(all_rows)
                        for i in range(len(episodes))]
    return episodes, curves


def emit_plots(labeled_runs: list[tuple[str, list[float], dict[str, list[float]]]],
               out_dir: str) -> list[str]:
    """One SVG per metric from (label, episodes, metric->curve) triples."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in METRIC_NAMES:
        series = [(label, episodes, curves[name])
                  for label, episodes, curves in labeled_runs]
        svg = render_line_chart(title=f"{name} (EMA) vs episode",
                                xlabel="episode", ylabel=name, series=series)
        path = os.path.join(out_dir, f"{name}.svg")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
        written.append(path)
    return written


def cmd_train(ns) -> int:
    cfg = _base_config(ns)
    seeds = _parse_seeds(ns)
    root = claim_dir(ns.out)
    payloads = [(ns.strategy, dumps_config(cfg), seed,
                 os.path.join(root, f"seed_{seed}"), ns.trace_last)
                for seed in seeds]
    run_dirs = _run_all(payloads, ns.jobs)
    for run_dir in run_dirs:
        print(f"run written: {run_dir}")
    return 0


def cmd_compare(ns) -> int:
    cfg = _base_config(ns)
    seeds = _parse_seeds(ns)
    root = claim_dir(ns.out)
    payloads = []
    for strategy in COMPARE_ORDER:
        for seed in seeds:
            payloads.append((strategy, dumps_config(cfg), seed,
                             os.path.join(root, strategy, f"seed_{seed}"), False))
    _run_all(payloads, ns.jobs)

    by_strategy = {s: [os.path.join(root, s, f"seed_{n}") for n in seeds]
                   for s in COMPARE_ORDER}
    summary = {s: _final_ema_means(dirs) for s, dirs in by_strategy.items()}
    ranked = sorted(COMPARE_ORDER, key=lambda s: -summary[s]["reward"])

    with open(os.path.join(root, "summary.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "strategy"] + list(METRIC_NAMES))
        for rank, strategy in enumerate(ranked, start=1):
            writer.writerow([rank, strategy]
                            + [f"{summary[strategy][m]:.6g}" for m in METRIC_NAMES])

    labeled = []
    for strategy in COMPARE_ORDER:
        episodes, curves = _mean_curves(by_strategy[strategy])
        labeled.append((strategy, episodes, curves))
    for name in METRIC_NAMES:
        with open(os.path.join(root, f"curves_{name}.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["episode"] + list(COMPARE_ORDER))
            episodes = labeled[0][1]
            for i, episode in enumerate(episodes):
                writer.writerow([episode] + [f"{c[2][name][i]:.12g}" for c in labeled])
    emit_plots(labeled, root)
    print(f"comparison written: {root}")
    for rank, strategy in enumerate(ranked, start=1):
        print(f"  {rank}. {strategy}: reward_ema={summary[strategy]['reward']:.2f}")
    return 0


def _sweep_value(cfg: SimConfig, axis: str, raw: str) -> tuple[str, SimConfig]:
    """Derived config for one swept value; validates before any run."""
    raw = raw.strip()
    try:
        if axis == "T":
            value = int(raw)
            scaled_l = round(cfg.L * value / cfg.T)
            derived = with_updates(cfg, T=value, L=min(max(scaled_l, 0), value))
        elif axis == "tau":
            derived = with_updates(cfg, tau=float(raw))
        else:
            derived = with_updates(cfg, B0=float(raw))
    except ValueError as exc:
        raise ConfigError(f"--values: bad {axis} value {raw!r}: {exc}") from None
    return raw, derived


def cmd_sweep(ns) -> int:
    cfg = _base_config(ns)
    seeds = _parse_seeds(ns)
    values = [v for v in ns.values.split(",") if v.strip() != ""]
    if not values:
        raise ConfigError("--values: empty list")
    derived = [_sweep_value(cfg, ns.sweep, raw) for raw in values]

    root = claim_dir(ns.out)
    payloads = []
    for raw, dcfg in derived:
        for seed in seeds:
            payloads.append((ns.strategy, dumps_config(dcfg), seed,
                             os.path.join(root, f"{ns.sweep}_{raw}", f"seed_{seed}"),
                             False))
    _run_all(payloads, ns.jobs)

    with open(os.path.join(root, "sweep_summary.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([ns.sweep] + list(METRIC_NAMES))
        for raw, _ in derived:
            dirs = [os.path.join(root, f"{ns.sweep}_{raw}", f"seed_{n}")
                    for n in seeds]
            means = _final_ema_means(dirs)
            writer.writerow([raw] + [f"{means[m]:.6g}" for m in METRIC_NAMES])
    print(f"sweep written: {root}")
    return 0


def _expand_run_dirs(spec: str) -> list[str]:
    """Each comma item is a run dir or a root holding run dirs two deep."""
    found = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if os.path.isfile(os.path.join(item, "metrics.csv")):
            found.append(item)
            continue
        hits = []
        for dirpath, dirnames, filenames in os.walk(item):
            dirnames.sort()
            if "metrics.csv" in filenames:
                hits.append(dirpath)
        if not hits:
            raise FileNotFoundError(f"no metrics.csv under {item!r}")
        found.extend(sorted(hits))
    return found


def _run_label(run_dir: str) -> str:
    info_path = os.path.join(run_dir, "run_info.json")
    if os.path.isfile(info_path):
        with open(info_path, "r", encoding="utf-8") as fh:
            info = json.load(fh)
        return f"{info['strategy']} seed={info['seed']}"
    return os.path.basename(os.path.normpath(run_dir))


def cmd_plot(ns) -> int:
    run_dirs = _expand_run_dirs(ns.runs)
    labeled = []
    for run_dir in run_dirs:
        rows = read_metrics_csv(os.path.join(run_dir, "metrics.csv"))
        episodes = [row["episode"] for row in rows]
        curves = {name: [row[f"{name}_ema"] for row in rows]
                  for name in METRIC_NAMES}
        labeled.append((_run_label(run_dir), episodes, curves))
    written = emit_plots(labeled, ns.out)
    for path in written:
        print(f"plot written: {path}")
    return 0


def _add_shared(sub) -> None:
    sub.add_argument("--config", default=None, help="flat key=value config file")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override one config key (repeatable)")
    sub.add_argument("--episodes", type=int, default=None,
                     help="override the episode count")
    sub.add_argument("--seed", type=int, default=0, help="single seed")
    sub.add_argument("--seeds", default=None,
                     help="comma-separated seed list (overrides --seed)")
    sub.add_argument("--jobs", type=int, default=1,
                     help="parallel worker processes across runs")
    sub.add_argument("--out", required=True, help="output directory")


def build_parser() -> _Parser:
    parser = _Parser(prog="ciotrl",
                     description="Hybrid CIoT link simulator and RL trainer")
    commands = parser.add_subparsers(dest="command", required=True)

    p_train = commands.add_parser("train", help="train one strategy")
    p_train.add_argument("--strategy", required=True, choices=sorted(STRATEGIES))
    p_train.add_argument("--trace-last", action="store_true", dest="trace_last",
                         help="write the final episode's per-slot trace")
    _add_shared(p_train)
    p_train.set_defaults(func=cmd_train)

    p_compare = commands.add_parser("compare", help="train every strategy")
    _add_shared(p_compare)
    p_compare.set_defaults(func=cmd_compare)

    p_sweep = commands.add_parser("sweep", help="sweep one config axis")
    p_sweep.add_argument("--sweep", required=True, choices=SWEEP_AXES,
                         help="axis to sweep")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values for the swept axis")
    p_sweep.add_argument("--strategy", default="h_sac", choices=sorted(STRATEGIES))
    _add_shared(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_plot = commands.add_parser("plot", help="render SVG curves from runs")
    p_plot.add_argument("--runs", required=True,
                        help="comma-separated run dirs (or roots of run dirs)")
    p_plot.add_argument("--out", required=True, help="output directory")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    except Exception as exc:  # runtime failures map to one exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
