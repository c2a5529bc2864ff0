"""Command-line surface.

    vonav simulate  --scenario F --policy P --seed S [--trials N] [--out DIR]
    vonav serve     --scenario F [--port P | --stdio]
    vonav plot      --log episodes.jsonl [--episode K] [--out FILE]
    vonav histogram --log episodes.jsonl [--out FILE]
    vonav validate  --scenario F

Exit codes: 0 ok, 2 usage/config error, 3 runtime error. `simulate` writes
summary.csv (columns: Environment, Method, Trials, Seed, Episodes,
Success Rate, Average Time (s), Average Length (m), Average Speed (m/s))
plus episodes.jsonl with one record per (trial, goal) leg including the
full trajectory log.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from .engine import BenchmarkSummary, make_policy, run_benchmark
from .errors import ConfigError
from .plotting import render_trajectory_svg
from .protocol import serve_stdio, serve_tcp
from .scenarios import list_bundled_scenarios, load_scenario, validate_scenario

SUMMARY_COLUMNS = (
    "Environment",
    "Method",
    "Trials",
    "Seed",
    "Episodes",
    "Success Rate",
    "Average Time (s)",
    "Average Length (m)",
    "Average Speed (m/s)",
)

LINEAR_BIN = 0.1  # m/s
ANGULAR_BIN_FRACTION = 0.25  # of omega_max
OMEGA_MAX = 2.0


def write_summary_csv(summary: BenchmarkSummary, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerow(
            [
                summary.scenario,
                summary.policy,
                summary.trials,
                summary.seed,
                len(summary.episodes),
                repr(summary.success_rate),
                repr(summary.avg_time),
                repr(summary.avg_length),
                repr(summary.avg_speed),
            ]
        )


def write_episodes_jsonl(summary: BenchmarkSummary, path) -> None:
    with open(path, "w") as f:
        for record in summary.episodes:
            row = record.row()
            row["trajectory"] = record.trajectory
            f.write(json.dumps(row, separators=(",", ":")) + "\n")


def load_episodes_jsonl(path) -> list[dict]:
    try:
        with open(path) as f:
            records = [json.loads(line) for line in f if line.strip()]
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read episode log {path}: {e}") from e
    if not records:
        raise ConfigError(f"episode log {path} is empty")
    return records


def write_velocity_histograms(records: list[dict], path) -> None:
    """Command-velocity histograms: 0.1 m/s linear bins and |omega|/omega_max
    bins of 0.25, matching the benchmark's velocity-distribution analysis."""
    linear = []
    angular = []
    for record in records:
        for step in record.get("trajectory") or []:
            v, w = step["action"]
            linear.append(v)
            angular.append(min(abs(w) / OMEGA_MAX, 1.0))
    if not linear:
        raise ConfigError("episode log has no trajectories to histogram")
    total = len(linear)
    rows = []
    n_lin = max(1, int(math.ceil(max(linear) / LINEAR_BIN - 1e-9)))
    for i in range(n_lin):
        lo, hi = i * LINEAR_BIN, (i + 1) * LINEAR_BIN
        count = sum(1 for v in linear if lo <= v < hi or (i == n_lin - 1 and v == hi))
        rows.append(("linear", f"{lo:.2f}", f"{hi:.2f}", count, count / total))
    n_ang = int(round(1.0 / ANGULAR_BIN_FRACTION))
    for i in range(n_ang):
        lo, hi = i * ANGULAR_BIN_FRACTION, (i + 1) * ANGULAR_BIN_FRACTION
        count = sum(1 for w in angular if lo <= w < hi or (i == n_ang - 1 and w == hi))
        rows.append(("angular_frac", f"{lo:.2f}", f"{hi:.2f}", count, count / total))
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("kind", "bin_low", "bin_high", "count", "fraction"))
        writer.writerows(rows)


def cmd_benchmark(args) -> int:
    scenario = load_scenario(args.scenario)
    policy = make_policy(args.policy, scenario.profile, args.actions)
    summary = run_benchmark(
        scenario, policy, trials=args.trials, seed=args.seed, policy_name=args.policy
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_summary_csv(summary, out / "summary.csv")
    write_episodes_jsonl(summary, out / "episodes.jsonl")
    print(f"scenario:     {summary.scenario}")
    print(f"policy:       {summary.policy}")
    print(f"episodes:     {len(summary.episodes)}")
    print(f"success rate: {summary.success_rate:.3f}")
    print(f"avg time:     {summary.avg_time:.2f} s")
    print(f"avg length:   {summary.avg_length:.2f} m")
    print(f"avg speed:    {summary.avg_speed:.3f} m/s")
    return 0


def cmd_serve(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.stdio:
        serve_stdio(scenario)
    else:
        if args.port is None:
            raise ConfigError("serve needs --port or --stdio")
        serve_tcp(scenario, args.host, args.port)
    return 0


def cmd_plot(args) -> int:
    records = load_episodes_jsonl(args.log)
    if not 0 <= args.episode < len(records):
        raise ConfigError(
            f"episode index {args.episode} out of range (log has {len(records)})"
        )
    out = args.out or Path(args.log).with_suffix(f".ep{args.episode}.svg")
    try:
        render_trajectory_svg(records[args.episode], out)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    print(f"wrote {out}")
    return 0


def cmd_histogram(args) -> int:
    records = load_episodes_jsonl(args.log)
    out = args.out or Path(args.log).with_suffix(".hist.csv")
    write_velocity_histograms(records, out)
    print(f"wrote {out}")
    return 0


def cmd_validate(args) -> int:
    problems = validate_scenario(args.scenario)
    if problems:
        for problem in problems:
            print(f"problem: {problem}", file=sys.stderr)
        return 2
    print("scenario ok")
    return 0


def cmd_list(args) -> int:
    for name in list_bundled_scenarios():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vonav",
        description="Deterministic 2D crowd-navigation simulator and benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a benchmark and write metrics")
    sim.add_argument("--scenario", required=True, help="scenario file or bundled name")
    sim.add_argument(
        "--policy", default="vo-steer", choices=("vo-steer", "straight", "external")
    )
    sim.add_argument("--trials", type=int, default=None)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--out", default="out")
    sim.add_argument("--actions", default=None, help="JSONL action script (external)")
    sim.set_defaults(func=cmd_benchmark)

    srv = sub.add_parser("serve", help="serve the environment protocol")
    srv.add_argument("--scenario", required=True)
    srv.add_argument("--port", type=int, default=None)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--stdio", action="store_true")
    srv.set_defaults(func=cmd_serve)

    plot = sub.add_parser("plot", help="render an episode trajectory to SVG")
    plot.add_argument("--log", required=True)
    plot.add_argument("--episode", type=int, default=0)
    plot.add_argument("--out", default=None)
    plot.set_defaults(func=cmd_plot)

    hist = sub.add_parser("histogram", help="export command-velocity histograms")
    hist.add_argument("--log", required=True)
    hist.add_argument("--out", default=None)
    hist.set_defaults(func=cmd_histogram)

    val = sub.add_parser("validate", help="check a scenario file")
    val.add_argument("--scenario", required=True)
    val.set_defaults(func=cmd_validate)

    lst = sub.add_parser("list", help="list bundled scenarios")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as e:  # runtime failures distinct from config mistakes
        print(f"runtime error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
