"""Command-line front end.

Subcommands:
  run            execute a scenario matrix and write CSV results
  recommend      fold result CSVs into the switch/don't-switch table
  list-scenarios print the grid a config expands to

Exit codes: 0 success, 1 configuration error, 2 trial failure.
The default output directory can be set via $L4SIM_OUT.
"""

import argparse
import os
import pathlib
import sys

from . import matrix as matrix_mod
from . import recommend as rec_mod
from . import results as results_mod
from .backend import backend_name
from .scenarios import ScenarioError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TRIAL = 2


def _default_out():
    return os.environ.get("L4SIM_OUT", "results")


def _load_matrix(args):
    if args.full_grid:
        cfg = matrix_mod.full_grid(trials=args.trials or 10)
        if args.timeseries:
            cfg.timeseries = True
        return cfg
    if not args.config:
        raise ScenarioError("either --config or --full-grid is required")
    cfg = matrix_mod.load_config(args.config)
    if args.trials:
        cfg.trials = args.trials
    if args.timeseries:
        cfg.timeseries = True
    return cfg


def cmd_run(args):
    try:
        cfg = _load_matrix(args)
    except (ScenarioError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        csv_path = matrix_mod.run_matrix(
            cfg, args.out, jobs=args.jobs, seed_base=args.seed_base
        )
    except Exception as exc:  # trial failure (divergence, worker crash)
        print(f"trial failure: {exc}", file=sys.stderr)
        return EXIT_TRIAL
    print(f"wrote {csv_path} (backend: {backend_name()})")
    return EXIT_OK


def cmd_recommend(args):
    in_dir = pathlib.Path(args.in_dir)
    csv_files = sorted(in_dir.glob("*.csv")) if in_dir.is_dir() else [in_dir]
    csv_files = [p for p in csv_files if not p.name.startswith("ts_")]
    if not csv_files:
        print(f"config error: no result CSVs under {in_dir}", file=sys.stderr)
        return EXIT_CONFIG
    rows = []
    try:
        for path in csv_files:
            rows.extend(results_mod.read_csv(path))
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    verdicts = rec_mod.recommend(rows, fair_lo=args.fair_lo)
    print(rec_mod.render_table(verdicts, fair_lo=args.fair_lo))
    return EXIT_OK


def cmd_list_scenarios(args):
    try:
        cfg = _load_matrix(args)
    except (ScenarioError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cells = cfg.expand()
    for scenario in cells:
        print(scenario.scenario_id())
    for run in cfg.single_runs:
        print(f"{run.run_id} (single flow)")
    print(f"# {len(cells)} grid cells, {len(cfg.single_runs)} single runs")
    return EXIT_OK


def _add_matrix_args(p):
    p.add_argument("--config", help="YAML matrix config")
    p.add_argument(
        "--full-grid",
        action="store_true",
        help="run the full built-in experiment grid",
    )
    p.add_argument("--trials", type=int, default=0, help="override trial count")
    p.add_argument(
        "--timeseries", action="store_true", help="emit 100 ms timeseries files"
    )


def main(argv=None):
    parser = argparse.ArgumentParser(prog="l4sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario matrix")
    _add_matrix_args(p_run)
    p_run.add_argument("--out", default=_default_out(), help="output directory")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_run.add_argument("--seed-base", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_rec = sub.add_parser("recommend", help="emit the recommendation table")
    p_rec.add_argument("--in", dest="in_dir", default=_default_out())
    p_rec.add_argument("--fair-lo", type=float, default=0.35)
    p_rec.set_defaults(func=cmd_recommend)

    p_list = sub.add_parser("list-scenarios", help="print the expanded grid")
    _add_matrix_args(p_list)
    p_list.set_defaults(func=cmd_list_scenarios)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
