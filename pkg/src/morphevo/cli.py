"""Command-line entry point.

Subcommands:
  run         execute the experiment grid from a TOML config
  learn-phase extra learning pass over archived final populations
  calibrate   fraction-of-potential curve over learning budgets
  stats       pairwise Mann-Whitney comparisons of run metrics
  export      tidy CSV bundle (plus terrain grid) for plotting
  validate    check a genotype JSON file against the encoding invariants
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, harness
from .fitness import generate_terrain, make_locomotion_evaluator
from .genotype import from_json, random_genotype, validate, expand_phenotype
from .learner import calibrate_budget, write_calibration_csv


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="override the experiment seed base")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel worker processes (never changes results)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphevo",
        description="Co-optimization of modular robot bodies and sine controllers")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment grid")
    p_run.add_argument("--config", required=True, help="TOML experiment config")
    p_run.add_argument("--desk-scale", action="store_true",
                       help="shrink to the desk preset (pop 20, 10 generations)")
    p_run.add_argument("--output", default=None, help="override output directory")
    _common(p_run)

    p_learn = sub.add_parser("learn-phase",
                             help="extra learning pass over final populations")
    p_learn.add_argument("--archive", required=True,
                         help="results directory holding final-*.jsonl files")
    p_learn.add_argument("--budget", type=int, default=500)
    p_learn.add_argument("--out", default=None,
                         help="summary CSV path (default: <archive>/learning-phase.csv)")
    _common(p_learn)

    p_cal = sub.add_parser("calibrate",
                           help="learning-budget calibration on random robots")
    p_cal.add_argument("--robots", type=int, default=100)
    p_cal.add_argument("--max-budget", type=int, default=500)
    p_cal.add_argument("--out", default="calibration.csv")
    _common(p_cal)

    p_stats = sub.add_parser("stats", help="compare variants across run logs")
    p_stats.add_argument("--inputs", nargs="+", required=True,
                         help="run-log CSV files")
    p_stats.add_argument("--metric", choices=("best_so_far", "diversity"),
                         required=True)
    p_stats.add_argument("--out", default=None, help="write CSV here instead of stdout")
    _common(p_stats)

    p_export = sub.add_parser("export", help="bundle tidy CSVs for plotting")
    p_export.add_argument("--inputs", nargs="+", required=True,
                          help="run-log CSV files")
    p_export.add_argument("--out", required=True, help="output directory")
    _common(p_export)

    p_val = sub.add_parser("validate", help="validate a genotype JSON file")
    p_val.add_argument("--genotype", required=True)
    _common(p_val)

    return parser


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config)
    if args.desk_scale:
        cfg = cfg.desk_scaled()
    if args.seed is not None:
        cfg.seed_base = args.seed
    if args.output is not None:
        cfg.output_dir = args.output
    return harness.run_experiment(cfg, jobs=max(1, args.jobs))


def _cmd_learn_phase(args) -> int:
    seed = args.seed if args.seed is not None else 0
    summaries = harness.learning_phase_over_archive(args.archive, args.budget,
                                                    seed=seed)
    if not summaries:
        print("no final-*.jsonl populations found", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else Path(args.archive) / "learning-phase.csv"
    harness.write_learning_phase_csv(summaries, out)
    for s in summaries:
        print(f"{s['run_id']}: best {s['best_before']:.4f} -> {s['best_after']:.4f}")
    print(f"wrote {out}")
    return 0


def _cmd_calibrate(args) -> int:
    seed = args.seed if args.seed is not None else 0
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xCA11)))
    robots = [expand_phenotype(random_genotype(rng)) for _ in range(args.robots)]
    evaluator = make_locomotion_evaluator(generate_terrain())
    result = calibrate_budget(robots, evaluator, args.max_budget, master_seed=seed)
    write_calibration_csv(result, args.out)
    b30 = min(30, args.max_budget) - 1
    print(f"robots used: {result.n_robots}/{args.robots}")
    print(f"mean fraction of potential at budget {b30 + 1}: "
          f"{result.mean_fraction[b30]:.3f}")
    print(f"wrote {args.out}")
    return 0


def _cmd_stats(args) -> int:
    table = harness.compare_runs(args.inputs, args.metric)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            harness.write_comparison_csv(table, fh)
        print(f"wrote {args.out}")
    else:
        harness.write_comparison_csv(table, sys.stdout)
    return 0


def _cmd_export(args) -> int:
    combined = harness.export_for_plotting(args.inputs, args.out)
    print(f"wrote {combined} and terrain grid")
    return 0


def _cmd_validate(args) -> int:
    try:
        text = Path(args.genotype).read_text()
        genotype = from_json(text)
    except Exception as exc:
        print(f"unreadable genotype: {exc}", file=sys.stderr)
        return 1
    violations = validate(genotype)
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        return 1
    print("ok")
    return 0


COMMANDS = {
    "run": _cmd_run,
    "learn-phase": _cmd_learn_phase,
    "calibrate": _cmd_calibrate,
    "stats": _cmd_stats,
    "export": _cmd_export,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
