"""Run a miniature copy of the full experiment grid end to end.

The harness crosses {elitist, generational} x {no learning, learning} and
repeats each cell with its own derived seed. Every (variant, repetition)
pair writes a run-log CSV plus JSON-lines archives, a manifest makes
reruns resume instead of recompute, and the worker count never changes a
single output byte. This demo shrinks everything so it finishes in well
under a minute; the shipped configs/desk.toml and configs/full.toml hold
the real presets (see also the `morphevo` command line).
"""

import shutil
import sys
from pathlib import Path

from morphevo import harness

out = Path("demo-results")
if out.exists():
    shutil.rmtree(out)

cfg = harness.ExperimentConfig(
    seed_base=0, repetitions=3, output_dir=str(out),
    population_size=8, offspring_count=8, tournament_size=3,
    generations=4, learning_budget=3)

print(f"grid: {[v.label for v in harness.variants_of(cfg)]} x {cfg.repetitions} reps")
status = harness.run_experiment(cfg, jobs=1, log=lambda m: print(f"  {m}"))
print(f"exit status {status}; files in {out}/:")
for p in sorted(out.iterdir())[:6]:
    print(f"  {p.name}")
print(f"  ... {sum(1 for _ in out.iterdir())} files total")

print("\nresuming is free: a second invocation finds the manifest")
harness.run_experiment(cfg, jobs=1, log=lambda m: print(f"  {m}"))

print("\nfinal best fitness by variant and repetition:")
finals = {}
for path in sorted(out.glob("runlog-*.csv")):
    rows = harness.read_runlog_csv(path)
    finals[rows[0]["run_id"]] = rows[-1]["best_so_far"]
for run_id, best in finals.items():
    print(f"  {run_id:32s} {best:+.3f}")

print("\nrank-based comparison of variants (small n, so p-values are coarse):")
table = harness.compare_runs(sorted(map(str, out.glob("runlog-*.csv"))),
                             "best_so_far")
harness.write_comparison_csv(table, sys.stdout)

export_dir = out / "plotdata"
harness.export_for_plotting(sorted(map(str, out.glob("runlog-*.csv"))),
                            export_dir)
print(f"\nplot-ready bundle written to {export_dir}/ "
      "(runs.csv plus the terrain grid)")
