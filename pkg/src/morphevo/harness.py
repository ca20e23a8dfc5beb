"""Experiment orchestration.

A study is a grid of evolution variants ({elitist, generational} x
{no learning, budgeted learning}) times repeated trials.  Every
(variant, repetition) pair owns a seed derived from (seed_base, variant
index, repetition index), so pairs can run in any order and in parallel
without changing a single output byte.  Results stream to per-pair CSV and
JSON-lines files plus a JSON manifest that makes reruns resume instead of
recompute.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .evolution import EvolutionAborted, EvolutionConfig, RunLog, evolve
from .fitness import generate_terrain, make_locomotion_evaluator
from .genotype import from_json, to_json

RUNLOG_COLUMNS = ("run_id", "survivor_mode", "learning_budget", "seed",
                  "generation", "cumulative_evaluations", "best_so_far",
                  "best_in_population", "mean_fitness", "diversity_mean_ted")

DESK_PRESET = dict(population_size=20, offspring_count=20, tournament_size=5,
                   generations=10, learning_budget=10, repetitions=5)


@dataclass
class ExperimentConfig:
    seed_base: int = 0
    repetitions: int = 12
    output_dir: str = "results"
    population_size: int = 200
    offspring_count: int = 200
    tournament_size: int = 20
    generations: int = 100
    learning_budget: int = 30
    survivor_modes: list = field(default_factory=lambda: ["elitist", "generational"])
    learning: list = field(default_factory=lambda: [False, True])
    evaluation_ceiling: int | None = None
    min_initial_modules: int = 15
    max_initial_modules: int = 20
    terrain_seed: int = 0

    def desk_scaled(self) -> "ExperimentConfig":
        merged = {**asdict(self), **DESK_PRESET}
        return ExperimentConfig(**merged)


@dataclass
class Variant:
    index: int
    survivor_mode: str
    learning_budget: int | None

    @property
    def label(self) -> str:
        if self.learning_budget is None:
            return f"{self.survivor_mode}-nolearn"
        return f"{self.survivor_mode}-learn{self.learning_budget}"


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**raw)


def variants_of(cfg: ExperimentConfig) -> list[Variant]:
    out = []
    for mode in cfg.survivor_modes:
        for learn in cfg.learning:
            budget = cfg.learning_budget if learn else None
            out.append(Variant(len(out), mode, budget))
    return out


def pair_seed(seed_base: int, variant_index: int, repetition: int) -> int:
    """Derived master seed of one (variant, repetition) pair."""
    ss = np.random.SeedSequence((seed_base, variant_index, repetition))
    return int(ss.generate_state(1, np.uint64)[0])


def run_id_of(variant: Variant, repetition: int) -> str:
    return f"{variant.label}-rep{repetition:02d}"


def evolution_config(cfg: ExperimentConfig, variant: Variant,
                     repetition: int) -> EvolutionConfig:
    return EvolutionConfig(
        population_size=cfg.population_size,
        offspring_count=cfg.offspring_count,
        tournament_size=cfg.tournament_size,
        survivor_mode=variant.survivor_mode,
        learning_budget=variant.learning_budget,
        generations=cfg.generations,
        master_seed=pair_seed(cfg.seed_base, variant.index, repetition),
        min_initial_modules=cfg.min_initial_modules,
        max_initial_modules=cfg.max_initial_modules,
        evaluation_ceiling=cfg.evaluation_ceiling,
    )


# ---------------------------------------------------------------------------
# persistence


def _fmt(value: float) -> str:
    return repr(float(value))


def write_runlog_csv(log: RunLog, run_id: str, path) -> None:
    cfg = log.config
    budget = "" if cfg.learning_budget is None else str(cfg.learning_budget)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(RUNLOG_COLUMNS) + "\n")
        for r in log.records:
            fh.write(",".join([
                run_id, cfg.survivor_mode, budget, str(cfg.master_seed),
                str(r.generation), str(r.cumulative_evaluations),
                _fmt(r.best_so_far), _fmt(r.best_in_population),
                _fmt(r.mean_fitness), _fmt(r.diversity),
            ]) + "\n")


def read_runlog_csv(path) -> list[dict]:
    import csv

    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RUNLOG_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for row in reader:
            rows.append({
                "run_id": row["run_id"],
                "survivor_mode": row["survivor_mode"],
                "learning_budget": (int(row["learning_budget"])
                                    if row["learning_budget"] else None),
                "seed": int(row["seed"]),
                "generation": int(row["generation"]),
                "cumulative_evaluations": int(row["cumulative_evaluations"]),
                "best_so_far": float(row["best_so_far"]),
                "best_in_population": float(row["best_in_population"]),
                "mean_fitness": float(row["mean_fitness"]),
                "diversity_mean_ted": float(row["diversity_mean_ted"]),
            })
    return rows


def _individual_to_json(ind) -> str:
    payload = {
        "id": ind.id,
        "genotype": json.loads(to_json(ind.genotype)),
        "fitness": ind.fitness,
        "learned_params": (None if ind.learned_params is None
                           else [float(v) for v in ind.learned_params]),
        "evaluations_consumed": ind.evaluations_consumed,
        "birth_generation": ind.birth_generation,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def write_individuals_jsonl(individuals, path) -> None:
    with open(path, "w", newline="\n") as fh:
        for ind in individuals:
            fh.write(_individual_to_json(ind) + "\n")


def read_individuals_jsonl(path) -> list:
    from .evolution import Individual

    out = []
    with open(path) as fh:
        for line in fh:
            d = json.loads(line)
            params = d["learned_params"]
            out.append(Individual(
                id=d["id"],
                genotype=from_json(json.dumps(d["genotype"])),
                fitness=d["fitness"],
                learned_params=None if params is None else np.asarray(params),
                evaluations_consumed=d["evaluations_consumed"],
                birth_generation=d["birth_generation"],
            ))
    return out


def _atomic_write(path: Path, writer) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# the experiment driver


def _pair_paths(out_dir: Path, run_id: str) -> dict[str, Path]:
    return {
        "runlog": out_dir / f"runlog-{run_id}.csv",
        "archive": out_dir / f"archive-{run_id}.jsonl",
        "final": out_dir / f"final-{run_id}.jsonl",
    }


def _execute_pair(args) -> tuple[str, bool, str]:
    """Worker: one (variant, repetition) pair.  Must stay picklable."""
    cfg_dict, variant_index, mode, budget, repetition, out_dir = args
    cfg = ExperimentConfig(**cfg_dict)
    variant = Variant(variant_index, mode, budget)
    run_id = run_id_of(variant, repetition)
    paths = _pair_paths(Path(out_dir), run_id)
    evaluator = make_locomotion_evaluator(generate_terrain(cfg.terrain_seed))
    evo_cfg = evolution_config(cfg, variant, repetition)
    try:
        log = evolve(evo_cfg, evaluator)
    except EvolutionAborted as exc:
        partial = exc.runlog
        _atomic_write(paths["runlog"], lambda p: write_runlog_csv(partial, run_id, p))
        _atomic_write(paths["archive"],
                      lambda p: write_individuals_jsonl(partial.archive, p))
        return run_id, False, str(exc)
    expected = log.records[-1].cumulative_evaluations
    if evaluator.count != expected:
        return run_id, False, (f"accounting mismatch: counter {evaluator.count} "
                               f"vs log {expected}")
    _atomic_write(paths["runlog"], lambda p: write_runlog_csv(log, run_id, p))
    _atomic_write(paths["archive"], lambda p: write_individuals_jsonl(log.archive, p))
    _atomic_write(paths["final"], lambda p: write_individuals_jsonl(log.population, p))
    return run_id, True, ""


def _load_manifest(path: Path) -> dict:
    if path.exists():
        with open(path) as fh:
            return json.load(fh)
    return {}


def _write_manifest(path: Path, cfg: ExperimentConfig, seeds: dict,
                    completed: set, wall_time: float) -> None:
    payload = {
        "config": asdict(cfg),
        "seeds": dict(sorted(seeds.items())),
        "completed_pairs": sorted(completed),
        "tool_version": __version__,
        "wall_time_seconds": wall_time,
    }

    def write(p):
        with open(p, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    _atomic_write(path, write)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1,
                   log=lambda msg: print(msg, file=sys.stderr)) -> int:
    """Run the whole grid; returns a process exit status."""
    t0 = time.monotonic()
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    manifest = _load_manifest(manifest_path)
    previously = set(manifest.get("completed_pairs", []))

    pending = []
    seeds = {}
    completed = set()
    for variant in variants_of(cfg):
        for rep in range(cfg.repetitions):
            run_id = run_id_of(variant, rep)
            seeds[run_id] = pair_seed(cfg.seed_base, variant.index, rep)
            have_files = all(p.exists() for p in _pair_paths(out_dir, run_id).values())
            if run_id in previously and have_files:
                completed.add(run_id)
                continue
            pending.append((asdict(cfg), variant.index, variant.survivor_mode,
                            variant.learning_budget, rep, str(out_dir)))

    log(f"{len(completed)} pairs already complete, {len(pending)} to run")
    failures = []

    def finish(run_id: str, ok: bool, message: str) -> None:
        if ok:
            completed.add(run_id)
            log(f"done {run_id}")
        else:
            failures.append(run_id)
            log(f"FAILED {run_id}: {message}")
        _write_manifest(manifest_path, cfg, seeds, completed,
                        time.monotonic() - t0)

    if jobs <= 1:
        for args in pending:
            run_id, ok, message = _execute_pair(args)
            finish(run_id, ok, message)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for run_id, ok, message in pool.map(_execute_pair, pending):
                finish(run_id, ok, message)

    _write_manifest(manifest_path, cfg, seeds, completed, time.monotonic() - t0)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# downstream commands working from persisted outputs


def learning_phase_over_archive(archive_dir, budget: int, seed: int = 0,
                                terrain_seed: int = 0) -> list[dict]:
    """Extra learning pass over every final population in a results
    directory (the Table-1-style procedure).  Returns per-run summaries and
    writes learned populations next to the inputs."""
    from .evolution import posthoc_learning_phase

    archive_dir = Path(archive_dir)
    manifest = _load_manifest(archive_dir / "manifest.json")
    seeds = manifest.get("seeds", {})
    evaluator = make_locomotion_evaluator(generate_terrain(terrain_seed))
    summaries = []
    for final_path in sorted(archive_dir.glob("final-*.jsonl")):
        run_id = final_path.stem[len("final-"):]
        pop = read_individuals_jsonl(final_path)
        if not pop:
            continue
        master_seed = int(seeds.get(run_id, seed))
        before = [ind.fitness for ind in pop]
        learned = posthoc_learning_phase(pop, budget, evaluator,
                                         master_seed=master_seed)
        after = [ind.fitness for ind in learned]
        out_path = archive_dir / f"learned-{run_id}.jsonl"
        _atomic_write(out_path, lambda p: write_individuals_jsonl(learned, p))
        summaries.append({
            "run_id": run_id,
            "budget": budget,
            "best_before": max(before),
            "best_after": max(after),
            "mean_before": sum(before) / len(before),
            "mean_after": sum(after) / len(after),
        })
    return summaries


def write_learning_phase_csv(summaries: list[dict], path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("run_id,budget,best_before,best_after,mean_before,mean_after\n")
        for s in summaries:
            fh.write(",".join([
                s["run_id"], str(s["budget"]),
                _fmt(s["best_before"]), _fmt(s["best_after"]),
                _fmt(s["mean_before"]), _fmt(s["mean_after"]),
            ]) + "\n")


def _variant_key(row: dict) -> str:
    budget = row["learning_budget"]
    mode = row["survivor_mode"]
    return f"{mode}-nolearn" if budget is None else f"{mode}-learn{budget}"


def compare_runs(csv_paths, metric: str) -> list[dict]:
    """Pairwise Mann-Whitney comparisons of per-run final metric values,
    grouped by experiment variant."""
    from .stats import mann_whitney_u

    column = {"best_so_far": "best_so_far",
              "diversity": "diversity_mean_ted"}.get(metric)
    if column is None:
        raise ValueError(f"unknown metric {metric!r}")
    finals: dict[str, dict[str, tuple[int, float]]] = {}
    for path in csv_paths:
        for row in read_runlog_csv(path):
            key = _variant_key(row)
            per_run = finals.setdefault(key, {})
            seen = per_run.get(row["run_id"])
            if seen is None or row["generation"] > seen[0]:
                per_run[row["run_id"]] = (row["generation"], row[column])
    groups = {key: [value for _, (_, value) in sorted(per_run.items())]
              for key, per_run in finals.items()}
    names = sorted(groups)
    table = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            va = [v for v in groups[a] if not math.isnan(v)]
            vb = [v for v in groups[b] if not math.isnan(v)]
            if not va or not vb:
                continue
            result = mann_whitney_u(va, vb)
            table.append({
                "variant_a": a, "variant_b": b,
                "n_a": len(va), "n_b": len(vb),
                "metric": metric,
                "u_statistic": result.u_statistic,
                "p_value": result.p_value,
                "method": result.method,
                "degenerate": result.degenerate,
            })
    return table


def write_comparison_csv(table: list[dict], fh) -> None:
    fh.write("variant_a,variant_b,metric,n_a,n_b,u_statistic,p_value,method,degenerate\n")
    for row in table:
        fh.write(",".join([
            row["variant_a"], row["variant_b"], row["metric"],
            str(row["n_a"]), str(row["n_b"]),
            _fmt(row["u_statistic"]), _fmt(row["p_value"]),
            row["method"], str(int(row["degenerate"])),
        ]) + "\n")


def export_for_plotting(csv_paths, out_dir, terrain_seed: int = 0) -> Path:
    """Tidy bundle for the plotting component: one combined run CSV plus the
    terrain grid."""
    from .fitness import export_terrain

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for path in csv_paths:
        rows.extend(read_runlog_csv(path))
    rows.sort(key=lambda r: (r["run_id"], r["generation"]))
    combined = out_dir / "runs.csv"

    def write(p):
        with open(p, "w", newline="\n") as fh:
            fh.write(",".join(RUNLOG_COLUMNS) + "\n")
            for r in rows:
                budget = "" if r["learning_budget"] is None else str(r["learning_budget"])
                fh.write(",".join([
                    r["run_id"], r["survivor_mode"], budget, str(r["seed"]),
                    str(r["generation"]), str(r["cumulative_evaluations"]),
                    _fmt(r["best_so_far"]), _fmt(r["best_in_population"]),
                    _fmt(r["mean_fitness"]), _fmt(r["diversity_mean_ted"]),
                ]) + "\n")

    _atomic_write(combined, write)
    _atomic_write(out_dir / "terrain.txt",
                  lambda p: export_terrain(generate_terrain(terrain_seed), p))
    return combined
