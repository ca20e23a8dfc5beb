"""Experiment orchestration, persistence, and CLI tests."""

import json
import math
import os
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pytest

from morphevo import cli, harness
from morphevo.evolution import EvolutionConfig, Individual, evolve
from morphevo.fitness import generate_terrain, make_locomotion_evaluator
from morphevo.genotype import random_genotype, to_json
from morphevo.harness import (
    ExperimentConfig,
    RUNLOG_COLUMNS,
    Variant,
    compare_runs,
    export_for_plotting,
    load_config,
    pair_seed,
    read_individuals_jsonl,
    read_runlog_csv,
    run_id_of,
    variants_of,
    write_individuals_jsonl,
    write_runlog_csv,
)


# ---------------------------------------------------------------------------
# configuration


def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(
        'seed_base = 7\nrepetitions = 3\noutput_dir = "out"\n'
        "population_size = 10\ngenerations = 4\nlearning_budget = 5\n"
        'survivor_modes = ["elitist"]\nlearning = [true]\n')
    cfg = load_config(path)
    assert cfg.seed_base == 7
    assert cfg.repetitions == 3
    assert cfg.population_size == 10
    assert cfg.survivor_modes == ["elitist"]
    assert cfg.learning == [True]
    # unspecified keys keep their defaults
    assert cfg.offspring_count == 200
    assert cfg.terrain_seed == 0


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("seed_base = 1\npopulaton_size = 10\n")
    with pytest.raises(ValueError, match="populaton_size"):
        load_config(path)


def test_shipped_configs_parse():
    root = Path(__file__).resolve().parents[1] / "configs"
    desk = load_config(root / "desk.toml")
    full = load_config(root / "full.toml")
    assert desk.population_size == 20 and desk.generations == 10
    assert full.population_size == 200 and full.generations == 100
    assert desk.repetitions == 5 and full.repetitions == 12


def test_desk_scaled_overrides_sizes_only():
    cfg = ExperimentConfig(seed_base=42, terrain_seed=9)
    desk = cfg.desk_scaled()
    assert desk.population_size == 20
    assert desk.offspring_count == 20
    assert desk.tournament_size == 5
    assert desk.generations == 10
    assert desk.learning_budget == 10
    assert desk.repetitions == 5
    # identity settings survive the rescale
    assert desk.seed_base == 42
    assert desk.terrain_seed == 9


def test_variants_enumerate_mode_major():
    cfg = ExperimentConfig(learning_budget=30)
    vs = variants_of(cfg)
    assert [v.label for v in vs] == [
        "elitist-nolearn", "elitist-learn30",
        "generational-nolearn", "generational-learn30",
    ]
    assert [v.index for v in vs] == [0, 1, 2, 3]


def test_pair_seeds_deterministic_and_distinct():
    grid = [(v, r) for v in range(4) for r in range(12)]
    seeds = [pair_seed(0, v, r) for v, r in grid]
    assert seeds == [pair_seed(0, v, r) for v, r in grid]
    assert len(set(seeds)) == len(seeds)
    # a different base reseeds every pair
    other = [pair_seed(1, v, r) for v, r in grid]
    assert not set(seeds) & set(other)


def test_run_id_format():
    v = Variant(1, "elitist", 30)
    assert run_id_of(v, 3) == "elitist-learn30-rep03"
    assert run_id_of(Variant(0, "generational", None), 11) == "generational-nolearn-rep11"


# ---------------------------------------------------------------------------
# persistence round-trips


def _tiny_runlog():
    cfg = EvolutionConfig(population_size=4, offspring_count=4, tournament_size=2,
                          generations=1, learning_budget=None, master_seed=5,
                          min_initial_modules=15, max_initial_modules=18)
    evaluator = make_locomotion_evaluator(generate_terrain())
    return evolve(cfg, evaluator)


def test_runlog_csv_roundtrip(tmp_path):
    log = _tiny_runlog()
    path = tmp_path / "runlog.csv"
    write_runlog_csv(log, "elitist-nolearn-rep00", path)
    rows = read_runlog_csv(path)
    assert len(rows) == len(log.records)
    for row, rec in zip(rows, log.records):
        assert row["run_id"] == "elitist-nolearn-rep00"
        assert row["survivor_mode"] == "elitist"
        assert row["learning_budget"] is None
        assert row["seed"] == 5
        assert row["generation"] == rec.generation
        assert row["cumulative_evaluations"] == rec.cumulative_evaluations
        # repr-formatted floats survive the round trip exactly
        assert row["best_so_far"] == rec.best_so_far
        assert row["best_in_population"] == rec.best_in_population
        assert row["mean_fitness"] == rec.mean_fitness
        assert (row["diversity_mean_ted"] == rec.diversity
                or (math.isnan(row["diversity_mean_ted"]) and math.isnan(rec.diversity)))


def test_read_runlog_rejects_missing_columns(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("run_id,generation\nx,0\n")
    with pytest.raises(ValueError, match="missing columns"):
        read_runlog_csv(path)


def test_individuals_jsonl_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    individuals = [
        Individual(id=0, genotype=random_genotype(rng), fitness=1.25,
                   learned_params=np.array([0.1, 0.9, 0.5, 0.25]),
                   evaluations_consumed=10, birth_generation=2),
        Individual(id=1, genotype=random_genotype(rng), fitness=-0.5,
                   learned_params=None, evaluations_consumed=1,
                   birth_generation=0),
    ]
    path = tmp_path / "pop.jsonl"
    write_individuals_jsonl(individuals, path)
    back = read_individuals_jsonl(path)
    assert len(back) == 2
    for orig, copy in zip(individuals, back):
        assert copy.id == orig.id
        assert copy.genotype == orig.genotype
        assert copy.fitness == orig.fitness
        assert copy.evaluations_consumed == orig.evaluations_consumed
        assert copy.birth_generation == orig.birth_generation
        if orig.learned_params is None:
            assert copy.learned_params is None
        else:
            np.testing.assert_array_equal(copy.learned_params, orig.learned_params)


# ---------------------------------------------------------------------------
# the experiment driver (miniature grid so the suite stays quick)


MINI = dict(seed_base=0, repetitions=2, population_size=6, offspring_count=6,
            tournament_size=2, generations=2, learning_budget=2)


@pytest.fixture(scope="module")
def mini_results(tmp_path_factory):
    out = tmp_path_factory.mktemp("mini-results")
    cfg = ExperimentConfig(output_dir=str(out), **MINI)
    status = harness.run_experiment(cfg, jobs=1, log=lambda msg: None)
    assert status == 0
    return out, cfg


def test_run_experiment_writes_all_pairs(mini_results):
    out, cfg = mini_results
    runlogs = sorted(out.glob("runlog-*.csv"))
    assert len(runlogs) == 4 * cfg.repetitions
    for path in runlogs:
        rows = read_runlog_csv(path)
        assert len(rows) == cfg.generations + 1
        assert [r["generation"] for r in rows] == list(range(cfg.generations + 1))
        run_id = path.stem[len("runlog-"):]
        assert {r["run_id"] for r in rows} == {run_id}
        assert (out / f"archive-{run_id}.jsonl").exists()
        assert (out / f"final-{run_id}.jsonl").exists()
        finals = read_individuals_jsonl(out / f"final-{run_id}.jsonl")
        assert len(finals) == cfg.population_size


def test_manifest_contents(mini_results):
    out, cfg = mini_results
    with open(out / "manifest.json") as fh:
        manifest = json.load(fh)
    assert manifest["config"] == asdict(cfg)
    assert len(manifest["completed_pairs"]) == 4 * cfg.repetitions
    assert manifest["completed_pairs"] == sorted(manifest["completed_pairs"])
    for variant in variants_of(cfg):
        for rep in range(cfg.repetitions):
            run_id = run_id_of(variant, rep)
            assert manifest["seeds"][run_id] == pair_seed(cfg.seed_base,
                                                          variant.index, rep)
    assert manifest["wall_time_seconds"] > 0


def test_resume_skips_completed_pairs(mini_results, monkeypatch):
    out, cfg = mini_results
    victim = "elitist-learn2-rep01"
    removed = out / f"final-{victim}.jsonl"
    original = removed.read_bytes()
    removed.unlink()

    executed = []
    real = harness._execute_pair

    def spy(args):
        result = real(args)
        executed.append(result[0])
        return result

    monkeypatch.setattr(harness, "_execute_pair", spy)
    status = harness.run_experiment(cfg, jobs=1, log=lambda msg: None)
    assert status == 0
    assert executed == [victim]
    assert removed.read_bytes() == original


def test_rerun_with_fresh_manifest_reproduces_bytes(mini_results, tmp_path):
    out, cfg = mini_results
    cfg2 = ExperimentConfig(**{**asdict(cfg), "output_dir": str(tmp_path)})
    assert harness.run_experiment(cfg2, jobs=1, log=lambda msg: None) == 0
    for path in sorted(out.glob("runlog-*.csv")):
        assert (tmp_path / path.name).read_bytes() == path.read_bytes()
    for path in sorted(out.glob("*.jsonl")):
        assert (tmp_path / path.name).read_bytes() == path.read_bytes()


def test_learning_phase_over_archive(mini_results):
    out, _ = mini_results
    summaries = harness.learning_phase_over_archive(out, budget=2)
    assert len(summaries) == 8  # one per pair in the grid
    for s in summaries:
        assert (out / f"learned-{s['run_id']}.jsonl").exists()
        assert s["best_after"] >= s["best_before"]
        assert s["budget"] == 2
    # summary CSV round-trips through the writer
    csv_path = out / "learning-phase.csv"
    harness.write_learning_phase_csv(summaries, csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("run_id,budget,best_before")
    assert len(lines) == len(summaries) + 1


def test_export_for_plotting(mini_results, tmp_path):
    out, cfg = mini_results
    inputs = sorted(str(p) for p in out.glob("runlog-*.csv"))
    combined = export_for_plotting(inputs, tmp_path)
    rows = read_runlog_csv(combined)
    assert len(rows) == 4 * cfg.repetitions * (cfg.generations + 1)
    keys = [(r["run_id"], r["generation"]) for r in rows]
    assert keys == sorted(keys)
    terrain = np.loadtxt(tmp_path / "terrain.txt")
    assert terrain.shape == generate_terrain().grid.shape


# ---------------------------------------------------------------------------
# cross-run statistics


def _write_fake_runlog(path, run_values, mode="elitist", budget=None):
    """One final-generation row per run_id with a chosen metric value."""
    budget_s = "" if budget is None else str(budget)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(RUNLOG_COLUMNS) + "\n")
        for run_id, value in run_values.items():
            fh.write(",".join([
                run_id, mode, budget_s, "0", "0", "20",
                repr(float(value)), repr(float(value)),
                repr(float(value)), "1.0",
            ]) + "\n")


def test_compare_runs_matches_known_case(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    _write_fake_runlog(a, {f"elitist-nolearn-rep{i:02d}": v
                           for i, v in enumerate([1.0, 2.0, 3.0])})
    _write_fake_runlog(b, {f"generational-nolearn-rep{i:02d}": v
                           for i, v in enumerate([4.0, 5.0, 6.0])},
                       mode="generational")
    table = compare_runs([str(a), str(b)], "best_so_far")
    assert len(table) == 1
    row = table[0]
    assert {row["variant_a"], row["variant_b"]} == {"elitist-nolearn",
                                                    "generational-nolearn"}
    assert row["u_statistic"] == 0.0
    assert row["p_value"] == pytest.approx(0.1)
    assert row["method"] == "exact"
    assert not row["degenerate"]


def test_compare_runs_takes_last_generation(tmp_path):
    path = tmp_path / "multi.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(RUNLOG_COLUMNS) + "\n")
        for gen, best in [(0, 1.0), (1, 9.0)]:
            fh.write(f"elitist-nolearn-rep00,elitist,,0,{gen},20,"
                     f"{best!r},{best!r},{best!r},1.0\n")
        fh.write("generational-nolearn-rep00,generational,,0,0,20,"
                 "2.0,2.0,2.0,1.0\n")
    table = compare_runs([str(path)], "best_so_far")
    # elitist final value 9 beats 2, so the single-sample U favors elitist
    assert table[0]["n_a"] == 1 and table[0]["n_b"] == 1
    assert table[0]["u_statistic"] == 0.0


def test_compare_runs_filters_nan_diversity(tmp_path):
    path = tmp_path / "nan.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(RUNLOG_COLUMNS) + "\n")
        fh.write("elitist-nolearn-rep00,elitist,,0,0,20,1.0,1.0,1.0,nan\n")
        fh.write("elitist-nolearn-rep01,elitist,,0,0,20,2.0,2.0,2.0,3.0\n")
        fh.write("generational-nolearn-rep00,generational,,0,0,20,1.5,1.5,1.5,4.0\n")
    table = compare_runs([str(path)], "diversity")
    assert table[0]["n_a"] == 1  # the nan run drops out
    assert table[0]["n_b"] == 1


def test_compare_runs_unknown_metric(tmp_path):
    with pytest.raises(ValueError, match="unknown metric"):
        compare_runs([], "median_whatever")


# ---------------------------------------------------------------------------
# command line


def test_cli_validate_accepts_valid_genotype(tmp_path, capsys):
    g = random_genotype(np.random.default_rng(0))
    path = tmp_path / "robot.json"
    path.write_text(to_json(g))
    assert cli.main(["validate", "--genotype", str(path)]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_cli_validate_rejects_garbage(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"format_version": 99}')
    assert cli.main(["validate", "--genotype", str(path)]) == 1
    assert "unreadable genotype" in capsys.readouterr().err


def test_cli_validate_reports_violations(tmp_path, capsys):
    g = random_genotype(np.random.default_rng(0))
    doc = json.loads(to_json(g))

    def poison(node):
        if "controller" in node:
            node["controller"]["amplitude"] = 7.0
            return True
        return any(poison(c) for c in node.get("children", {}).values())

    assert poison(doc["root"])
    path = tmp_path / "invalid.json"
    path.write_text(json.dumps(doc))
    assert cli.main(["validate", "--genotype", str(path)]) == 1
    assert "amplitude" in capsys.readouterr().err


def test_cli_stats_to_stdout(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    _write_fake_runlog(a, {f"elitist-nolearn-rep{i:02d}": v
                           for i, v in enumerate([1.0, 2.0, 3.0])})
    _write_fake_runlog(b, {f"generational-nolearn-rep{i:02d}": v
                           for i, v in enumerate([4.0, 5.0, 6.0])},
                       mode="generational")
    assert cli.main(["stats", "--inputs", str(a), str(b),
                     "--metric", "best_so_far"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("variant_a,variant_b,metric")
    assert ",exact," in out


def test_cli_stats_identical_groups_not_significant(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    values = [1.0, 2.0, 3.0, 4.0, 5.0]
    _write_fake_runlog(a, {f"elitist-nolearn-rep{i:02d}": v
                           for i, v in enumerate(values)})
    _write_fake_runlog(b, {f"generational-nolearn-rep{i:02d}": v
                           for i, v in enumerate(values)},
                       mode="generational")
    assert cli.main(["stats", "--inputs", str(a), str(b),
                     "--metric", "best_so_far"]) == 0
    out = capsys.readouterr().out
    p = float(out.splitlines()[1].split(",")[6])
    assert p >= 0.99


def test_cli_run_and_export(tmp_path, capsys):
    config = tmp_path / "micro.toml"
    out_dir = tmp_path / "results"
    config.write_text(
        "seed_base = 3\nrepetitions = 1\npopulation_size = 4\n"
        "offspring_count = 4\ntournament_size = 2\ngenerations = 1\n"
        "learning_budget = 2\nsurvivor_modes = [\"elitist\"]\n"
        "learning = [false]\n"
        f'output_dir = "{out_dir}"\n')
    assert cli.main(["run", "--config", str(config)]) == 0
    capsys.readouterr()
    runlogs = sorted(out_dir.glob("runlog-*.csv"))
    assert len(runlogs) == 1

    export_dir = tmp_path / "plotdata"
    assert cli.main(["export", "--inputs", str(runlogs[0]),
                     "--out", str(export_dir)]) == 0
    assert (export_dir / "runs.csv").exists()
    assert (export_dir / "terrain.txt").exists()


def test_cli_run_seed_override(tmp_path):
    config = tmp_path / "micro.toml"
    config.write_text(
        "seed_base = 3\nrepetitions = 1\npopulation_size = 4\n"
        "offspring_count = 4\ntournament_size = 2\ngenerations = 1\n"
        "survivor_modes = [\"elitist\"]\nlearning = [false]\n"
        f'output_dir = "{tmp_path / "r1"}"\n')
    assert cli.main(["run", "--config", str(config), "--seed", "99",
                     "--output", str(tmp_path / "r2")]) == 0
    with open(tmp_path / "r2" / "manifest.json") as fh:
        manifest = json.load(fh)
    assert manifest["config"]["seed_base"] == 99
    assert manifest["seeds"]["elitist-nolearn-rep00"] == pair_seed(99, 0, 0)
    assert not (tmp_path / "r1").exists()


def test_cli_calibrate(tmp_path, capsys):
    out = tmp_path / "cal.csv"
    assert cli.main(["calibrate", "--robots", "3", "--max-budget", "3",
                     "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "budget,mean_fraction"
    assert len(lines) == 4  # header + one row per budget
    assert "wrote" in capsys.readouterr().out


def test_cli_learn_phase(mini_results, tmp_path, capsys):
    out, _ = mini_results
    summary = tmp_path / "learn.csv"
    assert cli.main(["learn-phase", "--archive", str(out), "--budget", "2",
                     "--out", str(summary)]) == 0
    assert summary.exists()
    assert "->" in capsys.readouterr().out


def test_cli_learn_phase_empty_dir(tmp_path, capsys):
    assert cli.main(["learn-phase", "--archive", str(tmp_path),
                     "--budget", "2"]) == 1
    assert "no final" in capsys.readouterr().err


def test_cli_requires_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2
    assert "command" in capsys.readouterr().err
