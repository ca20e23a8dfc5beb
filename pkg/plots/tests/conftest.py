"""Shared synthetic data: desk-scale run-log CSVs in the documented schema."""

from pathlib import Path

import pytest

HEADER = ("run_id,survivor_mode,learning_budget,seed,generation,"
          "cumulative_evaluations,best_so_far,best_in_population,"
          "mean_fitness,diversity_mean_ted")

VARIANTS = (("elitist", ""), ("elitist", "10"),
            ("generational", ""), ("generational", "10"))


def synth_rows(mode, budget, rep, generations=10):
    """Deterministic, plausible-looking desk-scale run rows."""
    cost = 1 if budget == "" else int(budget)
    vi = VARIANTS.index((mode, budget))
    rows = []
    for gen in range(generations + 1):
        cum = 20 * cost * (gen + 1)
        best = round(vi * 0.5 + 0.3 * gen + 0.01 * rep, 6)
        div = round(10.0 + vi - 0.4 * gen + 0.02 * rep, 6)
        rows.append(f"{mode}-{'nolearn' if budget == '' else f'learn{budget}'}"
                    f"-rep{rep:02d},{mode},{budget},7,{gen},{cum},"
                    f"{best},{best},{best - 0.5},{div}")
    return rows


def write_runlog(path: Path, rows):
    path.write_text(HEADER + "\n" + "\n".join(rows) + "\n")


@pytest.fixture()
def desk_dir(tmp_path):
    """20 run-log CSVs: 4 variants x 5 repetitions, 11 generations each."""
    d = tmp_path / "runlogs"
    d.mkdir()
    for mode, budget in VARIANTS:
        label = f"{mode}-{'nolearn' if budget == '' else f'learn{budget}'}"
        for rep in range(5):
            write_runlog(d / f"runlog-{label}-rep{rep:02d}.csv",
                         synth_rows(mode, budget, rep))
    return d


@pytest.fixture()
def calibration_csv(tmp_path):
    path = tmp_path / "calibration.csv"
    lines = ["budget,mean_fraction"]
    for b in range(1, 51):
        lines.append(f"{b},{min(1.0, 0.3 + 0.014 * b)!r}")
    lines.append("")
    path.write_text("\n".join(lines))
    return path
