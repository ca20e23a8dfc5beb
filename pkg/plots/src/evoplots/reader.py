"""Readers for the documented CSV interchange formats.

This package talks to the experiment tooling only through files, so the
schemas are restated here as the contract:

run logs: one row per generation per run with columns
    run_id, survivor_mode, learning_budget, seed, generation,
    cumulative_evaluations, best_so_far, best_in_population, mean_fitness,
    diversity_mean_ted
calibration: columns budget, mean_fraction
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

RUNLOG_COLUMNS = ("run_id", "survivor_mode", "learning_budget", "seed",
                  "generation", "cumulative_evaluations", "best_so_far",
                  "best_in_population", "mean_fitness", "diversity_mean_ted")

CALIBRATION_COLUMNS = ("budget", "mean_fraction")


class SchemaError(ValueError):
    """A CSV does not match the documented schema; names the offender."""


@dataclass(frozen=True)
class RunRow:
    run_id: str
    variant: str
    generation: int
    cumulative_evaluations: int
    best_so_far: float
    diversity_mean_ted: float


def _variant_label(mode: str, budget: str) -> str:
    return f"{mode}-nolearn" if budget == "" else f"{mode}-learn{budget}"


def _check_header(path: Path, fieldnames, expected) -> None:
    missing = [c for c in expected if c not in (fieldnames or ())]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")


def _parse(path: Path, row: dict, column: str, cast):
    try:
        return cast(row[column])
    except ValueError as exc:
        raise SchemaError(f"{path}: bad value in column {column!r}: "
                          f"{row[column]!r}") from exc


def read_runlog(path) -> list[RunRow]:
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(path, reader.fieldnames, RUNLOG_COLUMNS)
        for row in reader:
            rows.append(RunRow(
                run_id=row["run_id"],
                variant=_variant_label(row["survivor_mode"],
                                       row["learning_budget"]),
                generation=_parse(path, row, "generation", int),
                cumulative_evaluations=_parse(path, row,
                                              "cumulative_evaluations", int),
                best_so_far=_parse(path, row, "best_so_far", float),
                diversity_mean_ted=_parse(path, row, "diversity_mean_ted",
                                          float),
            ))
    return rows


def _is_calibration_file(path: Path) -> bool:
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), None)
    return tuple(header or ()) == CALIBRATION_COLUMNS


def read_runs(csv_dir) -> list[RunRow]:
    """All run rows under a directory (or from a single CSV file).

    Calibration CSVs are the other documented format and routinely sit in
    the same exported bundle; they are skipped here, not an error. Any
    other non-conforming CSV still fails loudly.
    """
    csv_dir = Path(csv_dir)
    if csv_dir.is_file():
        return read_runlog(csv_dir)
    paths = sorted(csv_dir.glob("*.csv"))
    if not paths:
        raise SchemaError(f"{csv_dir}: no CSV files found")
    rows = []
    for path in paths:
        if _is_calibration_file(path):
            continue
        rows.extend(read_runlog(path))
    if not rows:
        raise SchemaError(f"{csv_dir}: only calibration CSVs found")
    return rows


def read_calibration(path) -> tuple[list[int], list[float]]:
    path = Path(path)
    budgets, fractions = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(path, reader.fieldnames, CALIBRATION_COLUMNS)
        for row in reader:
            budgets.append(_parse(path, row, "budget", int))
            fractions.append(_parse(path, row, "mean_fraction", float))
    if not budgets:
        raise SchemaError(f"{path}: no data rows")
    return budgets, fractions
