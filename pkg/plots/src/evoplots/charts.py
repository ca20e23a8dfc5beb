"""Figure construction and file rendering.

Charts follow one fixed style: per-variant mean lines with a shaded band of
plus/minus one standard deviation across repetitions, the final mean value
annotated at the end of each line. Rendering is a pure function of the CSV
content and the plot spec: fixed figure geometry, fixed palette, salted SVG
ids, and no embedded timestamps, so rerendering identical inputs produces
identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "evoplots"

import matplotlib.pyplot as plt
import numpy as np

from .reader import RunRow, read_calibration, read_runs

X_AXES = ("generations", "evaluations")
METRICS = ("best_so_far", "diversity")

_METRIC_COLUMN = {"best_so_far": "best_so_far",
                  "diversity": "diversity_mean_ted"}
_METRIC_LABEL = {"best_so_far": "best fitness so far (m)",
                 "diversity": "population diversity (mean tree edit distance)"}
_X_LABEL = {"generations": "generation",
            "evaluations": "function evaluations"}

# tab10 head, fixed order so colors never depend on dict iteration
_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

CALIBRATION_MARKER_BUDGET = 30


@dataclass(frozen=True)
class PlotSpec:
    x_axis: str
    metric: str

    def __post_init__(self):
        if self.x_axis not in X_AXES:
            raise ValueError(f"x_axis must be one of {X_AXES}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")

    @property
    def stem(self) -> str:
        return f"{self.metric}-vs-{self.x_axis}"


DEFAULT_SPECS = tuple(PlotSpec(x, m) for m in METRICS for x in X_AXES)


@dataclass
class VariantSeries:
    variant: str
    x: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_runs: int


def aggregate(rows: list[RunRow], spec: PlotSpec) -> list[VariantSeries]:
    """Per-variant mean/std series, runs aligned by generation index.

    Runs of one variant may have unequal lengths (aborted pairs); they are
    cut to the variant's shortest run before averaging.
    """
    column = _METRIC_COLUMN[spec.metric]
    by_variant: dict[str, dict[str, list[RunRow]]] = {}
    for row in rows:
        by_variant.setdefault(row.variant, {}).setdefault(row.run_id,
                                                          []).append(row)
    out = []
    for variant in sorted(by_variant):
        runs = [sorted(rs, key=lambda r: r.generation)
                for rs in by_variant[variant].values()]
        length = min(len(r) for r in runs)
        values = np.array([[getattr(row, column) for row in run[:length]]
                           for run in runs])
        if spec.x_axis == "generations":
            x = np.array([row.generation for row in runs[0][:length]], float)
        else:
            x = np.mean([[row.cumulative_evaluations for row in run[:length]]
                         for run in runs], axis=0)
        out.append(VariantSeries(variant, x, values.mean(axis=0),
                                 values.std(axis=0), len(runs)))
    return out


def truncate_common(series: list[VariantSeries]) -> list[VariantSeries]:
    """Cut every variant at the smallest final x across variants, so lines
    cover a common range instead of trailing off one by one."""
    if not series:
        return []
    limit = min(s.x[-1] for s in series)
    cut = []
    for s in series:
        keep = s.x <= limit
        cut.append(VariantSeries(s.variant, s.x[keep], s.mean[keep],
                                 s.std[keep], s.n_runs))
    return cut


def build_series_figure(series: list[VariantSeries], spec: PlotSpec):
    fig, ax = plt.subplots(figsize=(7.0, 4.4), dpi=100)
    for s, color in zip(series, _PALETTE):
        ax.plot(s.x, s.mean, color=color, linewidth=1.6,
                label=f"{s.variant} (n={s.n_runs})")
        ax.fill_between(s.x, s.mean - s.std, s.mean + s.std,
                        color=color, alpha=0.18, linewidth=0)
        ax.annotate(f"{s.mean[-1]:.2f}", (s.x[-1], s.mean[-1]),
                    xytext=(5, 0), textcoords="offset points",
                    va="center", fontsize=8, color=color)
    ax.set_xlabel(_X_LABEL[spec.x_axis])
    ax.set_ylabel(_METRIC_LABEL[spec.metric])
    ax.grid(alpha=0.25, linewidth=0.5)
    ax.legend(fontsize=8, loc="best")
    ax.margins(x=0.08)
    fig.tight_layout()
    return fig


def build_calibration_figure(budgets: list[int], fractions: list[float]):
    fig, ax = plt.subplots(figsize=(7.0, 4.4), dpi=100)
    ax.plot(budgets, fractions, color=_PALETTE[0], linewidth=1.6)
    ax.axhline(1.0, color="gray", linewidth=0.6, linestyle=":")
    if CALIBRATION_MARKER_BUDGET in budgets:
        i = budgets.index(CALIBRATION_MARKER_BUDGET)
        ax.plot([budgets[i]], [fractions[i]], "o", color=_PALETTE[3],
                markersize=5)
        ax.annotate(f"{fractions[i]:.2f} at budget {budgets[i]}",
                    (budgets[i], fractions[i]), xytext=(8, -2),
                    textcoords="offset points", fontsize=8,
                    color=_PALETTE[3])
    ax.set_xlabel("learning budget (evaluations per robot)")
    ax.set_ylabel("mean fraction of final performance")
    ax.set_ylim(0.0, 1.05)
    ax.grid(alpha=0.25, linewidth=0.5)
    fig.tight_layout()
    return fig


def _save_pair(fig, out_path) -> Path:
    """Write PNG and SVG side by side; returns the PNG path."""
    out = Path(out_path)
    stem = out.with_suffix("") if out.suffix in (".png", ".svg") else out
    stem.parent.mkdir(parents=True, exist_ok=True)
    png, svg = stem.with_suffix(".png"), stem.with_suffix(".svg")
    fig.savefig(png, metadata={"Software": None})
    fig.savefig(svg, metadata={"Date": None})
    plt.close(fig)
    return png


def render(csv_dir, spec: PlotSpec, out_path) -> Path:
    """One chart from the run logs under csv_dir; writes PNG + SVG."""
    series = truncate_common(aggregate(read_runs(csv_dir), spec))
    return _save_pair(build_series_figure(series, spec), out_path)


def render_calibration(csv, out_path) -> Path:
    budgets, fractions = read_calibration(csv)
    return _save_pair(build_calibration_figure(budgets, fractions), out_path)
