"""
Delib Plotting — SVG Figures
==============================

Grouped bar charts of raw records, written as SVG with the Agg
backend. Output bytes depend only on the records: the SVG id salt is
fixed and no creation date is embedded.

  variance, disagreement     one bar per strategy
  ur, rr, uragg, vs          one group per rule, one bar per strategy
  cc_approvals               CC committee approval scores by rank,
                             one bar per strategy
"""

import os
from typing import Dict, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from delib.harness import group_cells, present_rules, present_strategies, summarize_cells
from delib.records import RecordFormatError, RunRecord
from delib.report import OBJECTIVE_LABELS, EmptyRecordsError
from delib.types import STRATEGY_LABELS, DelibError, RuleName

FIGURES = ["variance", "ur", "rr", "uragg", "vs", "cc_approvals", "disagreement"]

STRATEGY_COLORS = {
    "initial": "#9E9E9E",
    "homogeneous": "#2962FF",
    "random": "#00C853",
    "heterogeneous": "#FF6D00",
    "iter_random": "#AA00FF",
    "iter_golfer": "#D50000",
    "large": "#37474F",
}

STYLE = {
    "font.family": "sans-serif",
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "delib",
    "svg.fonttype": "path",
}


class UnknownFigureError(DelibError):
    """Raised for a figure name outside FIGURES."""
    pass


def _grouped_bars(ax, group_labels: Sequence[str], series: Dict[str, Sequence[float]],
                  errors: Dict[str, Sequence[float]]):
    n_series = max(len(series), 1)
    width = 0.8 / n_series
    x = np.arange(len(group_labels))
    for i, (strategy, values) in enumerate(series.items()):
        ax.bar(x + (i - (n_series - 1) / 2) * width, values, width,
               yerr=errors.get(strategy), capsize=2,
               label=STRATEGY_LABELS.get(strategy, strategy),
               color=STRATEGY_COLORS.get(strategy))
    ax.set_xticks(x, group_labels)


def _per_strategy(records: Sequence[RunRecord], objective: str, ax):
    cells = summarize_cells(group_cells(records))
    rule = present_rules(records)[0]
    strategies = present_strategies(records)
    series = {s: [cells[(s, rule)][objective].mean] for s in strategies if (s, rule) in cells}
    errors = {s: [cells[(s, rule)][objective].stderr] for s in series}
    _grouped_bars(ax, [""], series, errors)


def _per_rule(records: Sequence[RunRecord], objective: str, ax):
    cells = summarize_cells(group_cells(records))
    rules = present_rules(records)
    series, errors = {}, {}
    for s in present_strategies(records):
        series[s] = [cells[(s, r)][objective].mean if (s, r) in cells else np.nan for r in rules]
        errors[s] = [cells[(s, r)][objective].stderr if (s, r) in cells else 0.0 for r in rules]
    _grouped_bars(ax, [r.upper() for r in rules], series, errors)


def _cc_approvals(records: Sequence[RunRecord], ax):
    cc = [r for r in records if r.rule == RuleName.CC.value]
    if not cc:
        raise RecordFormatError("records hold no CC committees")
    if any(not r.approvals for r in cc):
        raise RecordFormatError("records carry no committee approval scores (missing .jsonl twin?)")
    k = len(cc[0].approvals)
    series, errors = {}, {}
    for s in present_strategies(cc):
        rows = np.array([r.approvals for r in cc if r.strategy == s], dtype=float)
        series[s] = rows.mean(axis=0)
        errors[s] = rows.std(axis=0, ddof=1) / np.sqrt(len(rows)) if len(rows) > 1 else np.zeros(k)
    _grouped_bars(ax, [str(i) for i in range(1, k + 1)], series, errors)
    ax.set_xlabel("Committee member (by approval score)")


def plot_figure(records: Sequence[RunRecord], figure: str, path: str) -> str:
    """Write the named figure to path as SVG; returns path."""
    if figure not in FIGURES:
        raise UnknownFigureError(f"unknown figure '{figure}' (expected one of: {', '.join(FIGURES)})")
    if not records:
        raise EmptyRecordsError("no records to plot")

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        try:
            if figure in ("variance", "disagreement"):
                _per_strategy(records, figure, ax)
                ax.set_ylabel(OBJECTIVE_LABELS[figure])
            elif figure == "cc_approvals":
                _cc_approvals(records, ax)
                ax.set_ylabel("Approval score")
            else:
                _per_rule(records, figure, ax)
                ax.set_ylabel(OBJECTIVE_LABELS[figure])
            ax.legend(loc="upper left", bbox_to_anchor=(1.0, 1.0), frameon=False)
            fig.tight_layout()

            parent = os.path.dirname(path)
            if parent:
                os.makedirs(parent, exist_ok=True)
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return path
