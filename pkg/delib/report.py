"""
Delib Report — Table Dumps
============================

Plain-text tables computed from raw records:

  axioms        EJR% / PJR% per strategy for AV and CC
  minority      minority-supported candidates kept, per strategy and rule
  uragg ratios  AV's URagg per strategy, and its ratio to the
                initial MES and PAV URagg
  means         per-objective means (UR, RR, URagg, VS, variance,
                disagreement) per strategy and rule

Cells read `mean ± stderr`.
"""

from typing import Dict, List, Optional, Sequence, Tuple

from delib.harness import Summary, group_cells, present_rules, present_strategies, summarize_cells
from delib.records import RunRecord
from delib.types import INITIAL, STRATEGY_LABELS, DelibError, RuleName

FIGURE_OBJECTIVES = ["ur", "rr", "uragg", "vs", "variance", "disagreement"]

OBJECTIVE_LABELS = {
    "ur": "Utilitarian ratio",
    "rr": "Representation ratio",
    "uragg": "URagg",
    "vs": "Voter satisfaction",
    "variance": "Utility variance",
    "disagreement": "Inter-group disagreement",
    "minority_preserved": "Minority candidates kept",
    "ejr": "EJR",
    "pjr": "PJR",
}


class EmptyRecordsError(DelibError):
    """Raised when a record file holds no records."""
    pass


Cells = Dict[Tuple[str, str], Dict[str, Summary]]


def _label(strategy: str) -> str:
    return STRATEGY_LABELS.get(strategy, strategy)


def _rule_label(rule: str) -> str:
    return rule.upper()


def _fmt(summary: Optional[Summary], scale: float = 1.0, digits: int = 3) -> str:
    if summary is None or summary.count == 0:
        return "-"
    return f"{summary.mean * scale:.{digits}f} ± {summary.stderr * scale:.{digits}f}"


def render_table(title: str, header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(row[i])) for row in [header, *rows]) for i in range(len(header))]

    def line(cells):
        first = str(cells[0]).ljust(widths[0])
        rest = [str(c).rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join([first, *rest]).rstrip()

    rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
    return "\n".join([title, rule, line(header), rule, *(line(r) for r in rows), rule])


def _cell(cells: Cells, strategy: str, rule: str, objective: str) -> Optional[Summary]:
    return cells.get((strategy, rule), {}).get(objective)


# ── Tables ───────────────────────────────────────────────────

def axiom_table(cells: Cells, strategies: List[str], rules: List[str]) -> str:
    shown = [r for r in (RuleName.AV.value, RuleName.CC.value) if r in rules]
    header = ["Strategy"] + [f"{_rule_label(r)} {a}%" for r in shown for a in ("EJR", "PJR")]
    rows = []
    for s in strategies:
        rows.append([_label(s)] + [_fmt(_cell(cells, s, r, a), 100.0, 1)
                                   for r in shown for a in ("ejr", "pjr")])
    return render_table("EJR and PJR satisfaction", header, rows)


def minority_table(cells: Cells, strategies: List[str], rules: List[str]) -> str:
    header = ["Strategy"] + [_rule_label(r) for r in rules]
    rows = [[_label(s)] + [_fmt(_cell(cells, s, r, "minority_preserved"), digits=2) for r in rules]
            for s in strategies]
    return render_table("Minority-supported candidates in the committee", header, rows)


def uragg_ratio_rows(cells: Cells, strategies: List[str]) -> List[Tuple[str, float, Optional[float], Optional[float]]]:
    """(strategy, AV URagg mean, ratio to MES initial, ratio to PAV initial)."""
    av = RuleName.AV.value
    baselines = {}
    for rule in (RuleName.MES.value, RuleName.PAV.value):
        base = _cell(cells, INITIAL, rule, "uragg")
        baselines[rule] = base.mean if base is not None and base.mean > 0 else None
    out = []
    for s in strategies:
        summary = _cell(cells, s, av, "uragg")
        if summary is None:
            continue
        ratios = [summary.mean / b if b else None
                  for b in (baselines[RuleName.MES.value], baselines[RuleName.PAV.value])]
        out.append((s, summary.mean, ratios[0], ratios[1]))
    return out


def uragg_ratio_table(cells: Cells, strategies: List[str]) -> str:
    header = ["Strategy", "AV URagg", "/ MES initial", "/ PAV initial"]
    rows = []
    for s, _, to_mes, to_pav in uragg_ratio_rows(cells, strategies):
        rows.append([_label(s), _fmt(_cell(cells, s, RuleName.AV.value, "uragg")),
                     "-" if to_mes is None else f"{to_mes:.3f}",
                     "-" if to_pav is None else f"{to_pav:.3f}"])
    return render_table("AV URagg against the initial proportional rules", header, rows)


def means_table(cells: Cells, strategies: List[str], rules: List[str], objective: str) -> str:
    header = ["Strategy"] + [_rule_label(r) for r in rules]
    rows = [[_label(s)] + [_fmt(_cell(cells, s, r, objective), digits=4) for r in rules]
            for s in strategies]
    return render_table(OBJECTIVE_LABELS[objective], header, rows)


def render_report(records: Sequence[RunRecord]) -> str:
    if not records:
        raise EmptyRecordsError("no records to report on")
    cells = summarize_cells(group_cells(records))
    strategies = present_strategies(records)
    rules = present_rules(records)
    replications = len({r.replication for r in records})
    blocks = [f"{replications} replications, {len(strategies)} strategies, {len(rules)} rules",
              axiom_table(cells, strategies, rules),
              minority_table(cells, strategies, rules),
              uragg_ratio_table(cells, strategies)]
    blocks.extend(means_table(cells, strategies, rules, o) for o in FIGURE_OBJECTIVES)
    return "\n\n".join(blocks) + "\n"
