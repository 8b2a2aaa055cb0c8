"""Recall and precision per operator, per category and overall.

Values are exact :class:`fractions.Fraction` ratios in [0, 1]; ``None``
means undefined (no positives to divide by).  Rounding happens only when a
value is displayed.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .errors import IoFailure
from .harness import Outcome, PathTally, ResultRecord
from .mutators.path import path_group
from .store import MutantRecord
from .validation import CATEGORIES, OPERATORS

Ratio = Optional[Fraction]

_COUNTS = {Outcome.KILLED: "tp", Outcome.LIVE: "fn", Outcome.FALSE_POSITIVE: "fp", Outcome.TRUE_NEGATIVE: "tn"}


@dataclass(frozen=True)
class PrecisionRecall:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    executed: int = 0
    excluded: int = 0

    @property
    def recall(self) -> Ratio:
        return Fraction(self.tp, self.tp + self.fn) if self.tp + self.fn else None

    @property
    def precision(self) -> Ratio:
        return Fraction(self.tp, self.tp + self.fp) if self.tp + self.fp else None

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "executed": self.executed, "excluded": self.excluded,
            "recall": ratio_json(self.recall), "precision": ratio_json(self.precision),
        }


def per_operator(items: Iterable) -> PrecisionRecall:
    """Tally outcomes (Killed->TP, Live->FN, ...) or path tallies into one row.

    *items* holds :class:`Outcome` values (or their names), :class:`PathTally`
    objects, or a mapping of counts such as ``{"tp": 81, "fp": 81}``.
    """
    if isinstance(items, Mapping):
        c = {k.lower(): int(v) for k, v in items.items()}
        n = c.get("tp", 0) + c.get("fp", 0) + c.get("fn", 0) + c.get("tn", 0)
        return PrecisionRecall(c.get("tp", 0), c.get("fp", 0), c.get("fn", 0), c.get("tn", 0), n, 0)
    counts = defaultdict(int)
    executed = excluded = 0
    for it in items:
        if isinstance(it, PathTally):
            for k in ("tp", "fp", "fn", "tn"):
                counts[k] += getattr(it, k)
            executed += 1
            continue
        outcome = Outcome(it)
        if outcome is Outcome.NOT_EXECUTED:
            excluded += 1
            continue
        executed += 1
        counts[_COUNTS[outcome]] += 1
    return PrecisionRecall(counts["tp"], counts["fp"], counts["fn"], counts["tn"], executed, excluded)


def mean(values: Sequence[Ratio]) -> Ratio:
    """Unweighted mean; undefined if any value is undefined or there are none."""
    if not values or any(v is None for v in values):
        return None
    return sum((_frac(v) for v in values), Fraction(0)) / len(values)


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(str(v))


def overall(category_values: Sequence[tuple[Ratio, Ratio]]) -> tuple[Ratio, Ratio]:
    """(recall, precision) of exactly three category rows, equally weighted."""
    if len(category_values) != 3:
        raise ValueError("overall needs exactly three category rows")
    return mean([r for r, _ in category_values]), mean([p for _, p in category_values])


@dataclass(frozen=True)
class CategoryRow:
    category: str
    operators: tuple[str, ...]
    recall: Ratio
    precision: Ratio


def category_row(category: str, rows: Mapping[str, PrecisionRecall]) -> Optional[CategoryRow]:
    """Mean over the category's operators that have at least one executed outcome."""
    ops = tuple(op for op in CATEGORIES[category] if op in rows and rows[op].executed)
    if not ops:
        return None
    return CategoryRow(category, ops, mean([rows[o].recall for o in ops]), mean([rows[o].precision for o in ops]))


@dataclass(frozen=True)
class Aggregate:
    categories: dict[str, CategoryRow]
    recall: Ratio
    precision: Ratio

    @property
    def complete(self) -> bool:
        return len(self.categories) == 3


def aggregate(rows: Mapping[str, PrecisionRecall]) -> Aggregate:
    cats = {c: r for c in CATEGORIES if (r := category_row(c, rows)) is not None}
    if len(cats) == 3:
        rec, prec = overall([(cats[c].recall, cats[c].precision) for c in CATEGORIES])
    else:
        rec = prec = None
    return Aggregate(cats, rec, prec)


def display(value: Ratio) -> str:
    """Percentage with one decimal, rounded half-up; undefined prints as ``0.0``."""
    if value is None:
        return "0.0"
    pct = Decimal(value.numerator * 100) / Decimal(value.denominator)
    return str(pct.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def ratio_json(value: Ratio):
    if value is None:
        return "undefined"
    return {"numerator": value.numerator, "denominator": value.denominator,
            "decimal": round(value.numerator / value.denominator, 6)}


# -- reports ---------------------------------------------------------------------


@dataclass
class MetricsReport:
    mode: str
    tools: list[str]
    operators: dict[str, dict[str, PrecisionRecall]]  # tool -> operator -> row
    aggregates: dict[str, Aggregate]
    groups: dict[str, dict[int, PrecisionRecall]] = field(default_factory=dict)
    cells: dict[str, dict[str, str]] = field(default_factory=dict)  # app -> column -> cell
    columns: list[str] = field(default_factory=list)


def _column(row: ResultRecord) -> str:
    label = row.operator + (f" {row.variant}" if row.variant else "")
    if row.mode != "pairwise":
        label += f" {row.role}"
    return f"{label} ({row.tool})"


def _column_order(col: str, tools: list[str]):
    head, tool = col.rsplit(" (", 1)
    parts = head.split(" ")
    op = parts[0]
    return (OPERATORS.index(op) if op in OPERATORS else len(OPERATORS), parts[1:], tools.index(tool[:-1]))


def build_report(rows: Iterable[ResultRecord], records: Iterable[MutantRecord] = ()) -> MetricsReport:
    """Reduce result rows (one mode) into metrics plus the app x column cell matrix.

    *records* (the manifest) adds ``N/A`` cells for operators that were not
    possible on an app.
    """
    rows = sorted(rows, key=lambda r: (r.tool, r.source_app, r.operator, r.variant, r.role, r.mutant_id))
    modes = {r.mode for r in rows}
    if len(modes) > 1:
        raise ValueError(f"results mix modes: {sorted(modes)}")
    mode = modes.pop() if modes else "per-file"
    tools = sorted({r.tool for r in rows})
    by_op: dict[str, dict[str, list]] = defaultdict(lambda: defaultdict(list))
    by_group: dict[str, dict[int, list]] = defaultdict(lambda: defaultdict(list))
    cells: dict[str, dict[str, str]] = defaultdict(dict)
    for r in rows:
        outcome = Outcome(r.outcome)
        if mode == "path-effect":
            item = PathTally(**r.tally) if outcome is not Outcome.NOT_EXECUTED else outcome
            g = path_group(r.operator, r.variant)
            if g is not None:
                by_group[r.tool][g].append(item)
        else:
            item = outcome
        by_op[r.tool][r.operator].append(item)
        col = _column(r)
        cells[r.source_app][col] = outcome.cell
        if mode == "path-effect" and r.tally:
            for k in ("tp", "fp", "fn", "tn"):
                cells[r.source_app][f"{col} {k.upper()}"] = str(r.tally[k]) if outcome is not Outcome.NOT_EXECUTED else ""

    operators = {t: {op: per_operator(items) for op, items in sorted(by_op[t].items())} for t in tools}
    groups = {t: {g: per_operator(items) for g, items in sorted(by_group[t].items())} for t in by_group}
    aggregates = {t: aggregate(operators[t]) for t in tools}

    columns = sorted({c for app in cells.values() for c in app if not c.endswith((" TP", " FP", " FN", " TN"))},
                     key=lambda c: _column_order(c, tools))
    evaluated = {r.operator for r in rows}
    for rec in records:
        if rec.generated or rec.operator not in evaluated:
            continue
        for t in tools:
            label = rec.operator + (f" {rec.variant}" if rec.variant else "") + f" ({t})"
            stem = label.rsplit(" (", 1)[0] + " "
            matching = [c for c in columns if c.startswith(stem) and c.endswith(f"({t})")]
            for c in matching or [label]:
                cells[rec.source_app][c] = "N/A"
                if c not in columns:
                    columns.append(c)
    columns.sort(key=lambda c: _column_order(c, tools))
    if mode == "path-effect":
        columns = [x for c in columns for x in ([c] + [f"{c} {k}" for k in ("TP", "FP", "FN", "TN")])]
    return MetricsReport(mode, tools, operators, aggregates, groups, dict(cells), columns)


def render_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["app"] + report.columns)
    for app in sorted(report.cells):
        writer.writerow([app] + [report.cells[app].get(c, "") for c in report.columns])
    return buf.getvalue()


def _agg_json(agg: Aggregate) -> dict:
    return {
        "categories": {
            c: {"operators": list(row.operators), "recall": ratio_json(row.recall),
                "precision": ratio_json(row.precision)}
            for c, row in agg.categories.items()
        },
        "overall": {"recall": ratio_json(agg.recall), "precision": ratio_json(agg.precision)},
    }


def render_summary(report: MetricsReport) -> dict:
    tools = {}
    for t in report.tools:
        entry = {"operators": {op: row.to_dict() for op, row in report.operators[t].items()}}
        entry.update(_agg_json(report.aggregates[t]))
        if t in report.groups:
            entry["groups"] = {str(g): row.to_dict() for g, row in report.groups[t].items()}
        tools[t] = entry
    return {"mode": report.mode, "tools": tools}


def render_table(report: MetricsReport) -> str:
    """Plain-text table of recall / precision per operator, category and overall."""
    lines = []
    for t in report.tools:
        lines.append(f"{t} ({report.mode})")
        for op, row in report.operators[t].items():
            lines.append(f"  {op:<6} {display(row.recall):>6} / {display(row.precision):<6}"
                         f" TP={row.tp} FP={row.fp} FN={row.fn} TN={row.tn} excluded={row.excluded}")
        for g, row in report.groups.get(t, {}).items():
            lines.append(f"  group {g} {display(row.recall):>6} / {display(row.precision):<6}"
                         f" TP={row.tp} FP={row.fp} FN={row.fn} TN={row.tn}")
        agg = report.aggregates[t]
        for c, row in agg.categories.items():
            lines.append(f"  {c:<8} {display(row.recall):>6} / {display(row.precision)}")
        if agg.complete:
            lines.append(f"  overall  {display(agg.recall):>6} / {display(agg.precision)}")
    return "\n".join(lines) + ("\n" if lines else "")


def write_report(report: MetricsReport, results_dir: str | Path) -> tuple[Path, Path]:
    """Write ``report.csv`` and ``summary.json`` into *results_dir*."""
    out = Path(results_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out / "report.csv", out / "summary.json"
        csv_path.write_text(render_csv(report), encoding="utf-8")
        json_path.write_text(json.dumps(render_summary(report), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return csv_path, json_path
