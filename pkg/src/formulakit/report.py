"""Aggregation of per-record scores into per-level summaries and
comparison tables.

The "Avg." column is the unweighted mean of the per-level means, matching
the reporting convention of multi-subset benchmark tables; errored
predictions are penalized (edit distance 1.0, CDM F1 0.0) rather than
excluded so failure modes show up in the numbers.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .client import EvalRecord
from .extract import SampleLevel
from .metrics import CdmScore, EdScore

AVG_SUBSET = "Avg."

_LEVEL_TITLES = {
    SampleLevel.LINE: "Line",
    SampleLevel.PARAGRAPH: "Paragraph",
    SampleLevel.PAGE: "Page",
}


class TableFormat(Enum):
    MARKDOWN = "markdown"
    CSV = "csv"


class EmptyInput(Exception):
    pass


@dataclass(frozen=True)
class MetricsSummary:
    subset: str
    n: int
    mean_ed: float
    mean_cdm_f1: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("summary requires n >= 1")
        if not (0.0 <= self.mean_ed <= 1.0 and 0.0 <= self.mean_cdm_f1 <= 1.0):
            raise ValueError("means must lie in [0, 1]")


def aggregate(
    evals: Sequence[EvalRecord],
    scores: Mapping[str, tuple[EdScore, CdmScore]],
) -> list[MetricsSummary]:
    """One summary per level present, plus an Avg. summary over the
    per-level means.

    Every eval record must either appear in ``scores`` or carry an error;
    errored records count with ED 1.0 and CDM F1 0.0.
    """
    if not evals:
        raise EmptyInput("no evaluation records")
    per_level: dict[SampleLevel, list[tuple[float, float]]] = {}
    for rec in evals:
        if rec.error is not None:
            ed, f1 = 1.0, 0.0
        else:
            if rec.record_id not in scores:
                raise ValueError(f"record {rec.record_id!r} has neither scores nor error")
            ed_score, cdm_score = scores[rec.record_id]
            ed, f1 = ed_score.value, cdm_score.f1
        per_level.setdefault(rec.level, []).append((ed, f1))
    summaries: list[MetricsSummary] = []
    for level in SampleLevel:
        values = per_level.get(level)
        if not values:
            continue
        n = len(values)
        summaries.append(
            MetricsSummary(
                subset=_LEVEL_TITLES[level],
                n=n,
                mean_ed=sum(v[0] for v in values) / n,
                mean_cdm_f1=sum(v[1] for v in values) / n,
            )
        )
    summaries.append(
        MetricsSummary(
            subset=AVG_SUBSET,
            n=sum(s.n for s in summaries),
            mean_ed=sum(s.mean_ed for s in summaries) / len(summaries),
            mean_cdm_f1=sum(s.mean_cdm_f1 for s in summaries) / len(summaries),
        )
    )
    return summaries


def _as_systems(
    summaries: Mapping[str, Sequence[MetricsSummary]] | Sequence[MetricsSummary],
) -> dict[str, Sequence[MetricsSummary]]:
    if isinstance(summaries, Mapping):
        return dict(summaries)
    return {"system": summaries}


def _column_order(systems: Mapping[str, Sequence[MetricsSummary]]) -> list[str]:
    order: list[str] = []
    for rows in systems.values():
        for s in rows:
            if s.subset != AVG_SUBSET and s.subset not in order:
                order.append(s.subset)
    order.append(AVG_SUBSET)
    return order


def render_table(
    summaries: Mapping[str, Sequence[MetricsSummary]] | Sequence[MetricsSummary],
    format: TableFormat = TableFormat.MARKDOWN,
    *,
    metric: str = "mean_ed",
    higher_is_better: bool = False,
) -> str:
    """Render one metric as a comparison table.

    Columns are the subsets in first-seen order with Avg. last; values use
    3-decimal fixed formatting.  Markdown bolds the best value per column
    when more than one system is present; CSV never adds markers.
    """
    systems = _as_systems(summaries)
    if not systems or all(not rows for rows in systems.values()):
        raise EmptyInput("nothing to render")
    columns = _column_order(systems)
    cells: dict[str, dict[str, float]] = {}
    for name, rows in systems.items():
        cells[name] = {s.subset: getattr(s, metric) for s in rows}
    best: dict[str, float] = {}
    for col in columns:
        values = [c[col] for c in cells.values() if col in c]
        if values:
            best[col] = max(values) if higher_is_better else min(values)
    bold = format is TableFormat.MARKDOWN and len(systems) > 1

    def fmt(name: str, col: str) -> str:
        if col not in cells[name]:
            return ""
        value = cells[name][col]
        text = f"{value:.3f}"
        if bold and value == best[col]:
            return f"**{text}**"
        return text

    header = ["System", *columns]
    rows_out = [[name, *(fmt(name, col) for col in columns)] for name in cells]
    if format is TableFormat.MARKDOWN:
        lines = [
            "| " + " | ".join(header) + " |",
            "| " + " | ".join("---" for _ in header) + " |",
        ]
        lines += ["| " + " | ".join(row) + " |" for row in rows_out]
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows_out)
    return buf.getvalue()
