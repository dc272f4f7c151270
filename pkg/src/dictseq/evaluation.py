"""Token-level per-label precision/recall/F1 with macro averaging.

Scoring collapses BIO prefixes, so B-SYM and I-SYM both count as SYM and the
O class is scored like any other label; the macro row is the unweighted mean
over every listed label including O. Undefined ratios (zero denominator)
score 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .corpus import Concept, LabeledSequence
from .errors import ContractViolation

# Render order mirrors the published tables.
LABEL_ORDER = [c.value for c in Concept] + ["O"]


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    per_label: dict[str, LabelMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float

    def labels(self) -> list[str]:
        known = [l for l in LABEL_ORDER if l in self.per_label]
        extra = sorted(set(self.per_label) - set(known))
        return known + extra

    def to_json(self, meta: dict | None = None) -> dict:
        return {
            "labels": {
                name: {
                    "p": m.precision,
                    "r": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for name, m in self.per_label.items()
            },
            "macro": {
                "p": self.macro_precision,
                "r": self.macro_recall,
                "f1": self.macro_f1,
            },
            "meta": meta or {},
        }

    @classmethod
    def from_json(cls, data: dict) -> "MetricsReport":
        per_label = {
            name: LabelMetrics(v["p"], v["r"], v["f1"], v["support"])
            for name, v in data["labels"].items()
        }
        macro = data["macro"]
        return cls(per_label, macro["p"], macro["r"], macro["f1"])


def _ratio(num: int, denom: int) -> float:
    return num / denom if denom else 0.0


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _collapse(seq: LabeledSequence) -> list[str]:
    if seq.labels is None:
        raise ContractViolation(f"sequence {seq.id!r} has no labels")
    return ["O" if t.position == "O" else t.concept.value for t in seq.labels]


def evaluate(
    gold: Sequence[LabeledSequence], predicted: Sequence[LabeledSequence]
) -> MetricsReport:
    """Score aligned corpora token by token.

    Labels with neither gold nor predicted support are left out of the macro;
    a label with support but an undefined ratio contributes 0 for that metric.
    """
    if len(gold) != len(predicted):
        raise ContractViolation(
            f"corpus sizes differ: {len(gold)} gold vs {len(predicted)} predicted"
        )
    tp: dict[str, int] = {}
    gold_count: dict[str, int] = {}
    pred_count: dict[str, int] = {}
    for g, p in zip(gold, predicted):
        if g.id != p.id:
            raise ContractViolation(f"misaligned corpora at id {g.id!r} vs {p.id!r}")
        if len(g.tokens) != len(p.tokens):
            raise ContractViolation(f"token count mismatch for id {g.id!r}")
        for gl, pl in zip(_collapse(g), _collapse(p)):
            gold_count[gl] = gold_count.get(gl, 0) + 1
            pred_count[pl] = pred_count.get(pl, 0) + 1
            if gl == pl:
                tp[gl] = tp.get(gl, 0) + 1

    labels = set(gold_count) | set(pred_count)
    per_label = {}
    for name in labels:
        p = _ratio(tp.get(name, 0), pred_count.get(name, 0))
        r = _ratio(tp.get(name, 0), gold_count.get(name, 0))
        per_label[name] = LabelMetrics(p, r, f1_score(p, r), gold_count.get(name, 0))
    n = len(per_label)
    macro_p = sum(m.precision for m in per_label.values()) / n if n else 0.0
    macro_r = sum(m.recall for m in per_label.values()) / n if n else 0.0
    macro_f = sum(m.f1 for m in per_label.values()) / n if n else 0.0
    return MetricsReport(per_label, macro_p, macro_r, macro_f)


def mean_report(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Arithmetic mean across reports (e.g. cross-validation folds); a label
    is averaged over the folds where it appears and supports are summed."""
    if not reports:
        raise ContractViolation("no reports to average")
    names: list[str] = []
    for r in reports:
        for name in r.per_label:
            if name not in names:
                names.append(name)
    per_label = {}
    for name in names:
        rows = [r.per_label[name] for r in reports if name in r.per_label]
        per_label[name] = LabelMetrics(
            sum(m.precision for m in rows) / len(rows),
            sum(m.recall for m in rows) / len(rows),
            sum(m.f1 for m in rows) / len(rows),
            sum(m.support for m in rows),
        )
    k = len(reports)
    return MetricsReport(
        per_label,
        sum(r.macro_precision for r in reports) / k,
        sum(r.macro_recall for r in reports) / k,
        sum(r.macro_f1 for r in reports) / k,
    )


def round2(value: float) -> str:
    return str(Decimal(value).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def render_table(
    reports: Sequence[MetricsReport], model_names: Sequence[str]
) -> tuple[str, dict]:
    """Text table (2-decimal half-up) plus a full-precision JSON payload."""
    if len(reports) != len(model_names):
        raise ContractViolation("one model name per report required")
    labels: list[str] = []
    for r in reports:
        for name in r.labels():
            if name not in labels:
                labels.append(name)
    header = ["Label"] + [f"{m}:{c}" for m in model_names for c in ("P", "R", "F1")]
    rows = [header]
    for label in labels:
        row = [label]
        for r in reports:
            m = r.per_label.get(label)
            row.extend(
                [round2(m.precision), round2(m.recall), round2(m.f1)] if m else ["-"] * 3
            )
        rows.append(row)
    macro = ["MACRO"]
    for r in reports:
        macro.extend([round2(r.macro_precision), round2(r.macro_recall), round2(r.macro_f1)])
    rows.append(macro)

    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    payload = {
        "models": {
            name: report.to_json() for name, report in zip(model_names, reports)
        }
    }
    return "\n".join(lines), payload
