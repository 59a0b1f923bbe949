"""Evaluation surface: confusion matrices, precision/recall/F1, reports."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[true][predicted]; all entries non-negative."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("confusion matrix must be square")
        if np.any(c < 0):
            raise ValueError("confusion matrix entries must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def confusion(pairs: Sequence[tuple[int, int]], n_classes: int) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a K x K matrix."""
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    for true, pred in pairs:
        if not (0 <= true < n_classes and 0 <= pred < n_classes):
            raise ValueError(f"label out of range: ({true}, {pred})")
        counts[true, pred] += 1
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: list[ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    accuracy: float


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Per-class precision/recall/F1 plus macro and support-weighted averages.

    Zero denominators fall back to 0; classes with zero support are excluded
    from both averages.  F1 is computed as 2TP/(2TP+FP+FN), algebraically
    identical to 2PR/(P+R) including the fallback.
    """
    c = cm.counts
    k = cm.n_classes
    per_class: list[ClassMetrics] = []
    for i in range(k):
        tp = int(c[i, i])
        fp = int(c[:, i].sum() - c[i, i])
        fn = int(c[i, :].sum() - c[i, i])
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
        per_class.append(ClassMetrics(precision, recall, f1, tp + fn))

    support = np.array([m.support for m in per_class], dtype=np.float64)
    live = support > 0
    total = support[live].sum()

    def agg(values: np.ndarray) -> tuple[float, float]:
        if not live.any():
            return 0.0, 0.0
        macro = float(values[live].mean())
        weighted = float((values[live] * support[live]).sum() / total)
        return macro, weighted

    mp, wp = agg(np.array([m.precision for m in per_class]))
    mr, wr = agg(np.array([m.recall for m in per_class]))
    mf, wf = agg(np.array([m.f1 for m in per_class]))
    accuracy = float(np.trace(c) / cm.total) if cm.total else 0.0
    return MetricsReport(per_class, mp, mr, mf, wp, wr, wf, accuracy)


# ---------------------------------------------------------------------------
# Report files


def write_metrics_csv(report: MetricsReport, labels: Sequence[str], path: Path | str) -> None:
    lines = ["label,support,precision,recall,f1"]
    for label, m in zip(labels, report.per_class):
        lines.append(f"{label},{m.support},{m.precision:.9g},{m.recall:.9g},{m.f1:.9g}")
    lines.append(
        f"macro_avg,{sum(m.support for m in report.per_class)},"
        f"{report.macro_precision:.9g},{report.macro_recall:.9g},{report.macro_f1:.9g}"
    )
    lines.append(
        f"weighted_avg,{sum(m.support for m in report.per_class)},"
        f"{report.weighted_precision:.9g},{report.weighted_recall:.9g},{report.weighted_f1:.9g}"
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_confusion_csv(cm: ConfusionMatrix, labels: Sequence[str], path: Path | str) -> None:
    lines = ["true\\predicted," + ",".join(labels)]
    for label, row in zip(labels, cm.counts):
        lines.append(label + "," + ",".join(str(int(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary(report: MetricsReport, cm: ConfusionMatrix, labels: Sequence[str], path: Path | str) -> None:
    width = max(12, max((len(l) for l in labels), default=12)) + 2
    lines = [
        f"samples: {cm.total}",
        f"accuracy: {report.accuracy:.4f}",
        "",
        f"{'label':<{width}}{'support':>8}{'precision':>11}{'recall':>9}{'f1':>9}",
    ]
    for label, m in zip(labels, report.per_class):
        lines.append(f"{label:<{width}}{m.support:>8}{m.precision:>11.4f}{m.recall:>9.4f}{m.f1:>9.4f}")
    lines.append("")
    lines.append(
        f"{'macro avg':<{width}}{cm.total:>8}{report.macro_precision:>11.4f}"
        f"{report.macro_recall:>9.4f}{report.macro_f1:>9.4f}"
    )
    lines.append(
        f"{'weighted avg':<{width}}{cm.total:>8}{report.weighted_precision:>11.4f}"
        f"{report.weighted_recall:>9.4f}{report.weighted_f1:>9.4f}"
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
