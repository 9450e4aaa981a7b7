"""Correlation, confusion, and ranking metrics for classifier evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import FeatureRecord
from .models.base import TrainedModel

DEFAULT_SWEEP_GRID = tuple(round(0.1 + 0.05 * i, 2) for i in range(17))

EXPLORE_COLUMNS = (
    "air_temperature",
    "pavement_temperature",
    "air_pressure",
    "precipitation",
    "visibility",
    "speed_current",
    "speed_monthly_avg",
    "speed_reference",
    "speed_ratio",
    "frc_level",
    "time_of_day",
    "day_of_week",
    "day_of_year",
    "daylight",
)


class UndefinedCorrelationError(ValueError):
    """Raised when Pearson correlation is requested for a constant series."""


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"series must be 1-D and equal length, got {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError(f"need at least 2 points, got {x.size}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(dx @ dx))
    sy = float(np.sqrt(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant series")
    return float(dx @ dy) / (sx * sy)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(labels, predictions) -> ConfusionCounts:
    y = np.asarray(labels).astype(bool)
    p = np.asarray(predictions).astype(bool)
    if y.shape != p.shape or y.ndim != 1:
        raise ValueError(f"labels/predictions must be 1-D and equal length, got {y.shape} vs {p.shape}")
    if y.size == 0:
        raise ValueError("cannot build confusion counts from empty input")
    return ConfusionCounts(
        tp=int(np.count_nonzero(y & p)),
        fp=int(np.count_nonzero(~y & p)),
        tn=int(np.count_nonzero(~y & ~p)),
        fn=int(np.count_nonzero(y & ~p)),
    )


def accuracy(c: ConfusionCounts) -> float:
    return (c.tp + c.tn) / c.total


def precision(c: ConfusionCounts) -> float | None:
    """None when no positive predictions exist (undefined, not zero)."""
    denom = c.tp + c.fp
    return c.tp / denom if denom else None


def recall(c: ConfusionCounts) -> float | None:
    """None when no positive labels exist (undefined, not zero)."""
    denom = c.tp + c.fn
    return c.tp / denom if denom else None


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]
    auc: float

    def __post_init__(self):
        if not self.points or self.points[0] != (0.0, 0.0) or self.points[-1] != (1.0, 1.0):
            raise ValueError("ROC curve must run from (0,0) to (1,1)")
        fprs = [p[0] for p in self.points]
        tprs = [p[1] for p in self.points]
        if any(b < a for a, b in zip(fprs, fprs[1:])) or any(b < a for a, b in zip(tprs, tprs[1:])):
            raise ValueError("ROC coordinates must be non-decreasing")
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc out of range: {self.auc}")


def roc_auc(labels, scores) -> RocCurve:
    """ROC over all distinct score thresholds; trapezoid AUC (ties credited 1/2)."""
    y = np.asarray(labels).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape or y.ndim != 1:
        raise ValueError(f"labels/scores must be 1-D and equal length, got {y.shape} vs {s.shape}")
    n_pos = int(np.count_nonzero(y))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC requires both classes present")
    order = np.argsort(-s, kind="stable")
    ss = s[order]
    ys = y[order]
    ends = np.append(np.nonzero(np.diff(ss) != 0.0)[0], ss.size - 1)
    cum_tp = np.cumsum(ys)
    cum_fp = np.cumsum(~ys)
    fpr = cum_fp[ends] / n_neg
    tpr = cum_tp[ends] / n_pos
    points = [(0.0, 0.0)] + [(float(a), float(b)) for a, b in zip(fpr, tpr)]
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(points=tuple(points), auc=float(auc))


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    accuracy: float
    precision: float | None
    recall: float | None


def threshold_sweep(model: TrainedModel, X, y, thresholds: Sequence[float] = DEFAULT_SWEEP_GRID,
                    schema=None) -> list[SweepRow]:
    """Confusion metrics per threshold; scores computed once, thresholded per row."""
    thresholds = [float(t) for t in thresholds]
    if any(not 0.0 < t < 1.0 for t in thresholds):
        raise ValueError(f"thresholds must lie in (0, 1), got {thresholds}")
    scores = np.atleast_1d(model.predict_proba(X, schema=schema))
    yb = np.asarray(y).astype(bool)
    rows = []
    for t in thresholds:
        c = confusion(yb, scores >= t)
        rows.append(SweepRow(threshold=t, accuracy=accuracy(c),
                             precision=precision(c), recall=recall(c)))
    return rows


def correlation_ranking(columns: Sequence[tuple[str, np.ndarray]], label) -> list[tuple[str, float | None]]:
    """Per-column Pearson vs. label, sorted by |rho| descending.

    Constant columns are kept with rho = None and sort after all defined values.
    """
    y = np.asarray(label, dtype=np.float64)
    out: list[tuple[str, float | None]] = []
    for name, col in columns:
        try:
            rho = pearson(np.asarray(col, dtype=np.float64), y)
        except UndefinedCorrelationError:
            rho = None
        out.append((name, rho))
    out.sort(key=lambda item: -abs(item[1]) if item[1] is not None else np.inf)
    return out


def explore_columns(records: Sequence[FeatureRecord]) -> tuple[list[tuple[str, np.ndarray]], np.ndarray]:
    """Named measurement columns plus label array for the correlation report."""
    if not records:
        raise ValueError("no records to analyze")
    cols = {name: np.empty(len(records), dtype=np.float64) for name in EXPLORE_COLUMNS}
    label = np.empty(len(records), dtype=np.float64)
    for i, r in enumerate(records):
        cols["air_temperature"][i] = r.air_temperature
        cols["pavement_temperature"][i] = r.pavement_temperature
        cols["air_pressure"][i] = r.air_pressure
        cols["precipitation"][i] = r.precipitation
        cols["visibility"][i] = r.visibility
        cols["speed_current"][i] = r.speed_current
        cols["speed_monthly_avg"][i] = r.speed_monthly_avg
        cols["speed_reference"][i] = r.speed_reference
        cols["speed_ratio"][i] = r.speed_current / r.speed_reference
        cols["frc_level"][i] = r.frc_level
        cols["time_of_day"][i] = r.tod_seconds
        cols["day_of_week"][i] = r.day_of_week
        cols["day_of_year"][i] = r.day_of_year
        cols["daylight"][i] = r.daylight
        label[i] = 1.0 if r.label else 0.0
    return [(name, cols[name]) for name in EXPLORE_COLUMNS], label


def feature_correlation_report(records: Sequence[FeatureRecord]) -> list[tuple[str, float | None]]:
    """Signed per-feature correlation with the label, strongest magnitude first."""
    columns, label = explore_columns(records)
    return correlation_ranking(columns, label)
