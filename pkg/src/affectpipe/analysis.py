"""Secondary analyses: feature-affect correlations and monthly t-values."""

from __future__ import annotations

import calendar
import csv
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import FeatureSchema, ParticipantTimeline
from .errors import InsufficientDataError
from .learners import TrainedModel

MIN_CORR_PAIRS = 3
MIN_GROUP_SCORES = 3


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson correlation; None when either side is constant (undefined)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson_r needs two equally long 1-d vectors")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt((xc * xc).sum()))
    sy = float(np.sqrt((yc * yc).sum()))
    if sx == 0.0 or sy == 0.0:
        return None
    r = float((xc * yc).sum() / (sx * sy))
    return min(1.0, max(-1.0, r))


def welch_t(a: Sequence[float], b: Sequence[float]) -> float:
    """Welch's two-sample t statistic (unequal variances, ddof=1).

    Equal-mean groups with zero pooled variance give 0 rather than 0/0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise InsufficientDataError("welch_t needs at least 2 values per group")
    se = float(np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size))
    diff = float(a.mean() - b.mean())
    if se == 0.0:
        if diff == 0.0:
            return 0.0
        return float(np.inf) if diff > 0 else float(-np.inf)
    return diff / se


def feature_affect_correlations(
    timelines: Sequence[ParticipantTimeline],
    schema: FeatureSchema,
    targets: Sequence[str] = ("pa", "na"),
    alignment: str = "next_day",
) -> dict[tuple[str, str], float | None]:
    """Pooled Pearson r between each feature at day t and each composite at
    the aligned day, skipping missing values on either side.

    Sparse (< 3 pairs) or constant columns record None: undefined, not 0.
    """
    lag = timedelta(days=1) if alignment == "next_day" else timedelta(0)
    out: dict[tuple[str, str], float | None] = {}
    pairs: dict[tuple[str, str], tuple[list[float], list[float]]] = {
        (fid, t): ([], []) for fid in schema.feature_ids() for t in targets
    }
    for timeline in timelines:
        day_map = timeline.day_map()
        for day in timeline.days:
            target_day = day_map.get(day.day + lag)
            if target_day is None or target_day.affect is None:
                continue
            composites = {"pa": target_day.affect.pa, "na": target_day.affect.na}
            for fid in schema.feature_ids():
                value = day.features.values.get(fid)
                if value is None:
                    continue
                for t in targets:
                    tv = composites.get(t)
                    if tv is None:
                        continue
                    xs, ys = pairs[(fid, t)]
                    xs.append(float(value))
                    ys.append(float(tv))
    for key, (xs, ys) in pairs.items():
        out[key] = pearson_r(xs, ys) if len(xs) >= MIN_CORR_PAIRS else None
    return out


def last_week_dates(year: int, month: int) -> list[date]:
    """The final 7 calendar days of a month."""
    last = calendar.monthrange(year, month)[1]
    return [date(year, month, day) for day in range(last - 6, last + 1)]


def monthly_scores(
    model: TrainedModel,
    timeline: ParticipantTimeline,
    feature_ids: Sequence[str] | None = None,
    alignment: str = "next_day",
) -> dict[str, np.ndarray]:
    """Predicted probabilities for the last 7 calendar days of each month.

    The score attributed to day d is the model output for d's aligned feature
    row (the previous day under next_day).  Days whose feature row is absent
    or incomplete contribute nothing.
    """
    if feature_ids is None:
        feature_ids = model.feature_ids
    if feature_ids is None:
        raise InsufficientDataError("model does not record its feature ids")
    lag = timedelta(days=1) if alignment == "next_day" else timedelta(0)
    day_map = timeline.day_map()
    months = sorted({(d.day.year, d.day.month) for d in timeline.days})
    out: dict[str, np.ndarray] = {}
    for year, month in months:
        rows = []
        for day in last_week_dates(year, month):
            feature_day = day_map.get(day - lag)
            if feature_day is None:
                continue
            row = [feature_day.features.values.get(fid) for fid in feature_ids]
            if any(v is None for v in row):
                continue
            rows.append(row)
        if rows:
            out[f"{year:04d}-{month:02d}"] = model.predict_proba(
                np.asarray(rows, dtype=float)
            )
    return out


@dataclass(frozen=True)
class MonthlyTValues:
    participant_id: str
    tvalues: Mapping[str, float]
    warnings: tuple[str, ...]


def tvalues_from_scores(
    scores_by_month: Mapping[str, np.ndarray],
    baseline_months: Sequence[str] | None = None,
) -> tuple[dict[str, float], tuple[str, ...]]:
    """|t| per month against the pooled last-week scores of the other months
    (or of an explicit baseline set, minus the month itself)."""
    usable = {m: s for m, s in scores_by_month.items() if s.size >= MIN_GROUP_SCORES}
    warnings = tuple(
        f"{m}: only {scores_by_month[m].size} scores, need {MIN_GROUP_SCORES}"
        for m in sorted(set(scores_by_month) - set(usable))
    )
    tvalues: dict[str, float] = {}
    for month, scores in sorted(usable.items()):
        if baseline_months is None:
            pool_months = [m for m in usable if m != month]
        else:
            pool_months = [m for m in baseline_months if m in usable and m != month]
        if not pool_months:
            warnings += (f"{month}: no baseline months available",)
            continue
        pooled = np.concatenate([usable[m] for m in pool_months])
        if pooled.size < MIN_GROUP_SCORES:
            warnings += (f"{month}: pooled baseline has {pooled.size} scores",)
            continue
        tvalues[month] = abs(welch_t(scores, pooled))
    return tvalues, warnings


def monthly_tvalues(
    model: TrainedModel,
    timeline: ParticipantTimeline,
    feature_ids: Sequence[str] | None = None,
    alignment: str = "next_day",
    baseline_months: Sequence[str] | None = None,
) -> MonthlyTValues:
    scores = monthly_scores(model, timeline, feature_ids, alignment)
    qualified = sum(1 for s in scores.values() if s.size >= MIN_GROUP_SCORES)
    if qualified < 2:
        raise InsufficientDataError(
            "need at least 2 months with 3+ scored days in the last week"
        )
    tvalues, warnings = tvalues_from_scores(scores, baseline_months)
    return MonthlyTValues(
        participant_id=timeline.participant_id, tvalues=tvalues, warnings=warnings
    )


def pooled_monthly_tvalues(
    per_participant_scores: Sequence[Mapping[str, np.ndarray]],
    baseline_months: Sequence[str] | None = None,
) -> tuple[dict[str, float], tuple[str, ...]]:
    """Cohort-level variant: concatenate every participant's scores per month
    before computing the same statistic."""
    merged: dict[str, list[np.ndarray]] = {}
    for scores in per_participant_scores:
        for month, arr in scores.items():
            merged.setdefault(month, []).append(arr)
    pooled = {m: np.concatenate(parts) for m, parts in merged.items()}
    return tvalues_from_scores(pooled, baseline_months)


# ---------------------------------------------------------------------------
# Heatmap-ready CSV outputs

def write_correlation_csv(
    path: Path | str,
    correlations: Mapping[tuple[str, str], float | None],
    feature_ids: Sequence[str],
    targets: Sequence[str] = ("pa", "na"),
) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["feature_id", *targets])
        for fid in feature_ids:
            row: list[str] = [fid]
            for t in targets:
                r = correlations.get((fid, t))
                row.append("nan" if r is None else repr(r))
            writer.writerow(row)


def write_tvalues_csv(
    path: Path | str, rows: Mapping[str, Mapping[str, float]]
) -> None:
    """participant x month matrix; blank-less nan cells for omitted months."""
    months = sorted({m for tv in rows.values() for m in tv})
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["participant_id", *months])
        for pid in sorted(rows):
            tv = rows[pid]
            writer.writerow(
                [pid, *("nan" if m not in tv else repr(tv[m]) for m in months)]
            )
