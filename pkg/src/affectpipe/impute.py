"""Window-based imputation of missing daily feature values.

A missing value on day d is replaced by the unweighted mean of the *measured*
values of the same feature on calendar days d-2, d-1, d+1, d+2 (those that
exist and were measured).  The pass is single-shot: values imputed in this
pass never serve as donors.  Affect reports are left untouched.
"""

from __future__ import annotations

from dataclasses import replace
from datetime import timedelta

from .core import DailyFeatureVector, ParticipantTimeline, Provenance, TimelineDay

WINDOW_OFFSETS = (-2, -1, 1, 2)


def impute_feature(timeline: ParticipantTimeline, feature_id: str) -> ParticipantTimeline:
    """Impute one feature across a timeline; other features pass through."""
    return impute_all(timeline, feature_ids=(feature_id,))


def impute_all(
    timeline: ParticipantTimeline, feature_ids: tuple[str, ...] | None = None
) -> ParticipantTimeline:
    """Apply window imputation to every (or the named) feature columns.

    Donor lookup is by calendar date, not by row position: absent days in the
    timeline simply contribute no donors.
    """
    day_map = timeline.day_map()
    new_days: list[TimelineDay] = []
    for day in timeline.days:
        targets = feature_ids if feature_ids is not None else tuple(day.features.values)
        values = dict(day.features.values)
        provenance = dict(day.features.provenance)
        for fid in targets:
            if fid not in values or values[fid] is not None:
                continue
            donors: list[float] = []
            for off in WINDOW_OFFSETS:
                other = day_map.get(day.day + timedelta(days=off))
                if other is None:
                    continue
                if other.features.provenance.get(fid) is not Provenance.MEASURED:
                    continue
                donor = other.features.values.get(fid)
                if donor is not None:
                    donors.append(donor)
            if donors:
                values[fid] = sum(donors) / len(donors)
                provenance[fid] = Provenance.IMPUTED
        new_days.append(
            replace(
                day,
                features=DailyFeatureVector(day=day.day, values=values, provenance=provenance),
            )
        )
    return timeline.with_days(tuple(new_days))


def fill_residual_with_participant_mean(
    timeline: ParticipantTimeline, feature_ids: tuple[str, ...] | None = None
) -> ParticipantTimeline:
    """Fill values still missing after window imputation with the participant
    mean of measured values for that feature.  Features with no measured value
    anywhere stay missing."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for day in timeline.days:
        for fid, value in day.features.values.items():
            if value is None:
                continue
            if day.features.provenance[fid] is not Provenance.MEASURED:
                continue
            sums[fid] = sums.get(fid, 0.0) + value
            counts[fid] = counts.get(fid, 0) + 1

    new_days: list[TimelineDay] = []
    for day in timeline.days:
        targets = feature_ids if feature_ids is not None else tuple(day.features.values)
        values = dict(day.features.values)
        provenance = dict(day.features.provenance)
        for fid in targets:
            if values.get(fid) is None and counts.get(fid, 0) > 0:
                values[fid] = sums[fid] / counts[fid]
                provenance[fid] = Provenance.IMPUTED
        new_days.append(
            replace(
                day,
                features=DailyFeatureVector(day=day.day, values=values, provenance=provenance),
            )
        )
    return timeline.with_days(tuple(new_days))
