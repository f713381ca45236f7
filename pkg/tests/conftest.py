"""Shared builders for hand-sized timelines used across the suite."""

from __future__ import annotations

from datetime import date, timedelta

import pytest

from affectpipe.core import (
    AffectReport,
    DailyFeatureVector,
    FeatureSchema,
    FeatureSpec,
    Modality,
    ParticipantTimeline,
    Provenance,
    TimelineDay,
    default_polarity,
    default_schema,
)

D0 = date(2020, 1, 1)

# Four features, one per texture we care about: two ring columns, one watch,
# one phone boolean.  Small enough that expected matrices fit in a docstring.
TINY_SCHEMA = FeatureSchema(
    (
        FeatureSpec("sleep_deep", Modality.RING, "continuous", "min"),
        FeatureSpec("heart_rate", Modality.RING, "continuous", "bpm"),
        FeatureSpec("walk_steps", Modality.WATCH, "continuous", "count"),
        FeatureSpec("main_activity", Modality.PHONE, "boolean", "fraction"),
    )
)


def make_day(schema, day, values, affect=None, provenance=None):
    """TimelineDay with MEASURED/MISSING provenance inferred from None."""
    vals = {fid: values.get(fid) for fid in schema.feature_ids()}
    prov = {
        fid: (Provenance.MISSING if v is None else Provenance.MEASURED)
        for fid, v in vals.items()
    }
    if provenance:
        prov.update(provenance)
    return TimelineDay(
        day=day,
        features=DailyFeatureVector(day=day, values=vals, provenance=prov),
        affect=affect,
    )


def make_report(day, pa=50.0, na=20.0, polarity=None):
    """Complete 20-item report whose composites equal pa/na exactly."""
    polarity = polarity or default_polarity()
    items = {item: float(pa) for item in polarity.positive}
    items.update({item: float(na) for item in polarity.negative})
    return AffectReport.from_items(day, items, polarity)


def make_timeline(
    pid,
    values_by_day,
    schema=TINY_SCHEMA,
    affect_by_index=None,
    start=D0,
    dates=None,
):
    """Timeline from a list of per-day value dicts (index i -> start + i days).

    ``dates`` overrides the consecutive-day default so calendar gaps can be
    constructed.  ``affect_by_index`` maps list index -> AffectReport factory
    args (pa, na) or a prebuilt report.
    """
    affect_by_index = affect_by_index or {}
    days = []
    for i, values in enumerate(values_by_day):
        d = dates[i] if dates is not None else start + timedelta(days=i)
        affect = affect_by_index.get(i)
        if isinstance(affect, tuple):
            affect = make_report(d, *affect)
        days.append(make_day(schema, d, values, affect=affect))
    return ParticipantTimeline(pid, tuple(days))


def series_timeline(pid, series, fid="sleep_deep", schema=TINY_SCHEMA, **kw):
    """Timeline varying one feature; the other columns stay measured constants."""
    rows = []
    for v in series:
        base = {"sleep_deep": 30.0, "heart_rate": 60.0, "walk_steps": 5000.0, "main_activity": 0.5}
        base[fid] = v
        rows.append(base)
    return make_timeline(pid, rows, schema=schema, **kw)


@pytest.fixture
def schema():
    return default_schema()


@pytest.fixture
def polarity():
    return default_polarity()


@pytest.fixture
def tiny_schema():
    return TINY_SCHEMA
