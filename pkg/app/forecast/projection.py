"""Dated projections of fitted growth curves, inflection dates and divergence."""

import datetime as dt
import enum
import logging
from datetime import date, timedelta
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from app.config import DIVERGENCE_RATIO, PROJECTION_STEP_DAYS
from app.dataset.timescale import DEFAULT_SCALE, DateLike, TimeScale, to_date
from app.errors import DomainError, GridMismatch, NonPositiveSlope
from app.fitting.results import FitKind, GrowthFit
from app.growth.params import GrowthParams, LinkKind

logger = logging.getLogger(__name__)


class Component(str, enum.Enum):
    OVERALL = "overall"
    BASE = "base"
    REASONING = "reasoning"


class InflectionComponent(str, enum.Enum):
    BASE = "BASE"
    REASONING = "REASONING"
    SINGLE_CURVE = "SINGLE_CURVE"


class ForecastSeries(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    points: Tuple[Tuple[date, float], ...]
    fit_kind: str

    @field_validator("points")
    @classmethod
    def _increasing_and_positive(cls, points):
        dates = [p[0] for p in points]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ValueError("forecast dates must be strictly increasing")
        if any(not (np.isfinite(h) and h > 0) for _, h in points):
            raise ValueError("forecast horizons must be finite and positive")
        return points

    @property
    def dates(self) -> List[date]:
        return [p[0] for p in self.points]

    @property
    def values(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=float)


class InflectionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    component: InflectionComponent
    date: dt.date
    reference_date: dt.date
    in_past: bool


def inflection_date(slope: float, intercept: float, scale: TimeScale = DEFAULT_SCALE) -> date:
    """Date where sigmoid(slope * d + intercept) crosses its midpoint."""
    if not slope > 0:
        raise NonPositiveSlope(f"inflection needs a positive slope, got {slope}")
    return scale.decode(-intercept / slope)


def date_grid(start: DateLike, end: DateLike, step_days: int = PROJECTION_STEP_DAYS) -> List[date]:
    start, end = to_date(start), to_date(end)
    if not start < end:
        raise DomainError(f"projection start {start} must precede end {end}")
    if step_days < 1:
        raise DomainError(f"step_days must be positive, got {step_days}")
    n = (end - start).days // step_days + 1
    return [start + timedelta(days=i * step_days) for i in range(n)]


def project(
    fit: GrowthFit,
    start: DateLike,
    end: DateLike,
    step_days: int = PROJECTION_STEP_DAYS,
    k_thinking: int = 0,
    scale: TimeScale = DEFAULT_SCALE,
    component: Component = Component.OVERALL,
    label: Optional[str] = None,
) -> ForecastSeries:
    """
    Evaluate a fitted curve on a dated grid.

    Args:
        fit: Fitted specification.
        start, end: Grid bounds; `end` is included when it falls on the grid.
        step_days: Grid spacing.
        k_thinking: Regime of multiplicative fits for the OVERALL component.
        component: BASE gives gamma1 * b(d); REASONING freezes the base at the
            latest observed model and lets r(d) vary.
    """
    dates = date_grid(start, end, step_days)
    d = scale.encode_many(dates)
    component = Component(component)
    if component == Component.OVERALL:
        values = fit.predict(d, k_thinking) if fit.is_multiplicative else fit.predict(d)
    elif component == Component.BASE:
        values = fit.predict_base(d)
    else:
        values = fit.predict_reasoning(d)
    label = label or (
        fit.specification.value if component == Component.OVERALL else f"{fit.specification.value}:{component.value}"
    )
    return ForecastSeries(
        label=label,
        points=tuple((day, float(v)) for day, v in zip(dates, np.atleast_1d(values))),
        fit_kind=fit.kind.value,
    )


def divergence_date(a: ForecastSeries, b: ForecastSeries, ratio_threshold: float = DIVERGENCE_RATIO) -> Optional[date]:
    """First grid date where the two series differ by more than `ratio_threshold` either way."""
    if not ratio_threshold > 1:
        raise DomainError(f"ratio threshold must exceed 1, got {ratio_threshold}")
    if a.dates != b.dates:
        raise GridMismatch(f"series '{a.label}' and '{b.label}' are on different date grids")
    ratio = a.values / b.values
    beyond = np.flatnonzero(np.maximum(ratio, 1.0 / ratio) > ratio_threshold)
    return a.dates[int(beyond[0])] if beyond.size else None


def inflection_reports(
    fit: GrowthFit, reference: DateLike, scale: TimeScale = DEFAULT_SCALE
) -> List[InflectionReport]:
    """Inflection of every sigmoid component of a fit, dated against `reference`."""
    reference = to_date(reference)
    pairs = []
    if fit.kind == FitKind.MSE_SIGMOID:
        pairs.append((InflectionComponent.SINGLE_CURVE, fit.params.delta1, fit.params.delta2))
    elif fit.kind == FitKind.MAP_JOINT and isinstance(fit.params, GrowthParams) and fit.params.link == LinkKind.SIGMOID:
        pairs.append((InflectionComponent.BASE, *fit.params.base_params))
        pairs.append((InflectionComponent.REASONING, *fit.params.reasoning_params))

    reports = []
    for component, slope, intercept in pairs:
        day = inflection_date(slope, intercept, scale)
        reports.append(InflectionReport(component=component, date=day, reference_date=reference, in_past=day < reference))
    return reports
