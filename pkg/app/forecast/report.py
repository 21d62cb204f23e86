"""Goodness-of-fit comparison across specifications and checks against reference dates."""

import logging
from datetime import date
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, ConfigDict

from app.config import REFERENCE_DATES
from app.dataset.records import ModelTable
from app.dataset.timescale import DEFAULT_SCALE, TimeScale
from app.errors import EmptyHorizons, ForecastError
from app.fitting.metrics import mse_against_horizons
from app.fitting.results import FitKind, GrowthFit, Specification
from app.forecast.projection import InflectionComponent, InflectionReport, inflection_reports
from app.growth.curves import doubling_time
from app.horizon.estimator import HorizonEstimate

logger = logging.getLogger(__name__)

_REFERENCE_KEYS = {
    InflectionComponent.SINGLE_CURVE: "single_curve_inflection",
    InflectionComponent.BASE: "base_inflection",
    InflectionComponent.REASONING: "reasoning_inflection",
}


class ReportRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    specification: Specification
    name: str
    mse: float
    converged: bool
    inflections: Tuple[InflectionReport, ...] = ()
    doubling_time_months: Optional[float] = None


class ReportTable(BaseModel):
    """Specifications ranked by MSE against the per-model horizons, best first."""

    model_config = ConfigDict(frozen=True)

    rows: Tuple[ReportRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def ranking(self) -> List[Specification]:
        return [r.specification for r in self.rows]

    def row(self, specification: Specification) -> Optional[ReportRow]:
        return next((r for r in self.rows if r.specification == Specification(specification)), None)

    def inflections(self) -> List[InflectionReport]:
        return [i for r in self.rows for i in r.inflections]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"specification": r.specification.value, "name": r.name, "mse": r.mse} for r in self.rows],
            columns=["specification", "name", "mse"],
        )


def comparison_report(
    fits: Sequence[GrowthFit],
    horizons: Sequence[HorizonEstimate],
    models: ModelTable,
    scale: TimeScale = DEFAULT_SCALE,
    reference: Optional[date] = None,
) -> ReportTable:
    """
    Rank fits by MSE against the horizons.

    Args:
        fits: At least one fitted specification.
        horizons: Per-model horizons used as ground truth.
        models: Metadata for every horizon's model.
        reference: Date that inflections are classified as past/future against;
            defaults to the latest model release.
    """
    if not fits:
        raise ForecastError("comparison report needs at least one fit")
    if not any(h.usable for h in horizons):
        raise EmptyHorizons("comparison report needs at least one usable horizon")
    reference = reference or models.latest_release()

    rows = []
    for fit in fits:
        doubling = None
        if fit.kind == FitKind.OLS_LOG and fit.params.beta1 > 0:
            doubling = doubling_time(fit.params)
        rows.append(
            ReportRow(
                specification=fit.specification,
                name=fit.specification.display_name,
                mse=mse_against_horizons(fit, horizons, models, scale),
                converged=fit.converged,
                inflections=tuple(inflection_reports(fit, reference, scale)),
                doubling_time_months=doubling,
            )
        )
    rows.sort(key=lambda r: (r.mse, r.specification.value))
    for rank, row in enumerate(rows, 1):
        logger.info(f"  {rank}. {row.name:<18} MSE {row.mse:10.2f}")
    return ReportTable(rows=tuple(rows))


def reference_deviations(
    table: ReportTable,
    divergence: Optional[date] = None,
    check_divergence: bool = False,
    references: Dict[str, Tuple[date, int]] = REFERENCE_DATES,
) -> List[Dict[str, object]]:
    """Inflection and divergence dates that fall outside their reference windows."""
    checks: List[Tuple[str, Optional[date]]] = []
    for row in table.rows:
        for inflection in row.inflections:
            checks.append((_REFERENCE_KEYS[inflection.component], inflection.date))
    if check_divergence:
        checks.append(("divergence", divergence))

    deviations = []
    for key, observed in checks:
        expected, tolerance = references[key]
        if observed is None:
            deviations.append({"check": key, "expected": expected.isoformat(), "observed": None, "tolerance_days": tolerance})
            continue
        offset = (observed - expected).days
        if abs(offset) > tolerance:
            deviations.append(
                {
                    "check": key,
                    "expected": expected.isoformat(),
                    "observed": observed.isoformat(),
                    "offset_days": offset,
                    "tolerance_days": tolerance,
                }
            )
    for deviation in deviations:
        logger.warning(f"✗ {deviation['check']} outside reference window: {deviation}")
    return deviations
