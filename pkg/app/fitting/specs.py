"""Dispatch from a named specification to its estimator."""

import logging
from typing import Optional, Sequence

import numpy as np

from app.dataset.records import ModelTable, RunTable
from app.dataset.timescale import DEFAULT_SCALE, TimeScale
from app.errors import DomainError
from app.fitting.config import FitConfig, PriorSpec, map_config
from app.fitting.map import map_fit
from app.fitting.metrics import horizon_points
from app.fitting.results import FitKind, GrowthFit, Specification
from app.fitting.trend import mse_sigmoid_fit, ols_log_fit
from app.horizon.estimator import HorizonEstimate

logger = logging.getLogger(__name__)


def fit_specification(
    specification: Specification,
    runs: RunTable,
    models: ModelTable,
    horizons: Sequence[HorizonEstimate],
    config: Optional[FitConfig] = None,
    priors: Optional[PriorSpec] = None,
    scale: TimeScale = DEFAULT_SCALE,
) -> GrowthFit:
    """
    Fit one specification.

    Trend specifications (metr-exp, sigmoid-curve) use the per-model horizons
    as ground truth; link specifications fit the task-level runs jointly.
    """
    specification = Specification(specification)
    config = config or map_config()

    if specification.kind == FitKind.MAP_JOINT:
        return map_fit(
            specification.link, runs, models, priors, config, horizons=horizons, scale=scale
        )

    _, d, _, h = horizon_points(horizons, models, scale)
    if h.size == 0:
        raise DomainError(f"{specification.value}: no usable horizons")
    points = np.column_stack([d, h])
    latest = float(np.max(d))

    if specification == Specification.METR_EXP:
        params = ols_log_fit(points)
        residual = np.log(h) - (params.beta0 + params.beta1 * d)
        logger.info(f"✓ {specification.value}: beta0={params.beta0:.3f} beta1={params.beta1:.3f}")
        return GrowthFit(
            specification=specification,
            kind=FitKind.OLS_LOG,
            params=params,
            objective=float(np.mean(residual**2)),
            converged=True,
            seed=config.seed,
            latest_base_date=latest,
        )

    params, mse = mse_sigmoid_fit(points, config)
    return GrowthFit(
        specification=specification,
        kind=FitKind.MSE_SIGMOID,
        params=params,
        objective=mse,
        converged=True,
        seed=config.seed,
        latest_base_date=latest,
    )
