"""Goodness of fit against per-model horizons."""

from typing import List, Sequence, Tuple

import numpy as np

from app.dataset.records import ModelTable
from app.dataset.timescale import DEFAULT_SCALE, TimeScale
from app.errors import DomainError, MissingModel
from app.fitting.results import GrowthFit
from app.horizon.estimator import HorizonEstimate


def mean_squared_error(predicted: Sequence[float], observed: Sequence[float]) -> float:
    predicted = np.asarray(predicted, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if predicted.shape != observed.shape or observed.size == 0:
        raise DomainError("MSE needs two non-empty arrays of equal length")
    return float(np.mean((predicted - observed) ** 2))


def horizon_points(
    horizons: Sequence[HorizonEstimate], models: ModelTable, scale: TimeScale = DEFAULT_SCALE
) -> Tuple[List[str], np.ndarray, np.ndarray, np.ndarray]:
    """
    Usable horizons joined with model metadata.

    Returns:
        (model ids, encoded release dates, k_thinking flags, horizons in minutes)

    Raises:
        MissingModel: a horizon's model has no metadata.
    """
    ids, dates, flags, values = [], [], [], []
    for estimate in horizons:
        if not estimate.usable:
            continue
        record = models.find(estimate.model_id)
        if record is None:
            raise MissingModel(estimate.model_id)
        ids.append(estimate.model_id)
        dates.append(scale.encode(record.release_date))
        flags.append(record.k_thinking)
        values.append(estimate.h_model)
    return ids, np.array(dates, dtype=float), np.array(flags, dtype=float), np.array(values, dtype=float)


def mse_against_horizons(
    fit: GrowthFit,
    horizons: Sequence[HorizonEstimate],
    models: ModelTable,
    scale: TimeScale = DEFAULT_SCALE,
) -> float:
    """Mean over models of (predicted - observed horizon)^2, in minutes squared."""
    _, d, k, observed = horizon_points(horizons, models, scale)
    if observed.size == 0:
        raise DomainError("no usable horizons to score against")
    predicted = np.atleast_1d(fit.predict(d, k) if fit.is_multiplicative else fit.predict(d))
    return mean_squared_error(predicted, observed)
