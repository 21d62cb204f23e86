"""Per-model maximum-likelihood estimate of the 50% horizon and logistic slope."""

import enum
import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.dataset.records import RunTable
from app.errors import DegenerateData
from app.fitting.config import FitConfig, horizon_config
from app.fitting.optimizer import multi_start_minimize, perturbed_starts
from app.horizon.likelihood import loglik_arrays, loglik_hessian, slice_arrays

logger = logging.getLogger(__name__)


class FitStatus(str, enum.Enum):
    OK = "ok"
    DEGENERATE_DATA = "degenerate_data"
    NON_CONVERGENCE = "non_convergence"
    FAILED = "failed"


class HorizonEstimate(BaseModel):
    """Fitted (h, beta) for one model; h is in minutes."""

    model_config = ConfigDict(frozen=True, protected_namespaces=())

    model_id: str
    h_model: Optional[float] = None
    beta_model: Optional[float] = None
    log_likelihood: Optional[float] = None
    n_runs: int = 0
    converged: bool = False
    status: FitStatus = FitStatus.OK
    error: Optional[str] = None

    @model_validator(mode="after")
    def _positive_unless_failed(self) -> "HorizonEstimate":
        if self.status != FitStatus.FAILED:
            if self.h_model is None or not self.h_model > 0:
                raise ValueError("h_model must be positive")
            if self.beta_model is not None and not self.beta_model > 0:
                raise ValueError("beta_model must be positive")
        return self

    @property
    def usable(self) -> bool:
        return self.status != FitStatus.FAILED and self.h_model is not None


def _degenerate_estimate(model_id: str, log_t, success, weight) -> HorizonEstimate:
    # Perfectly one-sided data: pin h to the observed difficulty boundary.
    all_success = bool(np.all(success == 1))
    log_h = float(np.max(log_t) if all_success else np.min(log_t))
    value, _ = loglik_arrays(np.array([log_h, 0.0]), log_t, success, weight)
    return HorizonEstimate(
        model_id=model_id,
        h_model=float(np.exp(log_h)),
        beta_model=1.0,
        log_likelihood=value,
        n_runs=int(log_t.size),
        converged=False,
        status=FitStatus.DEGENERATE_DATA,
    )


def fit_horizon(
    runs: RunTable,
    config: Optional[FitConfig] = None,
    model_id: Optional[str] = None,
    allow_degenerate: bool = True,
) -> HorizonEstimate:
    """
    Maximize the Bernoulli likelihood of one model's runs.

    Args:
        runs: Runs of a single model.
        config: Optimizer recipe; defaults to the horizon recipe.
        model_id: Label for the estimate; defaults to the slice's model.
        allow_degenerate: Return a flagged boundary estimate for all-success or
            all-failure slices instead of raising DegenerateData.

    Returns:
        HorizonEstimate; `converged` holds iff the scaled gradient test passes.
    """
    config = config or horizon_config()
    log_t, success, weight = slice_arrays(runs)
    model_id = model_id or runs.records[0].model_id

    if np.all(success == success[0]):
        if not allow_degenerate:
            raise DegenerateData(f"{model_id}: all {log_t.size} runs share one outcome")
        logger.warning(f"{model_id}: one-sided outcomes, horizon clamped to the difficulty range")
        return _degenerate_estimate(model_id, log_t, success, weight)

    def objective(x):
        value, grad = loglik_arrays(x, log_t, success, weight)
        return -value, -grad

    def hessian(x):
        return -loglik_hessian(x, log_t, success, weight)

    x0 = np.array([float(np.median(log_t)), 0.0])
    best, _ = multi_start_minimize(objective, perturbed_starts(x0, config), config, hess=hessian)

    status = FitStatus.OK if best.converged else FitStatus.NON_CONVERGENCE
    if not best.converged:
        logger.warning(f"{model_id}: horizon fit did not converge (|g|={best.grad_norm:.2e})")
    return HorizonEstimate(
        model_id=model_id,
        h_model=float(np.exp(best.x[0])),
        beta_model=float(np.exp(best.x[1])),
        log_likelihood=-best.value,
        n_runs=int(log_t.size),
        converged=best.converged,
        status=status,
    )
