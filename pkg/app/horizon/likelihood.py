"""Success probability and Bernoulli log-likelihood of the horizon logistic model."""

from typing import Iterable, Optional, Tuple, Union

import numpy as np
from scipy.special import expit, log_expit

from app.dataset.records import RunRecord, RunTable
from app.errors import DomainError, EmptySlice

ArrayLike = Union[float, np.ndarray]


def success_probability(h: ArrayLike, beta: ArrayLike, t: ArrayLike) -> ArrayLike:
    """
    P(success) = sigmoid((log h - log t) * beta).

    Args:
        h: 50% horizon in minutes.
        beta: Logistic slope.
        t: Human task difficulty in minutes.

    Returns:
        Probability in (0, 1); scalar inputs give a float.
    """
    h_arr, beta_arr, t_arr = (np.asarray(v, dtype=float) for v in (h, beta, t))
    for name, arr in (("h", h_arr), ("beta", beta_arr), ("t", t_arr)):
        if np.any(~(arr > 0)):
            raise DomainError(f"{name} must be positive")
    p = expit((np.log(h_arr) - np.log(t_arr)) * beta_arr)
    return float(p) if np.ndim(p) == 0 else p


def bernoulli_loglik(z: np.ndarray, success: np.ndarray, weight: np.ndarray) -> Tuple[float, np.ndarray]:
    """Weighted sum of s*log sigmoid(z) + (1-s)*log sigmoid(-z) and its z-derivative."""
    value = np.sum(weight * (success * log_expit(z) + (1.0 - success) * log_expit(-z)))
    dz = weight * (success - expit(z))
    return float(value), dz


def loglik_arrays(
    params: np.ndarray,
    log_t: np.ndarray,
    success: np.ndarray,
    weight: np.ndarray,
) -> Tuple[float, np.ndarray]:
    u, v = params
    beta = np.exp(v)
    z = beta * (u - log_t)
    value, dz = bernoulli_loglik(z, success, weight)
    grad = np.array([np.sum(dz) * beta, np.sum(dz * z)])
    return value, grad


def loglik_hessian(
    params: np.ndarray,
    log_t: np.ndarray,
    success: np.ndarray,
    weight: np.ndarray,
) -> np.ndarray:
    """Hessian of `loglik_arrays` in (log h, log beta)."""
    u, v = params
    beta = np.exp(v)
    z = beta * (u - log_t)
    p = expit(z)
    curvature = weight * p * (1.0 - p)
    dz = weight * (success - p)
    h_uu = -np.sum(curvature) * beta**2
    h_uv = np.sum(-curvature * z * beta + dz * beta)
    h_vv = np.sum(-curvature * z**2 + dz * z)
    return np.array([[h_uu, h_uv], [h_uv, h_vv]])


def slice_arrays(runs: Union[RunTable, Iterable[RunRecord]]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    records = list(runs.records if isinstance(runs, RunTable) else runs)
    if not records:
        raise EmptySlice("horizon likelihood needs at least one run")
    if len({r.model_id for r in records}) > 1:
        raise DomainError("a horizon slice must hold runs of a single model")
    log_t = np.log(np.array([r.human_minutes for r in records], dtype=float))
    success = np.array([r.success for r in records], dtype=float)
    weight = np.array([r.weight for r in records], dtype=float)
    return log_t, success, weight


def horizon_loglik(
    params: Tuple[float, float],
    runs: Union[RunTable, Iterable[RunRecord]],
    weights: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """
    Log-likelihood of one model's runs at (log h, log beta).

    Returns:
        (value, gradient) with the gradient taken in (log h, log beta).
    """
    log_t, success, weight = slice_arrays(runs)
    if weights is not None:
        weight = np.asarray(weights, dtype=float)
        if weight.shape != log_t.shape:
            raise DomainError(f"weights has {weight.size} entries for {log_t.size} runs")
    return loglik_arrays(np.asarray(params, dtype=float), log_t, success, weight)
