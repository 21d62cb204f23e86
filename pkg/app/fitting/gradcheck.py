"""Central-difference check of analytic gradients."""

import logging
from typing import Callable, Tuple

import numpy as np

from app.errors import DomainError

logger = logging.getLogger(__name__)

RELATIVE_FLOOR = 1e-8


def finite_difference_gradient(
    objective: Callable[[np.ndarray], Tuple[float, np.ndarray]], point: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    x0 = np.asarray(point, dtype=float)
    grad = np.zeros(x0.size)
    for j in range(x0.size):
        x = x0.copy()
        x[j] = x0[j] + step
        f_plus, _ = objective(x)
        x[j] = x0[j] - step
        f_minus, _ = objective(x)
        grad[j] = (f_plus - f_minus) / (2.0 * step)
    return grad


def finite_difference_check(
    objective: Callable[[np.ndarray], Tuple[float, np.ndarray]],
    point: np.ndarray,
    step: float = 1e-6,
    floor: float = RELATIVE_FLOOR,
) -> float:
    """
    Compare an objective's analytic gradient with central differences.

    Args:
        objective: Callable returning (value, gradient).
        point: Where to compare.
        step: Central-difference step.
        floor: Lower bound on the denominator of the relative error.

    Returns:
        Max over components of |analytic - numeric| / max(|analytic|, |numeric|, floor).
    """
    if not step > 0:
        raise DomainError(f"finite-difference step must be positive, got {step}")
    _, analytic = objective(np.asarray(point, dtype=float))
    analytic = np.asarray(analytic, dtype=float)
    numeric = finite_difference_gradient(objective, point, step)
    denominator = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    error = float(np.max(np.abs(analytic - numeric) / denominator, initial=0.0))
    logger.debug(f"finite-difference check at n={numeric.size}: max relative error {error:.2e}")
    return error
