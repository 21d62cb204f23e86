"""Trend fits on (date, horizon) points: log-linear OLS and the single sigmoid curve."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

from app.errors import DegenerateDesign, DomainError, NonConvergence
from app.fitting.config import FitConfig, map_config
from app.fitting.optimizer import gradient_converged, perturbed_starts
from app.growth.params import ExpTrendParams, SingleSigmoidParams

logger = logging.getLogger(__name__)

Points = Sequence[Tuple[float, float]]


def points_arrays(points: Points) -> Tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(points, dtype=float).reshape(-1, 2)
    d, h = arr[:, 0], arr[:, 1]
    if np.any(~np.isfinite(d)) or np.any(~(h > 0)):
        raise DomainError("trend points need finite dates and positive horizons")
    return d, h


def ols_log_fit(points: Points) -> ExpTrendParams:
    """
    Least-squares line through (d, log h).

    Raises:
        DegenerateDesign: fewer than two distinct dates.
    """
    d, h = points_arrays(points)
    if np.unique(d).size < 2:
        raise DegenerateDesign("log-linear trend needs at least two distinct dates")
    design = np.column_stack([np.ones_like(d), d])
    coef, *_ = np.linalg.lstsq(design, np.log(h), rcond=None)
    return ExpTrendParams(beta0=float(coef[0]), beta1=float(coef[1]))


def log_r_squared(points: Points, params: ExpTrendParams) -> float:
    """Coefficient of determination of the trend on log horizons."""
    d, h = points_arrays(points)
    y = np.log(h)
    residual = y - (params.beta0 + params.beta1 * d)
    total = np.sum((y - y.mean()) ** 2)
    if total == 0:
        return 1.0 if np.allclose(residual, 0.0) else 0.0
    return float(1.0 - np.sum(residual**2) / total)


def _sigmoid_start(d: np.ndarray, h: np.ndarray) -> np.ndarray:
    # Asymptote above the data, unit slope, midpoint where h is nearest half the maximum.
    gamma = 1.5 * float(np.max(h))
    midpoint = float(d[np.argmin(np.abs(h - 0.5 * np.max(h)))])
    return np.array([np.log(gamma), 0.0, -midpoint])


def mse_sigmoid_fit(points: Points, config: Optional[FitConfig] = None) -> Tuple[SingleSigmoidParams, float]:
    """
    Minimize the mean squared error of gamma * sigmoid(delta1 * d + delta2).

    Optimizes (log gamma, log delta1, delta2) with trust-region least squares
    from a data-driven start plus seeded perturbations.

    Returns:
        (best params, best MSE)

    Raises:
        NonConvergence: no restart met its tolerance.
    """
    config = config or map_config()
    d, h = points_arrays(points)
    if d.size < 3:
        raise DomainError(f"sigmoid curve has 3 parameters, got {d.size} points")

    def unpack(phi: np.ndarray) -> SingleSigmoidParams:
        return SingleSigmoidParams(gamma=float(np.exp(phi[0])), delta1=float(np.exp(phi[1])), delta2=float(phi[2]))

    def residuals(phi: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(phi[0]) * expit(np.exp(phi[1]) * d + phi[2]) - h

    def jacobian(phi: np.ndarray) -> np.ndarray:
        # Columns in (log gamma, log delta1, delta2).
        with np.errstate(over="ignore"):
            gamma, delta1 = np.exp(phi[0]), np.exp(phi[1])
            s = expit(delta1 * d + phi[2])
        slope = gamma * s * (1.0 - s)
        return np.column_stack([gamma * s, slope * d * delta1, slope])

    candidates: List[Tuple[float, int, np.ndarray, bool]] = []
    for restart, x0 in enumerate(perturbed_starts(_sigmoid_start(d, h), config)):
        try:
            result = least_squares(
                residuals,
                x0,
                jac=jacobian,
                method="trf",
                x_scale="jac",
                ftol=1e-12,
                xtol=1e-12,
                gtol=1e-12,
                max_nfev=config.max_iterations,
            )
        except (ValueError, FloatingPointError) as e:
            logger.warning(f"sigmoid restart {restart} failed: {e}")
            continue
        if not np.all(np.isfinite(result.x)) or np.any(np.abs(result.x[:2]) > 700):
            continue
        r = residuals(result.x)
        mse = float(np.mean(r**2))
        grad = 2.0 * jacobian(result.x).T @ r / d.size
        converged = result.status > 0 or gradient_converged(grad, mse, config.gradient_tolerance)
        candidates.append((mse, restart, result.x, converged))

    converged = [c for c in candidates if c[3]]
    if not converged:
        raise NonConvergence("sigmoid curve: no restart converged", specification="sigmoid-curve")
    mse, restart, phi, _ = min(converged, key=lambda c: (c[0], c[1]))
    params = unpack(phi)
    logger.info(
        f"✓ sigmoid curve: gamma={params.gamma:.2f} delta1={params.delta1:.3f} "
        f"delta2={params.delta2:.3f} mse={mse:.3f} (restart {restart})"
    )
    return params, mse
