"""Horizon-vs-date evaluators and their parameter gradients."""

import math
from typing import Union

import numpy as np
from scipy.special import expit

from app.errors import NonPositiveSlope, OverflowGuard
from app.growth.links import MAX_EXPONENT, get_link
from app.growth.params import ExpTrendParams, GrowthParams, SingleSigmoidParams

ArrayLike = Union[float, np.ndarray]


def _out(value: np.ndarray, like) -> ArrayLike:
    return float(value[0]) if np.ndim(like) == 0 else value


def _components(d: np.ndarray, p: GrowthParams):
    link = get_link(p.link)
    b = link.value(d, p.base_params, p.spline_spec)
    r = link.value(d, p.reasoning_params, p.spline_spec)
    return link, b, r


def model_horizon(d: ArrayLike, k_thinking: ArrayLike, p: GrowthParams) -> ArrayLike:
    """
    Multiplicative base x reasoning horizon in minutes.

    Args:
        d: Encoded release date(s).
        k_thinking: 1 when the model's reasoning capability is active.
        p: Fitted growth parameters.

    Returns:
        gamma1 * b(d) * (1 + gamma2 * r(d) * k_thinking)
    """
    x = np.atleast_1d(np.asarray(d, dtype=float))
    k = np.broadcast_to(np.asarray(k_thinking, dtype=float), x.shape)
    _, b, r = _components(x, p)
    return _out(p.gamma1 * b * (1.0 + p.gamma2 * r * k), d)


def base_horizon(d: ArrayLike, p: GrowthParams) -> ArrayLike:
    """Base-only curve gamma1 * b(d)."""
    return model_horizon(d, 0, p)


def model_horizon_gradient(d: ArrayLike, k_thinking: ArrayLike, p: GrowthParams) -> np.ndarray:
    """
    d h / d (gamma1, gamma2, base_params..., reasoning_params...).

    Returns one row per date.
    """
    x = np.atleast_1d(np.asarray(d, dtype=float))
    k = np.broadcast_to(np.asarray(k_thinking, dtype=float), x.shape)
    link, b, r = _components(x, p)
    reasoning = 1.0 + p.gamma2 * r * k
    d_gamma1 = b * reasoning
    d_gamma2 = p.gamma1 * b * r * k
    d_base = (p.gamma1 * reasoning)[:, None] * link.jacobian(x, p.base_params, p.spline_spec)
    d_reason = (p.gamma1 * b * p.gamma2 * k)[:, None] * link.jacobian(x, p.reasoning_params, p.spline_spec)
    return np.column_stack([d_gamma1, d_gamma2, d_base, d_reason])


def single_sigmoid_curve(d: ArrayLike, p: SingleSigmoidParams) -> ArrayLike:
    """gamma * sigmoid(delta1 * d + delta2)."""
    x = np.atleast_1d(np.asarray(d, dtype=float))
    return _out(p.gamma * expit(p.delta1 * x + p.delta2), d)


def single_sigmoid_gradient(d: ArrayLike, p: SingleSigmoidParams) -> np.ndarray:
    """d h / d (gamma, delta1, delta2), one row per date."""
    x = np.atleast_1d(np.asarray(d, dtype=float))
    s = expit(p.delta1 * x + p.delta2)
    slope = p.gamma * s * (1.0 - s)
    return np.column_stack([s, slope * x, slope])


def _trend_exponent(x: np.ndarray, p: ExpTrendParams) -> np.ndarray:
    exponent = p.beta0 + p.beta1 * x
    if np.any(exponent > MAX_EXPONENT):
        raise OverflowGuard(f"exponent {np.max(exponent):.1f} exceeds {MAX_EXPONENT:g}")
    return exponent


def metr_exponential(d: ArrayLike, p: ExpTrendParams) -> ArrayLike:
    """exp(beta0 + beta1 * d)."""
    x = np.atleast_1d(np.asarray(d, dtype=float))
    return _out(np.exp(_trend_exponent(x, p)), d)


def metr_exponential_gradient(d: ArrayLike, p: ExpTrendParams) -> np.ndarray:
    """d h / d (beta0, beta1), one row per date."""
    x = np.atleast_1d(np.asarray(d, dtype=float))
    h = np.exp(_trend_exponent(x, p))
    return np.column_stack([h, h * x])


def doubling_time(p: ExpTrendParams) -> float:
    """Months for the exponential trend to double."""
    if not p.beta1 > 0:
        raise NonPositiveSlope(f"doubling time needs beta1 > 0, got {p.beta1}")
    return 12.0 * math.log(2.0) / p.beta1
