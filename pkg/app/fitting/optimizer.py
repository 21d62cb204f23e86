"""Seeded multi-start minimization: adaptive first-order warm-up plus BFGS polish."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from app.config import POLISH_MAX_ITERATIONS
from app.fitting.config import FitConfig

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]
Hessian = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Outcome:
    x: np.ndarray
    value: float
    grad_norm: float
    converged: bool
    restart: int
    iterations: int
    message: str


def gradient_converged(grad: np.ndarray, value: float, tolerance: float) -> bool:
    """Sup-norm test, scaled by the objective magnitude once it exceeds one."""
    return bool(np.max(np.abs(grad), initial=0.0) <= tolerance * max(1.0, abs(value)))


def adaptive_descent(
    fun: Objective, x0: np.ndarray, steps: int, initial_step: float, decay: float
) -> np.ndarray:
    """Adam-style first-order descent; returns the best iterate seen."""
    b1, b2, eps = 0.9, 0.999, 1e-8
    x = np.array(x0, dtype=float)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    best_x, best_value = x.copy(), np.inf
    step = initial_step
    for i in range(1, steps + 1):
        value, grad = fun(x)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            break
        if value < best_value:
            best_x, best_value = x.copy(), value
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad**2
        m_hat = m / (1 - b1**i)
        v_hat = v / (1 - b2**i)
        x = x - step * m_hat / (np.sqrt(v_hat) + eps)
        step *= decay
    return best_x


def quasi_newton(
    fun: Objective,
    x0: np.ndarray,
    tolerance: float,
    max_iterations: int,
    hess: Optional[Hessian] = None,
    restart: int = 0,
    polish_iterations: int = POLISH_MAX_ITERATIONS,
) -> Outcome:
    value0, _ = fun(np.asarray(x0, dtype=float))
    gtol = tolerance * max(1.0, abs(value0))
    result = minimize(
        fun, x0, jac=True, method="BFGS", options={"gtol": gtol, "maxiter": max_iterations}
    )
    value, grad = fun(result.x)
    iterations = int(result.nit)
    message = str(result.message)

    if not gradient_converged(grad, value, tolerance) and hess is not None and polish_iterations > 0:
        polished = minimize(
            fun,
            result.x,
            jac=True,
            hess=hess,
            method="trust-exact",
            options={"gtol": tolerance * max(1.0, abs(value)), "maxiter": polish_iterations},
        )
        polished_value, polished_grad = fun(polished.x)
        if polished_value <= value:
            result, value, grad = polished, polished_value, polished_grad
            iterations += int(polished.nit)
            message = f"{message}; polished: {polished.message}"

    return Outcome(
        x=np.asarray(result.x, dtype=float),
        value=float(value),
        grad_norm=float(np.max(np.abs(grad), initial=0.0)),
        converged=gradient_converged(grad, value, tolerance),
        restart=restart,
        iterations=iterations,
        message=message,
    )


def perturbed_starts(x0: np.ndarray, config: FitConfig, seed: Optional[int] = None) -> List[np.ndarray]:
    """The canonical start followed by `restarts - 1` seeded Gaussian perturbations."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    x0 = np.asarray(x0, dtype=float)
    starts = [x0.copy()]
    for _ in range(config.restarts - 1):
        starts.append(x0 + rng.normal(scale=config.restart_scale, size=x0.shape))
    return starts


def multi_start_minimize(
    fun: Objective,
    starts: Sequence[np.ndarray],
    config: FitConfig,
    hess: Optional[Hessian] = None,
) -> Tuple[Outcome, List[Outcome]]:
    """
    Run every start independently and keep the lowest objective.

    Ties go to the lowest restart index, so the reduction does not depend on
    execution order.
    """

    def run(indexed: Tuple[int, np.ndarray]) -> Outcome:
        restart, x0 = indexed
        if config.ascent_steps > 0:
            x0 = adaptive_descent(fun, x0, config.ascent_steps, config.initial_step, config.step_decay)
        outcome = quasi_newton(
            fun,
            x0,
            config.gradient_tolerance,
            config.max_iterations,
            hess=hess,
            restart=restart,
            polish_iterations=config.polish_iterations,
        )
        logger.debug(
            f"restart {restart}: value={outcome.value:.6g} |g|={outcome.grad_norm:.2e} "
            f"converged={outcome.converged}"
        )
        return outcome

    indexed = list(enumerate(starts))
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            outcomes = list(executor.map(run, indexed))
    else:
        outcomes = [run(item) for item in indexed]

    finite = [o for o in outcomes if np.isfinite(o.value)]
    pool = finite or outcomes
    best = min(pool, key=lambda o: (o.value, o.restart))
    return best, outcomes


def numerical_hessian(fun: Objective, step: float = 1e-5) -> Hessian:
    """Symmetrized central differences of an analytic gradient."""

    def hessian(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = x.size
        columns = np.empty((n, n))
        for j in range(n):
            offset = np.zeros(n)
            offset[j] = step
            _, g_plus = fun(x + offset)
            _, g_minus = fun(x - offset)
            columns[:, j] = (g_plus - g_minus) / (2.0 * step)
        return 0.5 * (columns + columns.T)

    return hessian
