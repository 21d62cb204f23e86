"""Optimizer settings and prior scales for every estimator."""

from typing import List

from pydantic import BaseModel, ConfigDict, Field

from app.config import (
    DEFAULT_SEED,
    GRADIENT_TOLERANCE,
    HORIZON_MAX_ITERATIONS,
    HORIZON_RESTARTS,
    MAP_ASCENT_STEPS,
    MAP_INITIAL_STEP,
    MAP_RESTARTS,
    MAP_STEP_DECAY,
    NORMAL_PRIOR_SD,
    POLISH_MAX_ITERATIONS,
    SPLINE_RW_SD_PRIOR,
)


class FitConfig(BaseModel):
    """
    Optimization recipe.

    `ascent_steps` adaptive first-order steps (initial step `initial_step`,
    multiplied by `step_decay` each step) precede the quasi-Newton polish;
    zero skips the ascent phase. `polish_iterations` caps the trust-region
    Newton polish that runs when BFGS stops short of the tolerance.
    """

    model_config = ConfigDict(frozen=True)

    seed: int = DEFAULT_SEED
    restarts: int = Field(default=MAP_RESTARTS, ge=1)
    max_iterations: int = Field(default=HORIZON_MAX_ITERATIONS, ge=1)
    polish_iterations: int = Field(default=POLISH_MAX_ITERATIONS, ge=0)
    gradient_tolerance: float = Field(default=GRADIENT_TOLERANCE, gt=0)
    ascent_steps: int = Field(default=MAP_ASCENT_STEPS, ge=0)
    initial_step: float = Field(default=MAP_INITIAL_STEP, gt=0)
    step_decay: float = Field(default=MAP_STEP_DECAY, gt=0, le=1)
    restart_scale: float = Field(default=0.5, ge=0)
    workers: int = Field(default=1, ge=1)

    @property
    def learning_rate_schedule(self) -> str:
        return (
            f"adaptive ascent {self.ascent_steps} steps from {self.initial_step:g} "
            f"with geometric decay {self.step_decay:g}, then BFGS"
        )


def horizon_config(seed: int = DEFAULT_SEED) -> FitConfig:
    """Recipe for the per-model horizon regression."""
    return FitConfig(
        seed=seed,
        restarts=HORIZON_RESTARTS,
        max_iterations=HORIZON_MAX_ITERATIONS,
        ascent_steps=0,
        restart_scale=1.0,
    )


def map_config(seed: int = DEFAULT_SEED) -> FitConfig:
    """Recipe for the joint MAP fits and the single-curve MSE fit."""
    return FitConfig(seed=seed, max_iterations=5000)


class PriorSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    normal_sd: float = Field(default=NORMAL_PRIOR_SD, gt=0)
    spline_rw_sd_prior: float = Field(default=SPLINE_RW_SD_PRIOR, gt=0)
    positivity_set: List[str] = Field(
        default_factory=lambda: ["gamma1", "gamma2", "delta1", "theta1", "beta_model"]
    )
