"""Seeded synthetic run generator drawing outcomes from the horizon logistic model."""

from typing import Dict, Optional, Sequence, Union

import numpy as np

from app.dataset.records import RunRecord, RunTable, TaskFamily
from app.horizon.likelihood import success_probability

GOLDEN_FRACTION = (np.sqrt(5.0) - 1.0) / 2.0


def log_uniform_minutes(n_tasks: int, low: float, high: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.exp(rng.uniform(np.log(low), np.log(high), size=n_tasks))


def simulate_runs(
    horizons: Dict[str, float],
    minutes: Sequence[float],
    betas: Union[float, Dict[str, float]] = 1.0,
    seed: int = 0,
    sampler: str = "bernoulli",
    attempts: int = 1,
    task_prefix: str = "task",
) -> RunTable:
    """
    Simulate every model on every task.

    Args:
        horizons: 50% horizon (minutes) per model id.
        minutes: Human difficulty of each task.
        betas: Shared slope or per-model slopes.
        seed: Seed for the outcome draws.
        sampler: "bernoulli" draws independent uniforms; "weyl" walks tasks in
            difficulty order with a golden-ratio sequence, so empirical success
            rates track the model closely at small sample sizes.
        attempts: Repeated attempts per (model, task) pair.

    Returns:
        RunTable with one record per model, task and attempt.
    """
    if sampler not in ("bernoulli", "weyl"):
        raise ValueError(f"unknown sampler '{sampler}'")
    rng = np.random.default_rng(seed)
    t = np.asarray(minutes, dtype=float)
    order = np.argsort(t, kind="stable")
    records = []

    for model_id, h in horizons.items():
        beta = betas[model_id] if isinstance(betas, dict) else float(betas)
        p = success_probability(h, beta, t)
        for attempt in range(attempts):
            if sampler == "bernoulli":
                u = rng.random(t.size)
            else:
                u = np.empty(t.size)
                u[order] = np.mod(rng.random() + GOLDEN_FRACTION * np.arange(t.size), 1.0)
            outcomes = (u < p).astype(int)
            records.extend(
                RunRecord(
                    model_id=model_id,
                    task_id=f"{task_prefix}-{i:04d}",
                    task_family=TaskFamily.OTHER,
                    human_minutes=float(t[i]),
                    success=int(outcomes[i]),
                    attempt=attempt,
                )
                for i in range(t.size)
            )
    return RunTable(records=tuple(records))


def simulate_slice(
    h: float,
    beta: float,
    n_runs: int,
    seed: int,
    low: float = 1.0,
    high: float = 960.0,
    sampler: str = "bernoulli",
    model_id: str = "synthetic",
) -> RunTable:
    """Single-model slice with log-uniform task difficulties."""
    minutes = log_uniform_minutes(n_runs, low, high, seed)
    return simulate_runs({model_id: h}, minutes, betas=beta, seed=seed + 1, sampler=sampler)


def rescale_minutes(runs: RunTable, factor: float, model_id: Optional[str] = None) -> RunTable:
    """Copy of a table with every difficulty multiplied by `factor`."""
    return RunTable(
        records=tuple(
            r.model_copy(update={"human_minutes": r.human_minutes * factor})
            if model_id is None or r.model_id == model_id
            else r
            for r in runs.records
        )
    )
