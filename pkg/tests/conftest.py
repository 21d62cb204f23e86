from datetime import date
from pathlib import Path

import pytest

from app.dataset.records import ModelRecord, ModelTable, RunTable
from app.dataset.synthetic import log_uniform_minutes, simulate_runs
from app.dataset.timescale import DEFAULT_SCALE
from app.growth.curves import model_horizon
from app.growth.params import GrowthParams, LinkKind

SMALL_HORIZONS = {"alpha": 2.0, "bravo": 6.0, "charlie": 20.0, "delta": 80.0, "echo": 150.0}


@pytest.fixture
def small_models() -> ModelTable:
    return ModelTable.from_records(
        [
            ModelRecord(model_id="alpha", release_date=date(2020, 1, 1), is_sota=True, k_thinking=0),
            ModelRecord(model_id="bravo", release_date=date(2021, 7, 1), is_sota=True, k_thinking=0),
            ModelRecord(model_id="charlie", release_date=date(2023, 1, 1), is_sota=True, k_thinking=0),
            ModelRecord(model_id="delta", release_date=date(2024, 6, 1), is_sota=True, k_thinking=1),
            ModelRecord(model_id="echo", release_date=date(2025, 3, 1), is_sota=True, k_thinking=1),
        ]
    )


@pytest.fixture
def small_runs():
    minutes = log_uniform_minutes(60, 0.5, 960.0, seed=3)
    return simulate_runs(SMALL_HORIZONS, minutes, betas=0.9, seed=5, sampler="weyl")


@pytest.fixture
def write_file(tmp_path):
    def _write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def trend_inputs(write_file):
    """Model metadata plus published horizons that bend over in 2023."""
    models = write_file(
        "models.csv",
        "model_id,release_date,is_sota,k_thinking\n"
        "m1,2019-06-01,1,0\n"
        "m2,2020-06-01,1,0\n"
        "m3,2021-06-01,1,0\n"
        "m4,2022-06-01,1,0\n"
        "m5,2023-06-01,1,1\n"
        "m6,2024-06-01,1,1\n"
        "retired,2024-07-01,0,0\n",
    )
    horizons = write_file(
        "published.csv",
        "model_id,h_minutes,beta\n"
        "m1,0.37,1.0\n"
        "m2,1.33,1.0\n"
        "m3,4.47,0.9\n"
        "m4,12.7,0.8\n"
        "m5,25.2,0.8\n"
        "m6,34.5,0.7\n",
    )
    return models, horizons


# Multiplicative sigmoid-link curve used to simulate task-level data; horizons
# run from about half a minute to about 25 minutes over the pseudo-model dates.
LINK_TRUTH = GrowthParams(
    gamma1=10.0, gamma2=2.0, base_params=(1.0, -3.0), reasoning_params=(1.0, -5.0), link=LinkKind.SIGMOID
)


@pytest.fixture
def link_truth() -> GrowthParams:
    return LINK_TRUTH


@pytest.fixture
def pseudo_models() -> ModelTable:
    """15 SOTA models five months apart from April 2019; the last five reason."""
    records = []
    for i in range(15):
        month = 3 + 5 * i
        records.append(
            ModelRecord(
                model_id=f"pm{i:02d}",
                release_date=date(2019 + month // 12, month % 12 + 1, 1),
                is_sota=True,
                k_thinking=int(i >= 10),
            )
        )
    return ModelTable.from_records(records)


@pytest.fixture
def simulate_link_runs(pseudo_models):
    """Factory for runs drawn from LINK_TRUTH on log-uniform tasks in [0.1, 960] minutes."""

    def _simulate(n_tasks: int, attempts: int = 1, sampler: str = "weyl", seed: int = 3) -> RunTable:
        d = DEFAULT_SCALE.encode_many([m.release_date for m in pseudo_models])
        k = [m.k_thinking for m in pseudo_models]
        horizons = dict(zip(pseudo_models.ids, model_horizon(d, k, LINK_TRUTH)))
        minutes = log_uniform_minutes(n_tasks, 0.1, 960.0, seed=seed)
        return simulate_runs(horizons, minutes, betas=0.9, seed=seed + 1, sampler=sampler, attempts=attempts)

    return _simulate
