"""Batch driver fitting one horizon regression per model."""

import zlib
from typing import List, Optional

from app.dataset.records import ModelRecord, ModelTable, RunTable
from app.errors import EmptySlice
from app.fitting.config import FitConfig, horizon_config
from app.horizon.estimator import FitStatus, HorizonEstimate, fit_horizon
from app.services.base import BaseBatchService


def model_seed(seed: int, model_id: str) -> int:
    """Seed that depends only on the base seed and the model id."""
    return (seed * 1_000_003 + zlib.crc32(model_id.encode("utf-8"))) % (2**32)


class HorizonBatch(BaseBatchService):
    def __init__(self, runs: RunTable, models: ModelTable, config: FitConfig, workers: int = 1):
        super().__init__(workers=workers)
        self.runs = runs
        self.models = models
        self.config = config

    def get_items(self) -> list:
        return list(self.models.records)

    def process_item(self, item: ModelRecord) -> HorizonEstimate:
        slice_ = self.runs.for_model(item.model_id)
        if len(slice_) == 0:
            raise EmptySlice(f"no runs for model '{item.model_id}'")
        config = self.config.model_copy(update={"seed": model_seed(self.config.seed, item.model_id)})
        return fit_horizon(slice_, config, model_id=item.model_id)

    def on_failure(self, item: ModelRecord, error: Exception) -> HorizonEstimate:
        return HorizonEstimate(
            model_id=item.model_id,
            n_runs=len(self.runs.for_model(item.model_id)),
            status=FitStatus.FAILED,
            error=f"{type(error).__name__}: {error}",
        )

    def is_success(self, result: HorizonEstimate) -> bool:
        return result.status == FitStatus.OK


def fit_all_horizons(
    runs: RunTable,
    models: ModelTable,
    config: Optional[FitConfig] = None,
    workers: int = 1,
) -> List[HorizonEstimate]:
    """One independent fit per model, in `models` order; failures become statuses."""
    batch = HorizonBatch(runs, models, config or horizon_config(), workers=workers)
    return batch.process()["results"]
