"""Canonical run/model records and the immutable tables that hold them."""

import enum
from datetime import date
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from app.errors import DuplicateModel, ModelNotFound


class TaskFamily(str, enum.Enum):
    HCAST = "HCAST"
    RE_BENCH = "RE_BENCH"
    SWAA = "SWAA"
    OTHER = "OTHER"

    @classmethod
    def parse(cls, raw: object) -> "TaskFamily":
        key = str(raw or "").strip().upper().replace("-", "_").replace(" ", "_")
        try:
            return cls(key)
        except ValueError:
            return cls.OTHER


class RunRecord(BaseModel):
    """One (model, task) attempt: the atomic Bernoulli observation."""

    model_config = ConfigDict(frozen=True, protected_namespaces=())

    model_id: str = Field(min_length=1)
    task_id: str = Field(min_length=1)
    task_family: TaskFamily = TaskFamily.OTHER
    human_minutes: float = Field(gt=0, allow_inf_nan=False)
    success: int = Field(ge=0, le=1)
    attempt: int = Field(default=0, ge=0)
    weight: float = Field(default=1.0, gt=0, allow_inf_nan=False)


class ModelRecord(BaseModel):
    """Model identity, release date, frontier flag and reasoning flag."""

    model_config = ConfigDict(frozen=True, protected_namespaces=())

    model_id: str = Field(min_length=1)
    release_date: date
    is_sota: bool = False
    k_thinking: int = Field(default=0, ge=0, le=1)


class RejectedRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    row: int
    error: str
    message: str


class IngestionReport(BaseModel):
    """Row accounting for one ingestion: parsed + rejected = input."""

    model_config = ConfigDict(frozen=True)

    n_input: int = 0
    n_parsed: int = 0
    rejected: Tuple[RejectedRow, ...] = ()

    @property
    def n_rejected(self) -> int:
        return len(self.rejected)


class RunTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    records: Tuple[RunRecord, ...] = ()
    report: IngestionReport = IngestionReport()

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def model_ids(self) -> List[str]:
        """Distinct model ids in first-seen order."""
        return list(dict.fromkeys(r.model_id for r in self.records))

    @property
    def task_ids(self) -> List[str]:
        return list(dict.fromkeys(r.task_id for r in self.records))

    def for_model(self, model_id: str) -> "RunTable":
        return self._subset([r for r in self.records if r.model_id == model_id])

    def restrict(self, model_ids: Iterable[str]) -> "RunTable":
        keep = set(model_ids)
        return self._subset([r for r in self.records if r.model_id in keep])

    def _subset(self, records: List[RunRecord]) -> "RunTable":
        # Records are already validated; skip re-validation for slices.
        return RunTable.model_construct(
            records=tuple(records),
            report=IngestionReport.model_construct(
                n_input=len(records), n_parsed=len(records), rejected=()
            ),
        )

    def arrays(self) -> Dict[str, np.ndarray]:
        """Column arrays used by the likelihood code."""
        return {
            "log_t": np.log(np.array([r.human_minutes for r in self.records], dtype=float)),
            "success": np.array([r.success for r in self.records], dtype=float),
            "weight": np.array([r.weight for r in self.records], dtype=float),
        }

    def to_frame(self) -> pd.DataFrame:
        columns = list(RunRecord.model_fields)
        rows = [r.model_dump(mode="json") for r in self.records]
        return pd.DataFrame(rows, columns=columns)


class ModelTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    records: Tuple[ModelRecord, ...] = ()

    @classmethod
    def from_records(cls, records: Iterable[ModelRecord]) -> "ModelTable":
        seen = set()
        records = list(records)
        for idx, record in enumerate(records, 1):
            if record.model_id in seen:
                raise DuplicateModel(record.model_id, row=idx)
            seen.add(record.model_id)
        return cls(records=tuple(records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def ids(self) -> List[str]:
        return [m.model_id for m in self.records]

    def find(self, model_id: str) -> Optional[ModelRecord]:
        return next((m for m in self.records if m.model_id == model_id), None)

    def get(self, model_id: str) -> ModelRecord:
        record = self.find(model_id)
        if record is None:
            raise ModelNotFound(model_id)
        return record

    def latest_release(self) -> date:
        return max(m.release_date for m in self.records)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "model_id": m.model_id,
                "release_date": m.release_date.isoformat(),
                "is_sota": int(m.is_sota),
                "k_thinking": m.k_thinking,
            }
            for m in self.records
        ]
        return pd.DataFrame(rows, columns=["model_id", "release_date", "is_sota", "k_thinking"])


def filter_sota(models: ModelTable) -> ModelTable:
    """Keep SOTA models only, ordered by release date (stable for ties)."""
    sota = [m for m in models.records if m.is_sota]
    return ModelTable(records=tuple(sorted(sota, key=lambda m: m.release_date)))
