"""Parsers that turn CSV/JSONL byte streams into validated tables."""

import enum
import io
import logging
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, BinaryIO, Dict, List, Optional, Tuple, Union

import pandas as pd

from app.dataset.records import (
    IngestionReport,
    ModelRecord,
    ModelTable,
    RejectedRow,
    RunRecord,
    RunTable,
    TaskFamily,
)
from app.dataset.timescale import to_date
from app.errors import (
    DuplicateRun,
    EmptyInput,
    IngestionError,
    InvalidDate,
    MissingColumn,
    NonBinarySuccess,
    NonPositiveDifficulty,
    UnparseableDate,
)

logger = logging.getLogger(__name__)

Source = Union[bytes, BinaryIO, str, Path]


class TableFormat(str, enum.Enum):
    CSV = "csv"
    JSONL = "jsonl"

    @classmethod
    def infer(cls, source: Source) -> "TableFormat":
        if isinstance(source, (str, Path)) and str(source).lower().endswith((".jsonl", ".json")):
            return cls.JSONL
        return cls.CSV


def read_source(source: Source) -> bytes:
    """Return the raw bytes behind a path, file object or bytes value."""
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()


def _parse_binary(value: Any) -> int:
    if isinstance(value, bool):
        return int(value)
    text = str(value).strip().lower()
    if text in ("true", "yes"):
        return 1
    if text in ("false", "no"):
        return 0
    number = float(text)
    if number not in (0.0, 1.0):
        raise ValueError(text)
    return int(number)


def _strip_provenance(raw: bytes) -> bytes:
    """Drop leading `# key=value` lines written ahead of a CSV header."""
    lines = raw.splitlines(keepends=True)
    start = 0
    while start < len(lines) and lines[start].lstrip().startswith(b"#"):
        start += 1
    return b"".join(lines[start:])


def _is_blank(value: Any) -> bool:
    # JSONL records missing a key come back as NaN/None from pandas.
    if pd.api.types.is_scalar(value) and pd.isna(value):
        return True
    return str(value).strip() == ""


def _parse_attempt(value: Any, row_number: int) -> int:
    try:
        number = float(value)
    except (TypeError, ValueError):
        number = float("nan")
    if not math.isfinite(number) or number < 0 or not number.is_integer():
        raise IngestionError(f"attempt must be a non-negative integer, got {value!r}", row=row_number)
    return int(number)


class BaseTableParser(ABC):
    """Template: read -> check columns -> parse each row, collecting rejects."""

    def __init__(self, strict: bool = False):
        self.strict = strict
        self.logger = logger

    @property
    @abstractmethod
    def required_columns(self) -> List[str]:
        """Columns that must be present in the header."""
        pass

    @property
    @abstractmethod
    def label(self) -> str:
        pass

    @abstractmethod
    def parse_row(self, row: Dict[str, Any], row_number: int) -> Any:
        """Validate one raw row; raise an IngestionError subclass to reject it."""
        pass

    def read_frame(self, source: Source, fmt: TableFormat) -> pd.DataFrame:
        raw = read_source(source)
        if fmt == TableFormat.CSV:
            raw = _strip_provenance(raw)
        if not raw.strip():
            raise EmptyInput(f"no {self.label}")
        buffer = io.BytesIO(raw)
        if fmt == TableFormat.JSONL:
            frame = pd.read_json(buffer, lines=True, dtype=False)
        else:
            frame = pd.read_csv(buffer, dtype=str, keep_default_na=False, encoding="utf-8")
        frame.columns = [str(c).strip() for c in frame.columns]
        for column in self.required_columns:
            if column not in frame.columns:
                raise MissingColumn(column)
        return frame

    def parse(self, source: Source, fmt: TableFormat = TableFormat.CSV) -> Tuple[list, IngestionReport]:
        frame = self.read_frame(source, fmt)
        rows = frame.to_dict("records")
        if not rows:
            raise EmptyInput(f"no {self.label}")
        parsed, rejected = [], []

        for row_number, row in enumerate(rows, 1):
            try:
                parsed.append(self.parse_row(row, row_number))
            except IngestionError as exc:
                if self.strict:
                    raise
                rejected.append(
                    RejectedRow(row=row_number, error=type(exc).__name__, message=str(exc))
                )

        parsed, late_rejects = self.finalize(parsed)
        if late_rejects and self.strict:
            raise late_rejects[0]
        rejected.extend(
            RejectedRow(row=exc.row or 0, error=type(exc).__name__, message=str(exc))
            for exc in late_rejects
        )

        report = IngestionReport(
            n_input=len(rows),
            n_parsed=len(parsed),
            rejected=tuple(sorted(rejected, key=lambda r: r.row)),
        )
        self.logger.info(
            f"Parsed {report.n_parsed}/{report.n_input} {self.label} rows "
            f"({report.n_rejected} rejected)"
        )
        return parsed, report

    def finalize(self, parsed: list) -> Tuple[list, List[IngestionError]]:
        """Cross-row checks; returns kept records and rejected errors."""
        return parsed, []


class RunParser(BaseTableParser):
    @property
    def required_columns(self) -> List[str]:
        return ["model_id", "task_id", "task_family", "human_minutes", "success"]

    @property
    def label(self) -> str:
        return "runs"

    def parse_row(self, row: Dict[str, Any], row_number: int) -> Tuple[int, RunRecord, bool]:
        if _is_blank(row["model_id"]) or _is_blank(row["task_id"]):
            raise IngestionError("model_id and task_id must be non-empty", row=row_number)
        model_id = str(row["model_id"]).strip()
        task_id = str(row["task_id"]).strip()

        try:
            minutes = float(row["human_minutes"])
        except (TypeError, ValueError):
            minutes = float("nan")
        if not math.isfinite(minutes) or minutes <= 0:
            raise NonPositiveDifficulty(
                f"human_minutes must be a positive number, got {row['human_minutes']!r}",
                row=row_number,
            )

        try:
            success = _parse_binary(row["success"])
        except (TypeError, ValueError):
            raise NonBinarySuccess(
                f"success must be 0 or 1, got {row['success']!r}", row=row_number
            )

        weight = 1.0
        if "weight" in row and not _is_blank(row["weight"]):
            try:
                weight = float(row["weight"])
            except (TypeError, ValueError):
                weight = float("nan")
            if not math.isfinite(weight) or weight <= 0:
                raise IngestionError(f"weight must be positive, got {row['weight']!r}", row=row_number)

        has_attempt = "attempt" in row and not _is_blank(row["attempt"])
        attempt = _parse_attempt(row["attempt"], row_number) if has_attempt else 0

        record = RunRecord(
            model_id=model_id,
            task_id=task_id,
            task_family=TaskFamily.parse(row["task_family"]),
            human_minutes=minutes,
            success=success,
            attempt=attempt,
            weight=weight,
        )
        return row_number, record, has_attempt

    def finalize(self, parsed: list) -> Tuple[list, List[IngestionError]]:
        # Repeated attempts without an explicit index are numbered in file order.
        counters: Dict[Tuple[str, str], int] = {}
        seen = set()
        kept, rejected = [], []
        for row_number, record, has_attempt in parsed:
            pair = (record.model_id, record.task_id)
            if not has_attempt:
                record = record.model_copy(update={"attempt": counters.get(pair, 0)})
            counters[pair] = max(counters.get(pair, 0), record.attempt + 1)
            key = (record.model_id, record.task_id, record.attempt)
            if key in seen:
                rejected.append(
                    DuplicateRun(
                        f"duplicate run {record.model_id}/{record.task_id} attempt {record.attempt}",
                        row=row_number,
                    )
                )
                continue
            seen.add(key)
            kept.append(record)
        return kept, rejected


class ModelParser(BaseTableParser):
    @property
    def required_columns(self) -> List[str]:
        return ["model_id", "release_date", "is_sota", "k_thinking"]

    @property
    def label(self) -> str:
        return "models"

    def parse_row(self, row: Dict[str, Any], row_number: int) -> ModelRecord:
        if _is_blank(row["model_id"]):
            raise IngestionError("model_id must be non-empty", row=row_number)
        try:
            released = to_date(str(row["release_date"]))
        except InvalidDate:
            raise UnparseableDate(
                f"release_date {row['release_date']!r} is not YYYY-MM-DD", row=row_number
            )
        try:
            is_sota = bool(_parse_binary(row["is_sota"]))
            k_thinking = _parse_binary(row["k_thinking"])
        except (TypeError, ValueError):
            raise IngestionError("is_sota and k_thinking must be 0 or 1", row=row_number)
        return ModelRecord(
            model_id=str(row["model_id"]).strip(),
            release_date=released,
            is_sota=is_sota,
            k_thinking=k_thinking,
        )


def parse_runs(
    source: Source, fmt: Optional[TableFormat] = None, strict: bool = False
) -> RunTable:
    """
    Ingest evaluation runs.

    Args:
        source: Bytes, binary file object or path of a runs CSV/JSONL file.
        fmt: Table format; inferred from the file suffix when omitted.
        strict: Raise the first row error instead of collecting it.

    Returns:
        RunTable whose report accounts for every input row.
    """
    fmt = fmt or TableFormat.infer(source)
    records, report = RunParser(strict=strict).parse(source, fmt)
    return RunTable(records=tuple(records), report=report)


def parse_models(source: Source, fmt: Optional[TableFormat] = None) -> ModelTable:
    """Ingest model metadata; any malformed row aborts the load."""
    fmt = fmt or TableFormat.infer(source)
    records, _ = ModelParser(strict=True).parse(source, fmt)
    return ModelTable.from_records(records)
