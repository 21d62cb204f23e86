from .records import (
    IngestionReport,
    ModelRecord,
    ModelTable,
    RejectedRow,
    RunRecord,
    RunTable,
    TaskFamily,
    filter_sota,
)
from .parsers import TableFormat, parse_models, parse_runs
from .timescale import DEFAULT_SCALE, TimeScale, decode_date, encode_date
from .metr import convert_metr_runs

__all__ = [
    "IngestionReport",
    "ModelRecord",
    "ModelTable",
    "RejectedRow",
    "RunRecord",
    "RunTable",
    "TaskFamily",
    "filter_sota",
    "TableFormat",
    "parse_models",
    "parse_runs",
    "DEFAULT_SCALE",
    "TimeScale",
    "decode_date",
    "encode_date",
    "convert_metr_runs",
]
