"""Converter for the run files published in METR's eval-analysis repository."""

import io
import logging
from typing import Dict, Optional

import pandas as pd

from app.dataset.parsers import Source, TableFormat, parse_runs, read_source
from app.dataset.records import RunTable
from app.errors import EmptyInput, MissingColumn

logger = logging.getLogger(__name__)

# Upstream column -> canonical column.
METR_COLUMNS: Dict[str, str] = {
    "alias": "model_id",
    "task_id": "task_id",
    "task_source": "task_family",
    "human_minutes": "human_minutes",
    "score_binarized": "success",
}
METR_WEIGHT_COLUMN = "invsqrt_task_weight"


def convert_metr_runs(
    source: Source,
    aliases: Optional[Dict[str, str]] = None,
    use_weights: bool = False,
) -> RunTable:
    """
    Map an upstream all-runs JSONL file onto the canonical run schema.

    Args:
        source: JSONL bytes, file object or path.
        aliases: Optional renames from upstream model alias to our model_id.
        use_weights: Carry the upstream inverse-sqrt task weight as the run weight.

    Returns:
        RunTable parsed through the canonical validator.
    """
    raw = read_source(source)
    if not raw.strip():
        raise EmptyInput("no runs")
    frame = pd.read_json(io.BytesIO(raw), lines=True, dtype=False)
    for column in METR_COLUMNS:
        if column not in frame.columns:
            raise MissingColumn(column)

    canonical = frame[list(METR_COLUMNS)].rename(columns=METR_COLUMNS)
    if aliases:
        canonical["model_id"] = canonical["model_id"].map(lambda a: aliases.get(a, a))
    if use_weights and METR_WEIGHT_COLUMN in frame.columns:
        canonical["weight"] = frame[METR_WEIGHT_COLUMN]
    # Scores are already binarized upstream; fractional leftovers are rejected downstream.
    canonical["success"] = canonical["success"].map(lambda v: int(v) if v in (0, 1, 0.0, 1.0) else v)

    logger.info(f"Converted {len(canonical)} upstream runs to the canonical layout")
    payload = canonical.to_json(orient="records", lines=True).encode("utf-8")
    return parse_runs(payload, fmt=TableFormat.JSONL)
