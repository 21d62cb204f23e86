"""Published horizon tables: loading them in place of refits, and the horizons.csv layout."""

import math
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from app.dataset.parsers import BaseTableParser, Source, TableFormat
from app.errors import IngestionError, NonPositiveDifficulty
from app.horizon.estimator import FitStatus, HorizonEstimate

HORIZON_COLUMNS = ["model_id", "h_minutes", "beta", "loglik", "n_runs", "converged"]


def _optional_float(value: Any) -> Optional[float]:
    if value is None:
        return None
    text = str(value).strip()
    if text == "" or text.lower() == "nan":
        return None
    return float(text)


class HorizonParser(BaseTableParser):
    @property
    def required_columns(self) -> List[str]:
        return ["model_id", "h_minutes"]

    @property
    def label(self) -> str:
        return "horizons"

    def parse_row(self, row: Dict[str, Any], row_number: int) -> HorizonEstimate:
        model_id = str(row["model_id"]).strip()
        if not model_id:
            raise IngestionError("model_id must be non-empty", row=row_number)
        try:
            h = _optional_float(row["h_minutes"])
            beta = _optional_float(row.get("beta"))
        except ValueError:
            raise IngestionError("h_minutes and beta must be numeric", row=row_number)
        if h is None:
            return HorizonEstimate(model_id=model_id, status=FitStatus.FAILED, error="no horizon in table")
        if not math.isfinite(h) or h <= 0:
            raise NonPositiveDifficulty(f"h_minutes must be positive, got {row['h_minutes']!r}", row=row_number)
        if beta is not None and not beta > 0:
            raise IngestionError(f"beta must be positive, got {row.get('beta')!r}", row=row_number)
        converged = str(row.get("converged", "1")).strip() not in ("0", "False", "false")
        return HorizonEstimate(model_id=model_id, h_model=h, beta_model=beta, converged=converged)


def parse_horizons(source: Source, fmt: Optional[TableFormat] = None) -> List[HorizonEstimate]:
    """
    Load published 50% horizons (`model_id,h_minutes[,beta]`).

    Any malformed row aborts the load.
    """
    fmt = fmt or TableFormat.infer(source)
    estimates, _ = HorizonParser(strict=True).parse(source, fmt)
    return estimates


def horizons_frame(estimates: Sequence[HorizonEstimate]) -> pd.DataFrame:
    """Rows for horizons.csv; failed fits keep their row with empty values."""
    rows = []
    for e in estimates:
        rows.append(
            {
                "model_id": e.model_id,
                "h_minutes": e.h_model,
                "beta": e.beta_model,
                "loglik": e.log_likelihood,
                "n_runs": e.n_runs,
                "converged": int(e.converged),
            }
        )
    return pd.DataFrame(rows, columns=HORIZON_COLUMNS)


def usable_horizons(estimates: Sequence[HorizonEstimate]) -> List[HorizonEstimate]:
    return [e for e in estimates if e.usable and e.status != FitStatus.FAILED]
