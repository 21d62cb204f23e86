"""Numeric encoding of calendar dates as years since a fixed epoch."""

import math
from datetime import date, datetime, timedelta
from typing import Iterable, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.config import DAYS_PER_YEAR, EPOCH
from app.errors import InvalidDate

DateLike = Union[date, datetime, str]


def to_date(value: DateLike) -> date:
    """Coerce an ISO-8601 string, datetime or date into a `date`."""
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    if isinstance(value, str):
        try:
            return date.fromisoformat(value.strip())
        except ValueError as exc:
            raise InvalidDate(f"'{value}' is not an ISO-8601 date") from exc
    raise InvalidDate(f"cannot interpret {value!r} as a date")


class TimeScale(BaseModel):
    """Affine map from calendar days to reals: (date - epoch) / days_per_year."""

    model_config = ConfigDict(frozen=True)

    epoch: date = EPOCH
    days_per_year: float = Field(default=DAYS_PER_YEAR, gt=0)

    def encode(self, value: DateLike) -> float:
        return (to_date(value) - self.epoch).days / self.days_per_year

    def encode_many(self, values: Iterable[DateLike]) -> np.ndarray:
        return np.array([self.encode(v) for v in values], dtype=float)

    def decode(self, x: float) -> date:
        # Half-day ties round up: 0.5 years (182.625 days) decodes to 2019-07-03.
        if not math.isfinite(x):
            raise InvalidDate(f"cannot decode non-finite value {x}")
        days = math.floor(x * self.days_per_year + 0.5)
        try:
            return self.epoch + timedelta(days=days)
        except OverflowError as exc:
            raise InvalidDate(f"{x} years from {self.epoch} is outside the calendar") from exc


DEFAULT_SCALE = TimeScale()


def encode_date(scale: TimeScale, value: DateLike) -> float:
    return scale.encode(value)


def decode_date(scale: TimeScale, x: float) -> date:
    return scale.decode(x)
