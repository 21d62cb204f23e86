"""Product of evenly spaced sigmoids and its three-regime bounds."""

import enum
import math
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import expit, log_expit

ArrayLike = Union[float, np.ndarray]

# Points within this distance of a regime boundary belong to both regimes.
BOUNDARY_TOLERANCE = 1e-9


class SigmoidProductSpec(BaseModel):
    """f(x) = prod_{i=1..k} sigmoid(x - i * alpha), with alpha >= 2."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=1)
    alpha: float = Field(ge=2.0, allow_inf_nan=False)

    @property
    def plateau_onset(self) -> float:
        return self.k * self.alpha


class Regime(str, enum.Enum):
    PRE = "PRE"
    MID = "MID"
    POST = "POST"


class RegimeBound(BaseModel):
    model_config = ConfigDict(frozen=True)

    regime: Regime
    j: Optional[int] = None
    lower: float
    upper: float

    @property
    def label(self) -> str:
        return f"MID({self.j})" if self.regime == Regime.MID else self.regime.value


class RegimeSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: SigmoidProductSpec
    inflections: List[float]
    plateau_onset: float
    description: str


def log_sigmoid_product(x: ArrayLike, spec: SigmoidProductSpec) -> ArrayLike:
    arr = np.asarray(x, dtype=float)
    shifts = spec.alpha * np.arange(1, spec.k + 1)
    value = np.sum(log_expit(arr[..., None] - shifts), axis=-1)
    return float(value) if np.ndim(x) == 0 else value


def sigmoid_product(x: ArrayLike, spec: SigmoidProductSpec) -> ArrayLike:
    """prod_i sigmoid(x - i * alpha), accumulated in log space."""
    value = np.exp(log_sigmoid_product(x, spec))
    return float(value) if np.ndim(x) == 0 else value


def log_growth_rate(x: ArrayLike, spec: SigmoidProductSpec) -> ArrayLike:
    """d log f / dx = sum_i sigmoid(i * alpha - x); tends to k far below the first inflection."""
    arr = np.asarray(x, dtype=float)
    shifts = spec.alpha * np.arange(1, spec.k + 1)
    value = np.sum(expit(shifts - arr[..., None]), axis=-1)
    return float(value) if np.ndim(x) == 0 else value


def theorem_bounds(x: float, spec: SigmoidProductSpec) -> List[RegimeBound]:
    """
    Every regime whose closed interval contains x, with its bounds on f(x).

    PRE (x <= 0): c/5 <= f <= c with c = exp(k x - alpha k (k+1) / 2).
    MID(j) (j alpha <= x <= (j+1) alpha):
        exp(-alpha (k-j+1)(k-j) / 2) / 20 <= f <= exp(-alpha (k-j-1)(k-j) / 2).
    POST (x >= k alpha): 1/4 <= f <= 1.
    """
    k, alpha = spec.k, spec.alpha
    bounds: List[RegimeBound] = []
    if x <= BOUNDARY_TOLERANCE:
        c = math.exp(k * x - alpha * k * (k + 1) / 2.0)
        bounds.append(RegimeBound(regime=Regime.PRE, lower=c / 5.0, upper=c))
    for j in range(k):
        if j * alpha - BOUNDARY_TOLERANCE <= x <= (j + 1) * alpha + BOUNDARY_TOLERANCE:
            bounds.append(
                RegimeBound(
                    regime=Regime.MID,
                    j=j,
                    lower=math.exp(-alpha * (k - j + 1) * (k - j) / 2.0) / 20.0,
                    upper=math.exp(-alpha * (k - j - 1) * (k - j) / 2.0),
                )
            )
    if x >= k * alpha - BOUNDARY_TOLERANCE:
        bounds.append(RegimeBound(regime=Regime.POST, lower=0.25, upper=1.0))
    return bounds


def growth_regime_summary(spec: SigmoidProductSpec) -> RegimeSummary:
    inflections = [i * spec.alpha for i in range(1, spec.k + 1)]
    description = (
        f"exponential growth at rate {spec.k} below 0; component inflections at "
        f"{', '.join(f'{p:g}' for p in inflections)}; plateau from {spec.plateau_onset:g}"
    )
    return RegimeSummary(
        spec=spec, inflections=inflections, plateau_onset=spec.plateau_onset, description=description
    )
