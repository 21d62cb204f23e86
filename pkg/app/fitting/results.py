"""Fitted growth models and the named specifications that produce them."""

import enum
from typing import Dict, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.errors import DomainError
from app.growth.curves import metr_exponential, model_horizon, single_sigmoid_curve
from app.growth.links import get_link
from app.growth.params import ExpTrendParams, GrowthParams, LinkKind, SingleSigmoidParams


class FitKind(str, enum.Enum):
    OLS_LOG = "ols_log"
    MSE_SIGMOID = "mse_sigmoid"
    MAP_JOINT = "map_joint"


class Specification(str, enum.Enum):
    METR_EXP = "metr-exp"
    SIGMOID_CURVE = "sigmoid-curve"
    SIGMOID_LINK = "sigmoid-link"
    EXP_LINK = "exp-link"
    BSPLINE_LINK = "bspline-link"

    @property
    def display_name(self) -> str:
        return _TITLES[self]

    @property
    def kind(self) -> FitKind:
        if self == Specification.METR_EXP:
            return FitKind.OLS_LOG
        if self == Specification.SIGMOID_CURVE:
            return FitKind.MSE_SIGMOID
        return FitKind.MAP_JOINT

    @property
    def link(self) -> Optional[LinkKind]:
        return _LINKS.get(self)


_TITLES = {
    Specification.METR_EXP: "METR Exponential",
    Specification.SIGMOID_CURVE: "Sigmoid Curve",
    Specification.SIGMOID_LINK: "Sigmoid Link",
    Specification.EXP_LINK: "Exponential Link",
    Specification.BSPLINE_LINK: "B-Spline Link",
}

_LINKS = {
    Specification.SIGMOID_LINK: LinkKind.SIGMOID,
    Specification.EXP_LINK: LinkKind.EXPONENTIAL,
    Specification.BSPLINE_LINK: LinkKind.BSPLINE,
}

_PARAM_TYPES = {
    FitKind.OLS_LOG: ExpTrendParams,
    FitKind.MSE_SIGMOID: SingleSigmoidParams,
    FitKind.MAP_JOINT: GrowthParams,
}


class GrowthFit(BaseModel):
    """
    One fitted specification.

    `objective` is the MSE of the curve for MSE_SIGMOID, the mean squared log
    residual for OLS_LOG and the log posterior for MAP_JOINT.
    `latest_base_date` is the encoded release date of the newest model in the
    fit, used for reasoning projections on top of the best base model.
    """

    model_config = ConfigDict(frozen=True, protected_namespaces=())

    specification: Specification
    kind: FitKind
    params: Union[GrowthParams, SingleSigmoidParams, ExpTrendParams]
    per_model_beta: Dict[str, float] = Field(default_factory=dict)
    objective: float = Field(allow_inf_nan=False)
    converged: bool = True
    seed: int = 0
    latest_base_date: Optional[float] = None

    @model_validator(mode="after")
    def _params_match_kind(self) -> "GrowthFit":
        if not isinstance(self.params, _PARAM_TYPES[self.kind]):
            raise ValueError(f"{self.kind.value} fit cannot hold {type(self.params).__name__}")
        if any(not b > 0 for b in self.per_model_beta.values()):
            raise ValueError("per-model slopes must be positive")
        return self

    @property
    def is_multiplicative(self) -> bool:
        return self.kind == FitKind.MAP_JOINT

    def predict(self, d, k_thinking=0):
        """Horizon in minutes at encoded date(s) d."""
        if self.kind == FitKind.OLS_LOG:
            return metr_exponential(d, self.params)
        if self.kind == FitKind.MSE_SIGMOID:
            return single_sigmoid_curve(d, self.params)
        return model_horizon(d, k_thinking, self.params)

    def predict_base(self, d):
        """gamma1 * b(d) for multiplicative fits."""
        self._require_multiplicative("base")
        return model_horizon(d, 0, self.params)

    def predict_reasoning(self, d, base_date: Optional[float] = None):
        """Reasoning regime with the base capability frozen at `base_date` (default: latest model)."""
        self._require_multiplicative("reasoning")
        p: GrowthParams = self.params
        anchor = self.latest_base_date if base_date is None else base_date
        if anchor is None:
            raise DomainError("reasoning projection needs a base anchor date")
        link = get_link(p.link)
        x = np.atleast_1d(np.asarray(d, dtype=float))
        b = link.value(np.array([anchor]), p.base_params, p.spline_spec)[0]
        r = link.value(x, p.reasoning_params, p.spline_spec)
        value = p.gamma1 * b * (1.0 + p.gamma2 * r)
        return float(value[0]) if np.ndim(d) == 0 else value

    def _require_multiplicative(self, component: str) -> None:
        if not self.is_multiplicative:
            raise DomainError(f"{self.specification.value} has no {component} component")
