"""Parameter types for the horizon-vs-date growth models."""

import enum
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config import SPLINE_DEGREE, SPLINE_N_BASIS, SPLINE_SPAN_EXTENSION
from app.errors import InvalidKnots


class LinkKind(str, enum.Enum):
    SIGMOID = "sigmoid"
    EXPONENTIAL = "exponential"
    BSPLINE = "bspline"


class SplineSpec(BaseModel):
    """
    Clamped B-spline basis definition.

    The basis count follows the breakpoint convention
    n_basis = breakpoints + degree - 1, so degree 5 with two breakpoints
    (the span ends) gives six Bernstein-like functions.
    """

    model_config = ConfigDict(frozen=True)

    degree: int = Field(default=SPLINE_DEGREE, ge=0)
    n_basis: int = Field(default=SPLINE_N_BASIS, ge=1)
    knot_vector: Tuple[float, ...]

    @classmethod
    def clamped(
        cls,
        low: float,
        high: float,
        degree: int = SPLINE_DEGREE,
        n_basis: int = SPLINE_N_BASIS,
    ) -> "SplineSpec":
        """Uniform clamped knots on [low, high]."""
        if n_basis < degree + 1:
            raise InvalidKnots(f"{n_basis} basis functions cannot carry degree {degree}")
        if not high > low:
            raise InvalidKnots(f"empty knot span [{low}, {high}]")
        breakpoints = np.linspace(low, high, n_basis + 1 - degree)
        knots = [low] * degree + list(breakpoints) + [high] * degree
        return cls(degree=degree, n_basis=n_basis, knot_vector=tuple(float(k) for k in knots))

    @classmethod
    def for_dates(
        cls,
        dates: Sequence[float],
        extension: float = SPLINE_SPAN_EXTENSION,
        degree: int = SPLINE_DEGREE,
        n_basis: int = SPLINE_N_BASIS,
    ) -> "SplineSpec":
        """Span the encoded release dates, widened by `extension` of their range on each side."""
        d = np.asarray(dates, dtype=float)
        low, high = float(np.min(d)), float(np.max(d))
        pad = extension * (high - low) if high > low else 1.0
        return cls.clamped(low - pad, high + pad, degree=degree, n_basis=n_basis)

    @property
    def span(self) -> Tuple[float, float]:
        return self.knot_vector[0], self.knot_vector[-1]


class GrowthParams(BaseModel):
    """
    Multiplicative model h = gamma1 * b(d) * (1 + gamma2 * r(d) * k_thinking).

    base_params are (delta1, delta2) and reasoning_params (theta1, theta2) for
    the sigmoid and exponential links; spline coefficients for BSPLINE.
    """

    model_config = ConfigDict(frozen=True)

    gamma1: float = Field(gt=0, allow_inf_nan=False)
    gamma2: float = Field(ge=0, allow_inf_nan=False)
    base_params: Tuple[float, ...]
    reasoning_params: Tuple[float, ...]
    link: LinkKind
    spline_spec: Optional[SplineSpec] = None

    @model_validator(mode="after")
    def _check_link_arity(self) -> "GrowthParams":
        if self.link == LinkKind.BSPLINE:
            if self.spline_spec is None:
                raise ValueError("BSPLINE link needs a spline_spec")
            arity = self.spline_spec.n_basis
            if any(c <= 0 for c in self.base_params + self.reasoning_params):
                raise ValueError("spline coefficients must be positive")
        else:
            arity = 2
            if self.base_params[:1] and self.base_params[0] <= 0:
                raise ValueError("delta1 must be positive")
            if self.reasoning_params[:1] and self.reasoning_params[0] <= 0:
                raise ValueError("theta1 must be positive")
        if len(self.base_params) != arity or len(self.reasoning_params) != arity:
            raise ValueError(f"{self.link.value} link takes {arity} parameters per component")
        return self


class SingleSigmoidParams(BaseModel):
    """h = gamma * sigmoid(delta1 * d + delta2)."""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(gt=0, allow_inf_nan=False)
    delta1: float = Field(gt=0, allow_inf_nan=False)
    delta2: float = Field(allow_inf_nan=False)


class ExpTrendParams(BaseModel):
    """log h = beta0 + beta1 * d."""

    model_config = ConfigDict(frozen=True)

    beta0: float = Field(allow_inf_nan=False)
    beta1: float = Field(allow_inf_nan=False)
