"""Link functions mapping an encoded release date to a capability component."""

from abc import ABC, abstractmethod
from typing import Dict, Sequence, Union

import numpy as np
from scipy.special import expit, log_expit

from app.errors import (
    DomainError,
    InvalidKnots,
    LengthMismatch,
    NonPositiveCoefficient,
    OverflowGuard,
)
from app.growth.params import LinkKind, SplineSpec

ArrayLike = Union[float, Sequence[float], np.ndarray]

MAX_EXPONENT = 700.0


def _scalar_or_array(value: np.ndarray, like: ArrayLike):
    return float(value) if np.ndim(like) == 0 else value


def _slope_intercept(p: Sequence[float]) -> tuple:
    if len(p) != 2:
        raise LengthMismatch(f"link takes (slope, intercept), got {len(p)} values")
    slope, intercept = float(p[0]), float(p[1])
    if not slope > 0:
        raise DomainError(f"link slope must be positive, got {slope}")
    return slope, intercept


def sigmoid_link(d: ArrayLike, p: Sequence[float]) -> ArrayLike:
    """sigmoid(p1 * d + p2)."""
    slope, intercept = _slope_intercept(p)
    value = expit(slope * np.asarray(d, dtype=float) + intercept)
    return _scalar_or_array(value, d)


def exponential_link(d: ArrayLike, p: Sequence[float]) -> ArrayLike:
    """exp(p1 * d + p2); exponents above 700 raise OverflowGuard."""
    slope, intercept = _slope_intercept(p)
    exponent = slope * np.asarray(d, dtype=float) + intercept
    if np.any(exponent > MAX_EXPONENT):
        raise OverflowGuard(f"exponent {np.max(exponent):.1f} exceeds {MAX_EXPONENT:g}")
    return _scalar_or_array(np.exp(exponent), d)


def check_knots(spec: SplineSpec) -> np.ndarray:
    knots = np.asarray(spec.knot_vector, dtype=float)
    p = spec.degree
    if knots.size != spec.n_basis + p + 1:
        raise InvalidKnots(
            f"{knots.size} knots cannot define {spec.n_basis} basis functions of degree {p}"
        )
    if not np.all(np.isfinite(knots)) or np.any(np.diff(knots) < 0):
        raise InvalidKnots("knot vector must be finite and nondecreasing")
    if np.any(knots[: p + 1] != knots[0]) or np.any(knots[-(p + 1):] != knots[-1]):
        raise InvalidKnots(f"knot vector is not clamped (end multiplicity {p + 1})")
    if not knots[-1] > knots[0]:
        raise InvalidKnots("knot span is empty")
    return knots


def basis_matrix(d: ArrayLike, spec: SplineSpec) -> np.ndarray:
    """Cox-de Boor basis values, one row per date; dates are clamped to the knot span."""
    knots = check_knots(spec)
    x = np.clip(np.atleast_1d(np.asarray(d, dtype=float)), knots[0], knots[-1])

    # Degree-0 indicators on half-open spans; the right end joins the last nonempty span.
    basis = ((knots[:-1] <= x[:, None]) & (x[:, None] < knots[1:])).astype(float)
    last = np.flatnonzero(knots[1:] > knots[:-1])[-1]
    basis[x == knots[-1], last] = 1.0

    for q in range(1, spec.degree + 1):
        n = knots.size - q - 1
        left_den = knots[q:q + n] - knots[:n]
        right_den = knots[q + 1:q + 1 + n] - knots[1:1 + n]
        with np.errstate(divide="ignore", invalid="ignore"):
            left = np.where(left_den > 0, (x[:, None] - knots[:n]) / left_den, 0.0)
            right = np.where(right_den > 0, (knots[q + 1:q + 1 + n] - x[:, None]) / right_den, 0.0)
        basis = left * basis[:, :n] + right * basis[:, 1:n + 1]
    return basis


def bspline_basis(d: ArrayLike, spec: SplineSpec) -> np.ndarray:
    """Basis vector of length n_basis at d (a matrix for array d)."""
    matrix = basis_matrix(d, spec)
    return matrix[0] if np.ndim(d) == 0 else matrix


def _check_coefficients(coeffs: Sequence[float], spec: SplineSpec) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.size != spec.n_basis:
        raise LengthMismatch(f"{c.size} coefficients for {spec.n_basis} basis functions")
    if np.any(~(c > 0)):
        raise NonPositiveCoefficient("spline coefficients must be positive")
    return c


def spline_link(d: ArrayLike, coeffs: Sequence[float], spec: SplineSpec) -> ArrayLike:
    """sum_i coeffs_i * B_i(d), positive for positive coefficients."""
    c = _check_coefficients(coeffs, spec)
    value = basis_matrix(d, spec) @ c
    return _scalar_or_array(value if np.ndim(d) else value[0], d)


class Link(ABC):
    """A component function with its log and parameter Jacobian of the log."""

    kind: LinkKind

    @abstractmethod
    def value(self, d: np.ndarray, p: Sequence[float], spec: SplineSpec = None) -> np.ndarray:
        pass

    @abstractmethod
    def log_value(self, d: np.ndarray, p: Sequence[float], spec: SplineSpec = None) -> np.ndarray:
        pass

    @abstractmethod
    def log_jacobian(self, d: np.ndarray, p: Sequence[float], spec: SplineSpec = None) -> np.ndarray:
        """d log value / d p, shape (len(d), len(p))."""
        pass

    def jacobian(self, d: np.ndarray, p: Sequence[float], spec: SplineSpec = None) -> np.ndarray:
        return self.value(d, p, spec)[:, None] * self.log_jacobian(d, p, spec)


class SigmoidLink(Link):
    kind = LinkKind.SIGMOID

    def value(self, d, p, spec=None):
        return np.atleast_1d(sigmoid_link(np.asarray(d, dtype=float), p))

    def log_value(self, d, p, spec=None):
        slope, intercept = _slope_intercept(p)
        return log_expit(slope * np.atleast_1d(np.asarray(d, dtype=float)) + intercept)

    def log_jacobian(self, d, p, spec=None):
        slope, intercept = _slope_intercept(p)
        d = np.atleast_1d(np.asarray(d, dtype=float))
        tail = expit(-(slope * d + intercept))
        return np.column_stack([tail * d, tail])


class ExponentialLink(Link):
    kind = LinkKind.EXPONENTIAL

    def value(self, d, p, spec=None):
        return np.atleast_1d(exponential_link(np.asarray(d, dtype=float), p))

    def log_value(self, d, p, spec=None):
        slope, intercept = _slope_intercept(p)
        return slope * np.atleast_1d(np.asarray(d, dtype=float)) + intercept

    def log_jacobian(self, d, p, spec=None):
        d = np.atleast_1d(np.asarray(d, dtype=float))
        return np.column_stack([d, np.ones_like(d)])


class BSplineLink(Link):
    kind = LinkKind.BSPLINE

    def value(self, d, p, spec=None):
        c = _check_coefficients(p, spec)
        return basis_matrix(d, spec) @ c

    def log_value(self, d, p, spec=None):
        return np.log(self.value(d, p, spec))

    def log_jacobian(self, d, p, spec=None):
        c = _check_coefficients(p, spec)
        basis = basis_matrix(d, spec)
        return basis / (basis @ c)[:, None]


LINKS: Dict[LinkKind, Link] = {
    LinkKind.SIGMOID: SigmoidLink(),
    LinkKind.EXPONENTIAL: ExponentialLink(),
    LinkKind.BSPLINE: BSplineLink(),
}


def get_link(kind: LinkKind) -> Link:
    return LINKS[LinkKind(kind)]
