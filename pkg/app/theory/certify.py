"""Grid certification of the sigmoid-product regime bounds."""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.config import THEOREM_ALPHAS, THEOREM_KS, THEOREM_MARGIN, THEOREM_RESOLUTION, THEOREM_SLACK
from app.errors import DomainError
from app.services.base import BaseBatchService
from app.theory.sigmoid_product import SigmoidProductSpec, log_sigmoid_product, theorem_bounds

logger = logging.getLogger(__name__)


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float
    f: float
    lower: float
    upper: float
    regime: str


class BoundCertificate(BaseModel):
    """Outcome of checking every grid point of one spec; passes iff nothing was violated."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: SigmoidProductSpec
    x_grid: np.ndarray
    regime_labels: Tuple[str, ...]
    violations: Tuple[Violation, ...] = ()
    worst_log_margin: float = math.inf
    worst_x: Optional[float] = None
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and not self.violations

    def summary(self) -> Dict[str, Any]:
        return {
            "k": self.spec.k,
            "alpha": self.spec.alpha,
            "passed": self.passed,
            "n_points": int(self.x_grid.size),
            "n_violations": len(self.violations),
            "worst_log_margin": self.worst_log_margin if math.isfinite(self.worst_log_margin) else None,
            "worst_x": self.worst_x,
            "violations": [v.model_dump() for v in self.violations[:10]],
            "error": self.error,
        }


def default_spec_grid() -> List[SigmoidProductSpec]:
    return [SigmoidProductSpec(k=k, alpha=alpha) for k in THEOREM_KS for alpha in THEOREM_ALPHAS]


def x_grid_for(spec: SigmoidProductSpec, resolution: float, x_range: Optional[Tuple[float, float]] = None,
               margin: float = THEOREM_MARGIN) -> np.ndarray:
    low, high = x_range if x_range is not None else (-margin, spec.plateau_onset + margin)
    n = int(math.floor((high - low) / resolution + 1e-9)) + 1
    return low + resolution * np.arange(n)


def certify_spec(
    spec: SigmoidProductSpec,
    resolution: float = THEOREM_RESOLUTION,
    x_range: Optional[Tuple[float, float]] = None,
    slack: float = THEOREM_SLACK,
) -> BoundCertificate:
    grid = x_grid_for(spec, resolution, x_range)
    log_f = log_sigmoid_product(grid, spec)
    values = np.exp(log_f)
    labels, violations = [], []
    worst, worst_x = math.inf, None

    for x, f, lf in zip(grid, values, log_f):
        bounds = theorem_bounds(float(x), spec)
        labels.append("+".join(b.label for b in bounds))
        for b in bounds:
            if f < b.lower - slack or f > b.upper + slack:
                violations.append(Violation(x=float(x), f=float(f), lower=b.lower, upper=b.upper, regime=b.label))
            # Margin measured on the log scale, where every regime's bounds are comparable.
            margin = min(lf - math.log(b.lower), math.log(b.upper) - lf) if b.lower > 0 else math.log(b.upper) - lf
            if margin < worst:
                worst, worst_x = margin, float(x)

    return BoundCertificate(
        spec=spec,
        x_grid=grid,
        regime_labels=tuple(labels),
        violations=tuple(violations),
        worst_log_margin=float(worst),
        worst_x=worst_x,
    )


class CertificationBatch(BaseBatchService):
    def __init__(self, specs: Sequence[SigmoidProductSpec], resolution: float,
                 x_range: Optional[Tuple[float, float]], slack: float, workers: int = 1):
        super().__init__(workers=workers)
        self.specs = list(specs)
        self.resolution = resolution
        self.x_range = x_range
        self.slack = slack

    def get_items(self) -> list:
        return self.specs

    def process_item(self, item: SigmoidProductSpec) -> BoundCertificate:
        return certify_spec(item, self.resolution, self.x_range, self.slack)

    def on_failure(self, item: SigmoidProductSpec, error: Exception) -> BoundCertificate:
        return BoundCertificate(spec=item, x_grid=np.array([]), regime_labels=(), error=str(error))

    def is_success(self, result: BoundCertificate) -> bool:
        return result.passed

    def _get_item_id(self, item: SigmoidProductSpec) -> str:
        return f"k={item.k} alpha={item.alpha:g}"


def certify_bounds(
    spec_grid: Sequence[SigmoidProductSpec],
    x_resolution: float = THEOREM_RESOLUTION,
    x_range: Optional[Tuple[float, float]] = None,
    slack: float = THEOREM_SLACK,
    workers: int = 1,
) -> List[BoundCertificate]:
    """
    Certify the regime bounds on a grid for each spec.

    Args:
        spec_grid: Specs to certify, in report order.
        x_resolution: Grid step.
        x_range: Fixed grid interval; per spec [-10, k alpha + 10] when omitted.
        slack: Absolute tolerance on each bound comparison.
        workers: Specs certified concurrently.

    Returns:
        One certificate per spec, in input order.
    """
    if not x_resolution > 0:
        raise DomainError(f"grid resolution must be positive, got {x_resolution}")
    if not spec_grid:
        return []
    batch = CertificationBatch(spec_grid, x_resolution, x_range, slack, workers=workers)
    certificates = batch.process()["results"]
    failed = [c for c in certificates if not c.passed]
    if failed:
        logger.warning(f"✗ {len(failed)}/{len(certificates)} specs violate the regime bounds")
    else:
        logger.info(f"✓ all {len(certificates)} specs satisfy the regime bounds")
    return certificates
