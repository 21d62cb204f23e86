"""Joint MAP estimation of the multiplicative growth model on task-level runs."""

import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.optimize import least_squares
from scipy.special import expit

from app.dataset.records import ModelTable, RunTable
from app.dataset.timescale import DEFAULT_SCALE, TimeScale
from app.errors import DomainError, NonConvergence
from app.fitting.config import FitConfig, PriorSpec, horizon_config, map_config
from app.fitting.optimizer import multi_start_minimize, numerical_hessian, perturbed_starts
from app.fitting.results import FitKind, GrowthFit, Specification
from app.growth.links import get_link
from app.growth.params import GrowthParams, LinkKind, SplineSpec
from app.horizon.estimator import HorizonEstimate, fit_horizon
from app.horizon.likelihood import bernoulli_loglik

logger = logging.getLogger(__name__)

# First spline coefficient prior scale.
SPLINE_ANCHOR_SD = 1.0
WARM_START_RIDGE = 1e-3

_SPEC_FOR_LINK = {
    LinkKind.SIGMOID: Specification.SIGMOID_LINK,
    LinkKind.EXPONENTIAL: Specification.EXP_LINK,
    LinkKind.BSPLINE: Specification.BSPLINE_LINK,
}


class MapProblem:
    """
    Log posterior of the multiplicative model in unconstrained coordinates.

    Vector layout: log gamma1, log gamma2, base block, reasoning block,
    [log tau_base, log tau_reasoning for splines], log beta per model.
    Link blocks hold (log slope, intercept) for sigmoid/exponential links and
    log coefficients for splines. Priors apply to constrained values, with
    the log-transform Jacobian added.
    """

    def __init__(
        self,
        link: LinkKind,
        runs: RunTable,
        models: ModelTable,
        priors: Optional[PriorSpec] = None,
        spline_spec: Optional[SplineSpec] = None,
        scale: TimeScale = DEFAULT_SCALE,
    ):
        self.link_kind = LinkKind(link)
        self.link = get_link(self.link_kind)
        self.priors = priors or PriorSpec()
        self.scale = scale
        self.runs = runs

        run_models = runs.model_ids
        for model_id in run_models:
            models.get(model_id)
        present = set(run_models)
        records = [m for m in models.records if m.model_id in present]
        self.model_ids: List[str] = [m.model_id for m in records]
        self.dates = scale.encode_many([m.release_date for m in records])
        self.k = np.array([m.k_thinking for m in records], dtype=float)

        index = {model_id: i for i, model_id in enumerate(self.model_ids)}
        arrays = runs.arrays()
        self.log_t, self.success, self.weight = arrays["log_t"], arrays["success"], arrays["weight"]
        self.run_model = np.array([index[r.model_id] for r in runs.records], dtype=int)

        if self.link_kind == LinkKind.BSPLINE:
            if spline_spec is None:
                all_dates = scale.encode_many([m.release_date for m in models.records])
                spline_spec = SplineSpec.for_dates(all_dates)
            self.n_link = spline_spec.n_basis
        else:
            spline_spec = None
            self.n_link = 2
        self.spline_spec = spline_spec

        self.base = slice(2, 2 + self.n_link)
        self.reasoning = slice(2 + self.n_link, 2 + 2 * self.n_link)
        self.n_curve = 2 + 2 * self.n_link
        self.n_tau = 2 if self.link_kind == LinkKind.BSPLINE else 0
        self.taus = slice(self.n_curve, self.n_curve + self.n_tau)
        self.n_global = self.n_curve + self.n_tau
        self.betas = slice(self.n_global, self.n_global + len(self.model_ids))
        self.size = self.n_global + len(self.model_ids)

    # -- parameter transforms -------------------------------------------------

    def _natural(self, block: np.ndarray) -> Tuple[Tuple[float, ...], np.ndarray]:
        """Link parameters from a block, with d natural / d block (elementwise)."""
        if self.link_kind == LinkKind.BSPLINE:
            c = np.exp(block)
            return tuple(c), c
        slope = float(np.exp(block[0]))
        return (slope, float(block[1])), np.array([slope, 1.0])

    def pack(
        self,
        params: GrowthParams,
        log_betas: Optional[Mapping[str, float]] = None,
        log_taus: Optional[Sequence[float]] = None,
    ) -> np.ndarray:
        if LinkKind(params.link) != self.link_kind:
            raise DomainError(f"{params.link.value} parameters for a {self.link_kind.value} problem")
        if not params.gamma2 > 0:
            raise DomainError("MAP coordinates need gamma2 > 0")
        x = np.zeros(self.size)
        x[0], x[1] = np.log(params.gamma1), np.log(params.gamma2)
        for block, values in ((self.base, params.base_params), (self.reasoning, params.reasoning_params)):
            values = np.asarray(values, dtype=float)
            if self.link_kind == LinkKind.BSPLINE:
                x[block] = np.log(values)
            else:
                x[block] = [np.log(values[0]), values[1]]
        if self.n_tau:
            x[self.taus] = np.log(0.5) if log_taus is None else np.asarray(log_taus, dtype=float)
        log_betas = log_betas or {}
        x[self.betas] = [float(log_betas.get(model_id, 0.0)) for model_id in self.model_ids]
        return x

    def unpack(self, x: np.ndarray) -> Tuple[GrowthParams, Dict[str, float], Tuple[float, ...]]:
        base, _ = self._natural(x[self.base])
        reasoning, _ = self._natural(x[self.reasoning])
        params = GrowthParams(
            gamma1=float(np.exp(x[0])),
            gamma2=float(np.exp(x[1])),
            base_params=base,
            reasoning_params=reasoning,
            link=self.link_kind,
            spline_spec=self.spline_spec,
        )
        betas = {model_id: float(np.exp(v)) for model_id, v in zip(self.model_ids, x[self.betas])}
        taus = tuple(float(t) for t in np.exp(x[self.taus]))
        return params, betas, taus

    # -- objective pieces ------------------------------------------------------

    def log_horizons(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Per-model log horizon and its Jacobian in the curve coordinates."""
        base, base_chain = self._natural(x[self.base])
        reasoning, reasoning_chain = self._natural(x[self.reasoning])
        log_b = self.link.log_value(self.dates, base, self.spline_spec)
        log_r = self.link.log_value(self.dates, reasoning, self.spline_spec)

        # log(1 + gamma2 * r) and its sensitivity, stable for large gamma2 * r.
        a = x[1] + log_r
        share = self.k * expit(a)
        log_h = x[0] + log_b + self.k * np.logaddexp(0.0, a)

        jac = np.zeros((self.dates.size, self.n_curve))
        jac[:, 0] = 1.0
        jac[:, 1] = share
        jac[:, self.base] = self.link.log_jacobian(self.dates, base, self.spline_spec) * base_chain
        jac[:, self.reasoning] = (
            share[:, None] * self.link.log_jacobian(self.dates, reasoning, self.spline_spec) * reasoning_chain
        )
        return log_h, jac

    def log_likelihood(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        grad = np.zeros(self.size)
        if self.run_model.size == 0:
            return 0.0, grad
        log_h, jac = self.log_horizons(x)
        beta = np.exp(x[self.betas])
        z = beta[self.run_model] * (log_h[self.run_model] - self.log_t)
        value, dz = bernoulli_loglik(z, self.success, self.weight)

        n_models = len(self.model_ids)
        per_model = np.bincount(self.run_model, weights=dz, minlength=n_models)
        per_model_z = np.bincount(self.run_model, weights=dz * z, minlength=n_models)
        grad[: self.n_curve] = jac.T @ (beta * per_model)
        grad[self.betas] = per_model_z
        return value, grad

    def log_prior(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        sd = self.priors.normal_sd
        value = 0.0
        grad = np.zeros(self.size)

        def positive(idx) -> None:
            nonlocal value
            p = np.exp(x[idx])
            value += float(np.sum(stats.norm.logpdf(p, scale=sd) + x[idx]))
            grad[idx] += 1.0 - p**2 / sd**2

        def real(idx) -> None:
            nonlocal value
            value += float(np.sum(stats.norm.logpdf(x[idx], scale=sd)))
            grad[idx] += -x[idx] / sd**2

        positive(0)
        positive(1)
        positive(self.betas)

        if self.link_kind != LinkKind.BSPLINE:
            for block in (self.base, self.reasoning):
                positive(block.start)
                real(block.start + 1)
            return value, grad

        rw_scale = self.priors.spline_rw_sd_prior
        for block, tau_idx in ((self.base, self.taus.start), (self.reasoning, self.taus.start + 1)):
            c = np.exp(x[block])
            tau = float(np.exp(x[tau_idx]))
            step = np.diff(c)
            value += float(
                stats.norm.logpdf(c[0], scale=SPLINE_ANCHOR_SD)
                + np.sum(stats.norm.logpdf(step, scale=tau))
                + np.sum(x[block])
                + stats.halfnorm.logpdf(tau, scale=rw_scale)
                + x[tau_idx]
            )
            dc = np.zeros_like(c)
            dc[0] -= c[0] / SPLINE_ANCHOR_SD**2
            dc[1:] -= step / tau**2
            dc[:-1] += step / tau**2
            grad[block] += dc * c + 1.0
            grad[tau_idx] += float(np.sum(step**2)) / tau**2 - step.size - tau**2 / rw_scale**2 + 1.0
        return value, grad

    def objective(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        """Log posterior (up to a constant) and its gradient."""
        ll, ll_grad = self.log_likelihood(x)
        lp, lp_grad = self.log_prior(x)
        return ll + lp, ll_grad + lp_grad

    # -- initialization --------------------------------------------------------

    def default_start(self, log_h_targets: Optional[np.ndarray] = None) -> np.ndarray:
        """Heuristic start; gamma1 centres the curve on the target log horizons."""
        x = np.zeros(self.size)
        x[1] = 0.0
        if self.link_kind == LinkKind.SIGMOID:
            mid = float(np.median(self.dates)) if self.dates.size else 0.0
            late = float(np.max(self.dates)) if self.dates.size else 0.0
            x[self.base] = [0.0, -mid]
            x[self.reasoning] = [0.0, -late]
        elif self.link_kind == LinkKind.EXPONENTIAL:
            x[self.base] = [np.log(0.5), 0.0]
            x[self.reasoning] = [np.log(0.5), 0.0]
        else:
            x[self.taus] = np.log(0.5)
        if log_h_targets is not None and self.dates.size:
            log_h, _ = self.log_horizons(x)
            x[0] = float(np.mean(log_h_targets - (log_h - x[0])))
        return x

    def warm_start(self, log_h_targets: np.ndarray, log_betas: Optional[np.ndarray] = None) -> np.ndarray:
        """Curve parameters fitted to per-model log horizons by ridge-stabilized least squares."""
        x0 = self.default_start(log_h_targets)
        if log_betas is not None:
            x0[self.betas] = log_betas
        if not self.dates.size:
            return x0
        curve0 = x0[: self.n_curve].copy()
        ridge = np.sqrt(WARM_START_RIDGE)

        def residuals(curve: np.ndarray) -> np.ndarray:
            x = x0.copy()
            x[: self.n_curve] = curve
            log_h, _ = self.log_horizons(x)
            return np.concatenate([log_h - log_h_targets, ridge * (curve - curve0)])

        def jacobian(curve: np.ndarray) -> np.ndarray:
            x = x0.copy()
            x[: self.n_curve] = curve
            _, jac = self.log_horizons(x)
            return np.vstack([jac, ridge * np.eye(self.n_curve)])

        try:
            with np.errstate(over="ignore", invalid="ignore"):
                result = least_squares(residuals, curve0, jac=jacobian, method="trf", max_nfev=2000)
            if np.all(np.isfinite(result.x)):
                x0[: self.n_curve] = result.x
        except (ValueError, FloatingPointError) as e:
            logger.warning(f"{self.link_kind.value} warm start failed, using heuristic start: {e}")
        return x0


def map_objective(
    params: GrowthParams,
    log_betas: Optional[Mapping[str, float]],
    runs: RunTable,
    models: ModelTable,
    priors: Optional[PriorSpec] = None,
    log_taus: Optional[Sequence[float]] = None,
    scale: TimeScale = DEFAULT_SCALE,
) -> Tuple[float, np.ndarray]:
    """
    Log posterior of the multiplicative model at `params` and per-model log slopes.

    Returns:
        (value, gradient) with the gradient in MapProblem's unconstrained layout.

    Raises:
        ModelNotFound: a run's model has no metadata.
    """
    problem = MapProblem(params.link, runs, models, priors, spline_spec=params.spline_spec, scale=scale)
    return problem.objective(problem.pack(params, log_betas, log_taus))


def _initial_horizons(problem: MapProblem, config: FitConfig) -> List[HorizonEstimate]:
    estimates = []
    for model_id in problem.model_ids:
        estimates.append(fit_horizon(problem.runs.for_model(model_id), horizon_config(config.seed), model_id=model_id))
    return estimates


def map_fit(
    link: LinkKind,
    runs: RunTable,
    models: ModelTable,
    priors: Optional[PriorSpec] = None,
    config: Optional[FitConfig] = None,
    horizons: Optional[Sequence[HorizonEstimate]] = None,
    scale: TimeScale = DEFAULT_SCALE,
    require_convergence: bool = True,
) -> GrowthFit:
    """
    Maximize the log posterior of the multiplicative model.

    Args:
        link: Link used for both components.
        runs: Task-level runs, already restricted to the analysed models.
        models: Metadata for every model in `runs`.
        priors: Prior scales.
        config: Optimizer recipe; defaults to the MAP recipe.
        horizons: Per-model horizon fits used for the warm start; refit when absent.
        require_convergence: Raise NonConvergence when no restart converged.

    Returns:
        GrowthFit with strictly positive constrained parameters.
    """
    config = config or map_config()
    specification = _SPEC_FOR_LINK[LinkKind(link)]
    if len(runs) == 0:
        raise DomainError(f"{specification.value}: no runs to fit")
    problem = MapProblem(link, runs, models, priors, scale=scale)
    logger.info(
        f"Fitting {specification.value}: {len(runs)} runs, {len(problem.model_ids)} models, "
        f"{problem.size} parameters"
    )

    by_model = {h.model_id: h for h in (horizons or []) if h.usable}
    if any(model_id not in by_model for model_id in problem.model_ids):
        by_model.update({h.model_id: h for h in _initial_horizons(problem, config) if h.usable})
    log_h = np.array([np.log(by_model[m].h_model) for m in problem.model_ids])
    log_beta = np.array([np.log(by_model[m].beta_model or 1.0) for m in problem.model_ids])
    x0 = problem.warm_start(log_h, log_beta)

    def negative(x: np.ndarray) -> Tuple[float, np.ndarray]:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            value, grad = problem.objective(x)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            return np.inf, np.zeros_like(x)
        return -value, -grad

    best, outcomes = multi_start_minimize(
        negative, perturbed_starts(x0, config), config, hess=numerical_hessian(negative)
    )
    if not np.isfinite(best.value):
        raise NonConvergence(f"{specification.value}: every restart diverged", specification=specification.value)
    if not best.converged:
        message = f"{specification.value}: best restart stopped at |g|={best.grad_norm:.2e}"
        if require_convergence:
            raise NonConvergence(message, specification=specification.value)
        logger.warning(f"✗ {message}")

    params, betas, taus = problem.unpack(best.x)
    logger.info(
        f"✓ {specification.value}: log posterior {-best.value:.3f} "
        f"(restart {best.restart} of {len(outcomes)}, {best.iterations} iterations)"
    )
    return GrowthFit(
        specification=specification,
        kind=FitKind.MAP_JOINT,
        params=params,
        per_model_beta=betas,
        objective=-best.value,
        converged=best.converged,
        seed=config.seed,
        latest_base_date=float(np.max(problem.dates)),
    )
