import math
from datetime import date

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from app.dataset.records import ModelRecord, ModelTable, RunRecord, RunTable
from app.dataset.synthetic import log_uniform_minutes, simulate_runs
from app.dataset.timescale import DEFAULT_SCALE
from app.errors import DegenerateDesign, DomainError, ModelNotFound
from app.fitting.config import FitConfig, PriorSpec, horizon_config, map_config
from app.fitting.gradcheck import finite_difference_check
from app.fitting.map import MapProblem, map_fit, map_objective
from app.fitting.metrics import mean_squared_error, mse_against_horizons
from app.fitting.optimizer import gradient_converged, multi_start_minimize, perturbed_starts, quasi_newton
from app.fitting.results import FitKind, GrowthFit, Specification
from app.fitting.specs import fit_specification
from app.fitting.trend import log_r_squared, mse_sigmoid_fit, ols_log_fit
from app.growth.curves import model_horizon
from app.growth.params import ExpTrendParams, GrowthParams, LinkKind, SingleSigmoidParams
from app.horizon.estimator import HorizonEstimate, fit_horizon

FAST = FitConfig(seed=0, restarts=2, ascent_steps=200, max_iterations=400)


def _exact_horizons(models: ModelTable, beta0: float, beta1: float):
    return [
        HorizonEstimate(
            model_id=m.model_id,
            h_model=math.exp(beta0 + beta1 * DEFAULT_SCALE.encode(m.release_date)),
            beta_model=1.0,
            converged=True,
        )
        for m in models
    ]


class TestGradientCheck:
    def test_quadratic(self):
        def quadratic(x):
            return float(x @ x), 2.0 * x

        assert finite_difference_check(quadratic, np.array([1.0, -2.0, 0.5])) < 1e-8

    def test_quadratic_at_three(self):
        def square(x):
            return float(x[0] ** 2), np.array([2.0 * x[0]])

        assert finite_difference_check(square, np.array([3.0])) <= 1e-9

    def test_constant(self):
        assert finite_difference_check(lambda x: (4.0, np.zeros_like(x)), np.array([1.0, 2.0])) == 0.0

    def test_detects_wrong_gradient(self):
        assert finite_difference_check(lambda x: (float(x @ x), x), np.array([1.0, 2.0])) > 0.1

    def test_step_must_be_positive(self):
        with pytest.raises(DomainError):
            finite_difference_check(lambda x: (0.0, x), np.zeros(2), step=0.0)


class TestOptimizer:
    def test_scaled_convergence(self):
        assert gradient_converged(np.array([1e-6]), 1e3, 1e-8)
        assert not gradient_converged(np.array([1e-6]), 0.5, 1e-8)

    def test_perturbed_starts_are_seeded(self):
        config = FitConfig(seed=3, restarts=4)
        a = perturbed_starts(np.ones(3), config)
        b = perturbed_starts(np.ones(3), config)
        assert len(a) == 4
        np.testing.assert_array_equal(a[0], np.ones(3))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_multi_start_finds_minimum(self):
        def bowl(x):
            return float(np.sum((x - 2.0) ** 2)), 2.0 * (x - 2.0)

        best, outcomes = multi_start_minimize(bowl, perturbed_starts(np.zeros(2), FAST), FAST)
        assert len(outcomes) == 2
        assert best.converged
        np.testing.assert_allclose(best.x, [2.0, 2.0], atol=1e-6)


    def test_newton_polish_is_capped(self):
        def rosenbrock(x):
            value = (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2
            grad = np.array([-2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] ** 2), 200.0 * (x[1] - x[0] ** 2)])
            return float(value), grad

        calls = []

        def hessian(x):
            calls.append(x)
            return np.array([[2.0 - 400.0 * x[1] + 1200.0 * x[0] ** 2, -400.0 * x[0]], [-400.0 * x[0], 200.0]])

        x0 = np.array([-1.2, 1.0])
        quasi_newton(rosenbrock, x0, 1e-8, max_iterations=1, hess=hessian, polish_iterations=3)
        assert 0 < len(calls) <= 4
        calls.clear()
        quasi_newton(rosenbrock, x0, 1e-8, max_iterations=1, hess=hessian, polish_iterations=0)
        assert calls == []

    def test_map_recipe_bounds_polish(self):
        assert map_config().polish_iterations == 50
        assert map_config().max_iterations == 5000


class TestTrendFits:
    def test_ols_recovers_line(self):
        d = np.linspace(0.0, 6.0, 10)
        params = ols_log_fit(np.column_stack([d, np.exp(-1.0 + 0.9 * d)]))
        assert params.beta0 == pytest.approx(-1.0)
        assert params.beta1 == pytest.approx(0.9)
        assert log_r_squared(np.column_stack([d, np.exp(-1.0 + 0.9 * d)]), params) == pytest.approx(1.0)

    def test_ols_exact_line(self):
        d = np.linspace(0.0, 5.0, 6)
        params = ols_log_fit(np.column_stack([d, np.exp(1.0 + 2.0 * d)]))
        np.testing.assert_allclose([params.beta0, params.beta1], [1.0, 2.0], atol=1e-12)

    def test_ols_two_points(self):
        params = ols_log_fit([(0.0, 1.0), (1.0, 2.0)])
        assert params.beta0 == pytest.approx(0.0, abs=1e-12)
        assert params.beta1 == pytest.approx(math.log(2.0))

    def test_ols_needs_two_dates(self):
        with pytest.raises(DegenerateDesign):
            ols_log_fit([(1.0, 2.0), (1.0, 3.0)])

    def test_sigmoid_fit_recovers_parameters(self):
        d = np.linspace(0.0, 8.0, 20)
        h = 100.0 / (1.0 + np.exp(-(2.0 * d - 8.0)))
        params, mse = mse_sigmoid_fit(np.column_stack([d, h]))
        assert params.gamma == pytest.approx(100.0, rel=1e-4)
        assert params.delta1 == pytest.approx(2.0, rel=1e-4)
        assert params.delta2 == pytest.approx(-8.0, rel=1e-4)
        assert mse < 1e-8

    def test_sigmoid_fit_needs_three_points(self):
        with pytest.raises(DomainError):
            mse_sigmoid_fit([(0.0, 1.0), (1.0, 2.0)])

    def test_mean_squared_error(self):
        assert mean_squared_error([0.0, 0.0], [3.0, 4.0]) == 12.5


class TestMapObjective:
    @pytest.mark.parametrize(
        "link, n_points", [(LinkKind.SIGMOID, 50), (LinkKind.EXPONENTIAL, 10), (LinkKind.BSPLINE, 10)]
    )
    def test_gradient_matches_finite_differences(self, small_runs, small_models, link, n_points):
        problem = MapProblem(link, small_runs, small_models)
        start = problem.default_start()
        rng = np.random.default_rng(7)
        for _ in range(n_points):
            x = start + rng.normal(scale=0.3, size=start.size)
            assert finite_difference_check(problem.objective, x, step=1e-5, floor=1e-8) <= 1e-5

    def test_layout(self, small_runs, small_models):
        sigmoid = MapProblem(LinkKind.SIGMOID, small_runs, small_models)
        spline = MapProblem(LinkKind.BSPLINE, small_runs, small_models)
        assert sigmoid.size == 2 + 4 + 5
        assert spline.size == 2 + 12 + 2 + 5

    def test_unpack_inverts_pack(self, small_runs, small_models):
        problem = MapProblem(LinkKind.SIGMOID, small_runs, small_models)
        params = GrowthParams(
            gamma1=40.0, gamma2=1.5, base_params=(0.6, -2.0), reasoning_params=(1.2, -6.0), link=LinkKind.SIGMOID
        )
        unpacked, betas, _ = problem.unpack(problem.pack(params, {"alpha": math.log(0.7)}))
        assert unpacked.gamma1 == pytest.approx(40.0)
        assert unpacked.reasoning_params == pytest.approx((1.2, -6.0))
        assert betas["alpha"] == pytest.approx(0.7)
        assert betas["echo"] == pytest.approx(1.0)

    def test_map_objective_matches_problem(self, small_runs, small_models):
        params = GrowthParams(
            gamma1=40.0, gamma2=1.5, base_params=(0.6, -2.0), reasoning_params=(1.2, -6.0), link=LinkKind.SIGMOID
        )
        value, grad = map_objective(params, None, small_runs, small_models)
        problem = MapProblem(LinkKind.SIGMOID, small_runs, small_models)
        expected, _ = problem.objective(problem.pack(params))
        assert value == pytest.approx(expected)
        assert grad.shape == (problem.size,)

    def test_stronger_prior_lowers_posterior(self, small_runs, small_models):
        params = GrowthParams(
            gamma1=40.0, gamma2=1.5, base_params=(0.6, -2.0), reasoning_params=(1.2, -6.0), link=LinkKind.SIGMOID
        )
        loose, _ = map_objective(params, None, small_runs, small_models, PriorSpec(normal_sd=10.0))
        tight, _ = map_objective(params, None, small_runs, small_models, PriorSpec(normal_sd=1.0))
        assert tight < loose

    def test_zero_runs_leave_the_prior(self, small_models):
        params = GrowthParams(
            gamma1=1.0, gamma2=1.0, base_params=(1.0, 0.0), reasoning_params=(1.0, 0.0), link=LinkKind.SIGMOID
        )
        value, _ = map_objective(params, None, RunTable(), small_models)
        expected = 4 * stats.norm.logpdf(1.0, scale=10.0) + 2 * stats.norm.logpdf(0.0, scale=10.0)
        assert value == pytest.approx(expected)

    def test_unknown_model(self, small_runs):
        models = ModelTable.from_records(
            [ModelRecord(model_id="alpha", release_date=date(2020, 1, 1), is_sota=True)]
        )
        with pytest.raises(ModelNotFound):
            MapProblem(LinkKind.SIGMOID, small_runs, models)


class TestMapFit:
    def test_sigmoid_link_fit(self, small_runs, small_models):
        fit = map_fit(LinkKind.SIGMOID, small_runs, small_models, config=FAST, require_convergence=False)
        assert fit.kind == FitKind.MAP_JOINT
        assert fit.specification == Specification.SIGMOID_LINK
        assert set(fit.per_model_beta) == set(small_models.ids)
        assert np.isfinite(fit.objective)
        d = DEFAULT_SCALE.encode_many([m.release_date for m in small_models])
        assert np.all(np.diff(fit.predict_base(d)) >= 0)

    def test_improves_on_warm_start(self, small_runs, small_models):
        problem = MapProblem(LinkKind.EXPONENTIAL, small_runs, small_models)
        horizons = [
            fit_horizon(small_runs.for_model(m), horizon_config(FAST.seed), model_id=m) for m in problem.model_ids
        ]
        x0 = problem.warm_start(
            np.log([h.h_model for h in horizons]), np.log([h.beta_model for h in horizons])
        )
        start_value, _ = problem.objective(x0)
        fit = map_fit(LinkKind.EXPONENTIAL, small_runs, small_models, config=FAST, require_convergence=False)
        assert fit.objective >= start_value

    def test_deterministic(self, small_runs, small_models):
        a = map_fit(LinkKind.SIGMOID, small_runs, small_models, config=FAST, require_convergence=False)
        b = map_fit(LinkKind.SIGMOID, small_runs, small_models, config=FAST, require_convergence=False)
        assert a == b


class TestMapRecovery:
    RECIPE = FitConfig(seed=0, restarts=2, max_iterations=5000)

    @staticmethod
    def _dates(models):
        return DEFAULT_SCALE.encode_many([m.release_date for m in models]), [m.k_thinking for m in models]

    def test_single_run_at_the_horizon(self, small_models):
        params = GrowthParams(
            gamma1=40.0, gamma2=1.5, base_params=(0.6, -2.0), reasoning_params=(1.2, -6.0), link=LinkKind.SIGMOID
        )
        h = float(model_horizon(DEFAULT_SCALE.encode(small_models.get("alpha").release_date), 0, params))
        runs = RunTable(records=(RunRecord(model_id="alpha", task_id="t0", human_minutes=h, success=1),))
        problem = MapProblem(LinkKind.SIGMOID, runs, small_models)
        value, _ = problem.log_likelihood(problem.pack(params))
        assert value == pytest.approx(math.log(0.5))

    def test_recovers_simulated_curve(self, pseudo_models, simulate_link_runs, link_truth):
        runs = simulate_link_runs(170, attempts=8)
        fit = map_fit(LinkKind.SIGMOID, runs, pseudo_models, config=self.RECIPE, require_convergence=False)
        d, k = self._dates(pseudo_models)
        np.testing.assert_allclose(fit.predict(d, k), model_horizon(d, k, link_truth), rtol=0.15)

    def test_error_shrinks_with_more_runs(self, pseudo_models, simulate_link_runs, link_truth):
        d, k = self._dates(pseudo_models)
        truth = model_horizon(d, k, link_truth)
        errors = []
        for n_tasks in (50, 500, 5000):
            fit = map_fit(
                LinkKind.SIGMOID, simulate_link_runs(n_tasks), pseudo_models, config=self.RECIPE,
                require_convergence=False,
            )
            errors.append(float(np.max(np.abs(fit.predict(d, k) / truth - 1.0))))
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 0.05

    def test_minutes_scale_prior_pulls_large_gamma1_down(self, pseudo_models):
        # N(0, 10^2) on gamma1 in minutes outweighs the likelihood when the
        # true scale is in the hundreds.
        truth = GrowthParams(
            gamma1=400.0, gamma2=2.0, base_params=(1.2, -6.0), reasoning_params=(1.0, -5.0), link=LinkKind.SIGMOID
        )
        d, k = self._dates(pseudo_models)
        horizons = dict(zip(pseudo_models.ids, model_horizon(d, k, truth)))
        runs = simulate_runs(horizons, log_uniform_minutes(170, 0.1, 960.0, seed=3), betas=0.9, seed=3)
        fit = map_fit(LinkKind.SIGMOID, runs, pseudo_models, config=self.RECIPE, require_convergence=False)
        at_truth, _ = map_objective(truth, {m: math.log(0.9) for m in pseudo_models.ids}, runs, pseudo_models)
        assert fit.objective > at_truth
        assert fit.params.gamma1 < truth.gamma1


class TestSpecifications:
    def test_metr_exp_from_horizons(self, small_models):
        horizons = _exact_horizons(small_models, 0.5, 0.8)
        fit = fit_specification(Specification.METR_EXP, None, small_models, horizons)
        assert fit.kind == FitKind.OLS_LOG
        assert fit.params.beta1 == pytest.approx(0.8)
        assert mse_against_horizons(fit, horizons, small_models) == pytest.approx(0.0, abs=1e-12)

    def test_sigmoid_curve_from_horizons(self, small_models):
        horizons = [
            HorizonEstimate(
                model_id=m.model_id,
                h_model=200.0 / (1.0 + math.exp(-(1.2 * DEFAULT_SCALE.encode(m.release_date) - 5.0))),
                converged=True,
            )
            for m in small_models
        ]
        fit = fit_specification(Specification.SIGMOID_CURVE, None, small_models, horizons)
        assert fit.kind == FitKind.MSE_SIGMOID
        assert fit.objective == pytest.approx(mse_against_horizons(fit, horizons, small_models))

    def test_no_usable_horizons(self, small_models):
        with pytest.raises(DomainError):
            fit_specification(Specification.METR_EXP, None, small_models, [])

    def test_specification_properties(self):
        assert Specification("bspline-link").link == LinkKind.BSPLINE
        assert Specification.METR_EXP.kind == FitKind.OLS_LOG
        assert Specification.SIGMOID_LINK.display_name == "Sigmoid Link"

    def test_fit_validates_params_against_kind(self):
        with pytest.raises(ValidationError):
            GrowthFit(
                specification=Specification.METR_EXP,
                kind=FitKind.OLS_LOG,
                params=SingleSigmoidParams(gamma=1.0, delta1=1.0, delta2=0.0),
                objective=0.0,
            )

    def test_fit_round_trips_through_json(self):
        fit = GrowthFit(
            specification=Specification.METR_EXP,
            kind=FitKind.OLS_LOG,
            params=ExpTrendParams(beta0=0.1, beta1=0.9),
            objective=0.01,
            latest_base_date=6.5,
        )
        assert GrowthFit.model_validate(fit.model_dump(mode="json")) == fit
