import math
from datetime import date, timedelta

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from app.dataset.timescale import DEFAULT_SCALE
from app.errors import DomainError, EmptyHorizons, ForecastError, GridMismatch, NonPositiveSlope
from app.fitting.results import FitKind, GrowthFit, Specification
from app.forecast.plots import plot_horizons
from app.forecast.projection import (
    Component,
    ForecastSeries,
    InflectionComponent,
    date_grid,
    divergence_date,
    inflection_date,
    inflection_reports,
    project,
)
from app.forecast.render import markdown_to_html, report_to_markdown
from app.forecast.report import comparison_report, reference_deviations
from app.growth.params import ExpTrendParams, GrowthParams, LinkKind, SingleSigmoidParams
from app.horizon.estimator import HorizonEstimate
from app.services.artifacts import Provenance, read_csv, write_csv, write_json

SIGMOID = SingleSigmoidParams(gamma=100.0, delta1=2.0, delta2=-8.0)


def _fit(specification, kind, params, **extra):
    return GrowthFit(specification=specification, kind=kind, params=params, objective=0.0, **extra)


def _exp_fit(beta0=math.log(5.0), beta1=0.0):
    return _fit(Specification.METR_EXP, FitKind.OLS_LOG, ExpTrendParams(beta0=beta0, beta1=beta1))


def _link_fit():
    params = GrowthParams(
        gamma1=50.0, gamma2=3.0, base_params=(1.5, -8.0), reasoning_params=(1.0, -7.0), link=LinkKind.SIGMOID
    )
    return _fit(Specification.SIGMOID_LINK, FitKind.MAP_JOINT, params, latest_base_date=6.5)


def _series(label, values, start=date(2024, 1, 1)):
    return ForecastSeries(
        label=label,
        points=tuple((start + timedelta(days=7 * i), float(v)) for i, v in enumerate(values)),
        fit_kind="test",
    )


class TestInflection:
    def test_zero_intercept_is_epoch(self):
        assert inflection_date(1.0, 0.0) == date(2019, 1, 1)

    def test_midpoint(self):
        assert inflection_date(2.0, -8.0) == DEFAULT_SCALE.decode(4.0)

    def test_slope_must_be_positive(self):
        with pytest.raises(NonPositiveSlope):
            inflection_date(0.0, 1.0)

    def test_reports_for_link_fit(self):
        reports = inflection_reports(_link_fit(), date(2025, 1, 1))
        assert [r.component for r in reports] == [InflectionComponent.BASE, InflectionComponent.REASONING]
        assert reports[0].date == DEFAULT_SCALE.decode(8.0 / 1.5)
        assert reports[1].date == DEFAULT_SCALE.decode(7.0)
        assert reports[1].in_past is False

    def test_exponential_has_no_inflection(self):
        assert inflection_reports(_exp_fit(), date(2025, 1, 1)) == []


class TestProjection:
    def test_grid_includes_end_on_grid(self):
        grid = date_grid(date(2024, 1, 1), date(2024, 1, 15), 7)
        assert grid == [date(2024, 1, 1), date(2024, 1, 8), date(2024, 1, 15)]

    def test_grid_needs_ordered_bounds(self):
        with pytest.raises(DomainError):
            date_grid(date(2024, 1, 1), date(2024, 1, 1))

    def test_constant_fit_is_flat(self):
        series = project(_exp_fit(), "2019-01-01", "2020-01-01")
        np.testing.assert_allclose(series.values, 5.0)
        assert series.label == "metr-exp"

    def test_exponential_is_log_linear(self):
        series = project(_exp_fit(0.0, 0.7), "2019-01-01", "2029-01-01")
        np.testing.assert_allclose(np.diff(np.log(series.values), 2), 0.0, atol=1e-10)

    def test_sigmoid_reaches_plateau(self):
        fit = _fit(Specification.SIGMOID_CURVE, FitKind.MSE_SIGMOID, SIGMOID)
        series = project(fit, "2019-01-01", "2029-01-01")
        assert series.values[-1] == pytest.approx(100.0, rel=0.01)

    def test_sigmoid_curvature_changes_sign_once_at_inflection(self):
        fit = _fit(Specification.SIGMOID_CURVE, FitKind.MSE_SIGMOID, SIGMOID)
        series = project(fit, "2019-01-01", "2029-01-01")
        curvature = np.diff(series.values, 2)
        signs = np.sign(curvature[np.abs(curvature) > 1e-9])
        assert np.count_nonzero(np.diff(signs)) == 1
        change = int(np.flatnonzero(np.diff(np.sign(curvature)))[0]) + 1
        assert abs((series.dates[change] - inflection_date(2.0, -8.0)).days) <= 14

    def test_multiplicative_bounded(self):
        series = project(_link_fit(), "2019-01-01", "2035-01-01", k_thinking=1)
        assert np.all(series.values <= 50.0 * (1.0 + 3.0))

    def test_components(self):
        fit = _link_fit()
        base = project(fit, "2019-01-01", "2030-01-01", component=Component.BASE)
        reasoning = project(fit, "2019-01-01", "2030-01-01", component="reasoning")
        assert base.label == "sigmoid-link:base"
        assert np.all(reasoning.values >= fit.predict_base(6.5) - 1e-12)

    def test_component_needs_multiplicative_fit(self):
        with pytest.raises(DomainError):
            project(_exp_fit(), "2019-01-01", "2020-01-01", component=Component.BASE)

    def test_deterministic(self):
        assert project(_link_fit(), "2019-01-01", "2029-01-01") == project(_link_fit(), "2019-01-01", "2029-01-01")

    def test_series_validation(self):
        with pytest.raises(ValidationError):
            _series("bad", [1.0, -1.0])
        with pytest.raises(ValidationError):
            ForecastSeries(label="x", points=((date(2024, 1, 2), 1.0), (date(2024, 1, 1), 1.0)), fit_kind="t")


class TestDivergence:
    def test_identical_series(self):
        a = _series("a", [1.0, 2.0, 4.0])
        assert divergence_date(a, a) is None

    def test_constant_factor_diverges_immediately(self):
        a, b = _series("a", [1.0, 2.0, 4.0]), _series("b", [2.0, 4.0, 8.0])
        assert divergence_date(a, b) == a.dates[0]

    def test_knee(self):
        growth = np.exp(0.1 * np.arange(40))
        capped = np.minimum(growth, growth[20])
        a, b = _series("a", growth), _series("b", capped)
        knee = a.dates[20]
        first = divergence_date(a, b, 1.25)
        assert first is not None and first > knee
        assert (first - knee).days <= 7 * 3

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatch):
            divergence_date(_series("a", [1.0, 2.0]), _series("b", [1.0, 2.0], start=date(2024, 1, 2)))

    def test_threshold_must_exceed_one(self):
        a = _series("a", [1.0])
        with pytest.raises(DomainError):
            divergence_date(a, a, 1.0)


class TestComparisonReport:
    def _setup(self, small_models):
        d = DEFAULT_SCALE.encode_many([m.release_date for m in small_models])
        horizons = [
            HorizonEstimate(model_id=m.model_id, h_model=float(math.exp(0.3 + 0.6 * x)), converged=True)
            for m, x in zip(small_models, d)
        ]
        return horizons

    def test_perfect_fit_ranks_first(self, small_models):
        horizons = self._setup(small_models)
        perfect = _exp_fit(0.3, 0.6)
        rough = _fit(Specification.SIGMOID_CURVE, FitKind.MSE_SIGMOID, SIGMOID)
        table = comparison_report([rough, perfect], horizons, small_models)
        assert table.ranking() == [Specification.METR_EXP, Specification.SIGMOID_CURVE]
        assert table.rows[0].mse == pytest.approx(0.0, abs=1e-12)
        assert table.rows[0].doubling_time_months == pytest.approx(12.0 * math.log(2.0) / 0.6)
        assert table.row("sigmoid-curve").inflections[0].component == InflectionComponent.SINGLE_CURVE
        assert list(table.to_frame().columns) == ["specification", "name", "mse"]

    def test_needs_fits(self, small_models):
        with pytest.raises(ForecastError):
            comparison_report([], self._setup(small_models), small_models)

    def test_needs_horizons(self, small_models):
        with pytest.raises(EmptyHorizons):
            comparison_report([_exp_fit()], [], small_models)

    def test_reference_deviations(self, small_models):
        horizons = self._setup(small_models)
        sigmoid = _fit(Specification.SIGMOID_CURVE, FitKind.MSE_SIGMOID, SIGMOID)
        table = comparison_report([sigmoid], horizons, small_models)
        deviations = reference_deviations(table, None, check_divergence=True)
        assert [d["check"] for d in deviations] == ["single_curve_inflection", "divergence"]
        assert deviations[1]["observed"] is None

    def test_deviation_within_tolerance_is_silent(self, small_models):
        horizons = self._setup(small_models)
        x = DEFAULT_SCALE.encode(date(2025, 6, 6))
        fit = _fit(Specification.SIGMOID_CURVE, FitKind.MSE_SIGMOID, SingleSigmoidParams(gamma=200.0, delta1=1.0, delta2=-x))
        table = comparison_report([fit], horizons, small_models)
        assert reference_deviations(table) == []


class TestRendering:
    REPORT = {
        "provenance": {"tool": "horizon-forecast", "version": "0.1.0", "seed": 0},
        "mse_table": [{"rank": 1, "name": "METR Exponential", "specification": "metr-exp", "mse": 1.5, "converged": True}],
        "inflections": [
            {
                "specification": "sigmoid-curve",
                "component": "SINGLE_CURVE",
                "date": "2025-06-06",
                "reference_date": "2025-11-19",
                "in_past": True,
            }
        ],
        "trend": {"doubling_time_months": 7.0, "log_r_squared": 0.98},
        "divergence": {"a": "metr-exp", "b": "sigmoid-link", "ratio": 1.25, "date": "2026-07-03"},
        "deviations": [],
    }

    def test_markdown(self):
        text = report_to_markdown(self.REPORT)
        assert "| 1 | METR Exponential | 1.50 | yes |" in text
        assert "2025-06-06 (past relative to 2025-11-19)" in text
        assert "Doubling time: 7.00 months" in text
        assert "**2026-07-03**" in text

    def test_html(self):
        html = markdown_to_html(report_to_markdown(self.REPORT))
        assert html.startswith("<!DOCTYPE html>")
        assert "<table>" in html


class TestArtifacts:
    def test_csv_provenance_round_trip(self, tmp_path):
        provenance = Provenance(seed=3, inputs={"runs": "ab" * 32})
        path = write_csv(pd.DataFrame({"a": [1.5], "b": ["x"]}), tmp_path / "t.csv", provenance)
        lines = path.read_text().splitlines()
        assert lines[:3] == ["# tool=horizon-forecast", "# version=0.1.0", "# seed=3"]
        frame = read_csv(path)
        assert list(frame.columns) == ["a", "b"] and frame.iloc[0]["b"] == "x"

    def test_hash_in_ids_survives_read_back(self, tmp_path):
        frame = pd.DataFrame({"model_id": ["claude#3", "gpt"], "task_id": ["t#1", "t2"]})
        path = write_csv(frame, tmp_path / "ids.csv", Provenance(seed=0))
        back = read_csv(path)
        assert list(back["model_id"]) == ["claude#3", "gpt"]
        assert list(back["task_id"]) == ["t#1", "t2"]

    def test_json_is_sorted_and_stable(self, tmp_path):
        first = write_json({"b": 1, "a": [1.0]}, tmp_path / "a.json", Provenance(seed=0)).read_bytes()
        second = write_json({"a": [1.0], "b": 1}, tmp_path / "b.json", Provenance(seed=0)).read_bytes()
        assert first == second

    def test_json_rejects_nan(self, tmp_path):
        with pytest.raises(ValueError):
            write_json({"a": float("nan")}, tmp_path / "nan.json")

    def test_svg_is_deterministic(self, tmp_path):
        fit = _fit(Specification.SIGMOID_CURVE, FitKind.MSE_SIGMOID, SIGMOID)
        series = [project(fit, "2019-01-01", "2029-01-01")]
        reports = inflection_reports(fit, date(2025, 1, 1))
        observed = ([date(2020, 1, 1), date(2023, 1, 1)], [1.0, 20.0])
        a = plot_horizons(series, tmp_path / "a.svg", observed, reports, log_scale=True).read_bytes()
        b = plot_horizons(series, tmp_path / "b.svg", observed, reports, log_scale=True).read_bytes()
        assert a.startswith(b"<?xml")
        assert a == b
