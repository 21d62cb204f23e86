"""Pipeline stages: ingest, per-model horizons, growth fits, projections, report, theorem check."""

import logging
from datetime import date
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from app.config import (
    DEFAULT_MODELS_PATH,
    DEFAULT_OUT_DIR,
    DEFAULT_SEED,
    DIVERGENCE_RATIO,
    FITS_FILE,
    FORECAST_FILE,
    HORIZONS_FILE,
    INGEST_REPORT_FILE,
    MODELS_FILE,
    PROJECTION_END,
    PROJECTION_START,
    PROJECTION_STEP_DAYS,
    REPORT_FILE,
    RUNS_FILE,
    THEOREM_REPORT_FILE,
    THEOREM_RESOLUTION,
)
from app.dataset import ModelTable, RunTable, filter_sota, parse_models, parse_runs
from app.dataset.metr import convert_metr_runs
from app.dataset.timescale import DEFAULT_SCALE
from app.errors import EmptyInput, IngestionError
from app.fitting.config import horizon_config, map_config
from app.fitting.metrics import horizon_points, mse_against_horizons
from app.fitting.results import GrowthFit, Specification
from app.fitting.specs import fit_specification
from app.fitting.trend import log_r_squared
from app.forecast.plots import plot_horizons
from app.forecast.projection import Component, ForecastSeries, divergence_date, project
from app.forecast.render import markdown_to_html, report_to_markdown
from app.forecast.report import ReportTable, comparison_report, reference_deviations
from app.horizon.batch import fit_all_horizons
from app.horizon.estimator import HorizonEstimate
from app.horizon.published import horizons_frame, parse_horizons
from app.services.artifacts import Provenance, read_json, write_csv, write_json
from app.theory.certify import BoundCertificate, certify_bounds, default_spec_grid
from app.theory.sigmoid_product import SigmoidProductSpec

logger = logging.getLogger(__name__)

FORECAST_COLUMNS = ["label", "date", "horizon_minutes"]


class RunManifest(BaseModel):
    """Inputs, outputs and switches of one invocation."""

    model_config = ConfigDict(frozen=True)

    runs_path: Optional[Path] = None
    models_path: Path = DEFAULT_MODELS_PATH
    horizons_path: Optional[Path] = None
    out_dir: Path = DEFAULT_OUT_DIR
    seed: int = DEFAULT_SEED
    specifications: List[Specification] = Field(default_factory=lambda: list(Specification))
    use_published_horizons: bool = False
    sota_only: bool = True
    plots: bool = True
    layout: Literal["canonical", "metr"] = "canonical"
    workers: int = Field(default=1, ge=1)
    start: date = PROJECTION_START
    end: date = PROJECTION_END
    step_days: int = Field(default=PROJECTION_STEP_DAYS, ge=1)
    reference_checks: bool = True

    def provenance(self) -> Provenance:
        inputs = {"runs": self.runs_path, "models": self.models_path}
        if self.use_published_horizons:
            inputs["horizons"] = self.horizons_path
        return Provenance.for_inputs(self.seed, inputs)

    def output(self, name: str) -> Path:
        return self.out_dir / name


def load_models(manifest: RunManifest) -> ModelTable:
    models = parse_models(manifest.models_path)
    if manifest.sota_only:
        models = filter_sota(models)
    if len(models) == 0:
        raise EmptyInput("no models")
    return models


def load_runs(manifest: RunManifest, models: Optional[ModelTable] = None) -> RunTable:
    """Runs in the canonical or upstream layout, restricted to `models` when given."""
    if manifest.runs_path is None:
        raise IngestionError("no runs file given (--runs)")
    if manifest.layout == "metr":
        runs = convert_metr_runs(manifest.runs_path)
    else:
        runs = parse_runs(manifest.runs_path)
    if models is not None:
        runs = runs.restrict(models.ids)
    if len(runs) == 0:
        raise EmptyInput("no runs")
    return runs


def load_fits(path: Path) -> List[GrowthFit]:
    payload = read_json(path)
    fits = []
    for key in sorted(payload.get("fits", {})):
        entry = {k: v for k, v in payload["fits"][key].items() if k not in ("mse", "link")}
        fits.append(GrowthFit.model_validate(entry))
    return fits


def forecast_frame(series: Sequence[ForecastSeries]) -> pd.DataFrame:
    rows = [
        {"label": s.label, "date": day.isoformat(), "horizon_minutes": value}
        for s in series
        for day, value in s.points
    ]
    return pd.DataFrame(rows, columns=FORECAST_COLUMNS)


def run_ingest(manifest: RunManifest) -> Dict[str, Any]:
    """Validate the input tables and write their canonical copies with an ingestion report."""
    models = parse_models(manifest.models_path)
    runs = load_runs(manifest)
    unknown = sorted(set(runs.model_ids) - set(models.ids))
    if unknown:
        logger.warning(f"✗ {len(unknown)} run model(s) have no metadata: {', '.join(unknown[:5])}")

    provenance = manifest.provenance()
    write_csv(runs.to_frame(), manifest.output(RUNS_FILE), provenance)
    write_csv(models.to_frame(), manifest.output(MODELS_FILE), provenance)
    report = {
        "n_input": runs.report.n_input,
        "n_parsed": runs.report.n_parsed,
        "n_rejected": runs.report.n_rejected,
        "rejected": [r.model_dump() for r in runs.report.rejected],
        "n_models": len(models),
        "unknown_models": unknown,
    }
    write_json(report, manifest.output(INGEST_REPORT_FILE), provenance)
    logger.info(
        f"✓ Ingested {runs.report.n_parsed}/{runs.report.n_input} runs "
        f"({runs.report.n_rejected} rejected), {len(models)} models"
    )
    return {**report, "success": True}


def obtain_horizons(manifest: RunManifest, runs: Optional[RunTable], models: ModelTable) -> List[HorizonEstimate]:
    """Published horizons when requested, otherwise one refit per model."""
    if manifest.use_published_horizons:
        if manifest.horizons_path is None:
            raise IngestionError("--use-published-horizons needs a horizons table (--horizons)")
        published = parse_horizons(manifest.horizons_path)
        keep = set(models.ids)
        estimates = [h for h in published if h.model_id in keep]
        logger.info(f"✓ Loaded {len(estimates)} published horizons")
        return estimates
    if runs is None:
        runs = load_runs(manifest, models)
    return fit_all_horizons(runs, models, horizon_config(manifest.seed), workers=manifest.workers)


def run_fit_horizons(manifest: RunManifest) -> Dict[str, Any]:
    models = load_models(manifest)
    horizons = obtain_horizons(manifest, None, models)
    write_csv(horizons_frame(horizons), manifest.output(HORIZONS_FILE), manifest.provenance())
    failed = [h.model_id for h in horizons if not h.usable]
    return {"total": len(horizons), "failed": failed, "horizons": horizons, "success": True}


def fit_growth(
    manifest: RunManifest,
    runs: Optional[RunTable],
    models: ModelTable,
    horizons: Sequence[HorizonEstimate],
) -> List[GrowthFit]:
    fits = []
    for specification in manifest.specifications:
        spec_runs = runs
        if Specification(specification).link is not None and spec_runs is None:
            spec_runs = load_runs(manifest, models)
        fits.append(
            fit_specification(
                specification,
                spec_runs if spec_runs is not None else RunTable(),
                models,
                horizons,
                config=map_config(manifest.seed).model_copy(update={"workers": manifest.workers}),
            )
        )
    return fits


def fits_payload(fits: Sequence[GrowthFit], horizons: Sequence[HorizonEstimate], models: ModelTable) -> Dict[str, Any]:
    scorable = any(h.usable for h in horizons)
    entries = {}
    for fit in fits:
        entry = fit.model_dump(mode="json")
        entry["link"] = fit.specification.link.value if fit.specification.link else None
        entry["mse"] = mse_against_horizons(fit, horizons, models) if scorable else None
        entries[fit.specification.value] = entry
    return {"fits": entries}


def run_fit_trend(manifest: RunManifest) -> Dict[str, Any]:
    """Fit the requested specifications and merge them into fits.json."""
    models = load_models(manifest)
    needs_runs = not manifest.use_published_horizons or any(
        Specification(s).link is not None for s in manifest.specifications
    )
    runs = load_runs(manifest, models) if needs_runs else None
    horizons = obtain_horizons(manifest, runs, models)
    fits = fit_growth(manifest, runs, models, horizons)

    path = manifest.output(FITS_FILE)
    payload = fits_payload(fits, horizons, models)
    if path.exists():
        merged = {k: v for k, v in read_json(path).get("fits", {}).items() if k not in payload["fits"]}
        payload["fits"] = {**merged, **payload["fits"]}
    write_json(payload, path, manifest.provenance())
    return {"fits": fits, "success": True}


def project_fits(manifest: RunManifest, fits: Sequence[GrowthFit]) -> List[ForecastSeries]:
    """Overall curve per fit plus base and reasoning components of multiplicative fits."""
    series = []
    for fit in fits:
        # Multiplicative fits are projected in the reasoning regime of the frontier.
        k_thinking = 1 if fit.is_multiplicative else 0
        series.append(project(fit, manifest.start, manifest.end, manifest.step_days, k_thinking))
        if fit.is_multiplicative:
            for component in (Component.BASE, Component.REASONING):
                series.append(
                    project(fit, manifest.start, manifest.end, manifest.step_days, component=component)
                )
    return series


def run_forecast(manifest: RunManifest, fits: Optional[Sequence[GrowthFit]] = None) -> Dict[str, Any]:
    if fits is None:
        fits = load_fits(manifest.output(FITS_FILE))
    series = project_fits(manifest, fits)
    write_csv(forecast_frame(series), manifest.output(FORECAST_FILE), manifest.provenance())
    return {"series": series, "success": True}


def _divergence(manifest: RunManifest, fits: Sequence[GrowthFit]) -> Optional[Dict[str, Any]]:
    by_spec = {f.specification: f for f in fits}
    a, b = by_spec.get(Specification.METR_EXP), by_spec.get(Specification.SIGMOID_LINK)
    if a is None or b is None:
        return None
    series_a = project(a, manifest.start, manifest.end, manifest.step_days)
    series_b = project(b, manifest.start, manifest.end, manifest.step_days, k_thinking=1)
    when = divergence_date(series_a, series_b, DIVERGENCE_RATIO)
    return {"a": a.specification.value, "b": b.specification.value, "ratio": DIVERGENCE_RATIO, "date": when}


def build_report(
    manifest: RunManifest,
    fits: Sequence[GrowthFit],
    horizons: Sequence[HorizonEstimate],
    models: ModelTable,
    table: Optional[ReportTable] = None,
) -> Dict[str, Any]:
    """report.json payload: ranking, inflections, trend, divergence and reference deviations."""
    table = table or comparison_report(fits, horizons, models)
    report: Dict[str, Any] = {
        "mse_table": [
            {
                "rank": rank,
                "specification": row.specification.value,
                "name": row.name,
                "mse": row.mse,
                "converged": row.converged,
            }
            for rank, row in enumerate(table.rows, 1)
        ],
        "inflections": [
            {
                "specification": row.specification.value,
                "component": i.component.value,
                "date": i.date.isoformat(),
                "reference_date": i.reference_date.isoformat(),
                "in_past": i.in_past,
            }
            for row in table.rows
            for i in row.inflections
        ],
        "trend": {},
        "divergence": None,
        "deviations": [],
    }

    trend_row = table.row(Specification.METR_EXP)
    if trend_row is not None:
        fit = next(f for f in fits if f.specification == Specification.METR_EXP)
        _, d, _, h = horizon_points(horizons, models, DEFAULT_SCALE)
        report["trend"] = {
            "doubling_time_months": trend_row.doubling_time_months,
            "log_r_squared": log_r_squared(np.column_stack([d, h]), fit.params),
        }

    divergence = _divergence(manifest, fits)
    if divergence is not None:
        report["divergence"] = {**divergence, "date": divergence["date"].isoformat() if divergence["date"] else None}

    if manifest.reference_checks:
        report["deviations"] = reference_deviations(
            table,
            divergence["date"] if divergence else None,
            check_divergence=divergence is not None,
        )
    return report


def _observed(horizons: Sequence[HorizonEstimate], models: ModelTable):
    usable = [h for h in horizons if h.usable]
    return [models.get(h.model_id).release_date for h in usable], [h.h_model for h in usable]


def write_plots(
    manifest: RunManifest,
    fits: Sequence[GrowthFit],
    series: Sequence[ForecastSeries],
    horizons: Sequence[HorizonEstimate],
    models: ModelTable,
    table: ReportTable,
) -> List[Path]:
    overall = [s for s in series if ":" not in s.label]
    observed = _observed(horizons, models)
    inflections = table.inflections()
    paths = [
        plot_horizons(overall, manifest.output("fit_linear.svg"), observed, inflections),
        plot_horizons(overall, manifest.output("fit_log.svg"), observed, inflections, log_scale=True),
    ]
    for fit in fits:
        if not fit.is_multiplicative:
            continue
        prefix = fit.specification.value
        components = [s for s in series if s.label == prefix or s.label.startswith(f"{prefix}:")]
        row = table.row(fit.specification)
        paths.append(
            plot_horizons(
                components,
                manifest.output(f"{prefix}_components.svg"),
                observed,
                row.inflections if row else (),
                title=f"{fit.specification.display_name}: base and reasoning components",
            )
        )
    return paths


def run_pipeline(manifest: RunManifest) -> Dict[str, Any]:
    """
    Run every stage end to end and write the full artifact set.

    Returns:
        Execution summary; fit failures propagate so the caller can map them to exit codes.
    """
    logger.info("=" * 60)
    logger.info(f"Horizon forecast pipeline (seed {manifest.seed})")
    logger.info("=" * 60)
    results: Dict[str, Any] = {"seed": manifest.seed, "success": False}
    provenance = manifest.provenance()

    logger.info("\n[1/6] Loading models and runs...")
    models = load_models(manifest)
    needs_runs = not manifest.use_published_horizons or any(
        Specification(s).link is not None for s in manifest.specifications
    )
    runs = load_runs(manifest, models) if needs_runs else None
    logger.info(f"✓ {len(models)} models, {len(runs) if runs is not None else 0} runs")

    logger.info("\n[2/6] Per-model horizons...")
    horizons = obtain_horizons(manifest, runs, models)
    write_csv(horizons_frame(horizons), manifest.output(HORIZONS_FILE), provenance)
    results["horizons"] = {"total": len(horizons), "usable": sum(h.usable for h in horizons)}

    logger.info(f"\n[3/6] Fitting {len(manifest.specifications)} specification(s)...")
    fits = fit_growth(manifest, runs, models, horizons)
    write_json(fits_payload(fits, horizons, models), manifest.output(FITS_FILE), provenance)

    logger.info("\n[4/6] Projecting...")
    series = project_fits(manifest, fits)
    write_csv(forecast_frame(series), manifest.output(FORECAST_FILE), provenance)

    logger.info("\n[5/6] Building report...")
    table = comparison_report(fits, horizons, models)
    report = build_report(manifest, fits, horizons, models, table)
    write_json(report, manifest.output(REPORT_FILE), provenance)
    results["report"] = report

    if manifest.plots:
        logger.info("\n[6/6] Rendering figures...")
        results["figures"] = [p.name for p in write_plots(manifest, fits, series, horizons, models, table)]
    else:
        logger.info("\n[6/6] Figures skipped")

    results["success"] = True
    logger.info("\n" + "=" * 60)
    logger.info("Pipeline Summary")
    logger.info("=" * 60)
    logger.info(f"Horizons: {results['horizons']['usable']}/{results['horizons']['total']} usable")
    for row in report["mse_table"]:
        logger.info(f"  {row['rank']}. {row['name']:<18} MSE {row['mse']:10.2f}")
    logger.info(f"Artifacts in {manifest.out_dir}")
    logger.info("=" * 60)
    return results


def run_verify_theorem(
    manifest: RunManifest,
    specs: Optional[Sequence[SigmoidProductSpec]] = None,
    resolution: float = THEOREM_RESOLUTION,
) -> Dict[str, Any]:
    """Certify the regime bounds; `success` is False when any spec has a violation."""
    specs = list(specs) if specs is not None else default_spec_grid()
    certificates: List[BoundCertificate] = certify_bounds(specs, resolution, workers=manifest.workers)
    failed = [c for c in certificates if not c.passed]
    payload = {
        "resolution": resolution,
        "n_specs": len(certificates),
        "n_failed": len(failed),
        "certificates": [c.summary() for c in certificates],
    }
    write_json(payload, manifest.output(THEOREM_REPORT_FILE), Provenance(seed=manifest.seed))
    worst = min(certificates, key=lambda c: c.worst_log_margin, default=None)
    return {"certificates": certificates, "failed": failed, "worst": worst, "success": not failed}


def run_report(manifest: RunManifest) -> Dict[str, Any]:
    """Render report.json as report.md and report.html."""
    report = read_json(manifest.output(REPORT_FILE))
    text = report_to_markdown(report)
    md_path = manifest.output("report.md")
    html_path = manifest.output("report.html")
    md_path.write_text(text, encoding="utf-8")
    html_path.write_text(markdown_to_html(text), encoding="utf-8")
    logger.info(f"✓ Wrote {md_path.name} and {html_path.name}")
    return {"paths": [md_path, html_path], "success": True}
