"""Command-line interface: one subcommand per pipeline stage plus `pipeline` for the whole run."""

import argparse
import itertools
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from app.config import (
    DEFAULT_LOG_LEVEL,
    DEFAULT_MODELS_PATH,
    DEFAULT_OUT_DIR,
    DEFAULT_SEED,
    HORIZONS_FILE,
    MAX_WORKERS,
    MODELS_FILE,
    PROJECTION_END,
    PROJECTION_START,
    PROJECTION_STEP_DAYS,
    RUNS_FILE,
    THEOREM_ALPHAS,
    THEOREM_KS,
    THEOREM_RESOLUTION,
    TOOL_NAME,
    TOOL_VERSION,
)
from app.dataset.timescale import to_date
from app.errors import FitError, GrowthError, HorizonForecastError, NonConvergence
from app.fitting.results import Specification
from app.runner import (
    RunManifest,
    run_fit_horizons,
    run_fit_trend,
    run_forecast,
    run_ingest,
    run_pipeline,
    run_report,
    run_verify_theorem,
)
from app.theory.sigmoid_product import SigmoidProductSpec

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FIT = 3
EXIT_THEOREM = 4

SPEC_CHOICES = [s.value for s in Specification]


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--out-dir", type=Path, default=DEFAULT_OUT_DIR)
    common.add_argument("--log-level", default=DEFAULT_LOG_LEVEL, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--workers", type=int, default=1, help=f"parallel fits (at most {MAX_WORKERS})")
    common.add_argument("--runs", type=Path, help="runs table (defaults to <out-dir>/runs.csv)")
    common.add_argument("--models", type=Path, help="model metadata (defaults to <out-dir>/models.csv, then the bundled table)")
    common.add_argument("--horizons", type=Path, help="published horizons (defaults to <out-dir>/horizons.csv)")
    common.add_argument("--layout", choices=["canonical", "metr"], default="canonical")
    common.add_argument("--use-published-horizons", action="store_true")
    common.add_argument("--sota-only", action=argparse.BooleanOptionalAction, default=True)
    common.add_argument("--no-plots", action="store_true")
    common.add_argument("--no-reference-checks", action="store_true")
    return common


def _projection_parser() -> argparse.ArgumentParser:
    projection = argparse.ArgumentParser(add_help=False)
    projection.add_argument("--start", type=to_date, default=PROJECTION_START)
    projection.add_argument("--end", type=to_date, default=PROJECTION_END)
    projection.add_argument("--step-days", type=int, default=PROJECTION_STEP_DAYS)
    return projection


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="Fit and project 50% time-horizon growth curves.")
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    common, projection = _common_parser(), _projection_parser()
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[common], help="validate inputs and write canonical tables")
    sub.add_parser("fit-horizons", parents=[common], help="fit (h, beta) per model")

    trend = sub.add_parser("fit-trend", parents=[common], help="fit growth specifications")
    trend.add_argument("--spec", action="append", choices=SPEC_CHOICES, required=True)

    sub.add_parser("forecast", parents=[common, projection], help="project fitted curves")

    theorem = sub.add_parser("verify-theorem", parents=[common], help="certify the sigmoid-product regime bounds")
    theorem.add_argument("--k", type=int, nargs="+", default=THEOREM_KS)
    theorem.add_argument("--alpha", type=float, nargs="+", default=THEOREM_ALPHAS)
    theorem.add_argument("--resolution", type=float, default=THEOREM_RESOLUTION)

    pipeline = sub.add_parser("pipeline", parents=[common, projection], help="run every stage end to end")
    pipeline.add_argument("--spec", action="append", choices=SPEC_CHOICES)

    sub.add_parser("report", parents=[common], help="render report.json as Markdown and HTML")
    return parser


def _existing(path: Optional[Path], fallback: Path) -> Optional[Path]:
    if path is not None:
        return path
    return fallback if fallback.exists() else None


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    """CLI flags over environment defaults; stage outputs in --out-dir serve as later inputs."""
    out_dir = args.out_dir
    if args.command == "ingest":
        runs, models = args.runs, args.models or DEFAULT_MODELS_PATH
    else:
        runs = _existing(args.runs, out_dir / RUNS_FILE)
        models = _existing(args.models, out_dir / MODELS_FILE) or DEFAULT_MODELS_PATH
    fields = dict(
        runs_path=runs,
        models_path=models,
        horizons_path=_existing(args.horizons, out_dir / HORIZONS_FILE),
        out_dir=out_dir,
        seed=args.seed,
        use_published_horizons=args.use_published_horizons,
        sota_only=args.sota_only,
        plots=not args.no_plots,
        layout=args.layout,
        workers=max(1, min(args.workers, MAX_WORKERS)),
        reference_checks=not args.no_reference_checks,
    )
    if getattr(args, "spec", None):
        fields["specifications"] = list(dict.fromkeys(args.spec))
    if hasattr(args, "start"):
        fields.update(start=args.start, end=args.end, step_days=args.step_days)
    return RunManifest(**fields)


def cmd_ingest(args: argparse.Namespace) -> int:
    run_ingest(manifest_from_args(args))
    return EXIT_OK


def cmd_fit_horizons(args: argparse.Namespace) -> int:
    result = run_fit_horizons(manifest_from_args(args))
    if result["failed"]:
        print(f"{len(result['failed'])} model(s) without a horizon: {', '.join(result['failed'])}", file=sys.stderr)
    return EXIT_OK


def cmd_fit_trend(args: argparse.Namespace) -> int:
    run_fit_trend(manifest_from_args(args))
    return EXIT_OK


def cmd_forecast(args: argparse.Namespace) -> int:
    run_forecast(manifest_from_args(args))
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    result = run_pipeline(manifest_from_args(args))
    return EXIT_OK if result["success"] else EXIT_FIT


def cmd_verify_theorem(args: argparse.Namespace) -> int:
    specs = [SigmoidProductSpec(k=k, alpha=alpha) for k, alpha in itertools.product(args.k, args.alpha)]
    result = run_verify_theorem(manifest_from_args(args), specs, args.resolution)
    certificates = result["certificates"]
    if len(certificates) == 1:
        print(_certificate_line(certificates[0]))
    if result["failed"]:
        worst = max(result["failed"], key=lambda c: (len(c.violations), -c.worst_log_margin))
        print(f"✗ {len(result['failed'])}/{len(certificates)} specs violate the bounds; worst {_certificate_line(worst)}")
        return EXIT_THEOREM
    print(f"✓ {len(certificates)} specs satisfy the bounds")
    return EXIT_OK


def _certificate_line(certificate) -> str:
    spec = certificate.spec
    status = "pass" if certificate.passed else "FAIL"
    margin = certificate.worst_log_margin
    return (
        f"k={spec.k} alpha={spec.alpha:g}: {status}, {len(certificate.violations)} violation(s), "
        f"worst log margin {margin:.3g} at x={certificate.worst_x}"
        + (f", error: {certificate.error}" if certificate.error else "")
    )


def cmd_report(args: argparse.Namespace) -> int:
    run_report(manifest_from_args(args))
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "ingest": cmd_ingest,
    "fit-horizons": cmd_fit_horizons,
    "fit-trend": cmd_fit_trend,
    "forecast": cmd_forecast,
    "verify-theorem": cmd_verify_theorem,
    "pipeline": cmd_pipeline,
    "report": cmd_report,
}


def _diagnostic(error: Exception) -> str:
    if isinstance(error, ValidationError):
        first = error.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ()))
        return f"invalid {where or 'input'}: {first.get('msg')}"
    return str(error)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 2 for input errors, 3 for fit failures, 4 for theorem violations.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    try:
        return COMMANDS[args.command](args)
    except (FitError, GrowthError) as e:
        spec = getattr(e, "specification", None) if isinstance(e, NonConvergence) else None
        print(f"{TOOL_NAME}: fit failed{f' ({spec})' if spec else ''}: {e}", file=sys.stderr)
        return EXIT_FIT
    except (HorizonForecastError, ValidationError, FileNotFoundError) as e:
        print(f"{TOOL_NAME}: {_diagnostic(e)}", file=sys.stderr)
        return EXIT_INPUT
