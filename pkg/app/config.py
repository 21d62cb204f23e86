"""
Static configuration for the forecasting pipeline.

Module constants hold the documented defaults; a handful of them can be
overridden through environment variables (loaded from `.env`).
"""

import os
from datetime import date
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

TOOL_NAME = "horizon-forecast"
TOOL_VERSION = "0.1.0"

# Release dates are encoded as Julian years since this epoch.
EPOCH = date(2019, 1, 1)
DAYS_PER_YEAR = 365.25

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_MODELS_PATH = Path(os.getenv("HORIZON_MODELS_PATH", DATA_DIR / "models.csv"))

DEFAULT_SEED = int(os.getenv("HORIZON_SEED", "0"))
DEFAULT_OUT_DIR = Path(os.getenv("HORIZON_OUT_DIR", "out"))
DEFAULT_LOG_LEVEL = os.getenv("HORIZON_LOG_LEVEL", "INFO").upper()
MAX_WORKERS = int(os.getenv("HORIZON_WORKERS", "8"))

# Per-model horizon regression (quasi-Newton, seeded restarts).
HORIZON_RESTARTS = 5
HORIZON_MAX_ITERATIONS = 500
GRADIENT_TOLERANCE = 1e-8

# Joint MAP fits: adaptive ascent followed by a quasi-Newton polish.
MAP_RESTARTS = 8
MAP_ASCENT_STEPS = 2000
MAP_INITIAL_STEP = 1e-2
MAP_STEP_DECAY = 0.999
# Newton polish after BFGS; each step costs two gradient calls per parameter.
POLISH_MAX_ITERATIONS = 50

# Priors.
NORMAL_PRIOR_SD = 10.0
SPLINE_RW_SD_PRIOR = 1.0

# B-spline link.
SPLINE_DEGREE = 5
SPLINE_N_BASIS = 6
SPLINE_SPAN_EXTENSION = 0.10

# Forecasting.
PROJECTION_START = date(2019, 1, 1)
PROJECTION_END = date(2029, 1, 1)
PROJECTION_STEP_DAYS = 7
DIVERGENCE_RATIO = 1.25

# Theorem certification grid.
THEOREM_KS = [1, 2, 3, 4, 5, 6]
THEOREM_ALPHAS = [2.0, 2.5, 3.0, 4.0]
THEOREM_RESOLUTION = 0.01
THEOREM_MARGIN = 10.0
THEOREM_SLACK = 1e-12

# Reference dates with tolerances in days, used only to flag deviations.
REFERENCE_DATES = {
    "single_curve_inflection": (date(2025, 6, 6), 90),
    "base_inflection": (date(2024, 11, 21), 120),
    "reasoning_inflection": (date(2026, 6, 6), 120),
    "divergence": (date(2026, 7, 3), 182),
}

# Artifact file names.
RUNS_FILE = "runs.csv"
MODELS_FILE = "models.csv"
INGEST_REPORT_FILE = "ingest_report.json"
HORIZONS_FILE = "horizons.csv"
FITS_FILE = "fits.json"
FORECAST_FILE = "forecast.csv"
REPORT_FILE = "report.json"
THEOREM_REPORT_FILE = "theorem_report.json"
