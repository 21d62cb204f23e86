"""Static SVG figures of observed horizons and fitted or projected curves."""

import logging
from datetime import date
from pathlib import Path
from typing import Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from app.forecast.projection import ForecastSeries, InflectionReport

logger = logging.getLogger(__name__)

# Fixed ids and no timestamp keep repeated renders byte-identical.
plt.rcParams["svg.hashsalt"] = "horizon-forecast"

Observed = Tuple[Sequence[date], Sequence[float]]


def plot_horizons(
    series: Sequence[ForecastSeries],
    path: Path,
    observed: Optional[Observed] = None,
    inflections: Sequence[InflectionReport] = (),
    log_scale: bool = False,
    title: str = "50% time horizon by release date",
) -> Path:
    """
    Write one SVG figure.

    Observed horizons are drawn as black points, each series as a line and
    each inflection as a dashed vertical line.
    """
    fig, ax = plt.subplots(figsize=(9, 5.5))
    try:
        for s in series:
            ax.plot(s.dates, s.values, label=s.label, linewidth=1.6)
        if observed is not None:
            ax.scatter(observed[0], observed[1], color="black", s=18, zorder=3, label="observed horizon")
        for inflection in inflections:
            ax.axvline(inflection.date, linestyle="--", linewidth=1.0, color="gray")
            ax.annotate(
                inflection.component.value.lower().replace("_", " "),
                xy=(inflection.date, 1.0),
                xycoords=("data", "axes fraction"),
                rotation=90,
                va="top",
                ha="right",
                fontsize=8,
                color="gray",
            )
        if log_scale:
            ax.set_yscale("log")
        ax.set_xlabel("release date")
        ax.set_ylabel("horizon (minutes)")
        ax.set_title(title)
        ax.legend(loc="upper left", fontsize=8)
        fig.tight_layout()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    logger.info(f"✓ Wrote {path.name}")
    return path
