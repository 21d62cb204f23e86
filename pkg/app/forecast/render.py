"""Human-readable rendering of report.json as Markdown and HTML."""

from typing import Any, Dict

import markdown


def report_to_markdown(report: Dict[str, Any]) -> str:
    """Markdown summary of a report.json payload."""
    provenance = report.get("provenance", {})
    lines = [
        "# Horizon growth report",
        "",
        f"*{provenance.get('tool', '')} {provenance.get('version', '')}, seed {provenance.get('seed')}*",
        "",
        "## Goodness of fit",
        "",
        "| Rank | Specification | MSE | Converged |",
        "|---:|---|---:|:---:|",
    ]
    for row in report.get("mse_table", []):
        lines.append(
            f"| {row['rank']} | {row['name']} | {row['mse']:.2f} | {'yes' if row['converged'] else 'no'} |"
        )

    inflections = report.get("inflections", [])
    if inflections:
        lines += ["", "## Inflection dates", ""]
        for item in inflections:
            tense = "past" if item["in_past"] else "future"
            lines.append(
                f"- **{item['specification']}** {item['component'].lower().replace('_', ' ')}: "
                f"{item['date']} ({tense} relative to {item['reference_date']})"
            )

    trend = report.get("trend", {})
    if trend:
        lines += ["", "## Exponential trend", ""]
        if trend.get("doubling_time_months") is not None:
            lines.append(f"- Doubling time: {trend['doubling_time_months']:.2f} months")
        if trend.get("log_r_squared") is not None:
            lines.append(f"- R² on log horizons: {trend['log_r_squared']:.3f}")

    divergence = report.get("divergence")
    if divergence:
        when = divergence.get("date") or "not within the projection window"
        lines += [
            "",
            "## Divergence",
            "",
            f"{divergence['a']} and {divergence['b']} differ by more than a factor "
            f"{divergence['ratio']:g} from **{when}**.",
        ]

    deviations = report.get("deviations", [])
    if deviations:
        lines += ["", "## Deviations from reference dates", ""]
        for d in deviations:
            lines.append(
                f"- {d['check']}: expected {d['expected']} ± {d['tolerance_days']} days, got {d['observed']}"
            )
    return "\n".join(lines) + "\n"


def markdown_to_html(markdown_text: str) -> str:
    """Render markdown into a standalone styled HTML page."""
    html = markdown.markdown(markdown_text, extensions=["extra", "nl2br"])
    return f"""<!DOCTYPE html>
<html>
<head>
    <meta charset="utf-8">
    <meta name="viewport" content="width=device-width, initial-scale=1.0">
    <style>
        body {{
            font-family: -apple-system, BlinkMacSystemFont, 'Segoe UI', Roboto, 'Helvetica Neue', Arial, sans-serif;
            line-height: 1.6;
            color: #333;
            max-width: 760px;
            margin: 0 auto;
            padding: 20px;
        }}
        h2 {{
            font-size: 18px;
            font-weight: 600;
            margin-top: 24px;
        }}
        table {{
            border-collapse: collapse;
            width: 100%;
        }}
        th, td {{
            border-bottom: 1px solid #e5e5e5;
            padding: 6px 10px;
        }}
        em {{
            color: #666;
        }}
    </style>
</head>
<body>
{html}
</body>
</html>"""
