"""
File emitters for the CLI: CSV/JSON tables, the fit report and SVG charts.
Outputs are deterministic for identical inputs.
"""

import json
import logging
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from src.errors import UsageError
from src.tools.eigenforms import CoefficientTable
from src.tools.gmf import ExponentTable
from src.tools.signlab import ExponentFit, PrimeSumReport, SignChangeReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
FORMATS = ("csv", "json")

plt.rcParams["svg.hashsalt"] = "signlab"


def output_name(command: str, form: str, limit: int, ext: str, j: Optional[int] = None) -> str:
    power = f"_j{j}" if j is not None else ""
    return f"{command}_{form}{power}_{limit}.{ext}"


def _pair(pair) -> str:
    return f"{pair[0]}:{pair[1]}" if pair else ""


def _round(value):
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return None
        return float(FLOAT_FORMAT % value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def coefficients_frame(table: CoefficientTable) -> pd.DataFrame:
    return pd.DataFrame({
        "n": np.arange(1, table.limit + 1),
        "a_n": [int(v) for v in table.coeffs[1:]],
    })


def exponents_frame(exp: ExponentTable) -> pd.DataFrame:
    n = np.arange(1, exp.limit + 1)
    m = [int(v) for v in exp.m[1:]]
    return pd.DataFrame({"n": n, "m_n": m, "c_n_float": np.asarray(m, dtype=np.float64) / n})


def signchanges_frame(reports: Sequence[SignChangeReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [{
            "x": float(r.x), "h": float(r.h), "count": r.count, "zeros_seen": r.zeros_seen,
            "first_pair": _pair(r.first_pair), "last_pair": _pair(r.last_pair),
        } for r in reports],
        columns=["x", "h", "count", "zeros_seen", "first_pair", "last_pair"],
    )


def primesums_frame(reports: Sequence[PrimeSumReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [{
            "x": float(r.x), "S1": r.S1, "S2": r.S2,
            "C2": np.nan if r.C2 is None else r.C2,
            "S1_over_x": r.S1_over_x, "S2_over_x": r.S2_over_x,
            "C2_logx_over_x": np.nan if r.C2 is None else r.C2_logx_over_x,
        } for r in reports],
        columns=["x", "S1", "S2", "C2", "S1_over_x", "S2_over_x", "C2_logx_over_x"],
    )


def write_table(df: pd.DataFrame, path: Path, fmt: str = "csv") -> Path:
    """Write a frame as CSV (12 significant digits) or as a JSON record list."""
    if fmt not in FORMATS:
        raise UsageError(f"Unknown output format '{fmt}'. Choose one of: {', '.join(FORMATS)}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    else:
        records = [{k: _round(v) for k, v in row.items()} for row in df.to_dict(orient="records")]
        with open(path, "w") as f:
            json.dump(records, f, indent=2)
            f.write("\n")
    logger.info(f"Wrote {len(df):,} rows to {path}")
    return path


def write_fit(fit: ExponentFit, series: str, reference: Optional[float], path: Path) -> Path:
    payload = {
        "series": series,
        "points": [[_round(x), _round(c)] for x, c in fit.points],
        "slope": _round(fit.slope),
        "residual": _round(fit.residual),
        "reference_exponent": _round(reference) if reference is not None else None,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    logger.info(f"Wrote fit report to {path}")
    return path


def write_signchange_svg(reports: Iterable[SignChangeReport], path: Path, title: str,
                         reference_exponent: Optional[float] = None) -> Path:
    """
    Log-log polyline of (x, count), plus a line of slope reference_exponent
    through the first plotted point.
    """
    points: List = [(r.x, r.count) for r in reports if r.count > 0]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(6, 4))
    if points:
        xs = np.array([p[0] for p in points], dtype=np.float64)
        ys = np.array([p[1] for p in points], dtype=np.float64)
        ax.loglog(xs, ys, marker="o", linewidth=1.2, label="sign changes")
        if reference_exponent is not None:
            ref = ys[0] * (xs / xs[0]) ** reference_exponent
            ax.loglog(xs, ref, linestyle="--", linewidth=1.0, label=f"slope {reference_exponent:.4g}")
        ax.legend()
    ax.set_xlabel("x")
    ax.set_ylabel("count in window")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote chart to {path}")
    return path
