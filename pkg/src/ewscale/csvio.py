"""CSV interchange formats.

All files use '.' as decimal separator, LF line endings, UTF-8, and 17
significant digits so values round-trip through double precision.
"""

from __future__ import annotations

import csv
import math
from typing import Iterable, Optional, TextIO

import numpy as np

from .analysis import ScalingFit, TheoryComparison
from .errors import DataError
from .simulate import EnsembleStats, PathRecord

__all__ = [
    "write_ensemble_csv",
    "read_ensemble_csv",
    "write_path_dump_csv",
    "write_fit_csv",
    "write_plotdata_csv",
    "write_theory_csv",
    "write_manifold_csv",
]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_ensemble_csv(stats: EnsembleStats, stream: TextIO) -> None:
    """Rows ``t,y,variance,n_survivors``; absent variance is written as nan."""
    stream.write("t,y,variance,n_survivors\n")
    for k in range(len(stats.t)):
        stream.write(f"{_fmt(stats.t[k])},{_fmt(stats.y[k])},"
                     f"{_fmt(stats.variance[k])},{int(stats.n_survivors[k])}\n")


def read_ensemble_csv(stream: TextIO) -> EnsembleStats:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != ["t", "y", "variance", "n_survivors"]:
        raise DataError(f"not an ensemble CSV (header {header!r})")
    rows = [(float(r[0]), float(r[1]), float(r[2]), int(r[3])) for r in reader if r]
    if not rows:
        raise DataError("ensemble CSV contains no data rows")
    arr = np.array(rows, dtype=float)
    return EnsembleStats(t=arr[:, 0], y=arr[:, 1], variance=arr[:, 2],
                         n_survivors=arr[:, 3].astype(int))


def write_path_dump_csv(path: PathRecord, stream: TextIO) -> None:
    """Rows ``t,x,y`` of one recorded path."""
    stream.write("t,x,y\n")
    for k in range(len(path.t)):
        stream.write(f"{_fmt(path.t[k])},{_fmt(path.x[k])},{_fmt(path.y[k])}\n")


def write_fit_csv(stream: TextIO, noise_label: str, bifurcation: str,
                  fit: ScalingFit, comparison: Optional[TheoryComparison] = None) -> None:
    """One-row fit report ``noise,bifurcation,slope,theory,ci_low,ci_high,r2,verdict``."""
    stream.write("noise,bifurcation,slope,theory,ci_low,ci_high,r2,verdict\n")
    theo = comparison.theoretical_exponent if comparison else fit.theoretical_exponent
    half = 1.96 * fit.slope_stderr if math.isfinite(fit.slope_stderr) else math.nan
    stream.write(
        f"{noise_label},{bifurcation},{_fmt(fit.slope)},{_fmt(theo)},"
        f"{_fmt(fit.slope - half)},{_fmt(fit.slope + half)},"
        f"{_fmt(fit.r_squared)},{fit.verdict.value}\n"
    )


def write_plotdata_csv(fit: ScalingFit, stream: TextIO) -> None:
    """Rows ``log_d,log_var,fit_line`` (natural logs) over the fitted bins."""
    stream.write("log_d,log_var,fit_line\n")
    line = fit.fit_line
    for k in range(len(fit.log_d)):
        stream.write(f"{_fmt(fit.log_d[k])},{_fmt(fit.log_v[k])},{_fmt(line[k])}\n")


def write_theory_csv(stream: TextIO, y: Iterable[float], v_white: Iterable[float],
                     v_coloured: Iterable[float], v_volterra: Iterable[float],
                     exponent: float) -> None:
    """Rows ``y,V_white,V_coloured,V_volterra,exponent`` over a y grid."""
    stream.write("y,V_white,V_coloured,V_volterra,exponent\n")
    for yy, vw, vc, vv in zip(y, v_white, v_coloured, v_volterra):
        stream.write(f"{_fmt(yy)},{_fmt(vw)},{_fmt(vc)},{_fmt(vv)},{_fmt(exponent)}\n")


def write_manifold_csv(stream: TextIO, table: np.ndarray) -> None:
    """Rows ``y,x_upper,a`` from :func:`ewscale.models.manifold_table`."""
    stream.write("y,x_upper,a\n")
    for row in table:
        stream.write(f"{_fmt(row[0])},{_fmt(row[1])},{_fmt(row[2])}\n")
