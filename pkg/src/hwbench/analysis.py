"""From a recorded I-V curve to electronic conductivity vs oxygen activity.

The chain is: forward differences at midpoint voltages, repair of isolated
non-positive slopes, the 1/(2 pi a) geometry factor, the Nernst mapping of
each midpoint voltage to an activity, and log-log slope regression over
user-chosen activity ranges. No smoothing and no curve fitting of the raw
I-V data happen anywhere in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import (
    CONSTANTS,
    CellGeometry,
    PhysicalConstants,
    ReferenceAtmosphere,
    conductivity_from_derivative,
    nernst_activity,
)
from .acquisition import IVPoint


class AnalysisError(ValueError):
    pass


class InsufficientData(AnalysisError):
    pass


class DegenerateStep(AnalysisError):
    pass


@dataclass(frozen=True)
class ConductivityPoint:
    a_o2: float
    sigma_e: float
    e_mid_v: float
    repaired: bool
    branch: str


@dataclass(frozen=True)
class SlopeFit:
    slope: float            # d log10(sigma) / d log10(a)
    intercept: float
    a_lo: float
    a_hi: float
    n_points: int
    rms_residual: float


@dataclass(frozen=True)
class RepairResult:
    """Outcome of the non-positive-slope repair.

    values/repaired/kept_indices run parallel over the surviving entries;
    excluded_indices refer to positions in the original series.
    """
    values: list[float]
    repaired: list[bool]
    kept_indices: list[int]
    excluded_indices: list[int]


def differentiate_iv(curve: Sequence[IVPoint],
                     branch: str) -> list[tuple[float, float]]:
    """Forward differences of one branch: (midpoint voltage, dI/dE) pairs.

    Timed-out points carry no current and are skipped; the difference is
    then taken between the surviving neighbours.
    """
    pts = sorted((p for p in curve if p.branch == branch and p.flags == "ok"),
                 key=lambda p: p.e_app_v)
    if len(pts) < 2:
        raise InsufficientData(
            f"branch {branch!r} has {len(pts)} usable points, need >= 2")
    out = []
    for a, b in zip(pts, pts[1:]):
        de = b.e_app_v - a.e_app_v
        if de <= 1e-12:
            raise DegenerateStep(
                f"duplicate voltage {a.e_app_v} on branch {branch!r}")
        out.append(((a.e_app_v + b.e_app_v) / 2.0, (b.i_ss_a - a.i_ss_a) / de))
    return out


def repair_negative_points(series: Sequence[float]) -> RepairResult:
    """Fix isolated non-positive derivatives, drop everything else bad.

    A non-positive value whose two neighbours are both positive becomes the
    mean of those neighbours and is flagged. Runs of two or more contiguous
    non-positive values, and non-positive endpoints (one neighbour only),
    are excluded. Statuses are decided on the original series in one pass,
    so the result does not depend on scan direction.
    """
    n = len(series)
    values: list[float] = []
    repaired: list[bool] = []
    kept: list[int] = []
    excluded: list[int] = []
    for i, v in enumerate(series):
        if v > 0.0:
            values.append(v)
            repaired.append(False)
            kept.append(i)
        elif 0 < i < n - 1 and series[i - 1] > 0.0 and series[i + 1] > 0.0:
            values.append((series[i - 1] + series[i + 1]) / 2.0)
            repaired.append(True)
            kept.append(i)
        else:
            excluded.append(i)
    return RepairResult(values, repaired, kept, excluded)


def conductivity_curve(curve: Sequence[IVPoint], geom: CellGeometry,
                       ref: ReferenceAtmosphere, branch: str,
                       consts: PhysicalConstants = CONSTANTS,
                       ) -> list[ConductivityPoint]:
    """Differentiate one branch, repair it, and map to (a_O2, sigma_e).

    Returns an empty list when every derivative was unrepairable.
    """
    mids = differentiate_iv(curve, branch)
    rep = repair_negative_points([d for _, d in mids])
    out = []
    for value, flag, idx in zip(rep.values, rep.repaired, rep.kept_indices):
        e_mid = mids[idx][0]
        out.append(ConductivityPoint(
            a_o2=nernst_activity(e_mid, ref, consts),
            sigma_e=conductivity_from_derivative(value, geom),
            e_mid_v=e_mid,
            repaired=flag,
            branch=branch,
        ))
    return out


def fit_slope(points: Sequence[ConductivityPoint], a_lo: float,
              a_hi: float) -> SlopeFit:
    """Ordinary least squares of log10(sigma) on log10(a) inside a range."""
    if not (a_lo < a_hi):
        raise AnalysisError("need a_lo < a_hi")
    sel = [p for p in points if a_lo <= p.a_o2 <= a_hi]
    if len(sel) < 2:
        raise InsufficientData(
            f"{len(sel)} points in activity range [{a_lo:g}, {a_hi:g}], "
            "need >= 2")
    x = np.log10([p.a_o2 for p in sel])
    y = np.log10([p.sigma_e for p in sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return SlopeFit(slope=float(slope), intercept=float(intercept),
                    a_lo=a_lo, a_hi=a_hi, n_points=len(sel),
                    rms_residual=float(np.sqrt(np.mean(resid ** 2))))


def default_slope_ranges(points: Sequence[ConductivityPoint],
                         width_decades: float = 4.0,
                         ) -> list[tuple[float, float]]:
    """The lowest and highest decade windows present in the data."""
    if not points:
        return []
    a_min = min(p.a_o2 for p in points)
    a_max = max(p.a_o2 for p in points)
    factor = 10.0 ** width_decades
    ranges = [(a_min, min(a_min * factor, a_max))]
    hi = (max(a_max / factor, a_min), a_max)
    if hi != ranges[0]:
        ranges.append(hi)
    return ranges


def branches_present(curve: Iterable[IVPoint]) -> list[str]:
    seen: list[str] = []
    for p in curve:
        if p.branch not in seen:
            seen.append(p.branch)
    return seen


def analyze_curve(curve: Sequence[IVPoint], geom: CellGeometry,
                  ref: ReferenceAtmosphere,
                  ranges: Optional[Sequence[tuple[float, float]]] = None,
                  consts: PhysicalConstants = CONSTANTS,
                  ) -> tuple[list[ConductivityPoint], list[tuple[str, SlopeFit]]]:
    """Per-branch conductivity points plus slope fits.

    Each branch is analyzed independently; a branch whose points are all
    unrepairable, or whose decade windows hold fewer than two points, simply
    contributes nothing rather than failing the whole analysis.
    """
    all_points: list[ConductivityPoint] = []
    fits: list[tuple[str, SlopeFit]] = []
    for branch in branches_present(curve):
        try:
            pts = conductivity_curve(curve, geom, ref, branch, consts)
        except InsufficientData:
            continue
        all_points.extend(pts)
        branch_ranges = (ranges if ranges is not None
                         else default_slope_ranges(pts))
        for a_lo, a_hi in branch_ranges:
            try:
                fits.append((branch, fit_slope(pts, a_lo, a_hi)))
            except AnalysisError:
                continue
    return all_points, fits
