"""Locating the period-doubling point as the crossing of two balance curves.

The period-one relation ``Vs(d)`` and the critical relation ``Vs*(d)`` are
scanned on a uniform grid in ``d``; each sign change of their difference is
refined by bisection.  No crossing means no period doubling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .harmonic import DEFAULT_SERIES, SeriesConfig, d_domain, vs_critical, vs_period_one
from .xfer import ConverterConfig

__all__ = ["BifurcationPoint", "CurveRow", "CurveTable", "find_period_doubling",
           "tabulate_curves"]

D_TOL = 1e-12  # bisection stop, fraction of T


@dataclass(frozen=True)
class BifurcationPoint:
    vs_star: float
    d_star: float
    duty_star: float


@dataclass(frozen=True)
class CurveRow:
    d: float
    vs_eq9: Optional[float]
    vs_eq11: Optional[float]


@dataclass(frozen=True)
class CurveTable:
    rows: list[CurveRow]

    def __len__(self):
        return len(self.rows)

    def closest_approach(self) -> CurveRow:
        """Row where both curves exist and are nearest each other."""
        both = [r for r in self.rows if r.vs_eq9 is not None and r.vs_eq11 is not None]
        return min(both, key=lambda r: abs(r.vs_eq9 - r.vs_eq11))


def _gap(cfg, d, series):
    a = vs_period_one(cfg, d, series)
    b = vs_critical(cfg, d, series)
    if a is None or b is None:
        return None
    return a - b


def _bisect(cfg, series, lo, f_lo, hi):
    tol = D_TOL * cfg.T
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = _gap(cfg, mid, series)
        if f_mid is None:
            return None
        if f_mid == 0.0:
            return mid
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_period_doubling(cfg: ConverterConfig, series: SeriesConfig = DEFAULT_SERIES,
                         grid_points: int = 1024) -> list[BifurcationPoint]:
    """All crossings of the period-one and critical curves, by ascending ``vs_star``.

    Grid cells where either curve has no positive solution are skipped.  An
    empty list means the converter does not period-double for any source
    voltage.
    """
    if grid_points < 64:
        raise ValueError("grid_points must be >= 64")
    lo, hi = d_domain(cfg.T)
    grid = np.linspace(lo, hi, grid_points)
    gaps = [_gap(cfg, float(d), series) for d in grid]

    roots = []
    for i in range(grid_points - 1):
        f0, f1 = gaps[i], gaps[i + 1]
        if f0 is None or f1 is None:
            continue
        if f0 == 0.0:
            roots.append(float(grid[i]))
        elif f0 * f1 < 0.0:
            r = _bisect(cfg, series, float(grid[i]), f0, float(grid[i + 1]))
            if r is not None:
                roots.append(r)
    if gaps[-1] == 0.0:
        roots.append(float(grid[-1]))

    points = []
    for d in roots:
        vs = vs_period_one(cfg, d, series)
        if vs is None:
            continue
        points.append(BifurcationPoint(vs_star=vs, d_star=d, duty_star=1.0 - d / cfg.T))
    return sorted(points, key=lambda p: p.vs_star)


def tabulate_curves(cfg: ConverterConfig, series: SeriesConfig = DEFAULT_SERIES,
                    n_rows: int = 512) -> CurveTable:
    """Both curves on a uniform ``d`` grid spanning the admissible domain."""
    if n_rows < 2:
        raise ValueError("n_rows must be >= 2")
    lo, hi = d_domain(cfg.T)
    rows = [CurveRow(float(d), vs_period_one(cfg, float(d), series),
                     vs_critical(cfg, float(d), series))
            for d in np.linspace(lo, hi, n_rows)]
    return CurveTable(rows)
