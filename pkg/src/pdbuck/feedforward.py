"""Ramp feedforward: bifurcation prevention and line regulation.

Scaling both ramp endpoints with the source voltage (``Vl = kl*Vs``,
``Vh = kh*Vs``) turns the period-doubling condition into ``H(d) = kh - kl``,
which no longer involves ``Vs``.  Choosing ``kh - kl`` outside the range of
``H`` therefore rules out period doubling for every source voltage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigError, DegenerateDenominator
from .harmonic import DEFAULT_SERIES, SeriesConfig, _check_d, critical_sum, d_domain
from .xfer import ConverterConfig, FeedforwardRamp, FixedRamp, open_loop_tf

__all__ = [
    "FeedforwardGains", "HExtrema", "LineRegulationDesign", "h_of_d", "h_extrema",
    "prevents_bifurcation", "duty_ratio", "average_output", "design_line_regulation",
]


@dataclass(frozen=True)
class FeedforwardGains:
    kl: float
    kh: float

    def __post_init__(self):
        if self.kh == self.kl:
            raise ConfigError("feedforward gains need kh != kl")

    def ramp(self) -> FeedforwardRamp:
        return FeedforwardRamp(self.kl, self.kh)


@dataclass(frozen=True)
class HExtrema:
    h_max: float
    h_min: float
    d_at_max: float
    d_at_min: float


@dataclass(frozen=True)
class LineRegulationDesign:
    gains: FeedforwardGains
    prevented: bool
    dc_gain: float


def h_of_d(cfg: ConverterConfig, d: float, series: SeriesConfig = DEFAULT_SERIES) -> float:
    """``H(d) = 2 Re sum_k [-G(j(k-1/2)ws) + (1 - exp(j k ws d)) G(j k ws)]``."""
    _check_d(cfg.T, d)
    return 2.0 * critical_sum(open_loop_tf(cfg), cfg.T, d, series)


def _refine(f, grid, vals, i, tol):
    # golden-section inside the grid cell pair around an interior optimum
    if i == 0 or i == len(grid) - 1:
        return grid[i], vals[i]
    a, b, c = grid[i - 1], grid[i], grid[i + 1]
    res = minimize_scalar(f, bracket=(a, b, c), method="golden",
                          options={"xtol": tol / abs(b)})
    x = float(res.x)
    if not a <= x <= c or res.fun > vals[i]:
        return b, vals[i]
    return x, float(res.fun)


def h_extrema(cfg: ConverterConfig, series: SeriesConfig = DEFAULT_SERIES,
              grid_points: int = 1024) -> HExtrema:
    """Maximum and minimum of ``H`` over the admissible switching phases."""
    if grid_points < 128:
        raise ValueError("grid_points must be >= 128")
    G = open_loop_tf(cfg)
    T = cfg.T
    lo, hi = d_domain(T)
    grid = np.linspace(lo, hi, grid_points)

    def H(d):
        return 2.0 * critical_sum(G, T, min(max(float(d), lo), hi), series)

    vals = np.array([H(d) for d in grid])
    tol = 1e-10 * T
    d_max, neg_max = _refine(lambda d: -H(d), grid, -vals, int(np.argmax(vals)), tol)
    d_min, h_min = _refine(H, grid, vals, int(np.argmin(vals)), tol)
    return HExtrema(h_max=float(-neg_max), h_min=float(h_min),
                    d_at_max=float(d_max), d_at_min=float(d_min))


def prevents_bifurcation(gains: FeedforwardGains, ext: HExtrema) -> bool:
    """True when ``kh - kl`` lies strictly outside ``[H_min, H_max]``."""
    span = gains.kh - gains.kl
    return bool(span > ext.h_max or span < ext.h_min)


def _ramp_gains(cfg: ConverterConfig, Vs: float) -> tuple[float, float]:
    if isinstance(cfg.ramp, FixedRamp):
        if Vs == 0.0:
            raise DegenerateDenominator("fixed ramp gains undefined at Vs = 0")
        return cfg.ramp.Vl / Vs, cfg.ramp.Vh / Vs
    return cfg.ramp.kl, cfg.ramp.kh


def duty_ratio(cfg: ConverterConfig, Vs: float) -> float:
    """Switch-on phase ``d/T`` neglecting switching harmonics.

    ``(G0 Vs - Vl + g Vr) / (G0 Vs - Vl + Vh)``; the conduction duty is
    ``1 - d/T``.  The caller checks that the value lies in (0, 1).
    """
    G0 = open_loop_tf(cfg).dc_gain()
    Vl, Vh = cfg.ramp.endpoints(Vs)
    den = G0 * Vs - Vl + Vh
    if den == 0.0:
        raise DegenerateDenominator("duty ratio denominator vanishes")
    return (G0 * Vs - Vl + cfg.g * cfg.Vr) / den


def average_output(cfg: ConverterConfig, Vs: float) -> float:
    """Predicted average output ``(kh Vs - g Vr) / (G0 - kl + kh)``."""
    kl, kh = _ramp_gains(cfg, Vs)
    G0 = open_loop_tf(cfg).dc_gain()
    den = G0 - kl + kh
    if den == 0.0:
        raise DegenerateDenominator("average output denominator vanishes")
    return (kh * Vs - cfg.g * cfg.Vr) / den


def design_line_regulation(cfg: ConverterConfig, target_vo: float,
                           ext: HExtrema) -> LineRegulationDesign:
    """Feedforward gains regulating the average output to ``target_vo``.

    Uses ``kh = 0`` so that the output is independent of ``Vs``, giving
    ``kl = G0 + g Vr / target_vo``.  ``prevented`` reports whether the same
    gains also exclude period doubling (``kl < -H_max`` or ``kl > -H_min``).
    """
    if target_vo == 0.0:
        raise ValueError("target_vo must be nonzero")
    G0 = open_loop_tf(cfg).dc_gain()
    kl = G0 + cfg.g * cfg.Vr / target_vo
    gains = FeedforwardGains(kl=kl, kh=0.0)
    return LineRegulationDesign(gains=gains, prevented=prevents_bifurcation(gains, ext),
                                dc_gain=G0)
