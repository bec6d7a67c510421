"""Switched time-domain simulation of the voltage-mode buck converter.

Independent of the harmonic-balance machinery: the two-state power stage is
integrated with fixed-step RK4, the comparator ``vd = Vs iff h(t) > y(t)`` is
evaluated at every step boundary, and each sign change of ``h - y`` inside a
step is located by bisection and the step split there.

State equations (``vC`` is the voltage on the ideal capacitor behind the ESR)::

    diL/dt = (vd - vo) / L
    dvC/dt = (R iL - vC) / (C (R + Rc))
    vo     = R (vC + Rc iL) / (R + Rc)

The error amplifier is a constant gain: ``y = g Vr + g1 vo``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InsufficientSamples, ModeMismatch, NonFinite
from .xfer import ConverterConfig, Mode

try:
    from numba import njit
except ImportError:  # pragma: no cover - slow pure-python path
    def njit(*args, **kwargs):
        def deco(f):
            return f
        return deco(args[0]) if args and callable(args[0]) else deco

__all__ = [
    "SimState", "SimTrace", "StroboscopicSeries", "PeriodClass", "DiagramRow",
    "simulate", "stroboscope", "classify_period", "bifurcation_diagram",
    "onset_voltage",
]

EVENT_TOL = 1e-13  # seconds
MAX_CROSSINGS_PER_STEP = 8


@dataclass(frozen=True)
class SimState:
    iL: float = 0.0
    vC: float = 0.0
    t: float = 0.0


@dataclass
class SimTrace:
    """Samples at every step boundary plus every comparator crossing."""

    t: np.ndarray
    iL: np.ndarray
    vC: np.ndarray
    vo: np.ndarray
    y: np.ndarray
    h: np.ndarray
    vd: np.ndarray
    dt_nominal: float
    on_time: np.ndarray  # switch conduction time per cycle

    def __len__(self):
        return len(self.t)

    def final_state(self) -> SimState:
        return SimState(float(self.iL[-1]), float(self.vC[-1]), float(self.t[-1]))


@dataclass
class StroboscopicSeries:
    """State at ``t = kT`` for the retained cycles ``k``."""

    cycle: np.ndarray
    vo: np.ndarray
    iL: np.ndarray
    discarded: int
    final: SimState = SimState()


class PeriodClass(Enum):
    P1 = 1
    P2 = 2
    P4 = 4
    HIGHER = 0

    def __str__(self):
        return self.name if self is not PeriodClass.HIGHER else "Higher"


@dataclass
class DiagramRow:
    vs: float
    vo: np.ndarray
    period: PeriodClass
    final: SimState = SimState()


@njit(cache=True, nogil=True)
def _rk4(iL, vC, tau, vd, L, C, R, Rc):
    a = 1.0 / L
    b = 1.0 / (C * (R + Rc))
    k = R / (R + Rc)

    def f(i, v):
        vo = k * (v + Rc * i)
        return a * (vd - vo), b * (R * i - v)

    d1i, d1v = f(iL, vC)
    d2i, d2v = f(iL + 0.5 * tau * d1i, vC + 0.5 * tau * d1v)
    d3i, d3v = f(iL + 0.5 * tau * d2i, vC + 0.5 * tau * d2v)
    d4i, d4v = f(iL + tau * d3i, vC + tau * d3v)
    return (iL + tau / 6.0 * (d1i + 2.0 * d2i + 2.0 * d3i + d4i),
            vC + tau / 6.0 * (d1v + 2.0 * d2v + 2.0 * d3v + d4v))


@njit(cache=True, nogil=True)
def _kernel(iL, vC, t0, L, C, R, Rc, g1, y0, Vl, Vh, T, Vs, n_cycles, steps, record):
    """Integrate ``n_cycles`` periods; returns (status, strobe, on_time, trace)."""
    dt = T / steps
    slope = (Vh - Vl) / T
    kvo = R / (R + Rc)
    strobe = np.empty((n_cycles + 1, 3))
    strobe[0, 0] = kvo * (vC + Rc * iL)
    strobe[0, 1] = iL
    strobe[0, 2] = vC
    on_time = np.zeros(n_cycles)
    # step starts and the closing sample always fit; crossings share a budget
    cross_budget = n_cycles * 16 if record else 0
    cap = n_cycles * steps + 1 + cross_budget if record else 1
    tr = np.empty((cap, 5))  # t, iL, vC, vd, h
    n = 0
    n_cross = 0
    status = 0
    for c in range(n_cycles):
        tc = t0 + c * T
        for s in range(steps):
            p = s * dt
            p_end = (s + 1) * dt if s + 1 < steps else T
            f0 = Vl + slope * p - (y0 + g1 * kvo * (vC + Rc * iL))
            on = f0 > 0.0
            if record:
                tr[n, 0] = tc + p
                tr[n, 1] = iL
                tr[n, 2] = vC
                tr[n, 3] = Vs if on else 0.0
                tr[n, 4] = Vl + slope * p
                n += 1
            crossings = 0
            while True:
                vd = Vs if on else 0.0
                tau = p_end - p
                i1, v1 = _rk4(iL, vC, tau, vd, L, C, R, Rc)
                f1 = Vl + slope * p_end - (y0 + g1 * kvo * (v1 + Rc * i1))
                if (f1 > 0.0) == on or crossings >= MAX_CROSSINGS_PER_STEP:
                    if on:
                        on_time[c] += tau
                    iL, vC = i1, v1
                    break
                lo = 0.0
                hi = tau
                while hi - lo > EVENT_TOL:
                    mid = 0.5 * (lo + hi)
                    im, vm = _rk4(iL, vC, mid, vd, L, C, R, Rc)
                    fm = Vl + slope * (p + mid) - (y0 + g1 * kvo * (vm + Rc * im))
                    if (fm > 0.0) == on:
                        lo = mid
                    else:
                        hi = mid
                if on:
                    on_time[c] += hi
                iL, vC = _rk4(iL, vC, hi, vd, L, C, R, Rc)
                p = p + hi
                on = not on
                crossings += 1
                if record and n_cross < cross_budget and p < p_end:
                    n_cross += 1
                    tr[n, 0] = tc + p
                    tr[n, 1] = iL
                    tr[n, 2] = vC
                    tr[n, 3] = Vs if on else 0.0
                    tr[n, 4] = Vl + slope * p
                    n += 1
        if not (math.isfinite(iL) and math.isfinite(vC)):
            status = 1
            break
        strobe[c + 1, 0] = kvo * (vC + Rc * iL)
        strobe[c + 1, 1] = iL
        strobe[c + 1, 2] = vC
    if record and status == 0:
        tr[n, 0] = t0 + n_cycles * T
        tr[n, 1] = iL
        tr[n, 2] = vC
        f_end = Vl - (y0 + g1 * kvo * (vC + Rc * iL))
        tr[n, 3] = Vs if f_end > 0.0 else 0.0
        tr[n, 4] = Vl
        n += 1
    return status, strobe, on_time, tr[:n]


def _loop_params(cfg: ConverterConfig, Vs: float):
    if cfg.mode is not Mode.VOLTAGE or not cfg.G2.is_constant:
        raise ModeMismatch("simulator supports voltage mode with a constant-gain amplifier")
    g1 = cfg.G2.num[0] / cfg.G2.den[0]
    Vl, Vh = cfg.ramp.endpoints(Vs)
    return g1, cfg.g * cfg.Vr, Vl, Vh


def _run(cfg, Vs, n_cycles, init, steps_per_cycle, record):
    if steps_per_cycle < 200:
        raise ValueError("steps_per_cycle must be >= 200")
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    phase = init.t / cfg.T
    if abs(phase - round(phase)) > 1e-9:
        raise DomainError("simulation must start on a clock edge (t = kT)")
    g1, y0, Vl, Vh = _loop_params(cfg, Vs)
    status, strobe, on_time, tr = _kernel(
        float(init.iL), float(init.vC), float(init.t), cfg.L, cfg.C, cfg.R, cfg.Rc,
        g1, y0, Vl, Vh, cfg.T, float(Vs), int(n_cycles), int(steps_per_cycle), record)
    if status:
        raise NonFinite(f"state diverged at Vs={Vs!r}")
    return strobe, on_time, tr


def simulate(cfg: ConverterConfig, Vs: float, n_cycles: int,
             init: SimState = SimState(), steps_per_cycle: int = 2000) -> SimTrace:
    """Full waveform from ``init`` over ``n_cycles`` switching periods."""
    _, on_time, tr = _run(cfg, Vs, n_cycles, init, steps_per_cycle, True)
    g1, y0, _, _ = _loop_params(cfg, Vs)
    t, iL, vC, vd, h = (tr[:, i].copy() for i in range(5))
    kvo = cfg.R / (cfg.R + cfg.Rc)
    vo = kvo * (vC + cfg.Rc * iL)
    # same operation order as the kernel's comparator, so signs agree bit for bit
    y = y0 + g1 * kvo * (vC + cfg.Rc * iL)
    return SimTrace(t=t, iL=iL, vC=vC, vo=vo, y=y, h=h, vd=vd,
                    dt_nominal=cfg.T / steps_per_cycle, on_time=on_time)


def stroboscope(cfg: ConverterConfig, Vs: float, n_cycles: int = 500,
                n_discard: int = 400, steps_per_cycle: int = 2000,
                init: SimState = SimState()) -> StroboscopicSeries:
    """Sample ``(vo, iL)`` at the end of each cycle, starting from ``init``.

    ``final`` holds the state after the last cycle, re-based to ``t = 0``
    so it can seed a following run.
    """
    if not 0 <= n_discard < n_cycles:
        raise ValueError("need 0 <= n_discard < n_cycles")
    strobe, _, _ = _run(cfg, Vs, n_cycles, init, steps_per_cycle, False)
    keep = slice(n_discard + 1, n_cycles + 1)
    return StroboscopicSeries(cycle=np.arange(n_discard + 1, n_cycles + 1),
                              vo=strobe[keep, 0].copy(), iL=strobe[keep, 1].copy(),
                              discarded=n_discard,
                              final=SimState(float(strobe[-1, 1]), float(strobe[-1, 2])))


def classify_period(series: StroboscopicSeries, tol: float = 1e-4) -> PeriodClass:
    """Smallest period ``p`` in {1, 2, 4} with ``|x[k+p] - x[k]| < tol`` for all k."""
    x = np.asarray(series.vo)
    if len(x) < 16:
        raise InsufficientSamples(f"need >= 16 retained samples, got {len(x)}")
    for p in (1, 2, 4):
        if np.all(np.abs(x[p:] - x[:-p]) < tol):
            return PeriodClass(p)
    return PeriodClass.HIGHER


def _threads() -> int:
    env = os.environ.get("PDBUCK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _diagram_point(cfg, vs, n_cycles, n_discard, steps, tol, init=SimState()):
    series = stroboscope(cfg, vs, n_cycles, n_discard, steps, init)
    return DiagramRow(vs=float(vs), vo=series.vo, period=classify_period(series, tol),
                      final=series.final)


def bifurcation_diagram(cfg: ConverterConfig, vs_min: float, vs_max: float,
                        n_points: int, n_cycles: int = 500, n_discard: int = 400,
                        steps_per_cycle: int = 2000, tol: float = 1e-4,
                        continuation: bool = True,
                        workers: Optional[int] = None) -> list[DiagramRow]:
    """Stroboscopic output samples and period class on a uniform ``Vs`` sweep.

    The first point starts from rest.  With ``continuation`` every later
    point starts from the final state of its predecessor, so the sweep
    follows the attractor instead of repeating the start-up transient;
    otherwise each point starts from rest and the points are simulated
    concurrently (``workers`` or ``PDBUCK_THREADS``).  ``n_points = 1``
    evaluates ``vs_min`` alone.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if n_points > 1 and not vs_min < vs_max:
        raise ValueError("need vs_min < vs_max")
    grid = [float(vs_min)] if n_points == 1 else [float(v) for v in np.linspace(vs_min, vs_max, n_points)]
    args = (n_cycles, n_discard, steps_per_cycle, tol)
    if continuation:
        rows: list[DiagramRow] = []
        state = SimState()
        for vs in grid:
            rows.append(_diagram_point(cfg, vs, *args, init=state))
            state = rows[-1].final
        return rows
    workers = workers or _threads()
    if workers == 1 or len(grid) == 1:
        return [_diagram_point(cfg, vs, *args) for vs in grid]
    _diagram_point(cfg, grid[0], 17, 1, steps_per_cycle, tol)  # compile before fan-out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda vs: _diagram_point(cfg, vs, *args), grid))


def onset_voltage(rows: Sequence[DiagramRow], cfg: Optional[ConverterConfig] = None,
                  refine: int = 8, n_cycles: int = 500, n_discard: int = 400,
                  steps_per_cycle: int = 2000, tol: float = 1e-4) -> Optional[float]:
    """Smallest source voltage that is not period-one.

    With ``cfg`` given, the bracket between the last period-one and first
    non-period-one rows is narrowed by up to ``refine`` bisection
    re-simulations, each seeded from the latest period-one state.  Returns
    ``None`` when every row is period-one.
    """
    for i, row in enumerate(rows):
        if row.period is not PeriodClass.P1:
            break
    else:
        return None
    if i == 0 or cfg is None:
        return rows[i].vs
    lo, hi = rows[i - 1].vs, rows[i].vs
    seed = rows[i - 1].final
    for _ in range(refine):
        mid = 0.5 * (lo + hi)
        series = stroboscope(cfg, mid, n_cycles, n_discard, steps_per_cycle, seed)
        if classify_period(series, tol) is PeriodClass.P1:
            lo, seed = mid, series.final
        else:
            hi = mid
    return hi
