"""Exact harmonic balance for the period-one and period-two modes.

With leading-edge modulation the diode voltage over one period is a square
wave, ``vd = 0`` on ``(0, d)`` and ``vd = Vs`` on ``(d, T)``.  Its Fourier
coefficients are known in closed form, so balancing the comparator condition
``y(d) = h(d)`` gives an explicit relation between the source voltage and the
switching instant ``d``.  The period-two balance, in the limit of a vanishing
perturbation, gives a second relation; their intersection is the
period-doubling point (see :mod:`pdbuck.bifurcation`).

All infinite series are truncated at ``SeriesConfig.n_terms`` harmonics and
summed with :func:`math.fsum`.  When ``SeriesConfig.accelerate`` is set, the
large-frequency expansion ``G(s) ~ a0 + a1/s + a2/s**2 + a3/s**3`` is
subtracted term by term and its exact infinite sum added back (Kummer's
method), using the Fourier series of Bernoulli polynomials.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DegenerateDelta, DomainError, ModeMismatch, SingularParameter
from .xfer import ConverterConfig, FixedRamp, Mode, RationalFunction, open_loop_tf

__all__ = [
    "SeriesConfig",
    "PeriodTwoPoint",
    "D_CLIP",
    "d_domain",
    "period_one_sum",
    "critical_sum",
    "vs_period_one",
    "y_steady_state",
    "vs_critical",
    "period_two_sum",
    "vs_period_two",
    "fourier_coeffs_period_two",
    "estimate_vs_critical",
    "approx_vs_critical_voltage_mode",
    "approx_critical_gain",
    "approx_vs_critical_current_mode",
]

PI = math.pi
D_CLIP = 1e-6
# ratio treated as "much less than" by the closed-form validity checks
MUCH_LESS = 0.1


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation settings shared by every harmonic series."""

    n_terms: int = 4096
    rel_tol: float = 1e-9
    accelerate: bool = True

    def __post_init__(self):
        if self.n_terms < 8:
            raise ValueError("n_terms must be >= 8")
        if not 0.0 < self.rel_tol < 1e-3:
            raise ValueError("rel_tol must lie in (0, 1e-3)")

    def doubled(self) -> "SeriesConfig":
        return SeriesConfig(2 * self.n_terms, self.rel_tol, self.accelerate)


DEFAULT_SERIES = SeriesConfig()


@dataclass(frozen=True)
class PeriodTwoPoint:
    """Switching phase ``d`` and period-two perturbation ``delta`` (seconds)."""

    d: float
    delta: float


def d_domain(T: float) -> tuple[float, float]:
    """Admissible switching phases; the endpoints are duty 1 and duty 0."""
    return D_CLIP * T, (1.0 - D_CLIP) * T


def _check_d(T: float, d: float) -> None:
    lo, hi = d_domain(T)
    if not (lo <= d <= hi):
        raise DomainError(f"d={d!r} outside [{lo!r}, {hi!r}]")


def _fixed_ramp(cfg: ConverterConfig) -> FixedRamp:
    if not isinstance(cfg.ramp, FixedRamp):
        raise ModeMismatch("relation requires a fixed ramp; use the feedforward module")
    return cfg.ramp


@lru_cache(maxsize=64)
def _harmonics(G: RationalFunction, T: float, n_terms: int):
    """``k``, ``G(j k ws)`` and ``G(j (k - 1/2) ws)`` for ``k = 1..n_terms``."""
    ws = 2.0 * PI / T
    k = np.arange(1, n_terms + 1, dtype=float)
    Gk = G(1j * k * ws)
    Gh = G(1j * (k - 0.5) * ws)
    for a in (k, Gk, Gh):
        a.setflags(write=False)
    return k, Gk, Gh


def _asym(G: RationalFunction) -> tuple[float, float, float, float]:
    if G.relative_degree < 0:
        raise ValueError("G(s) must be proper")
    a = G.asymptotic_coeffs(3)
    return a[0], a[1], a[2], a[3]


# Closed forms valid for 0 <= theta <= 2*pi (theta in (0, 2*pi) for _s1).
def _s1(th):
    return (PI - th) / 2.0


def _c2(th):
    return PI**2 / 6.0 - PI * th / 2.0 + th**2 / 4.0


def _s3(th):
    return PI**2 * th / 6.0 - PI * th**2 / 4.0 + th**3 / 12.0


def _c4(th):
    return PI**4 / 90.0 - PI**2 * th**2 / 12.0 + PI * th**3 / 12.0 - th**4 / 48.0


def _shift_model(k, phi, a, ws):
    """Terms and exact sum of ``Re[exp(j k phi) A(j k ws) / (j k)]`` over ``k >= 1``.

    ``A(s) = a0 + a1/s + a2/s**2 + a3/s**3`` is the large-frequency model of
    ``G``; ``phi`` is reduced to ``[0, 2*pi)``.
    """
    phi = math.fmod(phi, 2.0 * PI)
    if phi < 0.0:
        phi += 2.0 * PI
    a0, a1, a2, a3 = a
    sn, cs = np.sin(k * phi), np.cos(k * phi)
    model = (a0 * sn / k - (a1 / ws) * cs / k**2
             - (a2 / ws**2) * sn / k**3 + (a3 / ws**3) * cs / k**4)
    tail = ((a0 * _s1(phi) if phi > 0.0 else 0.0) - (a1 / ws) * _c2(phi)
            - (a2 / ws**2) * _s3(phi) + (a3 / ws**3) * _c4(phi))
    return model, tail


def period_one_sum(G: RationalFunction, T: float, d: float,
                   series: SeriesConfig = DEFAULT_SERIES) -> float:
    """``sum_n Im[(1 - exp(j n ws d)) G(j n ws)] / n`` over ``n >= 1``."""
    k, Gk, _ = _harmonics(G, T, series.n_terms)
    ws = 2.0 * PI / T
    th = ws * d
    ek = np.exp(1j * k * th)
    terms = np.imag((1.0 - ek) * Gk) / k
    if not series.accelerate:
        return math.fsum(terms)
    a0, a1, a2, a3 = _asym(G)
    sn, cs = np.sin(k * th), np.cos(k * th)
    model = (-a0 * sn / k
             - (a1 / ws) * (1.0 - cs) / k**2
             + (a2 / ws**2) * sn / k**3
             + (a3 / ws**3) * (1.0 - cs) / k**4)
    tail = (-a0 * _s1(th)
            - (a1 / ws) * (PI**2 / 6.0 - _c2(th))
            + (a2 / ws**2) * _s3(th)
            + (a3 / ws**3) * (PI**4 / 90.0 - _c4(th)))
    return math.fsum(np.concatenate([terms, -model, [tail]]))


def critical_sum(G: RationalFunction, T: float, d: float,
                 series: SeriesConfig = DEFAULT_SERIES) -> float:
    """``Re sum_k [-G(j(k-1/2)ws) + (1 - exp(j k ws d)) G(j k ws)]``.

    Both the half-harmonic and the integer-harmonic terms sit inside the sum.
    """
    k, Gk, Gh = _harmonics(G, T, series.n_terms)
    ws = 2.0 * PI / T
    th = ws * d
    ek = np.exp(1j * k * th)
    terms = np.real(-Gh + (1.0 - ek) * Gk)
    if not series.accelerate:
        return math.fsum(terms)
    # a0 contributes a divergent cos(k th) series and is left untouched.
    _, a1, a2, a3 = _asym(G)
    sn, cs = np.sin(k * th), np.cos(k * th)
    model = ((a2 / ws**2) * (1.0 / (k - 0.5)**2 - 1.0 / k**2)
             - (a1 / ws) * sn / k
             + (a2 / ws**2) * cs / k**2
             + (a3 / ws**3) * sn / k**3)
    tail = ((a2 / ws**2) * PI**2 / 3.0
            - (a1 / ws) * _s1(th)
            + (a2 / ws**2) * _c2(th)
            + (a3 / ws**3) * _s3(th))
    return math.fsum(np.concatenate([terms, -model, [tail]]))


def vs_period_one(cfg: ConverterConfig, d: float,
                  series: SeriesConfig = DEFAULT_SERIES) -> Optional[float]:
    """Source voltage whose period-one orbit switches on at phase ``d``.

    Returns ``None`` when the balance has no positive solution at ``d``.
    """
    _check_d(cfg.T, d)
    ramp = _fixed_ramp(cfg)
    G = open_loop_tf(cfg)
    den = (1.0 - d / cfg.T) * G.dc_gain() + period_one_sum(G, cfg.T, d, series) / PI
    if not den > 0.0:
        return None
    h_d = ramp.Vl + (ramp.Vh - ramp.Vl) * d / cfg.T
    vs = (h_d - cfg.g * cfg.Vr) / den
    return vs if vs > 0.0 else None


def y_steady_state(cfg: ConverterConfig, Vs: float, d: float, t: float,
                   series: SeriesConfig = DEFAULT_SERIES) -> float:
    """Error-amplifier output ``y(t)`` on the period-one orbit.

    Synthesised from the square-wave coefficients
    ``c0 = Vs (1 - d/T)`` and ``cn = Vs (exp(-j n ws d) - 1) / (j 2 pi n)``.
    """
    _check_d(cfg.T, d)
    if not 0.0 <= t < cfg.T:
        raise DomainError(f"t={t!r} outside [0, T)")
    G = open_loop_tf(cfg)
    k, Gk, _ = _harmonics(G, cfg.T, series.n_terms)
    ws = cfg.omega_s
    cn = Vs * (np.exp(-1j * k * ws * d) - 1.0) / (2j * PI * k)
    terms = 2.0 * np.real(cn * np.exp(1j * k * ws * t) * Gk)
    dc = cfg.g * cfg.Vr + Vs * (1.0 - d / cfg.T) * G.dc_gain()
    if not series.accelerate:
        return math.fsum(np.concatenate([[dc], terms]))
    # 2 Re[cn e^{jk ws t} G] = (Vs/pi) Re[(e^{jk ws (t-d)} - e^{jk ws t}) G / (jk)]
    a = _asym(G)
    m1, t1 = _shift_model(k, ws * (t - d), a, ws)
    m2, t2 = _shift_model(k, ws * t, a, ws)
    scale = Vs / PI
    return math.fsum(np.concatenate([[dc], terms, -scale * (m1 - m2),
                                     [scale * (t1 - t2)]]))


def vs_critical(cfg: ConverterConfig, d: float,
                series: SeriesConfig = DEFAULT_SERIES) -> Optional[float]:
    """Source voltage at which a period-doubling at phase ``d`` is possible."""
    _check_d(cfg.T, d)
    ramp = _fixed_ramp(cfg)
    den = critical_sum(open_loop_tf(cfg), cfg.T, d, series)
    if not den > 0.0:
        return None
    return 0.5 * (ramp.Vh - ramp.Vl) / den


def _wrap(phi: float) -> float:
    return math.fmod(phi, 2.0 * PI) % (2.0 * PI)


def _s1p(phi):
    phi = _wrap(phi)
    return _s1(phi) if phi > 0.0 else 0.0


def _period_two_model(k, th, x, a, ws):
    """Negated model terms and exact tail for :func:`period_two_sum`.

    Sums over odd harmonics follow from full sums, e.g.
    ``sum_odd sin(m x)/m**3 = S3(x) - S3(2x)/8``.  Every piece is odd in
    ``x``; for ``0 < x <= min(th, 2 pi - th)`` the tail differences are
    written out as ``x * polynomial`` so that small ``x`` loses no precision.
    """
    a0, a1, a2, a3 = a
    b1, b2, b3 = a1 / ws, a2 / ws**2, a3 / ws**3
    sign = 1.0 if x >= 0.0 else -1.0
    x = abs(x)
    m = 2.0 * k - 1.0
    sx, smx = np.sin(k * x), np.sin(m * x)
    # sin 2kx - 2 cos(k th) sin kx  and  cos k(th-x) - cos k(th+x)
    even_s = 2.0 * sx * (np.cos(k * x) - np.cos(k * th))
    even_c = 2.0 * np.sin(k * th) * sx
    model = (-a0 * smx / m + 4.0 * b2 * smx / m**3
             + 0.5 * a0 * even_s / k - 0.5 * b1 * even_c / k**2
             - 0.5 * b2 * even_s / k**3 + 0.5 * b3 * even_c / k**4)
    if 0.0 < x <= min(th, 2.0 * PI - th):
        tail = (0.5 * b2 * PI * x * (PI - x)
                - 0.5 * b1 * x * (PI - th)
                - 0.25 * b2 * x * (x - th) * (x + th - 2.0 * PI)
                - b3 * x * (PI - th) * (th * th - 2.0 * PI * th + x * x) / 12.0)
    else:
        S3 = lambda p: _s3(_wrap(p))  # noqa: E731
        C2 = lambda p: _c2(_wrap(p))  # noqa: E731
        C4 = lambda p: _c4(_wrap(p))  # noqa: E731
        tail = (-a0 * (_s1p(x) - 0.5 * _s1p(2.0 * x))
                + 4.0 * b2 * (S3(x) - S3(2.0 * x) / 8.0)
                + 0.5 * a0 * (_s1p(2.0 * x) - _s1p(x + th) - _s1p(x - th))
                - 0.5 * b1 * (C2(th - x) - C2(th + x))
                - 0.5 * b2 * (S3(2.0 * x) - S3(x + th) - S3(x - th))
                + 0.5 * b3 * (C4(th - x) - C4(th + x)))
    return [-sign * model, [sign * tail]]


def period_two_sum(G: RationalFunction, T: float, d: float, delta: float,
                   series: SeriesConfig = DEFAULT_SERIES) -> float:
    """Real bracket of the period-two balance (without the ``Vs/pi`` factor)."""
    k, Gk, Gh = _harmonics(G, T, series.n_terms)
    ws = 2.0 * PI / T
    x = ws * delta
    odd = -Gh * np.sin((2.0 * k - 1.0) * x) / (2.0 * k - 1.0)
    even = Gk * (np.sin(2.0 * k * x) - 2.0 * np.exp(1j * k * ws * d) * np.sin(k * x)) / (2.0 * k)
    parts = [np.real(odd), np.real(even)]
    if series.accelerate:
        parts += _period_two_model(k, ws * d, x, _asym(G), ws)
    return math.fsum(np.concatenate(parts))


def vs_period_two(cfg: ConverterConfig, pt: PeriodTwoPoint,
                  series: SeriesConfig = DEFAULT_SERIES) -> Optional[float]:
    """Source voltage balancing the period-two orbit at ``(d, delta)``.

    Diagnostic only: a second balance equation would be needed to pin down
    the period-two branch itself.  As ``delta -> 0`` this tends to
    :func:`vs_critical`.
    """
    _check_d(cfg.T, pt.d)
    if pt.delta == 0.0:
        raise DegenerateDelta("delta = 0; use vs_critical")
    if not abs(pt.delta) < cfg.T / 2.0:
        raise DomainError("|delta| must be below T/2")
    ramp = _fixed_ramp(cfg)
    bracket = period_two_sum(open_loop_tf(cfg), cfg.T, pt.d, pt.delta, series)
    # normalise by delta so the sign test is independent of the delta convention
    den = bracket / PI / pt.delta
    if not den > 0.0:
        return None
    return (ramp.Vh - ramp.Vl) / cfg.T / den


def fourier_coeffs_period_two(n: int, cfg: ConverterConfig, Vs: float,
                              pt: PeriodTwoPoint) -> complex:
    """Coefficient of ``exp(j n ws t / 2)`` in the period-two diode voltage."""
    if n == 0:
        raise DomainError("n = 0 (DC term) is handled by the caller")
    ws = cfg.omega_s
    if n % 2:
        return (Vs / (n * PI)) * np.exp(-0.5j * n * ws * pt.d) * math.sin(0.5 * n * ws * pt.delta)
    return (Vs / (1j * n * PI)) * (np.exp(-0.5j * n * ws * pt.d) * math.cos(0.5 * n * ws * pt.delta)
                                   - np.exp(-0.5j * n * ws * cfg.T))


def estimate_vs_critical(cfg: ConverterConfig) -> Optional[float]:
    """Two-harmonic estimate ``((Vh - Vl)/2) / Re[G(j ws) - G(j ws/2)]``."""
    ramp = _fixed_ramp(cfg)
    G = open_loop_tf(cfg)
    ws = cfg.omega_s
    den = (G(1j * ws) - G(0.5j * ws)).real
    if not den > 0.0:
        return None
    return 0.5 * (ramp.Vh - ramp.Vl) / den


def _constant_gain(cfg: ConverterConfig) -> float:
    if cfg.mode is not Mode.VOLTAGE or not cfg.G2.is_constant:
        raise ModeMismatch("needs voltage mode with a constant-gain amplifier")
    return cfg.G2.num[0] / cfg.G2.den[0]


def _warn_voltage_mode(cfg: ConverterConfig) -> None:
    ws = cfg.omega_s
    checks = {
        "1/sqrt(LC) << ws": 1.0 / math.sqrt(cfg.L * cfg.C) / ws,
        "Rc << R": cfg.Rc / cfg.R,
        "ws*Rc*C << 1": ws * cfg.Rc * cfg.C,
    }
    for name, ratio in checks.items():
        if ratio > MUCH_LESS:
            warnings.warn(f"closed-form estimate outside its validity range: {name} "
                          f"(ratio {ratio:.3g})", stacklevel=3)


def approx_vs_critical_voltage_mode(cfg: ConverterConfig,
                                    g1: Optional[float] = None) -> float:
    """Closed-form critical source voltage for a constant-gain voltage loop.

    ``((Vh - Vl) / (6 g1)) * ((R + Rc)/R) * L C ws**2``.  Violated validity
    assumptions produce warnings, not errors.
    """
    ramp = _fixed_ramp(cfg)
    if g1 is None:
        g1 = _constant_gain(cfg)
    if g1 == 0.0:
        raise SingularParameter("estimate is singular at g1 = 0")
    _warn_voltage_mode(cfg)
    return ((ramp.Vh - ramp.Vl) / (6.0 * g1) * (cfg.R + cfg.Rc) / cfg.R
            * cfg.L * cfg.C * cfg.omega_s**2)


def approx_critical_gain(cfg: ConverterConfig, Vs: float) -> float:
    """Amplifier gain at which the loop period-doubles for source ``Vs``."""
    ramp = _fixed_ramp(cfg)
    _warn_voltage_mode(cfg)
    return ((ramp.Vh - ramp.Vl) / (6.0 * Vs) * (cfg.R + cfg.Rc) / cfg.R
            * cfg.L * cfg.C * cfg.omega_s**2)


def approx_vs_critical_current_mode(cfg: ConverterConfig) -> float:
    """Closed-form critical source voltage, current mode with open voltage loop.

    ``((Vh - Vl) / (6 Rs)) * ((R + Rc)/(R Rc)) * L**2 ws**2``; singular at
    ``Rc = 0``.
    """
    ramp = _fixed_ramp(cfg)
    if cfg.mode is not Mode.CURRENT:
        raise ModeMismatch("current-mode estimate")
    if cfg.Rc == 0.0:
        raise SingularParameter("estimate is singular at Rc = 0")
    ws = cfg.omega_s
    # The leading real part of Gi(jw) is only of size Rc/L; the next order,
    # ~ 1/(R C**2 Rc) relative to it, must also be small at w = ws/2.
    for name, rate in (("1/sqrt(LC)", 1.0 / math.sqrt(cfg.L * cfg.C)),
                       ("Rc/L", cfg.Rc / cfg.L), ("1/RC", 1.0 / (cfg.R * cfg.C)),
                       ("2/(C sqrt(R Rc))", 2.0 / (cfg.C * math.sqrt(cfg.R * cfg.Rc)))):
        if rate / ws > MUCH_LESS:
            warnings.warn(f"closed-form estimate outside its validity range: "
                          f"ws >> {name} (ratio {rate / ws:.3g})", stacklevel=2)
    return ((ramp.Vh - ramp.Vl) / (6.0 * cfg.Rs) * (cfg.R + cfg.Rc) / (cfg.R * cfg.Rc)
            * cfg.L**2 * ws**2)
