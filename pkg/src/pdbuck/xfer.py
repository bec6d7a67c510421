"""Linear blocks of the unified buck converter model.

The converter is a feedback loop between a controlled square-wave generator
(the switch/diode pair) and a linear system ``G(s)``.  This module holds the
transfer functions that make up ``G(s)`` and the parameter containers used by
every other module.

Polynomials are stored as ascending-power real coefficient tuples, i.e.
``(a0, a1, a2)`` means ``a0 + a1*s + a2*s**2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from .errors import ConfigError, ModeMismatch, PoleHit

__all__ = [
    "MAX_DEGREE",
    "RationalFunction",
    "Mode",
    "FixedRamp",
    "FeedforwardRamp",
    "RampSpec",
    "ConverterConfig",
    "evaluate",
    "buck_output_filter",
    "current_sense_tf",
    "open_loop_tf",
]

MAX_DEGREE = 16


def _trim(coeffs: Sequence[float]) -> tuple[float, ...]:
    out = [float(c) for c in coeffs]
    while len(out) > 1 and out[-1] == 0.0:
        out.pop()
    return tuple(out)


def _horner(coeffs: tuple[float, ...], s):
    acc = np.zeros_like(s, dtype=complex) if isinstance(s, np.ndarray) else 0j
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


def _polymul(a, b):
    out = [0.0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _polyadd(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0.0) + (b[i] if i < len(b) else 0.0)
            for i in range(n)]


@dataclass(frozen=True)
class RationalFunction:
    """Real-coefficient ratio of polynomials in ``s``.

    Coefficients are ascending powers of ``s``.  High-order zero coefficients
    are trimmed on construction, so ``den[-1]`` is always nonzero.
    """

    num: tuple[float, ...]
    den: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        num = _trim(self.num) if len(self.num) else (0.0,)
        den = _trim(self.den) if len(self.den) else ()
        if not den or den[-1] == 0.0:
            raise ConfigError("denominator must have a nonzero leading coefficient")
        if not all(math.isfinite(c) for c in num + den):
            raise ConfigError("coefficients must be finite")
        if len(num) - 1 > MAX_DEGREE or len(den) - 1 > MAX_DEGREE:
            raise ConfigError(f"polynomial degree exceeds {MAX_DEGREE}")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def constant(cls, k: float) -> "RationalFunction":
        return cls((float(k),), (1.0,))

    @property
    def is_zero(self) -> bool:
        return self.num == (0.0,)

    @property
    def is_constant(self) -> bool:
        return len(self.num) == 1 and len(self.den) == 1

    @property
    def relative_degree(self) -> int:
        if self.is_zero:
            return MAX_DEGREE + 1
        return (len(self.den) - 1) - (len(self.num) - 1)

    def __call__(self, s):
        """Evaluate at complex ``s`` (scalar or ndarray) by Horner's scheme."""
        if isinstance(s, np.ndarray):
            d = _horner(self.den, s.astype(complex))
            if np.any(d == 0):
                raise PoleHit("evaluated at a pole")
            return _horner(self.num, s.astype(complex)) / d
        s = complex(s)
        d = _horner(self.den, s)
        if d == 0:
            raise PoleHit(f"evaluated at a pole s={s!r}")
        return _horner(self.num, s) / d

    def dc_gain(self) -> float:
        return self(0.0).real

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            other = RationalFunction.constant(other)
        return RationalFunction(_polymul(self.num, other.num),
                                _polymul(self.den, other.den))

    __rmul__ = __mul__

    def __neg__(self):
        return RationalFunction([-c for c in self.num], self.den)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = RationalFunction.constant(other)
        if self.den == other.den:
            return RationalFunction(_polyadd(self.num, other.num), self.den)
        num = _polyadd(_polymul(self.num, other.den), _polymul(other.num, self.den))
        return RationalFunction(num, _polymul(self.den, other.den))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def asymptotic_coeffs(self, order: int) -> list[float]:
        """Coefficients ``[a0, a1, ..., a_order]`` of the expansion at infinity.

        ``G(s) = a0 + a1/s + a2/s**2 + ...`` for large ``|s|``.  Requires a
        proper function (relative degree >= 0).
        """
        if self.is_zero:
            return [0.0] * (order + 1)
        r = self.relative_degree
        if r < 0:
            raise ValueError("expansion at infinity needs a proper function")
        # In z = 1/s, G = z**r * P(z)/Q(z) with P, Q the reversed polynomials.
        p = list(reversed(self.num))
        q = list(reversed(self.den))
        quot: list[float] = []
        for i in range(max(order + 1 - r, 0)):
            acc = p[i] if i < len(p) else 0.0
            for j in range(1, min(i, len(q) - 1) + 1):
                acc -= q[j] * quot[i - j]
            quot.append(acc / q[0])
        return [0.0] * r + quot if r <= order else [0.0] * (order + 1)


def evaluate(rf: RationalFunction, s):
    """Return ``rf(s)``; raises :class:`PoleHit` when ``den(s) == 0`` exactly."""
    return rf(s)


class Mode(enum.Enum):
    VOLTAGE = "voltage"
    CURRENT = "current"


@dataclass(frozen=True)
class FixedRamp:
    """Sawtooth from ``Vl`` at the clock edge to ``Vh`` at the end of the period."""

    Vl: float
    Vh: float

    def __post_init__(self):
        if self.Vh == self.Vl:
            raise ConfigError("ramp needs Vh != Vl")

    def endpoints(self, Vs: float | None = None) -> tuple[float, float]:
        return self.Vl, self.Vh


@dataclass(frozen=True)
class FeedforwardRamp:
    """Ramp whose endpoints scale with the source: ``Vl = kl*Vs``, ``Vh = kh*Vs``."""

    kl: float
    kh: float

    def __post_init__(self):
        if self.kh == self.kl:
            raise ConfigError("feedforward ramp needs kh != kl")

    def endpoints(self, Vs: float | None = None) -> tuple[float, float]:
        if Vs is None:
            raise ValueError("feedforward ramp endpoints depend on Vs")
        return self.kl * Vs, self.kh * Vs


RampSpec = Union[FixedRamp, FeedforwardRamp]


def ramp_value(ramp: RampSpec, t, T: float, Vs: float | None = None):
    """``h(t) = Vl + (Vh - Vl) * ((t/T) mod 1)``."""
    Vl, Vh = ramp.endpoints(Vs)
    return Vl + (Vh - Vl) * np.mod(np.asarray(t, dtype=float) / T, 1.0)


@dataclass(frozen=True)
class ConverterConfig:
    """Physical and control parameters of the closed-loop buck converter.

    SI units throughout.  ``g`` multiplies the reference ``Vr`` at the error
    amplifier and ``G2`` filters the output voltage, so the amplifier output
    is ``y = g*Vr + (g2 * vo)(t)``.
    """

    L: float
    C: float
    R: float
    T: float
    Vr: float
    g: float
    G2: RationalFunction
    ramp: RampSpec
    Rc: float = 0.0
    Rs: float = 0.0
    mode: Mode = Mode.VOLTAGE

    def __post_init__(self):
        for name in ("L", "C", "R", "T"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if not (math.isfinite(self.Rc) and self.Rc >= 0):
            raise ConfigError(f"Rc must be >= 0, got {self.Rc!r}")
        if not (math.isfinite(self.Vr) and math.isfinite(self.g)):
            raise ConfigError("Vr and g must be finite")
        if self.mode is Mode.CURRENT and not (self.Rs > 0):
            raise ConfigError("current mode requires Rs > 0")
        if not isinstance(self.ramp, (FixedRamp, FeedforwardRamp)):
            raise ConfigError("ramp must be FixedRamp or FeedforwardRamp")

    @property
    def fs(self) -> float:
        return 1.0 / self.T

    @property
    def omega_s(self) -> float:
        return 2.0 * math.pi / self.T

    def with_(self, **changes) -> "ConverterConfig":
        return replace(self, **changes)


def buck_output_filter(cfg: ConverterConfig) -> RationalFunction:
    """Output filter ``vo/vd`` of the LC stage with capacitor ESR and load.

    ``G1(s) = (Rc*C*s + 1) / (L*C*(1 + Rc/R)*s**2 + (L/R + Rc*C)*s + 1)``
    """
    L, C, R, Rc = cfg.L, cfg.C, cfg.R, cfg.Rc
    return RationalFunction(
        (1.0, Rc * C),
        (1.0, L / R + Rc * C, L * C * (1.0 + Rc / R)),
    )


def current_sense_tf(cfg: ConverterConfig) -> RationalFunction:
    """Sensed inductor current per unit diode voltage, ``Rs*iL/vd``.

    Derived from ``iL/vd = 1/(s*L + R || (Rc + 1/(s*C)))``; the DC value is
    ``Rs/R`` and the denominator is ``R`` times that of :func:`buck_output_filter`.
    """
    if cfg.mode is not Mode.CURRENT:
        raise ModeMismatch("current-sense path exists only in current mode")
    L, C, R, Rc, Rs = cfg.L, cfg.C, cfg.R, cfg.Rc, cfg.Rs
    return RationalFunction(
        (Rs, Rs * C * (R + Rc)),
        (R, L + R * Rc * C, L * C * (R + Rc)),
    )


def open_loop_tf(cfg: ConverterConfig) -> RationalFunction:
    """Composite linear block ``G(s)`` seen by the square-wave generator.

    ``G1*G2`` in voltage mode, ``G1*G2 - Gi`` in current mode.  No pole-zero
    cancellation is attempted.
    """
    G = buck_output_filter(cfg) * cfg.G2
    if cfg.mode is Mode.CURRENT:
        Gi = current_sense_tf(cfg)
        G = -Gi if cfg.G2.is_zero else G - Gi
    return G
