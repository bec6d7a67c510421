"""Reference parameter sets.

The voltage-mode buck converter used throughout the test-suite and the
``reproduce`` command: T = 400 us, L = 20 mH, C = 47 uF, R = 22 ohm,
Vr = 11.3 V, amplifier gain 8.4 with g = -8.4, ramp 3.8 V -> 8.2 V.
"""

from __future__ import annotations

from .xfer import ConverterConfig, FeedforwardRamp, FixedRamp, Mode, RationalFunction

G1_GAIN = 8.4
TARGET_VO = 10.0
FEEDFORWARD_KL = -1.092


def hamill_buck(T: float = 400e-6, Rc: float = 0.0, g1: float = G1_GAIN,
                Vl: float = 3.8, Vh: float = 8.2) -> ConverterConfig:
    """Voltage-mode buck with a constant-gain error amplifier and fixed ramp."""
    return ConverterConfig(
        L=20e-3, C=47e-6, R=22.0, Rc=Rc, T=T, Vr=11.3, g=-g1,
        G2=RationalFunction.constant(g1),
        ramp=FixedRamp(Vl, Vh), mode=Mode.VOLTAGE,
    )


def hamill_feedforward(kl: float = FEEDFORWARD_KL, kh: float = 0.0,
                       **kwargs) -> ConverterConfig:
    """Same converter with the ramp endpoints scaled by the source voltage."""
    return hamill_buck(**kwargs).with_(ramp=FeedforwardRamp(kl, kh))


# (T, Rc) columns with exact / two-harmonic / closed-form critical voltages
TABLE1 = (
    {"T": 400e-6, "Rc": 0.0, "exact": 24.5, "eq12": 20.2, "eq13": 20.2},
    {"T": 400e-6, "Rc": 1.0, "exact": 24.9, "eq12": 22.4, "eq13": 21.2},
    {"T": 250e-6, "Rc": 0.0, "exact": 49.5, "eq12": 51.8, "eq13": 51.8},
)
