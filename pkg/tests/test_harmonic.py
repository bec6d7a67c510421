import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from _oracles import period_one_vs, period_two_bracket, y_lti, y_synth
from pdbuck import presets
from pdbuck.errors import DegenerateDelta, DomainError, ModeMismatch, SingularParameter
from pdbuck.feedforward import h_of_d
from pdbuck.harmonic import (
    DEFAULT_SERIES,
    PeriodTwoPoint,
    SeriesConfig,
    approx_critical_gain,
    approx_vs_critical_current_mode,
    approx_vs_critical_voltage_mode,
    critical_sum,
    d_domain,
    estimate_vs_critical,
    fourier_coeffs_period_two,
    period_one_sum,
    period_two_sum,
    vs_critical,
    vs_period_one,
    vs_period_two,
    y_steady_state,
)
from pdbuck.config import load_config
from pdbuck.xfer import FixedRamp, Mode, RationalFunction, open_loop_tf

L, C, R, T = 20e-3, 47e-6, 22.0, 400e-6
BASE = presets.hamill_buck()
ESR = presets.hamill_buck(Rc=1.0)
FAST = presets.hamill_buck(T=250e-6)
D_STAR = 2.04e-4


def zero_loop(cfg=BASE):
    return cfg.with_(G2=RationalFunction.constant(0.0))


# --- series settings and domain ---------------------------------------------

def test_series_config_validation():
    with pytest.raises(ValueError):
        SeriesConfig(n_terms=7)
    with pytest.raises(ValueError):
        SeriesConfig(rel_tol=1e-3)
    assert SeriesConfig(n_terms=100).doubled().n_terms == 200


@pytest.mark.parametrize("d", [0.0, 1e-7 * T, T, 1.1 * T, -1e-5])
def test_domain_error_outside_clip(d):
    with pytest.raises(DomainError):
        vs_period_one(BASE, d)
    with pytest.raises(DomainError):
        vs_critical(BASE, d)


def test_domain_endpoints_accepted():
    lo, hi = d_domain(T)
    assert lo == pytest.approx(1e-6 * T) and hi == pytest.approx((1 - 1e-6) * T)
    vs_critical(BASE, lo)
    vs_critical(BASE, hi)


def test_fixed_ramp_required():
    with pytest.raises(ModeMismatch):
        vs_period_one(presets.hamill_feedforward(), D_STAR)


# --- period-one relation -----------------------------------------------------

def test_period_one_at_bifurcation_phase():
    assert vs_period_one(BASE, D_STAR) == pytest.approx(24.5, rel=0.01)


def test_period_one_zero_loop_has_no_solution():
    assert vs_period_one(zero_loop(), D_STAR) is None


def test_period_one_matches_brute_force_and_switching_condition():
    d = 1.0e-4
    vs = vs_period_one(BASE, d)
    ref = period_one_vs(L, C, R, 0.0, T, 8.4, 11.3, 3.8, 8.2, d)
    assert vs == pytest.approx(ref, rel=1e-12)
    y = y_synth(L, C, R, 0.0, T, 8.4, 11.3, vs, d, d)
    h = 3.8 + 4.4 * d / T
    assert abs(y - h) < 1e-8 * abs(h)


def test_period_one_brute_force_with_esr():
    d = 0.3 * T
    vs = vs_period_one(ESR, d)
    ref = period_one_vs(L, C, R, 1.0, T, 8.4, 11.3, 3.8, 8.2, d, n_terms=4 * 10**6)
    # the unaccelerated reference itself converges as 1/n here
    assert vs == pytest.approx(ref, rel=1e-7)


def test_accelerated_and_plain_sums_agree_for_rc0():
    G = open_loop_tf(BASE)
    plain = SeriesConfig(n_terms=2**20, accelerate=False)
    for d in np.linspace(0.05, 0.95, 7) * T:
        assert period_one_sum(G, T, d) == pytest.approx(period_one_sum(G, T, d, plain),
                                                        rel=1e-10, abs=1e-14)
        assert critical_sum(G, T, d) == pytest.approx(critical_sum(G, T, d, plain),
                                                      rel=1e-10, abs=1e-14)


# --- steady-state y ----------------------------------------------------------

def test_y_matches_time_domain_lti():
    y = y_steady_state(BASE, 20.0, 1.5e-4, 0.0)
    ref = y_lti(L, C, R, T, 8.4, 11.3, 20.0, 1.5e-4)
    assert abs(y - ref) < 1e-6 * abs(ref)


@pytest.mark.parametrize("cfg", [BASE, ESR, FAST], ids=["base", "esr", "fast"])
def test_switching_condition_at_32_phases(cfg):
    ramp = cfg.ramp
    lo, hi = d_domain(cfg.T)
    checked = 0
    for d in np.linspace(lo, hi, 34)[1:-1]:
        vs = vs_period_one(cfg, d)
        if vs is None:
            continue
        h = ramp.Vl + (ramp.Vh - ramp.Vl) * d / cfg.T
        assert abs(y_steady_state(cfg, vs, d, d) - h) < 1e-6 * abs(h)
        checked += 1
    assert checked == 32


def test_y_constant_gain_reproduces_square_wave(monkeypatch):
    k = 3.0
    monkeypatch.setattr("pdbuck.harmonic.open_loop_tf", lambda cfg: RationalFunction.constant(k))
    cfg = BASE
    Vs, d = 10.0, 0.3 * T
    gVr = cfg.g * cfg.Vr
    for t, vd in ((0.1 * T, 0.0), (0.29 * T, 0.0), (0.31 * T, Vs), (0.9 * T, Vs)):
        assert y_steady_state(cfg, Vs, d, t) == pytest.approx(gVr + k * vd, abs=1e-9)
    # at the jump the Fourier series gives the midpoint
    assert y_steady_state(cfg, Vs, d, d) == pytest.approx(gVr + k * Vs / 2, abs=1e-9)


def test_y_rejects_time_outside_period():
    with pytest.raises(DomainError):
        y_steady_state(BASE, 20.0, D_STAR, T)


# --- critical relation -------------------------------------------------------

def test_critical_at_bifurcation_phase():
    assert vs_critical(BASE, D_STAR) == pytest.approx(24.5, rel=0.01)


def test_critical_zero_loop_has_no_solution():
    assert vs_critical(zero_loop(), D_STAR) is None


@pytest.mark.parametrize("cfg", [BASE, ESR, FAST], ids=["base", "esr", "fast"])
def test_critical_times_h_is_ramp_span(cfg):
    lo, hi = d_domain(cfg.T)
    for d in np.linspace(lo, hi, 32):
        vs = vs_critical(cfg, d)
        assert vs is not None
        assert vs * h_of_d(cfg, d) == pytest.approx(4.4, rel=1e-12)


# --- series convergence ------------------------------------------------------

@pytest.mark.parametrize("cfg", [BASE, ESR, FAST], ids=["base", "esr", "fast"])
def test_series_doubling_below_rel_tol(cfg):
    S, S2 = DEFAULT_SERIES, DEFAULT_SERIES.doubled()
    for d in np.linspace(0.05, 0.95, 9) * cfg.T:
        pt = PeriodTwoPoint(d, 0.02 * cfg.T)
        pairs = [
            (vs_period_one(cfg, d, S), vs_period_one(cfg, d, S2)),
            (vs_critical(cfg, d, S), vs_critical(cfg, d, S2)),
            (h_of_d(cfg, d, S), h_of_d(cfg, d, S2)),
            (vs_period_two(cfg, pt, S), vs_period_two(cfg, pt, S2)),
            (y_steady_state(cfg, 20.0, d, 0.3 * cfg.T, S),
             y_steady_state(cfg, 20.0, d, 0.3 * cfg.T, S2)),
        ]
        for a, b in pairs:
            if a is None:
                assert b is None
                continue
            assert abs(a - b) <= S.rel_tol * abs(b)


# --- period-two relation -----------------------------------------------------

def test_period_two_matches_brute_force():
    pt = PeriodTwoPoint(D_STAR, 0.02 * T)
    got = period_two_sum(open_loop_tf(BASE), T, pt.d, pt.delta)
    ref = period_two_bracket(L, C, R, 0.0, 8.4, T, pt.d, pt.delta)
    assert got == pytest.approx(ref, rel=1e-10)
    vs = vs_period_two(BASE, pt)
    assert vs == pytest.approx(4.4 * pt.delta / T / (ref / math.pi), rel=1e-10)


def test_period_two_accelerated_matches_brute_force_relative_degree_one():
    G = RationalFunction((1.0, 2e-3), (1.0, 1e-3, 5e-7))
    for d in (0.1 * T, 0.5 * T, 0.9 * T):
        for delta in (0.02 * T, -0.3 * T, 0.45 * T):
            got = period_two_sum(G, T, d, delta)
            ref = period_two_sum(G, T, d, delta, SeriesConfig(2**21, accelerate=False))
            assert got == pytest.approx(ref, rel=1e-9)


def test_period_two_tiny_delta_limit():
    for d in (0.3 * T, D_STAR, 0.8 * T):
        vs2 = vs_period_two(BASE, PeriodTwoPoint(d, 1e-9 * T))
        assert vs2 == pytest.approx(vs_critical(BASE, d), rel=1e-4)


@pytest.mark.parametrize("cfg", [BASE, ESR], ids=["base", "esr"])
def test_period_two_degenerates_quadratically(cfg):
    ws = cfg.omega_s
    for d in np.linspace(0.02, 0.98, 13) * cfg.T:
        vc = vs_critical(cfg, d)
        for delta in np.geomspace(1e-8, 1e-3, 11) * cfg.T:
            for sgn in (1.0, -1.0):
                v = vs_period_two(cfg, PeriodTwoPoint(d, sgn * delta))
                assert abs(v - vc) / vc < 10.0 * (ws * delta) ** 2


def test_period_two_even_in_delta_and_positive_near_bifurcation():
    for frac in (1e-4, 1e-2, 0.1):
        a = vs_period_two(BASE, PeriodTwoPoint(D_STAR, frac * T))
        b = vs_period_two(BASE, PeriodTwoPoint(D_STAR, -frac * T))
        assert a > 0 and math.isfinite(a)
        assert a == pytest.approx(b, rel=1e-12)


def test_period_two_rejects_zero_and_large_delta():
    with pytest.raises(DegenerateDelta):
        vs_period_two(BASE, PeriodTwoPoint(D_STAR, 0.0))
    with pytest.raises(DomainError):
        vs_period_two(BASE, PeriodTwoPoint(D_STAR, 0.5 * T))


# --- period-two Fourier coefficients -----------------------------------------

def test_odd_coefficients_vanish_at_zero_delta():
    pt = PeriodTwoPoint(D_STAR, 0.0)
    for n in (1, 3, 5, -7):
        assert fourier_coeffs_period_two(n, BASE, 24.5, pt) == 0


def test_coefficients_conjugate_symmetric():
    pt = PeriodTwoPoint(D_STAR, 0.013 * T)
    for n in range(1, 12):
        c = fourier_coeffs_period_two(n, BASE, 24.5, pt)
        assert fourier_coeffs_period_two(-n, BASE, 24.5, pt) == pytest.approx(c.conjugate(), rel=1e-14)


def test_second_coefficient_equals_period_one_square_wave():
    pt = PeriodTwoPoint(D_STAR, 0.0)
    ws = BASE.omega_s
    c2 = fourier_coeffs_period_two(2, BASE, 24.5, pt)
    printed = 24.5 / (2j * math.pi) * (np.exp(-1j * ws * D_STAR) - np.exp(-1j * ws * T))
    # exp(-j ws T) = 1, so this is the fundamental of the period-one square wave
    period_one = 24.5 * (np.exp(-1j * ws * D_STAR) - 1) / (2j * math.pi)
    assert c2 == pytest.approx(printed, rel=1e-14)
    assert c2 == pytest.approx(period_one, rel=1e-12)


def test_zero_harmonic_rejected():
    with pytest.raises(DomainError):
        fourier_coeffs_period_two(0, BASE, 24.5, PeriodTwoPoint(D_STAR, 0.0))


# --- estimates and closed forms ----------------------------------------------

@pytest.mark.parametrize("cfg,expect", [(BASE, 20.2), (ESR, 22.4), (FAST, 51.8)],
                         ids=["base", "esr", "fast"])
def test_two_harmonic_estimate(cfg, expect):
    assert estimate_vs_critical(cfg) == pytest.approx(expect, rel=0.01)


def test_two_harmonic_estimate_within_20pct_of_exact():
    assert abs(estimate_vs_critical(BASE) - 24.5) < 0.2 * 24.5


def test_two_harmonic_estimate_zero_loop():
    assert estimate_vs_critical(zero_loop()) is None


@pytest.mark.parametrize("cfg,expect", [(BASE, 20.2), (ESR, 21.2), (FAST, 51.8)],
                         ids=["base", "esr", "fast"])
def test_voltage_mode_closed_form(cfg, expect):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert approx_vs_critical_voltage_mode(cfg) == pytest.approx(expect, rel=0.01)


def test_voltage_mode_closed_form_agrees_with_estimate_to_3_figures():
    eq13 = approx_vs_critical_voltage_mode(BASE)
    eq12 = estimate_vs_critical(BASE)
    assert float(f"{eq13:.3g}") == float(f"{eq12:.3g}")


def test_voltage_mode_closed_form_explicit_gain_and_mode_check():
    assert approx_vs_critical_voltage_mode(BASE, g1=4.2) == pytest.approx(
        2 * approx_vs_critical_voltage_mode(BASE), rel=1e-15)
    cur = load_config("configs/current_mode.cfg").converter
    with pytest.raises(ModeMismatch):
        approx_vs_critical_voltage_mode(cur)


def test_voltage_mode_validity_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        approx_vs_critical_voltage_mode(BASE)  # all ratios small: no warning
    slow = BASE.with_(T=5e-3)
    with pytest.warns(UserWarning, match="1/sqrt"):
        approx_vs_critical_voltage_mode(slow)
    with pytest.warns(UserWarning, match="Rc << R"):
        approx_vs_critical_voltage_mode(BASE.with_(Rc=5.0))


def test_critical_gain_inverts_closed_form():
    vs = approx_vs_critical_voltage_mode(BASE)
    assert approx_critical_gain(BASE, vs) == pytest.approx(8.4, rel=1e-14)
    assert approx_critical_gain(BASE, 20.2) == pytest.approx(8.4, rel=0.01)
    assert approx_critical_gain(BASE, 40.4) == pytest.approx(0.5 * approx_critical_gain(BASE, 20.2),
                                                             rel=1e-15)


def test_critical_gain_at_exact_onset():
    ws = 2 * math.pi / T
    by_hand = 4.4 / (6 * 24.5) * L * C * ws**2
    g = approx_critical_gain(BASE, 24.5)
    assert g == pytest.approx(by_hand, rel=1e-14)
    assert g == pytest.approx(6.93, abs=0.02)


CURRENT = load_config("configs/current_mode.cfg").converter


def test_current_mode_closed_form_formula():
    ws = CURRENT.omega_s
    expect = 4.4 / 6.0 * (22.5 / (22 * 0.5)) * L**2 * ws**2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert approx_vs_critical_current_mode(CURRENT) == pytest.approx(expect, rel=1e-14)


def test_current_mode_closed_form_decreases_with_esr():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vals = [approx_vs_critical_current_mode(CURRENT.with_(Rc=rc))
                for rc in np.linspace(0.05, 21.9, 40)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_current_mode_closed_form_scales_with_frequency_squared():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = approx_vs_critical_current_mode(CURRENT)
        b = approx_vs_critical_current_mode(CURRENT.with_(T=CURRENT.T / 2))
    assert b == pytest.approx(4 * a, rel=1e-14)


def test_current_mode_closed_form_singular_without_esr():
    with pytest.raises(SingularParameter):
        approx_vs_critical_current_mode(CURRENT.with_(Rc=0.0))


def test_current_mode_closed_form_converges_to_estimate():
    # The closed form is the leading term of the two-harmonic estimate in
    # 1/ws; the gap must shrink like 1/ws**2 as the switching frequency rises.
    gaps = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for f in (1, 2, 4, 8, 16):
            cfg = CURRENT.with_(T=CURRENT.T / f)
            gaps.append(abs(approx_vs_critical_current_mode(cfg) / estimate_vs_critical(cfg) - 1))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[1] < 0.25
    assert gaps[-1] < 0.005
    assert gaps[-1] / gaps[-2] == pytest.approx(0.25, rel=0.05)


def test_current_mode_closed_form_against_estimate_at_example_parameters():
    # Example parameters: 1/(C sqrt(R Rc)) is comparable to ws/2, so the
    # closed form is outside its range and a validity warning is expected.
    with pytest.warns(UserWarning, match="sqrt\\(R Rc\\)"):
        eq15 = approx_vs_critical_current_mode(CURRENT)
    eq12 = estimate_vs_critical(CURRENT)
    assert abs(eq15 / eq12 - 1) < 0.25


def test_current_mode_estimate_uses_negative_sense_path():
    ws = CURRENT.omega_s
    from pdbuck.xfer import current_sense_tf
    Gi = current_sense_tf(CURRENT)
    den = (-Gi(1j * ws) + Gi(0.5j * ws)).real
    assert estimate_vs_critical(CURRENT) == pytest.approx(2.2 / den, rel=1e-14)
    assert CURRENT.mode is Mode.CURRENT and isinstance(CURRENT.ramp, FixedRamp)


# --- properties ---------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(frac=st.floats(0.001, 0.999))
def test_switching_condition_property(frac):
    d = frac * T
    vs = vs_period_one(BASE, d)
    if vs is None:
        return
    h = 3.8 + 4.4 * frac
    assert abs(y_steady_state(BASE, vs, d, d) - h) < 1e-6 * abs(h)


@settings(max_examples=40, deadline=None)
@given(frac=st.floats(1e-6, 1 - 1e-6), Rc=st.sampled_from([0.0, 0.3, 1.0]))
def test_critical_h_identity_property(frac, Rc):
    cfg = presets.hamill_buck(Rc=Rc)
    d = frac * T
    vs = vs_critical(cfg, d)
    if vs is None:
        return
    assert vs * h_of_d(cfg, d) == pytest.approx(4.4, rel=1e-12)


def test_period_one_inverts_to_unique_phase_below_onset():
    # below the onset Vs(d) is monotone on the physical branch
    d = brentq(lambda x: vs_period_one(BASE, x) - 20.0, 0.2 * T, 0.8 * T, xtol=1e-16)
    assert vs_period_one(BASE, d) == pytest.approx(20.0, rel=1e-12)
