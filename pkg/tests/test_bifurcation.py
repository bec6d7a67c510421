import numpy as np
import pytest

from pdbuck import presets
from pdbuck.bifurcation import CurveTable, find_period_doubling, tabulate_curves
from pdbuck.harmonic import d_domain, vs_critical, vs_period_one
from pdbuck.xfer import RationalFunction

BASE = presets.hamill_buck()
T = BASE.T


@pytest.fixture(scope="module")
def base_points():
    return find_period_doubling(BASE)


def test_single_intersection_on_reference_parameters(base_points):
    assert len(base_points) == 1
    p = base_points[0]
    assert p.vs_star == pytest.approx(24.5, rel=0.01)
    assert p.d_star == pytest.approx(2.04e-4, rel=0.01)
    assert p.duty_star == pytest.approx(0.49, abs=0.005)


def test_intersection_at_shorter_period():
    pts = find_period_doubling(presets.hamill_buck(T=250e-6))
    assert pts[0].vs_star == pytest.approx(49.5, rel=0.01)


def test_points_are_on_both_curves(base_points):
    for cfg in (BASE, presets.hamill_buck(Rc=1.0), presets.hamill_buck(T=250e-6)):
        for p in find_period_doubling(cfg):
            a = vs_period_one(cfg, p.d_star)
            b = vs_critical(cfg, p.d_star)
            assert abs(a - b) < 1e-6 * p.vs_star
            assert p.duty_star == 1.0 - p.d_star / cfg.T
            assert p.vs_star > 0 and 0 < p.d_star < cfg.T and 0 < p.duty_star < 1


def test_grid_stable_under_doubling(base_points):
    fine = find_period_doubling(BASE, grid_points=2048)
    assert len(fine) == len(base_points)
    for a, b in zip(base_points, fine):
        assert abs(a.d_star - b.d_star) < 1e-8 * T


def test_sorted_by_source_voltage():
    pts = find_period_doubling(presets.hamill_buck(Rc=1.0))
    vs = [p.vs_star for p in pts]
    assert vs == sorted(vs)


def test_no_loop_no_doubling():
    cfg = BASE.with_(G2=RationalFunction.constant(0.0))
    assert find_period_doubling(cfg, grid_points=64) == []


def test_grid_minimum():
    with pytest.raises(ValueError):
        find_period_doubling(BASE, grid_points=63)


def test_curve_table_rows_and_ordering():
    table = tabulate_curves(BASE, n_rows=512)
    assert isinstance(table, CurveTable) and len(table) == 512
    d = [r.d for r in table.rows]
    assert all(b > a for a, b in zip(d, d[1:]))
    for r in table.rows:
        for v in (r.vs_eq9, r.vs_eq11):
            assert v is None or v > 0


def test_curve_table_two_rows_are_domain_endpoints():
    table = tabulate_curves(BASE, n_rows=2)
    lo, hi = d_domain(T)
    assert [r.d for r in table.rows] == [lo, hi]


def test_closest_approach_near_intersection(base_points):
    table = tabulate_curves(BASE, n_rows=512)
    row = table.closest_approach()
    spacing = (d_domain(T)[1] - d_domain(T)[0]) / 511
    assert abs(row.d - base_points[0].d_star) <= spacing
    assert abs(row.d - 2.04e-4) <= spacing + 0.01 * 2.04e-4


def test_curve_table_preserves_missing_cells():
    cfg = BASE.with_(G2=RationalFunction.constant(0.0))
    table = tabulate_curves(cfg, n_rows=4)
    assert all(r.vs_eq9 is None and r.vs_eq11 is None for r in table.rows)
    with pytest.raises(ValueError):
        tabulate_curves(BASE, n_rows=1)
    assert np.all(np.isfinite([r.d for r in table.rows]))
