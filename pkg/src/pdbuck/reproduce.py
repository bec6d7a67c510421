"""Regenerate the reference results and check them against published values."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from pathlib import Path

from . import presets
from .bifurcation import find_period_doubling
from .feedforward import average_output, design_line_regulation, h_extrema
from .harmonic import DEFAULT_SERIES, SeriesConfig, approx_vs_critical_voltage_mode, estimate_vs_critical
from .simulator import bifurcation_diagram, onset_voltage


@dataclass(frozen=True)
class Check:
    name: str
    value: float | None
    target: float
    tol: float
    relative: bool = False

    @property
    def passed(self) -> bool:
        if self.value is None:
            return False
        err = abs(self.value - self.target)
        return err <= (self.tol * abs(self.target) if self.relative else self.tol)

    def line(self) -> str:
        kind = "rel" if self.relative else "abs"
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: value={self.value!r} target={self.target!r} tol={self.tol!r} ({kind})"


def fmt(x) -> str:
    return "" if x is None else format(x, ".17g")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) or v is None else v for v in row])
    return buf.getvalue()


def compute(g1: float = presets.G1_GAIN, series: SeriesConfig = DEFAULT_SERIES,
            sweep_points: int = 64, n_cycles: int = 500, n_discard: int = 400,
            steps_per_cycle: int = 2000):
    """Return ``(files, checks)``: CSV text per file name and the check list."""
    checks: list[Check] = []
    t1_rows = []
    for col in presets.TABLE1:
        cfg = presets.hamill_buck(T=col["T"], Rc=col["Rc"], g1=g1)
        pts = find_period_doubling(cfg, series)
        exact = pts[0].vs_star if pts else None
        eq12 = estimate_vs_critical(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            eq13 = approx_vs_critical_voltage_mode(cfg)
        t1_rows.append([col["T"], col["Rc"], exact, eq12, eq13,
                        col["exact"], col["eq12"], col["eq13"]])
        tag = f"T={col['T'] * 1e6:g}us,Rc={col['Rc']:g}"
        checks += [
            Check(f"table1_exact[{tag}]", exact, col["exact"], 0.01, True),
            Check(f"table1_eq12[{tag}]", eq12, col["eq12"], 0.01, True),
            Check(f"table1_eq13[{tag}]", eq13, col["eq13"], 0.01, True),
        ]
        if col["T"] == 400e-6 and col["Rc"] == 0.0:
            base_cfg, base_pts = cfg, pts
    checks.append(Check("d_star", base_pts[0].d_star if base_pts else None, 2.04e-4, 0.01, True))

    ext = h_extrema(base_cfg, series)
    design = design_line_regulation(base_cfg, presets.TARGET_VO, ext)
    ff = presets.hamill_feedforward(kl=design.gains.kl, kh=design.gains.kh, g1=g1)
    vo_ff = [average_output(ff, vs) for vs in (16.0, 24.0, 35.0)]
    checks += [
        Check("H_max", ext.h_max, 0.358, 0.002),
        Check("H_min", ext.h_min, 0.1792, 0.0005),
        Check("k_l", design.gains.kl, presets.FEEDFORWARD_KL, 0.001),
        Check("design_prevented", 1.0 if design.prevented else 0.0, 1.0, 0.0),
    ]
    checks += [Check(f"avg_output[Vs={vs:g}]", v, presets.TARGET_VO, 1e-12, True)
               for vs, v in zip((16.0, 24.0, 35.0), vo_ff)]

    rows = bifurcation_diagram(base_cfg, 16.0, 30.0, sweep_points, n_cycles, n_discard,
                               steps_per_cycle)
    onset = onset_voltage(rows, base_cfg, n_cycles=n_cycles, n_discard=n_discard,
                          steps_per_cycle=steps_per_cycle)
    hb = base_pts[0].vs_star if base_pts else None
    checks.append(Check("simulator_onset", onset, 24.5, 0.5))
    if hb is not None:
        checks.append(Check("onset_vs_harmonic_balance", onset, hb, 0.02, True))

    files = {
        "table1.csv": csv_text(
            ["T_s", "Rc_ohm", "exact_V", "eq12_V", "eq13_V",
             "published_exact_V", "published_eq12_V", "published_eq13_V"], t1_rows),
        "design.csv": csv_text(
            ["H_max", "H_min", "d_at_max_s", "d_at_min_s", "kl", "kh", "verdict"],
            [[ext.h_max, ext.h_min, ext.d_at_max, ext.d_at_min, design.gains.kl,
              design.gains.kh, "prevented" if design.prevented else "not_prevented"]]),
        "onset.csv": csv_text(["simulator_onset_V", "harmonic_balance_V"], [[onset, hb]]),
        "checks.csv": csv_text(["check", "value", "target", "tol", "mode", "status"],
                               [[c.name, c.value, c.target, c.tol,
                                 "rel" if c.relative else "abs",
                                 "pass" if c.passed else "fail"] for c in checks]),
    }
    return files, checks


def write_files(out_dir, files: dict[str, str]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
