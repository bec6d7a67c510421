"""Command-line interface: ``pdbuck analyze|design|curves|sweep|simulate|reproduce``.

Exit codes: 0 success, 1 design/acceptance failure, 2 configuration error,
3 unwritable output.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import reproduce as repro
from .bifurcation import find_period_doubling, tabulate_curves
from .config import load_config
from .errors import ConfigError, ModeMismatch, PdbuckError
from .feedforward import design_line_regulation, h_extrema
from .harmonic import (
    SeriesConfig,
    approx_vs_critical_current_mode,
    approx_vs_critical_voltage_mode,
    estimate_vs_critical,
)
from .reproduce import csv_text
from .simulator import bifurcation_diagram, onset_voltage, simulate
from .svg import Figure
from .xfer import FixedRamp, Mode

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_OUTPUT = 0, 1, 2, 3


class OutputError(Exception):
    pass


def _series(args, cf) -> SeriesConfig:
    n = args.series_n or cf.series_n_terms
    return SeriesConfig(n_terms=n) if n else SeriesConfig()


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def _require_fixed(cf):
    if not isinstance(cf.converter.ramp, FixedRamp):
        raise ConfigError("this command needs ramp = fixed")


def cmd_analyze(args) -> int:
    cf = load_config(args.config)
    _require_fixed(cf)
    cfg = cf.converter
    series = _series(args, cf)
    rows = [["bifurcation", p.vs_star, p.d_star, p.duty_star]
            for p in find_period_doubling(cfg, series, args.grid)]
    if not rows:
        rows.append(["none", None, None, None])
    rows.append(["estimate_eq12", estimate_vs_critical(cfg), None, None])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if cfg.mode is Mode.VOLTAGE:
            try:
                rows.append(["estimate_eq13", approx_vs_critical_voltage_mode(cfg), None, None])
            except PdbuckError:
                rows.append(["estimate_eq13", None, None, None])
        else:
            try:
                rows.append(["estimate_eq15", approx_vs_critical_current_mode(cfg), None, None])
            except PdbuckError:
                rows.append(["estimate_eq15", None, None, None])
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit(csv_text(["kind", "vs_V", "d_s", "duty"], rows), args.out)
    return EXIT_OK


def cmd_design(args) -> int:
    cf = load_config(args.config)
    target = args.target_vo if args.target_vo is not None else cf.target_vo
    if target is None:
        raise ConfigError("no target output voltage (--target-vo or target_vo_V)")
    if target == 0.0:
        raise ConfigError("target output voltage must be nonzero")
    cfg = cf.converter
    ext = h_extrema(cfg, _series(args, cf))
    design = design_line_regulation(cfg, target, ext)
    verdict = "prevented" if design.prevented else "not_prevented"
    _emit(csv_text(["kl", "kh", "H_max", "H_min", "verdict"],
                   [[design.gains.kl, design.gains.kh, ext.h_max, ext.h_min, verdict]]),
          args.out)
    return EXIT_OK if design.prevented else EXIT_FAIL


def cmd_curves(args) -> int:
    cf = load_config(args.config)
    _require_fixed(cf)
    if args.rows < 2:
        raise ConfigError("--rows must be >= 2")
    series = _series(args, cf)
    table = tabulate_curves(cf.converter, series, args.rows)
    text = csv_text(["d_s", "vs_eq9_V", "vs_eq11_V"],
                    [[r.d, r.vs_eq9, r.vs_eq11] for r in table.rows])
    svg = None
    if args.svg:
        fig = Figure(title="Period-one and critical source voltage", xlabel="d (s)",
                     ylabel="Vs (V)")
        d = [r.d for r in table.rows]
        fig.add(d, [r.vs_eq9 for r in table.rows], label="period-one balance", kind="dashed")
        fig.add(d, [r.vs_eq11 for r in table.rows], label="critical curve")
        for p in find_period_doubling(cf.converter, series):
            fig.markers.append((p.d_star, p.vs_star, f"({p.vs_star:.3g} V, {p.d_star:.3g} s)"))
        svg = fig.render()
    _emit(text, args.out)
    if svg is not None:
        _emit(svg, args.svg)
    return EXIT_OK


def _voltage_mode_sim(cf):
    cfg = cf.converter
    if cfg.mode is not Mode.VOLTAGE or not cfg.G2.is_constant:
        raise ConfigError("simulation needs voltage mode with a constant-gain amplifier")
    return cfg


def cmd_sweep(args) -> int:
    cf = load_config(args.config)
    cfg = _voltage_mode_sim(cf)
    if args.points < 1 or not 0 <= args.discard < args.cycles or args.cycles - args.discard < 16:
        raise ConfigError("need points >= 1 and at least 16 retained cycles")
    if args.points > 1 and not args.vs_min < args.vs_max:
        raise ConfigError("need --vs-min < --vs-max")
    diagram = bifurcation_diagram(cfg, args.vs_min, args.vs_max, args.points, args.cycles,
                                  args.discard, args.steps_per_cycle,
                                  continuation=not args.restart)
    onset = onset_voltage(diagram, cfg, n_cycles=args.cycles, n_discard=args.discard,
                          steps_per_cycle=args.steps_per_cycle)
    rows = []
    for row in diagram:
        first = args.discard + 1
        rows += [[row.vs, str(first + i), float(v), str(row.period)]
                 for i, v in enumerate(row.vo)]
        rows.append([row.vs, "summary", float(np.mean(row.vo)), str(row.period)])
    rows.append(["onset", "", onset, "" if onset is not None else "none"])
    text = csv_text(["vs_V", "cycle_index", "vo_V", "class"], rows)
    svg = None
    if args.svg:
        fig = Figure(title="Bifurcation diagram (stroboscopic vo)", xlabel="Vs (V)",
                     ylabel="vo (V)")
        xs = [r.vs for r in diagram for _ in r.vo]
        ys = [float(v) for r in diagram for v in r.vo]
        fig.add(xs, ys, kind="scatter", label="vo at t = kT")
        svg = fig.render()
    _emit(text, args.out)
    if svg is not None:
        _emit(svg, args.svg)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cf = load_config(args.config)
    cfg = _voltage_mode_sim(cf)
    if args.cycles < 1 or args.steps_per_cycle < 200:
        raise ConfigError("need --cycles >= 1 and --steps-per-cycle >= 200")
    tr = simulate(cfg, args.vs, args.cycles, steps_per_cycle=args.steps_per_cycle)
    cols = np.column_stack([tr.t, tr.iL, tr.vC, tr.vo, tr.y, tr.h, tr.vd])
    header = "t_s,iL_A,vC_V,vo_V,y_V,h_V,vd_V\n"
    body = "\n".join(",".join(format(v, ".17g") for v in row) for row in cols.tolist())
    text = header + body + "\n"
    svg = None
    if args.svg:
        fig = Figure(title=f"Start-up response at Vs = {args.vs:g} V", xlabel="t (s)",
                     ylabel="V")
        step = max(1, len(tr.t) // 4000)
        t = tr.t[::step].tolist()
        fig.add(t, tr.vo[::step].tolist(), label="vo")
        if args.show_comparator:
            fig.add(t, tr.h[::step].tolist(), label="h (ramp)")
            fig.add(t, tr.y[::step].tolist(), label="y (amplifier)")
        svg = fig.render()
    _emit(text, args.out)
    if svg is not None:
        _emit(svg, args.svg)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutputError(f"cannot write to {out}: {exc.strerror}") from None
    series = SeriesConfig(n_terms=args.series_n) if args.series_n else SeriesConfig()
    files, checks = repro.compute(g1=args.g1, series=series)
    try:
        repro.write_files(out, files)
    except OSError as exc:
        raise OutputError(f"cannot write to {out}: {exc.strerror}") from None
    for c in checks:
        print(c.line())
    failed = [c.name for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed"
          + (f"; failing: {', '.join(failed)}" if failed else ""))
    return EXIT_OK if not failed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdbuck", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--series-n", type=int, default=None,
                        help="harmonics kept in every series (default 4096)")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(name, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--config", required=True, help="key = value converter file")
        p.add_argument("--out", default=None, help="CSV output path (default stdout)")
        return p

    p = with_config("analyze", "locate the period-doubling point")
    p.add_argument("--grid", type=int, default=1024, help="scan points in d")
    p.set_defaults(func=cmd_analyze)

    p = with_config("design", "feedforward gains for line regulation")
    p.add_argument("--target-vo", type=float, default=None)
    p.set_defaults(func=cmd_design)

    p = with_config("curves", "tabulate the two balance curves")
    p.add_argument("--rows", type=int, default=512)
    p.add_argument("--svg", default=None, help="also write an SVG plot")
    p.set_defaults(func=cmd_curves)

    p = with_config("sweep", "simulated bifurcation diagram")
    p.add_argument("--vs-min", type=float, required=True)
    p.add_argument("--vs-max", type=float, required=True)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--cycles", type=int, default=500)
    p.add_argument("--discard", type=int, default=400)
    p.add_argument("--steps-per-cycle", type=int, default=2000)
    p.add_argument("--restart", action="store_true",
                   help="start every point from rest instead of following the attractor")
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_sweep)

    p = with_config("simulate", "start-up waveform from rest")
    p.add_argument("--vs", type=float, required=True)
    p.add_argument("--cycles", type=int, default=100)
    p.add_argument("--steps-per-cycle", type=int, default=2000)
    p.add_argument("--svg", default=None)
    p.add_argument("--show-comparator", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", parents=[common], help="regenerate reference results")
    p.add_argument("--out", default="reproduction")
    p.add_argument("--g1", type=float, default=8.4, help="amplifier gain (for what-if runs)")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, ModeMismatch) as exc:
        print(f"pdbuck: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"pdbuck: {exc}", file=sys.stderr)
        return EXIT_OUTPUT


if __name__ == "__main__":
    sys.exit(main())
