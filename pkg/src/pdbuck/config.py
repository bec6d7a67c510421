"""Flat ``key = value`` converter configuration files.

Example::

    # voltage-mode buck, constant-gain amplifier
    mode = voltage
    L_H = 0.02
    C_F = 4.7e-05
    R_ohm = 22
    Rc_ohm = 0
    T_s = 0.0004
    Vr_V = 11.3
    g = -8.4
    g2_num = 8.4
    g2_den = 1
    ramp = fixed
    Vl_V = 3.8
    Vh_V = 8.2

All values are SI; no unit conversion is performed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .xfer import ConverterConfig, FeedforwardRamp, FixedRamp, Mode, RationalFunction

KNOWN_KEYS = (
    "mode", "L_H", "C_F", "R_ohm", "Rc_ohm", "Rs_ohm", "T_s", "Vr_V", "g",
    "g2_num", "g2_den", "ramp", "Vl_V", "Vh_V", "kl", "kh",
    "series_n_terms", "target_vo_V",
)
REQUIRED = ("mode", "L_H", "C_F", "R_ohm", "T_s", "Vr_V", "g", "g2_num", "ramp")


@dataclass(frozen=True)
class ConfigFile:
    converter: ConverterConfig
    series_n_terms: Optional[int] = None
    target_vo: Optional[float] = None


def _num(raw: dict, key: str) -> float:
    try:
        return float(raw[key])
    except KeyError:
        raise ConfigError(f"missing key {key!r}") from None
    except ValueError:
        raise ConfigError(f"{key}: not a number: {raw[key]!r}") from None


def _coeffs(raw: dict, key: str, default: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in raw.get(key, default).split())
    except ValueError:
        raise ConfigError(f"{key}: expected space-separated numbers") from None


def parse_config(text: str) -> ConfigFile:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")

    try:
        mode = Mode(raw["mode"])
    except ValueError:
        raise ConfigError(f"mode must be voltage or current, got {raw['mode']!r}") from None
    if raw["ramp"] == "fixed":
        ramp = FixedRamp(_num(raw, "Vl_V"), _num(raw, "Vh_V"))
    elif raw["ramp"] == "feedforward":
        ramp = FeedforwardRamp(_num(raw, "kl"), _num(raw, "kh"))
    else:
        raise ConfigError(f"ramp must be fixed or feedforward, got {raw['ramp']!r}")
    if mode is Mode.CURRENT and "Rs_ohm" not in raw:
        raise ConfigError("current mode requires Rs_ohm")

    cfg = ConverterConfig(
        L=_num(raw, "L_H"), C=_num(raw, "C_F"), R=_num(raw, "R_ohm"),
        Rc=_num(raw, "Rc_ohm") if "Rc_ohm" in raw else 0.0,
        Rs=_num(raw, "Rs_ohm") if "Rs_ohm" in raw else 0.0,
        T=_num(raw, "T_s"), Vr=_num(raw, "Vr_V"), g=_num(raw, "g"),
        G2=RationalFunction(_coeffs(raw, "g2_num", "0"), _coeffs(raw, "g2_den", "1")),
        ramp=ramp, mode=mode,
    )
    n_terms = None
    if "series_n_terms" in raw:
        try:
            n_terms = int(raw["series_n_terms"])
        except ValueError:
            raise ConfigError("series_n_terms must be an integer") from None
        if n_terms < 8:
            raise ConfigError("series_n_terms must be >= 8")
    target = _num(raw, "target_vo_V") if "target_vo_V" in raw else None
    return ConfigFile(cfg, n_terms, target)


def load_config(path) -> ConfigFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def dump_config(cf: ConfigFile) -> str:
    """Serialise so that ``parse_config(dump_config(cf)) == cf``."""
    c = cf.converter
    lines = [
        f"mode = {c.mode.value}",
        f"L_H = {c.L!r}",
        f"C_F = {c.C!r}",
        f"R_ohm = {c.R!r}",
        f"Rc_ohm = {c.Rc!r}",
    ]
    if c.mode is Mode.CURRENT:
        lines.append(f"Rs_ohm = {c.Rs!r}")
    lines += [
        f"T_s = {c.T!r}",
        f"Vr_V = {c.Vr!r}",
        f"g = {c.g!r}",
        "g2_num = " + " ".join(repr(x) for x in c.G2.num),
        "g2_den = " + " ".join(repr(x) for x in c.G2.den),
    ]
    if isinstance(c.ramp, FixedRamp):
        lines += ["ramp = fixed", f"Vl_V = {c.ramp.Vl!r}", f"Vh_V = {c.ramp.Vh!r}"]
    else:
        lines += ["ramp = feedforward", f"kl = {c.ramp.kl!r}", f"kh = {c.ramp.kh!r}"]
    if cf.series_n_terms is not None:
        lines.append(f"series_n_terms = {cf.series_n_terms}")
    if cf.target_vo is not None:
        lines.append(f"target_vo_V = {cf.target_vo!r}")
    return "\n".join(lines) + "\n"
