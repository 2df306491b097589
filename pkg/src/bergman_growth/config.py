"""TOML configuration for profiles, witnesses, regions and sweeps.

Example::

    [profile]
    kind = "exp_beta"          # exp_beta | double_exp | power | custom
    beta = 1.0
    # r_splice = 0.5
    # two_m = 2                # power
    # table = "f.csv"          # custom: columns r, log_f

    [witness]
    chi = "lambda_f"           # or "table" with chi_table = "chi.csv" (columns x, chi)
    # p = 2                    # default: rule of the exponential example, else searched
    B = 1.0
    # eps0 = 0.4

    [star]                     # optional; defaults come from the tail
    # eta = 2.0
    # C = 1.0
    # R = 1.0

    [region]
    alpha = 1.0
    N = 1

    [sweep]
    t_min = 1e-6
    t_max = 1e-2
    count = 9
    z_policy = ["origin", "probe", "fraction_of_region:0.5"]
    tol = 1e-8
    precision = "double"

    [verdict]
    tol = 1e-3
    ratio_cap = 10.0
    slope_cap = 0.1
    rho_floor = 1e-2

Relative table paths are resolved against the config file's directory.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import ApproachRegion
from .profile import (FlatnessWitness, RadialProfile, StarParams, custom_table, double_exp,
                      exp_beta, lambda_witness, power_type, table_witness)
from .sweep import SweepSpec, VerdictPolicy, ZChoice

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class Config:
    profile: RadialProfile
    witness: FlatnessWitness
    region: ApproachRegion
    sweep: SweepSpec | None
    policy: VerdictPolicy
    source: str = "<dict>"


_SECTIONS = {"profile", "witness", "star", "region", "sweep", "verdict"}


def _table(path: Path, cols):
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2,
                          skiprows=1 if not _first_line_numeric(path) else 0)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read table {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise ConfigError(f"table {path} must have two columns ({', '.join(cols)})")
    return data[:, 0], data[:, 1]


def _first_line_numeric(path: Path) -> bool:
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                try:
                    [float(x) for x in line.split(",")]
                    return True
                except ValueError:
                    return False
    return True


def _num(sec: dict, key: str, default=None, cast=float):
    if key not in sec:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    try:
        val = cast(sec[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {sec[key]!r}") from exc
    if cast is float and not math.isfinite(val):
        raise ConfigError(f"{key!r} must be finite")
    return val


def build_profile(sec: dict, base: Path = Path(".")) -> RadialProfile:
    kind = sec.get("kind")
    try:
        if kind == "exp_beta":
            return exp_beta(_num(sec, "beta"), _num(sec, "r_splice", 0.5))
        if kind == "double_exp":
            return double_exp(_num(sec, "r_splice", 1.0))
        if kind == "power":
            return power_type(_num(sec, "two_m", cast=int))
        if kind == "custom":
            if "table" not in sec:
                raise ConfigError("custom profile needs 'table'")
            r, lf = _table(base / sec["table"], ("r", "log_f"))
            return custom_table(r, lf)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown profile kind {kind!r}")


def build_witness(profile: RadialProfile, sec: dict, star_sec: dict | None,
                  base: Path = Path(".")) -> FlatnessWitness:
    star = None
    if star_sec:
        star = StarParams(_num(star_sec, "eta"), _num(star_sec, "C"), _num(star_sec, "R"))
    chi = sec.get("chi", "lambda_f")
    B = _num(sec, "B", 1.0)
    if B < 1:
        raise ConfigError("B must be at least 1")
    p = sec.get("p")
    if p is not None:
        p = _num(sec, "p")
        if not p > 0:
            raise ConfigError("p must be positive")
    eps0 = _num(sec, "eps0") if "eps0" in sec else None
    try:
        if chi == "lambda_f":
            return lambda_witness(profile, p=p, B=B, eps0=eps0, star=star)
        if chi == "table":
            if p is None or eps0 is None or "chi_table" not in sec:
                raise ConfigError("tabulated chi needs chi_table, p and eps0")
            x, c = _table(base / sec["chi_table"], ("x", "chi"))
            return table_witness(x, c, p, B, eps0, star or profile.default_star())
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown chi choice {chi!r}")


def build_sweep(sec: dict, region: ApproachRegion) -> SweepSpec:
    zp = sec.get("z_policy", ["origin", "probe"])
    if not isinstance(zp, list):
        raise ConfigError("z_policy must be a list")
    return SweepSpec(region=region, t_min=_num(sec, "t_min"), t_max=_num(sec, "t_max"),
                     count=_num(sec, "count", cast=int),
                     z_policy=tuple(ZChoice.parse(z) for z in zp),
                     tol=_num(sec, "tol", 1e-8), precision=str(sec.get("precision", "double")))


def config_from_dict(data: dict, base: Path = Path("."), source: str = "<dict>") -> Config:
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    if "profile" not in data:
        raise ConfigError("missing [profile] section")
    profile = build_profile(data["profile"], base)
    witness = build_witness(profile, data.get("witness", {}), data.get("star"), base)
    reg = data.get("region", {})
    try:
        region = ApproachRegion(_num(reg, "alpha", 1.0), _num(reg, "N", 1, cast=int))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    sweep = build_sweep(data["sweep"], region) if "sweep" in data else None
    v = data.get("verdict", {})
    d = VerdictPolicy()
    policy = VerdictPolicy(tol=_num(v, "tol", d.tol), ratio_cap=_num(v, "ratio_cap", d.ratio_cap),
                           slope_cap=_num(v, "slope_cap", d.slope_cap),
                           rho_floor=_num(v, "rho_floor", d.rho_floor),
                           max_unconverged=_num(v, "max_unconverged", d.max_unconverged))
    return Config(profile, witness, region, sweep, policy, source)


def load_config(path) -> Config:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_dict(data, path.parent, str(path))


def parse_profile_shortcut(text: str) -> dict:
    """``exp_beta:1``, ``double_exp``, ``power:2`` -> a ``[profile]`` section."""
    name, _, arg = text.partition(":")
    if name == "exp_beta":
        return {"kind": "exp_beta", "beta": float(arg or 1.0)}
    if name == "double_exp":
        return {"kind": "double_exp"}
    if name == "power":
        return {"kind": "power", "two_m": int(arg or 2)}
    raise ConfigError(f"unknown profile shortcut {text!r}")
