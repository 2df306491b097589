"""Kernel sweeps over a ``t``-ladder and the verdicts computed from them."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, UnconvergedError
from .geometry import (ApproachRegion, Thresholds, compute_H, in_approach_region, in_domain,
                       log_envelope)
from .kernel import kernel_diag
from .profile import DerivedConstants, RadialProfile

log = logging.getLogger(__name__)

CSV_COLUMNS = ("t", "abs_z", "log10_K", "rel_err", "log10_envelope", "rho", "in_region", "flags")
LN10 = math.log(10.0)


@dataclass(frozen=True)
class ZChoice:
    """How ``|z|`` is picked at each ``t``.

    ``origin``; ``fraction_of_finv`` (``c f^{-1}(t)``); ``fraction_of_region``
    (``c alpha t^(1/N)``, inside the approach region for ``c < 1``);
    ``probe`` (``f^{-1}(t/2)``, generally outside it); ``explicit`` (fixed ``|z|``).
    """

    kind: str
    value: float = 0.0

    KINDS = ("origin", "fraction_of_finv", "fraction_of_region", "probe", "explicit")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown z-policy {self.kind!r}")
        if self.kind in ("fraction_of_finv", "fraction_of_region") and not 0 < self.value < 1:
            raise ConfigError(f"{self.kind} needs a fraction in (0, 1)")
        if self.kind == "explicit" and not self.value >= 0:
            raise ConfigError("explicit |z| must be nonnegative")

    def abs_z(self, profile: RadialProfile, region: ApproachRegion, t: float) -> float:
        if self.kind == "origin":
            return 0.0
        if self.kind == "fraction_of_finv":
            return self.value * float(profile.inv(math.log(t)))
        if self.kind == "fraction_of_region":
            return self.value * region.alpha * t ** (1.0 / region.N)
        if self.kind == "probe":
            return float(profile.inv(math.log(t / 2.0)))
        return self.value

    @classmethod
    def parse(cls, item) -> ZChoice:
        """``"origin"``, ``"probe"``, ``"fraction_of_finv:0.5"``, ``"fraction_of_region:0.5"`` or a number."""
        if isinstance(item, (int, float)) and not isinstance(item, bool):
            return cls("explicit", float(item))
        if not isinstance(item, str):
            raise ConfigError(f"bad z-policy entry {item!r}")
        name, _, arg = item.partition(":")
        if name in ("origin", "probe"):
            return cls(name)
        try:
            return cls(name, float(arg))
        except ValueError as exc:
            raise ConfigError(f"bad z-policy entry {item!r}") from exc

    def label(self) -> str:
        return self.kind if self.kind in ("origin", "probe") else f"{self.kind}:{self.value:g}"


@dataclass(frozen=True)
class VerdictPolicy:
    """Caps used by the verdicts; artifact policy, reported alongside the results."""

    tol: float = 1e-3
    ratio_cap: float = 10.0
    slope_cap: float = 0.1
    rho_floor: float = 1e-2
    max_unconverged: float = 0.1


@dataclass(frozen=True)
class SweepSpec:
    region: ApproachRegion
    t_min: float
    t_max: float
    count: int
    z_policy: tuple = (ZChoice("origin"), ZChoice("probe"))
    tol: float = 1e-8
    precision: str = "double"

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max):
            raise ConfigError("need 0 < t_min < t_max")
        if self.count < 4:
            raise ConfigError("a ladder needs at least 4 points")
        if self.precision not in ("double", "high"):
            raise ConfigError("precision must be 'double' or 'high'")
        if not self.z_policy:
            raise ConfigError("empty z-policy")

    def ladder(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.count)


@dataclass(frozen=True)
class SweepRow:
    t: float
    abs_z: float
    z_kind: str
    log_K: float
    rel_err: float
    log_envelope: float
    log_upper: float
    in_region: bool
    below_H: bool
    flags: tuple = ()

    @property
    def rho(self) -> float:
        return math.exp(self.log_K - self.log_envelope) if math.isfinite(self.log_K) else math.nan

    @property
    def converged(self) -> bool:
        return math.isfinite(self.log_K)

    def csv_record(self):
        def fmt(x):
            return repr(float(x))

        return {"t": fmt(self.t), "abs_z": fmt(self.abs_z),
                "log10_K": fmt(self.log_K / LN10) if self.converged else "nan",
                "rel_err": fmt(self.rel_err), "log10_envelope": fmt(self.log_envelope / LN10),
                "rho": fmt(self.rho), "in_region": "1" if self.in_region else "0",
                "flags": ";".join(self.flags)}


@dataclass(frozen=True)
class SweepReport:
    profile: str
    constants: DerivedConstants
    thresholds: Thresholds
    spec: SweepSpec
    policy: VerdictPolicy
    rows: tuple
    summary: dict
    verdicts: dict
    exit_code: int
    seed: int | None = None
    notes: tuple = field(default_factory=tuple)

    def to_dict(self):
        sp = self.spec
        return {
            "profile": self.profile,
            "constants": self.constants.to_dict(),
            "thresholds": self.thresholds.to_dict(),
            "region": {"alpha": sp.region.alpha, "N": sp.region.N},
            "ladder": {"t_min": sp.t_min, "t_max": sp.t_max, "count": sp.count,
                       "z_policy": [z.label() for z in sp.z_policy],
                       "tol": sp.tol, "precision": sp.precision},
            "policy": asdict(self.policy),
            "summary": self.summary,
            "verdicts": self.verdicts,
            "exit_code": self.exit_code,
            "seed": self.seed,
            "notes": list(self.notes),
        }


# -- evaluation ---------------------------------------------------------------


def _evaluate(args):
    profile, abs_z, t, tol, precision = args
    try:
        ev = kernel_diag(profile, abs_z, t, tol=tol, precision=precision)
        return ev.value_log, ev.rel_err, tuple(ev.warnings)
    except UnconvergedError as exc:
        rel = exc.diagnostics.get("rel_err", math.nan)
        return math.nan, float(rel), ("unconverged",)
    except DomainError:
        return math.nan, math.nan, ("outside domain",)


def _points(profile, spec):
    pts = []
    for t in spec.ladder():
        seen = set()
        for zc in spec.z_policy:
            az = zc.abs_z(profile, spec.region, float(t))
            key = (float(t), az)
            if key in seen:
                continue
            seen.add(key)
            pts.append((float(t), az, zc.kind))
    pts.sort(key=lambda p: (p[0], p[1]))
    return pts


def run_sweep(profile: RadialProfile, constants: DerivedConstants, spec: SweepSpec,
              policy: VerdictPolicy | None = None, *, thresholds: Thresholds | None = None,
              enforce_threshold: bool = True, jobs: int = 1, seed: int | None = None) -> SweepReport:
    """Evaluate the kernel on the ladder and derive the verdicts from the rows.

    With ``enforce_threshold`` the ladder must lie below ``H_{N,alpha}``
    (:class:`ConfigError` otherwise).  Without it, rows above the threshold
    are computed and flagged, and the upper-bound verdict covers them too.
    """
    policy = policy or VerdictPolicy()
    thresholds = thresholds or compute_H(profile, constants, spec.region)
    if enforce_threshold and math.log(spec.t_max) > thresholds.log_H_Nalpha:
        raise ConfigError(f"t_max={spec.t_max:g} exceeds H_(N,alpha)={thresholds.H_Nalpha:.4g}")

    pts = _points(profile, spec)
    tasks = [(profile, az, t, spec.tol, spec.precision) for t, az, _ in pts]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_evaluate, tasks))
    else:
        results = [_evaluate(a) for a in tasks]

    rows = []
    logC1 = math.log(constants.C1)
    for (t, az, kind), (lk, rel, flags) in zip(pts, results):
        le = float(log_envelope(profile, t))
        inside = bool(in_approach_region(profile, spec.region, az, 1j * t))
        below = math.log(t) < thresholds.log_H_Nalpha
        fl = list(flags)
        if not below:
            fl.append("above H")
        if not bool(in_domain(profile, az, 1j * t)) and "outside domain" not in fl:
            fl.append("outside domain")
        rows.append(SweepRow(t, az, kind, lk, rel, le, logC1 + le, inside, below, tuple(fl)))
    summary, verdicts, code = assess(rows, policy, enforce_threshold)
    return SweepReport(profile.label(), constants, thresholds, spec, policy, tuple(rows),
                       summary, verdicts, code, seed)


def _verdict(status, value, cap, detail=""):
    return {"status": status, "value": value, "cap": cap, "detail": detail}


def assess(rows, policy: VerdictPolicy, below_H_only: bool = True):
    """Summary and verdicts from the rows alone; returns ``(summary, verdicts, exit_code)``."""
    n = len(rows)
    bad = [r for r in rows if not r.converged]
    axis = [r for r in rows if r.abs_z == 0.0 and r.converged]
    verdicts = {}

    scope = [r for r in rows if r.in_region and r.converged and (r.below_H or not below_H_only)]
    if scope:
        worst = max(r.log_K - r.log_upper for r in scope)
        ok = worst <= math.log1p(policy.tol)
        verdicts["upper_bound"] = _verdict("pass" if ok else "fail", math.exp(worst), 1 + policy.tol,
                                           f"max K/(C1 E) over {len(scope)} in-region rows")
    else:
        verdicts["upper_bound"] = _verdict("skipped", None, 1 + policy.tol, "no in-region rows")

    summary = {"n_rows": n, "n_unconverged": len(bad), "max_rho": None, "min_rho": None,
               "slope": None}
    if len(axis) >= 2:
        rho = np.array([r.rho for r in axis])
        lt = np.log([r.t for r in axis])
        slope = float(np.polyfit(lt, np.log(rho), 1)[0])
        ratio = float(rho.max() / rho.min())
        summary.update(max_rho=float(rho.max()), min_rho=float(rho.min()), slope=slope)
        verdicts["rho_ratio"] = _verdict("pass" if ratio <= policy.ratio_cap else "fail",
                                         ratio, policy.ratio_cap, "max/min of rho(0, t)")
        verdicts["rho_slope"] = _verdict("pass" if abs(slope) <= policy.slope_cap else "fail",
                                         slope, policy.slope_cap, "least-squares d log rho / d log t")
    else:
        for k in ("rho_ratio", "rho_slope"):
            verdicts[k] = _verdict("skipped", None, None, "fewer than two on-axis rows")

    probes = [r for r in rows if r.z_kind == "probe" and r.converged]
    if probes and axis:
        floor = policy.rho_floor * summary["min_rho"]
        worst = min(r.rho for r in probes)
        verdicts["probe_floor"] = _verdict("pass" if worst >= floor else "fail", worst / summary["min_rho"],
                                           policy.rho_floor, "min probe rho / min on-axis rho")
    else:
        verdicts["probe_floor"] = _verdict("skipped", None, policy.rho_floor, "no probe rows")

    if n and len(bad) > policy.max_unconverged * n:
        code = 2
    elif any(v["status"] == "fail" for v in verdicts.values()):
        code = 1
    else:
        code = 0
    return summary, verdicts, code


# -- output -------------------------------------------------------------------


def write_csv(report: SweepReport, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in report.rows:
            w.writerow(r.csv_record())
    return path


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(report: SweepReport, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(report.to_dict()), indent=2, sort_keys=True) + "\n")
    return path


def summary_schema() -> dict:
    text = resources.files("bergman_growth").joinpath("summary.schema.json").read_text()
    return json.loads(text)


def read_rows(path):
    """Rows of a sweep CSV as dictionaries of strings."""
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))

