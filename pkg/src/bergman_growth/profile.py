"""Radial defining functions ``F(z) = f(|z|)`` and the scalar transforms built on them.

``f`` vanishes to infinite order at the origin for the profiles of interest, so
it is never evaluated directly: every routine works with ``log f``.  Built-in
kinds consist of a closed-form *core* on ``(0, r_splice]``, a monotone cubic
Hermite bridge on ``[r_splice, r_join]`` (in value space) and a quadratic tail
``c * r**2`` beyond ``r_join``.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, RangeError

_LOG_MAX = math.log(np.finfo(float).max)


_LOG_MAX = math.log(np.finfo(float).max)


class Kind(str, enum.Enum):
    EXP_BETA = "exp_beta"
    DOUBLE_EXP = "double_exp"
    POWER = "power"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Splice:
    """Hermite bridge from the core at ``r_splice`` to the tail ``c_tail*r**2`` at ``r_join``."""

    r_splice: float
    r_join: float
    c_tail: float
    f0: float
    m0: float
    f1: float
    m1: float

    def value(self, r):
        h = self.r_join - self.r_splice
        x = (r - self.r_splice) / h
        x2, x3 = x * x, x * x * x
        return ((2 * x3 - 3 * x2 + 1) * self.f0 + (x3 - 2 * x2 + x) * h * self.m0
                + (-2 * x3 + 3 * x2) * self.f1 + (x3 - x2) * h * self.m1)


@dataclass(frozen=True)
class _Table:
    """Monotone-cubic interpolant of ``log f`` against ``log r`` with analytic extrapolation."""

    log_r: np.ndarray
    log_f: np.ndarray
    interp: PchipInterpolator
    slope_lo: float  # d log f / d log r at the first node
    slope_hi: float  # d log f / d log r at the last node

    @property
    def r0(self):
        return math.exp(self.log_r[0])

    @property
    def r1(self):
        return math.exp(self.log_r[-1])


@dataclass(frozen=True)
class RadialProfile:
    """The radial profile ``f`` (immutable; safe to share across workers).

    Use the factories :func:`exp_beta`, :func:`double_exp`, :func:`power_type`
    and :func:`custom_table` rather than the constructor.
    """

    kind: Kind
    beta: float | None = None
    two_m: int | None = None
    splice: Splice | None = None
    table: _Table | None = None
    r_unit: float = field(init=False, default=float("nan"))

    def __post_init__(self):
        with np.errstate(invalid="ignore"):
            object.__setattr__(self, "r_unit", float(self.inv(0.0)))

    # -- core formulas ------------------------------------------------------

    @property
    def r_core(self) -> float:
        """Upper end of the closed-form (or tabulated) core."""
        if self.splice is not None:
            return self.splice.r_splice
        if self.table is not None:
            return self.table.r1
        return math.inf

    @property
    def r_floor(self) -> float:
        """Smallest radius at which ``log f`` is finite in double precision."""
        if self.kind is Kind.DOUBLE_EXP:
            return 1.0 / _LOG_MAX * (1 + 1e-12)
        if self.kind is Kind.EXP_BETA:
            return math.exp(-_LOG_MAX / self.beta) if _LOG_MAX / self.beta < 700 else 1e-300
        return 1e-300

    def label(self) -> str:
        if self.kind is Kind.EXP_BETA:
            return f"exp_beta(beta={self.beta:g})"
        if self.kind is Kind.POWER:
            return f"power(2M={self.two_m})"
        return self.kind.value

    def _core_logf(self, r):
        with np.errstate(divide="ignore", over="ignore"):
            if self.kind is Kind.EXP_BETA:
                return -np.power(r, -self.beta)
            if self.kind is Kind.DOUBLE_EXP:
                return -np.exp(1.0 / r)
            if self.kind is Kind.POWER:
                return self.two_m * np.log(r)
        raise AssertionError(self.kind)

    def _core_dlogf(self, r):
        if self.kind is Kind.EXP_BETA:
            return self.beta * r ** (-self.beta - 1)
        if self.kind is Kind.DOUBLE_EXP:
            return math.exp(1.0 / r) / r ** 2
        return self.two_m / r

    def _core_log_inv(self, log_t):
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind is Kind.EXP_BETA:
                return -np.log(-log_t) / self.beta
            if self.kind is Kind.DOUBLE_EXP:
                return -np.log(np.log(-log_t))
            return log_t / self.two_m

    # -- log f --------------------------------------------------------------

    def logf(self, r):
        """``log f(r)`` (vectorised); ``-inf`` at ``r = 0``."""
        r = np.asarray(r, dtype=float)
        if not np.all(np.isfinite(r)):
            raise DomainError("radius must be finite")
        if np.any(r < 0):
            raise DomainError("radius must be nonnegative")
        if self.table is not None:
            return self._table_logf(r)
        out = np.empty_like(r)
        with np.errstate(divide="ignore"):
            if self.splice is None:
                out[...] = self._core_logf(r)
                return out if out.ndim else float(out)
            sp = self.splice
            core = r <= sp.r_splice
            tail = r >= sp.r_join
            mid = ~core & ~tail
            out[core] = self._core_logf(r[core])
            out[mid] = np.log(sp.value(r[mid]))
            out[tail] = math.log(sp.c_tail) + 2.0 * np.log(r[tail])
        return out if out.ndim else float(out)

    def _table_logf(self, r):
        tb = self.table
        out = np.empty_like(r)
        with np.errstate(divide="ignore"):
            lr = np.log(r)
        lo = lr < tb.log_r[0]
        hi = lr > tb.log_r[-1]
        mid = ~lo & ~hi
        out[mid] = tb.interp(lr[mid])
        with np.errstate(divide="ignore", over="ignore"):
            out[lo] = tb.log_f[0] + tb.slope_lo * (1.0 - tb.r0 / r[lo])
        out[hi] = tb.log_f[-1] + tb.slope_hi * (lr[hi] - tb.log_r[-1])
        return out if out.ndim else float(out)

    def logf_mp(self, r):
        """``log f(r)`` for an ``mpmath`` number (high-precision path)."""
        import mpmath as mp

        if r == 0:
            return mp.ninf
        if self.table is not None:
            return mp.mpf(float(self._table_logf(np.asarray(float(r)))))
        sp = self.splice
        if sp is None or r <= sp.r_splice:
            if self.kind is Kind.EXP_BETA:
                return -mp.power(r, -self.beta)
            if self.kind is Kind.DOUBLE_EXP:
                return -mp.exp(1 / r)
            return self.two_m * mp.log(r)
        if r >= sp.r_join:
            return mp.log(sp.c_tail) + 2 * mp.log(r)
        h = mp.mpf(sp.r_join) - sp.r_splice
        x = (r - sp.r_splice) / h
        v = ((2 * x**3 - 3 * x**2 + 1) * sp.f0 + (x**3 - 2 * x**2 + x) * h * sp.m0
             + (-2 * x**3 + 3 * x**2) * sp.f1 + (x**3 - x**2) * h * sp.m1)
        return mp.log(v)

    # -- inverse ------------------------------------------------------------

    def log_inv(self, log_t):
        """``log f^{-1}(t)`` given ``log t`` (vectorised); ``-inf`` for ``log t = -inf``."""
        lt = np.asarray(log_t, dtype=float)
        if np.any(np.isnan(lt)) or np.any(lt == np.inf):
            raise RangeError("log t must be < +inf")
        out = np.full(lt.shape, -np.inf)
        fin = np.isfinite(lt)
        if self.table is not None:
            out[fin] = [self._table_log_inv(v) for v in lt[fin]]
        elif self.splice is None:
            out[fin] = self._core_log_inv(lt[fin])
        else:
            sp = self.splice
            l0 = float(self._core_logf(sp.r_splice))
            l1 = math.log(sp.c_tail) + 2 * math.log(sp.r_join)
            v = lt[fin]
            res = np.empty_like(v)
            core = v <= l0
            tail = v >= l1
            mid = ~core & ~tail
            res[core] = self._core_log_inv(v[core])
            res[tail] = 0.5 * (v[tail] - math.log(sp.c_tail))
            res[mid] = [self._bridge_log_inv(x) for x in v[mid]]
            out[fin] = res
        return out if out.ndim else float(out)

    def inv(self, log_t):
        """``f^{-1}(t)`` given ``log t``; :class:`RangeError` if the radius overflows a double."""
        lr = self.log_inv(log_t)
        lr_a = np.asarray(lr)
        if np.any(np.isfinite(lr_a) & (lr_a > _LOG_MAX)):
            raise RangeError("f^-1(t) exceeds the double range")
        with np.errstate(under="ignore"):
            r = np.exp(lr)
        return r if np.ndim(r) else float(r)

    def _bridge_log_inv(self, log_t):
        sp = self.splice
        g = lambda r: math.log(sp.value(r)) - log_t  # noqa: E731
        r = brentq(g, sp.r_splice, sp.r_join, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        return math.log(r)

    def _table_log_inv(self, log_t):
        tb = self.table
        if log_t < tb.log_f[0]:
            # log_t = l0 + s(1 - r0/r)  =>  r = r0 / (1 - (log_t - l0)/s)
            return math.log(tb.r0) - math.log1p(-(log_t - tb.log_f[0]) / tb.slope_lo)
        if log_t > tb.log_f[-1]:
            return tb.log_r[-1] + (log_t - tb.log_f[-1]) / tb.slope_hi
        return brentq(lambda x: float(tb.interp(x)) - log_t, tb.log_r[0], tb.log_r[-1],
                      xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)

    def default_star(self) -> StarParams:
        """Condition-(*) parameters that hold by construction of the tail."""
        if self.splice is not None:
            return StarParams(eta=2.0, C=self.splice.c_tail, R=self.splice.r_join)
        if self.kind is Kind.POWER:
            return StarParams(eta=float(self.two_m), C=1.0, R=1.0)
        tb = self.table
        eta = tb.slope_hi
        return StarParams(eta=eta, C=math.exp(tb.log_f[-1] - eta * tb.log_r[-1]), R=tb.r1)


# -- factories ----------------------------------------------------------------


def _make_splice(core: RadialProfile, r_splice: float) -> Splice:
    f0 = math.exp(float(core._core_logf(r_splice)))
    m0 = f0 * core._core_dlogf(r_splice)
    r_join = 2.0 * r_splice
    h = r_join - r_splice
    # c >= 1 and r_join**2 * c >= 2 f0 + m0 h keep the Fritsch-Carlson ratios summing to <= 2.
    c = max(1.0, (2.0 * f0 + m0 * h) / r_join ** 2)
    return Splice(r_splice, r_join, c, f0, m0, c * r_join ** 2, 2.0 * c * r_join)


def exp_beta(beta: float, r_splice: float = 0.5) -> RadialProfile:
    """``f(r) = exp(-r**-beta)`` near 0, spliced into ``c r**2``."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    bare = RadialProfile(Kind.EXP_BETA, beta=float(beta))
    return RadialProfile(Kind.EXP_BETA, beta=float(beta), splice=_make_splice(bare, r_splice))


def double_exp(r_splice: float = 1.0) -> RadialProfile:
    """``f(r) = exp(-exp(1/r))`` near 0, spliced into ``c r**2``."""
    bare = RadialProfile(Kind.DOUBLE_EXP)
    return RadialProfile(Kind.DOUBLE_EXP, splice=_make_splice(bare, r_splice))


def power_type(two_m: int) -> RadialProfile:
    """Finite-type prototype ``f(r) = r**(2M)`` (no splice needed)."""
    if int(two_m) != two_m or two_m <= 0 or two_m % 2:
        raise DomainError("2M must be an even positive integer")
    return RadialProfile(Kind.POWER, two_m=int(two_m))


def custom_table(r, logf) -> RadialProfile:
    """Profile from tabulated ``(r, log f(r))`` pairs (strictly increasing in both)."""
    r = np.asarray(r, dtype=float)
    lf = np.asarray(logf, dtype=float)
    if r.ndim != 1 or r.shape != lf.shape or r.size < 3:
        raise DomainError("need at least three (r, log f) pairs of equal length")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(lf)) and r[0] > 0):
        raise DomainError("table entries must be finite with r > 0")
    if np.any(np.diff(r) <= 0) or np.any(np.diff(lf) <= 0):
        raise DomainError("table must be strictly increasing in r and in log f")
    lr = np.log(r)
    interp = PchipInterpolator(lr, lf, extrapolate=False)
    d = interp.derivative()
    s_lo, s_hi = float(d(lr[0])), float(d(lr[-1]))
    if not s_lo > 0:
        s_lo = float((lf[1] - lf[0]) / (lr[1] - lr[0]))
    if not s_hi > 0:
        s_hi = float((lf[-1] - lf[-2]) / (lr[-1] - lr[-2]))
    return RadialProfile(Kind.CUSTOM, table=_Table(lr, lf, interp, s_lo, s_hi))


# -- scalar operations --------------------------------------------------------


def eval_logf(profile: RadialProfile, r):
    """``log f(r)``; raises :class:`DomainError` for non-finite or negative ``r``."""
    return profile.logf(r)


def inv_f(profile: RadialProfile, log_t):
    """``f^{-1}(t)`` from ``log t``; ``0`` at ``log t = -inf``."""
    return profile.inv(log_t)


def lambda_f(profile: RadialProfile, x):
    """Flatness gauge ``Lambda_f(x) = -1/log f(x)`` on ``[0, f^{-1}(1))``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("x must be finite and nonnegative")
    if np.any(x >= profile.r_unit):
        raise DomainError(f"x must be below f^-1(1) = {profile.r_unit:g}")
    lf = profile.logf(x)
    with np.errstate(divide="ignore"):
        out = np.where(x == 0, 0.0, -1.0 / lf)
    out = np.abs(out)  # -0.0 from log f = -inf
    return out if out.ndim else float(out)


def g_f(profile: RadialProfile, y):
    """``G_f = Lambda_f^{-1}``, i.e. ``f^{-1}(exp(-1/y))``; ``G_f(0) = 0``."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(np.isnan(y)) or np.any(y == np.inf):
        raise RangeError("y must lie in [0, inf)")
    with np.errstate(divide="ignore"):
        log_t = np.where(y == 0, -np.inf, -1.0 / np.where(y == 0, 1.0, y))
    out = profile.inv(log_t)
    return out if np.ndim(out) else float(out)


# -- witness, constants, checks -----------------------------------------------


@dataclass(frozen=True)
class StarParams:
    """``F(z) >= C |z|**eta`` for ``|z| >= R``."""

    eta: float
    C: float
    R: float


@dataclass(frozen=True)
class FlatnessWitness:
    """``(chi, p, B, eps0)`` with ``chi**p`` convex and ``chi/B <= Lambda_f <= B chi``."""

    chi: Callable
    p: float
    B: float
    eps0: float
    star: StarParams
    chi_source: str = "lambda_f"
    chi_inverse: Callable | None = None

    def kappa0(self, y):
        """``chi^{-1}`` (exact when available, otherwise by bracketing)."""
        if self.chi_inverse is not None:
            return self.chi_inverse(y)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        top = float(self.chi(self.eps0))
        out = np.array([0.0 if v == 0 else brentq(lambda x: float(self.chi(x)) - v, 0.0, self.eps0,
                                                  xtol=1e-300, rtol=1e-15)
                        for v in np.minimum(y, top)])
        return out


def _chi_table(x, chi):
    return PchipInterpolator(np.asarray(x, float), np.asarray(chi, float), extrapolate=False)


def default_p(profile: RadialProfile) -> float | None:
    """Exponent suggested by the exponential example: ``1`` if ``beta > 1``, else least integer with ``p beta > 1``."""
    if profile.kind is Kind.EXP_BETA:
        if profile.beta > 1:
            return 1.0
        return float(math.floor(1.0 / profile.beta) + 1)
    if profile.kind is Kind.DOUBLE_EXP:
        return 1.0
    return None


def lambda_witness(profile: RadialProfile, p: float | None = None, B: float = 1.0,
                   eps0: float | None = None, star: StarParams | None = None) -> FlatnessWitness:
    """Witness with ``chi = Lambda_f``; ``p`` is searched when not given."""
    if eps0 is None:
        eps0 = min(0.4, 0.8 * profile.r_core, 0.9 * profile.r_unit)
    chi = functools.partial(lambda_f, profile)
    if p is None:
        p = default_p(profile)
    if p is None:
        try:
            p = search_p(profile, eps0)
        except DomainError:
            p = 1.0  # left for check_conditions to flag
    return FlatnessWitness(chi=chi, p=float(p), B=float(B), eps0=float(eps0),
                           star=star or profile.default_star(), chi_source="lambda_f",
                           chi_inverse=functools.partial(g_f, profile))


def table_witness(x, chi, p, B, eps0, star) -> FlatnessWitness:
    x = np.asarray(x, float)
    chi = np.asarray(chi, float)
    if np.any(np.diff(x) <= 0) or np.any(np.diff(chi) <= 0) or chi[0] != 0 or x[0] != 0:
        raise DomainError("tabulated chi must start at (0, 0) and be strictly increasing")
    if x[-1] < eps0:
        raise DomainError("tabulated chi must cover [0, eps0]")
    return FlatnessWitness(chi=_chi_table(x, chi), p=float(p), B=float(B), eps0=float(eps0),
                           star=star, chi_source="table")


@dataclass(frozen=True)
class GridSpec:
    """Grids used by :func:`check_conditions`."""

    n_nodes: int = 512
    k_max: int = 64
    mono_r: tuple[float, float] = (1e-6, 1e6)
    vanish_r: float = 1e-40
    x_decades: float = 8.0
    tail_r_max: float = 1e6
    convex_tol: float = -1e-10
    sandwich_rtol: float = 1e-12


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class ConditionReport:
    checks: tuple[ConditionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> ConditionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"passed": self.passed,
                "checks": [{"name": c.name, "passed": c.passed, "margin": c.margin, "detail": c.detail}
                           for c in self.checks]}


def _geomspace(lo, hi, n):
    return np.exp(np.linspace(math.log(lo), math.log(hi), n))


def convexity_margin(x, y) -> float:
    """Smallest scaled second divided difference ``y[x0,x1,x2] * x1**2 / max|y|`` over triples."""
    x0, x1, x2 = x[:-2], x[1:-1], x[2:]
    y0, y1, y2 = y[:-2], y[1:-1], y[2:]
    d2 = 2.0 * ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0)
    scale = np.maximum(np.maximum(np.abs(y0), np.abs(y1)), np.abs(y2))
    ok = scale > 0
    if not np.any(ok):
        return 0.0
    return float(np.min(d2[ok] * x1[ok] ** 2 / scale[ok]))


def check_conditions(profile: RadialProfile, witness: FlatnessWitness,
                     grid: GridSpec | None = None) -> ConditionReport:
    """Grid checks of monotonicity, infinite-order vanishing, flatness and condition (*).

    A failing condition is recorded in the report, never raised.
    """
    grid = grid or GridSpec()
    if grid.n_nodes < 3:
        raise DomainError("grid must have at least three nodes")
    checks = []

    lo = max(grid.mono_r[0], profile.r_floor)
    r = _geomspace(lo, grid.mono_r[1], grid.n_nodes)
    lf = profile.logf(r)
    d = np.diff(lf)
    checks.append(ConditionCheck("strict monotonicity", bool(np.all(d > 0)), float(np.min(d)),
                                 f"log f on {grid.n_nodes} nodes in [{lo:.3g}, {grid.mono_r[1]:.3g}]"))

    rv = max(grid.vanish_r, profile.r_floor)
    r = _geomspace(rv, 2.0 * rv, 16)
    lf = profile.logf(r)
    gap = grid.k_max * np.log(r) - lf
    checks.append(ConditionCheck("infinite-order vanishing", bool(np.all(gap >= 0)), float(np.min(gap)),
                                 f"f(r) <= r^{grid.k_max} on [{rv:.3g}, {2 * rv:.3g}]"))

    if not witness.eps0 < profile.r_unit:
        checks.append(ConditionCheck("flatness sandwich", False, -math.inf, "eps0 >= f^-1(1)"))
        checks.append(ConditionCheck("convexity of chi^p", False, -math.inf, "eps0 >= f^-1(1)"))
    else:
        x = _geomspace(witness.eps0 * 10.0 ** -grid.x_decades, witness.eps0, grid.n_nodes)
        lam = lambda_f(profile, x)
        chi = np.asarray(witness.chi(x), dtype=float)
        B, tol = witness.B, grid.sandwich_rtol
        live = (lam > 0) | (chi > 0)
        if np.any(live):
            lo_gap = (lam - chi / B * (1 - tol))[live] / chi[live]
            hi_gap = (B * chi * (1 + tol) - lam)[live] / chi[live]
            margin = float(min(np.min(lo_gap), np.min(hi_gap)))
        else:
            margin = 0.0
        ok = margin >= 0 and float(witness.chi(0.0)) == 0.0
        checks.append(ConditionCheck("flatness sandwich", bool(ok), margin,
                                     f"chi/B <= Lambda_f <= B chi on (0, {witness.eps0:g}], B={B:g}"))
        cm = convexity_margin(x, chi ** witness.p)
        checks.append(ConditionCheck("convexity of chi^p", cm >= grid.convex_tol, cm,
                                     f"p={witness.p:g}, scaled second divided differences"))

    st = witness.star
    r = _geomspace(st.R, max(grid.tail_r_max, st.R * 10), grid.n_nodes)
    gap = profile.logf(r) - (math.log(st.C) + st.eta * np.log(r))
    tol = 1e-12 * np.maximum(1.0, np.abs(profile.logf(r)))
    checks.append(ConditionCheck("tail growth (*)", bool(np.all(gap >= -tol)), float(np.min(gap)),
                                 f"f(r) >= {st.C:g} r^{st.eta:g} for r >= {st.R:g}"))
    return ConditionReport(tuple(checks))


def search_p(profile: RadialProfile, eps0: float, B: float = 1.0,
             candidates=(1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0)) -> float:
    """Smallest candidate ``p`` for which ``Lambda_f**p`` passes the convexity check."""
    grid = GridSpec()
    x = _geomspace(eps0 * 10.0 ** -grid.x_decades, eps0, grid.n_nodes)
    lam = lambda_f(profile, x)
    for p in candidates:
        if convexity_margin(x, lam ** p) >= grid.convex_tol:
            return float(p)
    raise DomainError("no candidate p makes Lambda_f^p convex")


@dataclass(frozen=True)
class DerivedConstants:
    """Constants extracted from a verified witness."""

    kappa_eta: int
    M: float
    mu: float
    C1: float
    K: float
    T: float
    T1: float
    A: float
    p: float
    B: float
    star: StarParams

    @property
    def doubling(self) -> tuple[float, float]:
        return self.K, self.T

    def to_dict(self):
        return {"kappa_eta": self.kappa_eta, "M": self.M, "mu": self.mu, "C1": self.C1,
                "K": self.K, "T": self.T, "T1": self.T1, "A": self.A, "p": self.p, "B": self.B,
                "star": {"eta": self.star.eta, "C": self.star.C, "R": self.star.R}}


def kappa_eta(eta: float) -> int:
    if eta > 1:
        return 1
    return int(math.floor(1.0 / eta)) + 1


def derive_constants(witness: FlatnessWitness, profile: RadialProfile) -> DerivedConstants:
    B, p = witness.B, witness.p
    M = (2.0 * B * B) ** p - 1.0
    mu = 1.0 / (M + 1.0)
    T1 = float(witness.chi(witness.eps0)) / B
    return DerivedConstants(
        kappa_eta=kappa_eta(witness.star.eta), M=M, mu=mu, C1=64.0 / (mu * mu * math.pi ** 2),
        K=M * (M + 2.0), T=min(T1 / 2.0, T1 / B), T1=T1, A=min(profile.r_unit, 1.0),
        p=p, B=B, star=witness.star)


@dataclass(frozen=True)
class DoublingReport:
    passed: bool
    K: float
    M: float
    empirical_K: float
    empirical_M: float
    min_gap: float
    n_points: int
    violations: tuple = ()


def check_doubling(profile: RadialProfile, constants: DerivedConstants, t_grid=None) -> DoublingReport:
    """Pointwise check of ``0 < G(2t)-G(t) <= M G(t)`` and ``0 < G(2t)^2-G(t)^2 <= K G(t)^2``."""
    T = constants.T
    if t_grid is None:
        t_grid = _geomspace(T * 1e-8, T * (1 - 1e-9), 256)
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or np.any(t <= 0) or np.any(t >= T):
        raise DomainError("t-grid must be a nonempty subset of (0, T)")
    g1, g2 = g_f(profile, t), g_f(profile, 2 * t)
    gap = g2 - g1
    sq = g2 ** 2 - g1 ** 2
    viol = []
    tol = 1e-12
    for i in range(t.size):
        if not gap[i] > 0:
            viol.append((float(t[i]), "G(2t) > G(t)"))
        if gap[i] > constants.M * g1[i] * (1 + tol):
            viol.append((float(t[i]), "prelim"))
        if sq[i] > constants.K * g1[i] ** 2 * (1 + tol):
            viol.append((float(t[i]), "compare"))
    return DoublingReport(
        passed=not viol, K=constants.K, M=constants.M,
        empirical_K=float(np.max(sq / g1 ** 2)), empirical_M=float(np.max(gap / g1)),
        min_gap=float(np.min(gap / g1)), n_points=int(t.size), violations=tuple(viol))


@dataclass(frozen=True)
class RatioFactReport:
    passed: bool
    sandwich_margin: float
    ratio_worst: dict
    violations: tuple = ()


def check_ratio_fact(profile: RadialProfile, witness: FlatnessWitness, constants: DerivedConstants,
                     factors=None, n: int = 256) -> RatioFactReport:
    """``kappa_1 <= G_f <= kappa_2`` on ``(0, T1]`` and ``kappa_0(b t)/kappa_0(t) <= b**p`` for ``b > 1``."""
    B, p = witness.B, witness.p
    if factors is None:
        factors = sorted({2.0, 2.0 * B * B} | ({B} if B > 1 else set()))
    viol = []
    T1 = constants.T1
    t = _geomspace(T1 * 1e-8, T1, n)
    G = g_f(profile, t)
    k1 = witness.kappa0(t / B)
    k2 = witness.kappa0(np.minimum(B * t, float(witness.chi(witness.eps0))))
    tol = 1e-10
    sand = np.minimum((G - k1 * (1 - tol)) / G, (k2 * (1 + tol) - G) / G)
    if np.any(sand < 0):
        viol.append(("sandwich", float(t[np.argmin(sand)])))
    worst = {}
    top = float(witness.chi(witness.eps0))
    for b in factors:
        if not b > 1:
            continue
        tt = _geomspace(top / b * 1e-8, top / b * (1 - 1e-12), n)
        ratio = witness.kappa0(b * tt) / witness.kappa0(tt)
        worst[float(b)] = float(np.max(ratio))
        if np.any(ratio > b ** p * (1 + tol)):
            viol.append(("ratio", float(b)))
    return RatioFactReport(passed=not viol, sandwich_margin=float(np.min(sand)),
                           ratio_worst=worst, violations=tuple(viol))
