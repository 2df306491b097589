"""Numerical diagonal Bergman kernel of ``{Im w > f(|z|)}``.

Fourier transform in ``Re w`` reduces the kernel to a Laplace transform of
weighted kernels on the plane::

    K(z, it) = (1/pi) * int_0^inf tau * K_tau(|z|) * exp(-2 tau t) dtau,
    K_tau(r) = sum_n r^(2n) / c_n(tau),
    c_n(tau) = 2 pi * int_0^inf r^(2n+1) * exp(-2 tau f(r)) dr.

Everything is carried in logarithms.  Radial integrals run over ``s = log r``
and the ``tau`` integral over ``sigma = log tau``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnconvergedError
from .profile import RadialProfile
from .quadrature import log_quad, logsumexp

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
LOG_PI = math.log(math.pi)
N_CAP = 20000
PANEL_CAP = 4096
CHUNK = 32
# 8 * int_R (1+X^2)^-2 dX * 2 pi: the angular factor of dA(z) included.
PHI_CONSTANT = 8.0 * math.pi ** 2
_SCAN = np.arange(-40.0, 12.0, 0.25)


# -- moments ------------------------------------------------------------------


def _log_moments_batch(profile: RadialProfile, taus, ns, rtol: float):
    """``log c_n(tau)`` for rows ``taus`` (shape ``(R,)``) and indices ``ns`` (shape ``(R, C)``).

    Each row is integrated over ``s = log r`` shifted by the location of its
    chunk's peak, so that all rows share one adaptive panel set.  Returns
    ``(log_c, rel_err, n_panels)`` with the first two of shape ``(R, C)``.
    """
    taus = np.asarray(taus, dtype=float)
    ns = np.asarray(ns)
    if np.any(~(taus > 0)):
        raise DomainError("tau must be positive")
    R, C = ns.shape
    coef = (2.0 * ns + 2.0)[:, :, None]
    two_tau = (2.0 * taus)[:, None, None]

    def raw(s):
        with np.errstate(over="ignore", under="ignore"):
            f = np.exp(profile.logf(np.exp(s)))
        return LOG_2PI + coef * s[:, None, :] - two_tau * f[:, None, :]

    s_b = np.asarray(profile.log_inv(-np.log(2.0 * taus)), dtype=float).reshape(R)
    scan = s_b[:, None] + _SCAN[None, :]
    vals = raw(scan)
    j_pk = np.argmax(vals[:, C // 2, :], axis=1)
    shift = scan[np.arange(R), j_pk]
    peak = np.max(vals, axis=2, keepdims=True)
    live = np.any(vals > peak - 50.0, axis=1)
    first = np.argmax(live, axis=1)
    last = live.shape[1] - 1 - np.argmax(live[:, ::-1], axis=1)
    rows = np.arange(R)
    a = float(np.min(scan[rows, np.maximum(first - 1, 0)] - shift))
    b = float(np.max(scan[rows, np.minimum(last + 1, len(_SCAN) - 1)] - shift))
    a, b = min(a, -0.5), max(b, 0.5)

    def g(y):
        return raw(shift[:, None] + np.asarray(y, dtype=float)[None, :]).reshape(R * C, -1)

    # Unit-width starting panels save refinement rounds.
    res = log_quad(g, a, b, rtol, breakpoints=np.arange(math.ceil(a), b, 1.0),
                   extend_left=True, extend_right=True, step=1.0,
                   max_panels=PANEL_CAP, rows=R * C)
    return (np.asarray(res.log_value).reshape(R, C), np.asarray(res.rel_err).reshape(R, C),
            res.n_panels)


def moment(profile: RadialProfile, n: int, tau: float, tol: float = 1e-10) -> float:
    """``log c_n(tau)``."""
    if int(n) != n or n < 0:
        raise DomainError("n must be a nonnegative integer")
    lv, _, _ = _log_moments_batch(profile, [float(tau)], [[int(n)]], tol)
    return float(lv[0, 0])


@dataclass(frozen=True)
class MomentTable:
    """``log c_n(tau)`` for ``n = 0..n_max``."""

    tau: float
    log_c: np.ndarray
    n_max: int
    quad_err: float

    def convexity_defects(self, slack: float = 0.0) -> np.ndarray:
        """Indices ``n`` where ``2 log c_n > log c_{n-1} + log c_{n+1} + slack``."""
        lc = self.log_c
        d2 = lc[:-2] + lc[2:] - 2.0 * lc[1:-1]
        return np.nonzero(d2 < -slack)[0] + 1


def moment_table(profile: RadialProfile, tau: float, n_max: int, tol: float = 1e-10) -> MomentTable:
    n_rows = n_max // CHUNK + 1
    ns = np.arange(n_rows * CHUNK).reshape(n_rows, CHUNK)
    lv, re, _ = _log_moments_batch(profile, np.full(n_rows, float(tau)), ns, tol)
    return MomentTable(float(tau), lv.ravel()[:n_max + 1], int(n_max),
                       float(np.max(re.ravel()[:n_max + 1])))


# -- weighted kernel on the plane -------------------------------------------


@dataclass(frozen=True)
class _KTau:
    log_value: np.ndarray
    n_used: np.ndarray
    quad_err: np.ndarray
    trunc_err: np.ndarray


def _peak_index(profile: RadialProfile, abs_z: float, taus) -> np.ndarray:
    """Index of the largest series term, roughly: ``2n + 2 = 2 tau r f'(r)`` at ``r = |z|``."""
    h = 1e-5
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        lf = profile.logf(np.array([abs_z * math.exp(-h), abs_z, abs_z * math.exp(h)]))
        slope = (lf[2] - lf[0]) / (2 * h)
        est = np.asarray(taus) * math.exp(lf[1]) * slope - 1.0
    est = np.where(np.isfinite(est), est, 0.0)
    return np.clip(est, 0, N_CAP).astype(int)


def _geometric_bounds(terms, at_zero):
    """Log bounds on the omitted head and tail of a log-concave series."""
    lq = terms[1] - terms[0]
    if at_zero:
        head = -math.inf
    else:
        head = terms[0] - math.log(math.expm1(lq)) if lq > 0 else math.inf
    lq = terms[-1] - terms[-2]
    tail = terms[-1] + lq - math.log(-math.expm1(lq)) if lq < 0 else math.inf
    return head, tail


def _k_tau_batch(profile: RadialProfile, abs_z: float, taus, tol: float,
                 n_cap: int = N_CAP) -> _KTau:
    """``log K_tau(|z|)`` for every ``tau`` in ``taus``.

    The terms ``|z|^(2n) / c_n`` are log-concave in ``n`` (the moments are
    log-convex), so their ratio is nonincreasing: each series starts near its
    largest term and grows in chunks until the geometric bounds on the omitted
    head and tail are both below ``tol / 2`` of the partial sum.
    """
    taus = np.asarray(taus, dtype=float)
    R = len(taus)
    if abs_z == 0.0:
        lv, re, _ = _log_moments_batch(profile, taus, np.zeros((R, 1), dtype=int), tol)
        return _KTau(-lv[:, 0], np.ones(R, dtype=int), re[:, 0], np.zeros(R))
    lz2 = 2.0 * math.log(abs_z)
    lo = np.maximum(0, _peak_index(profile, abs_z, taus) - CHUNK // 2)
    hi = lo.copy()
    terms = [np.empty(0) for _ in range(R)]
    qerr = np.zeros(R)
    # first request: one chunk above lo for every row
    requests = [(i, int(lo[i]), "up") for i in range(R)]
    log_tol = math.log(tol / 2.0)
    out = np.empty(R)
    trunc = np.zeros(R)
    done = np.zeros(R, dtype=bool)
    while requests:
        starts = np.array([st for _, st, _ in requests])
        idx = np.array([i for i, _, _ in requests])
        ns = starts[:, None] + np.arange(CHUNK)[None, :]
        lv, re, _ = _log_moments_batch(profile, taus[idx], ns, tol)
        for k, (i, st, side) in enumerate(requests):
            qerr[i] = max(qerr[i], float(np.max(re[k])))
            tk = ns[k] * lz2 - lv[k]
            if side == "up":
                terms[i] = np.concatenate([terms[i], tk])
                hi[i] = st + CHUNK
            else:
                keep = ns[k] < lo[i]
                terms[i] = np.concatenate([tk[keep], terms[i]])
                lo[i] = st
        requests = []
        for i in np.unique(idx):
            tm = terms[i]
            total = logsumexp(tm)
            head, tail = _geometric_bounds(tm, lo[i] == 0)
            head_ok = head - total <= log_tol
            tail_ok = tail - total <= log_tol
            if head_ok and tail_ok:
                omit = float(np.logaddexp(head, tail))
                out[i] = float(np.logaddexp(total, omit))
                trunc[i] = math.exp(omit - total)
                done[i] = True
                continue
            if not tail_ok:
                if hi[i] >= n_cap:
                    raise UnconvergedError("series cap reached",
                                           {"n_cap": n_cap, "tau": float(taus[i]), "abs_z": abs_z})
                requests.append((int(i), int(hi[i]), "up"))
            if not head_ok:
                requests.append((int(i), int(max(0, lo[i] - CHUNK)), "down"))
    assert done.all()
    return _KTau(out, hi, qerr, trunc)


def k_tau_diag(profile: RadialProfile, abs_z: float, tau: float, tol: float = 1e-10) -> float:
    """``log K_tau(z, z)`` for the weight ``exp(-2 tau f(|z|))`` on the plane."""
    if abs_z < 0 or not tau > 0:
        raise DomainError("need |z| >= 0 and tau > 0")
    return float(_k_tau_batch(profile, float(abs_z), [float(tau)], tol).log_value[0])


# -- the kernel ---------------------------------------------------------------


@dataclass(frozen=True)
class KernelEvaluation:
    value_log: float
    rel_err: float
    n_max_used: int
    tau_nodes_used: int
    t: float
    abs_z: float
    precision: str = "double"
    warnings: tuple = field(default_factory=tuple)

    @property
    def value(self) -> float:
        return math.exp(self.value_log)

    @property
    def log10(self) -> float:
        return self.value_log / math.log(10.0)

    def to_dict(self):
        return {"t": self.t, "abs_z": self.abs_z, "value_log": self.value_log,
                "log10_K": self.log10, "rel_err": self.rel_err,
                "n_max_used": self.n_max_used, "tau_nodes_used": self.tau_nodes_used,
                "precision": self.precision, "warnings": list(self.warnings)}


def _check_point(profile: RadialProfile, abs_z: float, t: float):
    if not (t > 0 and math.isfinite(t)):
        raise DomainError("t must be positive and finite")
    lf = float(profile.logf(abs_z))
    margin = math.log(t) - lf
    if not margin > 0:
        raise DomainError(f"(|z|={abs_z:g}, t={t:g}) is not inside the domain")
    warn = ()
    if margin < 1e-3:
        warn = (f"ill-conditioned: log t - log f(|z|) = {margin:.3g}",)
    return warn


def kernel_diag(profile: RadialProfile, z, t: float, tol: float = 1e-8,
                precision: str = "double", dps: int = 50) -> KernelEvaluation:
    """``K(z, it)``; the kernel does not depend on ``Re w`` and only on ``|z|``."""
    abs_z = abs(complex(z))
    t = float(t)
    warn = _check_point(profile, abs_z, t)
    if precision == "high":
        from .highprec import kernel_diag_mp

        return kernel_diag_mp(profile, abs_z, t, tol, dps, warn)
    if precision != "double":
        raise DomainError(f"unknown precision {precision!r}")

    inner_tol = tol / 10.0
    stats = {"n": 0, "q": 0.0, "tr": 0.0, "nodes": 0}

    def integrand(sig):
        sig = np.asarray(sig, dtype=float)
        taus = np.exp(sig)
        kt = _k_tau_batch(profile, abs_z, taus, inner_tol)
        stats["n"] = max(stats["n"], int(np.max(kt.n_used)))
        stats["q"] = max(stats["q"], float(np.max(kt.quad_err)))
        stats["tr"] = max(stats["tr"], float(np.max(kt.trunc_err)))
        stats["nodes"] += len(sig)
        return -LOG_PI + 2.0 * sig + kt.log_value - 2.0 * taus * t

    s_star = -math.log(t)
    try:
        res = log_quad(integrand, s_star - 14.0, s_star + 5.0, tol / 2.0,
                       breakpoints=(s_star - 4.0, s_star, s_star + 2.0),
                       extend_left=True, extend_right=True, step=2.0,
                       max_panels=PANEL_CAP, rows=0)
    except UnconvergedError as exc:
        exc.diagnostics.update({"t": t, "abs_z": abs_z})
        raise
    rel = res.rel_err + stats["q"] + stats["tr"]
    ev = KernelEvaluation(float(res.log_value), float(rel), stats["n"], stats["nodes"],
                          t, abs_z, "double", warn)
    if not math.isfinite(ev.value_log):
        raise UnconvergedError("non-finite kernel value", ev.to_dict())
    if rel > tol:
        raise UnconvergedError("kernel error estimate above tolerance", ev.to_dict())
    return ev


# -- test-function norm -------------------------------------------------------


def _u_integral_log(U, b):
    """``log int_{-U}^{U} du / (u^2 + b^2)^2``."""
    with np.errstate(divide="ignore"):
        val = U / (b * b * (U * U + b * b)) + np.arctan2(U, b) / b ** 3
        return np.log(val)


@dataclass(frozen=True)
class PhiNorm:
    """Norm of ``phi_t = -4 t^2 / (w + it)^2`` on the domain cut by ``D(0;A) x D(0;1)``.

    ``split`` holds the three pieces of the majorant over ``[0, R_t]``,
    ``[R_t, R_sqrt(t)]`` and ``[R_sqrt(t), A]``; ``chain`` the successive
    upper bounds derived from it.
    """

    t: float
    C: float
    exact: float
    majorant: float
    split: tuple
    coarse_bound: float
    final_bound: float
    rel_err: float

    def violations(self, slack: float = 0.0):
        out = []
        if self.exact > self.majorant * (1 + slack):
            out.append("exact > majorant")
        if self.majorant > self.coarse_bound * (1 + slack):
            out.append("majorant > three-term bound")
        if self.coarse_bound > self.final_bound * (1 + slack):
            out.append("three-term bound > C(1+K/4) t^2 R_t^2")
        return out

    def to_dict(self):
        return {"t": self.t, "C": self.C, "exact": self.exact, "majorant": self.majorant,
                "split": list(self.split), "coarse_bound": self.coarse_bound,
                "final_bound": self.final_bound, "rel_err": self.rel_err}


def _exact_phi_log(profile: RadialProfile, t: float, A: float, tol: float, breaks):
    """``log`` of the exact squared norm, integrating ``u`` in closed form."""
    half_log = math.log(0.5 + t)

    def inner(r):
        # v in [f(r), 1]: log(v + t) up to v = 1/2, then v = cos(theta).
        r = np.asarray(r, dtype=float)
        with np.errstate(under="ignore"):
            f = np.exp(profile.logf(r))
        m = len(r)
        lo = np.log(f + t)
        hi = np.maximum(lo, half_log)
        th_max = np.arccos(np.clip(np.maximum(f, 0.5), -1.0, 1.0))

        def g1(x):
            lb = lo[:, None] + x[None, :] * (hi - lo)[:, None]
            b = np.exp(lb)
            v = b - t
            U = np.sqrt(np.clip(1.0 - v * v, 0.0, None))
            return _u_integral_log(U, b) + lb + np.log(np.maximum(hi - lo, 1e-300))[:, None]

        def g2(y):
            th = y[None, :] * th_max[:, None]
            v = np.cos(th)
            U = np.sin(th)
            return (_u_integral_log(U, v + t) + np.log(np.maximum(U, 1e-300))
                    + np.log(np.maximum(th_max, 1e-300))[:, None])

        p1 = log_quad(g1, 0.0, 1.0, tol / 10, rows=m, max_panels=PANEL_CAP)
        p2 = log_quad(g2, 0.0, 1.0, tol / 10, rows=m, max_panels=PANEL_CAP)
        l1 = np.where(hi > lo, p1.log_value, -np.inf)
        l2 = np.where(th_max > 0, p2.log_value, -np.inf)
        stats.append(max(float(np.max(p1.rel_err)), float(np.max(p2.rel_err))))
        return np.logaddexp(l1, l2)

    stats = []

    def outer(x):
        r = np.exp(x)
        return LOG_2PI + 4.0 * math.log(4.0 * t * t) / 2.0 + 2.0 * x + inner(r)

    la = math.log(A)
    res = log_quad(outer, la - 30.0, la, tol / 2,
                   breakpoints=[b for b in breaks if la - 30.0 < b < la],
                   extend_left=True, step=5.0, max_panels=PANEL_CAP, rows=0)
    return float(res.log_value), float(res.rel_err) + max(stats)


def _majorant_piece_log(profile: RadialProfile, t: float, lo: float, hi: float, tol: float):
    def g(x):
        with np.errstate(under="ignore"):
            f = np.exp(profile.logf(np.exp(x)))
        return 2.0 * x - 2.0 * np.log(t + f)

    if hi <= lo:
        return -math.inf, 0.0
    if lo == 0.0:
        res = log_quad(g, math.log(hi) - 30.0, math.log(hi), tol, extend_left=True, step=5.0,
                       max_panels=PANEL_CAP, rows=0)
    else:
        res = log_quad(g, math.log(lo), math.log(hi), tol, max_panels=PANEL_CAP, rows=0)
    return float(res.log_value), float(res.rel_err)


def phi_norm_sq(profile: RadialProfile, t: float, tol: float = 1e-9, *, constants,
                log_H0: float | None = None, C: float = PHI_CONSTANT) -> PhiNorm:
    """Exact norm of the test function, its majorant and the bound chain.

    ``constants`` supplies ``A`` and the doubling constant ``K``.  ``C`` scales
    the majorant and every bound after it; the value that makes the first
    inequality hold is ``8 pi^2``.
    """
    if not 0 < t < 1:
        raise DomainError("need 0 < t < 1")
    if log_H0 is not None and not math.log(t) < log_H0:
        raise DomainError(f"t={t:g} is not below H0={math.exp(log_H0):g}")
    A = constants.A
    R_t = float(profile.inv(math.log(t)))
    R_s = float(profile.inv(0.5 * math.log(t)))
    if R_s > A:
        raise DomainError("R_sqrt(t) exceeds A; t is too large")

    log_exact, err_e = _exact_phi_log(profile, t, A, tol, [math.log(R_t), math.log(R_s)])
    pieces, errs = [], []
    for lo, hi in ((0.0, R_t), (R_t, R_s), (R_s, A)):
        lv, er = _majorant_piece_log(profile, t, lo, hi, tol)
        pieces.append(C * t ** 4 * math.exp(lv))
        errs.append(er)
    majorant = math.fsum(pieces)
    coarse = (C / 2 * t * t * R_t ** 2 + C / 4 * t ** 2.5 * A * (A - R_s)
              + C / 8 * t * t * (R_s ** 2 - R_t ** 2))
    final = C * (1 + constants.K / 4) * t * t * R_t ** 2
    return PhiNorm(t, C, math.exp(log_exact), majorant, tuple(pieces), coarse, final,
                   err_e + max(errs))
