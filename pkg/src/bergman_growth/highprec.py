"""Arbitrary-precision evaluation of the diagonal kernel (``mpmath``).

Same integral representation as :mod:`.kernel`, but every integrand value,
moment and partial sum is carried as an ``mpf`` at ``dps`` digits, and the
quadratures are ``mpmath`` Gauss-Legendre rules.  Only the choice of
integration windows reuses double-precision scans.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np

from .errors import UnconvergedError
from mpmath.calculus.quadrature import GaussLegendre
from .kernel import CHUNK, N_CAP, KernelEvaluation, _SCAN
from .profile import RadialProfile

_PANEL = 4.0  # starting panel width in log r and log tau
_NODE_CACHE = {}


def _gl_nodes(degree):
    key = (degree, mp.mp.prec)
    if key not in _NODE_CACHE:
        _NODE_CACHE[key] = GaussLegendre(mp.mp).calc_nodes(degree, mp.mp.prec)
    return _NODE_CACHE[key]


def _panel(fn, a, b):
    """12- and 24-point Gauss-Legendre values on ``[a, b]``; the gap is the error estimate."""
    h = (b - a) / 2
    c = (a + b) / 2
    lo = mp.fsum(w * fn(c + h * x) for x, w in _gl_nodes(3)) * h
    hi = mp.fsum(w * fn(c + h * x) for x, w in _gl_nodes(4)) * h
    return hi, abs(hi - lo)


def adaptive_gl(fn, a, b, rtol, width=_PANEL, max_panels=2048):
    """Adaptive bisection with Gauss-Legendre panels in the working precision.

    ``fn`` must be nonnegative.  Returns ``(value, absolute error estimate)``.
    """
    a, b = mp.mpf(a), mp.mpf(b)
    k = max(1, int(math.ceil(float(b - a) / width)))
    cuts = mp.linspace(a, b, k + 1)
    panels = [(lo, hi) + _panel(fn, lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:])]
    while True:
        total = mp.fsum(p[2] for p in panels)
        err = mp.fsum(p[3] for p in panels)
        if err <= rtol * total:
            return total, err
        if len(panels) >= max_panels:
            raise UnconvergedError("high-precision panel cap reached",
                                   {"rel_err": float(err / total) if total else float("inf")})
        budget = rtol * total / len(panels)
        keep, split = [], []
        for p in panels:
            (split if p[3] > budget else keep).append(p)
        for lo, hi, _, _ in split:
            mid = (lo + hi) / 2
            keep.append((lo, mid) + _panel(fn, lo, mid))
            keep.append((mid, hi) + _panel(fn, mid, hi))
        panels = keep


def _window(profile: RadialProfile, tau: float, n: int):
    """Double-precision scan for the window holding the mass of ``r^(2n+1) e^{-2 tau f}``."""
    s_b = float(profile.log_inv(-math.log(2.0 * tau)))
    s = s_b + _SCAN
    with np.errstate(over="ignore", under="ignore"):
        f = np.exp(profile.logf(np.exp(s)))
    v = (2 * n + 2) * s - 2 * tau * f
    live = np.nonzero(v > np.max(v) - 60.0)[0]
    a = s[max(live[0] - 2, 0)]
    b = s[min(live[-1] + 2, len(s) - 1)]
    return a, b


def log_moment_mp(profile: RadialProfile, n: int, tau, rtol=1e-12):
    """``(log c_n(tau), relative error)`` as ``mpf``."""
    tau = mp.mpf(tau)
    a, b = _window(profile, float(tau), n)
    c = 2 * n + 2
    # below s_cut, f < exp(-1e4) is invisible next to 2 tau f for any tau in use
    s_cut = float(profile.log_inv(-1e4))

    def g(s):
        if s < s_cut:
            return c * s
        return c * s - 2 * tau * mp.exp(profile.logf_mp(mp.exp(s)))

    # Integrate exp(g - shift) to keep the values near one.
    shift = max(g(mp.mpf(float(x))) for x in np.linspace(a, b, 65))
    val, err = adaptive_gl(lambda s: mp.exp(g(s) - shift), a, b, rtol)
    return mp.log(2 * mp.pi) + shift + mp.log(val), err / val


def log_k_tau_mp(profile: RadialProfile, abs_z, tau, tol):
    """``(log K_tau(|z|), n_used, error)`` with the same head/tail control as the double path."""
    if abs_z == 0:
        lc, er = log_moment_mp(profile, 0, tau, tol)
        return -lc, 1, er
    lz2 = 2 * mp.log(mp.mpf(abs_z))
    from .kernel import _peak_index

    lo = max(0, int(_peak_index(profile, float(abs_z), [float(tau)])[0]) - CHUNK // 2)
    terms = {}
    qerr = mp.mpf(0)

    def term(n):
        nonlocal qerr
        if n not in terms:
            lc, er = log_moment_mp(profile, n, tau, tol)
            qerr = max(qerr, er)
            terms[n] = n * lz2 - lc
        return terms[n]

    hi = lo + 2
    term(lo)
    term(lo + 1)
    log_tol = mp.log(mp.mpf(tol) / 2)
    while True:
        vals = [terms[k] for k in range(lo, hi)]
        total = mp.log(mp.fsum(mp.exp(v - vals[0]) for v in vals)) + vals[0]
        lq = vals[-1] - vals[-2]
        tail = vals[-1] + lq - mp.log(-mp.expm1(lq)) if lq < 0 else mp.inf
        if lo == 0:
            head = mp.ninf
        else:
            lqh = vals[1] - vals[0]
            head = vals[0] - mp.log(mp.expm1(lqh)) if lqh > 0 else mp.inf
        ok_t = tail - total <= log_tol
        ok_h = head - total <= log_tol
        if ok_t and ok_h:
            omit = mp.log(mp.exp(head - total) + mp.exp(tail - total))
            return total + mp.log1p(mp.exp(omit)), hi, qerr + mp.exp(omit)
        if not ok_t:
            if hi >= N_CAP:
                raise UnconvergedError("series cap reached", {"tau": float(tau), "abs_z": float(abs_z)})
            term(hi)
            hi += 1
        if not ok_h:
            lo -= 1
            term(lo)


def _outer_window(profile, abs_z, t, tol):
    """``log tau`` window from a double-precision pass: where the integrand exceeds 1e-30 of its peak.

    The scan marches upward in chunks and stops once the integrand has fallen
    below the cut, so off-axis points never request very long series.
    """
    from .kernel import LOG_PI, _k_tau_batch

    s_star = -math.log(t)
    cut = math.log(1e30)
    step, chunk = 0.25, 8
    sig = np.arange(s_star - 40.0, s_star + 12.0, step)
    vals = []
    for k in range(0, len(sig), chunk):
        part = sig[k:k + chunk]
        lk = _k_tau_batch(profile, abs_z, np.exp(part), 1e-6).log_value
        vals.extend(-LOG_PI + 2 * part + lk - 2 * np.exp(part) * t)
        v = np.asarray(vals)
        peak = int(np.argmax(v))
        if peak < len(v) - 1 and v[-1] < v[peak] - cut:
            break
    v = np.asarray(vals)
    live = np.nonzero(v > np.max(v) - cut)[0]
    if live[0] == 0 or live[-1] == len(v) - 1:
        raise UnconvergedError("outer window reaches the scan edge", {"t": t, "abs_z": abs_z})
    return float(sig[live[0] - 1]), float(sig[live[-1] + 1])


def kernel_diag_mp(profile: RadialProfile, abs_z: float, t: float, tol: float,
                   dps: int = 50, warnings=()) -> KernelEvaluation:
    """High-precision counterpart of :func:`.kernel.kernel_diag`."""
    if dps < 50:
        raise ValueError("high-precision mode needs at least 50 digits")
    with mp.workdps(dps):
        tm = mp.mpf(t)
        stats = {"n": 0, "err": mp.mpf(0), "nodes": 0}

        def log_integrand(sig):
            tau = mp.exp(sig)
            lk, n_used, er = log_k_tau_mp(profile, abs_z, tau, tol / 10)
            stats["n"] = max(stats["n"], n_used)
            stats["err"] = max(stats["err"], er)
            stats["nodes"] += 1
            return -mp.log(mp.pi) + 2 * sig + lk - 2 * tau * tm

        a, b = _outer_window(profile, abs_z, t, tol)
        ref = log_integrand(mp.mpf((a + b) / 2))
        fn = lambda s: mp.exp(log_integrand(s) - ref)  # noqa: E731
        val, err = adaptive_gl(fn, a, b, mp.mpf(tol) / 2)
        # the window is cut where the double-precision integrand is 1e-30 of its peak
        rel = err / val + stats["err"]
        value_log = ref + mp.log(val)
        ev = KernelEvaluation(float(value_log), float(rel), int(stats["n"]), int(stats["nodes"]),
                              float(t), float(abs_z), "high", tuple(warnings))
    if ev.rel_err > tol:
        raise UnconvergedError("kernel error estimate above tolerance", ev.to_dict())
    return ev
