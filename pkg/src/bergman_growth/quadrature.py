"""Adaptive Gauss-Kronrod (G7/K15) quadrature carried out in log space.

The integrands handled here routinely span thousands of orders of magnitude
(weights like ``exp(-2*tau*f(r))`` with ``f`` vanishing to infinite order), so
every routine receives and returns *logarithms*.  Integrands may be
vector valued: ``log_integrand(x)`` maps nodes of shape ``(k,)`` to an array of
shape ``(m, k)`` and all ``m`` rows share the same panel subdivision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnconvergedError

# QUADPACK qk15 abscissae / weights (positive half, centre last).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes: xgk[1], xgk[3], xgk[5], xgk[7].
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[[9, 11, 13]] = _WG[2::-1]
GAUSS_WEIGHTS[7] = _WG[3]

_NEG_INF = -np.inf


def logsumexp(a, axis=None):
    """Stable ``log(sum(exp(a)))`` that tolerates all ``-inf`` slices.

    Summation of the shifted exponentials uses ``math.fsum`` per slice when
    ``axis is None`` (compensated); along an axis numpy's pairwise sum is used.
    """
    a = np.asarray(a, dtype=float)
    if axis is None:
        if a.size == 0:
            return _NEG_INF
        mx = np.max(a)
        if not np.isfinite(mx):
            return float(mx)
        return float(mx + math.log(math.fsum(np.exp(a - mx).ravel())))
    mx = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - safe), axis=axis, keepdims=True)) + safe
    out = np.where(np.isfinite(mx), out, mx)
    return np.squeeze(out, axis=axis)


@dataclass(frozen=True)
class LogQuadResult:
    """Outcome of :func:`log_quad`.

    ``log_value`` and ``rel_err`` have shape ``(m,)`` for vector integrands and
    are scalars otherwise.
    """

    log_value: np.ndarray | float
    rel_err: np.ndarray | float
    n_panels: int
    interval: tuple[float, float]


def _eval_panels(log_integrand, los, his, m_shape):
    """Evaluate several panels with one integrand call; returns per-panel logs."""
    los = np.asarray(los, dtype=float)
    his = np.asarray(his, dtype=float)
    half = 0.5 * (his - los)
    mid = 0.5 * (los + his)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        lg = np.asarray(log_integrand(x), dtype=float)
    lg = lg.reshape(m_shape + (len(los), 15))
    lg = np.where(np.isnan(lg), _NEG_INF, lg)
    mx = np.max(lg, axis=-1)
    fin = np.isfinite(mx)
    safe = np.where(fin, mx, 0.0)
    vals = np.exp(lg - safe[..., None])
    k = vals @ KRONROD_WEIGHTS
    g = vals @ GAUSS_WEIGHTS
    log_half = np.log(half)
    with np.errstate(divide="ignore"):
        log_k = np.where(fin, np.log(k) + safe + log_half, _NEG_INF)
        err = np.abs(k - g)
        # Round-off floor: a panel can never be trusted below a few ulps.
        err = np.maximum(err, 8.0 * np.finfo(float).eps * k)
        log_e = np.where(fin, np.log(err) + safe + log_half, _NEG_INF)
    # panel axis first: (P,) + m_shape
    return np.moveaxis(log_k, -1, 0), np.moveaxis(log_e, -1, 0)


def log_quad(
    log_integrand,
    a: float,
    b: float,
    rtol: float = 1e-10,
    *,
    breakpoints=(),
    extend_left: bool = False,
    extend_right: bool = False,
    step: float | None = None,
    max_panels: int = 4096,
    max_extensions: int = 200,
    rows: int | None = None,
) -> LogQuadResult:
    """Integrate ``exp(log_integrand(x))`` over ``[a, b]`` to relative tolerance.

    With ``extend_left``/``extend_right`` the interval grows by ``step`` until the
    integrand at the moving endpoint is negligible (below ``rtol * 1e-3`` of the
    running total per unit length) for every row.

    Pass ``rows`` (the row count ``m``, or 0 for a scalar integrand) to skip
    the shape probe when integrand calls are expensive.

    Raises :class:`UnconvergedError` when more than ``max_panels`` panels would
    be needed.
    """
    if not (np.isfinite(a) and np.isfinite(b)) or not b > a:
        raise ValueError(f"invalid interval [{a}, {b}]")
    if rows is None:
        probe = np.asarray(log_integrand(np.array([0.5 * (a + b)])), dtype=float)
        m_shape = probe.shape[:-1] if probe.ndim > 1 else ()
    else:
        m_shape = (rows,) if rows else ()
    scalar = m_shape == ()
    step = float(step) if step is not None else (b - a)

    cuts = sorted({a, b, *[float(p) for p in breakpoints if a < p < b]})
    counter = 0
    store = {}

    def add(pairs):
        nonlocal counter
        log_k, log_e = _eval_panels(log_integrand, [p[0] for p in pairs], [p[1] for p in pairs], m_shape)
        for (lo, hi), lk_, le_ in zip(pairs, log_k, log_e):
            store[counter] = (lo, hi, lk_, le_)
            counter += 1

    add(list(zip(cuts[:-1], cuts[1:])))

    lo_end, hi_end = a, b
    n_ext = 0
    log_tol = math.log(rtol)
    while True:
        # Refinement loop.
        while True:
            keys = list(store)
            lk = np.stack([store[k][2] for k in keys])
            le = np.stack([store[k][3] for k in keys])
            total = logsumexp(lk, axis=0)
            tot_safe = np.where(np.isfinite(total), total, 0.0)
            rel = np.exp(le - tot_safe)
            rel = np.where(np.isfinite(total), rel, 0.0)
            err_rows = np.sum(rel, axis=0)
            if np.all(err_rows <= rtol):
                break
            if len(store) >= max_panels:
                raise UnconvergedError(
                    "panel cap reached",
                    {"n_panels": len(store), "rel_err": float(np.max(err_rows)),
                     "interval": (lo_end, hi_end)},
                )
            scores = rel.reshape(len(keys), -1).max(axis=1)
            budget = rtol / len(keys)
            worst = np.argsort(scores)[::-1]
            chosen = [keys[i] for i in worst if scores[i] > budget][:max(1, len(keys) // 2)]
            if not chosen:
                chosen = [keys[worst[0]]]
            pairs = []
            for key in chosen:
                lo, hi, _, _ = store.pop(key)
                mid = 0.5 * (lo + hi)
                pairs += [(lo, mid), (mid, hi)]
            add(pairs)

        if not (extend_left or extend_right) or n_ext >= max_extensions:
            break
        grew = False
        for side, flag in (("left", extend_left), ("right", extend_right)):
            if not flag:
                continue
            x_end = lo_end if side == "left" else hi_end
            with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
                val = np.asarray(log_integrand(np.array([x_end])), dtype=float).reshape(m_shape + (1,))[..., 0]
            val = np.where(np.isnan(val), _NEG_INF, val)
            tot_fin = np.where(np.isfinite(total), total, _NEG_INF)
            # Endpoint density relative to total, times a unit length scale.
            excess = val - tot_fin + math.log(max(step, 1.0))
            if np.any((excess > log_tol - math.log(1e3)) & np.isfinite(val)):
                if side == "left":
                    add([(lo_end - step, lo_end)])
                    lo_end -= step
                else:
                    add([(hi_end, hi_end + step)])
                    hi_end += step
                grew = True
        n_ext += 1
        if not grew:
            break
        if n_ext >= max_extensions:
            raise UnconvergedError(
                "interval extension cap reached", {"interval": (lo_end, hi_end)})

    keys = list(store)
    lk = np.stack([store[k][2] for k in keys])
    le = np.stack([store[k][3] for k in keys])
    total = logsumexp(lk, axis=0)
    err = logsumexp(le, axis=0)
    with np.errstate(invalid="ignore"):
        rel = np.where(np.isfinite(total), np.exp(err - np.where(np.isfinite(total), total, 0.0)), 0.0)
    if scalar:
        total = float(np.asarray(total).reshape(-1)[0])
        rel = float(np.asarray(rel).reshape(-1)[0])
    return LogQuadResult(total, rel, len(store), (lo_end, hi_end))
