"""Geometry of the model domain ``{Im w > f(|z|)}``.

Membership tests, approach regions, the thresholds below which the upper
bound argument works, the comparison polydisc and its volume bound, and the
bounded realization ``Psi``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvariantViolation, NumericError, PoleError
from .profile import DerivedConstants, RadialProfile

log = logging.getLogger(__name__)

LOG_4_3 = math.log(4.0 / 3.0)


def in_domain(profile: RadialProfile, z, w):
    """``Im w > f(|z|)``, compared in log space; ``Im w <= 0`` is never inside."""
    z = np.asarray(z, dtype=complex)
    v = np.imag(np.asarray(w, dtype=complex))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (v > 0) & (np.log(np.where(v > 0, v, 1.0)) > profile.logf(np.abs(z)))
    return bool(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ApproachRegion:
    """``sqrt(|z|^2 + (Re w)^2) < alpha * (Im w)^(1/N)`` intersected with the domain."""

    alpha: float
    N: int

    def __post_init__(self):
        if not self.alpha > 0 or int(self.N) != self.N or self.N < 1:
            raise DomainError("need alpha > 0 and a positive integer N")


def in_approach_region(profile: RadialProfile, region: ApproachRegion, z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    v = np.imag(w)
    with np.errstate(invalid="ignore"):
        lhs = np.sqrt(np.abs(z) ** 2 + np.real(w) ** 2)
        rhs = region.alpha * np.power(np.where(v > 0, v, 0.0), 1.0 / region.N)
    out = (lhs < rhs) & in_domain(profile, z, w)
    return bool(out) if np.ndim(out) == 0 else out


# -- thresholds ---------------------------------------------------------------


@dataclass(frozen=True)
class Thresholds:
    """Thresholds in ``t = Im w``; ``log_*`` fields survive underflow of the plain values."""

    log_H_Nalpha: float
    log_R_cmp: float
    log_H0: float
    binding: dict

    @property
    def H_Nalpha(self) -> float:
        return math.exp(self.log_H_Nalpha)

    @property
    def R_cmp(self) -> float:
        return math.exp(self.log_R_cmp)

    @property
    def H0(self) -> float:
        return math.exp(self.log_H0)

    def to_dict(self):
        return {"H_Nalpha": self.H_Nalpha, "R_cmp": self.R_cmp, "H0": self.H0,
                "log_H_Nalpha": self.log_H_Nalpha, "log_R_cmp": self.log_R_cmp,
                "log_H0": self.log_H0, "binding": dict(self.binding)}


def _threshold_L(residual, L_lo, L_hi, n_probe=64, iters=60, name="residual"):
    """Smallest ``L*`` in ``[L_lo, L_hi]`` with ``residual(L) >= 0`` for all probed ``L >= L*``.

    ``L = log(1/t)``, so this is the *largest* admissible ``t``.  The probe runs
    on a grid uniform in ``log L``.  When a violation is found the residual must
    be nondecreasing on the probe nodes from the last violation onward,
    otherwise :class:`NumericError`.
    """
    u = np.linspace(math.log(L_lo), math.log(L_hi), n_probe)
    L = np.exp(u)
    res = np.array([residual(x) for x in L])
    if np.any(np.isnan(res)):
        raise NumericError(f"{name}: NaN on probe grid")
    bad = np.nonzero(res < 0)[0]
    if not bad.size:
        return L_lo
    start = bad[-1]
    tail = res[start:]
    if np.any(np.diff(tail) < -1e-12 * np.maximum(1.0, np.abs(tail[:-1]))):
        raise NumericError(f"{name}: residual not monotone on probe grid beyond L={L[start]:.4g}")
    if bad[-1] == n_probe - 1:
        raise NumericError(f"{name}: never satisfied up to L={L_hi:.4g}")
    a, b = u[bad[-1]], u[bad[-1] + 1]
    for _ in range(iters):
        m = 0.5 * (a + b)
        if residual(math.exp(m)) >= 0:
            b = m
        else:
            a = m
    return math.exp(b)


def compute_H(profile: RadialProfile, constants: DerivedConstants, region: ApproachRegion,
              L_max: float = 1e6, n_probe: int = 64) -> Thresholds:
    """Thresholds ``H_{N,alpha}``, ``R_cmp`` (comparison radius) and ``H_0``.

    ``R_cmp`` combines three requirements and records which one binds:

    * ``1/(2 log(1/t)) < T`` so the doubling lemma applies at ``s = 1/(2L)``;
    * ``f^{-1}(3t/4) >= G_f(1/(2 log(1/t)))``;
    * ``f^{-1}(3t/4) / f^{-1}(t) >= 1/(M+1)``.
    """
    c = constants
    mu, T = c.mu, c.T
    log_inv = profile.log_inv
    L_lo = 1e-3

    def res_doubling(L):
        return T - 1.0 / (2.0 * L)

    def res_shrink(L):
        return float(log_inv(-L - LOG_4_3)) - float(log_inv(-2.0 * L))

    def res_ratio(L):
        return float(log_inv(-L - LOG_4_3)) - float(log_inv(-L)) + math.log(c.M + 1.0)

    L_T = _threshold_L(res_doubling, L_lo, L_max, n_probe, name="doubling range")
    cmp_parts = {
        "doubling range": L_T,
        "log shrink": _threshold_L(res_shrink, L_T, L_max, n_probe, name="log shrink"),
        "compare ratio": _threshold_L(res_ratio, L_T, L_max, n_probe, name="compare ratio"),
    }
    L_cmp = max(cmp_parts.values())
    cmp_bind = max(cmp_parts, key=cmp_parts.get)

    def res_region(L):
        return (math.log(mu / 4.0) + float(log_inv(-L)) - math.log(region.alpha) + L / region.N)

    L_reg = _threshold_L(res_region, L_cmp, L_max, n_probe, name="polydisc fit")
    H_bind = "polydisc fit" if L_reg > L_cmp else cmp_bind
    L_H = max(L_reg, L_cmp)

    log_A = math.log(c.A)
    lead = math.log(2.0 * (1.0 + c.K / 4.0))

    def res_T(L):
        return T - 1.0 / L

    def res_dominance(L):
        # t^{5/2} term below the t^2 R_t^2 term: sqrt(t) <= 2 (1 + K/4) R_t^2
        return lead + 2.0 * float(log_inv(-L)) + 0.5 * L

    def res_split(L):
        return log_A - float(log_inv(-0.5 * L))

    h0_parts = {"doubling range": _threshold_L(res_T, L_lo, L_max, n_probe, name="H0 doubling")}
    h0_parts["t^(5/2) dominance"] = _threshold_L(res_dominance, h0_parts["doubling range"], L_max,
                                                 n_probe, name="H0 dominance")
    h0_parts["split inside A"] = _threshold_L(res_split, h0_parts["doubling range"], L_max,
                                              n_probe, name="H0 split")
    L_H0 = max(h0_parts.values())
    h0_bind = max(h0_parts, key=h0_parts.get)
    binding = {"R_cmp": cmp_bind, "H_Nalpha": H_bind, "H0": h0_bind}
    log.debug("thresholds: binding constraints %s", binding)
    return Thresholds(log_H_Nalpha=-L_H, log_R_cmp=-L_cmp, log_H0=-L_H0, binding=binding)


def compare1_ratio(profile: RadialProfile, t):
    """``f^{-1}(3t/4) / f^{-1}(t)``."""
    lt = np.log(np.asarray(t, dtype=float))
    out = np.exp(profile.log_inv(lt - LOG_4_3) - profile.log_inv(lt))
    return out if np.ndim(out) else float(out)


# -- polydisc and envelope ----------------------------------------------------


@dataclass(frozen=True)
class Polydisc:
    center_z: complex
    center_w: complex
    radius_z: float
    radius_w: float

    @property
    def volume(self) -> float:
        return math.pi ** 2 * self.radius_z ** 2 * self.radius_w ** 2

    @property
    def log_volume(self) -> float:
        return 2 * math.log(math.pi) + 2 * math.log(self.radius_z) + 2 * math.log(self.radius_w)

    def distinguished_boundary(self, n: int = 256):
        """``n`` points on the torus ``|z'-z| = r_z, |w'-w| = r_w``.

        The grid is aligned so that it contains the point farthest from the
        boundary of the domain (outermost ``z'``, lowest ``w'``).
        """
        k = max(1, int(round(math.sqrt(n))))
        m = max(1, int(math.ceil(n / k)))
        th0 = np.angle(self.center_z) if self.center_z != 0 else 0.0
        th = th0 + 2 * np.pi * np.arange(k) / k
        ph = -np.pi / 2 + 2 * np.pi * np.arange(m) / m
        TH, PH = np.meshgrid(th, ph, indexing="ij")
        zs = self.center_z + self.radius_z * np.exp(1j * TH.ravel())
        ws = self.center_w + self.radius_w * np.exp(1j * PH.ravel())
        return zs, ws


def polydisc_at(profile: RadialProfile, constants: DerivedConstants, z: complex, t: float,
                audit: bool = True, n_audit: int = 256) -> Polydisc:
    """``D(z; (mu/2) f^{-1}(t)) x D(it; t/4)``; the audit samples its distinguished boundary."""
    if not t > 0:
        raise DomainError("t must be positive")
    rz = 0.5 * constants.mu * float(profile.inv(math.log(t)))
    pd = Polydisc(complex(z), 1j * t, rz, t / 4.0)
    if audit:
        zs, ws = pd.distinguished_boundary(n_audit)
        inside = in_domain(profile, zs, ws)
        if not np.all(inside):
            raise InvariantViolation(
                f"polydisc at |z|={abs(z):.3g}, t={t:.3g} leaves the domain at "
                f"{int(np.sum(~inside))}/{inside.size} boundary samples")
    return pd


def log_upper_bound_env(profile: RadialProfile, constants: DerivedConstants, t):
    """``log(C1 t^-2 f^{-1}(t)^-2)``."""
    lt = np.log(np.asarray(t, dtype=float))
    out = math.log(constants.C1) - 2.0 * lt - 2.0 * profile.log_inv(lt)
    return out if np.ndim(out) else float(out)


def upper_bound_env(profile: RadialProfile, constants: DerivedConstants, t):
    """``C1 t^-2 [f^{-1}(t)]^-2``, the reciprocal volume of the comparison polydisc."""
    if np.any(np.asarray(t) <= 0):
        raise DomainError("t must be positive")
    with np.errstate(over="ignore"):
        out = np.exp(log_upper_bound_env(profile, constants, t))
    return out if np.ndim(out) else float(out)


def log_envelope(profile: RadialProfile, t):
    """``log(t^-2 f^{-1}(t)^-2)`` (the growth envelope without constant)."""
    lt = np.log(np.asarray(t, dtype=float))
    out = -2.0 * lt - 2.0 * profile.log_inv(lt)
    return out if np.ndim(out) else float(out)


# -- bounded realization ------------------------------------------------------


def psi_map(constants: DerivedConstants, z, w):
    """``Psi(z, w) = ((2i)^k z / (i+w)^k, (i-w)/(i+w))`` with ``k = kappa_eta``."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    den = 1j + w
    if np.any(den == 0):
        raise PoleError("Psi has a pole at w = -i")
    if np.any(np.imag(w) <= -1):
        raise DomainError("Psi is defined on Im w > -1")
    k = constants.kappa_eta
    psi1 = (2j) ** k * z / den ** k
    psi2 = (1j - w) / den
    if psi1.ndim == 0:
        return complex(psi1), complex(psi2)
    return psi1, psi2


def psi_bounds(profile: RadialProfile, constants: DerivedConstants) -> float:
    """Bound on ``|psi_1|^2`` over the domain from the tail-growth parameters."""
    st = constants.star
    if profile.logf(st.R) < math.log(st.C) + st.eta * math.log(st.R) - 1e-12:
        raise DomainError("tail-growth parameters do not hold at R")
    k = constants.kappa_eta
    return max(4.0 ** k * st.R ** 2,
               (4.0 / st.C ** 2) ** k * st.R ** (-2.0 * (st.eta * k - 1.0)))


def sample_domain(profile: RadialProfile, n: int, rng: np.random.Generator,
                  r_range=(1e-4, 1e4), h_range=(1e-10, 1e4), s_range=(1e-6, 1e6)):
    """``n`` random points of the domain.

    ``|z|``, the height ``h`` above the boundary and ``|Re w|`` are log-uniform.
    Draws where ``f + h`` rounds back onto the boundary (or overflows) are
    rejected and redrawn.
    """
    zs, ws, have = [], [], 0
    while have < n:
        k = 2 * (n - have) + 16
        r = np.exp(rng.uniform(math.log(r_range[0]), math.log(r_range[1]), k))
        th = rng.uniform(0, 2 * np.pi, k)
        h = np.exp(rng.uniform(math.log(h_range[0]), math.log(h_range[1]), k))
        s = np.exp(rng.uniform(math.log(s_range[0]), math.log(s_range[1]), k)) * rng.choice([-1.0, 1.0], k)
        with np.errstate(under="ignore", over="ignore"):
            f = np.exp(profile.logf(r))
        z = r * np.exp(1j * th)
        w = s + 1j * (f + h)
        ok = np.isfinite(w) & in_domain(profile, z, w)
        zs.append(z[ok])
        ws.append(w[ok])
        have += int(ok.sum())
    return np.concatenate(zs)[:n], np.concatenate(ws)[:n]


@dataclass(frozen=True)
class PsiAudit:
    n: int
    seed: int
    sup_psi1_sq: float
    sup_psi2: float
    bound_psi1_sq: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self):
        return {"n": self.n, "seed": self.seed, "sup_psi1_sq": self.sup_psi1_sq,
                "sup_psi2": self.sup_psi2, "bound_psi1_sq": self.bound_psi1_sq,
                "violations": self.violations, "passed": self.passed}


def audit_psi(profile: RadialProfile, constants: DerivedConstants, n: int = 10_000,
              seed: int = 0, slack: float = 1e-12) -> PsiAudit:
    """Monte-Carlo check that ``Psi`` maps sampled domain points into the bounded box.

    ``slack`` absorbs rounding in ``|psi_2|``, which equals one up to the last
    bit for points far out along ``Re w``.
    """
    rng = np.random.default_rng(seed)
    z, w = sample_domain(profile, n, rng)
    p1, p2 = psi_map(constants, z, w)
    b = psi_bounds(profile, constants)
    a1 = np.abs(p1) ** 2
    a2 = np.abs(p2)
    bad = (a1 > b * (1 + slack)) | (a2 > 1 + slack)
    return PsiAudit(n, seed, float(a1.max()), float(a2.max()), float(b), int(bad.sum()))
