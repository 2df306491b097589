from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from bergman_growth import (ApproachRegion, audit_psi, compute_H, derive_constants, in_approach_region,
                            in_domain, lambda_witness, log_envelope, polydisc_at, psi_bounds, psi_map,
                            sample_domain, upper_bound_env)
from bergman_growth.errors import DomainError, InvariantViolation, PoleError
from bergman_growth.geometry import log_upper_bound_env


@pytest.fixture(scope="module")
def c_eb1(eb1):
    return derive_constants(lambda_witness(eb1), eb1)


# -- membership ---------------------------------------------------------------


def test_in_domain_examples(eb1, dexp):
    assert in_domain(eb1, 0, 1j)
    assert in_domain(dexp, 0, 1j)
    assert not in_domain(eb1, 0.1, 1j * math.exp(-10.0))
    assert in_domain(eb1, 0.1, 1j * math.exp(-10.0) * (1 + 1e-12))
    assert not in_domain(eb1, 0.0, 3.0)
    assert not in_domain(eb1, 0.0, 3.0 - 1j)


def test_in_domain_vectorised(eb1):
    z = np.array([0.0, 0.1, 2.0])
    w = np.array([1j, 1e-5j, 1j])
    np.testing.assert_array_equal(in_domain(eb1, z, w), [True, False, False])


def test_approach_region_examples(eb1):
    assert in_approach_region(eb1, ApproachRegion(0.3, 3), 0, 1e-7j)
    for t in (1e-6, 1e-3, 0.5):
        assert not in_approach_region(eb1, ApproachRegion(1.0, 1), 0, t + 1j * t)
    assert not in_approach_region(eb1, ApproachRegion(1.0, 2), 0.01, 1e-4j)
    assert in_approach_region(eb1, ApproachRegion(1.0, 2), 0.0099, 1e-4j)


@pytest.mark.parametrize("alpha,N", [(0.0, 1), (-1.0, 2), (1.0, 0), (1.0, 1.5)])
def test_region_validation(alpha, N):
    with pytest.raises(DomainError):
        ApproachRegion(alpha, N)


@settings(max_examples=200, deadline=None)
@given(r=st.floats(0, 0.3), s=st.floats(-0.3, 0.3), lt=st.floats(-25, -0.1), bump=st.floats(0, 5))
def test_region_monotone_in_height(eb1, r, s, lt, bump):
    reg = ApproachRegion(1.0, 2)
    t = math.exp(lt)
    t2 = t * math.exp(bump)
    if in_approach_region(eb1, reg, r, s + 1j * t) and in_domain(eb1, r, s + 1j * t2):
        assert in_approach_region(eb1, reg, r, s + 1j * t2)


# -- thresholds ---------------------------------------------------------------


def test_H_matches_closed_form_root(eb1, c_eb1):
    # alpha t = (mu/4) f^{-1}(t) with f^{-1}(t) = 1/log(1/t), mu = 1/4:  t log(1/t) = 1/16
    root = brentq(lambda t: t * math.log(1 / t) - 1 / 16, 1e-6, 0.05, xtol=1e-16)
    thr = compute_H(eb1, c_eb1, ApproachRegion(1.0, 1))
    assert thr.binding["H_Nalpha"] == "polydisc fit"
    assert thr.H_Nalpha == pytest.approx(root, rel=1e-9)
    assert thr.H_Nalpha == pytest.approx(0.0148454, rel=1e-5)
    assert thr.H_Nalpha <= thr.R_cmp


def test_H_tends_to_R_cmp_as_alpha_vanishes(eb1, c_eb1):
    thr = compute_H(eb1, c_eb1, ApproachRegion(1e-30, 1))
    assert thr.H_Nalpha == pytest.approx(thr.R_cmp, rel=1e-12)


def test_H_decreases_with_N(eb1, c_eb1):
    h1 = compute_H(eb1, c_eb1, ApproachRegion(1.0, 1)).H_Nalpha
    h4 = compute_H(eb1, c_eb1, ApproachRegion(1.0, 4)).H_Nalpha
    assert h4 < h1


def test_thresholds_positive_for_builtins(consts):
    for prof, c in consts.values():
        thr = compute_H(prof, c, ApproachRegion(1.0, 2))
        assert 0 < thr.H_Nalpha <= thr.R_cmp
        assert thr.H0 > 0


# -- polydisc -----------------------------------------------------------------


def test_polydisc_radii(eb1, c_eb1):
    t = math.exp(-100.0)
    pd = polydisc_at(eb1, c_eb1, 0, t)
    assert pd.radius_z == pytest.approx(1 / 800, rel=1e-12)
    assert pd.radius_w == t / 4
    assert pd.center_w == 1j * t
    assert pd.volume == pytest.approx(math.pi ** 2 * pd.radius_z ** 2 * pd.radius_w ** 2, rel=1e-15)


def test_polydisc_audit_catches_escape(eb1, c_eb1):
    # far outside the approach region the polydisc crosses the boundary
    with pytest.raises(InvariantViolation):
        polydisc_at(eb1, c_eb1, 0.3, 1e-6)


def test_containment_inequality_in_region(consts):
    for prof, c in consts.values():
        reg = ApproachRegion(1.0, 2)
        H = compute_H(prof, c, reg).H_Nalpha
        for t in np.geomspace(H * 1e-12, H * (1 - 1e-9), 15):
            r_max = reg.alpha * t ** 0.5
            for frac in (0.0, 0.5, 1.0):
                az = frac * r_max
                lhs = az + 0.5 * c.mu * prof.inv(math.log(t))
                assert lhs < prof.inv(math.log(0.75 * t))
                polydisc_at(prof, c, az * np.exp(0.7j), t, n_audit=256)


def test_upper_bound_env_examples(eb1, c_eb1):
    t = math.exp(-10.0)
    assert upper_bound_env(eb1, c_eb1, t) == pytest.approx(1024 / math.pi ** 2 * math.exp(20) * 100,
                                                          rel=1e-12)
    with pytest.raises(DomainError):
        upper_bound_env(eb1, c_eb1, 0.0)


def test_envelope_times_volume_is_one(consts):
    for prof, c in consts.values():
        for t in np.geomspace(1e-12, 1e-3, 9):
            pd = polydisc_at(prof, c, 0, t, audit=False)
            assert math.exp(log_upper_bound_env(prof, c, t) + pd.log_volume) == pytest.approx(1.0, abs=1e-12)


def test_power_envelope(quad):
    from bergman_growth.profile import DerivedConstants, StarParams
    c = DerivedConstants(1, 1.0, 0.5, 256 / math.pi ** 2, 3.0, 0.1, 0.1, 1.0, 1.0, 1.0, StarParams(2, 1, 1))
    for t in (1e-4, 0.3, 2.0):
        assert upper_bound_env(quad, c, t) == pytest.approx(c.C1 * t ** -3, rel=1e-13)


def test_envelope_log_slope(consts):
    for prof, c in consts.values():
        H0 = compute_H(prof, c, ApproachRegion(1.0, 1)).H0
        t = np.geomspace(H0 * 1e-20, H0, 200)
        le = log_envelope(prof, t)
        slope = np.diff(le) / np.diff(np.log(t))
        assert np.all(slope <= -2.0 + 1e-9)


# -- bounded realization ------------------------------------------------------


def test_psi_examples(c_eb1):
    assert psi_map(c_eb1, 0, 0) == (0, 1)
    assert psi_map(c_eb1, 0, 1j) == (0, 0)
    with pytest.raises(PoleError):
        psi_map(c_eb1, 0.5, -1j)
    with pytest.raises(DomainError):
        psi_map(c_eb1, 0.5, -2j)


def test_psi_bound_value(eb1, c_eb1):
    # eta = 2, C = 1, R = 1, kappa = 1:  max(4 R^2, 4/C^2 R^{-2})
    assert c_eb1.kappa_eta == 1
    assert psi_bounds(eb1, c_eb1) == pytest.approx(4.0)


def test_sample_domain(eb1, dexp):
    rng = np.random.default_rng(3)
    for prof in (eb1, dexp):
        z, w = sample_domain(prof, 2000, rng)
        assert z.shape == (2000,)
        assert np.all(in_domain(prof, z, w))


def test_psi_audit_small(consts):
    for name, (prof, c) in consts.items():
        rep = audit_psi(prof, c, 3000, seed=11)
        assert rep.passed, name
        assert rep.sup_psi2 <= 1 + 1e-12


def test_psi_injective_on_samples(eb1, c_eb1):
    rng = np.random.default_rng(5)
    z, w = sample_domain(eb1, 400, rng, r_range=(1e-2, 10), h_range=(1e-3, 10), s_range=(1e-3, 10))
    p1, p2 = psi_map(c_eb1, z, w)
    img = np.stack([p1, p2], axis=1)
    d = np.abs(img[:, None, :] - img[None, :, :]).max(axis=2)
    np.fill_diagonal(d, np.inf)
    assert d.min() > 0
