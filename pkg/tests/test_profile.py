from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergman_growth import (check_conditions, check_doubling, check_ratio_fact, custom_table,
                            derive_constants, double_exp, exp_beta, g_f, inv_f, lambda_f,
                            lambda_witness, power_type, table_witness)
from bergman_growth.errors import DomainError, RangeError
from bergman_growth.geometry import compare1_ratio, compute_H, ApproachRegion
from bergman_growth.profile import StarParams, eval_logf, kappa_eta

PROFILES = {"eb1": exp_beta(1.0), "eb2": exp_beta(2.0), "eb_half": exp_beta(0.5),
            "dexp": double_exp()}


# -- evaluation and inverse ---------------------------------------------------


def test_eval_logf_examples(eb1, quad):
    assert eval_logf(eb1, 0.1) == pytest.approx(-10.0, rel=1e-15)
    assert eval_logf(eb1, 0.0) == -math.inf
    assert eval_logf(quad, 0.0) == -math.inf
    assert eval_logf(quad, 2.0) == pytest.approx(2 * math.log(2.0), rel=1e-15)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -1.0])
def test_eval_logf_rejects_bad_radius(eb1, bad):
    with pytest.raises(DomainError):
        eval_logf(eb1, bad)


def test_inv_f_examples(eb1, dexp):
    assert inv_f(eb1, -10.0) == pytest.approx(0.1, rel=1e-12)
    assert inv_f(eb1, -math.inf) == 0.0
    assert inv_f(dexp, -math.exp(10.0)) == pytest.approx(0.1, rel=1e-12)


def test_inv_f_above_range(eb1):
    with pytest.raises(RangeError):
        inv_f(eb1, 1e6)


def test_lambda_f_examples(eb2, dexp):
    x = np.array([1e-3, 0.05, 0.3])
    np.testing.assert_allclose(lambda_f(eb2, x), x ** 2, rtol=1e-13)
    assert lambda_f(eb2, 0.0) == 0.0
    assert lambda_f(dexp, 0.1) == pytest.approx(math.exp(-10.0), rel=1e-13)


def test_lambda_f_outside_range(eb1):
    with pytest.raises(DomainError):
        lambda_f(eb1, eb1.r_unit * 1.01)


def test_g_f_examples(eb_half, eb1):
    y = np.array([1e-4, 1e-2, 0.1])
    np.testing.assert_allclose(g_f(eb_half, y), y ** 2, rtol=1e-12)
    assert g_f(eb1, 0.0) == 0.0
    t = np.geomspace(1e-300, 1e-3, 20)
    np.testing.assert_allclose(g_f(eb1, 1.0 / np.log(1.0 / t)), inv_f(eb1, np.log(t)), rtol=1e-13)


def test_splice_is_c1(eb1, dexp):
    for prof in (eb1, dexp):
        rs = prof.splice.r_splice
        h = 1e-7 * rs
        lo, mid, hi = prof.logf(np.array([rs - h, rs, rs + h]))
        assert hi - mid == pytest.approx(mid - lo, rel=1e-4)


@pytest.mark.parametrize("name", sorted(PROFILES))
@settings(max_examples=60, deadline=None)
@given(e=st.floats(-6.0, 6.0))
def test_round_trip_twelve_decades(name, e):
    prof = PROFILES[name]
    r = max(10.0 ** e, prof.r_floor * 2)
    assert inv_f(prof, eval_logf(prof, r)) == pytest.approx(r, rel=1e-12)


@pytest.mark.parametrize("name", sorted(PROFILES))
@settings(max_examples=60, deadline=None)
@given(lt=st.floats(-600.0, -1e-3))
def test_inverse_identity(name, lt):
    prof = PROFILES[name]
    r = inv_f(prof, lt)
    assert g_f(prof, -1.0 / lt) == pytest.approx(r, rel=1e-12)


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_monotone_transforms(name):
    prof = PROFILES[name]
    r = np.geomspace(max(1e-6, prof.r_floor), 1e6, 2000)
    assert np.all(np.diff(prof.logf(r)) > 0)
    x = np.geomspace(max(1e-6, prof.r_floor), 0.9 * prof.r_unit, 800)
    assert np.all(np.diff(lambda_f(prof, x)) > 0)
    y = lambda_f(prof, x)
    assert np.all(np.diff(g_f(prof, y)) > 0)
    lt = np.linspace(-700, 5, 800)
    assert np.all(np.diff(inv_f(prof, lt)) > 0)


# -- custom tables ------------------------------------------------------------


def test_custom_table_tracks_source(eb1):
    r = np.geomspace(0.02, 50.0, 400)
    prof = custom_table(r, eb1.logf(r))
    rr = np.geomspace(0.03, 40.0, 57)
    np.testing.assert_allclose(prof.logf(rr), eb1.logf(rr), rtol=1e-4)
    assert inv_f(prof, prof.logf(0.5)) == pytest.approx(0.5, rel=1e-12)


def test_custom_table_must_increase():
    with pytest.raises(DomainError):
        custom_table([0.1, 0.2, 0.3], [-5.0, -6.0, -1.0])


# -- conditions ---------------------------------------------------------------


def test_conditions_exp_beta_two(eb2):
    rep = check_conditions(eb2, lambda_witness(eb2, p=1.0))
    assert rep.passed


def test_conditions_half_needs_p_three(eb_half):
    assert not check_conditions(eb_half, lambda_witness(eb_half, p=1.0))["convexity of chi^p"].passed
    assert check_conditions(eb_half, lambda_witness(eb_half, p=3.0)).passed


def test_conditions_double_exp(dexp):
    rep = check_conditions(dexp, lambda_witness(dexp, p=1.0, eps0=0.4))
    assert rep["convexity of chi^p"].passed
    assert rep.passed


def test_power_type_is_flagged(quad):
    rep = check_conditions(quad, lambda_witness(quad))
    assert not rep["infinite-order vanishing"].passed
    assert not rep.passed


def test_tail_violation_is_reported(eb1):
    w = lambda_witness(eb1, star=StarParams(eta=2.0, C=100.0, R=1.0))
    assert not check_conditions(eb1, w)["tail growth (*)"].passed


def test_table_witness(eb2):
    x = np.concatenate([[0.0], np.geomspace(1e-9, 0.5, 300)])
    exact = table_witness(x, x ** 2, 1.0, 1.0, 0.4, eb2.default_star())
    # interpolation error breaks the B = 1 sandwich by a hair; a slightly larger B absorbs it
    assert not check_conditions(eb2, exact)["flatness sandwich"].passed
    loose = table_witness(x, x ** 2, 1.0, 1.001, 0.4, eb2.default_star())
    assert check_conditions(eb2, loose).passed


def test_default_p_rule():
    assert lambda_witness(exp_beta(2.0)).p == 1.0
    assert lambda_witness(exp_beta(1.0)).p == 2.0
    assert lambda_witness(exp_beta(0.5)).p == 3.0
    assert lambda_witness(exp_beta(0.3)).p == 4.0


# -- constants ----------------------------------------------------------------


def test_derived_constants_formulae(eb1, eb2):
    c = derive_constants(lambda_witness(eb1, p=2.0), eb1)
    assert (c.M, c.mu, c.K) == (3.0, 0.25, 15.0)
    assert c.C1 == pytest.approx(1024 / math.pi ** 2, rel=1e-15)
    c = derive_constants(lambda_witness(eb2, p=1.0), eb2)
    assert (c.M, c.mu) == (1.0, 0.5)
    assert c.C1 == pytest.approx(256 / math.pi ** 2, rel=1e-15)
    assert c.A == pytest.approx(min(eb2.r_unit, 1.0))


@pytest.mark.parametrize("eta,kappa", [(2.0, 1), (1.5, 1), (1.0, 2), (0.5, 3), (0.4, 3), (0.3, 4)])
def test_kappa_eta(eta, kappa):
    assert kappa_eta(eta) == kappa


def test_doubling_exp_one(eb1):
    c = derive_constants(lambda_witness(eb1), eb1)
    rep = check_doubling(eb1, c)
    assert rep.passed
    assert rep.empirical_K == pytest.approx(3.0, rel=1e-9)
    assert rep.min_gap > 0


def test_doubling_half_p_three(eb_half):
    c = derive_constants(lambda_witness(eb_half, p=3.0), eb_half)
    assert c.M == 7.0 and c.K == 63.0
    assert check_doubling(eb_half, c).passed


def test_doubling_grid_must_be_below_T(eb1):
    c = derive_constants(lambda_witness(eb1), eb1)
    with pytest.raises(DomainError):
        check_doubling(eb1, c, [c.T * 2])


def test_doubling_flags_too_small_K(eb1):
    from dataclasses import replace
    c = derive_constants(lambda_witness(eb1), eb1)
    rep = check_doubling(eb1, replace(c, K=2.0))
    assert not rep.passed


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_ratio_fact(name):
    prof = PROFILES[name]
    w = lambda_witness(prof)
    rep = check_ratio_fact(prof, w, derive_constants(w, prof))
    assert rep.passed
    assert all(v <= b ** w.p * (1 + 1e-10) for b, v in rep.ratio_worst.items())


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_compare1_below_R(name):
    prof = PROFILES[name]
    c = derive_constants(lambda_witness(prof), prof)
    R = compute_H(prof, c, ApproachRegion(1.0, 1)).R_cmp
    t = np.geomspace(R * 1e-30, R * (1 - 1e-9), 200)
    assert np.all(compare1_ratio(prof, t) >= c.mu * (1 - 1e-12))
