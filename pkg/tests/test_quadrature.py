from __future__ import annotations

import math

import numpy as np
import pytest

from bergman_growth.errors import UnconvergedError
from bergman_growth.quadrature import GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODES, log_quad, logsumexp


def test_rule_weights_integrate_constants():
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert np.all(np.diff(NODES) > 0)


def test_kronrod_rule_exact_for_degree_22():
    x = NODES
    for k in range(0, 23, 2):
        assert KRONROD_WEIGHTS @ x ** k == pytest.approx(2.0 / (k + 1), rel=1e-13)


def test_logsumexp_edge_cases():
    assert logsumexp([]) == -math.inf
    assert logsumexp([-math.inf, -math.inf]) == -math.inf
    assert logsumexp([1000.0, 1000.0]) == pytest.approx(1000.0 + math.log(2.0))
    rows = logsumexp(np.array([[0.0, 0.0], [-math.inf, -math.inf]]), axis=1)
    assert rows[0] == pytest.approx(math.log(2.0))
    assert rows[1] == -math.inf


def test_gaussian_integral():
    res = log_quad(lambda x: -x * x, -12.0, 12.0, rtol=1e-12)
    assert res.log_value == pytest.approx(0.5 * math.log(math.pi), abs=1e-13)
    assert res.rel_err <= 1e-12


def test_huge_dynamic_range_stays_finite():
    # exp(-1e5 + ...) would underflow in linear space
    res = log_quad(lambda x: -1e5 - x * x, -12.0, 12.0, rtol=1e-12)
    assert res.log_value == pytest.approx(-1e5 + 0.5 * math.log(math.pi), rel=1e-15)


def test_extension_recovers_tail():
    res = log_quad(lambda x: -x, 0.0, 1.0, rtol=1e-12, extend_right=True, step=2.0)
    assert res.log_value == pytest.approx(0.0, abs=1e-11)
    assert res.interval[1] > 20


def test_vector_rows():
    a = np.array([1.0, 2.0, 4.0])

    def g(x):
        return -np.outer(a, np.asarray(x) ** 2)

    res = log_quad(g, -15.0, 15.0, rtol=1e-12)
    np.testing.assert_allclose(res.log_value, 0.5 * np.log(np.pi / a), atol=1e-12)


def test_panel_cap_raises():
    with pytest.raises(UnconvergedError):
        log_quad(lambda x: np.log(np.abs(np.sin(50 * x)) + 1e-300), 0.0, 10.0, rtol=1e-14, max_panels=8)
