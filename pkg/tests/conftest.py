from __future__ import annotations

import pytest

from bergman_growth import derive_constants, double_exp, exp_beta, lambda_witness, power_type


@pytest.fixture(scope="session")
def quad():
    return power_type(2)


@pytest.fixture(scope="session")
def eb1():
    return exp_beta(1.0)


@pytest.fixture(scope="session")
def eb2():
    return exp_beta(2.0)


@pytest.fixture(scope="session")
def eb_half():
    return exp_beta(0.5)


@pytest.fixture(scope="session")
def dexp():
    return double_exp()


@pytest.fixture(scope="session")
def consts():
    """Derived constants for the built-in flat profiles with ``chi = Lambda_f``, ``B = 1``."""
    out = {}
    for name, prof in (("eb1", exp_beta(1.0)), ("eb2", exp_beta(2.0)), ("eb_half", exp_beta(0.5)),
                       ("dexp", double_exp())):
        out[name] = (prof, derive_constants(lambda_witness(prof), prof))
    return out
