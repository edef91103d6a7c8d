import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposep.couplings import (k_nonoptimal, k_replica, nishimori_beta, nishimori_p,
                               nonoptimal_disorder_rate)

# atanh(0.782) summed as the series sum x^(2k+1)/(2k+1), 400 terms
BETA_0109_SERIES = 1.050498272620833


def test_beta_limits():
    assert nishimori_beta(0.5) == 0.0
    assert math.isinf(nishimori_beta(0.0))


def test_beta_at_reference_rate():
    assert nishimori_beta(0.109) == pytest.approx(BETA_0109_SERIES, abs=1e-10)
    assert math.tanh(nishimori_beta(0.109)) == pytest.approx(0.782, abs=1e-12)


@pytest.mark.parametrize("p", [-0.1, 0.6])
def test_beta_out_of_range(p):
    with pytest.raises(ValueError):
        nishimori_beta(p)


@given(st.floats(1e-6, 0.5))
def test_beta_roundtrip(p):
    assert nishimori_p(nishimori_beta(p)) == pytest.approx(p, abs=1e-10)


@given(st.floats(0.01, 20.0))
def test_nonoptimal_rate_is_nishimori_rate_of_dual_coupling(beta):
    K = k_nonoptimal(beta)
    q = nonoptimal_disorder_rate(beta)
    assert q == pytest.approx(math.exp(-2 * K) / (1 + math.exp(-2 * K)), rel=1e-12)
    assert math.tanh(K) == pytest.approx(1 - 2 * q, rel=1e-9, abs=1e-12)


def test_replica_coupling():
    assert k_replica(0.0) == 0.0
    assert math.isinf(k_replica(0.5))
    assert k_replica(0.1) == pytest.approx(-math.log(0.8))
