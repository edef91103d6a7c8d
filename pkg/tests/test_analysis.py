import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposep.analysis import (THRESHOLDS, ThresholdConstants, crossing_find, nishimori_beta,
                              non_optimal_threshold, pc2_closed_form, tee_fit, threshold_table)

# frozen high-precision values (tests/oracles/compute_oracles.py)
PC2 = 0.17820287354720868763
KC = 0.44068679350977151262
NON_OPT = {0.109: 0.18836078552274587021, 0.233: 0.077257761750733027134}
BETA_0109 = 1.050498272620833


@pytest.mark.parametrize("p_ref", sorted(NON_OPT))
def test_non_optimal_threshold_oracle(p_ref):
    assert non_optimal_threshold(p_ref) == pytest.approx(NON_OPT[p_ref], abs=1e-14)


def test_non_optimal_threshold_is_monotone_and_consistent():
    grid = np.linspace(0.001, 0.499, 100)
    vals = np.array([non_optimal_threshold(p) for p in grid])
    assert np.all(np.diff(vals) < 0) and np.all((vals > 0) & (vals < 0.5))
    # the defining relations: tanh(beta) = 1 - 2p and tanh^2(beta/2) = p_ref / (1 - p_ref)
    for p_ref, p in zip(grid, vals):
        beta = math.atanh(1 - 2 * p)
        assert math.tanh(beta / 2) ** 2 == pytest.approx(p_ref / (1 - p_ref), rel=1e-10)
    with pytest.raises(ValueError):
        non_optimal_threshold(0.5)


def test_pc2_closed_form():
    pc = pc2_closed_form()
    assert pc.p == pytest.approx(PC2, abs=1e-15)
    assert pc.K_c == pytest.approx(KC, abs=1e-15)
    # at p_c the doubled-replica coupling log(cosh 2 beta)/2 sits at the Ising point
    beta = nishimori_beta(pc.p)
    assert 0.5 * math.log(math.cosh(2 * beta)) == pytest.approx(pc.K_c, abs=1e-12)


def test_nishimori_beta_oracle():
    # bisection root is guaranteed to 1e-12
    assert nishimori_beta(0.109) == pytest.approx(BETA_0109, abs=1e-12)
    assert nishimori_beta(0.5) == 0.0 and math.isinf(nishimori_beta(0.0))


def test_threshold_constants():
    assert (THRESHOLDS.p_2dRBIM, THRESHOLDS.p_3dRPGM, THRESHOLDS.p_3dRBIM, THRESHOLDS.p_3dPlaquette) == (
        0.109, 0.029, 0.233, 0.152)
    with pytest.raises(ValueError):
        ThresholdConstants(p_2dRBIM=0.6)
    names = [r[0] for r in threshold_table()]
    assert "2d non-optimal" in names and "rho2 closed form" in names


def _curves(p_c, sizes, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    p = np.linspace(0.05, 0.15, 11)
    out = {}
    for L in sizes:
        v = 0.5 + np.tanh((p - p_c) * L ** 0.7 * 8)
        out[L] = (p, v + noise * rng.normal(size=p.size), np.full(p.size, max(noise, 1e-3)))
    return out


def test_crossing_of_synthetic_curves():
    r = crossing_find(_curves(0.1, (4, 6, 8)))
    assert r.found
    assert r.p_star == pytest.approx(0.1, abs=1e-3)
    assert set(r.pairs) == {(4, 6), (4, 8), (6, 8)}


def test_crossing_with_noise_brackets_truth():
    r = crossing_find(_curves(0.1, (4, 6, 8), noise=0.005, seed=3))
    assert abs(r.p_star - 0.1) < 3 * r.err + 2e-3


def test_parallel_curves_have_no_crossing():
    p = np.linspace(0, 1, 5)
    r = crossing_find({4: (p, p, 0.01 + 0 * p), 6: (p, p + 0.1, 0.01 + 0 * p)})
    assert not r.found and math.isnan(r.p_star)


def test_single_size_rejected():
    with pytest.raises(ValueError):
        crossing_find({4: ([0.1, 0.2], [0.3, 0.4], [0.01, 0.01])})


@given(st.permutations(list(range(11))))
def test_crossing_is_order_invariant(perm):
    curves = _curves(0.1, (4, 8))
    ref = crossing_find(curves)
    shuffled = {L: tuple(np.asarray(c)[list(perm)] for c in v) for L, v in curves.items()}
    r = crossing_find(shuffled)
    assert r.p_star == pytest.approx(ref.p_star, abs=1e-14)


def test_tee_fit_exact_boundary_law():
    dA = np.array([4, 6, 8, 10])
    fit = tee_fit(dA, (dA - 1) * math.log(2))
    assert fit.tee == pytest.approx(math.log(2), abs=1e-12)
    assert fit.slope == pytest.approx(math.log(2), abs=1e-12)
    assert fit.residual < 1e-10


def test_tee_fit_trivial_state_and_noise(rng):
    fit = tee_fit([4, 6, 8], [0.0, 0.0, 0.0])
    assert fit.tee == 0.0 and fit.slope == 0.0
    dA = np.arange(4, 20, 2)
    noisy = 0.3 * dA - 0.5 + 1e-3 * rng.normal(size=dA.size)
    assert tee_fit(dA, noisy).tee == pytest.approx(0.5, abs=0.02)
    with pytest.raises(ValueError):
        tee_fit([4, 4, 4], [1, 1, 1])


def test_window_excludes_saturated_tails():
    p = np.linspace(0.05, 0.3, 26)
    a = 1 / (1 + np.exp(-20 * (p - 0.1)))
    b = 1 / (1 + np.exp(-40 * (p - 0.1)))
    b[-3:] = a[-3:] - 0.001  # saturated tails cross by noise only
    e = np.full(p.size, 0.01)
    full = crossing_find({4: (p, a, e), 6: (p, b, e)})
    assert len(full.roots) == 2
    r = crossing_find({4: (p, a, e), 6: (p, b, e)}, p_range=(0.05, 0.2))
    assert r.roots == pytest.approx((0.1,), abs=1e-9)
