import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from toposep import gf2

mats = st.integers(1, 7).flatmap(
    lambda r: st.integers(1, 9).flatmap(
        lambda c: arrays(np.uint8, (r, c), elements=st.integers(0, 1))))


@given(mats)
def test_rank_plus_nullity(M):
    assert gf2.rank(M) + len(gf2.nullspace(M)) == M.shape[1]


@given(mats)
def test_nullspace_annihilates(M):
    N = gf2.nullspace(M)
    if len(N):
        assert not ((M.astype(int) @ N.T.astype(int)) % 2).any()


@given(mats, st.data())
def test_solve_consistent(M, data):
    x = data.draw(arrays(np.uint8, (M.shape[1],), elements=st.integers(0, 1)))
    b = (M.astype(int) @ x.astype(int)) % 2
    sol = gf2.solve(M, b)
    assert sol is not None
    assert np.array_equal((M.astype(int) @ sol.astype(int)) % 2, b)


@given(mats, st.data())
def test_coset_keys_are_linear(M, data):
    n = M.shape[1]
    red = gf2.CosetReducer(M, n)
    table = red.key_table()
    u, v = data.draw(st.integers(0, (1 << n) - 1)), data.draw(st.integers(0, (1 << n) - 1))
    k = gf2.linear_image_keys(np.array([u, v, u ^ v]), table)
    assert k[2] == k[0] ^ k[1]


@given(mats)
def test_generators_have_zero_key(M):
    red = gf2.CosetReducer(M, M.shape[1])
    table = red.key_table()
    keys = gf2.linear_image_keys(gf2.pack_rows(M).astype(np.int64), table)
    assert not keys.any()


def test_pack_roundtrip():
    bits = np.array([1, 0, 1, 1, 0, 0, 1], dtype=np.uint8)
    assert np.array_equal(gf2.unpack(gf2.pack(bits), 7), bits)
    assert gf2.pack(bits) == 0b1001101


def test_span_elements_count():
    B = np.array([[1, 0, 1], [0, 1, 1]], dtype=np.uint8)
    assert sorted(gf2.span_elements(B).tolist()) == [0, 0b011, 0b101, 0b110]
