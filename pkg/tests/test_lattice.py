import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toposep import gf2
from toposep.lattice import (bipartition_from_edges, build_torus_2d, build_torus_3d, flux_of,
                             gauge_move, gauge_orbit_representative, is_contractible,
                             nontrivial_cycle, primal_membrane, rectangle_region, to_bits, to_signs)

sizes2 = st.tuples(st.integers(2, 5), st.integers(2, 5))


@given(sizes2)
def test_2d_counts_and_euler(dims):
    lat = build_torus_2d(*dims)
    assert lat.n_edges == 2 * lat.n_vertices
    assert lat.n_vertices - lat.n_edges + lat.n_plaquettes == 0


@given(sizes2)
def test_boundary_of_boundary(dims):
    lat = build_torus_2d(*dims)
    prod = (lat.star_matrix.astype(int) @ lat.plaquette_matrix.T.astype(int)) % 2
    assert not prod.any()


@given(sizes2)
def test_incidence_degrees(dims):
    lat = build_torus_2d(*dims)
    assert (lat.star_matrix.sum(axis=1) == 4).all()
    assert (lat.plaquette_matrix.sum(axis=1) == 4).all()
    assert (lat.star_matrix.sum(axis=0) == 2).all()


@pytest.mark.parametrize("L", [2, 3, 4])
def test_3d_chain_complex(L):
    lat = build_torus_3d(L)
    assert lat.n_edges == 3 * lat.n_vertices == lat.n_faces
    F, C = lat.face_matrix.astype(int), lat.cube_faces
    assert not ((lat.star_matrix.astype(int) @ F.T) % 2).any()
    cube_face_mat = np.zeros((lat.n_cubes, lat.n_faces), int)
    for c, fs in enumerate(C):
        cube_face_mat[c, fs] ^= 1
    assert not ((cube_face_mat @ F) % 2).any()
    assert gf2.rank(lat.cycle_basis) == lat.n_edges - lat.n_vertices + 1


@pytest.mark.parametrize("d", ["x", "y"])
@pytest.mark.parametrize("dual", [False, True])
def test_2d_logical_cycles_are_noncontractible(d, dual):
    lat = build_torus_2d(4, 3)
    c = nontrivial_cycle(lat, d, dual)
    assert not is_contractible(lat, c.mask, dual)
    rows = lat.star_matrix if not dual else lat.plaquette_matrix
    # closed: every vertex (primal) or plaquette (dual) meets it an even number of times
    assert not ((rows.astype(int) @ c.mask.astype(int)) % 2).any()


def test_primal_and_dual_loops_intersect_once():
    lat = build_torus_2d(4, 4)
    for d1, d2 in (("x", "y"), ("y", "x")):
        a = nontrivial_cycle(lat, d1, False).mask.astype(int)
        b = nontrivial_cycle(lat, d2, True).mask.astype(int)
        assert int(a @ b) % 2 == 1


@pytest.mark.parametrize("d", "xyz")
def test_3d_loops_and_membranes(d):
    lat = build_torus_3d(3)
    loop = nontrivial_cycle(lat, d, dual=False)
    memb = nontrivial_cycle(lat, d, dual=True)
    assert not is_contractible(lat, loop.mask, dual=False)
    assert not is_contractible(lat, memb.mask, dual=True)
    assert int(loop.mask.astype(int) @ memb.mask.astype(int)) % 2 == 1
    assert len(primal_membrane(lat, d)) == lat.n_vertices // 3


def test_plaquette_boundary_is_contractible():
    lat = build_torus_2d(3, 3)
    assert is_contractible(lat, lat.plaquette_matrix[4], dual=False)
    assert is_contractible(lat, lat.star_matrix[4], dual=True)


@given(st.integers(0, 2 ** 18 - 1), st.integers(0, 2 ** 9 - 1))
def test_gauge_move_preserves_flux(xbits, sbits):
    lat = build_torus_2d(3, 3)
    x = to_signs(gf2.unpack(xbits, lat.n_edges))
    sigma = to_signs(gf2.unpack(sbits, lat.n_vertices))
    y = gauge_move(x, lat, sigma)
    assert flux_of(x, lat).key() == flux_of(y, lat).key()
    assert np.array_equal(gauge_orbit_representative(x, lat), gauge_orbit_representative(y, lat))


@given(st.integers(0, 2 ** 8 - 1))
def test_orbit_representative_idempotent(xbits):
    lat = build_torus_2d(2, 2)
    x = to_signs(gf2.unpack(xbits, lat.n_edges))
    r = gauge_orbit_representative(x, lat)
    assert np.array_equal(gauge_orbit_representative(r, lat), r)


def test_bits_signs_roundtrip():
    s = np.array([1, -1, -1, 1], dtype=np.int8)
    assert np.array_equal(to_signs(to_bits(s)), s)


@pytest.mark.parametrize("ext,boundary", [((1, 1), 4), ((2, 1), 6), ((3, 2), 10), ((4, 4), 16)])
def test_rectangle_boundary(ext, boundary):
    lat = build_torus_2d(8, 8)
    assert rectangle_region(lat, (1, 2), ext).boundary_size == boundary


def test_rectangle_must_be_contractible():
    with pytest.raises(ValueError):
        rectangle_region(build_torus_2d(4, 4), (0, 0), (3, 1))


def test_bipartition_partitions_edges():
    lat = build_torus_2d(3, 3)
    b = bipartition_from_edges(lat, [0, 1, 9])
    assert sorted(np.concatenate([b.a_edges, b.b_edges]).tolist()) == list(range(lat.n_edges))
