"""Periodic square (2d) and cubic (3d) lattices.

Indexing conventions (version ``CONVENTION_VERSION``):

* vertices are row-major with x fastest: ``v = x + Lx*(y + Ly*z)``;
* 2d edges come in two blocks, horizontal ``h(x, y) = v`` then vertical
  ``N_v + v``; the edge stored at vertex ``v`` points in the +x (resp. +y)
  direction;
* 2d plaquette ``p(x, y)`` has lower-left corner ``(x, y)``;
* 3d edges, faces are direction-major blocks ``d*N_v + v``; face ``(d, v)`` is
  normal to direction ``d`` with lowest corner ``v``; cube ``c = v`` has
  lowest corner ``v``.

Sign configurations are ``int8`` arrays of +-1.  GF(2) helpers use the bit
encoding ``bit = (1 - sign) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from . import gf2

CONVENTION_VERSION = "1"


def to_bits(signs) -> np.ndarray:
    return ((1 - np.asarray(signs, dtype=np.int64)) // 2).astype(np.uint8)


def to_signs(bits) -> np.ndarray:
    return (1 - 2 * np.asarray(bits, dtype=np.int64)).astype(np.int8)


def _incidence(rows: np.ndarray, n_cols: int) -> np.ndarray:
    M = np.zeros((rows.shape[0], n_cols), dtype=np.uint8)
    for i, r in enumerate(rows):
        for c in r:
            M[i, c] ^= 1
    return M


@dataclass(frozen=True, eq=False)
class Torus2D:
    """Square lattice on a torus; qubits/bonds live on edges."""

    Lx: int
    Ly: int

    def __post_init__(self):
        if self.Lx < 2 or self.Ly < 2:
            raise ValueError(f"torus dimensions must be >= 2, got {self.Lx}x{self.Ly}")

    dim = 2

    @property
    def dims(self) -> tuple[int, int]:
        return (self.Lx, self.Ly)

    @property
    def n_vertices(self) -> int:
        return self.Lx * self.Ly

    @property
    def n_edges(self) -> int:
        return 2 * self.Lx * self.Ly

    @property
    def n_plaquettes(self) -> int:
        return self.Lx * self.Ly

    def vertex(self, x: int, y: int) -> int:
        return (y % self.Ly) * self.Lx + (x % self.Lx)

    def hedge(self, x: int, y: int) -> int:
        return self.vertex(x, y)

    def vedge(self, x: int, y: int) -> int:
        return self.n_vertices + self.vertex(x, y)

    def coords(self, v: int) -> tuple[int, int]:
        return v % self.Lx, v // self.Lx

    @cached_property
    def edge_vertices(self) -> np.ndarray:
        ev = np.zeros((self.n_edges, 2), dtype=np.int64)
        for y in range(self.Ly):
            for x in range(self.Lx):
                ev[self.hedge(x, y)] = (self.vertex(x, y), self.vertex(x + 1, y))
                ev[self.vedge(x, y)] = (self.vertex(x, y), self.vertex(x, y + 1))
        return ev

    @cached_property
    def plaquette_edges(self) -> np.ndarray:
        pe = np.zeros((self.n_plaquettes, 4), dtype=np.int64)
        for y in range(self.Ly):
            for x in range(self.Lx):
                pe[self.vertex(x, y)] = (
                    self.hedge(x, y), self.vedge(x + 1, y),
                    self.hedge(x, y + 1), self.vedge(x, y),
                )
        return pe

    @cached_property
    def vertex_edges(self) -> np.ndarray:
        ve = np.zeros((self.n_vertices, 4), dtype=np.int64)
        for y in range(self.Ly):
            for x in range(self.Lx):
                ve[self.vertex(x, y)] = (
                    self.hedge(x, y), self.hedge(x - 1, y),
                    self.vedge(x, y), self.vedge(x, y - 1),
                )
        return ve

    @cached_property
    def edge_plaquettes(self) -> np.ndarray:
        ep = np.zeros((self.n_edges, 2), dtype=np.int64)
        for y in range(self.Ly):
            for x in range(self.Lx):
                ep[self.hedge(x, y)] = (self.vertex(x, y), self.vertex(x, y - 1))
                ep[self.vedge(x, y)] = (self.vertex(x, y), self.vertex(x - 1, y))
        return ep

    @cached_property
    def star_matrix(self) -> np.ndarray:
        """GF(2) vertex x edge incidence (rows are stars / elementary cuts)."""
        return _incidence(self.vertex_edges, self.n_edges)

    @cached_property
    def plaquette_matrix(self) -> np.ndarray:
        return _incidence(self.plaquette_edges, self.n_edges)

    @cached_property
    def cycle_basis(self) -> np.ndarray:
        """Basis of all closed primal loops: plaquettes (one dropped) + 2 logicals."""
        rows = [self.plaquette_matrix[:-1]]
        for d in ("x", "y"):
            rows.append(nontrivial_cycle(self, d, dual=False).mask[None, :])
        return np.vstack(rows)

    def describe(self) -> dict:
        return {"dims": list(self.dims), "convention-version": CONVENTION_VERSION}


@dataclass(frozen=True, eq=False)
class Torus3D:
    """Cubic lattice on a 3-torus."""

    Lx: int
    Ly: int
    Lz: int

    def __post_init__(self):
        if min(self.Lx, self.Ly, self.Lz) < 2:
            raise ValueError(f"torus dimensions must be >= 2, got {self.dims}")

    dim = 3

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.Lx, self.Ly, self.Lz)

    @property
    def n_vertices(self) -> int:
        return self.Lx * self.Ly * self.Lz

    @property
    def n_edges(self) -> int:
        return 3 * self.n_vertices

    @property
    def n_faces(self) -> int:
        return 3 * self.n_vertices

    @property
    def n_cubes(self) -> int:
        return self.n_vertices

    def vertex(self, x: int, y: int, z: int) -> int:
        return (x % self.Lx) + self.Lx * ((y % self.Ly) + self.Ly * (z % self.Lz))

    def coords(self, v: int) -> tuple[int, int, int]:
        return v % self.Lx, (v // self.Lx) % self.Ly, v // (self.Lx * self.Ly)

    def shift(self, v: int, d: int, step: int = 1) -> int:
        c = list(self.coords(v))
        c[d] += step
        return self.vertex(*c)

    def edge(self, d: int, v: int) -> int:
        return d * self.n_vertices + v

    def face(self, d: int, v: int) -> int:
        return d * self.n_vertices + v

    @cached_property
    def edge_vertices(self) -> np.ndarray:
        ev = np.zeros((self.n_edges, 2), dtype=np.int64)
        for d in range(3):
            for v in range(self.n_vertices):
                ev[self.edge(d, v)] = (v, self.shift(v, d))
        return ev

    @cached_property
    def face_edges(self) -> np.ndarray:
        fe = np.zeros((self.n_faces, 4), dtype=np.int64)
        for d in range(3):
            a, b = [k for k in range(3) if k != d]
            for v in range(self.n_vertices):
                fe[self.face(d, v)] = (
                    self.edge(a, v), self.edge(b, self.shift(v, a)),
                    self.edge(a, self.shift(v, b)), self.edge(b, v),
                )
        return fe

    @cached_property
    def edge_faces(self) -> np.ndarray:
        ef = np.zeros((self.n_edges, 4), dtype=np.int64)
        for d in range(3):
            others = [k for k in range(3) if k != d]
            for v in range(self.n_vertices):
                row = []
                for a in others:
                    b = [k for k in others if k != a][0]
                    row += [self.face(a, v), self.face(a, self.shift(v, b, -1))]
                ef[self.edge(d, v)] = row
        return ef

    @cached_property
    def cube_faces(self) -> np.ndarray:
        cf = np.zeros((self.n_cubes, 6), dtype=np.int64)
        for v in range(self.n_vertices):
            cf[v] = [f for d in range(3) for f in (self.face(d, v), self.face(d, self.shift(v, d)))]
        return cf

    @cached_property
    def cube_edges(self) -> np.ndarray:
        ce = np.zeros((self.n_cubes, 12), dtype=np.int64)
        for v in range(self.n_vertices):
            row = []
            for d in range(3):
                a, b = [k for k in range(3) if k != d]
                for ea in (0, 1):
                    for eb in (0, 1):
                        w = self.shift(self.shift(v, a, ea), b, eb)
                        row.append(self.edge(d, w))
            ce[v] = row
        return ce

    @cached_property
    def edge_cubes(self) -> np.ndarray:
        ec = np.zeros((self.n_edges, 4), dtype=np.int64)
        for d in range(3):
            a, b = [k for k in range(3) if k != d]
            for v in range(self.n_vertices):
                ec[self.edge(d, v)] = [
                    self.shift(self.shift(v, a, -ea), b, -eb) for ea in (0, 1) for eb in (0, 1)
                ]
        return ec

    @cached_property
    def vertex_edges(self) -> np.ndarray:
        ve = np.zeros((self.n_vertices, 6), dtype=np.int64)
        for v in range(self.n_vertices):
            ve[v] = [self.edge(d, w) for d in range(3) for w in (v, self.shift(v, d, -1))]
        return ve

    def planar_star(self, v: int, gamma: int) -> np.ndarray:
        """Edges at ``v`` normal to direction ``gamma`` (X-cube vertex term)."""
        return np.array([self.edge(d, w) for d in range(3) if d != gamma
                         for w in (v, self.shift(v, d, -1))], dtype=np.int64)

    @cached_property
    def star_matrix(self) -> np.ndarray:
        return _incidence(self.vertex_edges, self.n_edges)

    @cached_property
    def face_matrix(self) -> np.ndarray:
        return _incidence(self.face_edges, self.n_edges)

    @cached_property
    def cycle_basis(self) -> np.ndarray:
        """Basis of all closed primal loops (faces plus three logical loops)."""
        faces = gf2.row_basis(self.face_matrix)
        logical = [nontrivial_cycle(self, d, dual=False).mask for d in "xyz"]
        return gf2.row_basis(np.vstack([faces, *logical]))

    def describe(self) -> dict:
        return {"dims": list(self.dims), "convention-version": CONVENTION_VERSION}


# lattices are immutable, so one shared instance per size keeps derived caches warm
@lru_cache(maxsize=None)
def _torus_2d(Lx: int, Ly: int) -> Torus2D:
    return Torus2D(Lx, Ly)


@lru_cache(maxsize=None)
def _torus_3d(Lx: int, Ly: int, Lz: int) -> Torus3D:
    return Torus3D(Lx, Ly, Lz)


def build_torus_2d(Lx: int, Ly: int) -> Torus2D:
    return _torus_2d(int(Lx), int(Ly))


def build_torus_3d(Lx: int, Ly: int | None = None, Lz: int | None = None) -> Torus3D:
    Ly = Lx if Ly is None else Ly
    Lz = Lx if Lz is None else Lz
    return _torus_3d(int(Lx), int(Ly), int(Lz))


@dataclass(frozen=True)
class Cycle:
    """A set of edges with its homology data.

    ``kind`` is one of primal-loop, dual-loop, dual-membrane, primal-membrane;
    ``direction`` names the wrapped torus direction (None if contractible).
    """

    edges: tuple[int, ...]
    kind: str
    direction: str | None
    n_edges: int

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.n_edges, dtype=np.uint8)
        m[list(self.edges)] = 1
        return m

    def __len__(self) -> int:
        return len(self.edges)


_AXES = {"x": 0, "y": 1, "z": 2}


def nontrivial_cycle(lattice, direction: str, dual: bool, offset: int = 0) -> Cycle:
    """Representative non-contractible cycle through the origin.

    2d: primal loops are the x-row / y-column of edges; dual loops list the
    edges they cross.  3d: primal loops are straight lines of edges; ``dual``
    gives the membrane of edges crossing the plane normal to ``direction``.
    ``offset`` translates the cycle along the transverse coordinate.
    """
    d = _AXES[direction]
    if lattice.dim == 2:
        L = lattice
        if not dual:
            if d == 0:
                edges = [L.hedge(x, offset) for x in range(L.Lx)]
            else:
                edges = [L.vedge(offset, y) for y in range(L.Ly)]
            kind = "primal-loop"
        else:
            # a dual loop running along x crosses the vertical edges of one row
            if d == 0:
                edges = [L.vedge(x, offset) for x in range(L.Lx)]
            else:
                edges = [L.hedge(offset, y) for y in range(L.Ly)]
            kind = "dual-loop"
        return Cycle(tuple(edges), kind, direction, L.n_edges)
    L = lattice
    if d not in (0, 1, 2):
        raise ValueError(direction)
    if not dual:
        n = L.dims[d]
        start = [0, 0, 0]
        start[(d + 1) % 3] = offset
        v = L.vertex(*start)
        edges = []
        for _ in range(n):
            edges.append(L.edge(d, v))
            v = L.shift(v, d)
        return Cycle(tuple(edges), "primal-loop", direction, L.n_edges)
    edges = [L.edge(d, v) for v in range(L.n_vertices) if L.coords(v)[d] == (offset % L.dims[d])]
    return Cycle(tuple(edges), "dual-membrane", direction, L.n_edges)


def primal_membrane(lattice: Torus3D, normal: str, offset: int = 0) -> Cycle:
    """Edges parallel to ``normal`` piercing one lattice plane (the 't Hooft membrane support)."""
    d = _AXES[normal]
    edges = [lattice.edge(d, v) for v in range(lattice.n_vertices)
             if lattice.coords(v)[d] == (offset % lattice.dims[d])]
    return Cycle(tuple(edges), "primal-membrane", normal, lattice.n_edges)


@dataclass(frozen=True)
class FluxAndLogical:
    flux: np.ndarray
    logical: tuple[int, int]

    def key(self) -> tuple:
        return tuple(int(f) for f in self.flux) + tuple(self.logical)


def flux_of(config, lattice: Torus2D) -> FluxAndLogical:
    """Plaquette fluxes and the logical labels along the origin loops."""
    x = np.asarray(config, dtype=np.int64)
    flux = np.prod(x[lattice.plaquette_edges], axis=1).astype(np.int8)
    Lx = int(np.prod(x[list(nontrivial_cycle(lattice, "x", dual=False).edges)]))
    Ly = int(np.prod(x[list(nontrivial_cycle(lattice, "y", dual=False).edges)]))
    return FluxAndLogical(flux, (Lx, Ly))


def gauge_move(config, lattice, sigma) -> np.ndarray:
    """``x_e -> x_e * prod_{v in e} sigma_v``."""
    sigma = np.asarray(sigma, dtype=np.int64)
    ev = lattice.edge_vertices
    return (np.asarray(config, dtype=np.int64) * sigma[ev[:, 0]] * sigma[ev[:, 1]]).astype(np.int8)


def gauge_orbit_representative(config, lattice) -> np.ndarray:
    """Lexicographically smallest member of the vertex-gauge orbit.

    Order: edge 0 is the most significant position and +1 precedes -1.
    """
    red = _star_reducer(lattice)
    return to_signs(red.reduce(to_bits(config)))


_REDUCERS: dict = {}


def _star_reducer(lattice) -> gf2.CosetReducer:
    key = (lattice.dim, lattice.dims)
    if key not in _REDUCERS:
        _REDUCERS[key] = gf2.CosetReducer(lattice.star_matrix)
    return _REDUCERS[key]


@dataclass(frozen=True, eq=False)
class Bipartition:
    """Assignment of every edge to region A (mask 1) or B (mask 0)."""

    lattice: object
    in_a: np.ndarray = field(repr=False)

    @property
    def a_edges(self) -> np.ndarray:
        return np.nonzero(self.in_a)[0]

    @property
    def b_edges(self) -> np.ndarray:
        return np.nonzero(self.in_a == 0)[0]

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        ev = self.lattice.edge_vertices
        touch_a = np.zeros(self.lattice.n_vertices, bool)
        touch_b = np.zeros(self.lattice.n_vertices, bool)
        for e, (u, v) in enumerate(ev):
            target = touch_a if self.in_a[e] else touch_b
            target[u] = target[v] = True
        return np.nonzero(touch_a & touch_b)[0]

    @property
    def boundary_size(self) -> int:
        return int(len(self.boundary_vertices))


def bipartition_from_edges(lattice, a_edges) -> Bipartition:
    mask = np.zeros(lattice.n_edges, dtype=np.uint8)
    mask[np.asarray(list(a_edges), dtype=np.int64)] = 1
    return Bipartition(lattice, mask)


def rectangle_region(lattice, origin, extent) -> Bipartition:
    """Region A = edges with both endpoints in a box of ``extent`` lattice steps.

    The box spans ``extent[d] + 1`` vertices per direction and must leave at
    least one column of vertices outside it, so that the entangling boundary
    is contractible.
    """
    origin = tuple(origin)
    extent = tuple(extent)
    if len(origin) != lattice.dim or len(extent) != lattice.dim:
        raise ValueError("origin/extent must match lattice dimension")
    for w, L in zip(extent, lattice.dims):
        if w < 1 or w > L - 2:
            raise ValueError(f"box extent {extent} does not fit a contractible region in {lattice.dims}")
    inside = np.zeros(lattice.n_vertices, bool)
    for v in range(lattice.n_vertices):
        c = lattice.coords(v)
        inside[v] = all(((c[d] - origin[d]) % lattice.dims[d]) <= extent[d] for d in range(lattice.dim))
    ev = lattice.edge_vertices
    mask = (inside[ev[:, 0]] & inside[ev[:, 1]]).astype(np.uint8)
    return Bipartition(lattice, mask)


def region_boundary(bipartition: Bipartition) -> int:
    return bipartition.boundary_size


def is_contractible(lattice, edge_mask, dual: bool) -> bool:
    """Whether a cycle is homologically trivial.

    A dual cycle (set of crossed edges) is trivial iff it is a cut, i.e. in the
    row space of the star matrix; a primal 2d/3d loop is trivial iff it is a
    sum of plaquette/face boundaries.
    """
    if dual:
        return gf2.in_span(lattice.star_matrix, edge_mask)
    faces = lattice.plaquette_matrix if lattice.dim == 2 else lattice.face_matrix
    return gf2.in_span(faces, edge_mask)
