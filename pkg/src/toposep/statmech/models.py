"""Disordered classical spin models with product-of-spins interactions.

Every model here has the form ``weight(s) = exp(beta * sum_t x_t * prod_{i in t} s_i)``
with one sign ``x_t`` per term.  Terms are indexed by lattice edges for all
built-in kinds, so boundary twists are edge sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np

from .. import gf2
from ..couplings import nishimori_beta
from ..lattice import Torus2D, Torus3D, to_bits

ISING2D = "Ising2D"
DUAL_ISING2D = "DualIsing2D"
ISING3D = "Ising3D"
GAUGE3D = "GaugeIsing3D"
PLAQUETTE3D = "PlaquetteIsing3D"

KINDS = (ISING2D, DUAL_ISING2D, ISING3D, GAUGE3D, PLAQUETTE3D)


@dataclass(frozen=True, eq=False)
class TermModel:
    """Spin/term incidence of a model on a lattice."""

    kind: str
    lattice: object
    n_spins: int
    term_spins: np.ndarray = field(repr=False)

    @property
    def n_terms(self) -> int:
        return int(self.term_spins.shape[0])

    @cached_property
    def incidence(self) -> np.ndarray:
        """GF(2) term x spin matrix."""
        A = np.zeros((self.n_terms, self.n_spins), dtype=np.uint8)
        for t, row in enumerate(self.term_spins):
            for i in row:
                A[t, i] ^= 1
        return A

    @cached_property
    def spin_terms(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR (offsets, term indices) of the terms touching each spin."""
        lists = [[] for _ in range(self.n_spins)]
        for t, row in enumerate(self.term_spins):
            for i in row:
                lists[i].append(t)
        offsets = np.zeros(self.n_spins + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(x) for x in lists])
        flat = np.array([t for x in lists for t in x], dtype=np.int64)
        return offsets, flat

    @cached_property
    def rank(self) -> int:
        return gf2.rank(self.incidence)

    def gauge_move(self, signs, flips) -> np.ndarray:
        """Sign move that leaves log Z invariant; ``flips`` is a 0/1 spin mask."""
        mask = np.asarray(flips, dtype=np.int64) & 1
        parity = (self.incidence.astype(np.int64) @ mask) % 2
        out = np.asarray(signs, dtype=np.int8).copy()
        out[parity == 1] *= -1
        return out

    def gauge_move_sites(self, signs, sites) -> np.ndarray:
        mask = np.zeros(self.n_spins, dtype=np.int64)
        mask[np.asarray(list(sites), dtype=np.int64)] = 1
        return self.gauge_move(signs, mask)


@lru_cache(maxsize=64)
def build_model(kind: str, lattice) -> TermModel:
    if kind == ISING2D:
        _need(lattice, Torus2D, kind)
        return TermModel(kind, lattice, lattice.n_vertices, lattice.edge_vertices)
    if kind == DUAL_ISING2D:
        _need(lattice, Torus2D, kind)
        return TermModel(kind, lattice, lattice.n_plaquettes, lattice.edge_plaquettes)
    if kind == ISING3D:
        _need(lattice, Torus3D, kind)
        return TermModel(kind, lattice, lattice.n_vertices, lattice.edge_vertices)
    if kind == GAUGE3D:
        _need(lattice, Torus3D, kind)
        return TermModel(kind, lattice, lattice.n_faces, lattice.edge_faces)
    if kind == PLAQUETTE3D:
        _need(lattice, Torus3D, kind)
        return TermModel(kind, lattice, lattice.n_cubes, lattice.edge_cubes)
    raise ValueError(f"unknown model kind {kind!r}")


def _need(lattice, cls, kind):
    if not isinstance(lattice, cls):
        raise TypeError(f"{kind} needs a {cls.__name__}")


@dataclass(frozen=True, eq=False)
class DisorderSample:
    """One sign per term plus the inverse temperature used with it.

    ``p`` and ``seed`` record provenance; ``beta`` may be ``inf``.
    """

    model: TermModel
    signs: np.ndarray = field(repr=False)
    beta: float
    p: float | None = None
    seed: int | None = None

    def __post_init__(self):
        s = np.asarray(self.signs)
        if s.shape != (self.model.n_terms,):
            raise ValueError("one sign per term required")
        if not np.all(np.abs(s) == 1):
            raise ValueError("signs must be +-1")
        if not (self.beta >= 0):
            raise ValueError("beta must be >= 0")

    @property
    def bits(self) -> np.ndarray:
        return to_bits(self.signs)

    def with_signs(self, signs) -> "DisorderSample":
        return replace(self, signs=np.asarray(signs, dtype=np.int8))

    def with_beta(self, beta: float) -> "DisorderSample":
        return replace(self, beta=float(beta))

    def twisted(self, cycle) -> "DisorderSample":
        """Flip the term signs on the edges of ``cycle``."""
        edges = cycle.edges if hasattr(cycle, "edges") else cycle
        s = np.asarray(self.signs, dtype=np.int8).copy()
        s[np.asarray(list(edges), dtype=np.int64)] *= -1
        return self.with_signs(s)


def nishimori_signs(n_terms: int, p: float, rng: np.random.Generator) -> np.ndarray:
    return np.where(rng.random(n_terms) < p, -1, 1).astype(np.int8)


def sample_nishimori(model: TermModel, p: float, seed=None) -> DisorderSample:
    """Signs iid ``-1`` with probability ``p``; ``beta`` on the Nishimori line.

    ``seed`` may be an int, a ``numpy.random.SeedSequence`` or a Generator.
    """
    beta = nishimori_beta(p)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    signs = nishimori_signs(model.n_terms, p, rng)
    stored = seed if isinstance(seed, (int, np.integer)) else None
    return DisorderSample(model, signs, beta, float(p), stored)


def uniform_sample(model: TermModel, beta: float, sign: int = 1) -> DisorderSample:
    return DisorderSample(model, np.full(model.n_terms, sign, dtype=np.int8), float(beta))


def is_infinite(beta: float) -> bool:
    return math.isinf(beta)
