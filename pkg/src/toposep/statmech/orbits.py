"""Partition functions of every gauge orbit of term-sign patterns.

Orbits are cosets ``x + Im(A)``; their keys are the packed non-pivot bits of
the canonical representative (see :class:`toposep.gf2.CosetReducer`), so
``key(x ^ c) = key(x) ^ key(c)``.  At ``beta = inf`` the stored log weights
are relative: ``log degeneracy`` on the orbits of maximal alignment and
``-inf`` elsewhere, which is all any ratio of partition functions needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .. import gf2
from .exact import CosetTable, LOG2, coset_table
from .models import ISING2D, TermModel
from .transfer import transfer_pair_batch

CHUNK = 4096


@dataclass(frozen=True, eq=False)
class OrbitTable:
    model: TermModel
    beta: float
    reducer: gf2.CosetReducer = field(repr=False)
    key_table: np.ndarray = field(repr=False)
    log_w: np.ndarray = field(repr=False)

    @property
    def n_orbits(self) -> int:
        return len(self.log_w)

    @property
    def orbit_size_log(self) -> float:
        return self.reducer.dim * LOG2

    def keys(self, packed) -> np.ndarray:
        return gf2.linear_image_keys(np.asarray(packed, dtype=np.int64), self.key_table)

    def key(self, bits) -> int:
        return int(self.keys(np.array([gf2.pack(bits)]))[0])

    def representative(self, key: int) -> np.ndarray:
        r = np.zeros(self.model.n_terms, dtype=np.uint8)
        for j, c in enumerate(self.reducer.free):
            r[c] = (key >> j) & 1
        return r

    def all_config_log_w(self) -> np.ndarray:
        """``log Z_x`` for every term-sign pattern ``x`` (index = packed bits)."""
        n = self.model.n_terms
        if n > 26:
            raise ValueError("too many configurations to list")
        return self.log_w[self.keys(np.arange(1 << n, dtype=np.int64))]


def _from_cosets(ct: CosetTable, beta: float) -> np.ndarray:
    if math.isinf(beta):
        g, logdeg = ct.ground()
        return np.where(g == g.max(), logdeg, -np.inf)
    return ct.log_z(beta)


def _from_transfer(model: TermModel, red: gf2.CosetReducer, beta: float) -> np.ndarray:
    lat = model.lattice
    nfree = len(red.free)
    keys = np.arange(1 << nfree, dtype=np.int64)
    out = np.empty(len(keys))
    ground = np.empty(len(keys))
    free = np.array(red.free)
    for start in range(0, len(keys), CHUNK):
        k = keys[start:start + CHUNK]
        bits = ((k[:, None] >> np.arange(nfree)) & 1).astype(np.int8)
        signs = np.ones((len(k), model.n_terms), dtype=np.int8)
        signs[:, free] = 1 - 2 * bits
        z, _ = transfer_pair_batch(lat, signs, beta)
        if math.isinf(beta):
            ground[start:start + CHUNK], out[start:start + CHUNK] = z
        else:
            out[start:start + CHUNK] = z
    if math.isinf(beta):
        return np.where(ground == ground.max(), out, -np.inf)
    return out


@lru_cache(maxsize=32)
def orbit_table(model: TermModel, beta: float) -> OrbitTable:
    """Log weights of all orbits: coset enumeration or batched transfer."""
    red = gf2.CosetReducer(model.incidence.T, model.n_terms)
    table = red.key_table()
    if model.n_terms <= CosetTable.MAX_TERMS:
        log_w = _from_cosets(coset_table(model), beta)
    elif model.kind == ISING2D and len(red.free) <= 20:
        log_w = _from_transfer(model, red, beta)
    else:
        raise ValueError("no exact orbit backend for this model size")
    return OrbitTable(model, float(beta), red, table, log_w)
