"""Column transfer matrices for the periodic 2d random-bond Ising model.

Columns run along x and hold ``Ly`` spins; bit ``y`` of a state index is the
spin at height ``y`` (bit 1 = spin -1).  A batch of samples is propagated
together.  Because every column operator commutes with the global flip ``P``,
only start states with spin 0 up are needed, and ``Tr(M)`` and ``Tr(M P)``
(the partition function twisted along the seam between the last and first
column) come out of the same pass.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from ..lattice import Torus2D, nontrivial_cycle
from .exact import LogPartition
from .models import ISING2D, DisorderSample

MAX_WIDTH = 16


def seam_cycle(lattice: Torus2D):
    """Dual loop along y crossing the horizontal bonds of the last column."""
    return nontrivial_cycle(lattice, "y", dual=True, offset=lattice.Lx - 1)


def _check(lattice: Torus2D):
    if lattice.Ly > MAX_WIDTH:
        raise ValueError(f"transfer width {lattice.Ly} exceeds {MAX_WIDTH}")


def _bond_tables(lattice: Torus2D, signs: np.ndarray):
    """Per-column horizontal (B, Ly) and vertical (B, Ly) coupling signs."""
    Lx, Ly = lattice.Lx, lattice.Ly
    B = signs.shape[0]
    h = signs[:, : Lx * Ly].reshape(B, Ly, Lx)
    v = signs[:, Lx * Ly :].reshape(B, Ly, Lx)
    return h.transpose(0, 2, 1).astype(np.float64), v.transpose(0, 2, 1).astype(np.float64)


def _column_alignment(Ly: int, vsigns: np.ndarray) -> np.ndarray:
    """(B, 2**Ly) sum of vertical bond alignments within one column."""
    states = np.arange(1 << Ly)
    s = 1 - 2 * ((states[:, None] >> np.arange(Ly)) & 1)
    pair = s * np.roll(s, -1, axis=1)
    return vsigns @ pair.T.astype(np.float64)


def transfer_pair_batch(lattice: Torus2D, signs, beta: float):
    """``(log Z, log Z_twisted)`` arrays for a batch of sign arrays.

    The twist flips every horizontal bond of the last column.
    """
    _check(lattice)
    if math.isinf(beta):
        return _tropical_pair_batch(lattice, signs)
    signs = np.atleast_2d(np.asarray(signs, dtype=np.int8))
    hs, vs = _bond_tables(lattice, signs)
    states = np.arange(1 << lattice.Ly)
    spins = (1 - 2 * ((states[:, None] >> np.arange(lattice.Ly)) & 1)).astype(np.float64)
    return _pair_kernel(hs, vs, spins, float(beta))


@numba.njit(cache=True)
def _pair_kernel(hs, vs, spins, beta):
    B, Lx, Ly = hs.shape
    S = 1 << Ly
    R = S // 2
    out_z = np.empty(B)
    out_t = np.empty(B)
    V = np.empty((R, S))
    diag = np.empty(S)
    for b in range(B):
        V[:, :] = 0.0
        for r in range(R):
            V[r, 2 * r] = 1.0
        logscale = 0.0
        for x in range(Lx):
            for s in range(S):
                a = 0.0
                for y in range(Ly):
                    a += vs[b, x, y] * spins[s, y] * spins[s, (y + 1) % Ly]
                diag[s] = np.exp(beta * (a - Ly))
            for r in range(R):
                for s in range(S):
                    V[r, s] *= diag[s]
            for y in range(Ly):
                same = np.exp(beta * hs[b, x, y])
                diff = np.exp(-beta * hs[b, x, y])
                bit = 1 << y
                for r in range(R):
                    for s in range(S):
                        if s & bit == 0:
                            u = V[r, s]
                            w = V[r, s | bit]
                            V[r, s] = same * u + diff * w
                            V[r, s | bit] = diff * u + same * w
            m = 0.0
            for r in range(R):
                for s in range(S):
                    if V[r, s] > m:
                        m = V[r, s]
            for r in range(R):
                for s in range(S):
                    V[r, s] /= m
            logscale += np.log(m)
        direct = 0.0
        flipped = 0.0
        for r in range(R):
            direct += V[r, 2 * r]
            flipped += V[r, (2 * r) ^ (S - 1)]
        base = logscale + beta * Ly * Lx + np.log(2.0)
        out_z[b] = base + np.log(direct)
        out_t[b] = base + np.log(flipped)
    return out_z, out_t


def _tropical_pair_batch(lattice: Torus2D, signs):
    """Ground-state version: (max alignment, log count) via max-plus algebra."""
    signs = np.atleast_2d(np.asarray(signs, dtype=np.int8))
    Lx, Ly = lattice.Lx, lattice.Ly
    S = 1 << Ly
    B = signs.shape[0]
    hs, vs = _bond_tables(lattice, signs)
    starts = np.arange(S // 2) * 2
    E = np.full((B, S // 2, S), -np.inf)
    E[:, np.arange(S // 2), starts] = 0.0
    C = np.zeros((B, S // 2, S))
    for x in range(Lx):
        E = E + _column_alignment(Ly, vs[:, x])[:, None, :]
        for y in range(Ly):
            E, C = _tropical_flip(E, C, y, hs[:, x, y])
    rows = np.arange(S // 2)
    out = []
    for target in (starts, starts ^ (S - 1)):
        e = E[:, rows, target]
        c = C[:, rows, target]
        g = e.max(axis=1)
        sel = e == g[:, None]
        logc = np.log(np.where(sel, np.exp(c - c.max(axis=1, keepdims=True)), 0).sum(axis=1)) + c.max(axis=1)
        out.append((g, logc + math.log(2.0)))
    return out[0], out[1]


def _tropical_flip(E, C, y, J):
    B, R, S = E.shape
    e = E.reshape(B, R, S >> (y + 1), 2, 1 << y)
    c = C.reshape(B, R, S >> (y + 1), 2, 1 << y)
    Jb = J[:, None, None, None]
    e0, e1, c0, c1 = e[:, :, :, 0, :], e[:, :, :, 1, :], c[:, :, :, 0, :], c[:, :, :, 1, :]
    ne = np.empty_like(e)
    nc = np.empty_like(c)
    for out_bit, (wa, wb) in enumerate(((Jb, -Jb), (-Jb, Jb))):
        ea, eb = e0 + wa, e1 + wb
        m = np.maximum(ea, eb)
        with np.errstate(invalid="ignore"):
            ca = np.where(ea == m, c0, -np.inf)
            cb = np.where(eb == m, c1, -np.inf)
        top = np.maximum(ca, cb)
        top_safe = np.where(np.isfinite(top), top, 0.0)
        with np.errstate(divide="ignore"):
            nc[:, :, :, out_bit, :] = top_safe + np.log(np.exp(ca - top_safe) + np.exp(cb - top_safe))
        ne[:, :, :, out_bit, :] = m
    nc = np.where(np.isfinite(ne), nc, 0.0)
    return ne.reshape(B, R, S), nc.reshape(B, R, S)


def transfer_logZ_2d(sample: DisorderSample, twisted: bool = False) -> LogPartition:
    """Exact ``log Z`` of an Ising2D sample via column transfer matrices."""
    if sample.model.kind != ISING2D:
        raise ValueError("transfer backend supports Ising2D only")
    lat = sample.model.lattice
    pair = transfer_pair_batch(lat, sample.signs[None, :], sample.beta)
    return _as_logpartition(pair, 1 if twisted else 0, sample.beta)


def transfer_pair(sample: DisorderSample) -> tuple[LogPartition, LogPartition]:
    """Untwisted and seam-twisted ``log Z`` from one pass."""
    if sample.model.kind != ISING2D:
        raise ValueError("transfer backend supports Ising2D only")
    lat = sample.model.lattice
    pair = transfer_pair_batch(lat, sample.signs[None, :], sample.beta)
    return _as_logpartition(pair, 0, sample.beta), _as_logpartition(pair, 1, sample.beta)


def _as_logpartition(pair, which, beta) -> LogPartition:
    if math.isinf(beta):
        g, c = pair[which]
        return LogPartition(math.inf, beta, float(g[0]), float(c[0]), "transfer")
    return LogPartition(float(pair[which][0]), float(beta), method="transfer")


def seam_dF_batch(lattice: Torus2D, signs, beta: float) -> np.ndarray:
    """``-log(Z_twisted / Z)`` for a batch, twist along :func:`seam_cycle`."""
    a, b = transfer_pair_batch(lattice, signs, beta)
    if math.isinf(beta):
        (g0, c0), (g1, c1) = a, b
        out = np.where(g1 < g0, np.inf, -(c1 - c0))
        return np.where(g1 > g0, -np.inf, out)
    return a - b
