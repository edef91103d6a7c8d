"""Linear algebra over GF(2).

Vectors are numpy ``uint8`` arrays of 0/1; a bit value 1 encodes a sign -1.
Matrices store one vector per row.  Small vectors (at most 62 bits) can also be
packed into python/numpy integers with bit ``i`` holding component ``i``.
"""

from __future__ import annotations

import numpy as np


def as_bits(M) -> np.ndarray:
    A = np.asarray(M, dtype=np.uint8) & 1
    return np.atleast_2d(A) if A.ndim else A.reshape(1, 1)


def rref(M) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form with leftmost pivots.

    Returns the nonzero rows of the reduced matrix and the pivot columns.
    """
    A = as_bits(M).copy()
    rows, cols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(A[r:, c])[0]
        if hits.size == 0:
            continue
        k = r + hits[0]
        if k != r:
            A[[r, k]] = A[[k, r]]
        others = np.nonzero(A[:, c])[0]
        others = others[others != r]
        if others.size:
            A[others] ^= A[r]
        pivots.append(c)
        r += 1
    return A[:r], pivots


def rank(M) -> int:
    A = as_bits(M)
    if A.size == 0:
        return 0
    return len(rref(A)[1])


def nullspace(M) -> np.ndarray:
    """Basis (rows) of ``{x : M x = 0}``."""
    A = as_bits(M)
    n = A.shape[1]
    R, pivots = rref(A)
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, p in zip(R, pivots):
            if row[f]:
                basis[i, p] = 1
    return basis


def row_basis(M) -> np.ndarray:
    A = as_bits(M)
    if A.size == 0:
        return A.reshape(0, A.shape[-1] if A.ndim == 2 else 0)
    return rref(A)[0]


def solve(M, b) -> np.ndarray | None:
    """One solution of ``M x = b`` or None when inconsistent."""
    A = as_bits(M)
    b = np.asarray(b, dtype=np.uint8).reshape(-1, 1) & 1
    aug = np.hstack([A, b])
    R, pivots = rref(aug)
    n = A.shape[1]
    if n in pivots:
        return None
    x = np.zeros(n, dtype=np.uint8)
    for row, p in zip(R, pivots):
        x[p] = row[n]
    return x


def in_span(basis, v) -> bool:
    B = as_bits(basis)
    v = np.asarray(v, dtype=np.uint8) & 1
    if B.size == 0:
        return not v.any()
    return rank(np.vstack([B, v])) == rank(B)


class CosetReducer:
    """Canonical representatives of cosets ``v + span(generators)``.

    The representative is zero on every pivot column of the reduced generator
    matrix, which makes it the lexicographically smallest coset member when
    component 0 is the most significant position and 0 < 1.
    """

    def __init__(self, generators, n: int | None = None):
        G = as_bits(generators) if np.size(generators) else np.zeros((0, n or 0), np.uint8)
        self.n = G.shape[1] if n is None else n
        if G.shape[0]:
            self.rows, self.pivots = rref(G)
        else:
            self.rows, self.pivots = np.zeros((0, self.n), np.uint8), []
        self.dim = len(self.pivots)
        pivot_set = set(self.pivots)
        self.free = [c for c in range(self.n) if c not in pivot_set]

    def reduce(self, v) -> np.ndarray:
        out = np.asarray(v, dtype=np.uint8).copy() & 1
        for row, p in zip(self.rows, self.pivots):
            if out[p]:
                out ^= row
        return out

    def reduce_many(self, V) -> np.ndarray:
        out = np.asarray(V, dtype=np.uint8).copy() & 1
        for row, p in zip(self.rows, self.pivots):
            hit = out[:, p].astype(bool)
            out[hit] ^= row
        return out

    def key_table(self) -> np.ndarray:
        """Integer key of ``reduce(e_i)`` for every unit vector.

        Keys pack the free (non-pivot) components; ``reduce`` is linear so the
        key of any packed vector is the XOR of its bits' keys.
        """
        if len(self.free) > 62:
            raise ValueError("too many free components to pack")
        table = np.zeros(self.n, dtype=np.int64)
        for i in range(self.n):
            e = np.zeros(self.n, np.uint8)
            e[i] = 1
            r = self.reduce(e)
            table[i] = pack(r[self.free])
        return table

    def contains(self, v) -> bool:
        return not self.reduce(v).any()


def pack(bits) -> int:
    bits = np.asarray(bits, dtype=np.uint8)
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def unpack(value: int, n: int) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(n)], dtype=np.uint8)


def pack_rows(M) -> np.ndarray:
    A = as_bits(M).astype(np.int64)
    if A.shape[1] > 62:
        raise ValueError("rows longer than 62 bits cannot be packed")
    weights = np.left_shift(np.int64(1), np.arange(A.shape[1], dtype=np.int64))
    return A @ weights


def linear_image_keys(codes: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Apply a packed linear map: XOR of ``table[i]`` over set bits ``i``.

    Works bytewise with 256-entry lookup tables so the cost is a handful of
    gathers per input word.
    """
    codes = np.asarray(codes, dtype=np.int64)
    n = len(table)
    out = np.zeros(codes.shape, dtype=np.int64)
    for start in range(0, n, 8):
        chunk = table[start:start + 8]
        lut = np.zeros(256, dtype=np.int64)
        for b in range(1, 256):
            acc = 0
            for j in range(len(chunk)):
                if (b >> j) & 1:
                    acc ^= int(chunk[j])
            lut[b] = acc
        out ^= lut[(codes >> start) & 0xFF]
    return out


def span_elements(basis) -> np.ndarray:
    """All ``2**k`` elements of the span of ``k`` independent rows (packed)."""
    packed = pack_rows(basis) if np.size(basis) else np.zeros(0, np.int64)
    elems = np.zeros(1, dtype=np.int64)
    for g in packed:
        elems = np.concatenate([elems, elems ^ g])
    return elems


def popcount(a) -> np.ndarray:
    return np.bitwise_count(np.asarray(a, dtype=np.int64)).astype(np.int64)
