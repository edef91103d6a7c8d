"""Pauli strings on at most 62 qubits, stored as X/Z bitmasks.

``PauliString(x, z, phase)`` is ``phase * X^x Z^z`` with all X factors to the
left.  Qubit ``q`` is bit ``q`` of the computational-basis index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

PHASES = (1, 1j, -1, -1j)


def _mask(bits) -> int:
    if isinstance(bits, (int, np.integer)):
        return int(bits)
    return int(sum(1 << int(q) for q in bits))


@dataclass(frozen=True)
class PauliString:
    x: int
    z: int
    phase: complex = 1

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ValueError("phase must be one of +-1, +-i")

    @classmethod
    def from_support(cls, x_sites=(), z_sites=(), phase: complex = 1) -> "PauliString":
        return cls(_mask(x_sites), _mask(z_sites), phase)

    def __mul__(self, other: "PauliString") -> "PauliString":
        # X^a Z^b X^c Z^d = (-1)^{|b & c|} X^{a^c} Z^{b^d}
        sign = -1 if bin(self.z & other.x).count("1") % 2 else 1
        return PauliString(self.x ^ other.x, self.z ^ other.z, _norm(self.phase * other.phase * sign))

    def commutes(self, other: "PauliString") -> bool:
        return (bin(self.x & other.z).count("1") + bin(self.z & other.x).count("1")) % 2 == 0

    def __neg__(self) -> "PauliString":
        return PauliString(self.x, self.z, _norm(-self.phase))

    def matrix(self, n: int) -> sp.csr_matrix:
        """Sparse ``2^n x 2^n`` matrix."""
        dim = 1 << n
        cols = np.arange(dim, dtype=np.int64)
        zbits = np.bitwise_count(cols & self.z) & 1
        data = self.phase * (1 - 2 * zbits.astype(np.float64))
        return sp.csr_matrix((data.astype(complex), (cols ^ self.x, cols)), shape=(dim, dim))

    def apply(self, vec: np.ndarray) -> np.ndarray:
        dim = len(vec)
        idx = np.arange(dim, dtype=np.int64)
        zbits = np.bitwise_count(idx & self.z) & 1
        out = np.empty_like(vec, dtype=complex)
        out[idx ^ self.x] = self.phase * (1.0 - 2.0 * zbits) * vec
        return out

    def conjugate(self, rho: np.ndarray) -> np.ndarray:
        """``P rho P^dagger`` as a signed permutation; the global phase cancels."""
        idx = np.arange(rho.shape[0], dtype=np.int64) ^ self.x
        sign = 1.0 - 2.0 * (np.bitwise_count(idx & self.z) & 1)
        return sign[:, None] * rho[np.ix_(idx, idx)] * sign[None, :]


def _norm(ph: complex) -> complex:
    for p in PHASES:
        if abs(ph - p) < 1e-12:
            return p
    raise ValueError(f"invalid phase {ph}")


def x_string(sites) -> PauliString:
    return PauliString.from_support(x_sites=sites)


def z_string(sites) -> PauliString:
    return PauliString.from_support(z_sites=sites)
