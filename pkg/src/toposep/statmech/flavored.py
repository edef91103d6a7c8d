"""Multi-flavor replica Ising models behind the negativity moments.

A decohered state of the form ``2^-N sum_{a in G_X, c in G_Z} w(a) X_a Z_c``
has moments ``tr[(rho^{T_A})^m]`` equal (up to known constants) to a cyclic
chain of ``m`` group elements ``g^s in G_X`` weighted by ``prod_s w(g^s + g^{s+1})``,
with the partial transpose imposing ``g^s = g^{s+2}`` modulo the subgroup
``G_AB`` of elements that split into a region-A part and a region-B part that
are both in ``G_X``.

Writing ``g = sigma R`` for a generator matrix ``R`` (stars, or plaquettes plus
logical loops) turns ``w = exp(-K|.|)`` chains into Ising models with
four-spin couplings ``(K/2) tau^s_e tau^{s+1}_e``, ``tau_e = prod_{i in e} s_i``.

Two targets are provided:

``rho-3d``
    3d toric code under phase flips; ``G_X`` = stars, ``G_Z`` = all cycles,
    kernel ``exp(-K|a|)``, ``2n`` flavors.
``rho2-2d``
    ``rho^2 / tr rho^2`` for the 2d toric code; ``G_X`` = all cycles,
    ``G_Z`` = stars, kernel ``(k * k)(a)`` with ``k = exp(-K|a|)``.  As a spin
    model this is a ``4n``-flavor chain where only the odd flavors are tied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import logsumexp

from .. import gf2
from ..lattice import Bipartition, nontrivial_cycle
from .exact import BudgetError, LogPartition, exact_logZ
from .models import DisorderSample

RHO_3D = "rho-3d"
RHO2_2D = "rho2-2d"
TARGETS = (RHO_3D, RHO2_2D)
SPIN_BUDGET = 24
LOG2 = math.log(2.0)


def generator_matrix(lattice, target: str) -> np.ndarray:
    """Rows generate ``G_X`` (possibly overcomplete)."""
    if target == RHO_3D:
        if lattice.dim != 3:
            raise ValueError("rho-3d needs a 3d lattice")
        return lattice.star_matrix
    if target == RHO2_2D:
        if lattice.dim != 2:
            raise ValueError("rho2-2d needs a 2d lattice")
        logical = [nontrivial_cycle(lattice, d, dual=False).mask for d in ("x", "y")]
        return np.vstack([lattice.plaquette_matrix, *logical])
    raise ValueError(f"unknown target {target!r}")


def gz_dimension(lattice, target: str) -> int:
    """log2 of ``|G_Z|``."""
    if target == RHO_3D:
        return lattice.n_edges - lattice.n_vertices + 1
    return lattice.n_vertices - 1


def split_subgroup_checks(R: np.ndarray, in_a) -> np.ndarray:
    """Matrix ``C`` with ``sigma C = 0`` iff ``P_A(sigma R)`` lies in ``G_X``."""
    checks = gf2.nullspace(R)  # rows h with R h = 0: parity checks of G_X
    mask = np.asarray(in_a, dtype=np.uint8)
    return (R.astype(np.int64) * mask[None, :]) @ checks.T.astype(np.int64) % 2


def split_subgroup_basis(R: np.ndarray, in_a) -> np.ndarray:
    """Basis (edge masks) of ``G_AB``."""
    C = split_subgroup_checks(R, in_a).astype(np.uint8)
    sig = gf2.nullspace(C.T) if C.size else np.eye(R.shape[0], dtype=np.uint8)
    if sig.shape[0] == 0:
        return np.zeros((0, R.shape[1]), np.uint8)
    return gf2.row_basis((sig.astype(np.int64) @ R.astype(np.int64)) % 2)


def chain_length(target: str, n2: int) -> int:
    return 2 * n2 if target == RHO2_2D else n2


def tied_pairs(target: str, n2: int, constrained: bool) -> list[tuple[int, int]]:
    """Flavor pairs forced to agree modulo ``G_AB``."""
    if not constrained:
        return []
    if target == RHO_3D:
        return [(s, s + 2) for s in range(n2 - 2)]
    M = 2 * n2
    return [(s, s + 4) for s in range(0, M - 4, 2)]


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Terms are arbitrary GF(2) linear forms of free binary variables."""

    incidence: np.ndarray = field(repr=False)
    kind: str = "linear"

    @property
    def n_spins(self) -> int:
        return int(self.incidence.shape[1])

    @property
    def n_terms(self) -> int:
        return int(self.incidence.shape[0])

    @cached_property
    def rank(self) -> int:
        return gf2.rank(self.incidence)


@dataclass(frozen=True, eq=False)
class FlavoredModel:
    """A flavored Ising model together with the raw spin count it represents.

    ``linear`` acts on a basis of the allowed spin configurations; each basis
    configuration corresponds to exactly one raw configuration, so sums over
    ``linear`` equal sums over the constrained raw spins.
    """

    target: str
    n2: int
    n_flavors: int
    n_generators: int
    constrained: bool
    linear: LinearModel

    @property
    def raw_spins(self) -> int:
        return self.n_flavors * self.n_generators


@lru_cache(maxsize=64)
def _flavored(lattice, target, n2, a_key):
    R = generator_matrix(lattice, target).astype(np.int64)
    G, E = R.shape
    M = chain_length(target, n2)
    nv = M * G
    A = np.zeros((M * E, nv), dtype=np.uint8)
    for s in range(M):
        t = (s + 1) % M
        for e in range(E):
            row = s * E + e
            A[row, s * G:(s + 1) * G] ^= R[:, e].astype(np.uint8)
            A[row, t * G:(t + 1) * G] ^= R[:, e].astype(np.uint8)
    constrained = a_key is not None
    if constrained:
        in_a = np.array(a_key, dtype=np.uint8)
        C = split_subgroup_checks(R, in_a).astype(np.uint8)
        rows = []
        for s, t in tied_pairs(target, n2, True):
            for col in C.T:
                r = np.zeros(nv, np.uint8)
                r[s * G:(s + 1) * G] = col
                r[t * G:(t + 1) * G] ^= col
                rows.append(r)
        if rows:
            basis = gf2.nullspace(np.array(rows))
            A = (A.astype(np.int64) @ basis.T.astype(np.int64) % 2).astype(np.uint8)
    return FlavoredModel(target, n2, M, G, constrained, LinearModel(A))


def flavored_model(lattice, target: str, n2: int, bipartition: Bipartition | None = None) -> FlavoredModel:
    if n2 < 2 or n2 % 2:
        raise ValueError("2n must be an even integer >= 2")
    key = None if bipartition is None else tuple(int(b) for b in bipartition.in_a)
    return _flavored(lattice, target, n2, key)


def flavored_logZ(lattice, target: str, n2: int, K: float,
                  bipartition: Bipartition | None = None) -> LogPartition:
    """``log sum exp(-H)`` with ``-H = (K/2) sum_{s,e} tau^s_e tau^{s+1}_e``.

    Sums run over all raw flavor spins, restricted to the constrained set when
    a bipartition is given.  Exact enumeration; raw spin count <= 24.
    """
    fm = flavored_model(lattice, target, n2, bipartition)
    if fm.raw_spins > SPIN_BUDGET:
        raise BudgetError(f"{fm.raw_spins} flavor spins exceed the budget {SPIN_BUDGET}")
    lin = fm.linear
    sample = DisorderSample(lin, np.ones(lin.n_terms, dtype=np.int8), 0.5 * K)
    return exact_logZ(sample)


# --- group (Fourier) backend -------------------------------------------------

def _wht(v: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform along the last axis (length a power of 2)."""
    v = np.array(v, dtype=np.float64, copy=True)
    n = v.shape[-1]
    h = 1
    while h < n:
        w = v.reshape(v.shape[:-1] + (n // (2 * h), 2, h))
        a = w[..., 0, :].copy()
        b = w[..., 1, :]
        w[..., 0, :] = a + b
        w[..., 1, :] = a - b
        h *= 2
    return v


@dataclass(frozen=True)
class GroupData:
    basis: np.ndarray
    weights: np.ndarray  # |a| for every element, indexed by coordinates
    sub_coords: np.ndarray | None  # coordinates of G_AB basis in G coordinates


def _coords(basis, vectors):
    """Coordinates of ``vectors`` (rows) in the row basis ``basis``."""
    out = []
    for v in vectors:
        x = gf2.solve(basis.T, v)
        if x is None:
            raise ValueError("vector outside the group")
        out.append(x)
    return np.array(out, dtype=np.uint8).reshape(len(vectors), basis.shape[0])


def _group(lattice, target, bipartition):
    R = generator_matrix(lattice, target)
    basis = gf2.row_basis(R)
    d = basis.shape[0]
    if d > 22:
        raise BudgetError(f"group of dimension {d} too large for the Fourier backend")
    if lattice.n_edges > 62:
        raise BudgetError("group backend packs edge masks into 62 bits")
    elems = gf2.span_elements(basis)  # element index = coordinate bits (little endian)
    weights = gf2.popcount(elems)
    sub = None
    if bipartition is not None:
        H = split_subgroup_basis(R, bipartition.in_a)
        sub = _coords(basis, H) if H.shape[0] else np.zeros((0, d), np.uint8)
    return GroupData(basis, weights, sub)


def kernel_log(weights: np.ndarray, K: float, target: str) -> np.ndarray:
    """``log w(a)`` over group coordinates, normalized so ``w(0) = 1``."""
    if math.isinf(K):
        lw = np.where(weights == 0, 0.0, -np.inf)
    else:
        lw = -K * weights.astype(np.float64)
    if target == RHO2_2D:
        lw = _log_self_convolution(lw)
        lw = lw - lw[0]
    return lw


def _log_self_convolution(lw):
    m = lw.max()
    w = np.exp(lw - m)
    conv = _wht(_wht(w) ** 2) / len(w)
    conv = np.maximum(conv, 0.0)
    with np.errstate(divide="ignore"):
        return np.log(conv) + 2 * m


def group_chain_log_sum(lattice, target: str, n2: int, K: float,
                        bipartition: Bipartition | None = None) -> float:
    """``log sum_{g^1..g^{2n}} prod_s w(g^s + g^{s+1})``, constrained if A given."""
    gd = _group(lattice, target, bipartition)
    lw = kernel_log(gd.weights, K, target)
    M = n2
    d = gd.basis.shape[0]
    if bipartition is None:
        # cyclic chain on G: trace of the M-th power of a convolution
        return _log_sum_powers(lw, M)
    Hc = gd.sub_coords
    h = Hc.shape[0]
    hb = gf2.span_elements(Hc) if h else np.zeros(1, np.int64)
    # coset representatives of G / G_AB: supported on the non-pivot coordinates
    red = gf2.CosetReducer(Hc, d) if h else None
    free = red.free if h else list(range(d))
    reps = np.zeros(1, dtype=np.int64)
    for c in free:
        reps = np.concatenate([reps, reps ^ (1 << c)])
    # lambda_chi(r) = sum_{u in G_AB} w(r + u) chi(u); with lambda_chi(r + u) =
    # chi(u) lambda_chi(r) and M even the chain sum is
    # |G| / |G_AB| * sum_r sum_chi lambda_chi(r)^M
    total = []
    for start in range(0, len(reps), max(1, (1 << 20) // len(hb))):
        r = reps[start:start + max(1, (1 << 20) // len(hb))]
        vals = lw[r[:, None] ^ hb[None, :]]
        top = vals.max(axis=1, keepdims=True)
        top = np.where(np.isfinite(top), top, 0.0)
        lam = _wht(np.exp(vals - top))
        with np.errstate(divide="ignore"):
            total.append((np.log(np.abs(lam)) * M + M * top).ravel())
    return (d - h) * LOG2 + float(logsumexp(np.concatenate(total)))


def _log_sum_powers(lw, M):
    m = lw[np.isfinite(lw)].max()
    hat = _wht(np.exp(lw - m))
    total = (hat ** M).sum()
    return float(np.log(total) + M * m)


def _spin_to_chain_offset(lattice, target: str, n2: int, K: float) -> float:
    """``log(spin sum) - log(chain sum)`` for the normalized kernel."""
    R = generator_matrix(lattice, target)
    G, E = R.shape
    M = chain_length(target, n2)
    off = M * (G - gf2.rank(R)) * LOG2
    if not math.isinf(K):
        off += K * E * M / 2
    if target == RHO2_2D:
        lk = kernel_log(_group(lattice, target, None).weights, K, RHO_3D)
        off += n2 * float(logsumexp(2 * lk))
    return off


def group_flavored_logZ(lattice, target: str, n2: int, K: float,
                        bipartition: Bipartition | None = None) -> float:
    """Same normalization as :func:`flavored_logZ` via the group backend."""
    log_g = group_chain_log_sum(lattice, target, n2, K, bipartition)
    return log_g + _spin_to_chain_offset(lattice, target, n2, K)


def pt_log_moment(lattice, target: str, n2: int, p: float | None = None,
                  bipartition: Bipartition | None = None, K: float | None = None,
                  backend: str = "group") -> float:
    """``log tr[(sigma^{T_A})^{2n}]`` for the normalized target state.

    Without a bipartition this is ``log tr sigma^{2n}``.  Valid for every
    ``2n >= 2`` including ``2n = 2``.  ``backend`` is ``group`` or ``spin``.
    """
    from ..couplings import k_replica

    K = k_replica(p) if K is None else K
    if backend == "group":
        log_g = group_chain_log_sum(lattice, target, n2, K, bipartition)
    elif backend == "spin":
        if math.isinf(K):
            raise ValueError("spin backend needs finite K; use the group backend")
        lz = flavored_logZ(lattice, target, n2, K, bipartition).log_z
        log_g = lz - _spin_to_chain_offset(lattice, target, n2, K)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    N = lattice.n_edges
    d = gf2.rank(generator_matrix(lattice, target))
    m = n2
    return N * (1 - m) * LOG2 + (m - 1) * gz_dimension(lattice, target) * LOG2 - d * LOG2 + log_g


def surface_sum_log(lattice, target: str, n2: int, K: float) -> float:
    """Direct enumeration of ``sum_{g^s} exp(-K sum_s |g^s + g^{s+1}|)``.

    Independent of the spin mapping; only for tiny groups.
    """
    basis = gf2.row_basis(generator_matrix(lattice, target))
    elems = gf2.span_elements(basis)
    if len(elems) ** 2 > 1 << 22:
        raise BudgetError("surface enumeration too large")
    M = chain_length(target, n2)
    if M != 2:
        raise ValueError("direct surface sum implemented for two-element chains")
    w = gf2.popcount(elems[:, None] ^ elems[None, :]).astype(np.float64)
    if math.isinf(K):
        return math.log(len(elems))
    return float(logsumexp(-K * 2 * w))
