"""Exact partition functions by enumeration of term-parity patterns.

For a model with GF(2) incidence ``A`` (terms x spins) the weight of a spin
configuration depends only on ``y = A s``.  Summing over the image of ``A``
(``2**rank`` patterns, each hit ``2**(n - rank)`` times) is exact and cheaper
than a sweep over spins, and it yields the full weight enumerator, so Z is
available at every beta, including the ground-state limit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .. import gf2
from .models import DisorderSample, TermModel

SPIN_BUDGET = 28
LOG2 = math.log(2.0)


class BudgetError(ValueError):
    """Requested system exceeds the exact-backend budget."""


@dataclass(frozen=True)
class LogPartition:
    """``log Z`` with ground-state data for the ``beta = inf`` limit.

    ``ground`` is the maximal alignment ``sum_t x_t prod s`` and
    ``log_degeneracy`` the log number of spin configurations reaching it.
    Both are None for backends that do not track them.
    """

    log_z: float
    beta: float
    ground: float | None = None
    log_degeneracy: float | None = None
    method: str = "exact-enumeration"
    contractible_twist: bool = False


def log_ratio(a: LogPartition, b: LogPartition) -> float:
    """``log(Z_a / Z_b)``, exact in the ``beta = inf`` limit."""
    if math.isinf(a.beta) or math.isinf(b.beta):
        if a.ground is None or b.ground is None:
            raise ValueError("ground-state data needed at beta = inf")
        if a.ground < b.ground:
            return -math.inf
        if a.ground > b.ground:
            return math.inf
        return a.log_degeneracy - b.log_degeneracy
    return a.log_z - b.log_z


def pack_words(bits) -> np.ndarray:
    """Pack the last axis of a 0/1 array into little-endian uint64 words."""
    bits = np.asarray(bits, dtype=np.uint64)
    n = bits.shape[-1]
    k = max(1, -(-n // 64))
    out = np.zeros(bits.shape[:-1] + (k,), dtype=np.uint64)
    for i in range(n):
        out[..., i // 64] |= bits[..., i] << np.uint64(i % 64)
    return out


def _span(packed: np.ndarray, k: int) -> np.ndarray:
    elems = np.zeros((1, k), dtype=np.uint64)
    for g in packed:
        elems = np.concatenate([elems, elems ^ g])
    return elems


class ImageEnumerator:
    """Iterates over the image of the term x spin incidence, chunk by chunk."""

    def __init__(self, model: TermModel, chunk_log: int = 20):
        if model.n_spins > SPIN_BUDGET:
            raise BudgetError(f"{model.n_spins} spins exceed the enumeration budget {SPIN_BUDGET}")
        self.model = model
        self.basis = gf2.row_basis(model.incidence.T)
        self.rank = self.basis.shape[0]
        self.n_terms = model.n_terms
        self.words = max(1, -(-self.n_terms // 64))
        packed = pack_words(self.basis) if self.rank else np.zeros((0, self.words), np.uint64)
        m = min(self.rank, chunk_log)
        self._low = _span(packed[:m], self.words)
        self._high = _span(packed[m:], self.words)

    @property
    def multiplicity_log(self) -> float:
        return (self.model.n_spins - self.rank) * LOG2

    def chunks(self):
        for h in self._high:
            yield self._low ^ h

    def contains(self, mask) -> bool:
        return gf2.in_span(self.basis, mask) if self.rank else not np.any(mask)


@lru_cache(maxsize=64)
def _enumerator(model: TermModel) -> ImageEnumerator:
    return ImageEnumerator(model)


def enumerator(model: TermModel) -> ImageEnumerator:
    return _enumerator(model)


def _popcount(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


def weight_enumerator(sample: DisorderSample) -> np.ndarray:
    """``counts[k]`` = number of image patterns with ``k`` unsatisfied terms."""
    en = enumerator(sample.model)
    xw = pack_words(sample.bits)
    counts = np.zeros(en.n_terms + 1, dtype=np.int64)
    for chunk in en.chunks():
        counts += np.bincount(_popcount(chunk ^ xw), minlength=en.n_terms + 1)
    return counts


def logz_from_counts(counts, n_terms: int, beta: float, offset: float,
                     method: str = "exact-enumeration") -> LogPartition:
    counts = np.asarray(counts, dtype=np.float64)
    k = np.arange(len(counts))
    nz = counts > 0
    kmin = int(k[nz][0])
    ground = float(n_terms - 2 * kmin)
    logdeg = offset + math.log(counts[kmin])
    if math.isinf(beta):
        return LogPartition(math.inf, beta, ground, logdeg, method)
    logz = offset + float(logsumexp(np.log(counts[nz]) + beta * (n_terms - 2 * k[nz])))
    return LogPartition(logz, float(beta), ground, logdeg, method)


def exact_logZ(sample: DisorderSample) -> LogPartition:
    """Exact ``log Z`` by enumeration (spin count at most 28)."""
    en = enumerator(sample.model)
    counts = weight_enumerator(sample)
    return logz_from_counts(counts, en.n_terms, sample.beta, en.multiplicity_log)


def _weighted_parity_mean(sample: DisorderSample, cmask) -> float:
    """Boltzmann average of ``prod_{t in c} tau_t`` with ``tau_t = prod_{i in t} s_i``."""
    en = enumerator(sample.model)
    xw = pack_words(sample.bits)
    cw = pack_words(np.asarray(cmask, dtype=np.uint8))
    nt = en.n_terms
    if math.isinf(sample.beta):
        best, num, den = None, 0, 0
        for chunk in en.chunks():
            pc = _popcount(chunk ^ xw)
            sign = 1 - 2 * (_popcount(chunk & cw) & 1)
            m = int(pc.min())
            if best is None or m < best:
                best, num, den = m, 0, 0
            if m == best:
                sel = pc == m
                num += int(sign[sel].sum())
                den += int(sel.sum())
        return num / den
    beta = sample.beta
    logw_all, sgn_all = [], []
    for chunk in en.chunks():
        pc = _popcount(chunk ^ xw)
        logw_all.append(beta * (nt - 2 * pc))
        sgn_all.append(1 - 2 * (_popcount(chunk & cw) & 1))
    logw = np.concatenate(logw_all).astype(np.float64)
    sgn = np.concatenate(sgn_all).astype(np.float64)
    w = np.exp(logw - logw.max())
    return float(np.dot(w, sgn) / w.sum())


def correlation_support(model: TermModel, sites) -> np.ndarray | None:
    """Term set whose product equals ``prod_{i in sites} s_i``, or None."""
    target = np.zeros(model.n_spins, dtype=np.uint8)
    for i in sites:
        target[i] ^= 1
    return gf2.solve(model.incidence.T, target)


def exact_spin_product(sample: DisorderSample, sites) -> float:
    """``<prod_{i in sites} s_i>`` exactly (0 when a symmetry forbids it)."""
    c = correlation_support(sample.model, sites)
    if c is None:
        return 0.0
    if not c.any():
        return 1.0
    return _weighted_parity_mean(sample, c)


def exact_spin_correlation(sample: DisorderSample, a: int, b: int) -> float:
    if a == b:
        return 1.0
    return exact_spin_product(sample, (a, b))


def exact_energy(sample: DisorderSample) -> float:
    """``<H>`` with ``H = -sum_t x_t prod s`` (in units where the coupling is 1)."""
    en = enumerator(sample.model)
    counts = weight_enumerator(sample).astype(np.float64)
    k = np.arange(len(counts))
    nz = counts > 0
    align = en.n_terms - 2 * k[nz]
    if math.isinf(sample.beta):
        return -float(align.max())
    logw = np.log(counts[nz]) + sample.beta * align
    w = np.exp(logw - logw.max())
    return -float(np.dot(w, align) / w.sum())


def exact_magnetization_sq(sample: DisorderSample) -> float:
    """``<m^2>`` with ``m = mean spin``, by direct spin enumeration (<= 24 spins)."""
    model = sample.model
    n = model.n_spins
    if n > 24:
        raise BudgetError("direct spin enumeration limited to 24 spins")
    A = model.incidence.astype(np.int64)
    x = np.asarray(sample.signs, dtype=np.float64)
    configs = np.arange(2 ** n, dtype=np.int64)
    bits = (configs[:, None] >> np.arange(n)) & 1
    y = (bits @ A.T) & 1
    align = (1 - 2 * y) @ x
    m = (1 - 2 * bits).sum(axis=1) / n
    if math.isinf(sample.beta):
        sel = align == align.max()
        return float(np.mean(m[sel] ** 2))
    logw = sample.beta * align
    w = np.exp(logw - logw.max())
    return float(np.dot(w, m ** 2) / w.sum())


def is_contractible_twist(model: TermModel, edges) -> bool:
    """A twist is removable by spin flips iff its mask lies in the image of A."""
    mask = np.zeros(model.n_terms, dtype=np.uint8)
    mask[np.asarray(list(edges), dtype=np.int64)] = 1
    return gf2.in_span(gf2.row_basis(model.incidence.T), mask)


# --- all-coset tables -------------------------------------------------------

class CosetTable:
    """Weight enumerators of every coset ``x + Im(A)`` of term-sign patterns.

    ``hist[key, k]`` counts the members of coset ``key`` with ``k`` negative
    terms.  Keys are the packed free components of the canonical
    representative, so ``key(x ^ c) = key(x) ^ key(c)``.
    """

    MAX_TERMS = 26

    def __init__(self, model: TermModel):
        nt = model.n_terms
        if nt > self.MAX_TERMS:
            raise BudgetError(f"coset table needs <= {self.MAX_TERMS} terms, got {nt}")
        self.model = model
        self.reducer = gf2.CosetReducer(model.incidence.T, nt)
        self.rank = self.reducer.dim
        self.table = self.reducer.key_table()
        self.n_cosets = 1 << (nt - self.rank)
        self.offset = (model.n_spins - self.rank) * LOG2
        hist = np.zeros(self.n_cosets * (nt + 1), dtype=np.int64)
        step = 1 << min(nt, 20)
        base = np.arange(step, dtype=np.int64)
        for start in range(0, 1 << nt, step):
            u = base + start
            keys = gf2.linear_image_keys(u, self.table)
            pc = gf2.popcount(u)
            hist += np.bincount(keys * (nt + 1) + pc, minlength=len(hist))
        self.hist = hist.reshape(self.n_cosets, nt + 1)

    def key(self, bits) -> int:
        return int(gf2.linear_image_keys(np.array([gf2.pack(bits)]), self.table)[0])

    def log_z(self, beta: float) -> np.ndarray:
        """``log Z`` of every coset (``-inf``-free; ground limit not handled)."""
        nt = self.model.n_terms
        k = np.arange(nt + 1)
        with np.errstate(divide="ignore"):
            logc = np.log(self.hist.astype(np.float64))
        return self.offset + logsumexp(logc + beta * (nt - 2 * k), axis=1)

    def ground(self) -> tuple[np.ndarray, np.ndarray]:
        """Per coset: maximal alignment and log degeneracy."""
        nt = self.model.n_terms
        kmin = np.argmax(self.hist > 0, axis=1)
        cnt = self.hist[np.arange(self.n_cosets), kmin].astype(np.float64)
        return (nt - 2 * kmin).astype(np.float64), self.offset + np.log(cnt)


@lru_cache(maxsize=16)
def coset_table(model: TermModel) -> CosetTable:
    return CosetTable(model)


def warn_contractible():
    warnings.warn("twist is contractible; domain-wall free energy is zero", stacklevel=3)
