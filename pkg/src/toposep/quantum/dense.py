"""Dense states and density operators for tiny toric-code systems.

Qubit ``q`` is bit ``q`` of the basis index.  On a 2d torus the toric-code
qubits are the edges; the cluster state adds one qubit per vertex, numbered
after the edges.  In the conventions used here the toric code is stabilized
by Z-stars and by X-strings on every closed loop (including both logical
loops), and phase-flip noise acts with ``Z_e``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import gf2
from ..couplings import nishimori_beta
from ..lattice import Bipartition, Torus2D
from .pauli import PauliString, x_string, z_string

QUBIT_BUDGET = 13
CLAMP = 1e-12


class QubitBudgetError(ValueError):
    pass


def _check_budget(n: int, budget: int = QUBIT_BUDGET):
    if n > budget:
        raise QubitBudgetError(f"{n} qubits exceed the dense budget {budget}")


def basis_bits(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.int64)


def normalize(vec: np.ndarray) -> np.ndarray:
    return vec / np.linalg.norm(vec)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|^2`` of normalized pure states."""
    return float(abs(np.vdot(normalize(a), normalize(b))) ** 2)


# --- stabilizers -------------------------------------------------------------

def cluster_stabilizers(lat: Torus2D, flip: str | None = None) -> list[tuple[str, PauliString]]:
    """``S_v = X_v prod Z_e`` and ``S_e = X_e prod Z_v`` (terms ``h = -S``).

    ``flip`` names one stabilizer (e.g. ``"e0"``) whose sign is inverted; it
    exists for fault-injection tests of the check suite.
    """
    ne = lat.n_edges
    out = []
    for v in range(lat.n_vertices):
        out.append((f"v{v}", PauliString.from_support([ne + v], lat.vertex_edges[v])))
    for e in range(ne):
        out.append((f"e{e}", PauliString.from_support([e], ne + lat.edge_vertices[e])))
    if flip is not None:
        if flip not in {n for n, _ in out}:
            raise ValueError(f"no stabilizer named {flip!r}")
        out = [(n, -s if n == flip else s) for n, s in out]
    return out


def toric_stabilizers(lat: Torus2D) -> list[PauliString]:
    out = [z_string(lat.vertex_edges[v]) for v in range(lat.n_vertices)]
    out += [x_string(lat.plaquette_edges[p]) for p in range(lat.n_plaquettes)]
    return out


def x_loop_group(lat: Torus2D) -> list[PauliString]:
    """All X-strings on closed loops (the X part of the toric stabilizer group)."""
    return [PauliString(int(a), 0) for a in gf2.span_elements(lat.cycle_basis)]


# --- states ------------------------------------------------------------------

def cluster_ground_state(lat: Torus2D) -> np.ndarray:
    """Graph state with CZ between each edge qubit and its two vertex qubits."""
    n = lat.n_edges + lat.n_vertices
    _check_budget(n)
    b = basis_bits(n)
    ne = lat.n_edges
    ev = lat.edge_vertices
    phase = (b[:, :ne] * (b[:, ne + ev[:, 0]] + b[:, ne + ev[:, 1]])).sum(axis=1) % 2
    return (1 - 2 * phase).astype(complex) / math.sqrt(1 << n)


def toric_ground_state(lat: Torus2D) -> np.ndarray:
    """Uniform superposition of closed-loop Z-basis configurations."""
    n = lat.n_edges
    _check_budget(n)
    psi = np.zeros(1 << n, dtype=complex)
    psi[gf2.span_elements(lat.cycle_basis)] = 1.0
    return normalize(psi)


def project_vertices_plus(lat: Torus2D, cluster: np.ndarray) -> np.ndarray:
    """``<x_v = 1|`` on every vertex qubit of a cluster-state vector."""
    ne, nv = lat.n_edges, lat.n_vertices
    t = cluster.reshape(1 << nv, 1 << ne)  # high bits are vertices
    return t.sum(axis=0) / math.sqrt(1 << nv)


def stabilizer_projector_state(stabs: list[PauliString], n: int, seed_vec=None) -> np.ndarray:
    """Normalized ``prod (I + S)/2`` applied to a generic vector."""
    rng = np.random.default_rng(7)
    vec = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n) if seed_vec is None else seed_vec
    for s in stabs:
        vec = 0.5 * (vec + s.apply(vec))
    return normalize(vec)


def density(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


# --- channels ----------------------------------------------------------------

def apply_channel(rho: np.ndarray, p: float, sites, pauli: str = "Z") -> np.ndarray:
    """``rho -> (1-p) rho + p P rho P`` on each site in turn."""
    if not (0.0 <= p <= 0.5):
        raise ValueError("p must lie in [0, 0.5]")
    n = int(round(math.log2(rho.shape[0])))
    _check_budget(n)
    out = np.array(rho, dtype=complex)
    if pauli == "Z":
        # dephasing damps <a|rho|b> by (1 - 2p) per channel site where a and b differ
        mask = sum(1 << int(q) for q in sites)
        idx = np.arange(out.shape[0], dtype=np.int64) & mask
        out *= (1.0 - 2.0 * p) ** np.bitwise_count(idx[:, None] ^ idx[None, :])
        return out
    for q in sites:
        P = PauliString.from_support([q] if pauli in "XY" else [], [q] if pauli in "ZY" else [])
        out = (1 - p) * out + p * P.conjugate(out)
    return out


def single_qubit_channel(rho: np.ndarray, p: float) -> np.ndarray:
    Z = np.diag([1.0, -1.0])
    return (1 - p) * rho + p * Z @ rho @ Z


# --- reductions and entropies ------------------------------------------------

def _axes(n: int, qubits) -> list[int]:
    return [n - 1 - q for q in qubits]


def reduced_density(state: np.ndarray, keep) -> np.ndarray:
    """Reduced density operator on qubits ``keep`` (pure state or operator)."""
    keep = list(keep.a_edges if isinstance(keep, Bipartition) else keep)
    if state.ndim == 1:
        n = int(round(math.log2(len(state))))
        rest = [q for q in range(n) if q not in keep]
        t = state.reshape([2] * n)
        # order kept axes so kept qubit order maps to little-endian bits
        ka = _axes(n, sorted(keep, reverse=True))
        ra = _axes(n, rest)
        m = t.transpose(ka + ra).reshape(1 << len(keep), -1)
        return m @ m.conj().T
    n = int(round(math.log2(state.shape[0])))
    rest = [q for q in range(n) if q not in keep]
    t = state.reshape([2] * (2 * n))
    ka = _axes(n, sorted(keep, reverse=True))
    ra = _axes(n, rest)
    t = t.transpose(ka + ra + [a + n for a in ka] + [a + n for a in ra])
    dk, dr = 1 << len(keep), 1 << len(rest)
    return np.einsum("arbr->ab", t.reshape(dk, dr, dk, dr))


def renyi2(state: np.ndarray, bipartition) -> float:
    rho_a = reduced_density(state, bipartition)
    return -math.log(float(np.real(np.trace(rho_a @ rho_a))))


def partial_transpose(rho: np.ndarray, bipartition) -> np.ndarray:
    qubits = list(bipartition.a_edges if isinstance(bipartition, Bipartition) else bipartition)
    n = int(round(math.log2(rho.shape[0])))
    perm = list(range(2 * n))
    for q in qubits:
        r, c = n - 1 - q, 2 * n - 1 - q
        perm[r], perm[c] = perm[c], perm[r]
    return rho.reshape([2] * (2 * n)).transpose(perm).reshape(rho.shape)


def log_moment(rho: np.ndarray, m: int) -> float:
    ev = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    return math.log(float((ev ** m).sum()))


def pt_log_moment(rho: np.ndarray, bipartition, m: int) -> float:
    """``log tr[(rho^{T_A})^m]`` (``m`` even)."""
    return log_moment(partial_transpose(rho, bipartition), m)


def negativity(rho: np.ndarray, bipartition, n2: int | None = None) -> float:
    """Log-negativity, or the ``2n``-th Renyi negativity when ``n2`` is given."""
    pt = partial_transpose(rho, bipartition)
    if n2 is None:
        ev = np.linalg.eigvalsh((pt + pt.conj().T) / 2)
        return math.log(float(np.abs(ev).sum()))
    if n2 == 2:
        raise ValueError("the 2n = 2 Renyi negativity is 0/0; use pt_log_moment")
    return (log_moment(pt, n2) - log_moment(rho, n2)) / (2 - n2)


def pauli_expectation(state: np.ndarray, op: PauliString) -> float:
    if state.ndim == 1:
        return float(np.real(np.vdot(state, op.apply(state))))
    n = int(round(math.log2(state.shape[0])))
    return float(np.real((op.matrix(n) @ state).trace()))


def sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    """Hermitian square root with eigenvalues below ``1e-12`` clamped to 0."""
    w, U = np.linalg.eigh((rho + rho.conj().T) / 2)
    w = np.where(w < CLAMP, 0.0, w)
    return (U * np.sqrt(w)) @ U.conj().T


def hadamard_all(vec: np.ndarray) -> np.ndarray:
    """Apply ``H`` on every qubit (fast Walsh-Hadamard, unitary scaling)."""
    v = np.array(vec, dtype=complex)
    n = len(v)
    h = 1
    while h < n:
        w = v.reshape(n // (2 * h), 2, h)
        a = w[:, 0, :].copy()
        b = w[:, 1, :]
        w[:, 0, :] = a + b
        w[:, 1, :] = a - b
        h *= 2
    return v / math.sqrt(n)


@dataclass(frozen=True, eq=False)
class SqrtRhoState:
    """``|psi(beta)> ~ sum_x sqrt(Z_x) |x>`` in the X basis of the edge qubits.

    ``log_amp`` holds ``log sqrt(Z_x)`` up to a constant for every edge sign
    pattern ``x`` (bit 1 = ``x_e = -1``, i.e. the ``|->`` state).
    """

    lattice: Torus2D
    beta: float
    log_amp: np.ndarray = field(repr=False)

    def x_basis(self) -> np.ndarray:
        a = np.exp(self.log_amp - np.max(self.log_amp))
        return a / np.linalg.norm(a)

    def computational(self) -> np.ndarray:
        _check_budget(self.lattice.n_edges, 26)
        return hadamard_all(self.x_basis())


def sqrt_rho_from_table(lat: Torus2D, beta: float) -> SqrtRhoState:
    from ..statmech.models import ISING2D, build_model
    from ..statmech.orbits import orbit_table

    tab = orbit_table(build_model(ISING2D, lat), beta)
    return SqrtRhoState(lat, beta, 0.5 * tab.all_config_log_w())


def decohered_toric(lat: Torus2D, p: float) -> np.ndarray:
    rho0 = density(toric_ground_state(lat))
    return apply_channel(rho0, p, range(lat.n_edges))


def gibbs_cluster(lat: Torus2D, p: float, flip: str | None = None) -> np.ndarray:
    """Normalized ``prod_e (I + tanh(beta) S_e) prod_v (I + S_v)``, ``tanh beta = 1 - 2p``."""
    n = lat.n_edges + lat.n_vertices
    _check_budget(n)
    t = math.tanh(nishimori_beta(p))
    dim = 1 << n
    M = sp.identity(dim, dtype=complex, format="csr")
    for name, s in cluster_stabilizers(lat, flip):
        coef = t if name.startswith("e") else 1.0
        M = M @ (sp.identity(dim, format="csr") + coef * s.matrix(n))
    M = M.toarray()
    return M / np.trace(M)
