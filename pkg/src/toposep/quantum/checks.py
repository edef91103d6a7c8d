"""Operator identities checked on dense matrices.

Each check returns a :class:`CheckReport`; :func:`run_suite` runs a named
battery, optionally restricted by a substring filter.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .. import gf2
from ..couplings import nishimori_beta
from ..lattice import Torus2D, bipartition_from_edges, build_torus_2d, nontrivial_cycle
from ..statmech.exact import exact_logZ, log_ratio
from ..statmech.models import ISING2D, DisorderSample, build_model
from . import dense
from .pauli import PauliString, z_string

TOL = 1e-10


@dataclass(frozen=True)
class CheckReport:
    name: str
    params: dict
    deviation: float
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def _report(name, params, dev, tol=TOL) -> CheckReport:
    return CheckReport(name, params, float(dev), bool(dev < tol))


def cluster_stabilizer_check(lat: Torus2D, flip: str | None = None) -> float:
    """Max deviation of ``<S>`` from +1 over all cluster stabilizers."""
    psi = dense.cluster_ground_state(lat)
    return max(abs(dense.pauli_expectation(psi, s) - 1.0) for _, s in dense.cluster_stabilizers(lat, flip))


def projection_check(lat: Torus2D) -> float:
    """``1 - fidelity`` between the projected cluster state and the toric state."""
    toric = dense.toric_ground_state(lat)
    proj = dense.project_vertices_plus(lat, dense.cluster_ground_state(lat))
    return 1.0 - dense.fidelity(toric, proj)


def gibbs_form_check(p: float, lat: Torus2D | None = None, flip: str | None = None) -> float:
    """Phase-flip channel on the cluster edges vs. the normalized Gibbs form."""
    lat = lat or build_torus_2d(2, 2)
    rho_c = dense.density(dense.cluster_ground_state(lat))
    out = dense.apply_channel(rho_c, p, range(lat.n_edges))
    gibbs = dense.gibbs_cluster(lat, p, flip)
    return float(np.abs(out - gibbs).max())


def orbit_weights(lat: Torus2D, p: float) -> tuple[list[np.ndarray], np.ndarray]:
    """One representative per vertex-gauge orbit and normalized weights ``Z_x``."""
    model = build_model(ISING2D, lat)
    beta = nishimori_beta(p)
    red = gf2.CosetReducer(lat.star_matrix)
    reps, logs = [], []
    ref = None
    for key in range(1 << len(red.free)):
        r = np.zeros(lat.n_edges, np.uint8)
        for j, c in enumerate(red.free):
            r[c] = (key >> j) & 1
        lz = exact_logZ(DisorderSample(model, (1 - 2 * r.astype(np.int8)), beta))
        if ref is None:
            ref = lz
        reps.append(r)
        logs.append(log_ratio(lz, ref))
    logs = np.array(logs)
    w = np.exp(logs - logs.max())
    return reps, w / w.sum()


def spectral_form(lat: Torus2D, p: float) -> np.ndarray:
    """``sum_x Z_x |Omega_x><Omega_x|`` with ``|Omega_x> = Z_E |Omega_0>``."""
    omega0 = dense.toric_ground_state(lat)
    reps, w = orbit_weights(lat, p)
    rho = np.zeros((len(omega0), len(omega0)), dtype=complex)
    for r, wx in zip(reps, w):
        if wx == 0:
            continue
        om = z_string(np.nonzero(r)[0]).apply(omega0)
        rho += wx * np.outer(om, om.conj())
    return rho


def spectral_check(p: float, lat: Torus2D | None = None) -> float:
    lat = lat or build_torus_2d(2, 2)
    return float(np.abs(dense.decohered_toric(lat, p) - spectral_form(lat, p)).max())


def eigenvalue_check(p: float, lat: Torus2D | None = None) -> float:
    lat = lat or build_torus_2d(2, 2)
    ev = np.sort(np.linalg.eigvalsh(dense.decohered_toric(lat, p)))[::-1]
    _, w = orbit_weights(lat, p)
    ref = np.zeros(len(ev))
    ref[: len(w)] = np.sort(w)[::-1]
    return float(np.abs(ev - ref).max())


def sqrt_rho_dense(lat: Torus2D, p: float) -> np.ndarray:
    """``rho^{1/2} |z = 1>`` from the dense decohered state."""
    rho = dense.decohered_toric(lat, p)
    z1 = np.zeros(rho.shape[0], dtype=complex)
    z1[0] = 1.0
    return dense.sqrtm_psd(rho) @ z1


def sqrt_rho_state(p: float, lat: Torus2D | None = None, backend: str = "amplitude-formula") -> np.ndarray:
    """Normalized ``|psi(beta)>`` in the computational basis."""
    lat = lat or build_torus_2d(2, 2)
    if backend == "dense":
        return dense.normalize(sqrt_rho_dense(lat, p))
    if backend == "amplitude-formula":
        return dense.sqrt_rho_from_table(lat, nishimori_beta(p)).computational()
    raise ValueError(f"unknown backend {backend!r}")


def sqrt_rho_check(p: float, lat: Torus2D | None = None) -> float:
    """Infidelity between the dense and amplitude-formula ``|psi(beta)>``."""
    lat = lat or build_torus_2d(2, 2)
    a = sqrt_rho_state(p, lat, "dense")
    b = sqrt_rho_state(p, lat, "amplitude-formula")
    return 1.0 - dense.fidelity(a, b)


def x_loop_commutator_check(p: float, lat: Torus2D | None = None) -> float:
    lat = lat or build_torus_2d(2, 2)
    rho = dense.decohered_toric(lat, p)
    n = lat.n_edges
    worst = 0.0
    for g in dense.x_loop_group(lat):
        M = g.matrix(n)
        worst = max(worst, float(np.abs(M @ rho - (M.T @ rho.T).T).max()))
    return worst


def thooft_check(p: float, lat: Torus2D | None = None) -> float:
    """``<psi|T|psi>`` on the dense state vs the partition-function ratio."""
    from ..observables import thooft_exact_value

    lat = lat or build_torus_2d(2, 2)
    psi = sqrt_rho_state(p, lat, "dense")
    T = z_string(nontrivial_cycle(lat, "y", dual=True).edges)
    return abs(dense.pauli_expectation(psi, T) - thooft_exact_value(lat, p))


def renyi2_check(p: float, lat: Torus2D | None = None) -> float:
    from ..observables import renyi2_swap

    lat = lat or build_torus_2d(2, 2)
    region = bipartition_from_edges(lat, [0, lat.n_vertices])
    psi = sqrt_rho_state(p, lat, "dense")
    return abs(dense.renyi2(psi, region) - renyi2_swap(p, lat, region).mean)


def negativity_check(p: float, lat: Torus2D | None = None) -> float:
    """2n = 2 flavored-Ising partial-transpose moment of rho^2 vs dense."""
    from ..statmech.flavored import RHO2_2D, pt_log_moment

    lat = lat or build_torus_2d(2, 2)
    region = bipartition_from_edges(lat, [0, lat.n_vertices, 1])
    rho = dense.decohered_toric(lat, p)
    rho2 = rho @ rho
    rho2 /= np.trace(rho2)
    d = dense.pt_log_moment(rho2, region, 2)
    return abs(d - pt_log_moment(lat, RHO2_2D, 2, p, region, backend="spin"))


def amplitude_3x3_thooft_check(p: float) -> float:
    """3x3 amplitude-formula state vs. the orbit-sum 't Hooft value."""
    from ..observables import thooft_exact_value

    lat = build_torus_2d(3, 3)
    st = dense.sqrt_rho_from_table(lat, nishimori_beta(p))
    amp = st.x_basis()
    c = gf2.pack(nontrivial_cycle(lat, "y", dual=True).mask)
    idx = np.arange(len(amp), dtype=np.int64)
    val = float(np.dot(amp, amp[idx ^ c]))
    return abs(val - thooft_exact_value(lat, p))


SPECTRAL_PS = (0.05, 0.1, 0.2, 0.3)


def suite(fault: str | None = None):
    """Yield ``(name, params, thunk)`` for every check."""
    lat = build_torus_2d(2, 2)
    yield "cluster-stabilizers", {"L": 2}, lambda: cluster_stabilizer_check(lat, fault)
    yield "cluster-projection", {"L": 2}, lambda: projection_check(lat)
    for p in (0.0, 0.2, 0.5):
        yield "gibbs-form", {"p": p}, (lambda p=p: gibbs_form_check(p, lat, fault))
    for p in SPECTRAL_PS:
        yield "spectral-form", {"p": p}, (lambda p=p: spectral_check(p, lat))
        yield "spectral-eigenvalues", {"p": p}, (lambda p=p: eigenvalue_check(p, lat))
    for p in (0.0, 0.15, 0.3, 0.5):
        yield "sqrt-rho-amplitude", {"p": p}, (lambda p=p: sqrt_rho_check(p, lat))
    for p in SPECTRAL_PS:
        yield "x-loop-commutator", {"p": p}, (lambda p=p: x_loop_commutator_check(p, lat))
        yield "thooft-ratio", {"p": p}, (lambda p=p: thooft_check(p, lat))
        yield "renyi2-swap", {"p": p}, (lambda p=p: renyi2_check(p, lat))
    for p in (0.0, 0.1, 0.3):
        yield "negativity-rho2", {"p": p}, (lambda p=p: negativity_check(p, lat))
    for p in (0.1, 0.25):
        yield "amplitude-3x3-thooft", {"p": p}, (lambda p=p: amplitude_3x3_thooft_check(p))


def run_suite(name_filter: str | None = None, fault: str | None = None) -> list[CheckReport]:
    reports = []
    for name, params, thunk in suite(fault):
        if name_filter and name_filter not in name:
            continue
        try:
            dev = thunk()
        except Exception as exc:  # a broken check is reported, not fatal
            reports.append(CheckReport(name, {**params, "error": repr(exc)}, math.inf, False))
            continue
        reports.append(_report(name, params, dev))
    return reports
