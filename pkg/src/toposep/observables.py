"""Order parameters and entanglement diagnostics of the decohered states.

Every observable has an exact small-size path (orbit tables, enumeration) and,
where it makes sense, a disorder-sampled path.  Sampled paths draw term signs
iid at the Nishimori rate; this is exact for the gauge-invariant quantities
computed here because the orbit probability ``sum_{x in orbit} P(x)`` is
proportional to the orbit partition function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import gf2
from .couplings import k_nonoptimal, k_replica, nishimori_beta, nonoptimal_disorder_rate
from .estimate import EXACT, MC_DISORDER, TRANSFER, Estimate
from .lattice import Bipartition, Torus2D, Torus3D, build_torus_2d, build_torus_3d, nontrivial_cycle
from .statmech.exact import BudgetError, _weighted_parity_mean, exact_logZ, log_ratio
from .statmech.flavored import RHO2_2D, RHO_3D, LinearModel, pt_log_moment
from .statmech.models import (GAUGE3D as GAUGE_ISING3D, ISING2D, PLAQUETTE3D as PLAQUETTE_ISING3D, DisorderSample,
                              build_model, nishimori_signs)
from .statmech.orbits import orbit_table
from .statmech.transfer import seam_cycle, seam_dF_batch

LOG2 = math.log(2.0)
ALPHA_STEP = 1e-4

KINDS = ("thooft2d", "wilson3d-gauge", "wilson3d-plaquette", "anyon-avg-2d", "anyon-avg-3d",
         "renyi2-swap", "negativity-moment", "overlap-F-alpha")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# --- loop order parameters ---------------------------------------------------

@dataclass(frozen=True)
class LoopValue:
    """Exact ``<e^{-dF/2}>`` together with its Jensen lower bound ``e^{-<dF>/2}``."""

    value: float
    jensen_bound: float


def _orbit_loop(model, beta: float, twist_edges) -> LoopValue:
    """``sum_x sqrt(Z_x Z_{x+c}) / sum_x Z_x`` over all term-sign patterns."""
    tab = orbit_table(model, beta)
    mask = np.zeros(model.n_terms, dtype=np.uint8)
    mask[np.asarray(list(twist_edges), dtype=np.int64)] = 1
    kc = tab.key(mask)
    lw = tab.log_w
    k = np.arange(len(lw))
    lw_c = lw[k ^ kc]
    lz = float(logsumexp(lw))
    with np.errstate(invalid="ignore"):
        value = math.exp(float(logsumexp(0.5 * (lw + lw_c))) - lz)
    prob = np.exp(lw - lz)
    live = prob > 0
    if np.any(np.isneginf(lw_c[live])):
        bound = 0.0
    else:
        mean_dF = float(np.dot(prob[live], lw[live] - lw_c[live]))
        bound = math.exp(-0.5 * mean_dF)
    return LoopValue(min(max(value, 0.0), 1.0), bound)


def thooft_exact_value(lat: Torus2D, p: float, cycle=None) -> float:
    """Exact ``<T>`` for the dual loop ``cycle`` (default: y-dual loop through the origin)."""
    return thooft_exact(lat, p, cycle).value


def thooft_exact(lat: Torus2D, p: float, cycle=None) -> LoopValue:
    cycle = cycle or nontrivial_cycle(lat, "y", dual=True)
    return _orbit_loop(build_model(ISING2D, lat), nishimori_beta(p), cycle.edges)


def thooft_dF_samples(p: float, L: int, n_samples: int, seed=None) -> np.ndarray:
    """Per-sample seam domain-wall free energies at Nishimori disorder."""
    lat = build_torus_2d(L, L)
    rng = _rng(seed)
    signs = np.stack([nishimori_signs(lat.n_edges, p, rng) for _ in range(n_samples)])
    return seam_dF_batch(lat, signs, nishimori_beta(p))


def thooft_2d(p: float, L: int, backend: str = "exact", n_samples: int = 2000, seed=None) -> Estimate:
    """``<T>`` on the ``L x L`` torus: exact (``L <= 4``) or disorder-sampled transfer."""
    if backend == "exact":
        if L > 4:
            raise BudgetError("exact 't Hooft loop needs L <= 4")
        lat = build_torus_2d(L, L)
        return Estimate.exact(thooft_exact(lat, p, seam_cycle(lat)).value)
    if backend == "transfer":
        if L > 12:
            raise BudgetError("transfer backend supports L <= 12")
        dF = thooft_dF_samples(p, L, n_samples, seed)
        return Estimate.from_samples(np.exp(-0.5 * dF), TRANSFER)
    raise ValueError(f"unknown backend {backend!r}")


_WILSON_KINDS = {"gauge": GAUGE_ISING3D, "plaquette": PLAQUETTE_ISING3D,
                 GAUGE_ISING3D: GAUGE_ISING3D, PLAQUETTE_ISING3D: PLAQUETTE_ISING3D}


def wilson_exact(lat: Torus3D, p: float, model: str = "gauge", direction: str = "z") -> LoopValue:
    m = build_model(_WILSON_KINDS[model], lat)
    return _orbit_loop(m, nishimori_beta(p), nontrivial_cycle(lat, direction, dual=False).edges)


def wilson_3d(p: float, L: int, model: str = "gauge", backend: str = "exact",
              n_samples: int = 200, seed=None) -> Estimate:
    """``<W>`` for a straight non-contractible loop.

    ``exact`` sums over every orbit (needs at most 26 terms, i.e. ``L = 2``);
    ``sampled`` averages ``e^{-dF/2}`` with exact per-sample partition functions.
    """
    lat = build_torus_3d(L)
    if backend == "exact":
        if 3 * L ** 3 > 26:
            raise BudgetError("exact Wilson loop needs at most 26 terms")
        return Estimate.exact(wilson_exact(lat, p, model).value)
    if backend == "sampled":
        m = build_model(_WILSON_KINDS[model], lat)
        beta = nishimori_beta(p)
        loop = nontrivial_cycle(lat, "z", dual=False)
        rng = _rng(seed)
        vals = []
        for _ in range(n_samples):
            s = DisorderSample(m, nishimori_signs(m.n_terms, p, rng), beta, p)
            dF = -log_ratio(exact_logZ(s.twisted(loop)), exact_logZ(s))
            vals.append(math.exp(-0.5 * dF))
        return Estimate.from_samples(vals, MC_DISORDER)
    raise ValueError(f"unknown backend {backend!r}")


# --- average anyon condensation ----------------------------------------------

@dataclass(frozen=True)
class AnyonGeometry:
    """Closed-chain space, observable path and endpoints for the condensation average.

    ``rows`` span the allowed ``D = E + E'`` chains; ``path`` is the string
    whose parity ``(-1)^{|D cap path|}`` the loop operator measures.  In the
    spin picture every row is one spin (plaquette or vertex spins plus one
    twist spin per homology class), so the path parity is a spin product.
    """

    lattice: object
    rows: np.ndarray = field(repr=False)
    path: np.ndarray = field(repr=False)
    endpoints: tuple

    @property
    def n_edges(self) -> int:
        return int(self.rows.shape[1])

    def spin_model(self) -> LinearModel:
        return LinearModel(np.ascontiguousarray(self.rows.T))


def anyon_geometry(lat, endpoints=None) -> AnyonGeometry:
    """2d: plaquette endpoints joined by a dual path; 3d: vertex endpoints joined by a primal path."""
    if lat.dim == 2:
        L = lat
        a, b = endpoints or ((0, 0), (L.Lx // 2, L.Ly // 2))
        rows = np.vstack([L.plaquette_matrix] +
                         [nontrivial_cycle(L, d, dual=False).mask[None, :] for d in "xy"])
        path = np.zeros(L.n_edges, dtype=np.uint8)
        x, y = a
        for _ in range((b[0] - a[0]) % L.Lx):
            x = (x + 1) % L.Lx
            path[L.vedge(x, y)] ^= 1
        for _ in range((b[1] - a[1]) % L.Ly):
            y = (y + 1) % L.Ly
            path[L.hedge(x, y)] ^= 1
        return AnyonGeometry(L, rows.astype(np.uint8), path, (tuple(a), tuple(b)))
    L = lat
    a, b = endpoints or ((0, 0, 0), tuple(n // 2 for n in L.dims))
    rows = np.vstack([L.star_matrix] +
                     [nontrivial_cycle(L, d, dual=True).mask[None, :] for d in "xyz"])
    path = np.zeros(L.n_edges, dtype=np.uint8)
    v = L.vertex(*a)
    for d in range(3):
        for _ in range((b[d] - a[d]) % L.dims[d]):
            path[L.edge(d, v)] ^= 1
            v = L.shift(v, d)
    return AnyonGeometry(L, rows.astype(np.uint8), path, (tuple(a), tuple(b)))


@dataclass(frozen=True)
class AnyonResult:
    """Both sides of the condensation identity and their difference."""

    state_side: Estimate
    rbim_side: Estimate
    K: float

    @property
    def difference(self) -> float:
        return self.state_side.mean - self.rbim_side.mean


STATE_SIDE_MAX_EDGES = 24
RBIM_SIDE_MAX_WORK = 1 << 29


def _domain_wall_side(geo: AnyonGeometry, t2: float) -> float:
    """``sum_z p_z <T>_z^2`` from the excited-bond expansion of ``psi_z``.

    For each class ``E + span(rows)`` accumulate ``N = sum t^{2|u|}`` and
    ``B = sum t^{2|u|} (-1)^{|u cap path|}`` over its members ``u``; then
    ``<T>_z^2 = (B/N)^2``, ``p_z ~ N`` and the result is ``sum B^2/N / sum N``.
    """
    n = geo.n_edges
    if n > STATE_SIDE_MAX_EDGES:
        raise BudgetError(f"domain-wall enumeration needs <= {STATE_SIDE_MAX_EDGES} edges")
    red = gf2.CosetReducer(geo.rows, n)
    table = red.key_table()
    n_cls = 1 << (n - red.dim)
    cpath = gf2.pack(geo.path)
    powers = t2 ** np.arange(n + 1)
    N = np.zeros(n_cls)
    B = np.zeros(n_cls)
    step = 1 << min(n, 20)
    base = np.arange(step, dtype=np.int64)
    for start in range(0, 1 << n, step):
        u = base + start
        keys = gf2.linear_image_keys(u, table)
        w = powers[gf2.popcount(u)]
        sign = 1.0 - 2.0 * (gf2.popcount(u & cpath) & 1)
        N += np.bincount(keys, weights=w, minlength=n_cls)
        B += np.bincount(keys, weights=w * sign, minlength=n_cls)
    live = N > 0
    return float((B[live] ** 2 / N[live]).sum() / N.sum())


def _rbim_side_exact(geo: AnyonGeometry, t2: float) -> float:
    """``sum_E P(E) <prod s>_E`` by brute force over every bond-sign pattern ``E``.

    ``P`` is iid with rate ``q = t^2 / (1 + t^2)``; each ``<prod s>_E`` is the
    Boltzmann average over all spin configurations of the twist-summed model
    at coupling ``K``, written as a sum over the achievable bond patterns ``y``.
    """
    n = geo.n_edges
    image = gf2.span_elements(gf2.row_basis(geo.rows))
    if (1 << n) * len(image) > RBIM_SIDE_MAX_WORK:
        raise BudgetError("brute-force disorder average too large")
    q = t2 / (1.0 + t2)
    cpath = gf2.pack(geo.path)
    ysign = 1.0 - 2.0 * (gf2.popcount(image & cpath) & 1)
    powers = t2 ** np.arange(n + 1)
    total = 0.0
    step = max(1, (1 << 22) // len(image))
    for start in range(0, 1 << n, step):
        E = np.arange(start, min(start + step, 1 << n), dtype=np.int64)
        w = powers[gf2.popcount(E[:, None] ^ image[None, :])]
        den = w.sum(axis=1)
        corr = np.divide(w @ ysign, den, out=np.zeros_like(den), where=den > 0)
        k = gf2.popcount(E)
        pE = q ** k * (1.0 - q) ** (n - k)
        total += float(np.dot(pE, corr))
    return total


def _sampled_correlators(geo: AnyonGeometry, K: float, n_samples: int, seed) -> np.ndarray:
    """Exact per-sample path correlators, bond disorder iid at the rate matched to ``K``."""
    model = geo.spin_model()
    t2 = math.exp(-2.0 * K)
    q = t2 / (1.0 + t2)
    rng = _rng(seed)
    out = np.empty(n_samples)
    for i in range(n_samples):
        signs = np.where(rng.random(model.n_terms) < q, -1, 1).astype(np.int8)
        out[i] = _weighted_parity_mean(DisorderSample(model, signs, K), geo.path)
    return out


def anyon_condensation_avg(p: float, L: int, dim: int = 2, endpoints=None,
                           backend: str = "exact", n_samples: int = 500, seed=None) -> AnyonResult:
    """Average anyon condensation ``sum_z p_z <T>_z^2`` and the matching RBIM correlator.

    The decohered state at Nishimori ``beta(p)`` is resolved into the states
    ``psi_z`` whose excited-bond chains carry amplitude ``tanh(beta/2)^{|E'|}``.
    The other side is ``[<prod s>]`` in the bond-disordered Ising model with
    coupling ``K = -log tanh(beta/2)``, disorder iid at ``e^{-2K}/(1+e^{-2K})``
    and all homology twists summed (spins live on plaquettes in 2d and on
    vertices in 3d).

    ``exact``: full enumeration of both sides (2d ``L <= 3``; in 3d the state
    side is exact at ``L = 2`` and the RBIM side is sampled).  ``sampled``:
    disorder samples with exact per-sample correlators; the state side is
    then the mean of squared correlators.
    """
    lat = build_torus_2d(L, L) if dim == 2 else build_torus_3d(L)
    geo = anyon_geometry(lat, endpoints)
    beta = nishimori_beta(p)
    K = k_nonoptimal(beta)
    t2 = 0.0 if math.isinf(K) else math.exp(-2.0 * K)
    if backend == "exact":
        state = Estimate.exact(_domain_wall_side(geo, t2))
        try:
            rbim = Estimate.exact(_rbim_side_exact(geo, t2))
        except BudgetError:
            if math.isinf(K):
                rbim = Estimate.exact(_zero_disorder(geo))
            else:
                rbim = Estimate.from_samples(_sampled_correlators(geo, K, n_samples, seed))
        return AnyonResult(state, rbim, K)
    if backend == "sampled":
        if math.isinf(K):
            v = _zero_disorder(geo)
            return AnyonResult(Estimate.exact(v * v), Estimate.exact(v), K)
        c = _sampled_correlators(geo, K, n_samples, seed)
        return AnyonResult(Estimate.from_samples(c * c), Estimate.from_samples(c), K)
    raise ValueError(f"unknown backend {backend!r}")


def _zero_disorder(geo: AnyonGeometry) -> float:
    """Correlator at ``K = inf``: no disorder and only the aligned configuration."""
    return 1.0


# --- Renyi-2 entropy of psi(beta) --------------------------------------------

RENYI_MAX_EDGES = 18


def _split_matrix(amp: np.ndarray, n: int, region: Bipartition) -> np.ndarray:
    """Reshape a state vector (qubit ``q`` = bit ``q``) into ``A x B`` form."""
    a = [int(q) for q in region.a_edges]
    b = [int(q) for q in region.b_edges]
    t = amp.reshape([2] * n)
    axes = [n - 1 - q for q in a] + [n - 1 - q for q in b]
    return t.transpose(axes).reshape(1 << len(a), 1 << len(b))


def renyi2_purity_exact(lat: Torus2D, beta: float, region: Bipartition) -> float:
    """``tr rho_A^2`` of ``psi(beta)`` from the orbit weights (at most 18 edges)."""
    n = lat.n_edges
    if n > RENYI_MAX_EDGES:
        raise BudgetError(f"exact swap needs <= {RENYI_MAX_EDGES} edges")
    tab = orbit_table(build_model(ISING2D, lat), beta)
    lw = 0.5 * tab.all_config_log_w()
    amp = np.exp(lw - lw.max())
    amp /= np.linalg.norm(amp)
    M = _split_matrix(amp, n, region)
    R = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
    return float((R * R).sum())


def renyi2_ground_count(lat, region: Bipartition) -> float:
    """``S2`` at ``beta = inf`` for any size by GF(2) rank counting.

    ``psi(inf)`` is the uniform superposition over the cut space ``V`` (row
    space of the star matrix) in the X basis, so its Schmidt spectrum is flat
    with ``rank(V|_A) + rank(V|_B) - dim V`` bits of entropy.
    """
    V = gf2.row_basis(lat.star_matrix)
    a = region.in_a.astype(bool)
    bits = gf2.rank(V[:, a]) + gf2.rank(V[:, ~a]) - V.shape[0]
    return bits * LOG2


def renyi2_swap(p: float, lat: Torus2D, region: Bipartition) -> Estimate:
    """``S2 = -log tr rho_A^2`` of ``psi(beta(p))`` for the edge region ``region``.

    Exact swap sum for at most 18 edges; at ``p = 0`` (``beta = inf``) and
    ``p = 1/2`` (product state) closed routes cover every size.
    """
    beta = nishimori_beta(p)
    if lat.n_edges <= RENYI_MAX_EDGES:
        return Estimate.exact(-math.log(renyi2_purity_exact(lat, beta, region)))
    if math.isinf(beta):
        return Estimate.exact(renyi2_ground_count(lat, region))
    if beta == 0.0:
        return Estimate.exact(0.0)
    raise BudgetError(f"exact swap needs <= {RENYI_MAX_EDGES} edges")


# --- Renyi negativity moments ------------------------------------------------

def negativity_moment(p: float, lat, region: Bipartition, n2: int = 4,
                      target: str = RHO2_2D, backend: str = "group") -> Estimate:
    """Renyi negativity ``log(tr (s^{T_A})^{2n} / tr s^{2n}) / (2 - 2n)``.

    ``s`` is ``rho^2`` (target ``rho2-2d``) or ``rho`` (target ``rho-3d``).
    Both traces come from the flavored Ising model with and without the
    boundary constraint.  The ``2n = 2`` ratio is ``0/0``; use
    :func:`toposep.statmech.flavored.pt_log_moment` for that moment.
    """
    if n2 % 2 or n2 < 2:
        raise ValueError("2n must be an even integer >= 2")
    if n2 == 2:
        raise ValueError("the 2n = 2 Renyi negativity is 0/0; use pt_log_moment")
    K = k_replica(p)
    log_a = pt_log_moment(lat, target, n2, p, region, K=K, backend=backend)
    log_0 = pt_log_moment(lat, target, n2, p, None, K=K, backend=backend)
    return Estimate.exact((log_a - log_0) / (2 - n2))


# --- overlaps F_alpha --------------------------------------------------------

@dataclass(frozen=True)
class FAlpha:
    """``F_alpha`` with the Nishimori free energy and ``log sum_x Z_x`` for comparison.

    At ``alpha = 1`` the value is the Shannon entropy of ``P(x) = Z_x / sum Z``,
    which equals ``free_energy + log_total_z``.
    """

    alpha: float
    value: float
    free_energy: float
    log_total_z: float


def log_total_z(lat, beta: float) -> float:
    """``log sum_x Z_x = N_v log 2 + N_e log(2 cosh beta)``."""
    return lat.n_vertices * LOG2 + lat.n_edges * (LOG2 + math.log(math.cosh(beta)))


def _f_alpha(lw: np.ndarray, log_m: float, alpha: float) -> float:
    return log_m + (float(logsumexp(alpha * lw)) - alpha * float(logsumexp(lw))) / (1.0 - alpha)


def overlap_F_alpha(p: float, lat: Torus2D, alpha: float) -> FAlpha:
    """``F_alpha = log(sum_x Z_x^alpha / (sum_x Z_x)^alpha) / (1 - alpha)`` (``L <= 4``).

    ``alpha = 1`` is the two-sided limit at ``alpha = 1 +- 1e-4``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    beta = nishimori_beta(p)
    tab = orbit_table(build_model(ISING2D, lat), beta)
    lw, log_m = tab.log_w, tab.orbit_size_log
    if alpha == 1.0:
        value = 0.5 * (_f_alpha(lw, log_m, 1.0 - ALPHA_STEP) + _f_alpha(lw, log_m, 1.0 + ALPHA_STEP))
    else:
        value = _f_alpha(lw, log_m, alpha)
    if math.isinf(beta):
        return FAlpha(alpha, value, math.nan, math.nan)
    lz = float(logsumexp(lw)) + log_m
    prob = np.exp(lw + log_m - lz)
    free = -float(np.dot(prob, lw))
    return FAlpha(alpha, value, free, log_total_z(lat, beta))


# --- observable specs --------------------------------------------------------

@dataclass(frozen=True)
class ObservableSpec:
    """Kind, geometry and model binding of one observable.

    ``geometry`` is a tuple of ``(key, value)`` pairs so specs stay hashable
    and serialize to a stable tag.
    """

    kind: str
    geometry: tuple = ()
    model: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown observable kind {self.kind!r}")

    @property
    def params(self) -> dict:
        return dict(self.geometry)

    def tag(self) -> str:
        parts = [f"{k}={v}" for k, v in self.geometry]
        return ";".join(parts) if parts else "default"

    def validate(self, L: int):
        g = self.params
        if self.kind == "renyi2-swap" and "extent" in g:
            for w in g["extent"]:
                if w < 1 or w > L - 2:
                    raise ValueError(f"region extent {g['extent']} does not fit L = {L}")
        if self.kind in ("anyon-avg-2d", "anyon-avg-3d") and "endpoints" in g:
            for pt in g["endpoints"]:
                if any(c < 0 or c >= L for c in pt):
                    raise ValueError(f"endpoint {pt} outside the L = {L} lattice")


MODEL_OF = {
    "thooft2d": ISING2D, "wilson3d-gauge": GAUGE_ISING3D, "wilson3d-plaquette": PLAQUETTE_ISING3D,
    "anyon-avg-2d": "DualIsing2D", "anyon-avg-3d": "Ising3D", "renyi2-swap": ISING2D,
    "negativity-moment": "flavored", "overlap-F-alpha": ISING2D,
}


def evaluate(spec: ObservableSpec, L: int, p: float, backend: str = "exact",
             n_samples: int = 1, seed=None) -> list[tuple[str, Estimate]]:
    """Evaluate one cell; returns ``(observable name, estimate)`` pairs."""
    spec.validate(L)
    g = spec.params
    k = spec.kind
    if k == "thooft2d":
        return [(k, thooft_2d(p, L, backend, n_samples, seed))]
    if k.startswith("wilson3d"):
        return [(k, wilson_3d(p, L, k.split("-")[1], backend, n_samples, seed))]
    if k.startswith("anyon-avg"):
        dim = 2 if k.endswith("2d") else 3
        ends = g.get("endpoints")
        r = anyon_condensation_avg(p, L, dim, tuple(map(tuple, ends)) if ends else None,
                                   backend, n_samples, seed)
        return [(k + "/state", r.state_side), (k + "/rbim", r.rbim_side)]
    if k in ("renyi2-swap", "negativity-moment"):
        from .lattice import rectangle_region

        dim = int(g.get("dim", 2))
        lat = build_torus_2d(L, L) if dim == 2 else build_torus_3d(L)
        ext = tuple(g.get("extent", (1,) * dim))
        region = rectangle_region(lat, (0,) * dim, ext)
        if k == "renyi2-swap":
            return [(k, renyi2_swap(p, lat, region))]
        target = g.get("target", RHO2_2D if dim == 2 else RHO_3D)
        return [(k, negativity_moment(p, lat, region, int(g.get("n2", 4)), target))]
    if k == "overlap-F-alpha":
        r = overlap_F_alpha(p, build_torus_2d(L, L), float(g.get("alpha", 2.0)))
        return [(k, Estimate.exact(r.value))]
    raise ValueError(k)
