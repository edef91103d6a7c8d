"""Twisted boundary conditions, domain-wall free energies and correlators."""

from __future__ import annotations

import math
import warnings

from .exact import LogPartition, exact_logZ, exact_spin_correlation, is_contractible_twist, log_ratio
from .models import ISING2D, DisorderSample
from .montecarlo import McConfig, mc_run, mc_twist_dF
from .transfer import transfer_logZ_2d


def _edges(cycle):
    return tuple(cycle.edges if hasattr(cycle, "edges") else cycle)


def logZ(sample: DisorderSample, backend: str = "auto") -> LogPartition:
    if backend == "auto":
        backend = "exact" if sample.model.n_spins <= 24 or sample.model.kind != ISING2D else "transfer"
    if backend == "exact":
        return exact_logZ(sample)
    if backend == "transfer":
        return transfer_logZ_2d(sample)
    raise ValueError(f"unknown backend {backend!r}")


def twisted_logZ(sample: DisorderSample, cycle, backend: str = "auto") -> LogPartition:
    """``log Z`` with the term signs on ``cycle`` flipped.

    A contractible twist is removable by spin flips; the untwisted value is
    returned with ``contractible_twist`` set and a warning issued.
    """
    edges = _edges(cycle)
    if is_contractible_twist(sample.model, edges):
        warnings.warn("twist is contractible; domain-wall free energy is zero", stacklevel=2)
        base = logZ(sample, backend)
        return LogPartition(base.log_z, base.beta, base.ground, base.log_degeneracy,
                            base.method, contractible_twist=True)
    return logZ(sample.twisted(edges), backend)


def domain_wall_dF(sample: DisorderSample, cycle, backend: str = "auto") -> float:
    """``-log(Z_twisted / Z)``; ``+inf`` when the twist costs extensive energy at ``beta = inf``."""
    tw = twisted_logZ(sample, cycle, backend)
    if tw.contractible_twist:
        return 0.0
    return -log_ratio(tw, logZ(sample, backend))


def spin_correlation(sample: DisorderSample, a: int, b: int, backend: str = "exact",
                     config: McConfig | None = None):
    """``<s_a s_b>``: a float for ``exact``, an Estimate for ``mc``."""
    if backend == "exact":
        return exact_spin_correlation(sample, a, b)
    if backend == "mc":
        if a == b:
            from ..estimate import Estimate
            return Estimate.exact(1.0, "mc-thermal")
        res = mc_run(sample, config or McConfig(), (("corr", a, b),))
        return res.estimates[("corr", a, b)]
    raise ValueError(f"unknown backend {backend!r}")


def mc_domain_wall_dF(sample: DisorderSample, cycle, config: McConfig | None = None):
    """Approximate thermodynamic-integration estimate (flagged ``approximate``)."""
    if math.isinf(sample.beta):
        raise ValueError("thermodynamic integration needs finite beta")
    return mc_twist_dF(sample, cycle, config or McConfig(4000, 500))
