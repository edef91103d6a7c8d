"""Coupling conventions shared by the classical and quantum sides.

Three maps appear:

* Nishimori line, ``tanh(beta) = 1 - 2p``;
* non-optimal decomposition, ``K = -log tanh(beta / 2)``;
* replica/negativity models, ``K = -log(1 - 2p)``.

Each is exposed as a named function so that no module inlines them.
"""

from __future__ import annotations

import math

INF = math.inf


def _check_p(p: float) -> float:
    p = float(p)
    if not (0.0 <= p <= 0.5) or math.isnan(p):
        raise ValueError(f"error rate must lie in [0, 0.5], got {p}")
    return p


def _bisect(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = f(lo)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def nishimori_beta(p: float) -> float:
    """Solve ``tanh(beta) = 1 - 2p`` by bisection; ``p = 0`` gives ``inf``."""
    p = _check_p(p)
    if p == 0.0:
        return INF
    target = 1.0 - 2.0 * p
    if target == 0.0:
        return 0.0
    hi = 1.0
    while math.tanh(hi) < target:
        hi *= 2.0
        if hi > 64:
            return hi
    return _bisect(lambda b: math.tanh(b) - target, 0.0, hi)


def nishimori_p(beta: float) -> float:
    """Inverse of :func:`nishimori_beta`."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if math.isinf(beta):
        return 0.0
    return 0.5 * (1.0 - math.tanh(beta))


def k_nonoptimal(beta: float) -> float:
    """``K = -log tanh(beta / 2)`` (dual coupling of the non-optimal ensemble)."""
    if math.isinf(beta):
        return 0.0
    if beta == 0:
        return INF
    return -math.log(math.tanh(beta / 2.0))


def k_replica(p: float) -> float:
    """``K = -log(1 - 2p)`` used by the flavored (replica) Ising models."""
    p = _check_p(p)
    if p == 0.5:
        return INF
    return -math.log1p(-2.0 * p)


def nonoptimal_disorder_rate(beta: float) -> float:
    """Bond-flip rate ``t^2 / (1 + t^2)`` with ``t = tanh(beta / 2)``.

    This is the Nishimori rate of the coupling ``K = -log tanh(beta / 2)``.
    """
    if math.isinf(beta):
        return 0.5
    t2 = math.tanh(beta / 2.0) ** 2
    return t2 / (1.0 + t2)
