"""Threshold formulas, finite-size crossings and boundary-law fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .couplings import nishimori_beta, nishimori_p

__all__ = [
    "ThresholdConstants", "THRESHOLDS", "nishimori_beta", "nishimori_p", "non_optimal_threshold",
    "pc2_closed_form", "CrossingResult", "crossing_find", "TeeFit", "tee_fit", "threshold_table",
]


@dataclass(frozen=True)
class ThresholdConstants:
    """Reference literature thresholds (Nishimori-line critical error rates)."""

    p_2dRBIM: float = 0.109
    p_3dRPGM: float = 0.029
    p_3dRBIM: float = 0.233
    p_3dPlaquette: float = 0.152

    def __post_init__(self):
        for name in ("p_2dRBIM", "p_3dRPGM", "p_3dRBIM", "p_3dPlaquette"):
            v = getattr(self, name)
            if not 0.0 < v < 0.5:
                raise ValueError(f"{name} must lie in (0, 0.5)")


THRESHOLDS = ThresholdConstants()


def non_optimal_threshold(p_ref: float) -> float:
    """Error rate ``p`` whose non-optimal coupling sits at the reference threshold.

    Solves ``tanh^2(beta/2) = p_ref / (1 - p_ref)`` together with
    ``tanh(beta) = 1 - 2p``.
    """
    if not 0.0 < p_ref < 0.5:
        raise ValueError("p_ref must lie in (0, 0.5)")
    t2 = p_ref / (1.0 - p_ref)
    t = math.sqrt(t2)
    return 0.5 * (1.0 - 2.0 * t / (1.0 + t2))


@dataclass(frozen=True)
class Pc2:
    p: float
    K_c: float


def pc2_closed_form() -> Pc2:
    """``p_c = (1 - sqrt(sqrt2 - 1)) / 2`` and ``K_c = log(1 + sqrt2) / 2``."""
    return Pc2(0.5 * (1.0 - math.sqrt(math.sqrt(2.0) - 1.0)), 0.5 * math.log1p(math.sqrt(2.0)))


@dataclass(frozen=True)
class CrossingResult:
    """Located crossing of finite-size curves; ``found`` is False when none exists."""

    p_star: float
    err: float
    pairs: tuple
    roots: tuple
    found: bool = True


def _sigma(err: float, slope: float) -> float:
    return float(err / abs(slope)) if slope != 0 else math.inf


def _pair_roots(a, b):
    """Crossings of two ``(p, value, stderr)`` curves on their common p range."""
    pa, va, ea = a
    pb, vb, eb = b
    lo, hi = max(pa[0], pb[0]), min(pa[-1], pb[-1])
    grid = np.union1d(pa, pb)
    grid = grid[(grid >= lo) & (grid <= hi)]
    if len(grid) < 2:
        return []
    d = np.interp(grid, pb, vb) - np.interp(grid, pa, va)
    e = np.hypot(np.interp(grid, pa, ea), np.interp(grid, pb, eb))
    out = []
    for i in range(len(grid)):
        if i + 1 < len(grid):
            slope = (d[i + 1] - d[i]) / (grid[i + 1] - grid[i])
        else:
            slope = (d[i] - d[i - 1]) / (grid[i] - grid[i - 1])
        if d[i] == 0.0:
            out.append((float(grid[i]), _sigma(e[i], slope)))
        elif i + 1 < len(grid) and d[i] * d[i + 1] < 0:
            root = grid[i] - d[i] / slope
            out.append((float(root), _sigma(0.5 * (e[i] + e[i + 1]), slope)))
    return out


def crossing_find(curves: dict, p_range: tuple | None = None) -> CrossingResult:
    """Weighted mean of the pairwise linear-interpolation crossings.

    ``curves`` maps ``L -> (p, value, stderr)``; only points inside
    ``p_range`` (inclusive) are used.  Every sign change of every pair counts,
    so keep saturated tails out of the window.  The uncertainty combines the
    propagated error with the spread of the pairwise crossings.
    """
    if len(curves) < 2:
        raise ValueError("crossing analysis needs at least two sizes")
    data = {}
    for L in sorted(curves):
        p, v, e = (np.asarray(c, dtype=np.float64) for c in curves[L])
        order = np.argsort(p, kind="stable")
        p, v, e = p[order], v[order], e[order]
        if p_range is not None:
            keep = (p >= p_range[0]) & (p <= p_range[1])
            p, v, e = p[keep], v[keep], e[keep]
        data[L] = (p, v, e)
    pairs, roots = [], []
    for L1, L2 in combinations(sorted(data), 2):
        for root, sig in _pair_roots(data[L1], data[L2]):
            pairs.append((L1, L2))
            roots.append((root, sig))
    if not roots:
        return CrossingResult(math.nan, math.nan, (), (), found=False)
    r = np.array([x for x, _ in roots])
    s = np.array([max(y, 1e-12) for _, y in roots])
    w = 1.0 / s ** 2
    p_star = float(np.dot(w, r) / w.sum())
    stat = float(math.sqrt(1.0 / w.sum())) if np.isfinite(w.sum()) else 0.0
    spread = float(r.std(ddof=1)) if len(r) > 1 else 0.0
    err = max(math.hypot(stat, spread), 1e-12)
    return CrossingResult(p_star, err, tuple(pairs), tuple(float(x) for x in r))


@dataclass(frozen=True)
class TeeFit:
    slope: float
    intercept: float
    residual: float

    @property
    def tee(self) -> float:
        return -self.intercept


def tee_fit(boundary_sizes, s2_values) -> TeeFit:
    """Least-squares ``S2 = slope * |dA| + intercept``; the TEE is ``-intercept``."""
    x = np.asarray(boundary_sizes, dtype=np.float64)
    y = np.asarray(s2_values, dtype=np.float64)
    if len(x) < 3 or len(np.unique(x)) < 2:
        raise ValueError("tee_fit needs at least three regions with distinct boundaries")
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.abs(A @ np.array([slope, intercept]) - y).max())
    return TeeFit(float(slope), float(intercept), resid)


def threshold_table(constants: ThresholdConstants = THRESHOLDS) -> list[tuple[str, float, str]]:
    """Rows ``(name, value, note)`` derived from the closed-form relations."""
    pc2 = pc2_closed_form()
    rows = [
        ("2d non-optimal", non_optimal_threshold(constants.p_2dRBIM), f"from p_2dRBIM={constants.p_2dRBIM}"),
        ("3d non-optimal", non_optimal_threshold(constants.p_3dRBIM), f"from p_3dRBIM={constants.p_3dRBIM}"),
        ("rho2 closed form", pc2.p, f"K_c={pc2.K_c!r}"),
    ]
    for name in ("p_2dRBIM", "p_3dRPGM", "p_3dRBIM", "p_3dPlaquette"):
        p = getattr(constants, name)
        rows.append((f"nishimori beta at {name}", nishimori_beta(p), f"p={p}"))
    return rows
