"""Mean / standard error containers and error analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EXACT = "exact-enumeration"
TRANSFER = "transfer"
MC_DISORDER = "mc-disorder"
MC_THERMAL = "mc-thermal"


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_samples: int
    method: str
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if not (self.stderr >= 0):
            raise ValueError("stderr must be non-negative")

    @classmethod
    def exact(cls, value: float, method: str = EXACT) -> "Estimate":
        return cls(float(value), 0.0, 1, method)

    @classmethod
    def from_samples(cls, values, method: str = MC_DISORDER, flags=()) -> "Estimate":
        v = np.asarray(values, dtype=np.float64)
        n = len(v)
        err = float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(v.mean()), err, n, method, tuple(flags))


def binning_error(series, min_bins: int = 32, tol: float = 0.2) -> tuple[float, bool]:
    """Standard error of a correlated series by repeated pairwise binning.

    Returns ``(error, plateaued)``.  The error is taken at the coarsest level
    that still has ``min_bins`` bins; ``plateaued`` is True when the last two
    levels agree within ``tol`` relative.
    """
    x = np.asarray(series, dtype=np.float64)
    errs = []
    while len(x) >= min_bins:
        n = len(x)
        errs.append(float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0)
        x = 0.5 * (x[: n // 2 * 2 : 2] + x[1 : n // 2 * 2 : 2])
    if not errs:
        x = np.asarray(series, dtype=np.float64)
        n = len(x)
        return (float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0), False
    if len(errs) < 2:
        return errs[-1], False
    a, b = errs[-2], errs[-1]
    top = max(errs)
    if top == 0.0:
        return 0.0, True
    return top, abs(b - a) <= tol * max(a, b)
