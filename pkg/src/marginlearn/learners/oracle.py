"""Brute-force margin ERM for low-dimensional spans, used to certify OPT."""

from __future__ import annotations

import math

import numpy as np

from ..core import Halfspace, WeightedDataset
from ..spectral import SubspaceBasis, iter_cover

MAX_ORACLE_DIM = 4


def brute_force_erm(D: WeightedDataset, gamma: float, resolution: float) -> tuple[Halfspace, float]:
    """Minimize the (gamma - resolution)-margin error over a sphere cover of the data span.

    For the best unit vector w*, some cover point is within ``resolution``
    of it, so every sample with margin above gamma under w* keeps margin above
    gamma - resolution.  The returned value therefore never exceeds OPT_gamma.
    Ties go to the first point in cover order.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    live = D.probs > 0
    B = SubspaceBasis.span_of(D.X[live]) if live.any() else SubspaceBasis.empty(D.dim)
    if B.dim_v > MAX_ORACLE_DIM:
        raise ValueError(f"data span has dimension {B.dim_v}; the oracle handles at most {MAX_ORACLE_DIM}")
    thr = gamma - resolution
    if B.dim_v == 0:
        w = np.zeros(D.dim)
        return Halfspace(w), math.fsum(D.probs[np.zeros(D.size) <= thr])

    best_w, best = None, math.inf
    for batch in iter_cover(B, min(resolution, 2.0), "sphere", batch_size=4096):
        bad = D.y[:, None] * (D.X @ batch.T) <= thr
        errs = D.probs @ bad
        lo = float(errs.min())
        if lo > best + 1e-12:
            continue
        for j in np.flatnonzero(errs <= lo + 1e-12):
            exact = math.fsum(D.probs[bad[:, j]])
            if exact < best:
                best, best_w = exact, batch[j].copy()
    return Halfspace(best_w), best
