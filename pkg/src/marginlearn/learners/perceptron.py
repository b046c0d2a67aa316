"""Classical perceptron, the 1/gamma-approximation baseline."""

from __future__ import annotations

import time

import numpy as np

from ..core import WeightedDataset
from ._common import LearnReport, build_report


def perceptron(D: WeightedDataset, max_passes: int = 100, seed: int = 0, gamma: float = 0.1) -> LearnReport:
    """Update ``w += y x`` whenever ``y <w, x> <= 0``; visit order is reshuffled each pass.

    Samples with zero mass are ignored.  Stops after a pass with no updates
    or after ``max_passes``.  ``gamma`` only sets the margins in the report.
    """
    if max_passes < 1:
        raise ValueError("max_passes must be positive")
    started = time.perf_counter()
    D.check()
    rng = np.random.default_rng(seed)
    live = np.flatnonzero(D.probs > 0)
    X, y = D.X, D.y
    w = np.zeros(D.dim)
    updates = 0
    passes = 0
    converged = False
    while passes < max_passes:
        passes += 1
        clean = True
        for i in rng.permutation(live):
            if y[i] * (X[i] @ w) <= 0:
                w = w + y[i] * X[i]
                updates += 1
                clean = False
        if clean:
            converged = True
            break
    norm = np.linalg.norm(w)
    out = w / norm if norm > 0 else w
    details = {"updates": updates, "passes": passes, "converged": converged}
    return build_report("perceptron", D, out, gamma, updates, started, seed, details)
