"""Cover the large-eigenvalue subspace and keep the best direction."""

from __future__ import annotations

import time

import numpy as np

from ..core import LearnParams, WeightedDataset
from ..spectral import cover_size_estimate, eigendecompose, eigenspace_above, iter_cover, second_moment
from ._common import BudgetExceeded, LearnReport, Search, build_report, partial_failure, run_search


def basic_threshold(p: LearnParams) -> float:
    return p.epsilon * p.gamma**2 / 16


def learn_basic(D: WeightedDataset, p: LearnParams, keep_candidates: bool = False) -> LearnReport:
    """Minimize the gamma/4-margin error over a sphere cover of V_{>= delta}.

    ``delta = epsilon * gamma^2 / 16`` and the cover resolution is delta/2.
    Candidates are visited lazily in cover order, so an exact zero-error
    candidate ends the search without materializing the rest of the cover.
    """
    started = time.perf_counter()
    D.check()
    delta = basic_threshold(p)
    E = eigendecompose(second_moment(D))
    B = eigenspace_above(E, delta)
    details = {"delta": delta, "dim_v": B.dim_v, "resolution": delta / 2}
    if B.dim_v == 0:
        details["degenerate"] = True
        return build_report("basic", D, np.zeros(D.dim), p.gamma, 0, started, p.seed, details)

    estimate = cover_size_estimate(B.dim_v, delta / 2, "sphere")
    details["cover_estimate"] = estimate
    search = Search(D, p.gamma / 4, p.budget_cap, keep=keep_candidates)
    search.estimate = estimate

    def body():
        for batch in iter_cover(B, delta / 2, "sphere", batch_size=search.batch_size):
            search.offer(batch)

    try:
        details["early_exit"] = run_search(search, body)
    except BudgetExceeded as exc:
        raise partial_failure(exc, "basic", D, search, p.gamma, started, p.seed, details) from None
    return build_report("basic", D, search.best_w, p.gamma, search.examined, started, p.seed,
                        details, candidates=search.candidates)
