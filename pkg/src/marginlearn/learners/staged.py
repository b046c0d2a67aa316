"""Multi-stage spectral search: the (1 + delta)-approximate proper learner.

Each stage conditions on the samples the current weight vector gets wrong
at margin gamma/2, covers the top-k eigenspace of their second moment, and
branches on ``w + p`` for every cover point ``p``.  Sequences of k values
are bounded by ``sum(k) <= floor(8 / (delta gamma^2)) + 2``.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ..core import LearnParams, WeightedDataset
from ..spectral import (
    cover_size_estimate,
    eigendecompose,
    iter_cover,
    numerical_rank,
    second_moment,
    top_k_eigenspace,
)
from ._common import BudgetExceeded, LearnReport, Search, build_report, partial_failure, run_search

_EIG_CACHE_LIMIT = 4096


def stage_budget(p: LearnParams) -> int:
    return math.floor(8 / (p.delta_slack * p.gamma**2)) + 2


def _clip_rows(W: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(W, axis=1)
    return W / np.maximum(1.0, norms)[:, None]


def learn_staged(
    D: WeightedDataset, p: LearnParams, exhaustive: bool = False, keep_candidates: bool = False
) -> LearnReport:
    """Argmin of the gamma/2-margin error over all staged candidates.

    Enumeration is depth first: at each node, k runs upward, cover points run
    in cover order, and each batch of children is evaluated before any of them
    is expanded.  The zero cover point is skipped because its subtree is
    contained in its parent's.

    Unless ``exhaustive`` is set, when the data span has rank r <= the stage
    budget and the r-dimensional cover fits the budget, only the one-stage
    sequence (r) is enumerated.  That cover holds a point within delta*gamma^3
    of the projection of any unit w*, whose gamma/2-margin error is therefore
    at most OPT_gamma, so the guarantee is kept.
    """
    if p.delta_slack > 1:
        raise ValueError("delta_slack must lie in (0, 1] for the staged learner")
    started = time.perf_counter()
    D.check()
    half = p.gamma / 2
    res = p.delta_slack * p.gamma**3
    kmax = stage_budget(p)
    search = Search(D, half, p.budget_cap, keep=keep_candidates)
    keep = keep_candidates
    cache: dict[bytes, tuple] = {}
    solved = [0]
    details: dict = {"stage_budget": kmax, "resolution": res, "shortcut": False}

    def spectrum(mask: np.ndarray):
        key = mask.tobytes()
        hit = cache.get(key)
        if hit is None:
            E = eigendecompose(second_moment(D.subset(mask)))
            hit = (E, numerical_rank(E))
            solved[0] += 1
            if len(cache) >= _EIG_CACHE_LIMIT:
                cache.clear()
            cache[key] = hit
        return hit

    def expand(w: np.ndarray, rem: int, seq: tuple, path: tuple, only_k: int | None = None):
        mask = D.y * (D.X @ w) <= half
        if not mask.any() or math.fsum(D.probs[mask]) <= 0:
            return
        E, rank = spectrum(mask)
        if rank == 0:
            return
        ks = [only_k] if only_k is not None else range(1, min(rem, rank) + 1)
        for k in ks:
            B = top_k_eigenspace(E, k)
            ordinal = 0
            for batch in iter_cover(B, res, "ball", batch_size=search.batch_size):
                batch = batch[np.any(batch != 0, axis=1)]
                if batch.shape[0] == 0:
                    continue
                W = w + batch
                idx = range(ordinal, ordinal + batch.shape[0])
                ordinal += batch.shape[0]
                trace = [(seq + (k,), path + (i,)) for i in idx] if keep else None
                search.offer(_clip_rows(W), trace)
                if only_k is None and rem - k >= 1:
                    for j, i in enumerate(idx):
                        expand(W[j], rem - k, seq + (k,), path + (i,))

    def body():
        w0 = np.zeros(D.dim)
        search.offer(w0[None, :], [((), ())] if keep else None)
        E, rank = spectrum(np.ones(D.size, dtype=bool))
        details["rank"] = rank
        if not exhaustive and 1 <= rank <= kmax:
            est = cover_size_estimate(rank, res, "ball")
            if p.budget_cap is None or est <= p.budget_cap:
                details["shortcut"] = True
                search.estimate = est
                expand(w0, kmax, (), (), only_k=rank)
                return
        expand(w0, kmax, (), ())

    try:
        details["early_exit"] = run_search(search, body)
    except BudgetExceeded as exc:
        raise partial_failure(exc, "staged", D, search, p.gamma, started, p.seed, details) from None
    details["eigendecompositions"] = solved[0]
    return build_report("staged", D, search.best_w, p.gamma, search.examined, started, p.seed,
                        details, candidates=search.candidates)
