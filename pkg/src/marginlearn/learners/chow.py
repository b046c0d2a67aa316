"""Chow-parameter learners: reconstruction, the explicit-support learner, and its JL wrapper."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from ..core import DimensionError, Halfspace, LearnParams, WeightedDataset, as_vector, zero_one_error
from ..spectral import SubspaceBasis, cover_size_estimate, iter_cover, jl_transform_rows, sample_jl
from ._common import (
    BudgetExceeded,
    LearnReport,
    Search,
    build_report,
    partial_failure,
    run_search,
)

JL_CONSTANT = 8
JL_ATTEMPTS = 5
DEFAULT_ROUNDS = 200


def chow_vector(D: WeightedDataset, h: Halfspace | np.ndarray) -> np.ndarray:
    """E[h(x) x] under the sample marginal, with sign(0) = +1."""
    w = h.w if isinstance(h, Halfspace) else as_vector(h)
    if w.shape[0] != D.dim:
        raise DimensionError(f"halfspace has dimension {w.shape[0]}, dataset has {D.dim}")
    s = np.where(D.X @ w >= 0, 1.0, -1.0)
    return (s * D.probs) @ D.X


def empirical_chow(D: WeightedDataset) -> np.ndarray:
    """E[y x]."""
    return (D.y * D.probs) @ D.X


def _chow_many(D: WeightedDataset, W: np.ndarray) -> np.ndarray:
    S = np.where(D.X @ W.T >= 0, 1.0, -1.0)
    return (S * D.probs[:, None]).T @ D.X


def _clip_rows(W: np.ndarray) -> np.ndarray:
    return W / np.maximum(1.0, np.linalg.norm(W, axis=1))[:, None]


def reconstruct_many(D: WeightedDataset, C: np.ndarray, rounds: int = DEFAULT_ROUNDS,
                     step: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Run the residual iteration for every row of ``C`` at once.

    Returns the best iterate per row and its Chow residual norm.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    W = C.copy()
    best = W.copy()
    best_res = np.full(C.shape[0], np.inf)
    for t in range(rounds + 1):
        R = C - _chow_many(D, W)
        res = np.linalg.norm(R, axis=1)
        better = res < best_res
        best[better] = W[better]
        best_res[better] = res[better]
        if t == rounds or not np.any(res > 0):
            break
        W = _clip_rows(W + step * R)
    return best, best_res


def chow_to_halfspace(D: WeightedDataset, c, rounds: int = DEFAULT_ROUNDS, step: float = 1.0) -> Halfspace:
    """Find a halfspace whose Chow vector is close to ``c``.

    Starts at ``w = c`` and repeats ``w <- clip(w + step * (c - Chow(h_w)))``,
    returning the iterate with the smallest residual (first one on ties).
    """
    c = as_vector(c)
    if c.shape[0] != D.dim:
        raise ValueError(f"vector has dimension {c.shape[0]}, dataset has {D.dim}")
    if np.linalg.norm(c) > 1 + 1e-9:
        raise ValueError("Chow target must lie in the unit ball")
    W, _ = reconstruct_many(D, c[None, :], rounds, step)
    return Halfspace(W[0])


def guess_depth(alpha: float, gamma: float) -> int:
    ag = alpha * gamma
    return math.ceil(math.log(1 / ag) / ag**2)


def _support(D: WeightedDataset) -> np.ndarray:
    live = D.X[D.probs > 0]
    _, first = np.unique(live, axis=0, return_index=True)
    pts = live[np.sort(first)]
    return pts[np.any(pts != 0, axis=1)]


def _span_key(B: SubspaceBasis) -> bytes:
    proj = B.basis.T @ B.basis
    return np.round(proj, 9).tobytes()


def learn_chow_explicit(
    D: WeightedDataset,
    p: LearnParams,
    opt_guess: float,
    rounds: int = DEFAULT_ROUNDS,
    keep_candidates: bool = False,
) -> LearnReport:
    """Guess a low-dimensional correction to the empirical Chow vector.

    For every set of at most m support points (m = ceil(ln(1/ag)/ag^2) with
    ag = alpha*gamma), the component of P = E[y x] inside their span V is
    replaced by each point g of an (ag * opt_guess)-cover of V's unit ball,
    and the result is turned into a halfspace.  The hypothesis with the
    smallest zero-one error wins.  Spans are visited by increasing size and
    deduplicated; the empty span (P itself) comes first.
    """
    if not 0 < opt_guess <= 0.5:
        raise ValueError("opt_guess must lie in (0, 1/2]")
    ag = p.alpha * p.gamma
    if ag >= 1:
        raise ValueError("alpha * gamma must be below 1")
    started = time.perf_counter()
    D.check()
    depth = guess_depth(p.alpha, p.gamma)
    res = min(2.0, ag * opt_guess)
    P = empirical_chow(D)
    pts = _support(D)
    max_size = min(depth, D.dim, pts.shape[0])
    estimate = sum(math.comb(pts.shape[0], j) * cover_size_estimate(j, res, "ball") for j in range(max_size + 1))
    details = {"guess_depth": depth, "resolution": res, "opt_guess": opt_guess,
               "support": int(pts.shape[0]), "spans": 0, "enumeration_estimate": estimate}
    search = Search(D, None, p.budget_cap, keep=keep_candidates)
    search.estimate = estimate
    seen: set[bytes] = set()

    def offer_targets(targets: np.ndarray, trace):
        W, _ = reconstruct_many(D, targets, rounds)
        search.offer(W, trace)

    def body():
        details["spans"] += 1
        offer_targets(P[None, :], [((), 0)] if keep_candidates else None)
        for size in range(1, max_size + 1):
            for combo in itertools.combinations(range(pts.shape[0]), size):
                B = SubspaceBasis.span_of(pts[list(combo)])
                if B.dim_v < size:
                    continue  # same span as a smaller set, already visited
                key = _span_key(B)
                if key in seen:
                    continue
                seen.add(key)
                details["spans"] += 1
                base = P - B.basis.T @ (B.basis @ P)
                ordinal = 0
                for G in iter_cover(B, res, "ball", batch_size=max(16, search.batch_size // 8)):
                    trace = [(combo, ordinal + i) for i in range(G.shape[0])] if keep_candidates else None
                    ordinal += G.shape[0]
                    # clipping onto the ball never moves a target away from Chow(f*)
                    offer_targets(_clip_rows(base + G), trace)

    try:
        details["early_exit"] = run_search(search, body)
    except BudgetExceeded as exc:
        raise partial_failure(exc, "chow", D, search, p.gamma, started, p.seed, details) from None
    return build_report("chow", D, search.best_w, p.gamma, search.examined, started, p.seed,
                        details, candidates=search.candidates)


def jl_dimension(alpha: float, epsilon: float, gamma: float) -> int:
    return max(1, math.ceil(JL_CONSTANT * math.log(alpha / epsilon) / gamma**2))


def opt_guess_grid(alpha: float, epsilon: float) -> list[float]:
    g = epsilon / alpha
    out = []
    while g < 0.5:
        out.append(g)
        g *= 2
    out.append(0.5)
    return out


def learn_alpha(D: WeightedDataset, p: LearnParams, rounds: int = DEFAULT_ROUNDS) -> LearnReport:
    """Project with a random sign matrix, learn there at gamma/2, and pull the weights back.

    The inner learner runs for every OPT guess on a doubling grid from
    epsilon/alpha to 1/2.  A guess g is accepted when the lifted hypothesis
    has training error at most alpha*g + epsilon; if no guess is accepted the
    projection is redrawn with the next seed (at most five draws).
    """
    started = time.perf_counter()
    D.check()
    m_jl = jl_dimension(p.alpha, p.epsilon, p.gamma)
    guesses = opt_guess_grid(p.alpha, p.epsilon)
    inner = LearnParams(gamma=p.gamma / 2, epsilon=p.epsilon, delta_slack=p.delta_slack,
                        alpha=p.alpha, tau=p.tau, seed=p.seed, budget_cap=p.budget_cap)
    best_w, best_err = np.zeros(D.dim), math.inf
    examined = 0
    attempts = []
    accepted = False
    try:
        for attempt in range(JL_ATTEMPTS):
            A = sample_jl(D.dim, m_jl, p.seed + attempt)
            Y, flags = jl_transform_rows(A, D.X)
            DA = WeightedDataset(Y, D.y, D.probs)
            runs = []
            for g in guesses:
                rep = learn_chow_explicit(DA, inner, g, rounds)
                examined += rep.candidates_examined
                lifted = A.matrix.T @ rep.hypothesis.w
                err = zero_one_error(D, lifted)
                runs.append({"opt_guess": g, "train_zero_one": err})
                if err < best_err:
                    best_err, best_w = err, lifted
                if err <= p.alpha * g + p.epsilon:
                    accepted = True
                if best_err == 0.0:
                    break
            attempts.append({"seed": p.seed + attempt, "flagged": int(flags.sum()), "runs": runs})
            if accepted:
                break
    except BudgetExceeded as exc:
        details = {"jl_dim": m_jl, "attempts": attempts, "accepted": False}
        exc.report = build_report("alpha", D, best_w, p.gamma, examined + exc.examined, started,
                                  p.seed, details, status="budget_exhausted")
        raise
    details = {"jl_dim": m_jl, "attempts": attempts, "accepted": accepted}
    norm = np.linalg.norm(best_w)
    w = best_w / norm if norm > 0 else best_w
    return build_report("alpha", D, w, p.gamma, examined, started, p.seed, details)


def learn_chow(D: WeightedDataset, p: LearnParams, rounds: int = DEFAULT_ROUNDS) -> LearnReport:
    """The explicit-support learner over the OPT-guess grid, without projection.

    Guesses run upward; the first one whose hypothesis has training error at
    most alpha*g + epsilon stops the loop.  The best hypothesis seen wins.
    """
    started = time.perf_counter()
    D.check()
    best, examined, runs, accepted = None, 0, [], False
    try:
        for g in opt_guess_grid(p.alpha, p.epsilon):
            rep = learn_chow_explicit(D, p, g, rounds)
            examined += rep.candidates_examined
            runs.append({"opt_guess": g, "train_zero_one": rep.train_zero_one})
            if best is None or rep.train_zero_one < best.train_zero_one:
                best = rep
            if rep.train_zero_one <= p.alpha * g + p.epsilon:
                accepted = True
                break
    except BudgetExceeded as exc:
        w = best.hypothesis.w if best is not None else exc.report.hypothesis.w
        details = {"guess_depth": guess_depth(p.alpha, p.gamma), "runs": runs, "accepted": False}
        exc.report = build_report("chow", D, w, p.gamma, examined + exc.examined, started, p.seed,
                                  details, status="budget_exhausted")
        raise
    details = {"guess_depth": guess_depth(p.alpha, p.gamma), "runs": runs, "accepted": accepted}
    return build_report("chow", D, best.hypothesis.w, p.gamma, examined, started, p.seed, details)
