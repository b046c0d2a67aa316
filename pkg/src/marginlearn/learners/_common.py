"""Reports, budgets and batched candidate evaluation shared by the learners."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..core import Halfspace, WeightedDataset, margin_profile, zero_one_error

# entries of the (samples x candidates) comparison matrix per evaluation batch
_CELLS_PER_BATCH = 4_000_000
_TIE_SLACK = 1e-12


@dataclass
class LearnReport:
    learner: str
    hypothesis: Halfspace
    train_zero_one: float
    train_margin_errors: dict[str, float]
    candidates_examined: int
    wallclock_ms: int
    seed: int
    status: str = "ok"
    details: dict[str, Any] = field(default_factory=dict)
    candidates: "CandidateSet | None" = field(default=None, repr=False, compare=False)

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        out = {
            "learner": self.learner,
            "hypothesis": [float(v) for v in self.hypothesis.w],
            "train_zero_one": self.train_zero_one,
            "train_margin_errors": dict(self.train_margin_errors),
            "candidates_examined": self.candidates_examined,
            "seed": self.seed,
            "status": self.status,
            "details": _plain(self.details),
        }
        if timing:
            out["wallclock_ms"] = self.wallclock_ms
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, indent=2) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


@dataclass
class CandidateSet:
    """Every candidate a learner evaluated, with how it was produced."""

    candidates: list[np.ndarray] = field(default_factory=list)
    provenance: list[tuple] = field(default_factory=list)

    def add(self, W: np.ndarray, trace: list[tuple]) -> None:
        self.candidates.extend(np.array(w) for w in W)
        self.provenance.extend(trace)

    def __len__(self) -> int:
        return len(self.candidates)

    def matrix(self) -> np.ndarray:
        return np.vstack(self.candidates)


class BudgetExceeded(RuntimeError):
    """Candidate enumeration hit ``budget_cap``; ``report`` holds the best so far."""

    def __init__(self, examined: int, budget: int, estimate: float | None, report: LearnReport | None):
        self.examined = examined
        self.budget = budget
        self.estimate = estimate
        self.report = report
        msg = f"examined {examined} candidates, budget is {budget}"
        if estimate is not None:
            msg += f" (full enumeration needs about {estimate:.3g})"
        super().__init__(msg)


class _StopSearch(Exception):
    pass


class Search:
    """Tracks the running argmin of an error objective over candidate batches.

    Ties go to the earliest candidate.  Errors are computed with a batched
    matrix product and then recomputed exactly (``math.fsum``) for every
    candidate within a hair of the batch minimum, so float summation order can
    never reorder a tie.  Reaching zero error stops the search, which is exact
    because nothing can beat it.
    """

    def __init__(self, D: WeightedDataset, threshold: float | None, budget_cap: int | None,
                 keep: bool = False, stop_at_zero: bool = True):
        self.D = D
        self.threshold = threshold  # None: zero-one error
        self.budget_cap = budget_cap
        self.examined = 0
        self.best_w: np.ndarray | None = None
        self.best_err = math.inf
        self.best_trace: tuple | None = None
        self.stop_at_zero = stop_at_zero
        self.candidates = CandidateSet() if keep else None
        self.estimate: float | None = None

    @property
    def batch_size(self) -> int:
        return max(16, min(8192, _CELLS_PER_BATCH // max(1, self.D.size)))

    def _bad(self, W: np.ndarray) -> np.ndarray:
        S = self.D.X @ W.T
        if self.threshold is None:
            return np.where(S >= 0, 1, -1) != self.D.y[:, None]
        return self.D.y[:, None] * S <= self.threshold

    def errors(self, W: np.ndarray) -> np.ndarray:
        return self.D.probs @ self._bad(W)

    def offer(self, W: np.ndarray, trace: list[tuple] | None = None) -> np.ndarray:
        """Evaluate a batch of candidates; returns their (batched) errors."""
        W = np.atleast_2d(W)
        out = np.empty(W.shape[0])
        for start in range(0, W.shape[0], self.batch_size):
            chunk = W[start : start + self.batch_size]
            n = chunk.shape[0]
            if self.budget_cap is not None and self.examined + n > self.budget_cap:
                room = self.budget_cap - self.examined
                if room > 0:
                    part = trace[start : start + room] if trace is not None else None
                    self._take(chunk[:room], part, out[start : start + room])
                raise BudgetExceeded(self.examined, self.budget_cap, self.estimate, None)
            part = trace[start : start + n] if trace is not None else None
            self._take(chunk, part, out[start : start + n])
        return out

    def _take(self, W: np.ndarray, trace, out: np.ndarray) -> None:
        bad = self._bad(W)
        errs = self.D.probs @ bad
        out[:] = errs
        self.examined += W.shape[0]
        if self.candidates is not None:
            self.candidates.add(W, trace if trace is not None else [()] * W.shape[0])
        lo = float(errs.min())
        if lo > self.best_err + _TIE_SLACK:
            return
        for j in np.flatnonzero(errs <= lo + _TIE_SLACK):
            exact = math.fsum(self.D.probs[bad[:, j]])
            if exact < self.best_err:
                self.best_err = exact
                self.best_w = np.array(W[j])
                self.best_trace = trace[j] if trace is not None else None
        if self.stop_at_zero and self.best_err == 0.0:
            raise _StopSearch


def run_search(search: Search, body) -> bool:
    """Run ``body()``; returns True when the search stopped early at zero error."""
    try:
        body()
    except _StopSearch:
        return True
    return False


def build_report(
    learner: str,
    D: WeightedDataset,
    w: np.ndarray,
    gamma: float,
    examined: int,
    started: float,
    seed: int,
    details: dict[str, Any] | None = None,
    status: str = "ok",
    candidates: CandidateSet | None = None,
) -> LearnReport:
    h = Halfspace(w).normalized()
    return LearnReport(
        learner=learner,
        hypothesis=h,
        train_zero_one=zero_one_error(D, h),
        train_margin_errors=margin_profile(D, h.w, gamma),
        candidates_examined=examined,
        wallclock_ms=int(round((time.perf_counter() - started) * 1000)),
        seed=seed,
        status=status,
        details=details or {},
        candidates=candidates,
    )


def partial_failure(exc: BudgetExceeded, learner: str, D: WeightedDataset, search: Search,
                    gamma: float, started: float, seed: int, details: dict[str, Any]) -> BudgetExceeded:
    """Attach the best-so-far report to a budget failure."""
    w = search.best_w if search.best_w is not None else np.zeros(D.dim)
    details = dict(details, best_objective=search.best_err if search.best_w is not None else None)
    exc.report = build_report(learner, D, w, gamma, search.examined, started, seed, details,
                              status="budget_exhausted", candidates=search.candidates)
    exc.estimate = search.estimate
    return exc
