"""Synthetic margin data, train/test experiments and learner sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.special import betainc

from .core import Halfspace, LearnParams, WeightedDataset, margin_profile, zero_one_error
from .learners import (
    BudgetExceeded,
    LearnReport,
    brute_force_erm,
    learn_alpha,
    learn_basic,
    learn_chow,
    learn_staged,
    perceptron,
)
from .learners.oracle import MAX_ORACLE_DIM

SAMPLE_CONSTANT = 100
MIN_ACCEPTANCE = 1e-6
ORACLE_RESOLUTION = 0.01

CSV_COLUMNS = [
    "learner", "dim", "gamma", "eps", "delta", "alpha", "eta", "m_train", "m_test",
    "train_01", "test_01", "train_margin_g", "train_margin_g2", "train_margin_g4",
    "train_margin_099g", "opt_oracle", "candidates", "ms", "seed", "status",
]


@dataclass(frozen=True)
class SyntheticSpec:
    dim: int
    n_samples: int
    gamma: float
    noise_rate: float = 0.0
    planted_seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.n_samples < 1:
            raise ValueError("dim and n_samples must be positive")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 <= self.noise_rate < 0.5:
            raise ValueError("noise_rate must lie in [0, 1/2)")


@dataclass
class SyntheticData:
    dataset: WeightedDataset
    planted: Halfspace
    flipped: np.ndarray  # indices of samples whose label was flipped


def acceptance_rate(dim: int, gamma: float) -> float:
    """Probability that a uniform point of the unit sphere has |<w, x>| >= gamma."""
    if dim == 1:
        return 1.0
    # <w, x>^2 is Beta(1/2, (dim - 1)/2) distributed
    return float(1.0 - betainc(0.5, (dim - 1) / 2, gamma**2))


def gen_synthetic(spec: SyntheticSpec) -> SyntheticData:
    """Uniform sphere points with margin at least gamma from a random planted unit vector.

    Labels follow the planted halfspace and are then flipped independently
    with probability ``noise_rate``.
    """
    rate = acceptance_rate(spec.dim, spec.gamma)
    if rate < MIN_ACCEPTANCE:
        raise ValueError(f"rejection sampling would accept about {rate:.3g} of draws; gamma too large for dim")
    rng = np.random.default_rng(spec.planted_seed)
    w = rng.standard_normal(spec.dim)
    w /= np.linalg.norm(w)
    chunks, have = [], 0
    while have < spec.n_samples:
        need = spec.n_samples - have
        batch = max(64, int(1.2 * need / rate) + 16)
        Z = rng.standard_normal((batch, spec.dim))
        Z /= np.linalg.norm(Z, axis=1, keepdims=True)
        Z = Z[np.abs(Z @ w) >= spec.gamma]
        chunks.append(Z[:need])
        have += chunks[-1].shape[0]
    X = np.vstack(chunks)
    y = np.where(X @ w >= 0, 1, -1)
    flip = rng.random(spec.n_samples) < spec.noise_rate
    y = np.where(flip, -y, y)
    D = WeightedDataset.uniform(X, y, {"source": "synthetic", **asdict(spec)})
    return SyntheticData(D, Halfspace(w), np.flatnonzero(flip))


def split(D: WeightedDataset, m_train: int) -> tuple[WeightedDataset, WeightedDataset]:
    """First ``m_train`` samples for training, the rest for testing, each reweighted uniformly."""
    train_idx = np.arange(m_train)
    test_idx = np.arange(m_train, D.size)
    assert not np.intersect1d(train_idx, test_idx).size
    if not 0 < m_train < D.size:
        raise ValueError("both splits must be non-empty")
    return (WeightedDataset.uniform(D.X[train_idx], D.y[train_idx]),
            WeightedDataset.uniform(D.X[test_idx], D.y[test_idx]))


# ---------------------------------------------------------------- learners by name

# margin (as a margin_profile key) that each learner's guarantee is stated at
GUARANTEE_MARGIN = {"basic": "gamma/4", "staged": "gamma/2", "chow": "gamma", "alpha": "gamma",
                    "perceptron": "gamma"}


def run_learner(name: str, D: WeightedDataset, p: LearnParams) -> LearnReport:
    if name == "basic":
        return learn_basic(D, p)
    if name == "staged":
        return learn_staged(D, p)
    if name == "chow":
        return learn_chow(D, p)
    if name == "alpha":
        return learn_alpha(D, p)
    if name == "perceptron":
        return perceptron(D, seed=p.seed, gamma=p.gamma)
    raise ValueError(f"unknown learner {name!r}")


# ---------------------------------------------------------------- generalization check

def required_samples(epsilon: float, gamma: float, tau: float, constant: float = SAMPLE_CONSTANT) -> int:
    return math.ceil(constant * math.log(1 / tau) / (epsilon**2 * gamma**2))


def binomial_std(q: float, m: int) -> float:
    q = min(max(q, 0.0), 1.0)
    return math.sqrt(q * (1 - q) / m)


@dataclass
class GeneralizationResult:
    status: str  # "pass", "fail" or "insufficient m"
    trials: list[dict[str, Any]] = field(default_factory=list)
    required_m: int = 0

    @property
    def passed(self) -> int:
        return sum(t["ok"] for t in self.trials)


def run_generalization_check(
    spec: SyntheticSpec,
    learner: str | Callable[[WeightedDataset, int], LearnReport],
    m_train: int,
    m_test: int,
    trials: int,
    params: LearnParams,
    margin_key: str | None = None,
    pass_fraction: float = 0.9,
) -> GeneralizationResult:
    """Train on fresh samples, test on disjoint fresh samples, compare with the margin bound.

    A trial passes when test 0-1 error <= training margin error + epsilon +
    3 binomial standard deviations of the test estimate (taken at the bound
    itself).  The check passes when at least ``pass_fraction`` of trials do.
    Trial t uses data seed ``spec.planted_seed + t`` and learner seed
    ``params.seed + t``.
    """
    need = required_samples(params.epsilon, spec.gamma, params.tau)
    if m_train < need:
        return GeneralizationResult("insufficient m", [], need)
    key = margin_key or (GUARANTEE_MARGIN.get(learner, "gamma") if isinstance(learner, str) else "gamma")
    out = []
    for t in range(trials):
        data = gen_synthetic(SyntheticSpec(spec.dim, m_train + m_test, spec.gamma, spec.noise_rate,
                                           spec.planted_seed + t))
        train, test = split(data.dataset, m_train)
        p = LearnParams(gamma=params.gamma, epsilon=params.epsilon, delta_slack=params.delta_slack,
                        alpha=params.alpha, tau=params.tau, seed=params.seed + t,
                        budget_cap=params.budget_cap)
        rep = run_learner(learner, train, p) if isinstance(learner, str) else learner(train, p.seed)
        train_margin = rep.train_margin_errors[key]
        test_err = zero_one_error(test, rep.hypothesis)
        bound = train_margin + params.epsilon
        slack = 3 * binomial_std(bound, m_test)
        out.append({"trial": t, "train_margin": train_margin, "test_01": test_err,
                    "flip_fraction": data.flipped.size / data.dataset.size,
                    "bound": bound + slack, "ok": test_err <= bound + slack})
    ok = sum(r["ok"] for r in out)
    status = "pass" if ok >= math.ceil(pass_fraction * trials) else "fail"
    return GeneralizationResult(status, out, need)


# ---------------------------------------------------------------- sweeps

@dataclass
class ExperimentReport:
    rows: list[dict[str, Any]]
    config: dict[str, Any]
    seeds: list[int]

    def by_learner(self) -> dict[str, list[dict[str, Any]]]:
        out: dict[str, list] = {}
        for r in self.rows:
            out.setdefault(r["learner"], []).append(r)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n", extrasaction="ignore")
        wr.writeheader()
        for r in self.rows:
            wr.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in CSV_COLUMNS})
        return buf.getvalue()

    def to_json(self) -> str:
        body = {"config": self.config, "seeds": self.seeds, "rows": self.rows}
        return json.dumps(body, sort_keys=True, indent=2) + "\n"


def _run_cell(learner: str, index: int, spec: dict[str, Any], params: dict[str, Any], seed: int,
              with_oracle: bool, timing: bool) -> dict[str, Any]:
    gamma = float(spec["gamma"])
    m_train, m_test = int(spec["m_train"]), int(spec["m_test"])
    p = LearnParams(gamma=gamma, epsilon=params.get("epsilon", 0.1),
                    delta_slack=params.get("delta", 1.0), alpha=params.get("alpha", 2.0),
                    tau=params.get("tau", 0.1), seed=seed,
                    budget_cap=params.get("budget_cap", 10**7))
    row: dict[str, Any] = {
        "learner": learner, "dim": int(spec["dim"]), "gamma": gamma, "eps": p.epsilon,
        "delta": p.delta_slack, "alpha": p.alpha, "eta": float(spec.get("eta", 0.0)),
        "m_train": m_train, "m_test": m_test, "seed": seed, "opt_oracle": None, "status": "ok",
        "spec_index": index,
    }
    started = time.perf_counter()
    try:
        data = gen_synthetic(SyntheticSpec(row["dim"], m_train + m_test, gamma, row["eta"], seed))
        train, test = split(data.dataset, m_train)
        try:
            rep = run_learner(learner, train, p)
        except BudgetExceeded as exc:
            rep = exc.report
            row["status"] = "budget_exhausted"
        prof = rep.train_margin_errors
        row.update(train_01=rep.train_zero_one, test_01=zero_one_error(test, rep.hypothesis),
                   train_margin_g=prof["gamma"], train_margin_g2=prof["gamma/2"],
                   train_margin_g4=prof["gamma/4"], train_margin_099g=prof["0.99gamma"],
                   candidates=rep.candidates_examined)
        if with_oracle and row["dim"] <= MAX_ORACLE_DIM:
            row["opt_oracle"] = brute_force_erm(train, gamma, ORACLE_RESOLUTION)[1]
    except Exception as exc:  # a failing cell must not stop the sweep
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    row["ms"] = int(round((time.perf_counter() - started) * 1000)) if timing else None
    return row


def sweep(config: dict[str, Any], timing: bool = True, workers: int = 1) -> ExperimentReport:
    """Run every learner on every spec.

    ``config`` holds ``learners`` (names), ``specs`` (dicts with dim, gamma,
    eta, m_train, m_test), optional ``params`` (epsilon, delta, alpha, tau,
    budget_cap), ``master_seed`` and ``opt_oracle``.  One seed per spec is
    spawned from the master seed; it drives both the data and the learner,
    so every learner sees the same sample for a given spec and no result
    depends on ``workers``.  With ``timing`` off the ``ms`` column is left
    empty and reruns are byte-identical.
    """
    if not config.get("learners") or not config.get("specs"):
        raise ValueError("sweep config needs non-empty 'learners' and 'specs'")
    for name in config["learners"]:
        if name not in GUARANTEE_MARGIN:
            raise ValueError(f"unknown learner {name!r}")
    ss = np.random.SeedSequence(int(config.get("master_seed", 0)))
    spec_seeds = [int(c.generate_state(1)[0]) for c in ss.spawn(len(config["specs"]))]
    params = dict(config.get("params", {}))
    oracle = bool(config.get("opt_oracle", False))
    jobs = [(name, i, spec, params, spec_seeds[i], oracle, timing)
            for i, spec in enumerate(config["specs"]) for name in config["learners"]]
    seeds = [job[4] for job in jobs]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda a: _run_cell(*a), jobs))
    else:
        rows = [_run_cell(*a) for a in jobs]
    return ExperimentReport(rows, dict(config), seeds)


def comparison_table(report: ExperimentReport, metric: str = "test_01") -> list[dict[str, Any]]:
    """One row per spec with each learner's metric side by side."""
    table: dict[int, dict[str, Any]] = {}
    for r in report.rows:
        entry = table.setdefault(r["spec_index"], {k: r[k] for k in ("dim", "gamma", "eta", "m_train", "m_test")})
        entry[r["learner"]] = r.get(metric)
    return [table[i] for i in sorted(table)]


def learner_names() -> Sequence[str]:
    return tuple(GUARANTEE_MARGIN)
