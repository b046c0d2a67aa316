"""Data types and error metrics shared by every other module.

A dataset is an explicit finite distribution over labeled points of the unit
ball.  Hypotheses are origin-centered halfspaces ``x -> sign(<w, x>)`` with the
convention ``sign(0) = +1``.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

MASS_TOL = 1e-9
BALL_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when a vector and a dataset disagree on dimension."""


class DatasetError(ValueError):
    """Raised when a dataset violates its invariants."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def as_vector(v: Sequence[float] | np.ndarray) -> np.ndarray:
    """Return ``v`` as a 1-d float array, rejecting NaN and infinity."""
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite entries")
    return a


def sign(u: np.ndarray | float) -> np.ndarray:
    """Elementwise sign with ``sign(0) = +1``."""
    return np.where(np.asarray(u) >= 0, 1, -1)


@dataclass(frozen=True)
class LabeledSample:
    x: tuple[float, ...]
    y: int

    def __post_init__(self):
        if self.y not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.y}")


@dataclass(frozen=True, eq=False)
class WeightedDataset:
    """Explicit distribution over (point, label) pairs.

    ``X`` has shape (m, dim), ``y`` holds +1/-1 labels and ``probs`` the mass
    of each sample.  Arrays are copied and made read-only on construction.
    Construction does not validate; call :func:`validate_dataset` or
    :meth:`check` for that.
    """

    X: np.ndarray
    y: np.ndarray
    probs: np.ndarray
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-d, got shape {X.shape}")
        y = np.asarray(self.y)
        if y.shape != (X.shape[0],):
            raise ValueError("y must have one label per sample")
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (X.shape[0],):
            raise ValueError("probs must have one entry per sample")
        object.__setattr__(self, "X", _frozen(X))
        yi = np.array(y, dtype=np.int64, copy=True)
        yi.setflags(write=False)
        object.__setattr__(self, "y", yi)
        object.__setattr__(self, "probs", _frozen(probs))
        object.__setattr__(self, "meta", dict(self.meta))

    @classmethod
    def uniform(cls, X, y, meta: Mapping[str, Any] | None = None) -> "WeightedDataset":
        X = np.asarray(X, dtype=float)
        m = X.shape[0]
        return cls(X, y, np.full(m, 1.0 / m), meta or {})

    @classmethod
    def from_samples(
        cls, samples: Iterable[LabeledSample], probs: Sequence[float] | None = None
    ) -> "WeightedDataset":
        samples = list(samples)
        X = np.array([s.x for s in samples], dtype=float)
        y = np.array([s.y for s in samples])
        if probs is None:
            return cls.uniform(X, y)
        return cls(X, y, np.asarray(probs, dtype=float))

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def size(self) -> int:
        return self.X.shape[0]

    def __len__(self) -> int:
        return self.size

    @property
    def samples(self) -> list[LabeledSample]:
        return [LabeledSample(tuple(map(float, x)), int(t)) for x, t in zip(self.X, self.y)]

    def subset(self, mask: np.ndarray, renormalize: bool = True) -> "WeightedDataset":
        """Restrict to the samples selected by ``mask`` (conditioning)."""
        p = self.probs[mask]
        if renormalize:
            total = math.fsum(p)
            if total <= 0:
                raise DatasetError("conditioning on an event of zero mass")
            p = p / total
        return WeightedDataset(self.X[mask], self.y[mask], p, self.meta)

    def check(self) -> "WeightedDataset":
        problems = validate_dataset(self)
        if problems:
            raise DatasetError("; ".join(str(v) for v in problems[:5]))
        return self


@dataclass(frozen=True, eq=False)
class Halfspace:
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen(as_vector(self.w)))

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.w))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return sign(np.asarray(X, dtype=float) @ self.w)

    def normalized(self) -> "Halfspace":
        """Radially clip into the unit ball; the sign pattern is unchanged."""
        n = self.norm
        return self if n <= 1.0 else Halfspace(self.w / n)

    def __eq__(self, other):
        return isinstance(other, Halfspace) and np.array_equal(self.w, other.w)

    def __hash__(self):
        return hash(self.w.tobytes())


@dataclass(frozen=True)
class LearnParams:
    """Parameters shared by all learners.

    ``delta_slack`` is the approximation slack of the staged learner and
    ``alpha`` the approximation ratio of the Chow-parameter learner.
    """

    gamma: float
    epsilon: float = 0.1
    delta_slack: float = 1.0
    alpha: float = 2.0
    tau: float = 0.1
    seed: int = 0
    budget_cap: int | None = 10**7

    def __post_init__(self):
        for name in ("gamma", "epsilon", "tau"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not self.delta_slack > 0:
            raise ValueError(f"delta_slack must be positive, got {self.delta_slack}")
        if not self.alpha >= 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.budget_cap is not None and self.budget_cap < 1:
            raise ValueError("budget_cap must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Violation:
    index: int | None
    kind: str

    def __str__(self):
        return self.kind if self.index is None else f"sample {self.index}: {self.kind}"


def _check_dims(D: WeightedDataset, w: np.ndarray) -> np.ndarray:
    w = as_vector(w)
    if w.shape[0] != D.dim:
        raise DimensionError(f"weight vector has dimension {w.shape[0]}, dataset has {D.dim}")
    return w


def _mass(probs: np.ndarray, mask: np.ndarray) -> float:
    # fsum is exact, so the result does not depend on sample order
    return math.fsum(probs[mask])


def margin_error(D: WeightedDataset, w, gamma: float) -> float:
    """Mass of samples with ``y <w, x> <= gamma`` (the boundary counts as an error)."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    w = _check_dims(D, w)
    return _mass(D.probs, D.y * (D.X @ w) <= gamma)


def zero_one_error(D: WeightedDataset, h: Halfspace | Sequence[float] | np.ndarray) -> float:
    """Mass of samples misclassified by ``h`` under ``sign(0) = +1``."""
    w = h.w if isinstance(h, Halfspace) else h
    w = _check_dims(D, w)
    return _mass(D.probs, sign(D.X @ w) != D.y)


def validate_dataset(D: WeightedDataset) -> list[Violation]:
    """Check every dataset invariant; an empty list means the dataset is valid."""
    out: list[Violation] = []
    if D.size == 0:
        out.append(Violation(None, "empty dataset"))
        return out
    if D.dim < 1:
        out.append(Violation(None, "dimension must be positive"))
    bad_x = ~np.all(np.isfinite(D.X), axis=1)
    for i in np.flatnonzero(bad_x):
        out.append(Violation(int(i), "non-finite coordinate"))
    norms = np.linalg.norm(np.where(np.isfinite(D.X), D.X, 0.0), axis=1)
    for i in np.flatnonzero(norms > 1.0 + BALL_TOL):
        out.append(Violation(int(i), f"outside unit ball (norm {norms[i]:.6g})"))
    for i in np.flatnonzero((D.y != 1) & (D.y != -1)):
        out.append(Violation(int(i), f"label {int(D.y[i])} not in {{+1, -1}}"))
    for i in np.flatnonzero(~np.isfinite(D.probs) | (D.probs < 0)):
        out.append(Violation(int(i), f"negative or non-finite mass {D.probs[i]!r}"))
    if np.all(np.isfinite(D.probs)):
        total = math.fsum(D.probs)
        if abs(total - 1.0) > MASS_TOL:
            out.append(Violation(None, f"mass {total:.12g}"))
    return out


def margin_profile(D: WeightedDataset, w, gamma: float) -> dict[str, float]:
    """Margin errors at the grid of margins every report carries."""
    return {
        "gamma": margin_error(D, w, gamma),
        "gamma/2": margin_error(D, w, gamma / 2),
        "gamma/4": margin_error(D, w, gamma / 4),
        "0.99gamma": margin_error(D, w, 0.99 * gamma),
    }


# ---------------------------------------------------------------------------
# JSON Lines dataset format


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_to_jsonl(D: WeightedDataset, meta: Mapping[str, Any] | None = None) -> str:
    lines = [json.dumps({"dim": D.dim, "meta": dict(meta if meta is not None else D.meta)}, sort_keys=True)]
    for x, t, p in zip(D.X, D.y, D.probs):
        # repr-based float serialization round-trips exactly
        lines.append(json.dumps({"x": [float(v) for v in x], "y": int(t), "p": float(p)}))
    return "\n".join(lines) + "\n"


def dataset_from_jsonl(text: str) -> WeightedDataset:
    dim = None
    meta: dict[str, Any] = {}
    xs, ys, ps = [], [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        rec = json.loads(line)
        if "x" not in rec:
            if xs or dim is not None:
                raise DatasetError(f"line {lineno}: header must be the first record")
            dim = int(rec["dim"])
            meta = dict(rec.get("meta") or {})
            continue
        xs.append([float(v) for v in rec["x"]])
        y = int(rec["y"])
        if y not in (1, -1):
            raise DatasetError(f"line {lineno}: label must be 1 or -1")
        ys.append(y)
        ps.append(rec.get("p"))
    if not xs:
        raise DatasetError("dataset has no samples")
    widths = {len(x) for x in xs}
    if len(widths) != 1 or (dim is not None and widths != {dim}):
        raise DatasetError("samples disagree on dimension")
    have = [p is not None for p in ps]
    if all(have):
        probs = np.array(ps, dtype=float)
    elif not any(have):
        probs = np.full(len(xs), 1.0 / len(xs))
    else:
        raise DatasetError("'p' must be given for all records or for none")
    return WeightedDataset(np.array(xs, dtype=float), np.array(ys), probs, meta)


def write_dataset(path, D: WeightedDataset, meta: Mapping[str, Any] | None = None) -> None:
    atomic_write_text(path, dataset_to_jsonl(D, meta))


def read_dataset(path) -> WeightedDataset:
    return dataset_from_jsonl(Path(path).read_text(encoding="utf-8"))
