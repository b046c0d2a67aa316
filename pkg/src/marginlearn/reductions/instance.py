"""Reduction output: a float dataset plus its exact (sympy) twin."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import numpy as np
import sympy as sp

from ..core import Halfspace, WeightedDataset, atomic_write_text, write_dataset


@dataclass(frozen=True)
class ExactSample:
    """Sparse exact point ``{coordinate: value}``, its label and its exact mass."""

    coords: dict[int, sp.Expr]
    y: int
    mass: sp.Rational
    family: str

    def dot(self, w: dict[int, sp.Expr] | list) -> sp.Expr:
        if isinstance(w, dict):
            pairs = [(v, w[i]) for i, v in self.coords.items() if i in w]
        else:
            pairs = [(v, w[i]) for i, v in self.coords.items()]
        # the same few (value, weight) multisets recur across samples and instances
        return _pair_sum(frozenset(Counter(pairs).items()))


@lru_cache(maxsize=65536)
def _pair_sum(pairs: frozenset) -> sp.Expr:
    return sp.expand(sp.Add(*(c * a * b for (a, b), c in pairs)))


@lru_cache(maxsize=65536)
def to_float(v: sp.Expr) -> float:
    return float(v)


@dataclass
class ReductionInstance:
    dataset: WeightedDataset
    gamma: float
    kappa: float
    epsilon: float
    alpha: float
    certificate: Halfspace | None
    exact_params: dict[str, str]
    exact_samples: list[ExactSample] = field(default_factory=list, repr=False)
    exact_certificate: list | None = field(default=None, repr=False)
    exact_gamma: sp.Expr | None = field(default=None, repr=False)
    flags: dict[str, Any] = field(default_factory=dict)
    kind: str = ""

    def total_mass(self) -> sp.Rational:
        return sp.Add(*(s.mass for s in self.exact_samples))

    def sidecar(self) -> dict[str, Any]:
        cert = None if self.certificate is None else [float(v) for v in self.certificate.w]
        return {
            "kind": self.kind,
            "gamma": self.gamma,
            "kappa": self.kappa,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "exact_params": dict(self.exact_params),
            "certificate": cert,
            "flags": dict(self.flags),
        }

    def write(self, data_path, sidecar_path) -> None:
        write_dataset(data_path, self.dataset, {"kind": self.kind, "families": self.families()})
        atomic_write_text(sidecar_path, json.dumps(self.sidecar(), sort_keys=True, indent=2) + "\n")

    def families(self) -> list[str]:
        return [s.family for s in self.exact_samples]


def build_dataset(dim: int, samples: list[ExactSample], kind: str) -> WeightedDataset:
    X = np.zeros((len(samples), dim))
    for r, s in enumerate(samples):
        for i, v in s.coords.items():
            X[r, i] = to_float(v)
    y = np.array([s.y for s in samples])
    probs = np.array([to_float(s.mass) for s in samples])
    return WeightedDataset(X, y, probs, {"kind": kind})


def exact_margins(R: ReductionInstance, w: list | None = None) -> list[sp.Expr]:
    w = R.exact_certificate if w is None else w
    if w is None:
        raise ValueError("no certificate to check")
    return [s.dot(w) if s.y == 1 else -s.dot(w) for s in R.exact_samples]


@lru_cache(maxsize=65536)
def _sign(a: sp.Expr) -> int:
    diff = sp.radsimp(sp.expand(a))
    if diff == 0:
        return 0
    return 1 if diff.is_positive else -1


def _at_least(a: sp.Expr, b: sp.Expr) -> bool:
    return _sign(a - b) >= 0


@dataclass(frozen=True)
class CertificateCheck:
    error: sp.Rational
    violated: tuple[int, ...]
    min_satisfied_margin: sp.Expr | None
    meets_margin: bool


def check_certificate(R: ReductionInstance, w: list | None = None) -> CertificateCheck:
    """Exact gamma-margin error of a weight vector (the certificate by default).

    A sample counts as satisfied when its margin is at least gamma; the
    completeness certificates put several samples exactly on that boundary.
    ``meets_margin`` says whether every correctly classified sample
    (sign(0) = +1) reaches margin gamma.
    """
    gamma = R.exact_gamma
    margins = exact_margins(R, w)
    ok = [_at_least(m, gamma) for m in margins]
    bad = tuple(i for i, good in enumerate(ok) if not good)
    err = sp.Add(*(R.exact_samples[i].mass for i in bad))
    correct = [m for m, s in zip(margins, R.exact_samples) if _classified(m, s.y)]
    low = min(correct, key=to_float) if correct else None
    return CertificateCheck(err, bad, low, all(_at_least(m, gamma) for m in correct))


def _classified(margin: sp.Expr, y: int) -> bool:
    # margin = y <w, x>; sign(0) = +1 means a zero inner product is right only for y = +1
    if y == 1:
        return _sign(margin) >= 0
    return _sign(margin) > 0
