"""k-CSP to margin-halfspace learning, plus the randomized decoding used for soundness.

Coordinate 0 is the distinguished coordinate; coordinate j >= 1 belongs to a
pair (constraint, accepting assignment), enumerated constraint by constraint
in the order the accepting assignments are listed.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Hashable, Mapping

import numpy as np
import sympy as sp
from scipy.optimize import Bounds, LinearConstraint, milp

from ..core import Halfspace, WeightedDataset, atomic_write_text
from .instance import ExactSample, ReductionInstance, build_dataset

MAX_ASSIGNMENT_SEARCH = 10**6


@dataclass(frozen=True)
class Constraint:
    scope: tuple
    accepting: tuple[tuple, ...]

    def accepts(self, assignment: Mapping) -> bool:
        return tuple(assignment[v] for v in self.scope) in self.accepting


@dataclass(frozen=True)
class CspInstance:
    variables: tuple
    alphabet: tuple
    constraints: tuple[Constraint, ...]

    def __init__(self, variables, alphabet, constraints):
        variables = tuple(variables)
        alphabet = tuple(alphabet)
        cons = []
        for c in constraints:
            if isinstance(c, Constraint):
                scope, acc = c.scope, c.accepting
            elif isinstance(c, Mapping):
                scope, acc = c["scope"], c["accepting"]
            else:
                scope, acc = c
            scope = tuple(scope)
            # keep the listed order, drop repeats
            acc = tuple(dict.fromkeys(tuple(f) for f in acc))
            cons.append(Constraint(scope, acc))
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "constraints", tuple(cons))
        self._check_shape()

    def _check_shape(self) -> None:
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("variables must be distinct")
        if len(set(self.alphabet)) != len(self.alphabet) or not self.alphabet:
            raise ValueError("alphabet must be a non-empty list of distinct labels")
        known = set(self.variables)
        labels = set(self.alphabet)
        arities = {len(c.scope) for c in self.constraints}
        if len(arities) > 1:
            raise ValueError(f"constraints have mixed arities {sorted(arities)}")
        for j, c in enumerate(self.constraints):
            if len(set(c.scope)) != len(c.scope) or not c.scope:
                raise ValueError(f"constraint {j}: scope must be non-empty with distinct variables")
            if not set(c.scope) <= known:
                raise ValueError(f"constraint {j}: unknown variable in scope {c.scope}")
            for f in c.accepting:
                if len(f) != len(c.scope):
                    raise ValueError(f"constraint {j}: accepting assignment {f} does not match its scope")
                if not set(f) <= labels:
                    raise ValueError(f"constraint {j}: label outside the alphabet in {f}")

    @property
    def k(self) -> int:
        return len(self.constraints[0].scope) if self.constraints else 0

    def degrees(self) -> dict:
        deg = {v: 0 for v in self.variables}
        for c in self.constraints:
            for v in c.scope:
                deg[v] += 1
        return deg

    def degree(self) -> int:
        """The common degree; raises if the instance is not regular."""
        degs = set(self.degrees().values())
        if len(degs) != 1:
            raise ValueError(f"instance is not regular: variable degrees {sorted(degs)}")
        return degs.pop()

    def coordinates(self) -> list[tuple[int, tuple]]:
        return [(j, f) for j, c in enumerate(self.constraints) for f in c.accepting]

    def to_json(self) -> str:
        body = {
            "variables": list(self.variables),
            "alphabet": list(self.alphabet),
            "constraints": [{"scope": list(c.scope), "accepting": [list(f) for f in c.accepting]}
                            for c in self.constraints],
        }
        return json.dumps(body, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CspInstance":
        body = json.loads(text)
        return cls(body["variables"], body["alphabet"], body["constraints"])


def read_csp(path) -> CspInstance:
    return CspInstance.from_json(Path(path).read_text(encoding="utf-8"))


def write_csp(path, L: CspInstance) -> None:
    atomic_write_text(path, L.to_json())


def csp_value(L: CspInstance, assignment: Mapping) -> float:
    """Fraction of constraints whose scope restriction is accepted."""
    if not L.constraints:
        raise ValueError("instance has no constraints")
    missing = [v for v in L.variables if v not in assignment]
    if missing:
        raise ValueError(f"assignment is partial; missing {missing[:5]}")
    return sum(c.accepts(assignment) for c in L.constraints) / len(L.constraints)


def find_satisfying(L: CspInstance) -> dict | None:
    if len(L.alphabet) ** len(L.variables) > MAX_ASSIGNMENT_SEARCH:
        raise ValueError(f"more than {MAX_ASSIGNMENT_SEARCH} assignments; supply one")
    for labels in itertools.product(L.alphabet, repeat=len(L.variables)):
        phi = dict(zip(L.variables, labels))
        if all(c.accepts(phi) for c in L.constraints):
            return phi
    return None


def csp_parameters(L: CspInstance, nu) -> dict[str, sp.Expr]:
    k = L.k
    Delta = L.degree()
    sigma = len(L.alphabet)
    n_coords = sum(len(c.accepting) for c in L.constraints)
    Q = len(L.constraints)
    Z = 2 * (len(L.variables) * sigma + 2 * k * Q + 2 * k * n_coords)
    nu = sp.nsimplify(nu, rational=True)
    alpha = (1 / nu) ** sp.Rational(1, k) / (40 * k)
    delta = sp.Rational(1, 10) / (Delta * sigma ** (2 * k))
    s = 10 * Delta * sigma**k
    zeta = 1 / sp.sqrt(1 + Q)
    kappa = sp.Rational(len(L.variables), Z)
    return {
        "k": sp.Integer(k), "Delta": sp.Integer(Delta), "Z": sp.Integer(Z), "nu": nu,
        "delta": delta, "s": sp.Integer(s), "zeta": zeta, "alpha": alpha,
        "kappa": kappa, "epsilon": kappa * alpha, "gamma": zeta * delta / s,
    }


def reduce_csp(L: CspInstance, nu: float, assignment: Mapping | None = None) -> ReductionInstance:
    if not 0 < nu < 1:
        raise ValueError("nu must lie in (0, 1)")
    if not L.constraints:
        raise ValueError("instance has no constraints")
    par = csp_parameters(L, nu)
    k, Z, delta, s = int(par["k"]), par["Z"], par["delta"], par["s"]
    coords = L.coordinates()
    index = {cf: i + 1 for i, cf in enumerate(coords)}
    dim = len(coords) + 1
    flags: dict[str, Any] = {}

    samples = [ExactSample({0: sp.Integer(-1)}, -1, sp.Rational(1, 2), "positivity")]
    for cf in coords:
        samples.append(ExactSample({index[cf]: 1 / s, 0: delta / s}, 1, 2 * k / Z, "non_negativity"))
    for j, c in enumerate(L.constraints):
        x = {index[(j, f)]: 1 / s for f in c.accepting}
        x[0] = -(1 - delta) / s
        samples.append(ExactSample(x, 1, 2 * k / Z, "satisfiability"))
    for v in L.variables:
        for sig in L.alphabet:
            x = {}
            for j, c in enumerate(L.constraints):
                if v not in c.scope:
                    continue
                pos = c.scope.index(v)
                for f in c.accepting:
                    if f[pos] == sig:
                        x[index[(j, f)]] = 1 / s
            x[0] = -delta / s
            samples.append(ExactSample(x, -1, 1 / Z, "selection"))
    for r, smp in enumerate(samples):
        sq = sp.Add(*(v**2 for v in smp.coords.values()))
        if sq > 1:
            raise AssertionError(f"sample {r} leaves the unit ball")

    if float(par["alpha"]) <= 1:
        flags["alpha_at_most_one"] = True

    if assignment is None:
        if len(L.alphabet) ** len(L.variables) <= MAX_ASSIGNMENT_SEARCH:
            assignment = find_satisfying(L)
        else:
            flags["certificate_search_skipped"] = True
    elif csp_value(L, assignment) < 1:
        raise ValueError("supplied assignment does not satisfy every constraint")
    exact_cert = cert = None
    if assignment is not None:
        zeta = par["zeta"]
        exact_cert = [sp.Integer(0)] * dim
        exact_cert[0] = zeta
        for j, c in enumerate(L.constraints):
            exact_cert[index[(j, tuple(assignment[v] for v in c.scope))]] = zeta
        cert = Halfspace(np.array([float(v) for v in exact_cert]))
        flags["assignment"] = {str(v): assignment[v] for v in L.variables}

    return ReductionInstance(
        dataset=build_dataset(dim, samples, "csp"),
        gamma=float(par["gamma"]),
        kappa=float(par["kappa"]),
        epsilon=float(par["epsilon"]),
        alpha=float(par["alpha"]),
        certificate=cert,
        exact_params={name: str(v) for name, v in par.items()},
        exact_samples=samples,
        exact_certificate=exact_cert,
        exact_gamma=par["gamma"],
        flags=flags,
        kind="csp",
    )


@dataclass
class Decoding:
    assignment: dict
    label_sets: dict
    empty: list
    repaired_weights: np.ndarray
    repairs: dict[str, int]


def _rows(R: ReductionInstance, family: str) -> np.ndarray:
    return np.array([r for r, f in enumerate(R.families()) if f == family], dtype=int)


def repair_weights(L: CspInstance, R: ReductionInstance, w) -> tuple[np.ndarray, dict[str, int]]:
    """Scale to w_0 = 1 and fix violated non-negativity and satisfiability samples.

    A non-negativity violation is fixed by zeroing the coordinate; a
    satisfiability violation by raising the constraint's first coordinate
    until the sample's inner product reaches zero.  Neither step increases
    the error.  A non-positive w_0 cannot be repaired this way; it is reset
    to 1 and counted under ``positivity``.  Violations are read off the
    float dataset, so they agree with :func:`zero_one_error`.
    """
    w = np.array(w, dtype=float)
    X = R.dataset.X
    if w.shape[0] != X.shape[1]:
        raise ValueError(f"weight vector has dimension {w.shape[0]}, instance has {X.shape[1]}")
    repairs = {"positivity": 0, "non_negativity": 0, "satisfiability": 0}
    if w[0] <= 0:
        w[0] = 1.0
        repairs["positivity"] = 1
    w = w / w[0]
    # non-negativity rows follow the coordinate order, one per coordinate
    nn = _rows(R, "non_negativity")
    bad = np.flatnonzero((X @ w)[nn] < 0) + 1
    w[bad] = 0.0
    repairs["non_negativity"] = int(bad.size)
    s = float(sp.Integer(R.exact_params["s"]))
    first = 1
    for r, c in zip(_rows(R, "satisfiability"), L.constraints):
        # full products round like zero_one_error does; a single row dot may not
        if (X @ w)[r] < 0:
            repairs["satisfiability"] += 1
            if c.accepting:
                w[first] -= s * (X @ w)[r]
                while (X @ w)[r] < 0:
                    w[first] = np.nextafter(w[first], np.inf)
        first += len(c.accepting)
    return w, repairs


def decode_details(L: CspInstance, R: ReductionInstance, w, seed: int = 0) -> Decoding:
    """Repair ``w``, collect the violated selection labels per variable and sample from them."""
    w, repairs = repair_weights(L, R, w)
    X = R.dataset.X
    sel = _rows(R, "selection")
    # negative samples: sign(0) = +1, so an inner product of zero is already a violation
    hit = iter((X @ w)[sel] >= 0)
    sets = {v: [sig for sig in L.alphabet if next(hit)] for v in L.variables}
    rng = np.random.default_rng(seed)
    phi, empty = {}, []
    for v in L.variables:
        options = sets[v]
        if options:
            phi[v] = options[int(rng.integers(len(options)))]
        else:
            phi[v] = L.alphabet[0]
            empty.append(v)
    return Decoding(phi, sets, empty, w, repairs)


def decode_assignment(L: CspInstance, R: ReductionInstance, w, seed: int = 0) -> dict:
    return decode_details(L, R, w, seed).assignment


def csp_opt_lower_bound(R: ReductionInstance, box: float = 2.0) -> float:
    """Lower bound on OPT_{0-1} of a CSP instance by mixed-integer programming.

    The positivity sample weighs 1/2, more than the error of e_0, so an
    optimal w has w_0 > 0 and may be scaled to w_0 = 1.  The repair steps
    move any such w into [-delta, 2] coordinatewise without raising its
    error, so the box loses nothing.  Strict inequalities for negative
    samples are relaxed to non-strict, which can only lower the optimum.
    """
    D = R.dataset
    m, d = D.X.shape
    big = 2 * box * float(np.abs(D.X).sum(axis=1).max()) + 2
    # variables: w (d), then one indicator per sample
    c = np.concatenate([np.zeros(d), D.probs])
    A = np.hstack([D.y[:, None] * D.X, big * np.eye(m)])
    cons = LinearConstraint(A, lb=np.zeros(m), ub=np.full(m, np.inf))
    lo = np.concatenate([[1.0], np.full(d - 1, -box), np.zeros(m)])
    hi = np.concatenate([[1.0], np.full(d - 1, box), np.ones(m)])
    integrality = np.concatenate([np.zeros(d), np.ones(m)])
    res = milp(c, constraints=[cons], bounds=Bounds(lo, hi), integrality=integrality)
    if res.status != 0:
        raise RuntimeError(f"MILP solver failed: {res.message}")
    return float(res.fun)


def random_regular_csp(n_vars: int, k: int, alphabet_size: int, rounds: int,
                       rng: np.random.Generator, density: float = 0.5,
                       planted: bool = True) -> tuple[CspInstance, dict | None]:
    """Regular k-CSP built from cyclic windows of random permutations.

    Each round draws a permutation and adds the n_vars windows of k
    consecutive variables (cyclically), so every variable has degree
    k * rounds.  Accepting sets keep each tuple with probability
    ``density``; with ``planted`` the restriction of a random assignment is
    always accepted.
    """
    if not 1 <= k <= n_vars:
        raise ValueError("need 1 <= k <= n_vars")
    variables = list(range(n_vars))
    alphabet = list(range(alphabet_size))
    phi = {v: int(rng.integers(alphabet_size)) for v in variables} if planted else None
    constraints = []
    for _ in range(rounds):
        perm = [int(v) for v in rng.permutation(n_vars)]
        for i in range(n_vars):
            scope = tuple(perm[(i + t) % n_vars] for t in range(k))
            acc = [f for f in itertools.product(alphabet, repeat=k) if rng.random() < density]
            if phi is not None:
                want = tuple(phi[v] for v in scope)
                if want not in acc:
                    acc.append(want)
            constraints.append((scope, acc))
    return CspInstance(variables, alphabet, constraints), phi
