"""k-Clique to margin-halfspace learning.

Coordinate 0 is the distinguished coordinate; vertex i maps to coordinate
i + 1.  Samples come in three families: one negative sample on the
distinguished axis, one positive sample per non-edge, and one light positive
sample per vertex.  A k-clique S gives the weight vector with 1/sqrt(2) on
the distinguished axis and 1/sqrt(2k) on S, which misses exactly the n - k
vertex samples outside S at margin gamma.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
import sympy as sp
from scipy.optimize import linprog

from ..core import Halfspace
from .graph import Graph, find_clique
from .instance import ExactSample, ReductionInstance, build_dataset, to_float


def clique_parameters(n: int, k: int) -> dict[str, sp.Expr]:
    beta = 1 - sp.Rational(1, 100) / n**2
    light = sp.Rational(1, 100) / n**3
    return {
        "beta": beta,
        "vertex_mass": light,
        "gamma": sp.Rational(1, 10) / (2 * sp.sqrt(2 * k)),
        "kappa": (n - k) * light,
        "gap": sp.Rational(1, 1000) / n**3,
    }


def reduce_clique(G: Graph, k: int, clique=None) -> ReductionInstance:
    n = G.n
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k = {k}, n = {n}")
    par = clique_parameters(n, k)
    beta, light = par["beta"], par["vertex_mass"]
    rk = sp.sqrt(k)
    half = sp.Rational(1, 2)
    flags: dict = {}

    non_edges = G.non_edges()
    samples = [ExactSample({0: sp.Integer(-1)}, -1, beta / 2, "positivity")]
    edge_star = half * sp.Rational(11, 10) / rk
    vertex_star = -half * sp.Rational(9, 10) / rk
    if non_edges:
        m = beta / (2 * len(non_edges))
        for i, j in non_edges:
            samples.append(ExactSample({0: edge_star, i + 1: -half, j + 1: -half}, 1, m, "non_edge"))
    for i in range(n):
        samples.append(ExactSample({0: vertex_star, i + 1: half}, 1, light, "vertex_selection"))

    if not non_edges:
        # complete graph: the non-edge family is empty, so rescale what is left
        total = sp.Add(*(s.mass for s in samples))
        samples = [ExactSample(s.coords, s.y, s.mass / total, s.family) for s in samples]
        flags["complete_graph_renormalized"] = str(total)
        par["kappa"] = par["kappa"] / total
        par["gap"] = par["gap"] / total

    if clique is None:
        clique = find_clique(G, k)
    else:
        clique = tuple(sorted(int(v) for v in clique))
        if len(clique) != k or not G.is_clique(clique):
            raise ValueError(f"{clique} is not a {k}-clique")
    exact_cert = None
    cert = None
    if clique is not None:
        exact_cert = [sp.Integer(0)] * (n + 1)
        exact_cert[0] = 1 / sp.sqrt(2)
        for v in clique:
            exact_cert[v + 1] = 1 / sp.sqrt(2 * k)
        cert = Halfspace(np.array([to_float(v) for v in exact_cert]))
        flags["clique"] = list(clique)

    exact = {name: str(v) for name, v in par.items()}
    exact["non_edge_mass"] = str(samples[1].mass) if non_edges else "0"
    exact["epsilon"] = exact["gap"]
    return ReductionInstance(
        dataset=build_dataset(n + 1, samples, "clique"),
        gamma=to_float(par["gamma"]),
        kappa=to_float(par["kappa"]),
        epsilon=to_float(par["gap"]),
        alpha=1.0,
        certificate=cert,
        exact_params=exact,
        exact_samples=samples,
        exact_certificate=exact_cert,
        exact_gamma=par["gamma"],
        flags=flags,
        kind="clique",
    )


def _feasible(R: ReductionInstance, keep: list[int]) -> bool:
    """Is there w with w_0 = 1 classifying the heavy samples and ``keep`` correctly?

    Every sample except the first is positive, so correctness is ``<w, x> >= 0``
    and the problem is an LP.  The first sample forces w_0 > 0, and scaling
    makes that w_0 = 1.
    """
    X = R.dataset.X
    rows = [r for r, s in enumerate(R.exact_samples) if s.family == "non_edge"] + keep
    d = X.shape[1]
    bounds = [(1.0, 1.0)] + [(None, None)] * (d - 1)
    if not rows:
        return True
    res = linprog(np.zeros(d), A_ub=-X[rows], b_ub=np.zeros(len(rows)), bounds=bounds, method="highs")
    return res.status == 0


def clique_opt_zero_one(R: ReductionInstance) -> float:
    """Exact OPT_{0-1} of a clique instance by LP search over vertex-sample subsets.

    Each heavy sample outweighs all vertex samples together, and classifying
    every heavy sample while missing every vertex sample is always possible,
    so an optimal halfspace gets the heavy samples right.  Subsets of vertex
    samples to give up are tried from smallest total mass upward.
    """
    light = [r for r, s in enumerate(R.exact_samples) if s.family == "vertex_selection"]
    heavy_min = min(float(s.mass) for s in R.exact_samples if s.family != "vertex_selection")
    light_mass = sum(float(R.exact_samples[r].mass) for r in light)
    assert heavy_min > light_mass
    for size in range(len(light) + 1):
        for drop in itertools.combinations(light, size):
            keep = [r for r in light if r not in drop]
            if _feasible(R, keep):
                return sum(float(R.exact_samples[r].mass) for r in drop)
    raise AssertionError("missing every vertex sample should always be feasible")


@lru_cache(maxsize=4096)
def _opt_by_form(form: tuple, k: int) -> float:
    n, edges = form
    return clique_opt_zero_one(reduce_clique(Graph(n, edges), k))


def clique_opt_oracle(G: Graph, k: int) -> float:
    """OPT_{0-1} of ``reduce_clique(G, k)``, cached over isomorphism classes."""
    return _opt_by_form(G.canonical(), k)
