"""Linear-algebra substrate: second moments, eigenspaces, covers, JL maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import DimensionError, WeightedDataset, as_vector

SYMMETRY_TOL = 1e-12
ORTHO_TOL = 1e-8
RECON_TOL = 1e-7
PSD_SLACK = -1e-9
_SIGN_TOL = 1e-10


class CoverBudgetError(RuntimeError):
    """The requested cover would exceed the candidate budget."""

    def __init__(self, estimate: float, budget: int):
        self.estimate = estimate
        self.budget = budget
        super().__init__(f"cover needs about {estimate:.3g} points, budget is {budget}")


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Spectrum sorted descending; ``vectors[i]`` pairs with ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def trace(self) -> float:
        return float(math.fsum(self.values))

    def reconstruct(self) -> np.ndarray:
        return (self.vectors.T * self.values) @ self.vectors


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal rows spanning a subspace of R^ambient_dim."""

    basis: np.ndarray
    ambient_dim: int

    @property
    def dim_v(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def empty(cls, d: int) -> "SubspaceBasis":
        return cls(np.zeros((0, d)), d)

    @classmethod
    def span_of(cls, vectors: np.ndarray, tol: float = 1e-10) -> "SubspaceBasis":
        """Orthonormal basis of the span of the rows of ``vectors``."""
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        d = V.shape[1]
        if V.shape[0] == 0:
            return cls.empty(d)
        _, s, vt = np.linalg.svd(V, full_matrices=False)
        rank = int(np.sum(s > tol * max(1.0, s[0])))
        return cls(_canonical_signs(vt[:rank]), d)


@dataclass(frozen=True, eq=False)
class SubspaceCover:
    points: np.ndarray
    resolution: float
    region: str
    basis: SubspaceBasis

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class JlProjection:
    matrix: np.ndarray
    seed: int

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def source_dim(self) -> int:
        return self.matrix.shape[1]


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so that its first clearly nonzero coordinate is positive."""
    out = np.array(vectors, dtype=float, copy=True)
    for row in out:
        nz = np.flatnonzero(np.abs(row) > _SIGN_TOL)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return out


def second_moment(D: WeightedDataset) -> np.ndarray:
    """E[x x^T] under the dataset's distribution."""
    if D.size == 0:
        raise ValueError("second moment of an empty dataset")
    M = D.X.T @ (D.X * D.probs[:, None])
    return (M + M.T) / 2


def eigendecompose(M: np.ndarray) -> EigenDecomposition:
    """Full spectrum of a symmetric matrix, descending, with canonical signs."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    vals, vecs = np.linalg.eigh(M)
    order = np.arange(vals.shape[0])[::-1]
    return EigenDecomposition(vals[order].copy(), _canonical_signs(vecs[:, order].T))


def eigenspace_above(E: EigenDecomposition, threshold: float) -> SubspaceBasis:
    """Span of the eigenvectors whose eigenvalue is at least ``threshold``."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    k = int(np.sum(E.values >= threshold))
    return SubspaceBasis(E.vectors[:k].copy(), E.dim)


def top_k_eigenspace(E: EigenDecomposition, k: int) -> SubspaceBasis:
    if not 1 <= k <= E.dim:
        raise ValueError(f"k must lie in [1, {E.dim}], got {k}")
    return SubspaceBasis(E.vectors[:k].copy(), E.dim)


def project(v, B: SubspaceBasis) -> np.ndarray:
    v = as_vector(v)
    if v.shape[0] != B.ambient_dim:
        raise DimensionError(f"vector has dimension {v.shape[0]}, subspace lives in {B.ambient_dim}")
    return B.basis.T @ (B.basis @ v)


def numerical_rank(E: EigenDecomposition, rel_tol: float = 1e-10) -> int:
    top = max(float(E.values[0]), 0.0) if E.dim else 0.0
    if top == 0.0:
        return 0
    return int(np.sum(E.values > rel_tol * top))


# ---------------------------------------------------------------------------
# Covers
#
# Both regions use the integer lattice scaled by a step h in basis
# coordinates.  Ball: h = 2 res / sqrt(k); the nearest lattice point to any
# ball point is within res, and radial clipping onto the ball cannot increase
# that distance.  Sphere: h = res / sqrt(k); lattice points in the shell
# | |g| - 1 | <= res/2 are normalized, which at most doubles the distance.
#
# Enumeration order is lexicographic over index tuples with every coordinate
# descending.  Only tuples whose first nonzero index is positive are walked;
# each is emitted together with its antipode, so points near +-b1 come first.


def _steps(dim_v: int, resolution: float, region: str) -> tuple[float, float, float]:
    """Return (step, outer radius, inner radius) in index units."""
    if region == "ball":
        h = 2.0 * resolution / math.sqrt(dim_v)
        return h, (1.0 + resolution) / h, 0.0
    if region == "sphere":
        h = resolution / math.sqrt(dim_v)
        r = resolution / 2
        return h, (1.0 + r) / h, max(0.0, 1.0 - r) / h
    raise ValueError(f"region must be 'ball' or 'sphere', got {region!r}")


def cover_size_estimate(dim_v: int, resolution: float, region: str) -> float:
    """Approximate number of points :func:`iter_cover` will emit."""
    if dim_v == 0:
        return 1.0
    _, hi, lo = _steps(dim_v, resolution, region)
    log_unit_ball = (dim_v / 2) * math.log(math.pi) - math.lgamma(dim_v / 2 + 1)
    if region == "ball":
        return math.exp(log_unit_ball + dim_v * math.log(hi + 0.5 * math.sqrt(dim_v)))
    outer = dim_v * math.log(hi + 0.5 * math.sqrt(dim_v))
    inner = dim_v * math.log(max(lo - 0.5 * math.sqrt(dim_v), 0.0)) if lo > 0.5 * math.sqrt(dim_v) else -math.inf
    return math.exp(log_unit_ball + outer) * (1.0 - math.exp(inner - outer))


def _lattice_half(dim: int, hi: float, lo: float, block: int = 200_000) -> Iterator[np.ndarray]:
    """Yield index tuples t with lo <= |t| <= hi and first nonzero entry > 0."""
    hi2, lo2 = hi * hi, lo * lo
    N = int(math.floor(hi + 1e-12))
    width = 2 * N + 1
    tail = 1
    while tail < dim and width ** (tail + 1) <= block:
        tail += 1
    head = dim - tail
    vals = np.arange(N, -N - 1, -1)
    T = np.stack(np.meshgrid(*([vals] * tail), indexing="ij"), axis=-1).reshape(-1, tail)
    T_sq = np.sum(T * T, axis=1)
    nz = T != 0
    first = np.where(nz.any(axis=1), nz.argmax(axis=1), 0)
    T_pos = nz.any(axis=1) & (T[np.arange(T.shape[0]), first] > 0)
    max_tail_sq = tail * N * N

    def emit(prefix: list[int], q: int, all_zero: bool):
        ok = (T_sq + q <= hi2 + 1e-9) & (T_sq + q >= lo2 - 1e-9)
        if all_zero:
            ok &= T_pos
        if not ok.any():
            return None
        rows = T[ok]
        if head == 0:
            return rows
        return np.hstack([np.broadcast_to(np.array(prefix), (rows.shape[0], head)), rows])

    def rec(prefix: list[int], q: int, all_zero: bool) -> Iterator[np.ndarray]:
        level = len(prefix)
        if level == head:
            out = emit(prefix, q, all_zero)
            if out is not None:
                yield out
            return
        if q + (dim - level) * N * N < lo2 - 1e-9:
            return
        tmax = int(math.floor(math.sqrt(max(hi2 - q, 0.0)) + 1e-12))
        tmax = min(tmax, N)
        remaining_tail = (head - level - 1) * N * N + max_tail_sq
        for t in range(tmax, -1 if all_zero else -tmax - 1, -1):
            q2 = q + t * t
            if q2 + remaining_tail < lo2 - 1e-9:
                continue
            yield from rec(prefix + [t], q2, all_zero and t == 0)

    yield from rec([], 0, True)


def iter_cover(
    B: SubspaceBasis, resolution: float, region: str, batch_size: int = 8192
) -> Iterator[np.ndarray]:
    """Lazily yield cover points (ambient coordinates) in canonical order."""
    if not 0 < resolution <= 2:
        raise ValueError("resolution must lie in (0, 2]")
    d = B.ambient_dim
    if B.dim_v == 0:
        if region == "ball":
            yield np.zeros((1, d))
        return
    h, hi, lo = _steps(B.dim_v, resolution, region)
    if region == "ball":
        yield np.zeros((1, d))
    pending: list[np.ndarray] = []
    count = 0
    for idx in _lattice_half(B.dim_v, hi, lo):
        pending.append(idx)
        count += idx.shape[0]
        while count >= batch_size // 2:
            allidx = np.vstack(pending)
            take, rest = allidx[: batch_size // 2], allidx[batch_size // 2 :]
            yield _to_points(take, h, B, region)
            pending = [rest] if rest.shape[0] else []
            count = rest.shape[0]
    if count:
        yield _to_points(np.vstack(pending), h, B, region)


def _to_points(idx: np.ndarray, h: float, B: SubspaceBasis, region: str) -> np.ndarray:
    coords = idx.astype(float) * h
    norms = np.linalg.norm(coords, axis=1)
    if region == "sphere":
        coords = coords / norms[:, None]
    else:
        big = norms > 1.0
        coords[big] /= norms[big, None]
    pts = coords @ B.basis
    out = np.empty((2 * pts.shape[0], pts.shape[1]))
    out[0::2] = pts
    out[1::2] = -pts
    return out


def cover_subspace(
    B: SubspaceBasis, resolution: float, region: str, budget_cap: int | None = 10**7
) -> SubspaceCover:
    """Materialized cover of the unit ball or unit sphere of ``span(B)``."""
    if B.dim_v < 1:
        raise ValueError("cannot cover a zero-dimensional subspace")
    if not 0 < resolution <= 2:
        raise ValueError("resolution must lie in (0, 2]")
    est = cover_size_estimate(B.dim_v, resolution, region)
    if budget_cap is not None and est > budget_cap:
        raise CoverBudgetError(est, budget_cap)
    chunks = list(iter_cover(B, resolution, region))
    pts = np.vstack(chunks) if chunks else np.zeros((0, B.ambient_dim))
    return SubspaceCover(pts, resolution, region, B)


# ---------------------------------------------------------------------------
# Johnson-Lindenstrauss


def sample_jl(d: int, m: int, seed: int) -> JlProjection:
    """Rademacher matrix scaled by 1/sqrt(m), drawn from a seeded PCG64 stream."""
    if d < 1 or m < 1:
        raise ValueError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(m, d), dtype=np.int8) * 2 - 1
    return JlProjection(signs.astype(float) / math.sqrt(m), int(seed))


def jl_transform(A: JlProjection, x) -> tuple[np.ndarray, bool]:
    """Normalized image ``Ax / |Ax|``; returns (0, True) when ``Ax = 0``."""
    x = as_vector(x)
    if x.shape[0] != A.source_dim:
        raise DimensionError(f"vector has dimension {x.shape[0]}, projection expects {A.source_dim}")
    y, flags = jl_transform_rows(A, x[None, :])
    return y[0], bool(flags[0])


def jl_transform_rows(A: JlProjection, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.shape[1] != A.source_dim:
        raise DimensionError(f"rows have dimension {X.shape[1]}, projection expects {A.source_dim}")
    Y = X @ A.matrix.T
    norms = np.linalg.norm(Y, axis=1)
    flags = norms == 0
    safe = np.where(flags, 1.0, norms)
    return Y / safe[:, None], flags
