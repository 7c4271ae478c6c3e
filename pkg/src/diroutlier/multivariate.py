"""
Multivariate directional outlyingness by projection pursuit.

The supremum over all directions is approximated by a maximum over a finite
:class:`DirectionSet`.  Each direction is the unit normal of the hyperplane
through ``d`` randomly drawn data points, which makes the approximation affine
invariant when the same point indices are reused on transformed data.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDataError, InputDataError
from .scales import DEFAULT_CONFIG, RhoConfig, _column_scales, _directional, _symmetric

__all__ = [
    "DirectionSet",
    "as_cloud",
    "default_direction_count",
    "generate_directions",
    "directions_from_indices",
    "project",
    "do_multivariate",
    "sdo_multivariate",
    "cdo",
    "do_grid",
]

MAX_RETRIES = 100
# relative size of the smallest singular value below which a draw is singular
SINGULAR_TOL = 1e-10
# query points processed per block, bounds the (m, k) work arrays
_BLOCK = 2048


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """``k`` unit vectors in R^d with the provenance needed to rebuild them."""

    vectors: np.ndarray
    seed: int | None = None
    point_indices: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def rebuild(self, X) -> "DirectionSet":
        """Directions through the same data rows of another (e.g. transformed) cloud."""
        if self.point_indices is None:
            raise InputDataError("direction set carries no point indices to rebuild from")
        return directions_from_indices(X, self.point_indices, seed=self.seed)

    def extend(self, other: "DirectionSet") -> "DirectionSet":
        idx = None
        if self.point_indices is not None and other.point_indices is not None:
            idx = np.vstack([self.point_indices, other.point_indices])
        return DirectionSet(np.vstack([self.vectors, other.vectors]), self.seed, idx)


def as_cloud(X, min_rows: int = 2) -> np.ndarray:
    """Validate an (n, d) point cloud; a 1-D input is treated as d = 1."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputDataError(f"point cloud must be 2-D (n, d), got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise InputDataError(f"point cloud needs at least {min_rows} rows, got {X.shape[0]}")
    bad = ~np.isfinite(X)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise InputDataError(f"point cloud has a non-finite entry at row {r}, column {c}")
    return X


def default_direction_count(d: int) -> int:
    return 250 * d


def _normals(X: np.ndarray, idx: np.ndarray):
    """Unit normals of the hyperplanes through rows ``idx`` and a singular mask."""
    k, d = idx.shape
    if d == 1:
        return np.ones((k, 1)), np.zeros(k, dtype=bool)
    pts = X[idx]  # (k, d, d)
    diffs = pts[:, 1:, :] - pts[:, :1, :]  # (k, d-1, d)
    _, sv, vh = np.linalg.svd(diffs, full_matrices=True)
    v = vh[:, -1, :]
    singular = ~(sv[:, -1] > SINGULAR_TOL * sv[:, 0])
    # fix the sign so the first nonzero component is positive
    lead = v[np.arange(k), np.argmax(np.abs(v) > 1e-12, axis=1)]
    v = v * np.where(lead < 0, -1.0, 1.0)[:, None]
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v, singular


def generate_directions(X, k: int | None = None, seed: int = 0, max_retries: int = MAX_RETRIES) -> DirectionSet:
    """Random hyperplane-normal directions for the cloud ``X``.

    Singular draws (repeated or affinely dependent points) are redrawn up to
    ``max_retries`` times per direction.  The generator is numpy's PCG64 seeded
    with ``seed``, so the result depends only on ``(X, k, seed)``.
    """
    X = as_cloud(X)
    n, d = X.shape
    if n < d + 1:
        raise InputDataError(f"need at least d + 1 = {d + 1} points to draw directions, got {n}")
    k = default_direction_count(d) if k is None else int(k)
    if k < 1:
        raise InputDataError("direction count must be at least 1")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(k, d))
    vecs, bad = _normals(X, idx)
    for _ in range(max_retries):
        if not bad.any():
            break
        todo = np.flatnonzero(bad)
        idx[todo] = rng.integers(0, n, size=(todo.size, d))
        vecs[todo], bad[todo] = _normals(X, idx[todo])
    if bad.any():
        raise DegenerateDataError(
            f"no nondegenerate hyperplane found for {int(bad.sum())} directions after {max_retries} retries; "
            "the data may be rank deficient"
        )
    return DirectionSet(vecs, seed, idx)


def directions_from_indices(X, point_indices, seed=None) -> DirectionSet:
    """Directions normal to the hyperplanes through the given rows of ``X``."""
    X = as_cloud(X)
    idx = np.asarray(point_indices, dtype=np.intp)
    if idx.ndim != 2 or idx.shape[1] != X.shape[1]:
        raise InputDataError("point_indices must have shape (k, d)")
    vecs, bad = _normals(X, idx)
    if bad.any():
        raise DegenerateDataError(f"{int(bad.sum())} of the given hyperplanes are singular for this cloud")
    return DirectionSet(vecs, seed, idx.copy())


def project(X: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``X @ V.T`` summed in a fixed coordinate order.

    A plain loop over the d coordinates keeps the rounding independent of
    BLAS threading.
    """
    out = X[:, 0:1] * V[:, 0]
    for j in range(1, X.shape[1]):
        out = out + X[:, j:j + 1] * V[:, j]
    return out


def _as_queries(y, d):
    q = np.asarray(y, dtype=float)
    single = q.ndim <= 1
    q = q.reshape(1, -1) if single else q
    if d == 1 and q.shape[1] != 1 and single:
        q = q.reshape(-1, 1)
        single = q.shape[0] == 1
    if q.shape[1] != d:
        raise InputDataError(f"query points have dimension {q.shape[1]}, sample has {d}")
    if not np.isfinite(q).all():
        raise InputDataError("query points must be finite")
    return q, single


def _blockwise(fn, q, n_jobs):
    blocks = [q[i:i + _BLOCK] for i in range(0, q.shape[0], _BLOCK)]
    if n_jobs is None or n_jobs <= 1 or len(blocks) == 1:
        parts = [fn(b) for b in blocks]
    else:
        with ThreadPoolExecutor(n_jobs) as ex:
            parts = list(ex.map(fn, blocks))
    return np.concatenate(parts)


def do_multivariate(y, X, dirs: DirectionSet | None = None, cfg: RhoConfig = DEFAULT_CONFIG,
                    seed: int = 0, n_jobs: int = 1):
    """Approximate multivariate DO of ``y`` (a point or an (m, d) array).

    Each direction contributes the univariate DO of the projected point
    relative to the projected sample; the result is the maximum.  A direction
    with a zero half-sample scale gives ``inf`` only for points projecting
    strictly beyond the projected median on that side.
    """
    X = as_cloud(X)
    if dirs is None:
        dirs = generate_directions(X, seed=seed)
    if dirs.d != X.shape[1]:
        raise InputDataError(f"directions have dimension {dirs.d}, sample has {X.shape[1]}")
    q, single = _as_queries(y, X.shape[1])
    med, s_a, s_b = _column_scales(project(X, dirs.vectors), cfg)

    def block(qb):
        return _directional(project(qb, dirs.vectors), med, s_a, s_b).max(axis=1)

    out = _blockwise(block, q, n_jobs)
    return float(out[0]) if single else out


def sdo_multivariate(y, X, dirs: DirectionSet | None = None, seed: int = 0, n_jobs: int = 1):
    """Stahel-Donoho outlyingness over the same kind of direction set."""
    X = as_cloud(X)
    if dirs is None:
        dirs = generate_directions(X, seed=seed)
    q, single = _as_queries(y, X.shape[1])
    P = project(X, dirs.vectors)

    def block(qb):
        return _symmetric(project(qb, dirs.vectors), P).max(axis=1)

    out = _blockwise(block, q, n_jobs)
    return float(out[0]) if single else out


def cdo(y, X, cfg: RhoConfig = DEFAULT_CONFIG):
    """Componentwise DO: Euclidean norm of the coordinatewise univariate DOs."""
    X = as_cloud(X)
    q, single = _as_queries(y, X.shape[1])
    med, s_a, s_b = _column_scales(X, cfg)
    out = np.sqrt((_directional(q, med, s_a, s_b) ** 2).sum(axis=1))
    return float(out[0]) if single else out


def do_grid(X, xs, ys, dirs: DirectionSet | None = None, cfg: RhoConfig = DEFAULT_CONFIG,
            seed: int = 0, n_jobs: int = 1) -> np.ndarray:
    """DO at every node of the lattice ``xs`` x ``ys``; result has shape (len(ys), len(xs))."""
    X = as_cloud(X)
    if X.shape[1] != 2:
        raise InputDataError("do_grid needs bivariate data")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    vals = do_multivariate(nodes, X, dirs, cfg, seed=seed, n_jobs=n_jobs)
    return np.asarray(vals).reshape(len(ys), len(xs))
