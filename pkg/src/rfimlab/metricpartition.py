"""Random R-bounded partitions of finite metric spaces.

The sampler draws ``alpha`` uniformly from ``[1/4, 1/2)`` and a uniform
ordering of the points, and assigns every point to the first point in the
ordering within distance ``alpha R``.  Blocks therefore sit inside balls of
radius ``alpha R <= R/2``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from scipy.special import digamma

_P = {"chebyshev": np.inf, "euclidean": 2.0, "cityblock": 1.0}
_EXACT_TERMS = 100_000


def harmonic_H(s: int, t: int) -> float:
    """``sum_{n=s+1}^{t} 1/n`` for integers ``0 < s < t``."""
    if s != int(s) or t != int(t):
        raise ValueError("s and t must be integers")
    s, t = int(s), int(t)
    if not 0 < s < t:
        raise ValueError(f"need 0 < s < t, got s={s}, t={t}")
    if t - s <= _EXACT_TERMS:
        return math.fsum(1.0 / n for n in range(s + 1, t + 1))
    return float(digamma(t + 1) - digamma(s + 1))


def padding_bound(r: float, R: float, n_small: int, n_large: int) -> float:
    """``(8r/R) H(n_small, n_large)``; an empty sum gives zero."""
    if n_large <= n_small:
        return 0.0
    return 8.0 * r / R * harmonic_H(n_small, n_large)


class FiniteMetricSpace:
    """Points with a metric.

    ``metric`` is one of ``'chebyshev'``, ``'euclidean'``, ``'cityblock'``
    for coordinate arrays (balls come from a k-d tree), or a callable
    ``d(x, y)``; a callable is tabulated once into a distance matrix.
    """

    def __init__(self, points, metric: str | Callable = "chebyshev"):
        self.metric = metric
        if callable(metric):
            self.points = list(points)
            n = len(self.points)
            D = np.zeros((n, n))
            for i in range(n):
                for j in range(i + 1, n):
                    D[i, j] = D[j, i] = metric(self.points[i], self.points[j])
            self._D = D
            self._tree = None
        else:
            if metric not in _P:
                raise ValueError(f"unknown metric {metric!r}")
            pts = np.asarray(points, dtype=np.float64)
            if pts.ndim == 1:
                pts = pts[:, None]
            self.points = pts
            self._D = None
            self._tree = cKDTree(pts)
        if len(self) == 0:
            raise ValueError("metric space must be nonempty")

    def __len__(self):
        return len(self.points)

    def distance(self, i: int, j: int) -> float:
        if self._D is not None:
            return float(self._D[i, j])
        diff = np.abs(self.points[i] - self.points[j])
        p = _P[self.metric]
        return float(diff.max() if p == np.inf else np.linalg.norm(diff, ord=p))

    def distance_matrix(self) -> np.ndarray:
        if self._D is not None:
            return self._D
        return cdist(self.points, self.points, metric=self.metric)

    def ball(self, i: int, radius: float) -> np.ndarray:
        """Indices within distance ``radius`` of point ``i`` (closed ball)."""
        if self._D is not None:
            return np.flatnonzero(self._D[i] <= radius)
        p = _P[self.metric]
        eps = 1e-9 * max(1.0, radius)
        idx = self._tree.query_ball_point(self.points[i], radius + eps, p=p)
        return np.asarray(sorted(idx), dtype=np.int64)

    def ball_sizes(self, i: int, radius: float) -> int:
        return len(self.ball(i, radius))

    def diameter(self, idx) -> float:
        idx = np.asarray(idx)
        if len(idx) < 2:
            return 0.0
        if self._D is not None:
            return float(self._D[np.ix_(idx, idx)].max())
        pts = self.points[idx]
        if self.metric == "chebyshev":
            return float((pts.max(axis=0) - pts.min(axis=0)).max())
        return float(cdist(pts, pts, metric=self.metric).max())


@dataclass(frozen=True, eq=False)
class PartitionResult:
    assignment: np.ndarray
    alpha: float
    R: float

    @property
    def n_blocks(self) -> int:
        return int(self.assignment.max()) + 1

    @property
    def blocks(self) -> list[np.ndarray]:
        order = np.argsort(self.assignment, kind="stable")
        cuts = np.flatnonzero(np.diff(self.assignment[order])) + 1
        return np.split(order, cuts)

    def block_of(self, i: int) -> int:
        return int(self.assignment[i])


def ckr_partition(X: FiniteMetricSpace, R: float, rng=None) -> PartitionResult:
    """One sample of the random partition; blocks are numbered by the
    position of their centre in the ordering."""
    if not R > 0:
        raise ValueError("R must be positive")
    rng = np.random.default_rng(rng)
    alpha = float(rng.uniform(0.25, 0.5))
    order = rng.permutation(len(X))
    radius = alpha * R
    centre = np.full(len(X), -1, dtype=np.int64)
    remaining = len(X)
    for rank, c in enumerate(order):
        nb = X.ball(int(c), radius)
        fresh = nb[centre[nb] < 0]
        if fresh.size:
            centre[fresh] = rank
            remaining -= fresh.size
            if remaining == 0:
                break
    _, assignment = np.unique(centre, return_inverse=True)
    return PartitionResult(assignment.astype(np.int64), alpha, float(R))


@dataclass(frozen=True)
class PaddingEstimate:
    rate: float
    stderr: float
    bound: float
    samples: int

    @property
    def within_3sigma(self) -> bool:
        return self.rate <= self.bound + 3.0 * self.stderr


def padding_rate(X: FiniteMetricSpace, R: float, r: float, x: int, samples: int = 10_000,
                 rng=None) -> PaddingEstimate:
    """Frequency of ``B(x, r)`` not contained in the block of ``x``,
    compared against ``(8r/R) H(|B(x,R/8)|, |B(x,R)|)``."""
    if not 0 < r < R / 8:
        raise ValueError(f"need 0 < r < R/8, got r={r}, R={R}")
    rng = np.random.default_rng(rng)
    near = X.ball(x, r)
    cut = 0
    for _ in range(samples):
        a = ckr_partition(X, R, rng).assignment
        cut += bool(np.any(a[near] != a[x]))
    rate = cut / samples
    stderr = math.sqrt(max(rate * (1 - rate), 1.0 / samples) / samples)
    bound = padding_bound(r, R, X.ball_sizes(x, R / 8), X.ball_sizes(x, R))
    return PaddingEstimate(rate, stderr, bound, samples)


# --------------------------------------------------------------------------
# boundary sets on the coarse grid


@dataclass(frozen=True, eq=False)
class BoundaryPartitionReport:
    partition: PartitionResult
    padded: np.ndarray
    degenerate: np.ndarray
    q: int
    r: float

    @property
    def R(self) -> float:
        return self.partition.R

    @property
    def boundary_fraction(self) -> float:
        return float(np.mean(~self.padded))

    @property
    def reference(self) -> float:
        """``ln R / R``."""
        return math.log(self.R) / self.R

    @property
    def c1(self) -> float:
        return self.boundary_fraction / self.reference


def partition_boundary_set(points, q: int, rng=None, r: float = 16.0) -> BoundaryPartitionReport:
    """Partition coarse sites under ``d_inf`` with ``R = q^4``.

    A point is padded when its ``r``-ball (within the set) stays in its
    block; ``degenerate`` marks padded points whose ``r``-ball is the point
    alone.
    """
    pts = np.asarray(points).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("boundary set must be nonempty")
    X = FiniteMetricSpace(pts, "chebyshev")
    part = ckr_partition(X, float(q) ** 4, rng)
    a = part.assignment
    padded = np.empty(len(pts), dtype=bool)
    degenerate = np.empty(len(pts), dtype=bool)
    tree = X._tree
    for i, nb in enumerate(tree.query_ball_point(pts, r + 1e-9, p=np.inf)):
        nb = np.asarray(nb)
        padded[i] = np.all(a[nb] == a[i])
        degenerate[i] = len(nb) == 1
    return BoundaryPartitionReport(part, padded, degenerate, int(q), float(r))


def write_partition_csv(report: BoundaryPartitionReport, path) -> None:
    with Path(path).open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["point", "block", "padded"])
        for i, (b, p) in enumerate(zip(report.partition.assignment, report.padded)):
            w.writerow([i, int(b), int(p)])


def read_partition_csv(path) -> list[tuple[int, int, int]]:
    with Path(path).open() as f:
        rows = list(csv.reader(f))[1:]
    return [tuple(map(int, r)) for r in rows]
