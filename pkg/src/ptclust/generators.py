"""Base-clustering pool construction from feature data.

Consensus itself never touches feature vectors; this module only exists to
manufacture diverse base clusterings. Pools mix k-means runs with rival
penalized competitive learning (RPCL) runs, each with a randomly drawn
cluster count, and every member is reproducible from its recorded seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .ensemble import Ensemble
from .errors import ValidationError

logger = logging.getLogger(__name__)

MAX_POOL_CLUSTERS = 50


@dataclass(frozen=True)
class FeatureDataset:
    """Feature matrix with optional ground-truth labels."""

    points: np.ndarray
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 1:
            raise ValidationError("feature data must be a non-empty N x d matrix")
        if not np.all(np.isfinite(points)):
            raise ValidationError("feature data must be finite")
        object.__setattr__(self, "points", points)
        if self.truth is not None:
            truth = np.asarray(self.truth)
            if truth.shape[0] != points.shape[0]:
                raise ValidationError("ground truth length does not match data")
            object.__setattr__(self, "truth", truth)

    @property
    def n_objects(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class PoolMember:
    algorithm: str
    n_clusters: int
    seed: int


@dataclass(frozen=True)
class ClusteringPool:
    """Pool of base clusterings stored column-wise, plus per-member metadata."""

    labels: np.ndarray
    members: tuple[PoolMember, ...]
    seed: int

    @property
    def size(self) -> int:
        return self.labels.shape[1]


def kmeans(
    points: np.ndarray,
    c: int,
    seed: int = 0,
    n_init: int = 1,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> np.ndarray:
    """Lloyd iteration with seeded random-point initialization.

    Empty clusters are repaired by reseeding from the point farthest from
    its assigned center. With ``n_init`` restarts the labeling with the
    lowest within-cluster squared error wins. Deterministic for a fixed
    seed.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= c <= n:
        raise ValidationError(f"cluster count must be in 1..{n}, got {c}")
    if c == 1:
        return np.zeros(n, dtype=np.int32)
    rng = np.random.default_rng(seed)
    sq_norms = (points**2).sum(axis=1)

    best_labels = None
    best_sse = np.inf
    for _ in range(n_init):
        centers = points[rng.choice(n, size=c, replace=False)].copy()
        labels = np.zeros(n, dtype=np.int32)
        for _ in range(max_iter):
            d2 = _sq_distances(points, centers, sq_norms)
            labels = np.argmin(d2, axis=1).astype(np.int32)
            labels, d2 = _repair_empty(points, centers, labels, d2, sq_norms)
            new_centers = centers.copy()
            for j in range(c):
                mask = labels == j
                if mask.any():
                    new_centers[j] = points[mask].mean(axis=0)
            shift = float(np.linalg.norm(new_centers - centers))
            scale = float(np.linalg.norm(centers)) + 1e-12
            centers = new_centers
            if shift / scale < tol:
                break
        sse = float(np.take_along_axis(d2, labels[:, None].astype(np.int64), 1).sum())
        if sse < best_sse:
            best_sse = sse
            best_labels = labels
    return best_labels


def _sq_distances(points, centers, sq_norms):
    d2 = sq_norms[:, None] - 2.0 * (points @ centers.T) + (centers**2).sum(axis=1)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _repair_empty(points, centers, labels, d2, sq_norms):
    """Reseed centers of empty clusters from the farthest assigned point."""
    c = centers.shape[0]
    for _ in range(c):
        counts = np.bincount(labels, minlength=c)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            break
        assigned = np.take_along_axis(d2, labels[:, None].astype(np.int64), 1).ravel()
        far = int(np.argmax(assigned))
        centers[empty[0]] = points[far]
        d2 = _sq_distances(points, centers, sq_norms)
        labels = np.argmin(d2, axis=1).astype(np.int32)
    return labels, d2


@njit(cache=True)
def _rpcl_epoch(points, units, active, order, alpha_w, alpha_r, wins):
    """One online pass: the winner moves toward the sample, the runner-up
    is pushed away."""
    c, d = units.shape
    for s in order:
        best = -1
        second = -1
        best_d = np.inf
        second_d = np.inf
        for u in range(c):
            if not active[u]:
                continue
            dist = 0.0
            for j in range(d):
                diff = units[u, j] - points[s, j]
                dist += diff * diff
            if dist < best_d:
                second = best
                second_d = best_d
                best = u
                best_d = dist
            elif dist < second_d:
                second = u
                second_d = dist
        for j in range(d):
            units[best, j] += alpha_w * (points[s, j] - units[best, j])
        if second >= 0:
            for j in range(d):
                units[second, j] -= alpha_r * (points[s, j] - units[second, j])
        wins[best] += 1


def rpcl(
    points: np.ndarray,
    c_init: int,
    alpha_w: float = 0.05,
    alpha_r: float = 0.002,
    epochs: int = 50,
    prune_fraction: float = 0.01,
    seed: int = 0,
) -> np.ndarray:
    """Rival penalized competitive learning.

    Per sample, the closest unit learns toward it at rate ``alpha_w`` while
    the second-closest is de-learned away at the much smaller ``alpha_r``.
    After each epoch, units that won fewer than ``prune_fraction`` of the
    samples are pruned, so the effective cluster count can shrink below
    ``c_init``. With ``alpha_r = 0`` there is no rival penalty and no
    pruning: plain online competitive learning with all units kept. The
    final labeling assigns each point to its nearest surviving unit.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if c_init < 1 or c_init > n:
        raise ValidationError(f"initial unit count must be in 1..{n}, got {c_init}")
    if not 0.0 <= alpha_r <= alpha_w < 1.0:
        raise ValidationError("rates must satisfy 0 <= alpha_r <= alpha_w < 1")
    rng = np.random.default_rng(seed)
    units = points[rng.choice(n, size=c_init, replace=False)].copy()
    active = np.ones(c_init, dtype=np.bool_)
    orders = np.stack([rng.permutation(n) for _ in range(epochs)])

    min_wins = prune_fraction * n
    for e in range(epochs):
        wins = np.zeros(c_init, dtype=np.int64)
        _rpcl_epoch(points, units, active, orders[e], alpha_w, alpha_r, wins)
        if alpha_r > 0.0:
            weak = active & (wins < min_wins)
            if weak.any():
                survivors = active & ~weak
                if not survivors.any():
                    # keep the strongest unit rather than pruning everything
                    survivors[int(np.argmax(wins))] = True
                active = survivors

    if not active.any():  # unreachable, kept as a hard guard
        logger.warning("all units pruned; falling back to a single cluster")
        return np.zeros(n, dtype=np.int32)
    live = units[active]
    d2 = _sq_distances(points, live, (points**2).sum(axis=1))
    return np.argmin(d2, axis=1).astype(np.int32)


def pool_cluster_bound(n_objects: int) -> int:
    """Upper bound for randomly drawn cluster counts: floor(sqrt(N)/2),
    capped at 50."""
    return min(int(math.sqrt(n_objects) / 2), MAX_POOL_CLUSTERS)


def build_pool(data: FeatureDataset, pool_size: int, seed: int = 0) -> ClusteringPool:
    """Build a pool of base clusterings: half k-means, half RPCL.

    Each member gets a cluster count drawn uniformly from [2, ub] with
    ub = floor(sqrt(N)/2) capped at 50, and its own derived seed, so the
    whole pool is reproducible bit-for-bit from ``seed``.
    """
    if pool_size < 2 or pool_size % 2 != 0:
        raise ValidationError(f"pool size must be even and >= 2, got {pool_size}")
    ub = pool_cluster_bound(data.n_objects)
    if ub < 2:
        raise ValidationError(
            f"dataset too small for pool generation (N={data.n_objects} "
            f"gives cluster bound {ub} < 2)"
        )
    rng = np.random.default_rng(seed)
    labels = np.empty((data.n_objects, pool_size), dtype=np.int32)
    members = []
    half = pool_size // 2
    for p in range(pool_size):
        c = int(rng.integers(2, ub + 1))
        member_seed = int(rng.integers(0, 2**63 - 1))
        if p < half:
            labels[:, p] = kmeans(data.points, c, seed=member_seed)
            algorithm = "kmeans"
        else:
            labels[:, p] = rpcl(data.points, c, seed=member_seed)
            algorithm = "rpcl"
        members.append(PoolMember(algorithm=algorithm, n_clusters=c, seed=member_seed))
    labels.setflags(write=False)
    return ClusteringPool(labels=labels, members=tuple(members), seed=seed)


def draw_ensemble(pool: ClusteringPool, m: int, seed: int = 0) -> Ensemble:
    """Draw m distinct pool members (seeded) and form an ensemble."""
    if not 1 <= m <= pool.size:
        raise ValidationError(
            f"ensemble size must be in 1..{pool.size}, got {m}"
        )
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(pool.size, size=m, replace=False))
    return Ensemble.from_labels(pool.labels[:, chosen])
