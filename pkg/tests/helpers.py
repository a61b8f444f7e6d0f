"""Shared generators for randomized tests."""

import numpy as np

from ptclust import (
    Ensemble,
    build_keng,
    build_microclusters,
    build_msg,
    compute_mca,
)

# the 8-object, 2-clustering example: two base clusterings whose
# intersection yields the microclusters {0,1,2}, {3}, {4,5}, {6,7}
EIGHT_OBJECT_LABELS = np.array(
    [
        [0, 0],
        [0, 0],
        [0, 0],
        [0, 1],
        [1, 1],
        [1, 1],
        [1, 2],
        [1, 2],
    ]
)


def eight_object_ensemble() -> Ensemble:
    return Ensemble.from_labels(EIGHT_OBJECT_LABELS)


def random_ensemble(rng, n, m, c_max=None) -> Ensemble:
    """Random label matrix with per-column cluster counts in [2, c_max]."""
    c_max = c_max or max(2, int(np.sqrt(n)))
    cols = []
    for _ in range(m):
        c = int(rng.integers(2, c_max + 1))
        cols.append(rng.integers(0, c, size=n))
    return Ensemble.from_labels(np.stack(cols, axis=1))


def random_msg(rng, n=60, m=6):
    """Similarity graph of a random ensemble (weights on the 1/m grid)."""
    ens = random_ensemble(rng, n, m)
    mcs = build_microclusters(ens)
    return build_msg(compute_mca(ens, mcs), mcs), mcs, ens


def random_keng(rng, n=60, m=6, k_elite=3):
    msg, mcs, ens = random_msg(rng, n, m)
    return build_keng(msg, k_elite), mcs, ens


def planted_ensemble(rng, n=120, groups=4, m=5, noise=0.2):
    """Base clusterings that agree with a planted partition up to label
    noise; returns (ensemble, planted labels)."""
    planted = rng.integers(0, groups, size=n)
    cols = []
    for _ in range(m):
        labels = planted.copy()
        flips = rng.random(n) < noise
        labels[flips] = rng.integers(0, groups, size=int(flips.sum()))
        cols.append(labels)
    return Ensemble.from_labels(np.stack(cols, axis=1)), planted


def make_blobs(rng, n, centers, std=1.0):
    """Isotropic Gaussian blobs with balanced sizes; returns (points, truth)."""
    centers = np.asarray(centers, dtype=np.float64)
    c, d = centers.shape
    sizes = np.full(c, n // c)
    sizes[: n % c] += 1
    points = []
    truth = []
    for j in range(c):
        points.append(centers[j] + std * rng.standard_normal((sizes[j], d)))
        truth.extend([j] * sizes[j])
    return np.vstack(points), np.asarray(truth, dtype=np.int64)


def identical_copies_ensemble(base_labels, m) -> Ensemble:
    base_labels = np.asarray(base_labels)
    return Ensemble.from_labels(np.tile(base_labels[:, None], (1, m)))
