"""Random walks on the sparse graph and trajectory similarity.

A walker started at node i visits neighbors with probability proportional
to link weight times neighbor size, so a microcluster of s objects attracts
walkers like s parallel object-level nodes would. The step-1..T visiting
distributions of each start node, concatenated, form its trajectory; the
cosine between two trajectories is the derived dense similarity.

Trajectories are never materialized: cosine needs only inner products, so a
running Gram matrix G = sum_t P^t (P^t)^T is accumulated instead, dropping
memory from O(T n^2) to O(n^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import NumericError, ValidationError
from .graph import SparseSimGraph

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic sparse walk matrix with component labels.

    Nodes without any link get an absorbing self-loop (p_ii = 1), which
    keeps the matrix stochastic and makes their trajectories orthogonal to
    everything else.
    """

    matrix: sp.csr_matrix
    component_id: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_components(self) -> int:
        return int(self.component_id.max()) + 1 if self.component_id.size else 0


@dataclass(frozen=True)
class TrajectoryGram:
    """Accumulated trajectory inner products: G[i, j] = <traj_i, traj_j>."""

    values: np.ndarray
    steps: int


@dataclass(frozen=True)
class PtsMatrix:
    """Dense trajectory cosine similarity: symmetric, unit diagonal, [0, 1]."""

    values: np.ndarray
    steps: int

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]


def build_transition(keng: SparseSimGraph) -> TransitionMatrix:
    """Size-aware transition probabilities on the sparse graph.

    p_ij is proportional to (size of j) * (weight of link i-j), normalized
    over the neighbors of i. Rows of isolated nodes get p_ii = 1.
    """
    n = keng.n_nodes
    adj = keng.csr
    scaled = adj.multiply(keng.node_sizes[None, :]).tocsr()
    row_sums = np.asarray(scaled.sum(axis=1)).ravel()
    linked = row_sums > 0

    inv = np.zeros(n)
    inv[linked] = 1.0 / row_sums[linked]
    P = sp.diags(inv) @ scaled
    if not linked.all():
        loops = np.where(linked, 0.0, 1.0)
        P = P + sp.diags(loops)
    P = P.tocsr()

    check = np.asarray(P.sum(axis=1)).ravel()
    if np.abs(check - 1.0).max() > ROW_SUM_TOL:
        raise NumericError("transition matrix rows failed to normalize")

    _, component_id = connected_components(adj, directed=False)
    component_id = component_id.astype(np.int32)
    component_id.setflags(write=False)
    return TransitionMatrix(matrix=P, component_id=component_id)


def walk_distributions(transition: TransitionMatrix, n_steps: int) -> Iterator[np.ndarray]:
    """Yield the dense t-step distribution matrix for t = 1..n_steps.

    Row i of the t-th matrix is the visiting distribution of a walker that
    started at node i, t steps in. Each yielded array is freshly allocated.
    """
    if n_steps < 1:
        raise ValidationError(f"walk length must be >= 1, got {n_steps}")
    P = transition.matrix
    current = P.toarray()
    yield current
    for _ in range(1, n_steps):
        current = P @ current
        yield current


def accumulate_gram(
    transition: TransitionMatrix, n_steps: int, strategy: str = "auto"
) -> TrajectoryGram:
    """Accumulate G = sum over t = 1..n_steps of P^t (P^t)^T.

    ``stepwise`` follows that sum directly. ``doubling`` evaluates the same
    polynomial by segment composition -- with H_m denoting the partial sum up
    to m steps, H_{a+b} = H_a + P^a H_b (P^a)^T -- cutting the number of
    dense products from O(T) to O(log T). Both agree to roundoff; ``auto``
    picks doubling once the stepwise flop count gets large.
    """
    if n_steps < 1:
        raise ValidationError(f"walk length must be >= 1, got {n_steps}")
    n = transition.n_nodes
    if strategy == "auto":
        strategy = "doubling" if n_steps >= 4 and n_steps * n**3 > 5e10 else "stepwise"
    if strategy == "stepwise":
        gram = np.zeros((n, n))
        for step in walk_distributions(transition, n_steps):
            gram += step @ step.T
    elif strategy == "doubling":
        gram = _gram_by_doubling(transition.matrix, n_steps)
    else:
        raise ValidationError(f"unknown gram strategy {strategy!r}")
    gram = (gram + gram.T) / 2.0
    return TrajectoryGram(values=gram, steps=n_steps)


def _gram_by_doubling(P: sp.csr_matrix, n_steps: int) -> np.ndarray:
    """Square-and-multiply evaluation of the trajectory Gram sum."""
    dense = P.toarray()
    gram = dense @ dense.T  # partial sum for T = 1
    power = dense.copy()  # P^T for the T built so far
    bits = bin(n_steps)[3:]  # below the leading 1
    if bits:
        buf_a = np.empty_like(gram)
        buf_b = np.empty_like(gram)
    for pos, bit in enumerate(bits):
        last = pos == len(bits) - 1
        np.matmul(power, gram, out=buf_a)
        np.matmul(buf_a, power.T, out=buf_b)
        gram += buf_b
        if not last or bit == "1":
            np.matmul(power, power, out=buf_a)
            power, buf_a = buf_a, power
        if bit == "1":
            np.matmul(power, dense, out=buf_a)
            power, buf_a = buf_a, power
            gram += power @ power.T
    return gram


def compute_pts(
    transition: TransitionMatrix, n_steps: int, strategy: str = "auto"
) -> PtsMatrix:
    """Cosine similarity between the length-T trajectories of all node pairs.

    Normalizes the accumulated Gram matrix; the diagonal is exactly 1 and
    nodes in different graph components come out exactly 0 (their
    trajectories have disjoint support).
    """
    gram = accumulate_gram(transition, n_steps, strategy=strategy)
    diag = np.diag(gram.values).copy()
    if (diag <= 0).any():
        raise NumericError("trajectory norm vanished for some node")
    scale = np.sqrt(diag)
    values = gram.values / np.outer(scale, scale)
    np.minimum(values, 1.0, out=values)  # shave Cauchy-Schwarz roundoff
    np.fill_diagonal(values, 1.0)
    values.setflags(write=False)
    return PtsMatrix(values=values, steps=n_steps)


def default_walk_param(n_microclusters: int) -> int:
    """Default for both the elite-neighbor count and the walk length:
    floor(sqrt(n)/2), clamped to at least 1."""
    return max(1, int(np.sqrt(n_microclusters) / 2))
