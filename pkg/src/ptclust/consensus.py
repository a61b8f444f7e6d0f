"""Consensus functions: agglomerative merging and bipartite partitioning.

Both consume the dense trajectory similarity over microclusters and emit an
object-level labeling. The agglomerative route (PTA) greedily merges the
most similar regions and cuts the resulting dendrogram; the bipartite route
(PTGP) links microclusters to the ensemble's clusters, partitions that
bipartite graph spectrally, and groups microclusters by segment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .ensemble import Ensemble, MicroclusterSet, canonical_labels
from .errors import NumericError, ValidationError
from .generators import kmeans
from .trajectory import PtsMatrix

logger = logging.getLogger(__name__)

LINKAGES = ("al", "cl", "sl")
CL_SEMANTICS = ("sum", "min")

_NEG = -np.inf
# generalized eigenvalue directions this close to degenerate are dropped
# before the transfer step (they would divide by ~0)
_EIG_DROP_TOL = 1e-10


@dataclass(frozen=True)
class Dendrogram:
    """Merge history of the agglomerative consensus.

    Leaves are microclusters 0..n_leaves-1; the merge at step t creates node
    ``n_leaves + t`` from ``left[t]`` and ``right[t]`` at similarity
    ``similarity[t]``. There are exactly n_leaves - 1 merges; cutting at k
    undoes the last k - 1 of them.
    """

    n_leaves: int
    left: np.ndarray
    right: np.ndarray
    similarity: np.ndarray

    def cut(self, k: int) -> np.ndarray:
        """Labels of the n_leaves microclusters when k regions remain.

        Labels are dense in 0..k-1, numbered by each region's smallest
        microcluster index.
        """
        n = self.n_leaves
        if not 1 <= k <= n:
            raise ValidationError(f"cut level must be in 1..{n}, got {k}")
        total = 2 * n - 1
        merged_into = np.full(total, -1, dtype=np.int64)
        for t in range(n - k):
            merged_into[self.left[t]] = n + t
            merged_into[self.right[t]] = n + t
        # merge targets always have larger ids, so one descending pass
        # resolves every node to its surviving ancestor
        root = np.arange(total, dtype=np.int64)
        for node in range(total - 1, -1, -1):
            if merged_into[node] != -1:
                root[node] = root[merged_into[node]]
        labels, _ = canonical_labels(root[:n])
        return labels


@dataclass(frozen=True)
class BipartiteGraph:
    """Weighted links between microclusters (rows) and ensemble clusters
    (columns); there are no links within either side."""

    weights: np.ndarray
    column_clustering: np.ndarray
    column_cluster: np.ndarray

    @property
    def n_microclusters(self) -> int:
        return self.weights.shape[0]

    @property
    def n_clusters_total(self) -> int:
        return self.weights.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.n_microclusters + self.n_clusters_total


@dataclass(frozen=True)
class TcutInfo:
    """Spectral metadata from a bipartite partitioning run."""

    eigenvalues: tuple[np.ndarray, ...]
    n_dropped: int
    component_allocation: tuple[int, ...]


@dataclass(frozen=True)
class ConsensusResult:
    """Final object-level consensus labeling."""

    object_labels: np.ndarray
    microcluster_labels: np.ndarray
    k: int
    method: str
    dendrogram: Optional[Dendrogram] = field(default=None, repr=False)
    tcut: Optional[TcutInfo] = field(default=None, repr=False)

    @property
    def n_clusters_found(self) -> int:
        return int(self.microcluster_labels.max()) + 1


def build_dendrogram(
    similarity: np.ndarray, linkage: str = "al", cl_semantics: str = "sum"
) -> Dendrogram:
    """Merge the two most similar regions until one remains.

    Region-region similarity combines the pairwise entries of ``similarity``
    across the two regions: their mean for ``al``, their sum for ``cl``
    (``cl_semantics="min"`` switches to the classical minimum), and their
    maximum for ``sl``. Ties are broken toward the pair of regions with the
    lexicographically smallest indices, a region's index being the smallest
    microcluster it contains; the merge sequence is therefore deterministic.
    """
    if linkage not in LINKAGES:
        raise ValidationError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    if cl_semantics not in CL_SEMANTICS:
        raise ValidationError(
            f"cl_semantics must be one of {CL_SEMANTICS}, got {cl_semantics!r}"
        )
    similarity = np.asarray(similarity, dtype=np.float64)
    n = similarity.shape[0]
    if similarity.ndim != 2 or similarity.shape[1] != n:
        raise ValidationError("similarity must be a square matrix")
    if n == 1:
        empty_i = np.empty(0, dtype=np.int64)
        return Dendrogram(1, empty_i, empty_i.copy(), np.empty(0))

    use_sums = linkage == "al" or (linkage == "cl" and cl_semantics == "sum")
    sums = similarity.copy() if use_sums else None
    val = similarity.copy()
    np.fill_diagonal(val, _NEG)
    sizes = np.ones(n)
    active = np.ones(n, dtype=bool)
    ids = np.arange(n, dtype=np.int64)

    best_val = np.full(n, _NEG)
    best_j = np.full(n, -1, dtype=np.int64)

    def refresh_row(i: int) -> None:
        row = val[i, i + 1 :]
        if row.size == 0:
            best_val[i], best_j[i] = _NEG, -1
            return
        j = int(np.argmax(row))  # first occurrence: smallest index wins ties
        best_val[i] = row[j]
        best_j[i] = i + 1 + j if row[j] != _NEG else -1
        if best_j[i] == -1:
            best_val[i] = _NEG

    for i in range(n):
        refresh_row(i)

    left = np.empty(n - 1, dtype=np.int64)
    right = np.empty(n - 1, dtype=np.int64)
    sims = np.empty(n - 1)

    for t in range(n - 1):
        u = int(np.argmax(best_val))
        v = int(best_j[u])
        if v < 0:
            raise NumericError("agglomeration ran out of candidate pairs")
        sims[t] = best_val[u]
        left[t] = ids[u]
        right[t] = ids[v]

        # fold region v into slot u (u < v, so u keeps the smallest index)
        if linkage == "al":
            sums[:, u] += sums[:, v]
            sums[u, :] = sums[:, u]
            sizes[u] += sizes[v]
            col = sums[:, u] / (sizes * sizes[u])
        elif linkage == "cl" and cl_semantics == "sum":
            col = sums[:, u] + sums[:, v]
            sums[:, u] = col
            sums[u, :] = col
        elif linkage == "cl":
            col = np.minimum(val[:, u], val[:, v])
        else:  # sl
            col = np.maximum(val[:, u], val[:, v])

        val[:, u] = col
        val[u, :] = col
        active[v] = False
        val[v, :] = _NEG
        val[:, v] = _NEG
        val[u, u] = _NEG
        val[~active, u] = _NEG
        val[u, ~active] = _NEG
        ids[u] = n + t
        best_val[v], best_j[v] = _NEG, -1

        # repair the per-row best caches touched by columns u and v
        lo = np.flatnonzero(active[:u])
        if lo.size:
            nv = val[lo, u]
            bv = best_val[lo]
            bj = best_j[lo]
            better = nv > bv
            tie = (nv == bv) & (bj != v) & (u < bj)
            stale = ((bj == u) | (bj == v)) & (nv < bv)
            stale |= (bj == v) & (nv == bv)
            idx = lo[better]
            best_val[idx] = nv[better]
            best_j[idx] = u
            best_j[lo[tie]] = u
            for w in lo[stale & ~better]:
                refresh_row(int(w))
        mid = np.flatnonzero(active[u + 1 : v]) + u + 1
        for w in mid[best_j[mid] == v]:
            refresh_row(int(w))
        refresh_row(u)

    for arr in (left, right, sims):
        arr.setflags(write=False)
    return Dendrogram(n_leaves=n, left=left, right=right, similarity=sims)


def pta(
    pts: PtsMatrix,
    mcs: MicroclusterSet,
    k: int,
    linkage: str = "al",
    cl_semantics: str = "sum",
) -> ConsensusResult:
    """Agglomerative consensus over the trajectory similarity.

    Builds the full dendrogram, cuts it at k regions and maps microcluster
    labels back to objects.
    """
    n = pts.n_nodes
    if n != mcs.n_microclusters:
        raise ValidationError("similarity matrix and microcluster set disagree")
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in 1..{n}, got {k}")
    dendrogram = build_dendrogram(pts.values, linkage=linkage, cl_semantics=cl_semantics)
    if k < n and np.any(dendrogram.similarity[: n - k] <= 0):
        logger.warning(
            "cut at k=%d groups regions with zero similarity; "
            "their grouping is arbitrary (deterministic tie-break)",
            k,
        )
    micro_labels = dendrogram.cut(k)
    object_labels = micro_labels[mcs.assignment]
    object_labels.setflags(write=False)
    return ConsensusResult(
        object_labels=object_labels,
        microcluster_labels=micro_labels,
        k=k,
        method=f"pta-{linkage}",
        dendrogram=dendrogram,
    )


def sim_mc(pts: PtsMatrix, mcs: MicroclusterSet, ensemble: Ensemble) -> BipartiteGraph:
    """Microcluster-to-cluster similarity for every cluster in the ensemble.

    The similarity between microcluster i and cluster C is the mean
    trajectory similarity between i and the microclusters contained in C;
    columns enumerate the clusters of all base clusterings in order.
    """
    if pts.n_nodes != mcs.n_microclusters:
        raise ValidationError("similarity matrix and microcluster set disagree")
    n = mcs.n_microclusters
    blocks = []
    col_clustering = []
    col_cluster = []
    for m in range(ensemble.n_clusterings):
        n_m = ensemble.clusters_per_base[m]
        onehot = np.zeros((n, n_m))
        onehot[np.arange(n), mcs.signatures[:, m]] = 1.0
        counts = onehot.sum(axis=0)
        if (counts == 0).any():
            raise NumericError("empty ensemble cluster; canonicalization broken")
        blocks.append((pts.values @ onehot) / counts)
        col_clustering.extend([m] * n_m)
        col_cluster.extend(range(n_m))
    weights = np.hstack(blocks)
    weights.setflags(write=False)
    return BipartiteGraph(
        weights=weights,
        column_clustering=np.asarray(col_clustering, dtype=np.int32),
        column_cluster=np.asarray(col_cluster, dtype=np.int32),
    )


def _solve_tcut(
    B: np.ndarray, k: int, seed: int, restarts: int
) -> tuple[np.ndarray, np.ndarray, int]:
    """Partition a connected bipartite graph into k row-side segments.

    Solves the normalized-cut relaxation on the small column side: with
    W_c = B^T D_r^-1 B and D_c the column sums of B, the generalized
    eigenpairs (D_c - W_c) v = gamma D_c v correspond to cut eigenvalues
    lambda with lambda (2 - lambda) = gamma, i.e. 1 - lambda = sqrt(1 -
    gamma). Each eigenvector transfers back to the rows via
    u = D_r^-1 B v / (1 - lambda); the row-normalized embedding is then
    clustered with seeded k-means. Directions with lambda ~= 1 are dropped
    before the transfer (the division would blow up).

    Returns (labels, cut eigenvalues, n_dropped).
    """
    n_rows, n_cols = B.shape
    d_row = B.sum(axis=1)
    d_col = B.sum(axis=0)
    if (d_row <= 0).any() or (d_col <= 0).any():
        raise NumericError("bipartite graph has a disconnected zero-weight node")
    scaled = B / d_row[:, None]
    W = scaled.T @ B
    W = (W + W.T) / 2.0
    k_eig = min(k, n_cols)
    mu, V = scipy.linalg.eigh(
        W, np.diag(d_col), subset_by_index=[n_cols - k_eig, n_cols - 1]
    )
    # mu = 1 - gamma = (1 - lambda)^2
    keep = mu > _EIG_DROP_TOL**2
    n_dropped = int(k_eig - keep.sum())
    if n_dropped:
        logger.warning("dropped %d degenerate spectral directions", n_dropped)
    mu = mu[keep]
    V = V[:, keep]
    if mu.size == 0:
        raise NumericError("no usable spectral directions")
    U = (B @ V) / d_row[:, None] / np.sqrt(mu)[None, :]
    norms = np.linalg.norm(U, axis=1)
    norms[norms == 0] = 1.0
    U = U / norms[:, None]
    k_eff = min(k, U.shape[1])
    if k_eff < k:
        logger.warning("only %d spectral directions; returning fewer clusters", k_eff)
    labels = kmeans(U, k_eff, seed=seed, n_init=restarts)
    return labels, 1.0 - np.sqrt(mu), n_dropped


def ptgp(
    bg: BipartiteGraph,
    mcs: MicroclusterSet,
    k: int,
    seed: int = 0,
    restarts: int = 10,
) -> ConsensusResult:
    """Bipartite-partitioning consensus.

    Partitions the microcluster-cluster bipartite graph into k segments with
    the transfer-cut procedure; microclusters in the same segment become one
    consensus cluster, mapped back to objects. Disconnected graphs are
    partitioned per component, with k shared out proportionally to component
    object counts (at least one cluster per component).
    """
    n = bg.n_microclusters
    if n != mcs.n_microclusters:
        raise ValidationError("bipartite graph and microcluster set disagree")
    if not 2 <= k <= min(n, bg.n_clusters_total):
        raise ValidationError(
            f"k must be in 2..{min(n, bg.n_clusters_total)}, got {k}"
        )

    structure = sp.csr_matrix(bg.weights)
    bi = sp.bmat([[None, structure], [structure.T, None]], format="csr")
    n_comp, comp = connected_components(bi, directed=False)
    comp_rows = comp[:n]
    comp_cols = comp[n:]

    micro_labels = np.empty(n, dtype=np.int64)
    eigs: list[np.ndarray] = []
    total_dropped = 0

    if n_comp == 1:
        labels, lam, dropped = _solve_tcut(bg.weights, k, seed, restarts)
        micro_labels[:] = labels
        eigs.append(lam)
        total_dropped += dropped
        allocation = (k,)
    else:
        allocation = _allocate_clusters(k, n_comp, comp_rows, comp_cols, mcs.sizes)
        offset = 0
        lumped = [c for c in range(n_comp) if allocation[c] == 0]
        if lumped:
            # more components than requested clusters: overflow shares a label
            for c in lumped:
                micro_labels[comp_rows == c] = offset
            offset += 1
        for c in range(n_comp):
            k_c = allocation[c]
            if k_c == 0:
                continue
            rows = np.flatnonzero(comp_rows == c)
            cols = np.flatnonzero(comp_cols == c)
            if k_c == 1 or cols.size == 0:
                micro_labels[rows] = offset
                offset += 1
                continue
            sub = bg.weights[np.ix_(rows, cols)]
            labels, lam, dropped = _solve_tcut(sub, k_c, seed + c, restarts)
            micro_labels[rows] = offset + labels
            offset += int(labels.max()) + 1
            eigs.append(lam)
            total_dropped += dropped

    micro_labels, _ = canonical_labels(micro_labels)
    found = int(micro_labels.max()) + 1
    if found < k:
        logger.warning("requested %d clusters, produced %d", k, found)
    object_labels = micro_labels[mcs.assignment]
    object_labels.setflags(write=False)
    return ConsensusResult(
        object_labels=object_labels,
        microcluster_labels=micro_labels,
        k=k,
        method="ptgp",
        tcut=TcutInfo(
            eigenvalues=tuple(eigs),
            n_dropped=total_dropped,
            component_allocation=tuple(allocation),
        ),
    )


def _allocate_clusters(
    k: int,
    n_comp: int,
    comp_rows: np.ndarray,
    comp_cols: np.ndarray,
    sizes: np.ndarray,
) -> tuple[int, ...]:
    """Share k clusters among graph components, proportional to object count.

    Every component receives at least one cluster and at most as many as it
    has microclusters or ensemble clusters. If k is below the component
    count, the k - 1 largest components keep their own cluster and the rest
    get allocation 0, meaning they share a single lumped cluster.
    """
    weight = np.zeros(n_comp)
    caps = np.zeros(n_comp, dtype=np.int64)
    for c in range(n_comp):
        rows = comp_rows == c
        weight[c] = sizes[rows].sum()
        caps[c] = max(1, min(int(rows.sum()), int((comp_cols == c).sum())))

    if k < n_comp:
        logger.warning(
            "requested %d clusters for %d disconnected components; "
            "smallest components are lumped together",
            k,
            n_comp,
        )
        order = np.argsort(-weight, kind="stable")
        alloc = np.zeros(n_comp, dtype=np.int64)
        alloc[order[: k - 1]] = 1
        return tuple(int(a) for a in alloc)

    alloc = np.ones(n_comp, dtype=np.int64)
    remaining = k - n_comp
    quota = weight / weight.sum() * k
    while remaining > 0:
        gap = np.where(alloc < caps, quota - alloc, -np.inf)
        c = int(np.argmax(gap))
        if gap[c] == -np.inf:
            break  # every component at capacity; fewer clusters than asked
        alloc[c] += 1
        remaining -= 1
    return tuple(int(a) for a in alloc)
