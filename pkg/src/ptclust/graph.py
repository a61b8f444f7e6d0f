"""Microcluster similarity graph and elite-neighbor sparsification.

The similarity graph (MSG) connects microclusters with positive
co-association; zero-weight pairs are not links. Sparsification keeps a
link iff it ranks within either endpoint's top-K incident weights, which
is symmetric by construction and cannot isolate a node that had any link:
every node's strongest link satisfies its own threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .ensemble import CoAssocMatrix, MicroclusterSet
from .errors import ValidationError

MSG = "msg"
KENG = "keng"


@dataclass(frozen=True)
class SparseSimGraph:
    """Undirected weighted graph over microclusters.

    Each link is stored once with ``head < tail`` and weight in (0, 1];
    ``csr`` exposes the symmetric adjacency. ``node_sizes`` carries the
    object count of each microcluster node.
    """

    n_nodes: int
    head: np.ndarray
    tail: np.ndarray
    weights: np.ndarray
    node_sizes: np.ndarray
    kind: str

    @property
    def n_links(self) -> int:
        return self.weights.shape[0]

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """Symmetric adjacency in CSR form."""
        rows = np.concatenate([self.head, self.tail])
        cols = np.concatenate([self.tail, self.head])
        vals = np.concatenate([self.weights, self.weights])
        return sp.csr_matrix(
            (vals, (rows, cols)), shape=(self.n_nodes, self.n_nodes)
        )

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        np.add.at(deg, self.head, 1)
        np.add.at(deg, self.tail, 1)
        return deg


@dataclass(frozen=True)
class EliteThresholds:
    """Per-node weight cut for keeping a link.

    ``values[i]`` is the K-th largest weight incident to node ``i``, counting
    tied weights multiply; nodes with fewer than K links fall back to their
    minimum incident weight so none of their links is cut. Isolated nodes
    have no threshold (NaN) and are flagged in ``isolated``.
    """

    k_elite: int
    values: np.ndarray
    isolated: np.ndarray = field(repr=False)


def build_msg(mca: CoAssocMatrix, mcs: MicroclusterSet) -> SparseSimGraph:
    """Build the similarity graph from a microcluster co-association matrix.

    A link (i, j) exists iff the co-association is positive and i != j; its
    weight is exactly the co-association value.
    """
    if mca.granularity != "microcluster":
        raise ValidationError("similarity graph requires a microcluster-level matrix")
    n = mca.n_items
    if n != mcs.n_microclusters:
        raise ValidationError("co-association matrix and microcluster set disagree")
    head, tail = np.nonzero(np.triu(mca.counts, k=1))
    weights = mca.counts[head, tail] / mca.n_clusterings
    head = head.astype(np.int32)
    tail = tail.astype(np.int32)
    for arr in (head, tail, weights):
        arr.setflags(write=False)
    return SparseSimGraph(
        n_nodes=n,
        head=head,
        tail=tail,
        weights=weights,
        node_sizes=mcs.sizes,
        kind=MSG,
    )


def elite_thresholds(graph: SparseSimGraph, k_elite: int) -> EliteThresholds:
    """K-th largest incident link weight per node (ties counted multiply)."""
    if k_elite < 1:
        raise ValidationError(f"k_elite must be >= 1, got {k_elite}")
    adj = graph.csr
    indptr, data = adj.indptr, adj.data
    values = np.full(graph.n_nodes, np.nan)
    for i in range(graph.n_nodes):
        row = data[indptr[i] : indptr[i + 1]]
        d = row.shape[0]
        if d == 0:
            continue
        if d <= k_elite:
            values[i] = row.min()
        else:
            values[i] = np.partition(row, d - k_elite)[d - k_elite]
    isolated = np.isnan(values)
    values.setflags(write=False)
    isolated.setflags(write=False)
    return EliteThresholds(k_elite=k_elite, values=values, isolated=isolated)


def build_keng(graph: SparseSimGraph, k_elite: int) -> SparseSimGraph:
    """Sparsify to the K-elite-neighbor graph.

    A link survives iff its weight reaches the threshold of at least one
    endpoint; surviving links keep their original weight. With k_elite >=
    n_nodes - 1 every link survives.
    """
    thres = elite_thresholds(graph, k_elite).values
    keep = (graph.weights >= thres[graph.head]) | (graph.weights >= thres[graph.tail])
    return SparseSimGraph(
        n_nodes=graph.n_nodes,
        head=graph.head[keep],
        tail=graph.tail[keep],
        weights=graph.weights[keep],
        node_sizes=graph.node_sizes,
        kind=KENG,
    )


def ratio_pl(msg: SparseSimGraph, keng: SparseSimGraph) -> float:
    """Fraction of similarity-graph links preserved by sparsification."""
    if msg.n_nodes != keng.n_nodes:
        raise ValidationError("graphs must share the same node set")
    if msg.n_links == 0:
        raise ValidationError("undefined for a similarity graph with no links")
    return keng.n_links / msg.n_links


def global_threshold(graph: SparseSimGraph, value: float) -> SparseSimGraph:
    """Keep only links with weight >= a single global cut.

    Comparator for experiments only; unlike the elite-neighbor rule it can
    isolate nodes and is not part of the consensus pipeline.
    """
    keep = graph.weights >= value
    return SparseSimGraph(
        n_nodes=graph.n_nodes,
        head=graph.head[keep],
        tail=graph.tail[keep],
        weights=graph.weights[keep],
        node_sizes=graph.node_sizes,
        kind=graph.kind,
    )
