"""Clustering evaluation, the plain co-association baseline, and the
link-reliability audit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consensus import ConsensusResult, build_dendrogram
from .ensemble import Ensemble, MicroclusterSet, build_microclusters, compute_mca
from .errors import ValidationError
from .graph import SparseSimGraph


def nmi(a, b) -> float:
    """Normalized mutual information between two labelings.

    Mutual information divided by the geometric mean of the two label
    entropies; symmetric, invariant under relabeling, 1.0 for identical
    partitions and 0.0 when both entropies vanish (two single-cluster
    partitions, by the 0/0 -> 0 convention).
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape[0] != b.shape[0]:
        raise ValidationError(
            f"labelings differ in length: {a.shape[0]} vs {b.shape[0]}"
        )
    if a.shape[0] == 0:
        raise ValidationError("labelings are empty")
    _, ca = np.unique(a, return_inverse=True)
    _, cb = np.unique(b, return_inverse=True)
    na = int(ca.max()) + 1
    nb = int(cb.max()) + 1
    if na == 1 and nb == 1:
        return 0.0
    if np.array_equal(ca, cb):
        return 1.0  # identical partitions: exact by definition
    n = a.shape[0]
    joint = np.bincount(ca * nb + cb, minlength=na * nb).reshape(na, nb)
    row = joint.sum(axis=1)
    col = joint.sum(axis=0)
    nz = joint > 0
    p = joint[nz] / n
    terms = p * np.log(p * n * n / np.outer(row, col)[nz])
    # summing in sorted order makes the result exactly symmetric in (a, b)
    mi = float(np.sort(terms).sum())
    h_a = float(-np.sum(row / n * np.log(row / n)))
    h_b = float(-np.sum(col / n * np.log(col / n)))
    denom = np.sqrt(h_a * h_b)
    if denom == 0.0:
        return 0.0
    return float(min(max(mi / denom, 0.0), 1.0))


def eac_baseline(
    ensemble: Ensemble,
    k: int,
    linkage: str = "al",
    cl_semantics: str = "sum",
) -> ConsensusResult:
    """Agglomerative consensus directly on the co-association matrix.

    Identical to the trajectory-based agglomeration except that the raw
    microcluster co-association values stand in for the trajectory
    similarity; kept as the classical evidence-accumulation baseline.
    """
    mcs = build_microclusters(ensemble)
    n = mcs.n_microclusters
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in 1..{n}, got {k}")
    mca = compute_mca(ensemble, mcs)
    dendrogram = build_dendrogram(
        mca.values, linkage=linkage, cl_semantics=cl_semantics
    )
    micro_labels = dendrogram.cut(k)
    object_labels = micro_labels[mcs.assignment]
    object_labels.setflags(write=False)
    return ConsensusResult(
        object_labels=object_labels,
        microcluster_labels=micro_labels,
        k=k,
        method=f"eac-{linkage}",
        dendrogram=dendrogram,
    )


@dataclass(frozen=True)
class LinkAudit:
    """Reliability of graph links grouped by weight.

    Buckets are the possible weights 1/M .. 1. ``link_fraction`` is each
    bucket's share of all links, ``correct_fraction`` the share of the
    bucket's links joining microclusters of one ground-truth class; both
    count a microcluster link once per hidden object pair it represents.
    Empty buckets have fraction 0 and NaN correctness.
    """

    weights: np.ndarray
    link_fraction: np.ndarray
    correct_fraction: np.ndarray
    n_links_expanded: int


def link_audit(
    msg: SparseSimGraph,
    mcs: MicroclusterSet,
    truth,
    n_clusterings: int | None = None,
) -> LinkAudit:
    """Weight histogram plus per-weight correct-decision rates.

    Every link between two microclusters stands for size_i * size_j hidden
    object pairs, all carrying the same weight; a pair decides correctly iff
    its two objects share a ground-truth class. Counting through the
    per-microcluster class histograms reproduces the object-level audit
    exactly. ``n_clusterings`` fixes the weight grid 1/M .. 1; when omitted
    it is inferred from the link weights.
    """
    if truth is None:
        raise ValidationError("link audit requires ground-truth labels")
    truth = np.asarray(truth).ravel()
    if truth.shape[0] != mcs.n_objects:
        raise ValidationError("ground truth length does not match the ensemble")
    if msg.n_links == 0:
        raise ValidationError("graph has no links to audit")

    n_micro = mcs.n_microclusters
    classes, class_codes = np.unique(truth, return_inverse=True)
    hist = np.zeros((n_micro, classes.shape[0]))
    np.add.at(hist, (mcs.assignment, class_codes), 1.0)

    m = n_clusterings if n_clusterings is not None else _infer_denominator(msg.weights)

    sizes = msg.node_sizes
    expanded = sizes[msg.head].astype(np.float64) * sizes[msg.tail]
    correct_pairs = np.einsum("ij,ij->i", hist[msg.head], hist[msg.tail])

    bucket = np.rint(msg.weights * m).astype(np.int64)
    if bucket.min() < 1 or bucket.max() > m:
        raise ValidationError("link weights fall outside the 1/M .. 1 grid")
    link_total = np.zeros(m)
    correct_total = np.zeros(m)
    np.add.at(link_total, bucket - 1, expanded)
    np.add.at(correct_total, bucket - 1, correct_pairs)

    total = expanded.sum()
    with np.errstate(invalid="ignore", divide="ignore"):
        correct_fraction = correct_total / link_total
    audit = LinkAudit(
        weights=np.arange(1, m + 1) / m,
        link_fraction=link_total / total,
        correct_fraction=correct_fraction,
        n_links_expanded=int(total),
    )
    return audit


def _infer_denominator(weights: np.ndarray, max_denominator: int = 10000) -> int:
    """Smallest M such that every link weight is a multiple of 1/M."""
    from fractions import Fraction
    from math import lcm

    denom = 1
    for w in np.unique(weights):
        denom = lcm(denom, Fraction(float(w)).limit_denominator(max_denominator).denominator)
        if denom > max_denominator:
            raise ValidationError("link weights are not on a small rational grid")
    return denom
