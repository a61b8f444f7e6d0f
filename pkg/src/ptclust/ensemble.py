"""Clustering-ensemble data model and co-association matrices.

An ensemble is an N x M integer label matrix: M base clusterings of the
same N objects. Objects whose label rows are identical across all M base
clusterings are indistinguishable to any consensus procedure, so they are
compressed into microclusters, and all downstream similarity work happens
at microcluster granularity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# Dense object-level co-association matrices are quadratic in N and only
# needed for diagnostics; refuse above this many objects unless overridden.
DEFAULT_CA_CAP = 5000


def canonical_labels(values) -> tuple[np.ndarray, np.ndarray]:
    """Remap an integer label vector to dense 0-based codes.

    Codes are assigned in order of first appearance, so the result does not
    depend on the magnitudes of the original labels. Returns ``(codes,
    originals)`` where ``originals[c]`` is the input label behind code ``c``.
    """
    values = np.asarray(values)
    uniq, first, inv = np.unique(values, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty(len(order), dtype=np.int32)
    rank[order] = np.arange(len(order), dtype=np.int32)
    return rank[inv.ravel()], uniq[order]


@dataclass(frozen=True)
class Ensemble:
    """M base clusterings of N objects, with canonicalized labels.

    ``labels[i, m]`` is the cluster index of object ``i`` in base clustering
    ``m``; within each column indices are dense in ``0..n_m-1``. Immutable
    after construction.
    """

    labels: np.ndarray
    clusters_per_base: tuple[int, ...]
    original_values: tuple[np.ndarray, ...] = field(repr=False, default=())

    @property
    def n_objects(self) -> int:
        return self.labels.shape[0]

    @property
    def n_clusterings(self) -> int:
        return self.labels.shape[1]

    @property
    def n_clusters_total(self) -> int:
        """Number of clusters summed over all base clusterings."""
        return int(sum(self.clusters_per_base))

    @classmethod
    def from_labels(cls, raw) -> "Ensemble":
        """Build an ensemble from a raw N x M integer label matrix.

        Labels are canonicalized per column; the original label values are
        kept for reporting. Rejects empty, non-integral or non-finite input.
        """
        raw = np.asarray(raw)
        if raw.ndim == 1:
            raw = raw[:, None]
        if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
            raise ValidationError(
                f"ensemble must be a non-empty N x M matrix, got shape {raw.shape}"
            )
        if not np.issubdtype(raw.dtype, np.integer):
            if not np.issubdtype(raw.dtype, np.floating) or not np.all(
                np.isfinite(raw)
            ):
                raise ValidationError("ensemble labels must be finite integers")
            rounded = np.rint(raw)
            if not np.array_equal(rounded, raw):
                raise ValidationError("ensemble labels must be integers")
            raw = rounded.astype(np.int64)
        labels = np.empty(raw.shape, dtype=np.int32)
        originals = []
        for m in range(raw.shape[1]):
            labels[:, m], vals = canonical_labels(raw[:, m])
            originals.append(vals)
        labels.setflags(write=False)
        return cls(
            labels=labels,
            clusters_per_base=tuple(len(v) for v in originals),
            original_values=tuple(originals),
        )


@dataclass(frozen=True)
class MicroclusterSet:
    """Partition of objects into groups with identical ensemble label rows.

    ``assignment`` maps each object to its microcluster, ``sizes`` counts
    objects per microcluster, and ``signatures[i, m]`` is the cluster of
    microcluster ``i`` in base clustering ``m``. Signature rows are pairwise
    distinct, and microcluster indices follow first appearance in the input.
    """

    assignment: np.ndarray
    sizes: np.ndarray
    signatures: np.ndarray

    @property
    def n_microclusters(self) -> int:
        return self.signatures.shape[0]

    @property
    def n_objects(self) -> int:
        return self.assignment.shape[0]

    def members(self, i: int) -> np.ndarray:
        """Object indices belonging to microcluster ``i``."""
        return np.flatnonzero(self.assignment == i)


@dataclass(frozen=True)
class CoAssocMatrix:
    """Co-occurrence frequencies across the ensemble.

    Stored as integer co-occurrence counts plus the ensemble size so that
    equality checks stay exact; ``values`` divides on read. ``granularity``
    is ``"object"`` or ``"microcluster"``.
    """

    counts: np.ndarray
    n_clusterings: int
    granularity: str

    @property
    def values(self) -> np.ndarray:
        return self.counts / self.n_clusterings

    @property
    def n_items(self) -> int:
        return self.counts.shape[0]


def build_microclusters(ensemble: Ensemble) -> MicroclusterSet:
    """Group objects whose label rows agree in every base clustering.

    Two objects share a microcluster iff they are co-clustered in all M base
    clusterings. Discovery sorts the signature rows (O(N M log N)) instead of
    comparing all object pairs; indices are assigned by first appearance.
    """
    labels = ensemble.labels
    uniq, first, inv = np.unique(
        labels, axis=0, return_index=True, return_inverse=True
    )
    order = np.argsort(first, kind="stable")
    rank = np.empty(len(order), dtype=np.int32)
    rank[order] = np.arange(len(order), dtype=np.int32)
    assignment = rank[inv.ravel()]
    signatures = uniq[order]
    sizes = np.bincount(assignment, minlength=signatures.shape[0])
    for arr in (assignment, sizes, signatures):
        arr.setflags(write=False)
    return MicroclusterSet(assignment=assignment, sizes=sizes, signatures=signatures)


def compute_mca(ensemble: Ensemble, mcs: MicroclusterSet) -> CoAssocMatrix:
    """Microcluster-level co-association: fraction of base clusterings in
    which two microclusters fall in the same cluster.

    The diagonal equals 1 (every microcluster co-occurs with itself).
    """
    sig = mcs.signatures
    n = sig.shape[0]
    counts = np.zeros((n, n), dtype=np.int16)
    for m in range(sig.shape[1]):
        col = sig[:, m]
        counts += col[:, None] == col[None, :]
    counts.setflags(write=False)
    return CoAssocMatrix(
        counts=counts,
        n_clusterings=ensemble.n_clusterings,
        granularity="microcluster",
    )


def compute_ca(ensemble: Ensemble, max_objects: int = DEFAULT_CA_CAP) -> CoAssocMatrix:
    """Object-level co-association matrix.

    Dense N x N; intended for diagnostics and for checking that object-level
    entries agree with the microcluster-level matrix through containment.
    Refuses to allocate beyond ``max_objects`` objects.
    """
    n = ensemble.n_objects
    if n > max_objects:
        raise ValidationError(
            f"object-level co-association refused for N={n} > cap {max_objects}"
        )
    labels = ensemble.labels
    counts = np.zeros((n, n), dtype=np.int16)
    for m in range(ensemble.n_clusterings):
        col = labels[:, m]
        counts += col[:, None] == col[None, :]
    counts.setflags(write=False)
    return CoAssocMatrix(
        counts=counts, n_clusterings=ensemble.n_clusterings, granularity="object"
    )
