"""File formats: ensemble CSV, label files, feature data, graph dumps and
the binary trajectory-similarity cache."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .ensemble import Ensemble
from .errors import ValidationError
from .evaluation import LinkAudit
from .generators import ClusteringPool, FeatureDataset
from .graph import KENG, MSG, SparseSimGraph
from .trajectory import PtsMatrix


def _sniff_delimiter(line: str) -> str:
    return "\t" if line.count("\t") >= line.count(",") and "\t" in line else ","


def _is_int(token: str) -> bool:
    token = token.strip()
    if not token:
        return False
    try:
        int(token)
        return True
    except ValueError:
        return False


def read_ensemble_csv(path) -> Ensemble:
    """Read an N x M integer label matrix; one row per object.

    Comma or tab delimited (auto-detected), optional header row. Missing or
    non-integer cells are rejected.
    """
    path = Path(path)
    with path.open("r", newline="") as fh:
        first = fh.readline()
        if not first.strip():
            raise ValidationError(f"{path}: empty ensemble file")
        delim = _sniff_delimiter(first)
        fh.seek(0)
        reader = csv.reader(fh, delimiter=delim)
        rows = [row for row in reader if row and any(t.strip() for t in row)]
    if not rows:
        raise ValidationError(f"{path}: empty ensemble file")
    start = 0
    if not all(_is_int(t) for t in rows[0]):
        start = 1  # header row
        if len(rows) == 1:
            raise ValidationError(f"{path}: header but no data rows")
    width = len(rows[start])
    data = np.empty((len(rows) - start, width), dtype=np.int64)
    for r, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise ValidationError(f"{path}:{r}: expected {width} columns, got {len(row)}")
        for c, token in enumerate(row):
            if not _is_int(token):
                raise ValidationError(
                    f"{path}:{r}: missing or non-integer label {token!r}"
                )
            data[r - start - 1, c] = int(token)
    if (data < 0).any():
        raise ValidationError(f"{path}: negative cluster labels are not allowed")
    return Ensemble.from_labels(data)


def write_ensemble_csv(path, labels: np.ndarray, header: bool = False) -> None:
    path = Path(path)
    labels = np.asarray(labels)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"clustering_{m}" for m in range(labels.shape[1])])
        writer.writerows(labels.tolist())


def read_labels_csv(path) -> np.ndarray:
    """One integer label per line (a single-column label file)."""
    path = Path(path)
    values = []
    with path.open("r") as fh:
        for lineno, line in enumerate(fh, start=1):
            token = line.strip()
            if not token:
                continue
            if not _is_int(token):
                raise ValidationError(f"{path}:{lineno}: non-integer label {token!r}")
            values.append(int(token))
    if not values:
        raise ValidationError(f"{path}: no labels found")
    return np.asarray(values, dtype=np.int64)


def write_labels_csv(path, labels: np.ndarray) -> None:
    path = Path(path)
    with path.open("w") as fh:
        for value in np.asarray(labels).ravel():
            fh.write(f"{int(value)}\n")


def read_dataset_csv(path, truth_column: bool = False) -> FeatureDataset:
    """Numeric feature CSV; with ``truth_column`` the last column holds
    integer ground-truth labels."""
    path = Path(path)
    with path.open("r", newline="") as fh:
        first = fh.readline()
        if not first.strip():
            raise ValidationError(f"{path}: empty dataset file")
        delim = _sniff_delimiter(first)
        fh.seek(0)
        rows = [row for row in csv.reader(fh, delimiter=delim) if row]

    def _numeric(token: str) -> bool:
        try:
            float(token)
            return True
        except ValueError:
            return False

    start = 0 if all(_numeric(t) for t in rows[0]) else 1
    if start == 1 and len(rows) == 1:
        raise ValidationError(f"{path}: header but no data rows")
    try:
        data = np.asarray([[float(t) for t in row] for row in rows[start:]])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric cell ({exc})") from exc
    if data.ndim != 2:
        raise ValidationError(f"{path}: ragged rows")
    if truth_column:
        if data.shape[1] < 2:
            raise ValidationError(f"{path}: no feature columns besides the labels")
        truth = data[:, -1]
        if not np.array_equal(truth, np.rint(truth)):
            raise ValidationError(f"{path}: ground-truth column must be integer")
        return FeatureDataset(points=data[:, :-1], truth=truth.astype(np.int64))
    return FeatureDataset(points=data)


def write_graph_dump(path, graph: SparseSimGraph) -> None:
    """Text edge list: header line "n_nodes <n> kind <MSG|KENG>", then one
    "i j w" line per link."""
    kind = {MSG: "MSG", KENG: "KENG"}.get(graph.kind, graph.kind.upper())
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"n_nodes {graph.n_nodes} kind {kind}\n")
        for i, j, w in zip(graph.head, graph.tail, graph.weights):
            fh.write(f"{i} {j} {w:.17g}\n")


def read_graph_dump(path) -> tuple[int, str, np.ndarray, np.ndarray, np.ndarray]:
    path = Path(path)
    with path.open("r") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "n_nodes" or header[2] != "kind":
            raise ValidationError(f"{path}: malformed graph dump header")
        n_nodes = int(header[1])
        kind = header[3]
        head, tail, weights = [], [], []
        for line in fh:
            if not line.strip():
                continue
            i, j, w = line.split()
            head.append(int(i))
            tail.append(int(j))
            weights.append(float(w))
    return (
        n_nodes,
        kind,
        np.asarray(head, dtype=np.int32),
        np.asarray(tail, dtype=np.int32),
        np.asarray(weights),
    )


def save_pts(path, pts: PtsMatrix, k_elite: int) -> None:
    """Binary dump of the similarity matrix: lower triangle plus the
    (n, steps, k_elite) header fields."""
    n = pts.n_nodes
    tril = pts.values[np.tril_indices(n)]
    np.savez_compressed(
        Path(path), n=n, steps=pts.steps, k_elite=k_elite, tril=tril
    )


def load_pts(path) -> tuple[PtsMatrix, int]:
    with np.load(Path(path)) as data:
        n = int(data["n"])
        steps = int(data["steps"])
        k_elite = int(data["k_elite"])
        tril = data["tril"]
    values = np.zeros((n, n))
    values[np.tril_indices(n)] = tril
    values = values + np.tril(values, -1).T
    values.setflags(write=False)
    return PtsMatrix(values=values, steps=steps), k_elite


def ensemble_digest(ensemble: Ensemble) -> str:
    """Content hash of the canonicalized label matrix."""
    h = hashlib.sha256()
    h.update(np.asarray(ensemble.labels.shape, dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(ensemble.labels, dtype=np.int64).tobytes())
    return h.hexdigest()


def pts_cache_path(cache_dir, digest: str, k_elite: int, n_steps: int) -> Path:
    return Path(cache_dir) / f"pts-{digest[:16]}-K{k_elite}-T{n_steps}.npz"


def write_pool_metadata(path, pool: ClusteringPool, extra: dict | None = None) -> None:
    meta = {
        "seed": pool.seed,
        "pool_size": pool.size,
        "members": [
            {"algorithm": m.algorithm, "n_clusters": m.n_clusters, "seed": m.seed}
            for m in pool.members
        ],
    }
    if extra:
        meta.update(extra)
    Path(path).write_text(json.dumps(meta, indent=2) + "\n")


def write_dendrogram_csv(path, dendrogram) -> None:
    """Merge list: one "left,right,similarity" row per merge."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["left", "right", "similarity"])
        for left, right, sim in zip(
            dendrogram.left, dendrogram.right, dendrogram.similarity
        ):
            writer.writerow([int(left), int(right), f"{sim:.17g}"])


def write_audit_csv(fh_or_path, audit: LinkAudit) -> None:
    """Per-bucket reliability table: weight, link_fraction, correct_fraction."""

    def _write(fh):
        writer = csv.writer(fh)
        writer.writerow(["weight", "link_fraction", "correct_fraction"])
        for w, lf, cf in zip(audit.weights, audit.link_fraction, audit.correct_fraction):
            writer.writerow(
                [f"{w:.6g}", f"{lf:.6f}", "" if np.isnan(cf) else f"{cf:.6f}"]
            )

    if hasattr(fh_or_path, "write"):
        _write(fh_or_path)
    else:
        with Path(fh_or_path).open("w", newline="") as fh:
            _write(fh)
