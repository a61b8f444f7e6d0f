"""Consensus clustering from ensembles of base clusterings.

The pipeline compresses the ensemble into microclusters, builds a
co-association similarity graph, keeps only each node's strongest links
(elite-neighbor sparsification), derives a dense similarity from the
trajectories of size-aware random walkers, and finally clusters with either
agglomerative merging (PTA) or bipartite graph partitioning (PTGP).
"""

from .consensus import (
    BipartiteGraph,
    ConsensusResult,
    Dendrogram,
    build_dendrogram,
    pta,
    ptgp,
    sim_mc,
)
from .ensemble import (
    CoAssocMatrix,
    Ensemble,
    MicroclusterSet,
    build_microclusters,
    canonical_labels,
    compute_ca,
    compute_mca,
)
from .errors import NumericError, PtclustError, ValidationError
from .evaluation import LinkAudit, eac_baseline, link_audit, nmi
from .generators import (
    ClusteringPool,
    FeatureDataset,
    build_pool,
    draw_ensemble,
    kmeans,
    pool_cluster_bound,
    rpcl,
)
from .graph import (
    EliteThresholds,
    SparseSimGraph,
    build_keng,
    build_msg,
    elite_thresholds,
    global_threshold,
    ratio_pl,
)
from .pipeline import PipelineSummary, resolve_param, run_consensus
from .trajectory import (
    PtsMatrix,
    TrajectoryGram,
    TransitionMatrix,
    accumulate_gram,
    build_transition,
    compute_pts,
    default_walk_param,
    walk_distributions,
)

__version__ = "0.1.0"

__all__ = [
    "BipartiteGraph",
    "ClusteringPool",
    "CoAssocMatrix",
    "ConsensusResult",
    "Dendrogram",
    "EliteThresholds",
    "Ensemble",
    "FeatureDataset",
    "LinkAudit",
    "MicroclusterSet",
    "NumericError",
    "PipelineSummary",
    "PtclustError",
    "PtsMatrix",
    "SparseSimGraph",
    "TrajectoryGram",
    "TransitionMatrix",
    "ValidationError",
    "accumulate_gram",
    "build_dendrogram",
    "build_keng",
    "build_microclusters",
    "build_msg",
    "build_pool",
    "build_transition",
    "canonical_labels",
    "compute_ca",
    "compute_mca",
    "compute_pts",
    "default_walk_param",
    "draw_ensemble",
    "eac_baseline",
    "elite_thresholds",
    "global_threshold",
    "kmeans",
    "link_audit",
    "nmi",
    "pool_cluster_bound",
    "pta",
    "ptgp",
    "ratio_pl",
    "resolve_param",
    "run_consensus",
    "rpcl",
    "sim_mc",
    "walk_distributions",
]
