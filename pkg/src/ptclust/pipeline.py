"""End-to-end consensus pipeline with parameter resolution and caching.

Ties the stages together: microcluster compression, co-association,
similarity graph, elite-neighbor sparsification, random-walk similarity,
then one of the consensus functions. The walk parameters K (elite-neighbor
count) and T (walk length) both default to floor(sqrt(n_microclusters)/2).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Optional, Union

from .consensus import ConsensusResult, pta, ptgp, sim_mc
from .ensemble import Ensemble, build_microclusters, compute_mca
from .errors import ValidationError
from .evaluation import eac_baseline
from .graph import build_keng, build_msg, ratio_pl
from .trajectory import build_transition, compute_pts, default_walk_param
from . import io as pio

logger = logging.getLogger(__name__)

METHODS = ("pta-al", "pta-cl", "pta-sl", "ptgp", "eac-al", "eac-cl", "eac-sl")

ParamSpec = Union[int, str]  # an int, "auto", or "all" (k_elite only)


@dataclass
class PipelineSummary:
    """Run statistics printed by the command-line front end."""

    method: str
    k: int
    n_objects: int
    n_clusterings: int
    n_microclusters: int
    msg_links: Optional[int] = None
    keng_links: Optional[int] = None
    ratio_pl: Optional[float] = None
    k_elite: Optional[int] = None
    n_steps: Optional[int] = None
    seconds: float = 0.0
    cache: Optional[str] = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def resolve_param(value: ParamSpec, n_microclusters: int, allow_all: bool = False) -> int:
    """Resolve "auto"/"all"/int parameter specs against the graph size."""
    if isinstance(value, str):
        token = value.strip().lower()
        if token == "auto":
            return default_walk_param(n_microclusters)
        if token == "all" and allow_all:
            return max(1, n_microclusters - 1)
        try:
            value = int(token)
        except ValueError:
            raise ValidationError(f"bad parameter value {value!r}") from None
    if value < 1:
        raise ValidationError(f"parameter must be >= 1, got {value}")
    return int(value)


def run_consensus(
    ensemble: Ensemble,
    method: str,
    k: int,
    k_elite: ParamSpec = "auto",
    n_steps: ParamSpec = "auto",
    seed: int = 0,
    cl_semantics: str = "sum",
    cache_dir=None,
    gram_strategy: str = "auto",
) -> tuple[ConsensusResult, PipelineSummary]:
    """Run the full pipeline on an ensemble and return labels plus stats."""
    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}, got {method!r}")
    start = time.perf_counter()
    mcs = build_microclusters(ensemble)
    summary = PipelineSummary(
        method=method,
        k=k,
        n_objects=ensemble.n_objects,
        n_clusterings=ensemble.n_clusterings,
        n_microclusters=mcs.n_microclusters,
    )

    if method.startswith("eac-"):
        result = eac_baseline(
            ensemble, k, linkage=method.split("-")[1], cl_semantics=cl_semantics
        )
        summary.seconds = time.perf_counter() - start
        return result, summary

    mca = compute_mca(ensemble, mcs)
    msg = build_msg(mca, mcs)
    resolved_k = resolve_param(k_elite, mcs.n_microclusters, allow_all=True)
    resolved_t = resolve_param(n_steps, mcs.n_microclusters)
    keng = build_keng(msg, resolved_k)
    summary.msg_links = msg.n_links
    summary.keng_links = keng.n_links
    summary.ratio_pl = ratio_pl(msg, keng) if msg.n_links else None
    summary.k_elite = resolved_k
    summary.n_steps = resolved_t

    pts = None
    cache_file = None
    if cache_dir is not None:
        digest = pio.ensemble_digest(ensemble)
        cache_file = pio.pts_cache_path(cache_dir, digest, resolved_k, resolved_t)
        if cache_file.exists():
            pts, _ = pio.load_pts(cache_file)
            summary.cache = "hit"
            logger.info("loaded trajectory similarity from %s", cache_file)
    if pts is None:
        transition = build_transition(keng)
        pts = compute_pts(transition, resolved_t, strategy=gram_strategy)
        if cache_file is not None:
            cache_file.parent.mkdir(parents=True, exist_ok=True)
            pio.save_pts(cache_file, pts, resolved_k)
            summary.cache = "miss"

    if method == "ptgp":
        bipartite = sim_mc(pts, mcs, ensemble)
        result = ptgp(bipartite, mcs, k, seed=seed)
    else:
        result = pta(
            pts, mcs, k, linkage=method.split("-")[1], cl_semantics=cl_semantics
        )
    summary.seconds = time.perf_counter() - start
    return result, summary
