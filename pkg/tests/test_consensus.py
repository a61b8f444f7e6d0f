import numpy as np
import pytest

from ptclust import (
    PtsMatrix,
    ValidationError,
    build_dendrogram,
    build_keng,
    build_microclusters,
    build_msg,
    build_transition,
    compute_mca,
    compute_pts,
    nmi,
    pta,
    ptgp,
    sim_mc,
)

from helpers import identical_copies_ensemble, random_ensemble, random_keng
from oracles import bipartite_ncut, naive_agglomerate, region_similarity


def random_similarity(rng, n):
    sim = rng.random((n, n))
    sim = (sim + sim.T) / 2
    np.fill_diagonal(sim, 1.0)
    return sim


def pts_of(values):
    values = np.asarray(values, dtype=np.float64)
    return PtsMatrix(values=values, steps=1)


def full_pipeline_pts(ensemble, k_elite, n_steps):
    mcs = build_microclusters(ensemble)
    msg = build_msg(compute_mca(ensemble, mcs), mcs)
    keng = build_keng(msg, k_elite)
    return compute_pts(build_transition(keng), n_steps), mcs


class TestDendrogram:
    def test_merge_count_and_cut_sizes(self, rng):
        sim = random_similarity(rng, 12)
        dendro = build_dendrogram(sim, "al")
        assert dendro.n_leaves == 12
        assert len(dendro.similarity) == 11
        for k in range(1, 13):
            labels = dendro.cut(k)
            assert labels.max() + 1 == k
            assert np.array_equal(np.unique(labels), np.arange(k))

    def test_all_zero_similarity_merges_lowest_pairs_first(self):
        sim = np.eye(6)
        dendro = build_dendrogram(sim, "al")
        # first merge is the tie broken toward the smallest pair (0, 1)
        assert (dendro.left[0], dendro.right[0]) == (0, 1)
        assert dendro.similarity[0] == 0.0
        labels = dendro.cut(5)
        assert labels.tolist() == [0, 0, 1, 2, 3, 4]

    @pytest.mark.parametrize("linkage", ["al", "cl", "sl"])
    def test_matches_from_scratch_oracle(self, rng, linkage):
        for _ in range(6):
            n = int(rng.integers(5, 24))
            sim = random_similarity(rng, n)
            dendro = build_dendrogram(sim, linkage)
            left, right, sims = naive_agglomerate(sim, linkage)
            assert dendro.left.tolist() == left.tolist()
            assert dendro.right.tolist() == right.tolist()
            assert np.allclose(dendro.similarity, sims, rtol=0, atol=1e-11)

    @pytest.mark.parametrize("linkage", ["al", "cl", "sl"])
    def test_heavily_tied_similarities_match_oracle(self, rng, linkage):
        # entries on a dyadic grid keep every cross-region sum exact in
        # binary floating point, so ties are exact and the documented
        # tie-break is exercised for real
        for n in (8, 15, 24):
            sim = rng.integers(0, 5, size=(n, n)) / 16.0
            sim = np.maximum(sim, sim.T)
            np.fill_diagonal(sim, 1.0)
            dendro = build_dendrogram(sim, linkage)
            left, right, sims = naive_agglomerate(sim, linkage)
            assert dendro.left.tolist() == left.tolist()
            assert dendro.right.tolist() == right.tolist()

    def test_cl_min_semantics_matches_oracle(self, rng):
        sim = random_similarity(rng, 15)
        dendro = build_dendrogram(sim, "cl", cl_semantics="min")
        left, right, sims = naive_agglomerate(sim, "cl", cl_semantics="min")
        assert dendro.left.tolist() == left.tolist()
        assert dendro.right.tolist() == right.tolist()

    def test_cl_semantics_can_differ(self, rng):
        # sum-combining and min-combining disagree on some instances
        differs = False
        for seed in range(10):
            sim = random_similarity(np.random.default_rng(seed), 12)
            a = build_dendrogram(sim, "cl", cl_semantics="sum").left
            b = build_dendrogram(sim, "cl", cl_semantics="min").left
            if a.tolist() != b.tolist():
                differs = True
                break
        assert differs

    def test_sl_merge_similarities_non_increasing(self, rng):
        for _ in range(5):
            sim = random_similarity(rng, 20)
            dendro = build_dendrogram(sim, "sl")
            assert np.all(np.diff(dendro.similarity) <= 1e-12)

    def test_rejects_bad_inputs(self, rng):
        with pytest.raises(ValidationError):
            build_dendrogram(random_similarity(rng, 5), "ward")
        with pytest.raises(ValidationError):
            build_dendrogram(np.zeros((2, 3)), "al")
        with pytest.raises(ValidationError):
            build_dendrogram(random_similarity(rng, 4), "cl", cl_semantics="max")


class TestPta:
    def test_perfect_consensus_fixed_point(self, rng):
        base = rng.integers(0, 3, size=30)
        ens = identical_copies_ensemble(base, m=10)
        pts, mcs = full_pipeline_pts(ens, k_elite=1, n_steps=2)
        for linkage in ("al", "cl", "sl"):
            result = pta(pts, mcs, 3, linkage=linkage)
            assert nmi(result.object_labels, base) == 1.0

    def test_permuting_microclusters_permutes_partition(self, rng):
        n = 18
        sim = random_similarity(rng, n)
        mcs = _singleton_microclusters(n)
        base = pta(pts_of(sim), mcs, 4)
        perm = rng.permutation(n)
        permuted = pta(pts_of(sim[np.ix_(perm, perm)]), mcs, 4)
        # same partition after mapping back through the permutation
        a = base.microcluster_labels[perm]
        b = permuted.microcluster_labels
        assert nmi(a, b) == 1.0

    def test_k_bounds(self, rng):
        sim = random_similarity(rng, 6)
        mcs = _singleton_microclusters(6)
        with pytest.raises(ValidationError):
            pta(pts_of(sim), mcs, 7)
        with pytest.raises(ValidationError):
            pta(pts_of(sim), mcs, 0)
        assert pta(pts_of(sim), mcs, 6).microcluster_labels.tolist() == list(range(6))
        assert pta(pts_of(sim), mcs, 1).microcluster_labels.tolist() == [0] * 6

    def test_objects_inherit_microcluster_labels(self, rng):
        ens = random_ensemble(rng, 40, 4)
        pts, mcs = full_pipeline_pts(ens, k_elite=2, n_steps=3)
        result = pta(pts, mcs, 3)
        assert np.array_equal(
            result.object_labels, result.microcluster_labels[mcs.assignment]
        )


def _singleton_microclusters(n):
    from ptclust import MicroclusterSet

    return MicroclusterSet(
        assignment=np.arange(n, dtype=np.int32),
        sizes=np.ones(n, dtype=np.int64),
        signatures=np.arange(n, dtype=np.int32)[:, None],
    )


class TestSimMc:
    def test_fixture_matches_direct_averaging(self, table_ensemble):
        pts, mcs = full_pipeline_pts(table_ensemble, k_elite=1, n_steps=1)
        bg = sim_mc(pts, mcs, table_ensemble)
        assert bg.weights.shape == (4, 5)  # 2 + 3 ensemble clusters
        for col in range(bg.weights.shape[1]):
            m = bg.column_clustering[col]
            cluster = bg.column_cluster[col]
            members = np.flatnonzero(mcs.signatures[:, m] == cluster)
            for i in range(4):
                expect = pts.values[i, members].sum() / len(members)
                assert bg.weights[i, col] == pytest.approx(expect, abs=1e-15)

    def test_singleton_cluster_copies_similarity(self, rng):
        ens = random_ensemble(rng, 30, 3)
        pts, mcs = full_pipeline_pts(ens, k_elite=2, n_steps=2)
        bg = sim_mc(pts, mcs, ens)
        for col in range(bg.n_clusters_total):
            m = bg.column_clustering[col]
            members = np.flatnonzero(mcs.signatures[:, m] == bg.column_cluster[col])
            if len(members) == 1:
                assert np.array_equal(bg.weights[:, col], pts.values[:, members[0]])

    def test_own_cluster_similarity_is_one_when_pts_is_one(self):
        # two microclusters fused by identical trajectories
        values = np.ones((2, 2))
        bg = sim_mc(
            pts_of(values),
            _fake_two_microclusters(),
            identical_copies_ensemble(np.array([0, 0, 1, 1]), 1),
        )
        assert np.all(bg.weights <= 1.0 + 1e-15)


def _fake_two_microclusters():
    from ptclust import MicroclusterSet

    return MicroclusterSet(
        assignment=np.array([0, 0, 1, 1], dtype=np.int32),
        sizes=np.array([2, 2], dtype=np.int64),
        signatures=np.array([[0], [1]], dtype=np.int32),
    )


class TestPtgp:
    def test_perfect_consensus_fixed_point(self, rng):
        base = rng.integers(0, 3, size=30)
        ens = identical_copies_ensemble(base, m=10)
        pts, mcs = full_pipeline_pts(ens, k_elite=1, n_steps=2)
        bg = sim_mc(pts, mcs, ens)
        result = ptgp(bg, mcs, 3, seed=0)
        assert nmi(result.object_labels, base) == 1.0

    def test_two_disconnected_blocks(self, rng):
        # ensemble whose clusterings all separate objects 0-9 from 10-19
        half = np.repeat([0, 1], 10)
        fine = np.concatenate([np.arange(10) % 3, 3 + np.arange(10) % 3])
        ens = identical_copies_ensemble(half, 2)
        ens = type(ens).from_labels(np.column_stack([half, fine]))
        pts, mcs = full_pipeline_pts(ens, k_elite=2, n_steps=2)
        bg = sim_mc(pts, mcs, ens)
        result = ptgp(bg, mcs, 2, seed=0)
        labels = result.object_labels
        assert len(set(labels[:10])) == 1
        assert len(set(labels[10:])) == 1
        assert labels[0] != labels[-1]

    @pytest.mark.parametrize("seed", [0, 7, 13])
    def test_ncut_beats_random_partitions(self, seed):
        # a clustering ensemble has planted structure by nature; on such an
        # instance (~60 microclusters, 20 ensemble clusters) the spectral
        # partition must beat every random balanced partition on the
        # normalized-cut objective of the full bipartite graph
        from helpers import planted_ensemble

        rng = np.random.default_rng(seed)
        ens, _ = planted_ensemble(rng)
        pts, mcs = full_pipeline_pts(ens, k_elite=3, n_steps=4)
        bg = sim_mc(pts, mcs, ens)
        k = 4
        result = ptgp(bg, mcs, k, seed=0)
        ours = bipartite_ncut(bg.weights, result.microcluster_labels, k)
        n = bg.n_microclusters
        baseline_rng = np.random.default_rng(1000 + seed)
        for _ in range(100):
            labels = baseline_rng.permutation(np.arange(n) % k)
            assert bipartite_ncut(bg.weights, labels, k) >= ours

    def test_k_bounds(self, rng):
        ens = random_ensemble(rng, 30, 3)
        pts, mcs = full_pipeline_pts(ens, k_elite=2, n_steps=2)
        bg = sim_mc(pts, mcs, ens)
        with pytest.raises(ValidationError):
            ptgp(bg, mcs, 1)
        with pytest.raises(ValidationError):
            ptgp(bg, mcs, bg.n_microclusters + 1)

    def test_deterministic_for_fixed_seed(self, rng):
        ens = random_ensemble(rng, 60, 4)
        pts, mcs = full_pipeline_pts(ens, k_elite=2, n_steps=3)
        bg = sim_mc(pts, mcs, ens)
        a = ptgp(bg, mcs, 3, seed=7).object_labels
        b = ptgp(bg, mcs, 3, seed=7).object_labels
        assert np.array_equal(a, b)

    def test_labels_cover_all_microclusters(self, rng):
        ens = random_ensemble(rng, 80, 5)
        pts, mcs = full_pipeline_pts(ens, k_elite=3, n_steps=3)
        bg = sim_mc(pts, mcs, ens)
        result = ptgp(bg, mcs, 5, seed=0)
        assert result.microcluster_labels.shape[0] == mcs.n_microclusters
        assert result.object_labels.shape[0] == ens.n_objects


class TestEq14Consistency:
    def test_recorded_similarities_match_definition(self, rng):
        # replay the merge sequence and verify each similarity against the
        # direct cross-region formula
        n = 15
        sim = random_similarity(rng, n)
        for linkage in ("al", "cl", "sl"):
            dendro = build_dendrogram(sim, linkage)
            members = {i: {i} for i in range(n)}
            for t in range(n - 1):
                a = members.pop(int(dendro.left[t]))
                b = members.pop(int(dendro.right[t]))
                expect = region_similarity(sim, a, b, linkage)
                assert dendro.similarity[t] == pytest.approx(expect, abs=1e-11)
                members[n + t] = a | b
