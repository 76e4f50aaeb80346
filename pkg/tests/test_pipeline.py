"""Linkage, weight fitting, and the end-to-end pipeline."""

import numpy as np
import pytest

from arofac import (Arofac2Config, CandidatePair, ClusterResult, InputError,
                    NumericalError, SynthSpec, arofac2, fit_weights,
                    gen_synthetic, link_pairs, link_triples, match_components,
                    outer3, permute_modes, reconstruct, rel_error)
from arofac.rankone import collect_candidates
from arofac.cluster import canonicalize, estimate_bandwidth, mean_shift


def pair(u, v):
    return CandidatePair(u=np.asarray(u, dtype=float),
                         v=np.asarray(v, dtype=float),
                         sigma_ratio=0.0, iters=1, converged=True)


def clusters_from(points):
    P = np.array([canonicalize(p) for p in points])
    return mean_shift(P, estimate_bandwidth(P))


class TestLinkPairs:
    def test_rank1_single_link(self):
        rng = np.random.default_rng(0)
        A = outer3(rng.standard_normal(5), rng.standard_normal(6),
                   rng.standard_normal(4))
        pairs = collect_candidates(A, (1, 2), 10, seed=0)
        ca = clusters_from([p.u for p in pairs])
        cb = clusters_from([p.v for p in pairs])
        assert ca.count == 1 and cb.count == 1
        assert link_pairs(pairs, ca, cb) == [(0, 0)]

    def test_noiseless_r3_bijection(self):
        A, truth = gen_synthetic(SynthSpec(8, 9, 10, 3, seed=1))
        pairs = collect_candidates(A, (1, 2), 60, seed=1)
        ca = clusters_from([p.u for p in pairs])
        cb = clusters_from([p.v for p in pairs])
        links = link_pairs(pairs, ca, cb)
        assert sorted(i for i, _ in links) == [0, 1, 2]
        assert sorted(j for _, j in links) == [0, 1, 2]
        # each link joins the u- and v-component of one ground-truth factor
        for i, j in links:
            tu = int(np.argmax([abs(ca.centers[i] @ canonicalize(f.u))
                                for f in truth.factors]))
            tv = int(np.argmax([abs(cb.centers[j] @ canonicalize(f.v))
                                for f in truth.factors]))
            assert tu == tv

    def test_contested_column_yields_single_link(self):
        e = np.eye(6)
        pairs = [pair(e[0], e[0])] * 3 + [pair(e[1], e[0])] * 3
        ca = ClusterResult(centers=np.array([e[0], e[1]]),
                           labels=np.array([0, 0, 0, 1, 1, 1]),
                           inertia=np.zeros(2))
        cb = ClusterResult(centers=np.array([e[0]]),
                           labels=np.zeros(6, dtype=int),
                           inertia=np.zeros(1))
        links = link_pairs(pairs, ca, cb)
        assert len(links) == 1

    def test_uniform_votes_fail_floor(self):
        e = np.eye(6)
        pairs = [pair(e[i], e[j]) for i in range(6) for j in range(6)]
        ca = ClusterResult(centers=e.copy(), labels=np.repeat(np.arange(6), 6),
                           inertia=np.zeros(6))
        cb = ClusterResult(centers=e.copy(), labels=np.tile(np.arange(6), 6),
                           inertia=np.zeros(6))
        with pytest.raises(NumericalError):
            link_pairs(pairs, ca, cb)


class TestLinkTriples:
    def test_rank1_triple(self):
        rng = np.random.default_rng(2)
        A = outer3(rng.standard_normal(5), rng.standard_normal(6),
                   rng.standard_normal(4))
        p12 = collect_candidates(A, (1, 2), 10, seed=0)
        p32 = collect_candidates(A, (3, 2), 10, seed=0)
        c1 = clusters_from([p.u for p in p12])
        c2 = clusters_from([p.v for p in p12])
        c3 = clusters_from([p.u for p in p32])
        assert link_triples(p12, p32, c1, c2, c3) == [(0, 0, 0)]

    def test_noiseless_r3_triples_match_truth(self):
        A, truth = gen_synthetic(SynthSpec(8, 9, 10, 3, seed=3))
        p12 = collect_candidates(A, (1, 2), 60, seed=3)
        p32 = collect_candidates(A, (3, 2), 60, seed=3)
        c1 = clusters_from([p.u for p in p12])
        c2 = clusters_from([p.v for p in p12])
        c3 = clusters_from([p.u for p in p32])
        triples = link_triples(p12, p32, c1, c2, c3)
        assert len(triples) == 3
        seen = set()
        for i, j, k in triples:
            tu = int(np.argmax([abs(c1.centers[i] @ canonicalize(f.u))
                                for f in truth.factors]))
            tv = int(np.argmax([abs(c2.centers[j] @ canonicalize(f.v))
                                for f in truth.factors]))
            tw = int(np.argmax([abs(c3.centers[k] @ canonicalize(f.w))
                                for f in truth.factors]))
            assert tu == tv == tw
            seen.add(tu)
        assert seen == {0, 1, 2}


class TestFitWeights:
    def test_single_triple_weight(self):
        rng = np.random.default_rng(4)
        u = rng.standard_normal(4)
        u /= np.linalg.norm(u)
        v = rng.standard_normal(5)
        v /= np.linalg.norm(v)
        w = rng.standard_normal(6)
        w /= np.linalg.norm(w)
        A = 3.0 * outer3(u, v, w)
        assert fit_weights(A, [(u, v, w)]) == pytest.approx([3.0])

    def test_signed_weights_exact(self):
        rng = np.random.default_rng(5)
        t1 = [x / np.linalg.norm(x) for x in
              (rng.standard_normal(4), rng.standard_normal(5), rng.standard_normal(6))]
        t2 = [x / np.linalg.norm(x) for x in
              (rng.standard_normal(4), rng.standard_normal(5), rng.standard_normal(6))]
        A = 2.0 * outer3(*t1) - 1.0 * outer3(*t2)
        wts = fit_weights(A, [tuple(t1), tuple(t2)])
        assert abs(wts[0] - 2.0) < 1e-10
        assert abs(wts[1] + 1.0) < 1e-10

    def test_noiseless_r5_residual(self):
        A, truth = gen_synthetic(SynthSpec(9, 10, 11, 5, seed=6))
        triples = [(f.u, f.v, f.w) for f in truth.factors]
        wts = fit_weights(A, triples)
        recon = sum(c * outer3(*t) for c, t in zip(wts, triples))
        assert np.linalg.norm(A - recon) / np.linalg.norm(A) < 1e-8

    def test_duplicate_triples_raise(self):
        rng = np.random.default_rng(7)
        t = [x / np.linalg.norm(x) for x in
             (rng.standard_normal(4), rng.standard_normal(5), rng.standard_normal(6))]
        A = outer3(*t)
        with pytest.raises(NumericalError):
            fit_weights(A, [tuple(t), tuple(t)])

    def test_input_validation(self):
        A = np.ones((3, 4, 5))
        with pytest.raises(InputError):
            fit_weights(A, [])
        with pytest.raises(InputError):
            fit_weights(A, [(np.ones(3), np.ones(4), np.ones(6))])


class TestArofac2:
    def test_rank1(self):
        rng = np.random.default_rng(8)
        u = rng.standard_normal(6)
        v = rng.standard_normal(7)
        w = rng.standard_normal(8)
        A = outer3(u, v, w)
        d = arofac2(A, seed=0)
        assert d.rank == 1
        assert d.rel_error < 1e-10
        f = d.factors[0]
        for got, ref in ((f.u, u), (f.v, v), (f.w, w)):
            assert np.allclose(got, canonicalize(ref), atol=1e-8)
        scale = np.linalg.norm(u) * np.linalg.norm(v) * np.linalg.norm(w)
        assert abs(abs(f.weight) - scale) < 1e-8 * scale

    def test_zero_tensor(self):
        d = arofac2(np.zeros((4, 5, 6)), seed=0)
        assert d.rank == 0
        assert d.factors == []
        assert d.rel_error == 0.0

    def test_scale_equivariance(self):
        A, _ = gen_synthetic(SynthSpec(8, 9, 10, 3, seed=9))
        d1 = arofac2(A, seed=2)
        d2 = arofac2(7.5 * A, seed=2)
        assert d1.rank == d2.rank == 3
        for f1 in d1.factors:
            best = min(d2.factors,
                       key=lambda f2: np.linalg.norm(f2.u - f1.u))
            assert np.linalg.norm(best.u - f1.u) < 1e-9
            assert np.linalg.norm(best.v - f1.v) < 1e-9
            assert np.linalg.norm(best.w - f1.w) < 1e-9
            assert best.weight == pytest.approx(7.5 * f1.weight, rel=1e-9)

    def test_mode_permutation_equivariance(self):
        A, _ = gen_synthetic(SynthSpec(8, 9, 10, 3, seed=10))
        d1 = arofac2(A, seed=3)
        d2 = arofac2(permute_modes(A, (2, 1, 3)), seed=3)
        assert d1.rank == d2.rank == 3
        for f1 in d1.factors:
            best = min(d2.factors,
                       key=lambda f2: np.linalg.norm(f2.u - f1.v))
            assert np.linalg.norm(best.u - f1.v) < 1e-6
            assert np.linalg.norm(best.v - f1.u) < 1e-6
            assert np.linalg.norm(best.w - f1.w) < 1e-6
            assert best.weight == pytest.approx(f1.weight, rel=1e-6)

    def test_reconstruction_soundness(self):
        A, _ = gen_synthetic(SynthSpec(8, 9, 10, 3, eps=0.05, seed=11))
        d = arofac2(A, seed=4)
        assert d.rank >= 2
        full = d.rel_error
        for drop in range(d.rank):
            kept = [f for i, f in enumerate(d.factors) if i != drop]
            trunc = type(d)(rank=len(kept), factors=kept, rel_error=0.0)
            assert full <= rel_error(A, reconstruct(trunc, A.shape)) + 1e-12

    def test_rank_honesty_across_seeds(self):
        for seed in range(3):
            A, truth = gen_synthetic(SynthSpec(8, 9, 10, 3, seed=20 + seed))
            d = arofac2(A, seed=seed)
            assert d.rank == 3
            _, _, mc = match_components(d, truth)
            assert mc > 0.999

    def test_no_mode3_slice_profiles(self):
        A, truth = gen_synthetic(SynthSpec(9, 10, 8, 3, seed=12))
        cfg = Arofac2Config(compute_mode3=False)
        d = arofac2(A, cfg, seed=5)
        assert d.rank == 3
        assert d.rel_error < 1e-8
        # w holds the normalized per-slice weight profile of the factor
        _, _, mc = match_components(d, truth)
        assert mc > 0.999
        for f in d.factors:
            assert abs(np.linalg.norm(f.w) - 1.0) < 1e-10

    def test_diagnostics_populated(self):
        A, _ = gen_synthetic(SynthSpec(8, 9, 10, 2, seed=13))
        d = arofac2(A, seed=6)
        diag = d.diagnostics
        assert diag["candidates"]["run_12"]["restarts"] == 200
        assert diag["candidates"]["run_12"]["converged"] >= 2
        assert diag["clusters"]["mode1"]["count"] == d.rank
        assert "votes" in diag and "bandwidths" in diag

    def test_stage_tagged_failure(self):
        rng = np.random.default_rng(14)
        A = rng.standard_normal((12, 13, 14))
        cfg = Arofac2Config(
            restarts_per_mode=10,
            findrankone=__import__("arofac").FindRankOneConfig(
                max_iters=30, rankone_tol=1e-8),
        )
        with pytest.raises(NumericalError) as exc:
            arofac2(A, cfg, seed=7)
        assert exc.value.stage is not None

    def test_config_validation(self):
        with pytest.raises(InputError):
            Arofac2Config(restarts_per_mode=5).validate()
        with pytest.raises(InputError):
            Arofac2Config(min_vote_share=1.5).validate()
        with pytest.raises(InputError):
            Arofac2Config(support_frac=1.0).validate()
        with pytest.raises(InputError):
            Arofac2Config(span_weighting="gauss").validate()

    def test_uniform_weighting_recovers_too(self):
        A, truth = gen_synthetic(SynthSpec(8, 9, 10, 3, seed=15))
        d = arofac2(A, Arofac2Config(span_weighting="uniform"), seed=8)
        assert d.rank == 3
        _, _, mc = match_components(d, truth)
        assert mc > 0.999

    def test_min_dims(self):
        with pytest.raises(InputError):
            arofac2(np.ones((1, 4, 5)), seed=0)
