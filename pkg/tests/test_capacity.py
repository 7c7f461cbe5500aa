import numpy as np
import pytest

import cfpart as cp
from cfpart.capacity import (interference_sum, per_subnetwork_capacity_approx,
                             sum_capacity_approx_rearranged)
from cfpart.errors import InvalidDecomposition

from conftest import random_decomposition, random_instance

# 1-D quadrature of log2(1+10*t)*exp(-t) over t >= 0 (scipy.integrate.quad,
# abs err ~4e-10); the ergodic rate of one isolated unit-gain link at 10 dB
QUAD_RATE_10DB = 2.9065148084148045


def pair_decomp():
    return cp.Decomposition(np.array([0, 0]), 1, 1)


class TestApproxCapacity:
    def test_one_interferer(self, channel):
        # one BS, in-subnetwork UE gain 1, outside UE gain 1
        gains = np.array([[1.0], [1.0]])
        d = cp.Decomposition(np.array([0, 1, 0]), 2, 2)
        got = cp.subnetwork_capacity_approx(gains, channel, d, 0)
        assert got == pytest.approx(np.log2(1 + 10 / 11), abs=1e-12)
        assert got == pytest.approx(0.932885804141463)

    def test_no_interference(self, channel):
        gains = np.array([[1.0]])
        got = cp.subnetwork_capacity_approx(gains, channel, pair_decomp(), 0)
        assert got == pytest.approx(np.log2(11.0), abs=1e-12)
        assert got == pytest.approx(3.4594316186372973)

    def test_zero_ue_subnetwork(self, channel):
        gains = np.array([[1.0, 0.3]])
        d = cp.Decomposition(np.array([0, 0, 1]), 1, 2)
        assert cp.subnetwork_capacity_approx(gains, channel, d, 1) == 0.0

    def test_zero_bs_rejected(self, channel):
        gains = np.array([[1.0], [0.5]])
        d = cp.Decomposition(np.array([0, 1, 0]), 2, 2)
        with pytest.raises(InvalidDecomposition):
            cp.subnetwork_capacity_approx(gains, channel, d, 1)


class TestSumCapacity:
    def test_single_subnetwork_formula(self, channel):
        _, _, gains, _ = random_instance(2, 5, 4)
        d = cp.Decomposition(np.zeros(9, dtype=int), 5, 1)
        w = gains ** 2
        expect = np.log2((1.0 + 10.0 * w.sum(axis=0)) / 1.0).sum()
        assert cp.sum_capacity_approx(gains, channel, d) == pytest.approx(expect)

    def test_rearranged_form_agrees(self, channel):
        rng = np.random.default_rng(21)
        for trial in range(50):
            k = int(rng.integers(2, 9))
            l = int(rng.integers(2, 7))
            m = int(rng.integers(1, min(k, l) + 1))
            _, _, gains, _ = random_instance(trial, k, l)
            d = random_decomposition(rng, k, l, m)
            a = cp.sum_capacity_approx(gains, channel, d)
            b = sum_capacity_approx_rearranged(gains, channel, d)
            assert a == pytest.approx(b, rel=1e-9)

    def test_isolated_pairs_decouple(self, channel):
        # two far-apart UE-BS pairs, each its own subnetwork
        ue = np.array([[0.0, 0.0], [100.0, 100.0]])
        bs = np.array([[0.1, 0.0], [100.1, 100.0]])
        lay = cp.NetworkLayout(ue=ue, bs=bs, area_side=200.0, seed=0)
        gains = cp.path_gains(lay, channel)
        d = cp.Decomposition(np.array([0, 1, 0, 1]), 2, 2)
        got = cp.sum_capacity_approx(gains, channel, d)
        expect = 2 * np.log2(1 + 10.0 * gains[0, 0] ** 2)
        assert got == pytest.approx(expect, abs=1e-3)

    def test_per_subnetwork_sums_to_total(self, channel):
        rng = np.random.default_rng(3)
        _, _, gains, _ = random_instance(8, 6, 5)
        d = random_decomposition(rng, 6, 5, 3)
        per = per_subnetwork_capacity_approx(gains, channel, d)
        assert per.sum() == pytest.approx(
            cp.sum_capacity_approx(gains, channel, d), rel=1e-9)


class TestLowerBound:
    def test_equals_approx_at_m1(self, channel):
        _, _, gains, _ = random_instance(4, 6, 4)
        d = cp.Decomposition(np.zeros(10, dtype=int), 6, 1)
        lb = cp.sum_capacity_lower_bound(gains, channel, d)
        assert lb == pytest.approx(cp.sum_capacity_approx(gains, channel, d),
                                   rel=1e-12)

    def test_never_exceeds_approx(self, channel):
        rng = np.random.default_rng(77)
        for trial in range(100):
            k = int(rng.integers(2, 9))
            l = int(rng.integers(2, 7))
            m = int(rng.integers(1, min(k, l) + 1))
            _, _, gains, _ = random_instance(1000 + trial, k, l)
            d = random_decomposition(rng, k, l, m)
            lb = cp.sum_capacity_lower_bound(gains, channel, d)
            assert lb <= cp.sum_capacity_approx(gains, channel, d) + 1e-9

    def test_equality_for_symmetric_interference(self, channel):
        # both BSs see identical out-of-subnetwork power => Jensen is tight
        gains = np.array([[1.0, 0.5], [0.5, 1.0]])
        d = cp.Decomposition(np.array([0, 1, 0, 1]), 2, 2)
        lb = cp.sum_capacity_lower_bound(gains, channel, d)
        assert lb == pytest.approx(cp.sum_capacity_approx(gains, channel, d),
                                   rel=1e-12)

    def test_monotone_coupling_with_sumcut(self, channel):
        # at fixed M, a smaller sumcut always means a larger lower bound
        rng = np.random.default_rng(123)
        for trial in range(100):
            k = int(rng.integers(3, 9))
            l = int(rng.integers(2, 7))
            m = int(rng.integers(1, min(k, l) + 1))
            _, _, gains, graph = random_instance(2000 + trial, k, l)
            d1 = random_decomposition(rng, k, l, m)
            d2 = random_decomposition(rng, k, l, m)
            c1, c2 = cp.sumcut(graph, d1), cp.sumcut(graph, d2)
            b1 = cp.sum_capacity_lower_bound(gains, channel, d1)
            b2 = cp.sum_capacity_lower_bound(gains, channel, d2)
            if c1 < c2:
                assert b1 >= b2
            elif c2 < c1:
                assert b2 >= b1


class TestMergeSuperadditivity:
    def test_random_pairs(self, channel):
        rng = np.random.default_rng(31)
        for trial in range(100):
            k = int(rng.integers(2, 9))
            l = int(rng.integers(2, 7))
            _, _, gains, _ = random_instance(3000 + trial, k, l)
            d = random_decomposition(rng, k, l, 2)
            merged = cp.Decomposition(np.zeros(k + l, dtype=int), k, 1)
            apart = (cp.subnetwork_capacity_approx(gains, channel, d, 0)
                     + cp.subnetwork_capacity_approx(gains, channel, d, 1))
            together = cp.subnetwork_capacity_approx(gains, channel, merged, 0)
            assert together >= apart - 1e-9


class TestMonteCarlo:
    def test_zero_ue_exact_zero(self, channel):
        gains = np.array([[1.0, 0.3]])
        d = cp.Decomposition(np.array([0, 0, 1]), 1, 2)
        est, se = cp.subnetwork_capacity_mc(gains, channel, d, 1, 100, seed=1)
        assert est == 0.0 and se == 0.0

    def test_matches_quadrature_oracle(self, channel):
        gains = np.array([[1.0]])
        est, se = cp.subnetwork_capacity_mc(gains, channel, pair_decomp(), 0,
                                            100_000, seed=3)
        assert abs(est - QUAD_RATE_10DB) < 3 * se

    def test_deterministic(self, channel):
        gains = np.array([[1.0]])
        a = cp.subnetwork_capacity_mc(gains, channel, pair_decomp(), 0, 5000, seed=9)
        b = cp.subnetwork_capacity_mc(gains, channel, pair_decomp(), 0, 5000, seed=9)
        assert a == b

    def test_se_scales_inverse_sqrt(self, channel):
        _, _, gains, _ = random_instance(5, 3, 3)
        d = cp.Decomposition(np.array([0, 0, 1, 0, 1, 1]), 3, 2)
        ses = [cp.subnetwork_capacity_mc(gains, channel, d, 0, n, seed=4)[1]
               for n in (10 ** 3, 10 ** 4, 10 ** 5)]
        for a, b in zip(ses, ses[1:]):
            ratio = a / b
            assert np.sqrt(10) / 2 < ratio < 2 * np.sqrt(10)

    def test_zero_bs_rejected(self, channel):
        gains = np.array([[1.0], [0.5]])
        d = cp.Decomposition(np.array([0, 1, 0]), 2, 2)
        with pytest.raises(InvalidDecomposition):
            cp.subnetwork_capacity_mc(gains, channel, d, 1, 10, seed=0)

    def test_fading_statistics(self, channel):
        # draws used by the estimator are zero-mean unit-variance complex
        from cfpart.netmodel import STREAM_FADING, substream
        rng = substream(123, STREAM_FADING, 0, 0)
        g = (rng.standard_normal(10_000) + 1j * rng.standard_normal(10_000))
        g /= np.sqrt(2.0)
        assert abs(g.mean()) < 0.05
        assert 0.9 < np.mean(np.abs(g) ** 2) < 1.1


class TestCutObjectives:
    def g22(self, w):
        return cp.graph_from_weights(np.asarray(w, dtype=float))

    def test_disconnected_pairs(self):
        g = self.g22([[1.0, 0.0], [0.0, 1.0]])
        d = cp.Decomposition(np.array([0, 1, 0, 1]), 2, 2)
        assert cp.sumcut(g, d) == 0.0

    def test_all_ones_hand_count(self):
        # cut(C1) = w12 + w21 = 2 both ways; sumcut doubles it
        g = self.g22([[1.0, 1.0], [1.0, 1.0]])
        d = cp.Decomposition(np.array([0, 1, 0, 1]), 2, 2)
        assert cp.cut_value(g, d, 0) == pytest.approx(2.0)
        assert cp.sumcut(g, d) == pytest.approx(4.0)

    def test_single_subnetwork_zero(self):
        _, _, _, g = random_instance(6, 4, 4)
        d = cp.Decomposition(np.zeros(8, dtype=int), 4, 1)
        assert cp.sumcut(g, d) == 0.0

    def test_quadratic_matches_hand_value(self):
        g = self.g22([[1.0, 1.0], [1.0, 1.0]])
        d = cp.Decomposition(np.array([0, 1, 0, 1]), 2, 2)
        assert cp.quadratic_objective(g, cp.to_matrix(d)) == pytest.approx(4.0)

    def test_one_column_annihilated(self):
        _, _, _, g = random_instance(7, 3, 5)
        x = np.ones((8, 1))
        assert abs(cp.quadratic_objective(g, x)) < 1e-9

    def test_quadratic_equals_sumcut_random(self):
        rng = np.random.default_rng(100)
        for trial in range(50):
            k = int(rng.integers(2, 9))
            l = int(rng.integers(2, 7))
            m = int(rng.integers(1, min(k, l) + 1))
            _, _, _, g = random_instance(4000 + trial, k, l)
            d = random_decomposition(rng, k, l, m)
            quad = cp.quadratic_objective(g, cp.to_matrix(d))
            scale = 1e-9 * max(1.0, g.degree.max())
            assert quad == pytest.approx(cp.sumcut(g, d), rel=1e-9, abs=scale)

    def test_interference_cut_identity(self):
        rng = np.random.default_rng(200)
        for trial in range(100):
            k = int(rng.integers(2, 9))
            l = int(rng.integers(2, 7))
            m = int(rng.integers(1, min(k, l) + 1))
            _, _, gains, g = random_instance(5000 + trial, k, l)
            d = random_decomposition(rng, k, l, m)
            assert interference_sum(gains, d) == pytest.approx(
                0.5 * cp.sumcut(g, d), rel=1e-9)

    def test_non_partition_rejected(self):
        _, _, _, g = random_instance(8, 2, 2)
        x = np.full((4, 2), 0.7)
        with pytest.raises(ValueError):
            cp.quadratic_objective(g, x)


class TestCapacityReport:
    def test_invariants_and_json(self, channel):
        rng = np.random.default_rng(55)
        _, _, gains, _ = random_instance(9, 5, 4)
        d = random_decomposition(rng, 5, 4, 2)
        rep = cp.evaluate_decomposition(gains, channel, d, mc_samples=500, seed=2)
        assert rep.sum_lb <= rep.sum_approx + 1e-9
        assert sum(rep.per_subnetwork_approx) == pytest.approx(rep.sum_approx,
                                                               rel=1e-9)
        import json
        blob = json.loads(rep.to_json())
        assert blob["mc_samples"] == 500
        assert blob["sum_mc"] is not None
