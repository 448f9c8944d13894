"""Mallows model: normalizer, expected distance, sampler, MLE, multistage."""

import math

import numpy as np
import pytest
from scipy import stats

from hetcorr import mallows, rankcore

from helpers import (
    mallows_expected_distance_bruteforce,
    mallows_partition_bruteforce,
    stage_mean_bruteforce,
    stage_vector_bruteforce,
)


class TestLogNormalizer:
    def test_uniform_case_is_log_factorial(self):
        assert mallows.log_normalizer(0.0, 4) == pytest.approx(math.log(24))
        for n in range(2, 11):
            assert mallows.log_normalizer(0.0, n) == pytest.approx(
                math.log(math.factorial(n)), rel=1e-12
            )

    def test_two_items(self):
        assert mallows.log_normalizer(1.0, 2) == pytest.approx(math.log(1 + math.exp(-1)))

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(0)
        for n in range(2, 8):
            for phi in rng.uniform(0.01, 3.0, size=3):
                expected = math.log(mallows_partition_bruteforce(phi, n))
                assert mallows.log_normalizer(phi, n) == pytest.approx(expected, rel=1e-10)

    def test_negative_phi_rejected(self):
        with pytest.raises(ValueError):
            mallows.log_normalizer(-0.1, 5)


class TestExpectedDistance:
    def test_uniform_limit(self):
        assert mallows.expected_distance(1e-8, 10) == pytest.approx(22.5, abs=1e-4)

    def test_concentration_limit(self):
        assert mallows.expected_distance(50.0, 10) < 1e-10

    def test_matches_enumeration_small_n(self):
        assert mallows.expected_distance(0.7, 4) == pytest.approx(
            mallows_expected_distance_bruteforce(0.7, 4), abs=1e-10
        )
        rng = np.random.default_rng(1)
        for n in range(2, 8):
            for phi in rng.uniform(0.05, 2.5, size=3):
                assert mallows.expected_distance(phi, n) == pytest.approx(
                    mallows_expected_distance_bruteforce(phi, n), rel=1e-9
                )

    def test_strictly_decreasing_in_phi(self):
        vals = [mallows.expected_distance(p, 50) for p in np.linspace(0.01, 5.0, 40)]
        assert np.all(np.diff(vals) < 0)


class TestStageExpectedV:
    def test_uniform_limit(self):
        assert mallows.stage_expected_v(1e-9, 8) == pytest.approx(4.0, abs=1e-6)

    def test_concentration(self):
        assert mallows.stage_expected_v(50.0, 8) == pytest.approx(0.0, abs=1e-12)

    def test_finite_sum_oracle(self):
        assert mallows.stage_expected_v(1.0, 3) == pytest.approx(
            stage_mean_bruteforce(1.0, 3), abs=1e-12
        )
        rng = np.random.default_rng(2)
        for _ in range(30):
            k = int(rng.integers(1, 40))
            theta = float(rng.uniform(1e-6, 4.0))
            assert mallows.stage_expected_v(theta, k) == pytest.approx(
                stage_mean_bruteforce(theta, k), rel=1e-10, abs=1e-10
            )

    def test_decreasing_in_theta(self):
        vals = [mallows.stage_expected_v(t, 10) for t in np.linspace(0.01, 5, 30)]
        assert np.all(np.diff(vals) < 0)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            mallows.stage_expected_v(0.0, 3)


class TestSampler:
    def test_uniform_at_zero_scale(self):
        counts = {}
        for r in range(10_000):
            perm = tuple(mallows.sample_mallows(0.0, 4, (100, r)))
            counts[perm] = counts.get(perm, 0) + 1
        assert len(counts) == 24
        freqs = np.asarray(list(counts.values())) / 10_000
        assert np.all(np.abs(freqs - 1 / 24) < 0.01)

    def test_concentrates_at_identity(self):
        hits = sum(
            np.array_equal(mallows.sample_mallows(50.0, 10, (101, r)), np.arange(1, 11))
            for r in range(2000)
        )
        assert hits / 2000 > 0.999

    def test_distance_equals_stage_sum(self):
        rng = np.random.default_rng(3)
        ident = np.arange(1, 31)
        for _ in range(50):
            v = np.asarray([rng.integers(0, k + 1) for k in range(1, 30)])
            nu = mallows.ranking_from_stage_counts(v)
            assert rankcore.kendall_distance(ident, nu) == v.sum()
            # decomposition in insertion order recovers the stage counts
            assert mallows.multistage_decompose(ident, nu).tolist() == v.tolist()

    def test_mean_distance_matches_expectation(self):
        draws = np.asarray([
            rankcore.kendall_distance(
                np.arange(1, 101), mallows.sample_mallows(0.5, 100, (102, r))
            )
            for r in range(10_000)
        ])
        expected = mallows.expected_distance(0.5, 100)
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - expected) < 3 * se

    @pytest.mark.slow
    def test_distance_approaches_normal_shape(self):
        from hetcorr.copulas import phi_from_theta

        phi = phi_from_theta(3.0, 1000)
        rng = np.random.default_rng(4)
        sums = mallows.sample_stage_counts(phi, 1000, rng).astype(float)
        draws = np.empty(10_000)
        for r in range(10_000):
            draws[r] = mallows.sample_stage_counts(phi, 1000, rng).sum()
        assert abs(stats.skew(draws)) < 0.1


class TestMallowsMle:
    def test_inverts_expected_distance(self):
        target = round(mallows.expected_distance(1.0, 100))
        fit = mallows.mallows_mle(target, 100)
        assert fit.phi_hat == pytest.approx(1.0, abs=0.01)
        assert not fit.saturated and not fit.boundary

    def test_uniform_mean_is_boundary(self):
        n = 9  # n(n-1)/4 = 18 exactly
        fit = mallows.mallows_mle(18, n)
        assert fit.phi_hat == 0.0
        assert fit.boundary
        assert fit.log_likelihood == pytest.approx(-math.log(math.factorial(n)))

    def test_zero_distance_saturates(self):
        fit = mallows.mallows_mle(0, 50)
        assert fit.phi_hat == mallows.SCALE_CAP
        assert fit.saturated
        assert fit.log_likelihood == pytest.approx(0.0, abs=1e-12)

    def test_loglik_identity(self):
        fit = mallows.mallows_mle(300, 50)
        expected = -fit.phi_hat * 300 - mallows.log_normalizer(fit.phi_hat, 50)
        assert fit.log_likelihood == pytest.approx(expected, rel=1e-12)

    def test_recovers_sampler_scale(self):
        ident = np.arange(1, 1001)
        fits = []
        for r in range(60):
            nu = mallows.sample_mallows(0.003, 1000, (103, r))
            d = rankcore.kendall_distance(ident, nu)
            fits.append(mallows.mallows_mle(d, 1000).phi_hat)
        fits = np.asarray(fits)
        se = fits.std(ddof=1) / math.sqrt(fits.size)
        assert abs(fits.mean() - 0.003) < 3 * se

    def test_distance_range_validated(self):
        with pytest.raises(ValueError):
            mallows.mallows_mle(-1, 10)
        with pytest.raises(ValueError):
            mallows.mallows_mle(46, 10)


class TestMultistageDecompose:
    def test_identical_rankings(self):
        v = mallows.multistage_decompose([1, 2, 3, 4], [1, 2, 3, 4])
        assert v.tolist() == [0, 0, 0]

    def test_full_reversal(self):
        v = mallows.multistage_decompose([1, 2, 3, 4], [4, 3, 2, 1])
        assert v.tolist() == [1, 2, 3]

    def test_sums_to_distance_and_matches_definition(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            n = int(rng.integers(2, 60))
            pi = rng.permutation(n) + 1
            nu = rng.permutation(n) + 1
            v = mallows.multistage_decompose(pi, nu)
            assert v.sum() == rankcore.kendall_distance(pi, nu)
            assert np.all(v <= np.arange(1, n))
            assert v.tolist() == stage_vector_bruteforce(pi, nu).tolist()


class TestMultistageFit:
    def test_single_block_equals_mallows_exactly(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            n = int(rng.integers(5, 80))
            pi = rng.permutation(n) + 1
            nu = rng.permutation(n) + 1
            d = rankcore.kendall_distance(pi, nu)
            if d >= n * (n - 1) / 4:
                continue  # positive-association domain
            v = mallows.multistage_decompose(pi, nu)
            ms = mallows.multistage_fit_smooth(v, 1)
            mf = mallows.mallows_mle(d, n)
            assert ms.log_likelihood == mf.log_likelihood
            assert ms.theta[0] == mf.phi_hat

    def test_all_zero_stages_saturate(self):
        n = 12
        v = np.zeros(n - 1, dtype=int)
        ms = mallows.multistage_fit_smooth(v, n - 1)
        assert ms.saturated_blocks == n - 1
        assert np.all(ms.theta == mallows.SCALE_CAP)
        assert -1e-6 < ms.log_likelihood <= 0.0

    def test_nesting_on_random_inputs(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(5, 60))
            pi = rng.permutation(n) + 1
            nu = rng.permutation(n) + 1
            v = mallows.multistage_decompose(pi, nu)
            blocks = int(rng.integers(1, v.size + 1))
            ms = mallows.multistage_fit_smooth(v, blocks)
            mf = mallows.mallows_mle(int(v.sum()), n)
            assert ms.log_likelihood >= mf.log_likelihood - 1e-9

    def test_two_regime_profile_detected(self):
        # stages drawn from the stage law itself: strong front, weak back
        rng = np.random.default_rng(8)
        n = 201
        ks = np.arange(1, n)
        split = int(0.4 * (n - 1))
        v = np.empty(n - 1, dtype=np.int64)
        for i, k in enumerate(ks):
            theta = 2.0 if i < split else 1e-3
            w = rng.random()
            # inverse-CDF draw from the truncated geometric
            q = math.exp(-theta)
            tail = 1 - q ** (k + 1)
            j = math.ceil(math.log1p(-w * tail) / math.log(q)) - 1
            v[i] = min(max(int(j), 0), k)
        ms = mallows.multistage_fit_smooth(v, 10)
        front = ms.theta[:split].mean()
        back = ms.theta[split:].mean()
        assert front > back

    def test_block_partition_shape(self):
        v = np.zeros(10, dtype=int)
        ms = mallows.multistage_fit_smooth(v, 3)
        assert ms.blocks == ((1, 4), (5, 7), (8, 10))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mallows.multistage_fit_smooth(np.asarray([], dtype=int), 1)

    def test_default_block_count(self):
        assert mallows.default_block_count(1000) == 32
        assert mallows.default_block_count(178) == 14
