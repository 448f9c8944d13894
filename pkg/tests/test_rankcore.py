"""Ranking substrate: distances, components, pseudo-observations."""

import numpy as np
import pytest

from hetcorr import rankcore

from helpers import (
    all_permutations,
    footrule_bruteforce,
    inversions_bruteforce,
    kendall_distance_bruteforce,
    rank_bruteforce,
)


class TestRankVector:
    def test_counting_definition(self):
        assert rankcore.rank_vector([3.0, 1.0, 2.0]).tolist() == [1, 3, 2]

    def test_singleton(self):
        assert rankcore.rank_vector([5.0]).tolist() == [1]

    def test_tie_break_earlier_index_wins(self):
        assert rankcore.rank_vector([2.0, 2.0, 1.0]).tolist() == [1, 2, 3]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rankcore.rank_vector([])

    def test_matches_bruteforce_with_ties(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 30))
            vals = rng.integers(0, 6, size=n).astype(float)  # plenty of ties
            got = rankcore.rank_vector(vals)
            assert got.tolist() == rank_bruteforce(vals).tolist()
            assert rankcore.is_ranking(got)

    def test_always_a_permutation(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            vals = rng.standard_normal(40)
            assert rankcore.is_ranking(rankcore.rank_vector(vals))


class TestKendallDistance:
    def test_identity(self):
        assert rankcore.kendall_distance([1, 2, 3, 4], [1, 2, 3, 4]) == 0

    def test_full_reversal(self):
        assert rankcore.kendall_distance([1, 2, 3, 4], [4, 3, 2, 1]) == 6

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            rankcore.kendall_distance([1, 2], [1, 2, 3])

    def test_exhaustive_small_n(self):
        # merge counting equals brute force on every permutation vs identity
        for n in range(2, 6):
            ident = np.arange(1, n + 1)
            for nu in all_permutations(n):
                assert rankcore.kendall_distance(ident, nu) == kendall_distance_bruteforce(
                    ident, nu
                )

    def test_random_pairs_match_bruteforce(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            n = int(rng.integers(2, 51))
            pi = rng.permutation(n) + 1
            nu = rng.permutation(n) + 1
            assert rankcore.kendall_distance(pi, nu) == kendall_distance_bruteforce(pi, nu)

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(2, 40))
            pi = rng.permutation(n) + 1
            nu = rng.permutation(n) + 1
            d = rankcore.kendall_distance(pi, nu)
            assert d == rankcore.kendall_distance(nu, pi)
            assert 0 <= d <= n * (n - 1) // 2

    def test_invariance_under_common_relabeling(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n = int(rng.integers(3, 30))
            pi = rng.permutation(n) + 1
            nu = rng.permutation(n) + 1
            relabel = rng.permutation(n)
            assert rankcore.kendall_distance(pi, nu) == rankcore.kendall_distance(
                pi[relabel], nu[relabel]
            )


class TestKendallTau:
    def test_extremes(self):
        assert rankcore.kendall_tau([1, 2, 3], [1, 2, 3]) == 1.0
        assert rankcore.kendall_tau([1, 2, 3], [3, 2, 1]) == -1.0

    def test_single_discordance(self):
        assert rankcore.kendall_tau([1, 2, 3], [1, 3, 2]) == pytest.approx(1 / 3)

    def test_too_short(self):
        with pytest.raises(ValueError):
            rankcore.kendall_tau([1], [1])


class TestFootrule:
    def test_identity_zeros(self):
        comps = rankcore.footrule_components([1, 2, 3], [1, 2, 3])
        assert comps.d.tolist() == [0, 0, 0]
        assert comps.total == 0

    def test_reversal_maximizes(self):
        comps = rankcore.footrule_components([1, 2, 3, 4], [4, 3, 2, 1])
        assert comps.d.tolist() == [3, 1, 1, 3]
        assert comps.total == 8  # floor(n^2 / 2)

    def test_total_always_even(self):
        # exhaustive for small n, random beyond
        for n in range(2, 6):
            ident = np.arange(1, n + 1)
            for nu in all_permutations(n):
                assert rankcore.footrule_components(ident, nu).total % 2 == 0
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(2, 60))
            pi = rng.permutation(n) + 1
            nu = rng.permutation(n) + 1
            comps = rankcore.footrule_components(pi, nu)
            assert comps.total % 2 == 0
            assert comps.total == footrule_bruteforce(pi, nu)
            assert np.all(comps.d <= n - 1)

    def test_diaconis_graham_inequality(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(2, 50))
            pi = rng.permutation(n) + 1
            nu = rng.permutation(n) + 1
            dk = rankcore.kendall_distance(pi, nu)
            ds = rankcore.footrule_components(pi, nu).total
            assert dk <= ds <= 2 * dk


class TestPseudoObservations:
    def test_single_point(self):
        ps = rankcore.pseudo_from_rankings([1], [1])
        assert ps.tolist() == [[0.5, 0.5]]

    def test_direct_formula(self):
        ps = rankcore.pseudo_from_rankings([1, 2, 3], [3, 2, 1])
        assert ps[:, 0].tolist() == [0.75, 0.5, 0.25]
        assert ps[:, 1].tolist() == [0.25, 0.5, 0.75]

    def test_marginal_sum_is_half_n(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(2, 100))
            sample = rankcore.ranked_sample(rng.standard_normal(n), rng.standard_normal(n))
            ps = rankcore.pseudo_observations(sample)
            assert ps[:, 0].sum() == pytest.approx(n / 2.0)
            assert ps[:, 1].sum() == pytest.approx(n / 2.0)

    def test_reranking_recovers_rankings(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            n = int(rng.integers(2, 80))
            sample = rankcore.ranked_sample(rng.standard_normal(n), rng.standard_normal(n))
            ps = rankcore.pseudo_observations(sample)
            assert rankcore.rank_vector(ps[:, 0]).tolist() == sample.pi.tolist()
            assert rankcore.rank_vector(ps[:, 1]).tolist() == sample.nu.tolist()


class TestPerPointDiscordance:
    def test_identity_zeros(self):
        s = rankcore.ranked_sample([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert rankcore.per_point_discordance(s).tolist() == [0, 0, 0]

    def test_full_reversal(self):
        s = rankcore.ranked_sample([1.0, 2.0, 3.0, 4.0], [4.0, 3.0, 2.0, 1.0])
        assert rankcore.per_point_discordance(s).tolist() == [3, 3, 3, 3]

    def test_sums_to_twice_distance(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            n = int(rng.integers(2, 80))
            s = rankcore.ranked_sample(rng.standard_normal(n), rng.standard_normal(n))
            c = rankcore.per_point_discordance(s)
            assert c.sum() == 2 * rankcore.kendall_distance(s.pi, s.nu)


class TestRelativeRanking:
    def test_preserves_order_of_subsequence(self):
        ranking = np.asarray([5, 2, 9, 1, 7])
        rel = rankcore.relative_ranking(ranking, [0, 2, 4])
        # original ranks 5, 9, 7 -> relative 1, 3, 2
        assert rel.tolist() == [1, 3, 2]

    def test_full_order_is_identity_relabel(self):
        rng = np.random.default_rng(10)
        pi = rng.permutation(20) + 1
        assert rankcore.relative_ranking(pi, np.arange(20)).tolist() == pi.tolist()


class TestMatchMargins:
    def test_tie_free_margins_preserve_rankings(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal(40)
        y = rng.standard_normal(40)
        u = rng.random(40)
        v = rng.random(40)
        xn, yn = rankcore.match_margins(u, v, x, y)
        assert rankcore.rank_vector(xn).tolist() == rankcore.rank_vector(u).tolist()
        assert rankcore.rank_vector(yn).tolist() == rankcore.rank_vector(v).tolist()

    def test_value_multisets_match_observed(self):
        rng = np.random.default_rng(12)
        x = np.round(rng.random(60), 1)  # ties
        y = np.round(rng.random(60), 1)
        xn, yn = rankcore.match_margins(rng.random(60), rng.random(60), x, y)
        assert set(xn) <= set(x)
        assert set(yn) <= set(y)
