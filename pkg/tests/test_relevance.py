import math
import random
from itertools import product

import pytest
from hypothesis import given, strategies as st

from fedrank.core import Ranking, rank_by_score
from fedrank.relevance import dcg_at_k, idcg_at_k, mean_ndcg_at_k, ndcg_at_k, s_recall_at_k
from oracles import dcg_naive, idcg_brute


def ranked(labels):
    ids = tuple(f"d{i}" for i in range(len(labels)))
    return Ranking(ids, tuple(float(len(labels) - i) for i in range(len(labels)))), dict(zip(ids, labels))


def typed(letters):
    ranking = Ranking(tuple(f"x{i}" for i in range(len(letters))), tuple(range(len(letters), 0, -1)))
    return ranking, dict(zip(ranking.doc_ids, letters))


class TestDcg:
    def test_two_relevant_on_top(self):
        r, y = ranked([1, 1, 0, 0])
        assert dcg_at_k(r, y, 4) == pytest.approx(dcg_naive([1, 1, 0, 0], 4), abs=1e-12)
        assert dcg_at_k(r, y, 4) == pytest.approx(1.6309, abs=1e-4)

    def test_nothing_relevant(self):
        r, y = ranked([0, 0, 0])
        assert dcg_at_k(r, y, 5) == 0.0

    def test_alternating(self):
        r, y = ranked([1, 0, 1, 0])
        assert dcg_at_k(r, y, 4) == pytest.approx(1.5, abs=1e-12)

    def test_k_must_be_positive(self):
        r, y = ranked([1])
        with pytest.raises(ValueError):
            dcg_at_k(r, y, 0)


class TestIdcg:
    def test_sorted_labels(self):
        assert idcg_at_k([1, 0, 1, 0], 4) == pytest.approx(idcg_brute([1, 0, 1, 0], 4), abs=1e-12)
        assert idcg_at_k([1, 0, 1, 0], 4) == pytest.approx(1.6309, abs=1e-4)

    def test_trivial(self):
        assert idcg_at_k([1], 1) == 1.0
        assert idcg_at_k([0, 0], 2) == 0.0


class TestNdcg:
    def test_customized_toy_ranking_is_perfect(self):
        ranking = rank_by_score([("r1", 1.667), ("r2", 2.167), ("r3", 1.167), ("r4", 0.0)])
        labels = {"r1": 1, "r2": 1, "r3": 0, "r4": 0}
        assert ndcg_at_k(ranking, labels, 4).value == 1.0

    def test_alternating(self):
        r, y = ranked([1, 0, 1, 0])
        assert ndcg_at_k(r, y, 4).value == pytest.approx(1.5 / idcg_brute([1, 0, 1, 0], 4), abs=1e-12)
        assert ndcg_at_k(r, y, 4).value == pytest.approx(0.9197, abs=1e-4)

    def test_no_relevant_is_zero(self):
        r, y = ranked([0, 0])
        assert ndcg_at_k(r, y, 2).value == 0.0

    def test_name_and_cutoff(self):
        r, y = ranked([1, 0])
        m = ndcg_at_k(r, y, 100)
        assert (m.name, m.k) == ("ndcg@100", 100)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_exhaustive_against_permutation_oracle(self, n):
        for labels in product((0, 1), repeat=n):
            for k in (1, 3, n):
                r, y = ranked(list(labels))
                ideal = idcg_brute(labels, k)
                expected = dcg_naive(labels, k) / ideal if ideal else 0.0
                value = ndcg_at_k(r, y, k).value
                assert value == pytest.approx(expected, abs=1e-12)
                assert 0.0 <= value <= 1.0
                # perfect iff the top-k prefix is an ideal one
                assert (value == pytest.approx(1.0)) == (ideal > 0 and dcg_naive(labels, k) == pytest.approx(ideal))

    @given(st.lists(st.tuples(st.floats(-100, 100), st.integers(0, 1)), min_size=1, max_size=20),
           st.floats(min_value=0.01, max_value=100), st.floats(min_value=-50, max_value=50))
    def test_affine_rescaling_invariance(self, docs, a, b):
        pairs = [(f"d{i}", s) for i, (s, _) in enumerate(docs)]
        labels = {f"d{i}": y for i, (_, y) in enumerate(docs)}
        shifted = [(d, a * s + b) for d, s in pairs]
        if len({s for _, s in shifted}) == len({s for _, s in pairs}):
            assert ndcg_at_k(rank_by_score(pairs), labels, 10) == ndcg_at_k(rank_by_score(shifted), labels, 10)


class TestMeanNdcg:
    def test_mean_of_two(self):
        perfect = ranked([1, 0])
        half = (Ranking(("a", "b", "c"), (3.0, 2.0, 1.0)), {"a": 0, "b": 0, "c": 1})
        v_half = ndcg_at_k(*half, 3).value
        assert mean_ndcg_at_k([perfect, half], 3) == pytest.approx((1.0 + v_half) / 2)

    def test_literal_mean(self):
        # DCG 1/log2(3) = 0.6309 over IDCG 1 gives 0.6309; pair with a perfect query
        a = ranked([1])
        b = ranked([0, 1])
        assert mean_ndcg_at_k([a, b], 2) == pytest.approx((1 + 1 / math.log2(3)) / 2)

    def test_single(self):
        q = ranked([0, 1, 1])
        assert mean_ndcg_at_k([q], 3) == ndcg_at_k(*q, 3).value

    def test_skips_queries_without_relevant(self):
        assert mean_ndcg_at_k([ranked([1, 0]), ranked([0, 0])], 2) == 1.0

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            mean_ndcg_at_k([], 10)

    def test_fifty_random_queries(self):
        rng = random.Random(3)
        data, expected = [], []
        for _ in range(50):
            labels = [rng.randint(0, 1) for _ in range(rng.randint(1, 7))]
            data.append(ranked(labels))
            ideal = idcg_brute(labels, 5)
            if ideal:
                expected.append(dcg_naive(labels, 5) / ideal)
        assert mean_ndcg_at_k(data, 5) == pytest.approx(sum(expected) / len(expected), abs=1e-12)


class TestSRecall:
    def test_diversity_list1(self):
        assert s_recall_at_k(*typed("AABBBCCC"), 4, 8).value == 0.75

    def test_diversity_list2(self):
        assert s_recall_at_k(*typed("ABCDABCD"), 4, 8).value == 1.0

    def test_single_type(self):
        assert s_recall_at_k(*typed("AAAAAAAA"), 4, 8).value == 0.25

    def test_zero_universe_rejected(self):
        with pytest.raises(ValueError):
            s_recall_at_k(*typed("AB"), 0, 2)

    @given(st.text(alphabet="ABCDE", min_size=1, max_size=15))
    def test_monotone_in_k(self, letters):
        r, t = typed(letters)
        values = [s_recall_at_k(r, t, 5, k).value for k in range(1, len(letters) + 2)]
        assert values == sorted(values)
