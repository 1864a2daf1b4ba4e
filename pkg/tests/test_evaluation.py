import itertools
import math
from collections import Counter

import numpy as np
import pytest

from knav.embedding import HashingEmbeddingClient
from knav.errors import DomainError, JudgeOutputError, ValidationError
from knav.evaluation import (
    NavigationMetrics,
    RelevanceGrade,
    adjusted_rand_index,
    llm_relevance_judge,
    navigation_metrics,
    normalized_mutual_info,
    precision_recall_at_k,
    soft_heading_recall,
)
from knav.llm_gateway import Gateway, Mode

from .conftest import FakeChatProvider, make_doc


# --- independent oracles: direct pair counting / entropy sums, no shared code ---

def oracle_ari(a, b):
    n11 = n10 = n01 = n00 = 0
    for i, j in itertools.combinations(range(len(a)), 2):
        same_a = a[i] == a[j]
        same_b = b[i] == b[j]
        if same_a and same_b:
            n11 += 1
        elif same_a:
            n10 += 1
        elif same_b:
            n01 += 1
        else:
            n00 += 1
    sum_a = n11 + n10
    sum_b = n11 + n01
    total = n11 + n10 + n01 + n00
    expected = sum_a * sum_b / total
    maximum = 0.5 * (sum_a + sum_b)
    if math.isclose(maximum, expected, abs_tol=1e-15):
        return 0.0
    return (n11 - expected) / (maximum - expected)


def oracle_nmi(a, b):
    n = len(a)
    ca, cb, cab = Counter(a), Counter(b), Counter(zip(a, b))
    h_a = -sum((c / n) * math.log(c / n) for c in ca.values())
    h_b = -sum((c / n) * math.log(c / n) for c in cb.values())
    if h_a == 0 or h_b == 0:
        groups_a = {}
        groups_b = {}
        for i, (x, y) in enumerate(zip(a, b)):
            groups_a.setdefault(x, set()).add(i)
            groups_b.setdefault(y, set()).add(i)
        same = set(map(frozenset, groups_a.values())) == set(map(frozenset, groups_b.values()))
        return 1.0 if same else 0.0
    mi = sum(
        (c / n) * math.log((c / n) / ((ca[x] / n) * (cb[y] / n)))
        for (x, y), c in cab.items()
    )
    return mi / math.sqrt(h_a * h_b)


def oracle_min_cluster_count(relevant_per_cluster, needed):
    ids = list(relevant_per_cluster)
    for size in range(1, len(ids) + 1):
        for combo in itertools.combinations(ids, size):
            if sum(relevant_per_cluster[c] for c in combo) >= needed:
                return size
    raise AssertionError("instance cannot cover the requirement")


class TestAdjustedRandIndex:
    def test_identical_labelings(self):
        assert adjusted_rand_index([0, 0, 1, 1], [5, 5, 9, 9]) == pytest.approx(1.0)

    def test_hand_derived_value(self):
        assert adjusted_rand_index([0, 0, 1, 1], [0, 0, 1, 2]) == pytest.approx(4 / 7, abs=1e-9)
        assert abs(adjusted_rand_index([0, 0, 1, 1], [0, 0, 1, 2]) - 0.5714) < 1e-4

    def test_degenerate_returns_zero(self):
        assert adjusted_rand_index([0, 0, 0], [1, 1, 1]) == 0.0

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(2, 31))
            a = rng.integers(0, rng.integers(1, 6), size=n).tolist()
            b = rng.integers(0, rng.integers(1, 6), size=n).tolist()
            assert adjusted_rand_index(a, b) == pytest.approx(oracle_ari(a, b), abs=1e-9)

    def test_symmetry_and_label_permutation_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(3, 25))
            a = rng.integers(0, 4, size=n).tolist()
            b = rng.integers(0, 4, size=n).tolist()
            assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_index(b, a), abs=1e-12)
            remap = {0: 3, 1: 2, 2: 0, 3: 1}
            assert adjusted_rand_index([remap[x] for x in a], b) == pytest.approx(
                adjusted_rand_index(a, b), abs=1e-12
            )

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            adjusted_rand_index([0, 1], [0, 1, 2])


class TestNormalizedMutualInfo:
    def test_identical_labelings(self):
        assert normalized_mutual_info([0, 1, 0, 1], [4, 7, 4, 7]) == pytest.approx(1.0)

    def test_constant_vs_varied_is_zero(self):
        assert normalized_mutual_info([0, 1, 2, 3], [5, 5, 5, 5]) == 0.0

    def test_both_constant_is_one(self):
        assert normalized_mutual_info([2, 2, 2], [9, 9, 9]) == 1.0

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n = int(rng.integers(2, 31))
            a = rng.integers(0, rng.integers(1, 6), size=n).tolist()
            b = rng.integers(0, rng.integers(1, 6), size=n).tolist()
            assert normalized_mutual_info(a, b) == pytest.approx(oracle_nmi(a, b), abs=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            normalized_mutual_info([0], [0, 1])


class TestNavigationMetrics:
    def test_worked_example(self):
        # 10 relevant docs split 6/3/1 across clusters of sizes 10/5/5 in a corpus of 100.
        assignment = {}
        for i in range(10):
            assignment[f"c0-{i}"] = 0
        for i in range(5):
            assignment[f"c1-{i}"] = 1
            assignment[f"c2-{i}"] = 2
        gold = {1: {f"c0-{i}" for i in range(6)} | {f"c1-{i}" for i in range(3)} | {"c2-0"}}
        report = navigation_metrics(assignment, gold, corpus_size=100, p=80)
        metrics = report.per_topic[1]
        assert metrics.r_c == 2
        assert metrics.r_v == pytest.approx(0.15)

    def test_single_cluster_full_coverage(self):
        assignment = {f"d{i}": 0 for i in range(5)}
        assignment.update({f"x{i}": 1 for i in range(5)})
        gold = {1: {f"d{i}" for i in range(5)}}
        report = navigation_metrics(assignment, gold, corpus_size=10, p=100)
        assert report.per_topic[1].r_c == 1

    def test_topic_without_relevant_docs_skipped(self):
        assignment = {"d0": 0, "d1": 1}
        report = navigation_metrics(assignment, {1: {"zz"}, 2: {"d0"}}, corpus_size=2, p=80)
        assert report.skipped_topics == [1]
        assert 2 in report.per_topic

    def test_tie_prefers_smaller_cluster(self):
        # Equal relevant counts; cluster 1 is smaller so it must be taken first.
        assignment = {"a0": 0, "a1": 0, "a2": 0, "b0": 1, "b1": 1, "r0": 0, "r1": 1}
        gold = {1: {"r0", "r1"}}
        report = navigation_metrics(assignment, gold, corpus_size=7, p=50)
        # m = 1; best-first order must start with cluster 1 (3 docs vs 4).
        assert report.per_topic[1].r_c == 1
        assert report.per_topic[1].r_v == pytest.approx(3 / 7)

    def test_greedy_matches_exhaustive_on_random_instances(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            n_clusters = int(rng.integers(2, 9))
            cluster_sizes = rng.integers(1, 8, size=n_clusters)
            assignment = {}
            doc_counter = 0
            for cid, size in enumerate(cluster_sizes):
                for _ in range(size):
                    assignment[f"d{doc_counter}"] = cid
                    doc_counter += 1
            all_docs = list(assignment)
            n_rel = int(rng.integers(1, len(all_docs) + 1))
            relevant = set(rng.choice(all_docs, size=n_rel, replace=False).tolist())
            p = float(rng.integers(1, 101))
            report = navigation_metrics(assignment, {1: relevant}, corpus_size=len(all_docs), p=p)
            needed = math.ceil(p / 100 * len(relevant))
            per_cluster = Counter(assignment[d] for d in relevant)
            assert report.per_topic[1].r_c == oracle_min_cluster_count(per_cluster, needed)

    def test_invalid_p(self):
        with pytest.raises(ValidationError):
            navigation_metrics({"d": 0}, {1: {"d"}}, corpus_size=1, p=0)

    def test_r_v_bounds_enforced(self):
        with pytest.raises(ValidationError):
            NavigationMetrics(topic_id=1, r_c=0, r_v=0.5, p=80)


class TestPrecisionRecall:
    def test_direct_counting(self):
        ranked = [f"r{i}" for i in range(10)] + [f"x{i}" for i in range(10)]
        relevant = {f"r{i}" for i in range(10)} | {f"q{i}" for i in range(30)}
        out = precision_recall_at_k(ranked, relevant, [20])
        assert out[20] == (pytest.approx(0.5), pytest.approx(0.25))

    def test_all_relevant_prefix(self):
        out = precision_recall_at_k(["a", "b"], {"a", "b", "c"}, [1, 2])
        assert out[1][0] == 1.0
        assert out[2][0] == 1.0

    def test_k_past_list_end_divides_by_k(self):
        out = precision_recall_at_k(["a"], {"a"}, [4])
        assert out[4] == (pytest.approx(0.25), pytest.approx(1.0))

    def test_empty_relevant_is_domain_error(self):
        with pytest.raises(DomainError):
            precision_recall_at_k(["a"], set(), [1])

    def test_precision_monotone_without_new_relevant(self):
        ranked = ["a", "b", "x", "y", "z"]
        out = precision_recall_at_k(ranked, {"a", "b"}, [1, 2, 3, 4, 5])
        precisions = [out[k][0] for k in (1, 2, 3, 4, 5)]
        assert all(precisions[i] >= precisions[i + 1] for i in range(4))


class TestSoftHeadingRecall:
    def test_identical_lists_score_one(self):
        client = HashingEmbeddingClient()
        gold = ["Retinal Neuronal Dysfunction", "Visual Acuity Changes"]
        assert soft_heading_recall(gold, list(gold), client) == pytest.approx(1.0)

    def test_empty_generated_scores_zero(self):
        assert soft_heading_recall(["a heading"], [], HashingEmbeddingClient()) == 0.0

    def test_permutation_and_duplication_invariance(self):
        client = HashingEmbeddingClient()
        gold = ["alpha synuclein aggregation", "dopamine neuron loss", "motor symptoms"]
        generated = ["dopaminergic degeneration", "protein aggregation disorders"]
        base = soft_heading_recall(gold, generated, client)
        assert soft_heading_recall(gold[::-1], generated, client) == pytest.approx(base)
        assert soft_heading_recall(gold, generated[::-1], client) == pytest.approx(base)
        assert soft_heading_recall(gold, generated * 3, client) == pytest.approx(base)

    def test_empty_gold_rejected(self):
        with pytest.raises(ValidationError):
            soft_heading_recall([], ["x"], HashingEmbeddingClient())


class TestRelevanceJudge:
    def _gateway(self, replies):
        return Gateway(mode=Mode.LIVE, provider=FakeChatProvider(replies=replies))

    def test_grade_two_is_relevant(self):
        grade = llm_relevance_judge(make_doc(1), "Thyroid Dysfunction", self._gateway(["2"]))
        assert grade == RelevanceGrade(2)
        assert grade.relevant

    def test_grade_zero_not_relevant(self):
        grade = llm_relevance_judge(make_doc(1), "Thyroid Dysfunction", self._gateway(["0"]))
        assert not grade.relevant

    def test_repair_round_parses_second_reply(self):
        gateway = self._gateway(["cannot say", "1"])
        grade = llm_relevance_judge(make_doc(1), "Thyroid Dysfunction", gateway)
        assert grade.grade == 1
        assert gateway.call_count == 2

    def test_two_bad_replies_raise(self):
        with pytest.raises(JudgeOutputError):
            llm_relevance_judge(make_doc(1), "Thyroid", self._gateway(["nope", "still nope"]))

    def test_out_of_scale_integer_rejected(self):
        with pytest.raises(JudgeOutputError):
            llm_relevance_judge(make_doc(1), "Thyroid", self._gateway(["7", "9"]))
