import numpy as np
import pytest
from hypothesis import given, strategies as st

from lexent.datasets import RelationInstance
from lexent.embeddings import GLOVE_TEXT, EmbeddingTable, LookupPolicy
from lexent.errors import EvalError
from lexent.evaluation import (
    EvalReport, aggregate_ood, diff_report, report_to_csv, score, similarity_profile,
)
from oracles import confusion_oracle


def test_perfect():
    r = score(list("AABBC"), list("AABBC"))
    assert r.macro_f1 == r.weighted_f1 == r.accuracy == 1.0
    assert all(s.f1 == 1.0 for s in r.per_relation.values())


def test_hand_example():
    r = score(list("AABB"), list("ABBB"))
    a, b = r.per_relation["A"], r.per_relation["B"]
    assert (a.precision, a.recall) == (1.0, 0.5) and a.f1 == pytest.approx(2 / 3)
    assert b.precision == pytest.approx(2 / 3) and b.recall == 1.0 and b.f1 == pytest.approx(4 / 5)
    assert r.macro_f1 == pytest.approx(11 / 15)
    np.testing.assert_array_equal(r.confusion, [[1, 1], [0, 2]])


def test_single_class_predictions():
    r = score(list("AABB"), list("AAAA"))
    assert r.per_relation["A"].f1 == pytest.approx(2 / 3)
    assert r.per_relation["B"].f1 == 0.0
    assert r.macro_f1 == pytest.approx(1 / 3)


def test_errors():
    with pytest.raises(EvalError):
        score(["A"], ["A", "B"])
    with pytest.raises(EvalError):
        score([], [])
    with pytest.raises(EvalError):
        score(["A"], ["Z"], classes=("A",))


def test_class_never_seen_counts_in_macro():
    r = score(["A", "A"], ["A", "A"], classes=("A", "B"))
    assert r.macro_f1 == 0.5 and r.weighted_f1 == 1.0


def test_matches_bruteforce_oracle_on_random_sets():
    rng = np.random.default_rng(0)
    classes = ("a", "b", "c", "d", "e")
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        k = int(rng.integers(2, 6))
        gold = [classes[i] for i in rng.integers(0, k, n)]
        pred = [classes[i] for i in rng.integers(0, k, n)]
        cls = classes[:k]
        r = score(gold, pred, cls)
        per, macro, weighted, acc = confusion_oracle(gold, pred, cls)
        assert r.macro_f1 == pytest.approx(macro, abs=1e-12)
        assert r.weighted_f1 == pytest.approx(weighted, abs=1e-12)
        assert r.accuracy == pytest.approx(acc, abs=1e-12)
        for c in cls:
            s = r.per_relation[c]
            assert (s.precision, s.recall, s.f1, s.support) == pytest.approx(per[c], abs=1e-12)


@given(st.lists(st.tuples(st.sampled_from("xyz"), st.sampled_from("xyz")), min_size=1, max_size=40))
def test_score_invariants(pairs):
    gold, pred = zip(*pairs)
    r = score(gold, pred)
    assert 0.0 <= r.macro_f1 <= 1.0 and 0.0 <= r.weighted_f1 <= 1.0
    assert r.confusion.sum() == len(gold)
    assert r.accuracy == pytest.approx(np.trace(r.confusion) / len(gold))
    assert r.to_dict() == EvalReport.from_dict(r.to_dict()).to_dict()


class TestAggregate:
    def test_single_fold_identity(self):
        r = score(list("AABB"), list("ABBB"))
        agg = aggregate_ood([r])
        assert (agg.macro_f1, agg.weighted_f1, agg.accuracy) == (r.macro_f1, r.weighted_f1, r.accuracy)

    def test_unweighted_mean(self):
        r1 = score(list("AABB"), list("AAAA"))  # macro 1/3
        r2 = score(list("AB"), list("AB"))  # macro 1
        agg = aggregate_ood([r1, r2])
        assert agg.macro_f1 == pytest.approx((1 / 3 + 1) / 2)
        assert agg.folds == 2
        np.testing.assert_array_equal(agg.confusion, r1.confusion + r2.confusion)

    def test_macro_point_four_and_point_six(self):
        def fake(m):
            r = score(["A"], ["A"])
            return EvalReport(r.classes, r.per_relation, m, m, m, r.confusion)
        assert aggregate_ood([fake(0.4), fake(0.6)]).macro_f1 == pytest.approx(0.5)

    def test_errors(self):
        with pytest.raises(EvalError):
            aggregate_ood([])
        with pytest.raises(EvalError):
            aggregate_ood([score(["A"], ["A"]), score(["B"], ["B"])])


@pytest.fixture
def table():
    vecs = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [-1.0, 0.0]])
    return EmbeddingTable(2, ("cat", "animal", "dog", "sky"), vecs, GLOVE_TEXT)


def test_similarity_hand_computed(table):
    data = [RelationInstance("cat-n", "animal-n", "hyper"),
            RelationInstance("cat-n", "dog-n", "hyper"),
            RelationInstance("cat-n", "sky-n", "random")]
    prof = similarity_profile(data, table)
    # cos(cat, animal) = 1/sqrt(2); cos(cat, dog) = 0
    assert prof.per_relation_mean_cosine["hyper"] == pytest.approx((2 ** -0.5 + 0.0) / 2)
    assert prof.per_relation_mean_cosine["random"] == pytest.approx(-1.0)
    assert prof.counts == {"hyper": 2, "random": 1}


def test_similarity_oov_handling(table):
    data = [RelationInstance("cat", "animal", "hyper"), RelationInstance("cat", "zebra", "hyper")]
    full = similarity_profile(data, table)
    assert full.counts["hyper"] == 2 and full.in_vocab_counts["hyper"] == 1
    known = similarity_profile(data, table, exclude_oov=True)
    assert known.counts["hyper"] == 1
    assert known.per_relation_mean_cosine["hyper"] == pytest.approx(2 ** -0.5)
    again = similarity_profile(data, table)
    assert again.per_relation_mean_cosine == full.per_relation_mean_cosine


def test_diff_report(table):
    data = [RelationInstance("cat", "animal", "hyper"), RelationInstance("cat", "dog", "coord"),
            RelationInstance("cat", "sky", "random")]
    gold = ["hyper", "coord", "random"]
    rows = diff_report(gold, ["coord", "hyper", "random"], ["hyper", "coord", "hyper"], data, table)
    assert [(r.x, r.y) for r in rows] == [("cat", "dog"), ("cat", "animal")]
    assert rows[0].cosine == pytest.approx(0.0) and rows[0].label_a == "hyper"
    with pytest.raises(EvalError):
        diff_report(gold, gold[:2], gold, data, table, LookupPolicy())


def test_csv():
    text = report_to_csv(score(list("AB"), list("AB")))
    assert text.splitlines()[0] == "relation,precision,recall,f1,support"
    assert text.splitlines()[1] == "A,1.0,1.0,1.0,1"
