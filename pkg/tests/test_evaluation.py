import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facttrace.errors import (
    DuplicatePrediction,
    EmptySubset,
    GroupTooSmall,
    MissingPrediction,
    UnknownKey,
    UnknownRelation,
)
from facttrace.evaluation import (
    CorrectnessMatrix,
    PredictionRecord,
    accuracy,
    build_correctness,
    consistency,
    consistency_matrix,
    group_consistency_series,
    identical_object_recall,
    judge_correct,
    per_relation_metrics,
    subset_accuracy_series,
)
from facttrace.facts import identical_object_flags

from test_facts import make_set


def matrix(fact_ids, cells):
    """cells: {(lang, step): iterable of correct fact_ids}"""
    langs = tuple(sorted({lang for lang, _ in cells}))
    steps = tuple(sorted({step for _, step in cells}))
    bits = {
        key: np.array([fid in set(correct) for fid in fact_ids], dtype=bool)
        for key, correct in cells.items()
    }
    return CorrectnessMatrix(fact_ids=tuple(fact_ids), langs=langs, steps=steps, bits=bits)


class TestJudgeCorrect:
    def test_containment(self):
        assert judge_correct("The answer is Paris.", "Paris") is True

    def test_shared_prefix_rejected(self):
        # complete-generation matching must not be fooled by a shared first token
        assert judge_correct("Antwerp is the answer", "Antananarivo") is False

    def test_empty_generation(self):
        assert judge_correct("", "Paris") is False

    def test_empty_expected_object_rejected(self):
        with pytest.raises(ValueError):
            judge_correct("anything", "")

    def test_case_sensitive(self):
        assert judge_correct("the answer is paris", "Paris") is False

    @given(
        gen=st.text(
            alphabet=st.characters(blacklist_categories=("Mn", "Mc", "Me", "Cs")),
            max_size=20,
        ),
        prefix=st.text(
            alphabet=st.characters(blacklist_categories=("Mn", "Mc", "Me", "Cs")),
            max_size=10,
        ),
        suffix=st.text(
            alphabet=st.characters(blacklist_categories=("Mn", "Mc", "Me", "Cs")),
            max_size=10,
        ),
        expected=st.text(
            alphabet=st.characters(blacklist_categories=("Mn", "Mc", "Me", "Cs")),
            min_size=1,
            max_size=8,
        ),
    )
    @settings(max_examples=80, deadline=None)
    def test_monotone_under_extension(self, gen, prefix, suffix, expected):
        # combining marks are excluded: normalization can merge them across
        # the concatenation boundary, which is outside this guarantee
        if judge_correct(gen, expected):
            assert judge_correct(prefix + gen + suffix, expected)


def fixture_facts():
    return make_set(
        ["eng", "fra"],
        {
            0: ("capital_of", {"eng": ("France", "Paris"), "fra": ("France", "Paris")}),
            1: ("capital_of", {"eng": ("Japan", "Tokyo"), "fra": ("Japon", "Tokyo")}),
        },
    )


class TestBuildCorrectness:
    def test_two_facts_one_correct(self):
        facts = fixture_facts()
        records = [
            PredictionRecord(0, "eng", 1, "It is Paris."),
            PredictionRecord(1, "eng", 1, "It is Kyoto."),
            PredictionRecord(0, "fra", 1, "Paris."),
            PredictionRecord(1, "fra", 1, "Tokyo."),
        ]
        cm = build_correctness(records, facts, [1])
        assert cm.vector("eng", 1).tolist() == [True, False]

    def test_all_generations_equal_objects(self):
        facts = fixture_facts()
        records = [
            PredictionRecord(fid, lang, 1, facts.by_id(lang)[fid].object)
            for lang in facts.languages
            for fid in (0, 1)
        ]
        cm = build_correctness(records, facts, [1])
        for lang in facts.languages:
            assert cm.vector(lang, 1).all()

    def test_matches_per_cell_judging(self):
        facts = make_set(
            ["eng"],
            {i: ("r", {"eng": (f"s{i}", f"obj{i}")}) for i in range(12)},
        )
        records = [
            PredictionRecord(i, "eng", 5, f"maybe obj{i if i % 3 else 99}") for i in range(12)
        ]
        cm = build_correctness(records, facts, [5])
        for i in range(12):
            expected = judge_correct(records[i].generation, f"obj{i}")
            assert cm.vector("eng", 5)[i] == expected

    def test_missing_prediction_is_error(self):
        facts = fixture_facts()
        records = [PredictionRecord(0, "eng", 1, "Paris")]
        with pytest.raises(MissingPrediction):
            build_correctness(records, facts, [1])

    def test_missing_prediction_downgrade(self):
        facts = fixture_facts()
        records = [PredictionRecord(0, "eng", 1, "Paris")]
        cm = build_correctness(records, facts, [1], on_missing="incorrect")
        assert cm.missing_as_incorrect == 3
        assert cm.vector("fra", 1).tolist() == [False, False]

    def test_duplicate_prediction(self):
        facts = fixture_facts()
        records = [
            PredictionRecord(0, "eng", 1, "Paris"),
            PredictionRecord(0, "eng", 1, "Paris again"),
        ]
        with pytest.raises(DuplicatePrediction):
            build_correctness(records, facts, [1])


class TestAccuracy:
    def test_all_correct(self):
        cm = matrix(range(10), {("e", 1): set(range(10))})
        assert accuracy(cm, "e", 1) == 1.0

    def test_half(self):
        cm = matrix(range(4), {("e", 1): {0, 3}})
        assert accuracy(cm, "e", 1) == 0.5

    def test_counting_oracle(self):
        correct = {1, 4, 5, 11}
        cm = matrix(range(13), {("e", 2): correct})
        assert accuracy(cm, "e", 2) == len(correct) / 13

    def test_unknown_key(self):
        cm = matrix(range(3), {("e", 1): {0}})
        with pytest.raises(UnknownKey):
            accuracy(cm, "e", 2)


class TestConsistency:
    def test_identical_sets(self):
        cm = matrix(range(5), {("a", 1): {1, 2, 3}, ("b", 1): {1, 2, 3}})
        assert consistency(cm, "a", "b", 1) == 1.0

    def test_enumerated_jaccard(self):
        cm = matrix(range(6), {("a", 1): {1, 2, 3}, ("b", 1): {2, 3, 4}})
        assert consistency(cm, "a", "b", 1) == 0.5

    def test_empty_union_undefined(self):
        cm = matrix(range(4), {("a", 1): set(), ("b", 1): set()})
        assert consistency(cm, "a", "b", 1) is None

    def test_matrix_symmetric_with_diagonal(self):
        cm = matrix(range(8), {("a", 1): {0, 1}, ("b", 1): {1, 2}, ("c", 1): set()})
        m = consistency_matrix(cm, 1)
        for x in ("a", "b", "c"):
            for y in ("a", "b", "c"):
                assert m.value(x, y) == m.value(y, x)
        assert m.value("a", "a") == 1.0
        assert m.value("c", "c") is None
        d = m.to_dict()
        assert d["languages"] == ["a", "b", "c"]
        assert d["matrix"][0][1] == m.value("a", "b")


correct_sets = st.sets(st.integers(0, 15), max_size=16)


class TestConsistencyProperties:
    @given(a=correct_sets, b=correct_sets)
    @settings(max_examples=120, deadline=None)
    def test_matches_set_enumeration(self, a, b):
        cm = matrix(range(16), {("x", 0): a, ("y", 0): b})
        co = consistency(cm, "x", "y", 0)
        union = a | b
        if not union:
            assert co is None
        else:
            assert co == len(a & b) / len(union)
            assert consistency(cm, "y", "x", 0) == co
            assert 0.0 <= co <= 1.0

    @given(a=correct_sets, b=correct_sets)
    @settings(max_examples=120, deadline=None)
    def test_bounded_by_accuracy_ratio(self, a, b):
        if not a or not b:
            return
        cm = matrix(range(16), {("x", 0): a, ("y", 0): b})
        co = consistency(cm, "x", "y", 0)
        # exact integer form of |inter|/|union| <= min(|a|,|b|)/max(|a|,|b|)
        assert len(a & b) * max(len(a), len(b)) <= min(len(a), len(b)) * len(a | b)
        assert co <= min(len(a), len(b)) / max(len(a), len(b))


class TestGroupConsistency:
    def test_pair_group_equals_pairwise(self):
        cm = matrix(range(6), {("a", 1): {0, 1, 2}, ("b", 1): {1, 2, 3}})
        series = group_consistency_series(cm, {"g": ["a", "b"]}, [1])
        assert series["g"] == [consistency(cm, "a", "b", 1)]

    def test_identical_sets_give_one(self):
        cells = {(lang, 1): {0, 5} for lang in ("a", "b", "c")}
        cm = matrix(range(6), cells)
        series = group_consistency_series(cm, {"g": ["a", "b", "c"]}, [1])
        assert series["g"] == [1.0]

    def test_three_language_mean(self):
        cm = matrix(
            range(4),
            {("a", 1): {0, 1}, ("b", 1): {1, 2}, ("c", 1): {0, 1, 2}},
        )
        series = group_consistency_series(cm, {"g": ["a", "b", "c"]}, [1])
        ab = consistency(cm, "a", "b", 1)
        ac = consistency(cm, "a", "c", 1)
        bc = consistency(cm, "b", "c", 1)
        assert series["g"] == [(ab + ac + bc) / 3]

    def test_all_pairs_undefined_gives_none(self):
        cm = matrix(range(3), {("a", 1): set(), ("b", 1): set()})
        series = group_consistency_series(cm, {"g": ["a", "b"]}, [1])
        assert series["g"] == [None]

    def test_group_too_small(self):
        cm = matrix(range(3), {("a", 1): {0}})
        with pytest.raises(GroupTooSmall):
            group_consistency_series(cm, {"solo": ["a"]}, [1])


class TestPerRelation:
    def test_single_relation_equals_global(self):
        facts = make_set(
            ["eng", "fra"],
            {i: ("only_rel", {"eng": (f"s{i}", f"o{i}"), "fra": (f"t{i}", f"p{i}")}) for i in range(5)},
        )
        cm = matrix(range(5), {("eng", 1): {0, 2}, ("fra", 1): {2, 3}})
        metrics = per_relation_metrics(cm, facts, "eng", [1])
        assert metrics[("fra", "only_rel", 1)] == (
            accuracy(cm, "fra", 1),
            consistency(cm, "fra", "eng", 1),
        )

    def test_zero_correct_relation(self):
        facts = make_set(
            ["eng", "fra"],
            {
                0: ("r1", {"eng": ("a", "b"), "fra": ("c", "d")}),
                1: ("r2", {"eng": ("e", "f"), "fra": ("g", "h")}),
            },
        )
        cm = matrix([0, 1], {("eng", 1): {0}, ("fra", 1): {0}})
        metrics = per_relation_metrics(cm, facts, "eng", [1])
        assert metrics[("fra", "r2", 1)] == (0.0, None)

    def test_matches_filter_then_recompute(self):
        facts = make_set(
            ["eng", "fra"],
            {
                0: ("r1", {"eng": ("a", "b"), "fra": ("c", "d")}),
                1: ("r1", {"eng": ("e", "f"), "fra": ("g", "h")}),
                2: ("r2", {"eng": ("i", "j"), "fra": ("k", "l")}),
                3: ("r2", {"eng": ("m", "n"), "fra": ("o", "p")}),
            },
        )
        cm = matrix(range(4), {("eng", 1): {0, 2, 3}, ("fra", 1): {1, 2}})
        metrics = per_relation_metrics(cm, facts, "eng", [1])
        # manual restriction to r2 = facts {2, 3}
        eng_r2 = {2, 3}
        fra_r2 = {2}
        assert metrics[("fra", "r2", 1)] == (
            len(fra_r2) / 2,
            len(fra_r2 & eng_r2) / len(fra_r2 | eng_r2),
        )

    def test_unknown_relation(self):
        facts = fixture_facts()
        cm = matrix([0, 1], {("eng", 1): {0}, ("fra", 1): {0}})
        with pytest.raises(UnknownRelation):
            per_relation_metrics(cm, facts, "eng", [1], relations=["no_such"])


class TestSubsetSeries:
    def test_full_subset_equals_accuracy(self):
        cm = matrix(range(6), {("e", 1): {0, 1}, ("e", 2): {0, 1, 2}})
        series = subset_accuracy_series(cm, range(6), "e", [1, 2])
        assert series == [accuracy(cm, "e", 1), accuracy(cm, "e", 2)]

    def test_singleton_is_step_function(self):
        cm = matrix(range(3), {("e", 1): set(), ("e", 2): {1}})
        assert subset_accuracy_series(cm, [1], "e", [1, 2]) == [0.0, 1.0]

    def test_five_id_subset(self):
        cm = matrix(range(10), {("e", 1): {0, 2, 4, 6, 8}})
        subset = [0, 1, 2, 3, 4]
        assert subset_accuracy_series(cm, subset, "e", [1]) == [3 / 5]

    def test_empty_subset(self):
        cm = matrix(range(3), {("e", 1): {0}})
        with pytest.raises(EmptySubset):
            subset_accuracy_series(cm, [], "e", [1])


class TestIdenticalObjectRecall:
    def test_no_flags_all_zero(self):
        facts = fixture_facts()
        cm = matrix([0, 1], {("eng", 1): {0, 1}, ("fra", 1): {0}})
        flags = {"eng": {0: False, 1: False}, "fra": {0: False, 1: False}}
        recall = identical_object_recall(cm, facts, flags, "eng", 1)
        assert all(v == (0, 0) for v in recall.values())

    def test_all_eligible_recalled(self):
        facts = fixture_facts()
        cm = matrix([0, 1], {("eng", 1): {0, 1}, ("fra", 1): {0, 1}})
        flags = identical_object_flags(facts, "eng")
        recall = identical_object_recall(cm, facts, flags, "eng", 1)
        eligible = recall[("fra", "capital_of")]
        assert eligible[0] == eligible[1] == 2

    def test_three_of_four(self):
        facts = make_set(
            ["eng", "fra"],
            {
                i: ("r", {"eng": (f"s{i}", f"shared{i}"), "fra": (f"t{i}", f"shared{i}")})
                for i in range(4)
            },
        )
        cm = matrix(range(4), {("eng", 1): {0, 1, 2, 3}, ("fra", 1): {0, 1, 2}})
        flags = identical_object_flags(facts, "eng")
        assert identical_object_recall(cm, facts, flags, "eng", 1)[("fra", "r")] == (3, 4)
