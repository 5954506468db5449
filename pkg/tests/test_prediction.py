"""Prediction decoding: ranking, thresholding, TransE pair assignment."""

import numpy as np
import pytest

from capsrel.prediction import (
    AssignmentError,
    assign_all,
    assign_relation,
    pair_difference,
    predict_multi,
    predict_single,
)
from helpers import tiny_store


class TestPredictSingle:
    def test_descending_order(self):
        assert [j for j, _ in predict_single(np.array([0.1, 0.9, 0.5]))] == [1, 2, 0]

    def test_all_equal_scores_order_by_relation_id(self):
        assert [j for j, _ in predict_single(np.array([0.4] * 4))] == [0, 1, 2, 3]

    def test_returns_all_relations_with_scores(self):
        a = np.array([0.3, 0.7])
        out = predict_single(a)
        assert out == [(1, 0.7), (0, 0.3)]


class TestPredictMulti:
    def test_two_above_threshold(self):
        out = predict_multi(np.array([0.9, 0.8, 0.3]), threshold=0.7)
        assert {j for j, _ in out} == {0, 1}

    def test_one_above_threshold(self):
        out = predict_multi(np.array([0.9, 0.6, 0.3]), threshold=0.7)
        assert [j for j, _ in out] == [0]

    def test_all_below_threshold_gives_empty(self):
        assert predict_multi(np.array([0.5, 0.6, 0.3]), threshold=0.7) == []

    def test_score_equal_to_threshold_is_dropped(self):
        assert predict_multi(np.array([0.7, 0.1]), threshold=0.7) == []

    def test_subset_of_single_top2(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = rng.uniform(0, 1, 5)
            top2 = {j for j, _ in predict_single(a)[:2]}
            multi = {j for j, _ in predict_multi(a, threshold=0.6)}
            assert multi <= top2

    def test_lowering_threshold_is_monotone(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a = rng.uniform(0, 1, 5)
            high = {j for j, _ in predict_multi(a, threshold=0.8)}
            low = {j for j, _ in predict_multi(a, threshold=0.3)}
            assert high <= low

    def test_threshold_validated(self):
        with pytest.raises(ValueError):
            predict_multi(np.array([0.5]), threshold=1.5)


def toy_store():
    store = tiny_store(k=2)
    store.entity = np.array([[0.0, 0.0],   # E1
                             [1.0, 0.0],   # E2: delta (1,0) for (E1,E2)
                             [0.0, 0.0],   # E3
                             [0.0, 1.0]])  # E4: delta (0,1) for (E3,E4)
    store.relation = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return store


class TestAssignRelation:
    def test_single_candidate_pair(self):
        store = toy_store()
        assert assign_relation([("E1", "E2")], 2, store) == ("E1", "E2")

    def test_hand_euclidean_distances(self):
        store = toy_store()
        # R1 embedding (1,0): pair (E1,E2) has delta (1,0) -> distance 0
        assert assign_relation([("E1", "E2"), ("E3", "E4")], 1, store) == ("E1", "E2")
        assert assign_relation([("E1", "E2"), ("E3", "E4")], 2, store) == ("E3", "E4")

    def test_swapping_a_pair_flips_the_difference_sign(self):
        store = toy_store()
        d1 = pair_difference(("E1", "E2"), store)
        d2 = pair_difference(("E2", "E1"), store)
        np.testing.assert_array_equal(d1, -d2)
        r1 = store.relation[1]
        assert (np.linalg.norm(d1 - r1) != np.linalg.norm(d2 - r1))

    def test_direction_flag_selects_literal_reading(self):
        store = toy_store()
        fwd = pair_difference(("E1", "E2"), store, direction="e2-e1")
        rev = pair_difference(("E1", "E2"), store, direction="e1-e2")
        np.testing.assert_array_equal(fwd, -rev)

    def test_translation_invariance_of_assignment(self):
        store = toy_store()
        shifted = toy_store()
        shifted.entity = store.entity + np.array([5.0, -3.0])
        for rel in (1, 2):
            assert (assign_relation([("E1", "E2"), ("E3", "E4")], rel, store)
                    == assign_relation([("E1", "E2"), ("E3", "E4")], rel, shifted))

    def test_missing_entity_embedding_skips_pair(self):
        store = toy_store()
        assert assign_relation([("E1", "UNKNOWN"), ("E3", "E4")], 2, store) \
            == ("E3", "E4")

    def test_all_pairs_missing_is_checked_failure(self):
        store = toy_store()
        with pytest.raises(AssignmentError):
            assign_relation([("X", "Y")], 1, store)

    def test_no_candidates_is_checked_failure(self):
        with pytest.raises(AssignmentError):
            assign_relation([], 1, toy_store())


class TestAssignAll:
    def test_greedy_assignment_uses_each_pair_once(self):
        store = toy_store()
        out = assign_all([(1, 0.95), (2, 0.85)],
                         [("E1", "E2"), ("E3", "E4")], store)
        assert out[0]["pair"] == ["E1", "E2"]
        assert out[1]["pair"] == ["E3", "E4"]

    def test_second_relation_takes_remaining_pair(self):
        store = toy_store()
        # both relations prefer (E1,E2)? R1 matches (E1,E2); once taken,
        # R1 again would fall back to (E3,E4)
        out = assign_all([(1, 0.95), (1, 0.85)],
                         [("E1", "E2"), ("E3", "E4")], store)
        assert out[0]["pair"] == ["E1", "E2"]
        assert out[1]["pair"] == ["E3", "E4"]
