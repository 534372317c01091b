"""Exact-match and edit-distance scoring."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from compseq import (CompressedSequence, EvaluationReport, edit_distance, eds,
                     exact_score)

short_seqs = st.lists(st.integers(min_value=0, max_value=3), min_size=0, max_size=12)


# ---------------------------------------------------------------------------
# edit distance

def test_edit_distance_known_cases():
    assert edit_distance("sjwr", "sjwr") == 0
    assert edit_distance("sjwr", "sjr") == 1
    assert edit_distance("sjwr", "wjsr") == 2
    assert edit_distance("abc", "") == 3
    assert edit_distance((0, 1, 0), (1, 0, 1)) == 2
    assert edit_distance(CompressedSequence((0, 1)), (0, 1)) == 0
    assert edit_distance((0, 1, 2, 1), (0, 2, 1)) == 1


@given(short_seqs, short_seqs)
def test_edit_distance_is_symmetric(a, b):
    assert edit_distance(a, b) == edit_distance(b, a)


@given(short_seqs, short_seqs)
def test_edit_distance_bounds(a, b):
    d = edit_distance(a, b)
    assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))
    assert (d == 0) == (list(a) == list(b))


@given(short_seqs, short_seqs, short_seqs)
def test_edit_distance_triangle_inequality(a, b, c):
    assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


# ---------------------------------------------------------------------------
# exact score

def test_exact_score_counts_whole_sequence_matches():
    truths = [(0, 1), (1, 0), (0,)]
    assert exact_score(truths, truths) == 100.0
    assert exact_score([(0, 1), (1, 0), (1,)], truths) == pytest.approx(200 / 3)
    assert exact_score([(1, 0), (0, 1), (1,)], truths) == 0.0
    # a length mismatch is a miss even when one is a prefix of the other
    assert exact_score([(0, 1, 0)], [(0, 1)]) == 0.0


def test_exact_score_mixes_wrapper_and_plain_sequences():
    preds = [CompressedSequence((0, 1)), (1, 0)]
    truths = [(0, 1), CompressedSequence((1, 0))]
    assert exact_score(preds, truths) == 100.0


def test_scoring_rejects_mismatched_or_empty_lists():
    with pytest.raises(ValueError, match="2 predictions for 1"):
        exact_score([(0,), (1,)], [(0,)])
    with pytest.raises(ValueError, match="empty prediction list"):
        exact_score([], [])
    with pytest.raises(ValueError):
        eds([], [])


# ---------------------------------------------------------------------------
# edit-distance score

def test_eds_identical_corpora_score_100():
    truths = [(0, 1, 0), (1,), (2, 0)]
    score, report = eds(truths, truths)
    assert score == 100.0
    assert report.exact_score == 100.0
    assert report.per_sequence == ((0, 3), (0, 1), (0, 2))


def test_eds_mixed_corpus_example():
    preds = ["sjwr", "sjr"]
    truths = ["sjwr", "sjwr"]
    score, report = eds(preds, truths)
    assert score == pytest.approx(87.5, abs=1e-12)
    assert report.exact_score == 50.0
    assert report.per_sequence == ((0, 4), (1, 4))


def test_eds_disjoint_equal_length_sequences_score_zero():
    score, _ = eds([(0, 0)], [(1, 1)])
    assert score == 0.0


def test_eds_rejects_empty_sequences():
    with pytest.raises(ValueError, match="empty sequence"):
        eds([()], [(0,)])
    with pytest.raises(ValueError, match="empty sequence"):
        eds([(0,)], [()])


def test_eds_report_is_recomputable():
    preds = [(0, 1), (1, 0, 1), (2,), (0, 1, 2, 0)]
    truths = [(0, 1), (1, 1, 0), (2, 2), (0, 2, 0)]
    score, report = eds(preds, truths)
    assert isinstance(report, EvaluationReport)
    rebuilt = 100.0 - 100.0 * sum(d / n for d, n in report.per_sequence) / len(
        report.per_sequence)
    assert score == pytest.approx(rebuilt, abs=1e-12)
    assert report.eds == score


@given(st.lists(st.lists(st.integers(0, 2), min_size=1, max_size=6),
                min_size=1, max_size=8))
def test_eds_of_matching_corpora_is_always_100(seqs):
    score, report = eds(seqs, seqs)
    assert score == 100.0
    assert report.exact_score == 100.0


@given(st.lists(st.tuples(st.lists(st.integers(0, 2), min_size=1, max_size=6),
                          st.lists(st.integers(0, 2), min_size=1, max_size=6)),
                min_size=1, max_size=8))
def test_eds_stays_within_bounds(pairs):
    preds = [p for p, _ in pairs]
    truths = [t for _, t in pairs]
    score, report = eds(preds, truths)
    assert 0.0 <= score <= 100.0
    assert 0.0 <= report.exact_score <= 100.0
    if report.exact_score == 100.0:
        assert score == 100.0


def test_eds_is_invariant_under_relabeling():
    relabel = {0: 2, 1: 0, 2: 1}
    preds = [(0, 1), (2, 0, 1)]
    truths = [(0, 2), (2, 1)]
    mapped_preds = [tuple(relabel[s] for s in p) for p in preds]
    mapped_truths = [tuple(relabel[s] for s in t) for t in truths]
    assert eds(preds, truths)[0] == pytest.approx(
        eds(mapped_preds, mapped_truths)[0], abs=1e-12)
