"""The brute-force enumerator that everything else is checked against."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import logsumexp

from compseq import (BudgetExceededError, CompressedSequence, OracleBudget,
                     compress, enumerate_posterior, forward_backward,
                     oracle_compressed_distribution, oracle_compressed_marginal,
                     oracle_length_distribution, oracle_log_partition,
                     sequence_log_score)
from compseq.model import LabeledSequence
from helpers import (permute_model, random_instance, random_model,
                     uniform_model)


# ---------------------------------------------------------------------------
# enumerate_posterior

def test_single_state_posterior_is_certain():
    rng = np.random.default_rng(60)
    model = random_model(rng, 1, 2)
    items = enumerate_posterior(model, np.array([0, 1, 0, 0, 1]))
    assert len(items) == 1
    labeling, prob = items[0]
    assert labeling == (0, 0, 0, 0, 0)
    assert prob == pytest.approx(1.0, abs=1e-12)


def test_uniform_posterior_is_flat():
    model = uniform_model(2, 2)
    items = enumerate_posterior(model, np.array([0, 1]))
    assert [lab for lab, _ in items] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    for _, prob in items:
        assert prob == pytest.approx(0.25, abs=1e-12)


def test_posterior_sums_to_one_and_matches_direct_scores():
    rng = np.random.default_rng(61)
    model, obs = random_instance(rng, 3, 5)
    items = enumerate_posterior(model, obs)
    assert len(items) == 3 ** 5
    total = sum(prob for _, prob in items)
    assert total == pytest.approx(1.0, abs=1e-12)
    log_z = oracle_log_partition(model, obs)
    for labeling, prob in items[:50]:
        want = math.exp(sequence_log_score(
            model, LabeledSequence(obs=obs, states=np.array(labeling))) - log_z)
        assert prob == pytest.approx(want, abs=1e-12)


def test_posterior_listing_is_lexicographic():
    rng = np.random.default_rng(62)
    model, obs = random_instance(rng, 3, 4)
    items = enumerate_posterior(model, obs)
    labelings = [lab for lab, _ in items]
    assert labelings == sorted(labelings)


def test_posterior_rejects_zero_mass():
    model = uniform_model(2, 2)
    emit = np.full((2, 2), -np.inf)
    blocked = type(model)(states=model.states, alphabet=model.alphabet,
                          init_logw=model.init_logw, trans_logw=model.trans_logw,
                          emit_logw=emit)
    with pytest.raises(ValueError, match="zero total probability"):
        enumerate_posterior(blocked, np.array([0, 1]))


# ---------------------------------------------------------------------------
# budget

def test_default_budget_blocks_infeasible_enumerations():
    rng = np.random.default_rng(63)
    model = random_model(rng, 4, 2)
    obs = np.zeros(12, dtype=np.int64)
    with pytest.raises(BudgetExceededError, match=r"4\^12"):
        enumerate_posterior(model, obs)


def test_custom_budget_is_respected_both_ways():
    model = uniform_model(2, 2)
    obs = np.array([0, 1, 0])
    tight = OracleBudget(max_enumerations=7)
    with pytest.raises(BudgetExceededError):
        enumerate_posterior(model, obs, budget=tight)
    roomy = OracleBudget(max_enumerations=8)
    assert len(enumerate_posterior(model, obs, budget=roomy)) == 8


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        OracleBudget(max_enumerations=0)
    with pytest.raises(ValueError):
        OracleBudget(max_enumerations=-3)


# ---------------------------------------------------------------------------
# collapsed-posterior views

def test_uniform_compressed_distribution_counts_preimages():
    model = uniform_model(2, 2)
    dist = oracle_compressed_distribution(model, np.array([0, 1, 0]))
    want = {
        CompressedSequence((0,)): 1 / 8,
        CompressedSequence((1,)): 1 / 8,
        CompressedSequence((0, 1)): 2 / 8,
        CompressedSequence((1, 0)): 2 / 8,
        CompressedSequence((0, 1, 0)): 1 / 8,
        CompressedSequence((1, 0, 1)): 1 / 8,
    }
    assert set(dist) == set(want)
    for key, prob in want.items():
        assert dist[key] == pytest.approx(prob, abs=1e-12)


def test_compressed_distribution_groups_the_posterior():
    rng = np.random.default_rng(64)
    model, obs = random_instance(rng, 3, 5)
    dist = oracle_compressed_distribution(model, obs)
    regrouped: dict[CompressedSequence, float] = {}
    for labeling, prob in enumerate_posterior(model, obs):
        key = compress(np.array(labeling))
        regrouped[key] = regrouped.get(key, 0.0) + prob
    assert set(dist) == set(regrouped)
    for key, prob in regrouped.items():
        assert dist[key] == pytest.approx(prob, abs=1e-12)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)


def test_length_distribution_collects_by_collapsed_length():
    model = uniform_model(2, 2)
    probs = oracle_length_distribution(model, np.array([0, 1, 0]))
    np.testing.assert_allclose(probs, [0.25, 0.5, 0.25], atol=1e-12)
    rng = np.random.default_rng(65)
    model, obs = random_instance(rng, 2, 6)
    probs = oracle_length_distribution(model, obs)
    assert probs.shape == (6,)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    dist = oracle_compressed_distribution(model, obs)
    for c in range(1, 7):
        want = sum(p for key, p in dist.items() if len(key) == c)
        assert probs[c - 1] == pytest.approx(want, abs=1e-12)


def test_oracle_marginal_single_state():
    rng = np.random.default_rng(66)
    model = random_model(rng, 1, 2)
    row = oracle_compressed_marginal(model, np.array([0, 1, 0]), c=1, i=1)
    np.testing.assert_allclose(row, [1.0], atol=1e-12)


def test_oracle_marginal_uniform_symmetry():
    model = uniform_model(2, 2)
    obs = np.array([0, 1, 0])
    row = oracle_compressed_marginal(model, obs, c=2, i=2)
    np.testing.assert_allclose(row, [0.5, 0.5], atol=1e-12)


def test_oracle_marginal_rejects_massless_lengths():
    trans = np.zeros((2, 2))
    trans[0, 0] = -np.inf
    trans[1, 1] = -np.inf
    model = uniform_model(2, 2)
    blocked = type(model)(states=model.states, alphabet=model.alphabet,
                          init_logw=model.init_logw, trans_logw=trans,
                          emit_logw=model.emit_logw)
    with pytest.raises(ValueError, match="no probability mass"):
        oracle_compressed_marginal(blocked, np.array([0, 1, 0]), c=1, i=1)
    with pytest.raises(ValueError, match="position"):
        oracle_compressed_marginal(model, np.array([0, 1]), c=1, i=2)


# ---------------------------------------------------------------------------
# cross-checks

def test_oracle_partition_matches_forward_backward():
    rng = np.random.default_rng(67)
    for _ in range(6):
        model, obs = random_instance(rng, 3, 6)
        assert oracle_log_partition(model, obs) == pytest.approx(
            forward_backward(model, obs).log_Z, abs=1e-9)


def test_oracle_views_are_relabeling_invariant():
    rng = np.random.default_rng(68)
    model, obs = random_instance(rng, 3, 5)
    perm = np.array([2, 0, 1])
    inverse = np.argsort(perm)
    shuffled = permute_model(model, perm)
    dist = oracle_compressed_distribution(model, obs)
    shuffled_dist = oracle_compressed_distribution(shuffled, obs)
    for key, prob in dist.items():
        mapped = CompressedSequence(tuple(int(inverse[s]) for s in key))
        assert shuffled_dist[mapped] == pytest.approx(prob, abs=1e-12)
    np.testing.assert_allclose(oracle_length_distribution(model, obs),
                               oracle_length_distribution(shuffled, obs),
                               atol=1e-12)


def test_oracle_log_partition_equals_logsumexp_of_scores():
    rng = np.random.default_rng(69)
    model, obs = random_instance(rng, 2, 5)
    scores = [sequence_log_score(model, LabeledSequence(obs=obs, states=np.array(lab)))
              for lab, _ in enumerate_posterior(model, obs)]
    assert oracle_log_partition(model, obs) == pytest.approx(
        float(logsumexp(scores)), abs=1e-9)
