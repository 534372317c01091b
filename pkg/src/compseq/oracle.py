"""Exhaustive-enumeration reference answers for small instances.

Everything here walks all M^T labelings, so it is only usable when that
count fits the enumeration budget; the point is to be obviously correct,
not fast.  The dynamic-programming modules are tested against these
functions on small random instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import ChainModel, CompressedSequence
from .vanilla import as_obs_array

_CHUNK = 65536


@dataclass(frozen=True)
class OracleBudget:
    """Cap on the number of labelings enumeration is allowed to visit."""

    max_enumerations: int = 10_000_000

    def __post_init__(self):
        if self.max_enumerations < 1:
            raise ValueError("enumeration budget must be positive")


class BudgetExceededError(RuntimeError):
    """The requested enumeration is larger than the budget allows."""


def _check_budget(m: int, t: int, budget: OracleBudget) -> int:
    total = m ** t
    if total > budget.max_enumerations:
        raise BudgetExceededError(
            f"enumeration needs M^T = {m}^{t} = {total} labelings, "
            f"budget allows {budget.max_enumerations}"
        )
    return total


def _score_chunk(model: ChainModel, x: np.ndarray, labelings: np.ndarray) -> np.ndarray:
    scores = model.init_logw[labelings[:, 0]] + model.emit_logw[labelings[:, 0], x[0]]
    for t in range(1, x.size):
        scores = scores + model.trans_logw[labelings[:, t - 1], labelings[:, t]]
        scores = scores + model.emit_logw[labelings[:, t], x[t]]
    return scores


def _iter_chunks(m: int, t: int):
    it = itertools.product(range(m), repeat=t)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.int64)


def enumerate_posterior(model: ChainModel, obs,
                        budget: OracleBudget = OracleBudget()) -> list[tuple[tuple[int, ...], float]]:
    """All labelings with their posterior probabilities, in lexicographic order."""
    x = as_obs_array(model, obs)
    m, t = model.num_states, x.size
    _check_budget(m, t, budget)
    all_labelings: list[np.ndarray] = []
    all_scores: list[np.ndarray] = []
    for block in _iter_chunks(m, t):
        all_labelings.append(block)
        all_scores.append(_score_chunk(model, x, block))
    scores = np.concatenate(all_scores)
    log_z = logsumexp(scores)
    if log_z == -np.inf:
        raise ValueError("observation sequence has zero total probability mass")
    probs = np.exp(scores - log_z)
    out = []
    i = 0
    for block in all_labelings:
        for row in block:
            out.append((tuple(int(v) for v in row), float(probs[i])))
            i += 1
    return out


def oracle_log_partition(model: ChainModel, obs,
                         budget: OracleBudget = OracleBudget()) -> float:
    """Log partition value by summing every labeling's weight."""
    x = as_obs_array(model, obs)
    m, t = model.num_states, x.size
    _check_budget(m, t, budget)
    parts = [logsumexp(_score_chunk(model, x, block)) for block in _iter_chunks(m, t)]
    return float(logsumexp(np.array(parts)))


def oracle_compressed_distribution(model: ChainModel, obs,
                                   budget: OracleBudget = OracleBudget()
                                   ) -> dict[CompressedSequence, float]:
    """Posterior over collapsed sequences, grouping labelings by collapsed form."""
    dist: dict[CompressedSequence, float] = {}
    for labeling, prob in enumerate_posterior(model, obs, budget):
        entries = [labeling[0]]
        for s in labeling[1:]:
            if s != entries[-1]:
                entries.append(s)
        key = CompressedSequence(tuple(entries))
        dist[key] = dist.get(key, 0.0) + prob
    return dist


def oracle_length_distribution(model: ChainModel, obs,
                               budget: OracleBudget = OracleBudget()) -> np.ndarray:
    """Posterior over collapsed lengths 1..T as an array indexed by length - 1."""
    x = as_obs_array(model, obs)
    probs = np.zeros(x.size)
    for key, p in oracle_compressed_distribution(model, obs, budget).items():
        probs[len(key) - 1] += p
    return probs


def oracle_compressed_marginal(model: ChainModel, obs, c: int, i: int,
                               budget: OracleBudget = OracleBudget()) -> np.ndarray:
    """Posterior over the state at position ``i`` (1-based) given collapsed length ``c``."""
    if not 1 <= i <= c:
        raise ValueError(f"position {i} outside 1..{c}")
    dist = oracle_compressed_distribution(model, obs, budget)
    row = np.zeros(model.num_states)
    total = 0.0
    for key, p in dist.items():
        if len(key) == c:
            row[key[i - 1]] += p
            total += p
    if total <= 0.0:
        raise ValueError(f"no probability mass at collapsed length {c}; marginal undefined")
    return row / total
