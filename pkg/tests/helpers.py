"""Shared test utilities: model builders and small-instance enumeration."""

from __future__ import annotations

import itertools

import numpy as np

from compseq import ChainModel, ObservationAlphabet, StateSpace


def state_space(m: int) -> StateSpace:
    return StateSpace(tuple(f"s{i}" for i in range(m)))


def alphabet(v: int) -> ObservationAlphabet:
    return ObservationAlphabet(tuple(f"o{k}" for k in range(v)))


def uniform_model(m: int, v: int) -> ChainModel:
    """All-zero log-weights: every labeling has identical score."""
    return ChainModel(
        states=state_space(m),
        alphabet=alphabet(v),
        init_logw=np.zeros(m),
        trans_logw=np.zeros((m, m)),
        emit_logw=np.zeros((m, v)),
    )


def random_model(rng: np.random.Generator, m: int, v: int,
                 low: float = -2.0, high: float = 2.0) -> ChainModel:
    return ChainModel(
        states=state_space(m),
        alphabet=alphabet(v),
        init_logw=rng.uniform(low, high, m),
        trans_logw=rng.uniform(low, high, (m, m)),
        emit_logw=rng.uniform(low, high, (m, v)),
    )


def random_instance(rng: np.random.Generator, m: int, t: int):
    """A random model plus a random observation sequence of length t."""
    v = int(rng.integers(2, 4))
    model = random_model(rng, m, v)
    obs = rng.integers(0, v, size=t).astype(np.int64)
    return model, obs


def all_compressed_sequences(m: int, c: int):
    """Every adjacent-distinct index sequence of length c over m states."""
    if c == 1:
        yield from ((j,) for j in range(m))
        return
    for first in range(m):
        stacks = [(first,)]
        while stacks:
            prefix = stacks.pop()
            if len(prefix) == c:
                yield prefix
                continue
            for j in range(m):
                if j != prefix[-1]:
                    stacks.append(prefix + (j,))


def permute_model(model: ChainModel, perm: np.ndarray) -> ChainModel:
    """Relabel states by ``new_index = position of old index in perm``.

    ``perm[a]`` is the old state stored at new index ``a``, so table rows
    and columns are gathered by ``perm``.
    """
    return ChainModel(
        states=StateSpace(tuple(model.states.labels[p] for p in perm)),
        alphabet=model.alphabet,
        init_logw=model.init_logw[perm],
        trans_logw=model.trans_logw[np.ix_(perm, perm)],
        emit_logw=model.emit_logw[perm, :],
    )


def enumerate_scores(model: ChainModel, obs: np.ndarray):
    """(labeling, unnormalized log score) for every labeling, tiny instances only."""
    from compseq import LabeledSequence, sequence_log_score

    m, t = model.num_states, len(obs)
    for y in itertools.product(range(m), repeat=t):
        seq = LabeledSequence(obs=obs, states=np.array(y, dtype=np.int64))
        yield y, sequence_log_score(model, seq)
