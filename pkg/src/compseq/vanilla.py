"""Whole-sequence decoding and marginals by the standard chain recursions.

Everything here runs in the log domain over a T x M lattice: best-path
decoding with deterministic tie-breaking, the forward-backward pass, and
a constrained variant of the forward pass that pins chosen time steps to
chosen states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .model import ChainModel, CompressedSequence, LabeledSequence, compress

NEG_INF = float("-inf")


def as_obs_array(model: ChainModel, obs) -> np.ndarray:
    """Normalize an observation argument to a validated index array."""
    if isinstance(obs, LabeledSequence):
        arr = obs.obs
    else:
        arr = np.asarray(obs)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("obs must be a non-empty 1-d index sequence")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"obs must be integer indices, got dtype {arr.dtype}")
    if arr.min() < 0 or arr.max() >= model.num_symbols:
        bad = int(arr.min()) if arr.min() < 0 else int(arr.max())
        raise ValueError(
            f"observation index {bad} out of range for {model.num_symbols} symbols"
        )
    return np.asarray(arr, dtype=np.int64)


def emission_log_lattice(model: ChainModel, obs) -> np.ndarray:
    """Per-step emission log-weights as a (T, M) table."""
    x = as_obs_array(model, obs)
    return np.ascontiguousarray(model.emit_logw[:, x].T)


@dataclass(frozen=True, eq=False)
class ForwardBackwardResult:
    """Forward and backward log sums plus the log partition value."""

    log_alpha: np.ndarray
    log_beta: np.ndarray
    log_Z: float

    def __post_init__(self):
        self.log_alpha.setflags(write=False)
        self.log_beta.setflags(write=False)


@dataclass(frozen=True)
class ConstraintList:
    """Time-ordered state pins ``(t, j)`` with 1-based, strictly increasing t."""

    pins: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pins = tuple((int(t), int(j)) for t, j in self.pins)
        object.__setattr__(self, "pins", pins)
        for t, j in pins:
            if t < 1:
                raise ValueError(f"constraint time {t} must be >= 1")
            if j < 0:
                raise ValueError(f"constraint state {j} must be >= 0")
        times = [t for t, _ in pins]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("constraint times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.pins)

    def __iter__(self):
        return iter(self.pins)


def _coerce_pins(constraints) -> ConstraintList:
    if isinstance(constraints, ConstraintList):
        return constraints
    return ConstraintList(tuple((t, j) for t, j in constraints))


def _pin_row(row: np.ndarray, j: int) -> np.ndarray:
    out = np.full_like(row, NEG_INF)
    out[j] = row[j]
    return out


def _forward_pass(model: ChainModel, e: np.ndarray, pins: dict[int, int]) -> np.ndarray:
    t_len, m = e.shape
    log_alpha = np.empty((t_len, m))
    row = model.init_logw + e[0]
    if 1 in pins:
        row = _pin_row(row, pins[1])
    log_alpha[0] = row
    for t in range(1, t_len):
        row = logsumexp(row[:, None] + model.trans_logw, axis=0) + e[t]
        if t + 1 in pins:
            row = _pin_row(row, pins[t + 1])
        log_alpha[t] = row
    return log_alpha


def viterbi(model: ChainModel, obs) -> tuple[np.ndarray, float]:
    """Best-scoring state path and its log score.

    Ties are broken toward the lowest state index, both when choosing the
    final state and at every backtracking step.
    """
    e = emission_log_lattice(model, obs)
    t_len, m = e.shape
    delta = model.init_logw + e[0]
    back = np.zeros((t_len, m), dtype=np.int64)
    for t in range(1, t_len):
        scores = delta[:, None] + model.trans_logw
        back[t] = np.argmax(scores, axis=0)
        delta = scores[back[t], np.arange(m)] + e[t]
    last = int(np.argmax(delta))
    log_score = float(delta[last])
    path = np.empty(t_len, dtype=np.int64)
    path[-1] = last
    for t in range(t_len - 1, 0, -1):
        last = int(back[t, last])
        path[t - 1] = last
    return path, log_score


def forward_backward(model: ChainModel, obs) -> ForwardBackwardResult:
    """Forward and backward log-sum lattices and the log partition value."""
    e = emission_log_lattice(model, obs)
    t_len, m = e.shape
    log_alpha = _forward_pass(model, e, {})
    log_beta = np.empty((t_len, m))
    log_beta[-1] = 0.0
    for t in range(t_len - 2, -1, -1):
        log_beta[t] = logsumexp(
            model.trans_logw + (e[t + 1] + log_beta[t + 1])[None, :], axis=1
        )
    log_z = float(logsumexp(log_alpha[-1]))
    return ForwardBackwardResult(log_alpha=log_alpha, log_beta=log_beta, log_Z=log_z)


def posterior_marginals(model: ChainModel, obs) -> np.ndarray:
    """Per-step posterior state probabilities as a (T, M) table."""
    fb = forward_backward(model, obs)
    if fb.log_Z == NEG_INF:
        raise ValueError("observation sequence has zero total probability mass")
    return np.exp(fb.log_alpha + fb.log_beta - fb.log_Z)


def marginal_decode(model: ChainModel, obs) -> np.ndarray:
    """Per-step argmax of the posterior marginals (lowest index on ties)."""
    return np.argmax(posterior_marginals(model, obs), axis=1).astype(np.int64)


def constrained_log_Z(model: ChainModel, obs, constraints) -> float:
    """Log total weight of all paths passing through the pinned states.

    With no constraints this equals the unconstrained log partition value;
    with a pin at every time step it equals the log score of that single
    labeling.  The ratio to the unconstrained value is the posterior
    probability of the pinned event.
    """
    e = emission_log_lattice(model, obs)
    t_len, m = e.shape
    pins = _coerce_pins(constraints)
    pin_map: dict[int, int] = {}
    for t, j in pins:
        if t > t_len:
            raise ValueError(f"constraint time {t} exceeds sequence length {t_len}")
        if j >= m:
            raise ValueError(f"constraint state {j} out of range for {m} states")
        pin_map[t] = j
    log_alpha = _forward_pass(model, e, pin_map)
    return float(logsumexp(log_alpha[-1]))


def baseline_compressed(model: ChainModel, obs, method: str = "joint") -> CompressedSequence:
    """Run-collapse a per-sequence decode: 'joint' (best path) or 'marginal'."""
    if method == "joint":
        states, _ = viterbi(model, obs)
    elif method == "marginal":
        states = marginal_decode(model, obs)
    else:
        raise ValueError(f"unknown baseline method {method!r}")
    return compress(states)
