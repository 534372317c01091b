"""Polynomial-time inference over run-collapsed state sequences.

The object of interest is the sequence of distinct states in order of
appearance, after collapsing maximal runs: its posterior sums the
probabilities of every labeling that collapses to it.  All quantities
here come from one dynamic program over a height-by-state table whose
row index counts runs started so far.  A cell set restricts which
(row, state) combinations a path may occupy, which is enough to express
the total mass at a given collapsed length, the mass of one particular
collapsed sequence, and positional marginals under a fixed length.

Total cost for a height-c table is O(c * T * M^2) time and
O(c * T * M) space.
"""

from __future__ import annotations

import hashlib
import weakref
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _lattice
from .model import ChainModel, CompressedSequence, compress
from .vanilla import as_obs_array, emission_log_lattice

NEG_INF = float("-inf")

DEFAULT_MAX_HEIGHT = 128
"""Height bound used by decoding when the caller gives none: min(T, 128)."""


@dataclass(frozen=True)
class ConstraintSet:
    """Allowed (row, state) cells for a table run, rows numbered 1..height."""

    height: int
    cells: frozenset[tuple[int, int]]

    def __post_init__(self):
        height = int(self.height)
        object.__setattr__(self, "height", height)
        if height < 1:
            raise ValueError(f"table height must be >= 1, got {height}")
        cells = frozenset((int(r), int(j)) for r, j in self.cells)
        object.__setattr__(self, "cells", cells)
        for r, j in cells:
            if not 1 <= r <= height:
                raise ValueError(f"cell row {r} outside 1..{height}")
            if j < 0:
                raise ValueError(f"cell state {j} must be >= 0")

    @classmethod
    def full_table(cls, height: int, num_states: int) -> "ConstraintSet":
        """Every cell of every row: no restriction beyond the height bound."""
        cells = frozenset((r, j) for r in range(1, height + 1) for j in range(num_states))
        return cls(height=height, cells=cells)

    @classmethod
    def fixed_sequence(cls, entries) -> "ConstraintSet":
        """One allowed state per row, following a collapsed sequence."""
        if not isinstance(entries, CompressedSequence):
            entries = CompressedSequence(tuple(entries))
        cells = frozenset((r, j) for r, j in enumerate(entries, start=1))
        return cls(height=len(entries), cells=cells)

    @classmethod
    def fixed_cell(cls, height: int, row: int, state: int, num_states: int) -> "ConstraintSet":
        """Full table of the given height, except row ``row`` is pinned to ``state``."""
        if not 1 <= row <= height:
            raise ValueError(f"pinned row {row} outside 1..{height}")
        if not 0 <= state < num_states:
            raise ValueError(f"pinned state {state} out of range for {num_states} states")
        cells = set()
        for r in range(1, height + 1):
            if r == row:
                cells.add((r, state))
            else:
                cells.update((r, j) for j in range(num_states))
        return cls(height=height, cells=frozenset(cells))

    def to_mask(self, num_states: int) -> np.ndarray:
        """Boolean (height, M) array, True where a cell is allowed."""
        mask = np.zeros((self.height, num_states), dtype=np.bool_)
        for r, j in self.cells:
            if j >= num_states:
                raise ValueError(f"cell state {j} out of range for {num_states} states")
            mask[r - 1, j] = True
        return mask


@dataclass(frozen=True, eq=False)
class LatticeTable:
    """Full log-domain table of one run: ``log_cells[t, i, j]`` over 0-based t, i."""

    log_cells: np.ndarray
    height: int
    constraint: ConstraintSet

    def __post_init__(self):
        self.log_cells.setflags(write=False)


@dataclass(frozen=True, eq=False)
class LengthDistribution:
    """Posterior over collapsed lengths 1..c_max; ``probs[c - 1]`` is p(c | x)."""

    probs: np.ndarray
    log_Z: float

    def __post_init__(self):
        self.probs.setflags(write=False)

    @property
    def c_max(self) -> int:
        return int(self.probs.size)


class DecodeResult(NamedTuple):
    states: list[int]
    length: int
    length_dist: LengthDistribution


def _rows_logsumexp(table: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp of a 2-D log table; all ``-inf`` rows stay ``-inf``.

    Local rather than the scipy version because these reductions sit on
    the per-sequence hot path, where library call overhead is comparable
    to the table run itself at small heights.
    """
    high = table.max(axis=1)
    out = np.full(table.shape[0], NEG_INF)
    safe = np.isfinite(high)
    if np.any(safe):
        block = table[safe] - high[safe, None]
        out[safe] = high[safe] + np.log(np.exp(block).sum(axis=1))
    return out


def _flat_logsumexp(values: np.ndarray) -> float:
    return float(_rows_logsumexp(np.asarray(values).reshape(1, -1))[0])


class _KernelInputs(NamedTuple):
    """Pre-scaled linear-domain factors shared by every table run on (model, x)."""

    init_log: np.ndarray
    e0_log: np.ndarray
    e_lin: np.ndarray
    shifts: np.ndarray
    d_lin: np.ndarray
    w_excl: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.e_lin.shape


class _ModelEntry:
    """Per-model kernel factors plus a small memo of per-sequence inputs."""

    __slots__ = ("init_log", "max_l", "d_lin", "w_excl", "inputs_memo")

    def __init__(self, model: ChainModel):
        trans = model.trans_logw
        finite = trans[np.isfinite(trans)]
        self.max_l = float(finite.max()) if finite.size else 0.0
        w = np.exp(trans - self.max_l)
        self.d_lin = np.ascontiguousarray(np.diag(w).copy())
        self.w_excl = np.ascontiguousarray(w)
        np.fill_diagonal(self.w_excl, 0.0)
        self.init_log = np.ascontiguousarray(model.init_logw)
        for arr in (self.d_lin, self.w_excl, self.init_log):
            arr.setflags(write=False)
        self.inputs_memo: dict[bytes, _KernelInputs] = {}


_MODEL_ENTRIES: "weakref.WeakKeyDictionary[ChainModel, _ModelEntry]" = weakref.WeakKeyDictionary()

_INPUTS_MEMO_SIZE = 8


def _kernel_inputs(model: ChainModel, obs) -> _KernelInputs:
    """Pre-scaled kernel inputs for (model, obs), memoized for repeat calls.

    Models are frozen with read-only arrays, so a weak dictionary keyed by
    object identity holds the scaled transition factors for each model's
    lifetime.  Per-sequence factors are memoized under a digest of the
    validated index array: callers that run several table passes over one
    sequence (decoding does, and so does any constraint sweep) pay the
    emission scaling once.  Keying by content means an in-place edit of a
    caller's array changes the key, so stale entries can never be served.
    """
    entry = _MODEL_ENTRIES.get(model)
    if entry is None:
        entry = _ModelEntry(model)
        _MODEL_ENTRIES[model] = entry
    x = as_obs_array(model, obs)
    key = hashlib.blake2b(x.tobytes(), digest_size=16).digest()
    ki = entry.inputs_memo.get(key)
    if ki is not None:
        return ki
    e_log = np.ascontiguousarray(model.emit_logw[:, x].T)
    # Emission weights are scaled into [0, 1] by per-step maxima here, in
    # one vectorized pass, so the kernel's time loop carries no fixed
    # per-step transcendental work.
    emax = e_log.max(axis=1)
    emax = np.where(np.isfinite(emax), emax, 0.0)
    e_lin = np.exp(e_log - emax[:, None])
    shifts = entry.max_l + emax
    e0_log = np.ascontiguousarray(e_log[0])
    for arr in (e_lin, shifts, e0_log):
        arr.setflags(write=False)
    ki = _KernelInputs(
        init_log=entry.init_log,
        e0_log=e0_log,
        e_lin=e_lin,
        shifts=shifts,
        d_lin=entry.d_lin,
        w_excl=entry.w_excl,
    )
    if len(entry.inputs_memo) >= _INPUTS_MEMO_SIZE:
        entry.inputs_memo.pop(next(iter(entry.inputs_memo)))
    entry.inputs_memo[key] = ki
    return ki


def compressed_sequence_log_lattice(model: ChainModel, obs, entries) -> float:
    """Log total weight of all length-T labelings collapsing to ``entries``.

    The run recursion keeps one accumulator per position of the collapsed
    sequence: at each time step a path either dwells in its current run
    or opens the next one.  A collapsed sequence longer than T has no
    preimage and scores ``-inf``.
    """
    if not isinstance(entries, CompressedSequence):
        entries = CompressedSequence(tuple(entries))
    e = emission_log_lattice(model, obs)
    t_len = e.shape[0]
    s = np.fromiter(entries, dtype=np.int64)
    if s.max() >= model.num_states:
        raise ValueError(
            f"state index {int(s.max())} out of range for {model.num_states} states"
        )
    c = len(s)
    if c > t_len:
        return NEG_INF
    prev = np.full(c, NEG_INF)
    prev[0] = model.init_logw[s[0]] + e[0, s[0]]
    stay_w = model.trans_logw[s, s]
    move_w = model.trans_logw[s[:-1], s[1:]] if c > 1 else np.empty(0)
    for t in range(1, t_len):
        stay = prev + stay_w
        new = stay.copy()
        if c > 1:
            new[1:] = np.logaddexp(stay[1:], prev[:-1] + move_w)
        prev = new + e[t, s]
    return float(prev[-1])


def table_forward(model: ChainModel, obs, constraint: ConstraintSet) -> LatticeTable:
    """Run the height-by-state forward recursion under a cell set.

    Cell (i, j) at time t accumulates the weight of all prefixes whose
    collapsed form has exactly i entries and currently occupies state j,
    visiting only allowed cells.  Cells outside the set stay ``-inf`` at
    every time step.
    """
    ki = _kernel_inputs(model, obs)
    t_len, m = ki.shape
    if constraint.height > t_len:
        raise ValueError(
            f"table height {constraint.height} exceeds sequence length {t_len}"
        )
    mask = constraint.to_mask(m)
    out = np.empty((t_len, constraint.height, m))
    _lattice.run_table_full(ki.init_log, ki.e0_log, ki.e_lin, ki.shifts,
                            ki.d_lin, ki.w_excl, mask, out)
    return LatticeTable(log_cells=out, height=constraint.height, constraint=constraint)


def _final_slices(model: ChainModel, obs, masks: np.ndarray,
                  ki: _KernelInputs | None = None) -> np.ndarray:
    """Final-time log table slices for a batch of masks, one run each."""
    if ki is None:
        ki = _kernel_inputs(model, obs)
    masks = np.ascontiguousarray(masks, dtype=np.bool_)
    out = np.empty(masks.shape)
    _lattice.run_table_final_batch(ki.init_log, ki.e0_log, ki.e_lin, ki.shifts,
                                   ki.d_lin, ki.w_excl, masks, out)
    return out


def constraint_log_Z(model: ChainModel, obs, constraint: ConstraintSet,
                     target_height: int | None = None) -> float:
    """Log mass of paths ending at ``target_height`` runs under the cell set."""
    height = constraint.height if target_height is None else int(target_height)
    if not 1 <= height <= constraint.height:
        raise ValueError(
            f"target height {height} outside 1..{constraint.height}"
        )
    final = _final_slices(model, obs, constraint.to_mask(model.num_states)[None, :, :])[0]
    return _flat_logsumexp(final[height - 1])


def log_partition_via_table(model: ChainModel, obs) -> float:
    """Log partition value from a full height-T run: sum of every row's mass."""
    ki = _kernel_inputs(model, obs)
    t_len, m = ki.shape
    masks = np.ones((1, t_len, m), dtype=np.bool_)
    final = _final_slices(model, obs, masks, ki=ki)[0]
    return _flat_logsumexp(final)


def length_distribution(model: ChainModel, obs, c_max: int,
                        mode: str = "exact") -> LengthDistribution:
    """Posterior over collapsed lengths 1..c_max.

    In ``exact`` mode the run uses height T regardless of ``c_max``, so
    the normalizer is the true partition value; any mass at lengths above
    ``c_max`` is simply not reported.  In ``truncated`` mode the run uses
    height ``c_max`` and normalizes over the reported lengths only, which
    is cheaper when ``c_max`` is well below T but assumes the discarded
    tail is negligible.
    """
    ki = _kernel_inputs(model, obs)
    t_len, m = ki.shape
    c_max = int(c_max)
    if not 1 <= c_max <= t_len:
        raise ValueError(f"c_max must be in 1..{t_len}, got {c_max}")
    if mode not in ("exact", "truncated"):
        raise ValueError(f"unknown normalization mode {mode!r}")
    height = t_len if mode == "exact" else c_max
    masks = np.ones((1, height, m), dtype=np.bool_)
    final = _final_slices(model, obs, masks, ki=ki)[0]
    # One shared shift is enough here: cells more than ~700 nats below the
    # peak underflow to exactly zero, and their true contribution to both
    # the row masses and the normalizer is far below float64 resolution.
    top = final.max()
    if top == NEG_INF:
        raise ValueError("observation sequence has zero total probability mass")
    row_mass = np.exp(final - top).sum(axis=1)
    z = row_mass.sum()
    probs = row_mass[:c_max] / z
    return LengthDistribution(probs=probs, log_Z=float(top + np.log(z)))


def _marginal_masks(height: int, num_states: int, positions: Sequence[int]) -> np.ndarray:
    """One pinned-row mask per (position, state) pair, in state-major order."""
    base = np.ones((height, num_states), dtype=np.bool_)
    masks = np.empty((len(positions) * num_states, height, num_states), dtype=np.bool_)
    b = 0
    for i in positions:
        for j in range(num_states):
            mk = base.copy()
            mk[i - 1, :] = False
            mk[i - 1, j] = True
            masks[b] = mk
            b += 1
    return masks


def _marginal_rows(model: ChainModel, obs, c: int, positions: Sequence[int]) -> np.ndarray:
    """Positional posteriors p(entry_i = j | x, length c), one row per position.

    Each (position, state) pair gets its own table run whose cell set is
    the full height-c table with that one row pinned; the runs share one
    batched kernel call.
    """
    m = model.num_states
    masks = _marginal_masks(c, m, positions)
    finals = _final_slices(model, obs, masks)
    z = _rows_logsumexp(finals[:, c - 1, :]).reshape(len(positions), m)
    rows = np.empty((len(positions), m))
    for r, logs in enumerate(z):
        total = _flat_logsumexp(logs)
        if total == NEG_INF:
            raise ValueError(
                f"no probability mass at collapsed length {c}; marginal undefined"
            )
        rows[r] = np.exp(logs - total)
    return rows


def compressed_marginal(model: ChainModel, obs, c: int, i: int, j: int) -> float:
    """Posterior probability that entry ``i`` (1-based) is state ``j`` given length ``c``."""
    t_len = len(emission_log_lattice(model, obs))
    if not 1 <= c <= t_len:
        raise ValueError(f"collapsed length {c} outside 1..{t_len}")
    if not 1 <= i <= c:
        raise ValueError(f"position {i} outside 1..{c}")
    if not 0 <= j < model.num_states:
        raise ValueError(f"state index {j} out of range for {model.num_states} states")
    row = _marginal_rows(model, obs, c, [i])[0]
    return float(row[j])


def compressed_decode(model: ChainModel, obs, c_max: int | None = None,
                      mode: str = "exact") -> DecodeResult:
    """Decode a collapsed sequence: most probable length, then per-position argmax.

    Ties prefer the smaller length and the lower state index.  The
    positional argmaxes are taken independently, so the output can
    repeat a state across adjacent positions; it is returned verbatim.
    """
    t_len = len(emission_log_lattice(model, obs))
    if c_max is None:
        c_max = min(t_len, DEFAULT_MAX_HEIGHT)
    dist = length_distribution(model, obs, c_max, mode=mode)
    c_hat = int(np.argmax(dist.probs)) + 1
    rows = _marginal_rows(model, obs, c_hat, list(range(1, c_hat + 1)))
    states = [int(np.argmax(row)) for row in rows]
    return DecodeResult(states=states, length=c_hat, length_dist=dist)
