"""Log-domain chain models over discrete state and observation spaces.

A model is a triple of log-weight tables (initial, transition, emission)
over a fixed state space and observation alphabet.  Entries may be any
finite float, or ``-inf`` to forbid an event outright; ``+inf`` and NaN
are rejected.  All other modules consume states and observations as
integer indices; string labels only matter at the file-format boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

START = -1
"""Sentinel passed as the previous state for the first time step."""

FORMAT_VERSION = 1


def _readonly(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpace:
    """Ordered collection of distinct state labels.

    States are referenced by index ``0..size-1`` throughout the package;
    the labels are used when reading and writing files.
    """

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if not self.labels:
            raise ValueError("state space must contain at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("state labels must be unique")

    @property
    def size(self) -> int:
        return len(self.labels)

    @cached_property
    def _lookup(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def index(self, label: str) -> int:
        try:
            return self._lookup[label]
        except KeyError:
            raise ValueError(f"unknown state label {label!r}") from None


@dataclass(frozen=True)
class ObservationAlphabet:
    """Ordered collection of distinct observation symbols."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))
        if not self.symbols:
            raise ValueError("alphabet must contain at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("observation symbols must be unique")

    @property
    def size(self) -> int:
        return len(self.symbols)

    @cached_property
    def _lookup(self) -> dict[str, int]:
        return {sym: i for i, sym in enumerate(self.symbols)}

    def index(self, symbol: str) -> int:
        try:
            return self._lookup[symbol]
        except KeyError:
            raise ValueError(f"unknown observation symbol {symbol!r}") from None


def _check_table(name: str, table: np.ndarray, shape: tuple[int, ...]) -> None:
    if table.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {table.shape}")
    if np.isnan(table).any():
        raise ValueError(f"{name} contains NaN")
    if np.isposinf(table).any():
        raise ValueError(f"{name} contains +inf; only finite values or -inf are allowed")


@dataclass(frozen=True, eq=False)
class ChainModel:
    """Tabular log-weight parameterization of a linear-chain model.

    ``init_logw[j]`` scores starting in state ``j``, ``trans_logw[i, j]``
    scores moving from state ``i`` to state ``j``, and ``emit_logw[j, k]``
    scores observing symbol ``k`` while in state ``j``.  The tables are
    free log-weights, not necessarily normalized.
    """

    states: StateSpace
    alphabet: ObservationAlphabet
    init_logw: np.ndarray
    trans_logw: np.ndarray
    emit_logw: np.ndarray

    def __post_init__(self):
        m, v = self.states.size, self.alphabet.size
        init = _readonly(self.init_logw)
        trans = _readonly(self.trans_logw)
        emit = _readonly(self.emit_logw)
        _check_table("init_logw", init, (m,))
        _check_table("trans_logw", trans, (m, m))
        _check_table("emit_logw", emit, (m, v))
        object.__setattr__(self, "init_logw", init)
        object.__setattr__(self, "trans_logw", trans)
        object.__setattr__(self, "emit_logw", emit)

    @property
    def num_states(self) -> int:
        return self.states.size

    @property
    def num_symbols(self) -> int:
        return self.alphabet.size


@dataclass(frozen=True, eq=False)
class LabeledSequence:
    """Observation index sequence, optionally with aligned state indices."""

    obs: np.ndarray
    states: np.ndarray | None = None

    def __post_init__(self):
        obs = _readonly(self.obs, dtype=np.int64)
        if obs.ndim != 1 or obs.size == 0:
            raise ValueError("obs must be a non-empty 1-d index sequence")
        if (obs < 0).any():
            raise ValueError("observation indices must be non-negative")
        object.__setattr__(self, "obs", obs)
        if self.states is not None:
            states = _readonly(self.states, dtype=np.int64)
            if states.shape != obs.shape:
                raise ValueError("states must align one-to-one with obs")
            if (states < 0).any():
                raise ValueError("state indices must be non-negative")
            object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return int(self.obs.size)


@dataclass(frozen=True)
class CompressedSequence:
    """State sequence with dwell times removed: adjacent entries always differ."""

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(s) for s in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("compressed sequence must contain at least one entry")
        if any(s < 0 for s in entries):
            raise ValueError("state indices must be non-negative")
        for a, b in zip(entries, entries[1:]):
            if a == b:
                raise ValueError("adjacent compressed entries must differ")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, idx):
        return self.entries[idx]


def compress(states: Sequence[int]) -> CompressedSequence:
    """Collapse every maximal run of repeated states to a single entry.

    The result keeps the distinct states in order of first appearance of
    each run; its length never exceeds the input length and it is a fixed
    point of this operation.
    """
    seq = [int(s) for s in states]
    if not seq:
        raise ValueError("cannot compress an empty state sequence")
    entries = [seq[0]]
    for s in seq[1:]:
        if s != entries[-1]:
            entries.append(s)
    return CompressedSequence(tuple(entries))


def log_potential(model: ChainModel, t: int, j: int, i: int, x_t: int) -> float:
    """Log factor for state ``j`` at time ``t`` following ``i``, emitting ``x_t``.

    At ``t == 1`` the previous state must be the ``START`` sentinel and the
    initial weight replaces the transition weight.
    """
    if t < 1:
        raise ValueError(f"time index must be >= 1, got {t}")
    m = model.num_states
    if not 0 <= j < m:
        raise ValueError(f"state index {j} out of range for {m} states")
    if not 0 <= x_t < model.num_symbols:
        raise ValueError(f"observation index {x_t} out of range for {model.num_symbols} symbols")
    if t == 1:
        if i != START:
            raise ValueError("previous state must be START at t = 1")
        return float(model.init_logw[j] + model.emit_logw[j, x_t])
    if i == START:
        raise ValueError("START is only a valid previous state at t = 1")
    if not 0 <= i < m:
        raise ValueError(f"state index {i} out of range for {m} states")
    return float(model.trans_logw[i, j] + model.emit_logw[j, x_t])


def sequence_log_score(model: ChainModel, seq: LabeledSequence) -> float:
    """Unnormalized joint log score of a fully labeled sequence."""
    if seq.states is None:
        raise ValueError("sequence_log_score requires a labeled sequence")
    y = seq.states
    x = seq.obs
    if y.max() >= model.num_states:
        raise ValueError(f"state index {int(y.max())} out of range for {model.num_states} states")
    if x.max() >= model.num_symbols:
        raise ValueError(
            f"observation index {int(x.max())} out of range for {model.num_symbols} symbols"
        )
    total = model.init_logw[y[0]] + model.emit_logw[y[0], x[0]]
    if len(y) > 1:
        total = total + model.trans_logw[y[:-1], y[1:]].sum()
        total = total + model.emit_logw[y[1:], x[1:]].sum()
    return float(total)


def estimate_counts(
    dataset: Sequence[LabeledSequence],
    smoothing: float = 1.0,
    *,
    states: StateSpace,
    alphabet: ObservationAlphabet,
) -> ChainModel:
    """Fit a chain model by additively smoothed frequency counting.

    Parameters
    ----------
    dataset : sequence of LabeledSequence
        Fully labeled training sequences (state indices resolved against
        ``states``, observation indices against ``alphabet``).
    smoothing : float
        Pseudo-count added to every cell before row normalization.  With
        ``smoothing == 0`` an unobserved event gets probability zero and
        its log-weight becomes ``-inf``; a row with no observations at
        all falls back to the uniform distribution.

    Returns
    -------
    ChainModel
        Log-probability tables; each exponentiated row sums to one.
    """
    if not dataset:
        raise ValueError("estimate_counts needs at least one sequence")
    if smoothing < 0:
        raise ValueError(f"smoothing must be >= 0, got {smoothing}")
    m, v = states.size, alphabet.size
    init_c = np.zeros(m)
    trans_c = np.zeros((m, m))
    emit_c = np.zeros((m, v))
    for seq in dataset:
        if seq.states is None:
            raise ValueError("estimate_counts requires labeled sequences")
        y, x = seq.states, seq.obs
        if y.max() >= m:
            raise ValueError(f"state index {int(y.max())} out of range for {m} states")
        if x.max() >= v:
            raise ValueError(f"observation index {int(x.max())} out of range for {v} symbols")
        init_c[y[0]] += 1.0
        if len(y) > 1:
            np.add.at(trans_c, (y[:-1], y[1:]), 1.0)
        np.add.at(emit_c, (y, x), 1.0)

    def norm_rows(counts: np.ndarray) -> np.ndarray:
        counts = np.atleast_2d(counts)
        k = counts.shape[1]
        totals = counts.sum(axis=1, keepdims=True)
        smoothed = counts + smoothing
        denom = totals + smoothing * k
        probs = np.where(denom > 0, smoothed / np.where(denom > 0, denom, 1.0), 1.0 / k)
        with np.errstate(divide="ignore"):
            return np.log(probs)

    return ChainModel(
        states=states,
        alphabet=alphabet,
        init_logw=norm_rows(init_c)[0],
        trans_logw=norm_rows(trans_c),
        emit_logw=norm_rows(emit_c),
    )


# ---------------------------------------------------------------------------
# file formats

def _encode_weight(w: float):
    return "-inf" if math.isinf(w) else float(w)


def _decode_weight(raw) -> float:
    if raw == "-inf":
        return float("-inf")
    if isinstance(raw, (int, float)) and math.isfinite(raw):
        return float(raw)
    raise ValueError(f"invalid log-weight entry {raw!r}")


def model_to_dict(model: ChainModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "states": list(model.states.labels),
        "symbols": list(model.alphabet.symbols),
        "init_logw": [_encode_weight(w) for w in model.init_logw],
        "trans_logw": [[_encode_weight(w) for w in row] for row in model.trans_logw],
        "emit_logw": [[_encode_weight(w) for w in row] for row in model.emit_logw],
    }


def model_from_dict(payload: dict) -> ChainModel:
    if not isinstance(payload, dict):
        raise ValueError("model payload must be a JSON object")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {version!r}")
    missing = {"states", "symbols", "init_logw", "trans_logw", "emit_logw"} - payload.keys()
    if missing:
        raise ValueError(f"model file is missing fields: {sorted(missing)}")
    states = StateSpace(tuple(payload["states"]))
    alphabet = ObservationAlphabet(tuple(payload["symbols"]))
    init = np.array([_decode_weight(w) for w in payload["init_logw"]])
    trans = np.array([[_decode_weight(w) for w in row] for row in payload["trans_logw"]])
    emit = np.array([[_decode_weight(w) for w in row] for row in payload["emit_logw"]])
    return ChainModel(states=states, alphabet=alphabet, init_logw=init,
                      trans_logw=trans, emit_logw=emit)


def save_model(model: ChainModel, path) -> None:
    """Write a model as a single JSON document (``-inf`` encoded as a string)."""
    text = json.dumps(model_to_dict(model), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def load_model(path) -> ChainModel:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"model file {path} is not valid JSON: {exc}") from None
    return model_from_dict(payload)


def save_dataset(
    sequences: Iterable[LabeledSequence],
    path,
    *,
    states: StateSpace,
    alphabet: ObservationAlphabet,
) -> None:
    """Write sequences as JSON Lines with symbolic labels, one record per line."""
    with open(path, "w") as fh:
        for seq in sequences:
            record: dict = {"obs": [alphabet.symbols[k] for k in seq.obs]}
            if seq.states is not None:
                record["states"] = [states.labels[s] for s in seq.states]
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")


def load_dataset(
    path,
    *,
    states: StateSpace,
    alphabet: ObservationAlphabet,
    require_states: bool = False,
    drop_states: bool = False,
) -> list[LabeledSequence]:
    """Read a JSON Lines dataset, resolving labels against the given spaces.

    Unknown labels raise ValueError naming the offending label.  With
    ``drop_states`` the label field is discarded unread, which is how the
    inference command guarantees it never sees ground truth.
    """
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if "obs" not in record:
                raise ValueError(f"{path}:{lineno}: record has no 'obs' field")
            obs = np.array([alphabet.index(sym) for sym in record["obs"]], dtype=np.int64)
            seq_states = None
            if not drop_states and record.get("states") is not None:
                seq_states = np.array(
                    [states.index(lab) for lab in record["states"]], dtype=np.int64
                )
            if require_states and seq_states is None:
                raise ValueError(f"{path}:{lineno}: record has no state labels")
            out.append(LabeledSequence(obs=obs, states=seq_states))
    return out
