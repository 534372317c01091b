"""Sequence-level scoring of collapsed predictions against collapsed truth."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import CompressedSequence


def _as_entries(seq) -> tuple:
    if isinstance(seq, CompressedSequence):
        return seq.entries
    return tuple(seq)


def edit_distance(a, b) -> int:
    """Minimum number of insertions, deletions, and substitutions between two sequences."""
    sa, sb = _as_entries(a), _as_entries(b)
    if len(sa) < len(sb):
        sa, sb = sb, sa
    previous = list(range(len(sb) + 1))
    for i, ca in enumerate(sa, start=1):
        current = [i]
        for j, cb in enumerate(sb, start=1):
            cost = 0 if ca == cb else 1
            current.append(min(previous[j] + 1,       # deletion
                               current[j - 1] + 1,    # insertion
                               previous[j - 1] + cost))
        previous = current
    return previous[-1]


@dataclass(frozen=True)
class EvaluationReport:
    """Corpus scores plus the per-pair (edit distance, normalizer) breakdown."""

    exact_score: float
    eds: float
    per_sequence: tuple[tuple[int, int], ...]


def _check_pairs(predictions: Sequence, truths: Sequence) -> None:
    if len(predictions) != len(truths):
        raise ValueError(
            f"got {len(predictions)} predictions for {len(truths)} references"
        )
    if len(predictions) == 0:
        raise ValueError("cannot score an empty prediction list")


def exact_score(predictions: Sequence, truths: Sequence) -> float:
    """Percentage of pairs whose sequences match exactly, length included."""
    _check_pairs(predictions, truths)
    hits = sum(1 for p, t in zip(predictions, truths) if _as_entries(p) == _as_entries(t))
    return 100.0 * hits / len(predictions)


def eds(predictions: Sequence, truths: Sequence) -> tuple[float, EvaluationReport]:
    """Edit-distance score: 100 minus the mean length-normalized edit distance.

    Each pair contributes its edit distance divided by the longer of the
    two sequence lengths, so the score lands in [0, 100] with 100 meaning
    every pair matched exactly.
    """
    _check_pairs(predictions, truths)
    rows = []
    penalty = 0.0
    for p, t in zip(predictions, truths):
        ep, et = _as_entries(p), _as_entries(t)
        if not ep or not et:
            raise ValueError("cannot score an empty sequence")
        d = edit_distance(ep, et)
        norm = max(len(ep), len(et))
        rows.append((d, norm))
        penalty += d / norm
    score = 100.0 - 100.0 * penalty / len(rows)
    report = EvaluationReport(
        exact_score=exact_score(predictions, truths),
        eds=score,
        per_sequence=tuple(rows),
    )
    return score, report
