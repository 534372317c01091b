"""Synthetic data: a grid-roaming robot with a noisy color sensor.

A world is a rectangular character map: one of four floor colors per
walkable cell, ``#`` for an obstacle.  The robot starts on a uniformly
random free cell.  On each step it rests with probability
``1 - attempt_prob``; otherwise it draws one of the four compass
directions uniformly and attempts the move.  By default a blocked
attempt burns the step with the robot staying put (``blocked="stay"``);
``blocked="resample"`` instead re-draws among the free directions so
every attempt moves.  The rest probability is what produces multi-step
dwells, keeping collapsed path lengths far below the raw length.

The sensor reports the floor color of the current cell, correct with
probability ``accuracy / 100`` and otherwise uniform over the other
three colors.

``sample_chain`` is unrelated to the grid world: it ancestrally samples
from any chain model whose rows are probability distributions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .model import ChainModel, LabeledSequence, ObservationAlphabet, StateSpace

COLORS = ("blue", "green", "yellow", "red")
_CHAR_TO_COLOR = {"b": "blue", "g": "green", "y": "yellow", "r": "red"}
OBSTACLE = "#"

DEFAULT_ATTEMPT_PROB = 0.12
_DIRECTIONS = ((0, -1), (0, 1), (-1, 0), (1, 0))  # up, down, left, right


@dataclass(frozen=True)
class GridWorld:
    """Rectangular map of colored free cells and obstacles.

    ``rows[y][x]`` is one of ``b g y r #``; free cells are enumerated
    row-major and labeled by their ``x:y`` coordinates.
    """

    rows: tuple[str, ...]

    def __post_init__(self):
        rows = tuple(str(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if not rows:
            raise ValueError("world map must have at least one row")
        width = len(rows[0])
        if width == 0:
            raise ValueError("world map rows must be non-empty")
        for y, row in enumerate(rows):
            if len(row) != width:
                raise ValueError(f"world map row {y} has length {len(row)}, expected {width}")
            for x, ch in enumerate(row):
                if ch != OBSTACLE and ch not in _CHAR_TO_COLOR:
                    raise ValueError(f"invalid map character {ch!r} at {x}:{y}")
        if not any(ch != OBSTACLE for row in rows for ch in row):
            raise ValueError("world map has no free cells")

    @property
    def width(self) -> int:
        return len(self.rows[0])

    @property
    def height(self) -> int:
        return len(self.rows)

    @cached_property
    def free_cells(self) -> tuple[tuple[int, int], ...]:
        """All walkable ``(x, y)`` cells in row-major order."""
        return tuple(
            (x, y)
            for y, row in enumerate(self.rows)
            for x, ch in enumerate(row)
            if ch != OBSTACLE
        )

    @cached_property
    def _cell_index(self) -> dict[tuple[int, int], int]:
        return {cell: i for i, cell in enumerate(self.free_cells)}

    def is_free(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height and self.rows[y][x] != OBSTACLE

    def color(self, x: int, y: int) -> str:
        if not self.is_free(x, y):
            raise ValueError(f"cell {x}:{y} is not a free cell")
        return _CHAR_TO_COLOR[self.rows[y][x]]

    def cell_state(self, x: int, y: int) -> int:
        """Flattened free-cell index of ``(x, y)``."""
        try:
            return self._cell_index[(x, y)]
        except KeyError:
            raise ValueError(f"cell {x}:{y} is not a free cell") from None

    def state_space(self) -> StateSpace:
        return StateSpace(tuple(f"{x}:{y}" for x, y in self.free_cells))

    def color_alphabet(self) -> ObservationAlphabet:
        return ObservationAlphabet(COLORS)

    def to_text(self) -> str:
        return "\n".join(self.rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GridWorld":
        rows = tuple(line for line in text.splitlines() if line.strip())
        return cls(rows=rows)


def load_world(path) -> GridWorld:
    return GridWorld.from_text(Path(path).read_text())


def default_world() -> GridWorld:
    """The shipped map: seven cells forming three two-cell arms around a hub.

    Every pair of adjacent cells carries a distinct unordered color pair, so
    a noiseless color report sequence with at least one movement identifies
    the walk uniquely.  Colors that appear twice are split between a dead end
    and a corridor cell, whose very different dwell statistics keep even
    movement-free traces decodable.
    """
    text = resources.files("compseq.data").joinpath("default_world.txt").read_text()
    return GridWorld.from_text(text)


@dataclass(frozen=True, eq=False)
class RobotTrace:
    """One simulated walk: visited cells and the sensor's color reports."""

    positions: tuple[tuple[int, int], ...]
    colors: tuple[str, ...]
    accuracy: float

    def __post_init__(self):
        if len(self.positions) != len(self.colors):
            raise ValueError("positions and colors must align one-to-one")
        if not self.positions:
            raise ValueError("trace must contain at least one step")


def _walk(world: GridWorld, length: int, rng: np.random.Generator,
          attempt_prob: float, blocked: str) -> list[tuple[int, int]]:
    free = world.free_cells
    x, y = free[int(rng.integers(len(free)))]
    positions = [(x, y)]
    for _ in range(length - 1):
        if rng.random() < attempt_prob:
            dx, dy = _DIRECTIONS[int(rng.integers(4))]
            if world.is_free(x + dx, y + dy):
                x, y = x + dx, y + dy
            elif blocked == "resample":
                options = [(dx2, dy2) for dx2, dy2 in _DIRECTIONS
                           if world.is_free(x + dx2, y + dy2)]
                if options:
                    dx, dy = options[int(rng.integers(len(options)))]
                    x, y = x + dx, y + dy
        positions.append((x, y))
    return positions


def _sense(world: GridWorld, positions, accuracy: float,
           rng: np.random.Generator) -> list[str]:
    p_err = 1.0 - accuracy / 100.0
    flips = rng.random(len(positions)) < p_err
    picks = rng.integers(3, size=len(positions))
    colors = []
    for (x, y), flip, pick in zip(positions, flips, picks):
        true_color = world.color(x, y)
        if flip:
            others = [c for c in COLORS if c != true_color]
            colors.append(others[int(pick)])
        else:
            colors.append(true_color)
    return colors


def simulate_robot(world: GridWorld, length: int, accuracy: float, seed,
                   *, attempt_prob: float = DEFAULT_ATTEMPT_PROB,
                   blocked: str = "stay") -> RobotTrace:
    """Simulate one walk of ``length`` steps and its noisy sensor readings.

    ``accuracy`` is the percent chance each reading reports the true
    color; at 100 the noise is exactly zero no matter how many steps are
    drawn.  ``seed`` may be an int or a sequence of ints.
    """
    if length < 1:
        raise ValueError(f"trace length must be >= 1, got {length}")
    if not 0.0 <= accuracy <= 100.0:
        raise ValueError(f"accuracy must be in [0, 100], got {accuracy}")
    if not 0.0 < attempt_prob <= 1.0:
        raise ValueError(f"attempt_prob must be in (0, 1], got {attempt_prob}")
    if blocked not in ("stay", "resample"):
        raise ValueError(f"unknown blocked mode {blocked!r}")
    rng = np.random.default_rng(seed)
    positions = _walk(world, length, rng, attempt_prob, blocked)
    colors = _sense(world, positions, accuracy, rng)
    return RobotTrace(positions=tuple(positions), colors=tuple(colors),
                      accuracy=float(accuracy))


def trace_to_sequence(world: GridWorld, trace: RobotTrace) -> LabeledSequence:
    """Convert a trace to index form: color indices plus free-cell state indices."""
    alphabet = world.color_alphabet()
    obs = np.array([alphabet.index(c) for c in trace.colors], dtype=np.int64)
    states = np.array([world.cell_state(x, y) for x, y in trace.positions], dtype=np.int64)
    return LabeledSequence(obs=obs, states=states)


def robot_dataset(world: GridWorld, n_sequences: int, length_range: tuple[int, int],
                  accuracy: float, seed: int,
                  *, attempt_prob: float = DEFAULT_ATTEMPT_PROB,
                  blocked: str = "stay") -> list[LabeledSequence]:
    """Generate labeled walks; sequence ``i`` uses its own stream ``(seed, i)``.

    Lengths are drawn uniformly from ``length_range`` inclusive, from the
    same per-sequence stream, so any one sequence can be regenerated
    without the others.
    """
    lo, hi = int(length_range[0]), int(length_range[1])
    if not 1 <= lo <= hi:
        raise ValueError(f"invalid length range ({lo}, {hi})")
    if n_sequences < 0:
        raise ValueError(f"n_sequences must be >= 0, got {n_sequences}")
    out = []
    for i in range(n_sequences):
        rng = np.random.default_rng([int(seed), i])
        length = int(rng.integers(lo, hi + 1))
        positions = _walk(world, length, rng, attempt_prob, blocked)
        colors = _sense(world, positions, accuracy, rng)
        trace = RobotTrace(positions=tuple(positions), colors=tuple(colors),
                           accuracy=float(accuracy))
        out.append(trace_to_sequence(world, trace))
    return out


def _stochastic_rows(name: str, logw: np.ndarray) -> np.ndarray:
    probs = np.exp(np.atleast_2d(logw))
    sums = probs.sum(axis=1)
    bad = np.where(np.abs(sums - 1.0) > 1e-9)[0]
    if bad.size:
        raise ValueError(
            f"{name} row {int(bad[0])} sums to {sums[bad[0]]:.12f}, expected 1"
        )
    return probs / sums[:, None]


def sample_chain(model: ChainModel, length: int, seed) -> LabeledSequence:
    """Ancestrally sample a labeled sequence from a stochastic chain model.

    Every table row must exponentiate to a probability distribution
    (within 1e-9); the offending row is named otherwise.
    """
    if length < 1:
        raise ValueError(f"sequence length must be >= 1, got {length}")
    init = _stochastic_rows("init_logw", model.init_logw)[0]
    trans = _stochastic_rows("trans_logw", model.trans_logw)
    emit = _stochastic_rows("emit_logw", model.emit_logw)
    rng = np.random.default_rng(seed)
    init_cdf = np.cumsum(init)
    trans_cdf = np.cumsum(trans, axis=1)
    emit_cdf = np.cumsum(emit, axis=1)
    draws = rng.random(2 * length)
    states = np.empty(length, dtype=np.int64)
    obs = np.empty(length, dtype=np.int64)
    y = int(np.searchsorted(init_cdf, draws[0], side="right"))
    y = min(y, init.size - 1)
    states[0] = y
    obs[0] = min(int(np.searchsorted(emit_cdf[y], draws[1], side="right")), emit.shape[1] - 1)
    for t in range(1, length):
        y = min(int(np.searchsorted(trans_cdf[y], draws[2 * t], side="right")), trans.shape[0] - 1)
        states[t] = y
        obs[t] = min(int(np.searchsorted(emit_cdf[y], draws[2 * t + 1], side="right")),
                     emit.shape[1] - 1)
    return LabeledSequence(obs=obs, states=states)
