"""Per-robot random-walk state and the seeded stochastic step.

Randomness contract (traces are portable across any implementation of it):

* Generator: numpy PCG64 (128-bit state), seeded with
  ``SeedSequence([run_seed, key])``. Key 0 is the placement stream; key a is
  robot a's walk stream, so walks are mutually independent given one run seed.
* Each stream is consumed as a sequence of float64 uniforms in [0, 1).
  Placement draws one uniform per robot in id order and maps it to
  ``floor(u * S) + 1``. Each movement step draws one uniform and picks entry
  ``floor(u * (d + 1))`` from the node's choice list (self first, then
  neighbors in ascending node id).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .occupancy import OccupancyVector, nominal_occupancy

UNIFORM_BLOCK = 4096


class RngStream:
    """Buffered float64 uniform stream over a PCG64 generator.

    Buffering in blocks is invisible: numpy fills blocks with the same value
    sequence that repeated single draws produce.
    """

    __slots__ = ("generator", "_buffer", "_next")

    def __init__(self, generator: np.random.Generator):
        self.generator = generator
        self._buffer = np.empty(0)
        self._next = 0

    @classmethod
    def from_seed(cls, run_seed: int, key: int) -> "RngStream":
        if run_seed < 0 or key < 0:
            raise ValueError("run_seed and key must be non-negative")
        return cls(np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([run_seed, key])
        )))

    def uniform(self) -> float:
        if self._next >= self._buffer.size:
            self._buffer = self.generator.random(UNIFORM_BLOCK)
            self._next = 0
        value = self._buffer[self._next]
        self._next += 1
        return value


@dataclass(frozen=True)
class RobotState:
    """A robot's id, current node (1-based), belief, and informational altitude."""

    robot_id: int
    node: int
    belief: OccupancyVector
    altitude: float = 0.0


def transition_supports(transition_matrix: np.ndarray) -> tuple:
    """Per-node choice lists for the uniform walk: 1-based ids of the positive
    entries of each row (the node itself plus its neighbors, ascending)."""
    return tuple(
        np.flatnonzero(row > 0) + 1 for row in np.asarray(transition_matrix)
    )


def sample_next(node: int, supports: tuple, rng: RngStream) -> int:
    """Draw the next node uniformly from a node's choice list (one uniform)."""
    choices = supports[node - 1]
    return int(choices[int(rng.uniform() * choices.size)])


def step(state: RobotState, transition_matrix: np.ndarray, rng: RngStream) -> RobotState:
    """Advance one movement step; the belief is untouched by motion."""
    row = np.asarray(transition_matrix)[state.node - 1]
    choices = np.flatnonzero(row > 0) + 1
    nxt = int(choices[int(rng.uniform() * choices.size)])
    return replace(state, node=nxt)


def initialize_robots(count: int, node_count: int, rng: RngStream, level: float = 0.8) -> list:
    """Place robots 1..count at independent uniform nodes with nominal beliefs.

    Consumes one uniform per robot from the placement stream, in id order.
    The altitude tag mirrors the robot id (purely informational).
    """
    if count < 1:
        raise ValueError(f"robot count must be >= 1, got {count}")
    nominal = nominal_occupancy(node_count, level)
    return [
        RobotState(
            robot_id=a,
            node=int(rng.uniform() * node_count) + 1,
            belief=nominal,
            altitude=float(a),
        )
        for a in range(1, count + 1)
    ]
