"""Single-run simulation engine: move, sense, communicate, fuse, record.

A tick advances every robot one random-walk step, applies perfect sensing at
the landing node, rebuilds the encounter graph from the new positions, and
(in consensus mode) lets every robot with neighbors fuse opinions and merge
the thresholded result into its occupancy vector. All fusion updates within a
tick read pre-fusion beliefs and are applied simultaneously, so robot
numbering cannot change the outcome.

Two opinion-carry modes exist. In the canonical "occupancy" mode a robot's
opinion is always the PMF of its current occupancy vector, which makes each
robot's Hellinger distance to the reference non-increasing. The "chernoff"
mode carries the raw fused PMF forward instead (refreshing it from the
occupancy vector whenever sensing changes that vector); it reproduces the
small distance bumps that raw fusion arithmetic causes and is kept for
comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import fusion, mobility, occupancy, spatial
from .errors import ConfigError, EngineInvariantError
from .metrics import HellingerRecord, hellinger_batch

MODES = ("consensus", "no-consensus")
CARRY_MODES = ("occupancy", "chernoff")

# Twelve-node discretized circle on the 8x8 grid (ring of radius 2 cells
# around the node at row 5, column 4); the default reconstruction target.
DEFAULT_FEATURES = (19, 20, 21, 26, 30, 34, 38, 42, 46, 51, 52, 53)

MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class RunConfig:
    """Everything a single run needs; validated before use."""

    side_count: int = 8
    spacing: float = 0.7
    robot_count: int = 4
    level: float = 0.8
    features: object = DEFAULT_FEATURES
    epsilon: float = 0.01
    max_steps: int = 5000
    mode: str = "consensus"
    carry: str = "occupancy"
    seed: int = 0
    comm_radius: float = 0.0
    snapshot_steps: tuple = ()
    step_seconds: float = 1.0

    def validate(self) -> "RunConfig":
        if not isinstance(self.side_count, (int, np.integer)) or self.side_count < 1:
            raise ConfigError(f"side_count must be a positive integer, got {self.side_count!r}")
        if not self.spacing > 0:
            raise ConfigError(f"spacing must be positive, got {self.spacing!r}")
        if not isinstance(self.robot_count, (int, np.integer)) or self.robot_count < 1:
            raise ConfigError(f"robot_count must be a positive integer, got {self.robot_count!r}")
        if not 0.5 < self.level < 1.0:
            raise ConfigError(f"level must lie in (0.5, 1), got {self.level!r}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon!r}")
        if not isinstance(self.max_steps, (int, np.integer)) or self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.carry not in CARRY_MODES:
            raise ConfigError(f"carry must be one of {CARRY_MODES}, got {self.carry!r}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.comm_radius < 0:
            raise ConfigError(f"comm_radius must be >= 0, got {self.comm_radius!r}")
        if any(k < 0 for k in self.snapshot_steps):
            raise ConfigError("snapshot_steps must be non-negative")
        if not self.step_seconds > 0:
            raise ConfigError(f"step_seconds must be positive, got {self.step_seconds!r}")
        self.resolve_features()
        return self

    def resolve_features(self) -> tuple:
        """Feature node list: either an explicit id list or a 'circle:cx,cy,r' tag."""
        spec = self.features
        if isinstance(spec, str):
            if not spec.startswith("circle:"):
                raise ConfigError(
                    f"feature spec string must look like 'circle:cx,cy,r', got {spec!r}"
                )
            parts = spec[len("circle:"):].split(",")
            if len(parts) != 3:
                raise ConfigError(f"circle spec needs cx,cy,r, got {spec!r}")
            try:
                cx, cy, radius = (float(p) for p in parts)
            except ValueError as exc:
                raise ConfigError(f"bad circle spec {spec!r}") from exc
            if radius < 0:
                raise ConfigError(f"circle radius must be >= 0, got {radius}")
            return occupancy.circle_nodes(self.side_count, cx, cy, radius)
        try:
            nodes = tuple(int(s) for s in spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"features must be node ids or a circle tag, got {spec!r}") from exc
        node_count = self.side_count * self.side_count
        bad = [s for s in nodes if not 1 <= s <= node_count]
        if bad:
            raise ConfigError(f"feature nodes {sorted(bad)} outside [1, {node_count}]")
        return nodes


class Encounter(NamedTuple):
    step: int
    node: int
    robots: tuple


@dataclass(frozen=True)
class CommGraph:
    """Symmetric, irreflexive who-hears-whom relation at one time step."""

    step: int
    neighbor_sets: dict

    def neighbors_of(self, robot_id: int) -> frozenset:
        return self.neighbor_sets.get(robot_id, frozenset())


def build_comm_graph(step: int, positions, grid: spatial.SpatialGrid, comm_radius: float):
    """Comm graph plus encounter groups for the current positions.

    positions is the 1-based node per robot, in robot-id order. With
    comm_radius below the grid spacing (the default 0), robots communicate
    exactly when co-located; larger radii connect robots whose node
    coordinates lie within comm_radius meters.

    Returns (CommGraph, groups) where groups lists (node, robot_ids) for every
    connected set of two or more robots, ordered by lowest robot id.
    """
    n = len(positions)
    neighbor_sets = {}
    groups = []
    if comm_radius < grid.spacing:
        by_node = {}
        for idx, node in enumerate(positions):
            by_node.setdefault(int(node), []).append(idx + 1)
        for node, members in sorted(by_node.items()):
            if len(members) < 2:
                continue
            for a in members:
                neighbor_sets[a] = frozenset(b for b in members if b != a)
            groups.append((node, tuple(members)))
        groups.sort(key=lambda item: item[1][0])
    else:
        coords = np.array([grid.node_position(int(node)) for node in positions])
        diff = coords[:, None, :] - coords[None, :, :]
        adj = (diff**2).sum(axis=2) <= comm_radius**2
        np.fill_diagonal(adj, False)
        for idx in range(n):
            nbrs = np.flatnonzero(adj[idx])
            if nbrs.size:
                neighbor_sets[idx + 1] = frozenset(int(b) + 1 for b in nbrs)
        seen = set()
        for idx in range(n):
            if idx in seen or (idx + 1) not in neighbor_sets:
                continue
            stack, comp = [idx], {idx}
            while stack:
                i = stack.pop()
                for j in np.flatnonzero(adj[i]):
                    if j not in comp:
                        comp.add(int(j))
                        stack.append(int(j))
            seen |= comp
            members = tuple(sorted(i + 1 for i in comp))
            groups.append((int(positions[members[0] - 1]), members))
    return CommGraph(step=step, neighbor_sets=neighbor_sets), groups


@dataclass
class RunTrace:
    """Everything a run produced: the distance history and its milestones."""

    seed: int
    mode: str
    carry: str
    distances: np.ndarray
    robot_convergence: tuple
    convergence_step: Optional[int]
    censored: bool
    encounters: tuple
    snapshots: dict
    final_pmfs: np.ndarray
    final_masks: np.ndarray

    @property
    def step_count(self) -> int:
        return self.distances.shape[0] - 1

    @property
    def robot_count(self) -> int:
        return self.distances.shape[1]


class World:
    """Mutable state of one run; robots live in flat arrays for speed."""

    def __init__(self, grid, field_, config: RunConfig, robots, streams):
        if len(robots) != config.robot_count or len(streams) != config.robot_count:
            raise ConfigError("robots and streams must match config.robot_count")
        self.grid = grid
        self.field = field_
        self.config = config
        self.transition = spatial.build_transition_matrix(grid)
        self.supports = mobility.transition_supports(self.transition)
        self.streams = list(streams)
        self.positions = np.array([r.node for r in robots], dtype=np.int64)
        if self.positions.min() < 1 or self.positions.max() > grid.node_count:
            raise ConfigError("robot positions must lie on the grid")
        self.masks = np.array([r.belief.mask for r in robots], dtype=bool)
        for r in robots:
            if r.belief.level != config.level or r.belief.size != grid.node_count:
                raise ConfigError("robot beliefs must match the configured level and grid")
        self.altitudes = tuple(r.altitude for r in robots)
        self.k = 0
        self.encounters = []
        self._f_nom = field_.f_nom
        self._f_ref = field_.f_ref
        self._carried = self._pmf_rows() if config.carry == "chernoff" else None
        self.dh = self._opinion_distances()

    @classmethod
    def from_config(cls, config: RunConfig) -> "World":
        config.validate()
        grid = spatial.build_grid(config.side_count, config.spacing)
        field_ = occupancy.FeatureField(
            node_count=grid.node_count,
            occupied=frozenset(config.resolve_features()),
            level=config.level,
        )
        placement = mobility.RngStream.from_seed(config.seed, 0)
        robots = mobility.initialize_robots(
            config.robot_count, grid.node_count, placement, level=config.level
        )
        streams = [
            mobility.RngStream.from_seed(config.seed, a)
            for a in range(1, config.robot_count + 1)
        ]
        return cls(grid, field_, config, robots, streams)

    def robot_states(self) -> list:
        """Snapshot of the robots as value objects (for inspection/tests)."""
        return [
            mobility.RobotState(
                robot_id=idx + 1,
                node=int(self.positions[idx]),
                belief=occupancy.OccupancyVector(self.masks[idx], self.config.level),
                altitude=self.altitudes[idx],
            )
            for idx in range(len(self.positions))
        ]

    def _pmf_rows(self) -> np.ndarray:
        level = self.config.level
        vals = np.where(self.masks, level, 1.0 - level)
        return vals / vals.sum(axis=1, keepdims=True)

    def _pmf_row(self, idx: int) -> np.ndarray:
        level = self.config.level
        vals = np.where(self.masks[idx], level, 1.0 - level)
        return vals / vals.sum()

    def opinions(self) -> np.ndarray:
        """Current per-robot opinion PMFs, one row per robot."""
        if self._carried is not None:
            return self._carried.copy()
        return self._pmf_rows()

    def _opinion_distances(self) -> np.ndarray:
        if self._carried is not None:
            return hellinger_batch(self._carried, self._f_ref)
        return hellinger_batch(self._pmf_rows(), self._f_ref)

    def tick(self) -> HellingerRecord:
        """Advance one step and return the per-robot distance record."""
        cfg = self.config
        step_ = self.k + 1
        field_mask = self.field.mask
        changed = []

        for idx in range(len(self.positions)):
            node = mobility.sample_next(int(self.positions[idx]), self.supports, self.streams[idx])
            self.positions[idx] = node
            if field_mask[node - 1] and not self.masks[idx, node - 1]:
                self.masks[idx, node - 1] = True
                changed.append(idx)

        if self._carried is not None:
            for idx in changed:
                self._carried[idx] = self._pmf_row(idx)

        if cfg.mode == "consensus":
            graph, groups = build_comm_graph(step_, self.positions, self.grid, cfg.comm_radius)
            for node, members in groups:
                self.encounters.append(Encounter(step=step_, node=node, robots=members))
            if graph.neighbor_sets:
                changed.extend(self._fuse(graph))

        if changed:
            self._refresh_distances(sorted(set(changed)), step_)

        self.k = step_
        return HellingerRecord(step=step_, distances=self.dh.copy())

    def _fuse(self, graph: CommGraph) -> list:
        """Chernoff-fuse every robot with its neighbors, simultaneously.

        Fusion inputs are this tick's post-sensing opinions; the threshold and
        merge write-back (union of occupied sets) is applied only after every
        robot's fused PMF is computed.
        """
        opinion_cache = {}

        def opinion(robot_id: int) -> np.ndarray:
            idx = robot_id - 1
            if self._carried is not None:
                return self._carried[idx]
            if idx not in opinion_cache:
                opinion_cache[idx] = self._pmf_row(idx)
            return opinion_cache[idx]

        pending_masks = {}
        pending_carried = {}
        for robot_id, nbrs in graph.neighbor_sets.items():
            weights = fusion.metropolis_weights(
                robot_id, {b: len(graph.neighbor_sets[b]) for b in nbrs}
            )
            fused = fusion.chernoff_fuse(
                [(opinion(b), w) for b, w in sorted(weights.items())]
            )
            idx = robot_id - 1
            # threshold (strict exceedance of the nominal PMF) + merge (union)
            merged = self.masks[idx] | (fused > self._f_nom)
            if not np.array_equal(merged, self.masks[idx]):
                pending_masks[idx] = merged
            if self._carried is not None:
                pending_carried[idx] = fused
        for idx, mask in pending_masks.items():
            self.masks[idx] = mask
        for idx, fused in pending_carried.items():
            # a merge that changed the occupancy vector refreshes the carried
            # opinion from it; only an uninformative fusion carries the raw
            # fused PMF forward
            self._carried[idx] = self._pmf_row(idx) if idx in pending_masks else fused
        if self._carried is not None:
            return sorted(set(pending_masks) | set(pending_carried))
        return sorted(pending_masks)

    def _refresh_distances(self, indices, step_: int) -> None:
        ref_mask = self.field.mask
        for idx in indices:
            if np.any(self.masks[idx] & ~ref_mask):
                raise EngineInvariantError(
                    f"robot {idx + 1} marked a node outside the feature set "
                    f"(seed={self.config.seed}, step={step_})"
                )
            if self._carried is not None:
                row = self._carried[idx:idx + 1]
            else:
                row = self._pmf_row(idx)[None, :]
            new = hellinger_batch(row, self._f_ref)[0]
            if self._carried is None and new > self.dh[idx] + MONOTONE_SLACK:
                raise EngineInvariantError(
                    f"robot {idx + 1} distance rose from {self.dh[idx]} to {new} "
                    f"(seed={self.config.seed}, step={step_})"
                )
            self.dh[idx] = new


def run(config: RunConfig) -> RunTrace:
    """Execute one seeded run until all robots converge or max_steps elapses.

    The distance record starts at step 0 with the true initial distances
    (nominal vs reference PMF), so the first row is nonzero whenever features
    exist. Fully deterministic given config.seed.
    """
    world = World.from_config(config)
    cfg = world.config
    eps = cfg.epsilon
    snapshot_at = set(int(k) for k in cfg.snapshot_steps)

    rows = [world.dh.copy()]
    robot_first = [0 if d < eps else None for d in world.dh]
    convergence_step = 0 if all(f == 0 for f in robot_first) else None
    snapshots = {}
    if 0 in snapshot_at:
        snapshots[0] = world.opinions()

    while convergence_step is None and world.k < cfg.max_steps:
        record = world.tick()
        rows.append(record.distances)
        for idx, dist in enumerate(record.distances):
            if robot_first[idx] is None and dist < eps:
                robot_first[idx] = record.step
        if record.step in snapshot_at:
            snapshots[record.step] = world.opinions()
        if bool(np.all(record.distances < eps)):
            convergence_step = record.step

    return RunTrace(
        seed=cfg.seed,
        mode=cfg.mode,
        carry=cfg.carry,
        distances=np.array(rows),
        robot_convergence=tuple(robot_first),
        convergence_step=convergence_step,
        censored=convergence_step is None,
        encounters=tuple(world.encounters),
        snapshots=snapshots,
        final_pmfs=world.opinions(),
        final_masks=world.masks.copy(),
    )
