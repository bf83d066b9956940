"""Step rules: the mark-ant-walk (MAW) rule, the random-walk baseline and the
sequential round-robin multi-robot scheduler.

This is the reference, step-at-a-time implementation used by monitors,
traces and tests.  ``harness.run_experiment`` normally drives the compiled
whole-run kernel instead; both consume the same pre-drawn random stream and
produce identical trajectories (cross-checked in tests).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .field import PheromoneField, init_field
from .geometry import Cell, Domain, Neighborhoods, build_neighborhoods

TIE_KINDS = ("seeded_random", "scan_order", "adversarial_loops")
_TIE_CODE = {"seeded_random": 0, "scan_order": 1, "adversarial_loops": 2}

ALGORITHMS = ("maw", "random_walk")


class DomainTooSmallError(RuntimeError):
    """The sensing ring is empty but the effector does not cover the free set."""


@dataclass(frozen=True)
class TieBreak:
    kind: str = "seeded_random"

    def __post_init__(self):
        if self.kind not in TIE_KINDS:
            raise ValueError(f"unknown tie-break {self.kind!r}")

    @property
    def code(self) -> int:
        return _TIE_CODE[self.kind]


@dataclass
class Robot:
    id: int
    pos: Cell


class StepOutcome(NamedTuple):
    marked: bool
    moved_to: Cell
    new_level: int  # level written this step, or -1 when not marking


@dataclass(eq=False)
class SimState:
    """One simulation's full mutable state.

    ``t`` counts executed activations (all robots individually); ``swept``
    is the effector-passed-over mask that defines cover time; ``last_sweep``
    holds the step stamp of each cell's most recent sweep (0 = run start).
    """

    domain: Domain
    r: int
    field: PheromoneField
    robots: list[Robot]
    nbrs: Neighborhoods
    tie: TieBreak
    rand_stream: np.ndarray  # int64 draws, one slot per step
    loop_id: np.ndarray | None = None  # corridor-loop labels for adversarial ties
    t: int = 0
    swept: np.ndarray = None
    last_sweep: np.ndarray = None
    max_revisit_gap: int = 0
    swept_count: int = 0
    terminal_covered: bool = False

    def __post_init__(self):
        shape = (self.domain.height, self.domain.width)
        if self.swept is None:
            self.swept = np.zeros(shape, dtype=bool)
        if self.last_sweep is None:
            self.last_sweep = np.zeros(shape, dtype=np.int64)
        if self.loop_id is None:
            self.loop_id = np.zeros(shape, dtype=np.int32)
        for robot in self.robots:
            if not self.domain.is_free(robot.pos):
                raise ValueError(f"robot {robot.id} starts on a non-free cell")

    @property
    def covered(self) -> bool:
        return self.swept_count == self.domain.free_count


def make_state(
    domain: Domain,
    r: int,
    starts: list[Cell],
    tie: TieBreak | str = "scan_order",
    seed: int = 0,
    max_steps: int = 1_000_000,
    noise_field: PheromoneField | None = None,
    nbrs: Neighborhoods | None = None,
    loop_id: np.ndarray | None = None,
) -> SimState:
    """Convenience constructor; draws the per-step random stream from ``seed``."""
    if isinstance(tie, str):
        tie = TieBreak(tie)
    stream = np.random.default_rng(seed).integers(0, 2**62, size=max_steps, dtype=np.int64)
    return SimState(
        domain=domain,
        r=r,
        field=noise_field if noise_field is not None else init_field(domain),
        robots=[Robot(i, pos) for i, pos in enumerate(starts)],
        nbrs=nbrs if nbrs is not None else build_neighborhoods(domain, r),
        tie=tie,
        rand_stream=stream,
        loop_id=loop_id,
    )


def tie_break(candidates: np.ndarray, kind: str, draw: int, state: SimState, pos_flat: int) -> int:
    """Pick one flat id from the argmin candidates (ascending flat order).

    seeded_random: ``draw`` modulo the candidate count; scan_order: least
    (y, x), i.e. the first candidate; adversarial_loops: drag the robot
    toward the lowest corridor-loop label, forcing earlier loops to be
    re-walked before the frontier advances.
    """
    if candidates.size == 0:
        raise ValueError("no candidates")
    if candidates.size == 1 or kind == "scan_order":
        return int(candidates[0])
    if kind == "seeded_random":
        return int(candidates[draw % candidates.size])
    loops = state.loop_id.ravel()[candidates]
    return int(candidates[np.argmin(loops)])


def _sweep(state: SimState, disk: np.ndarray) -> None:
    swept = state.swept.ravel()
    t = state.t
    newly = disk[~swept[disk]]
    state.swept_count += newly.size
    swept[disk] = True
    gaps = t - state.last_sweep.ravel()[disk]
    if gaps.size:
        g = int(gaps.max())
        if g > state.max_revisit_gap:
            state.max_revisit_gap = g
    state.last_sweep.ravel()[disk] = t


def _empty_ring(state: SimState, disk: np.ndarray) -> StepOutcome:
    if disk.size == state.domain.free_count:
        state.t += 1
        _sweep(state, disk)
        state.terminal_covered = True
        pos = state.robots[0].pos
        return StepOutcome(False, pos, -1)
    raise DomainTooSmallError("sensing ring empty and effector does not cover the domain")


def maw_step(state: SimState, robot_index: int) -> StepOutcome:
    """One MAW activation: sense the ring minimum, conditionally re-level the
    effector disk, sweep it, advance time, move.  Level comparisons use
    pre-step values throughout."""
    robot = state.robots[robot_index]
    p = state.domain.flat_of(robot.pos)
    ring = state.nbrs.ring(p)
    disk = state.nbrs.disk(p)
    if ring.size == 0:
        return _empty_ring(state, disk)
    levels = state.field.flat_levels
    ring_levels = levels[ring]
    min_level = int(ring_levels.min())
    candidates = ring[ring_levels == min_level]
    x = tie_break(candidates, state.tie.kind, int(state.rand_stream[state.t]), state, p)

    marked = False
    new_level = -1
    if int(levels[p]) <= min_level:
        marked = True
        new_level = min_level + 1
        levels[disk] = new_level
        state.field.flat_marked[disk] = True
    state.t += 1
    _sweep(state, disk)
    robot.pos = state.domain.cell_of(x)
    return StepOutcome(marked, robot.pos, new_level)


def random_walk_step(state: SimState, robot_index: int) -> StepOutcome:
    """Baseline: hop to a uniformly random ring cell, sweeping but never
    writing pheromone."""
    robot = state.robots[robot_index]
    p = state.domain.flat_of(robot.pos)
    ring = state.nbrs.ring(p)
    disk = state.nbrs.disk(p)
    if ring.size == 0:
        return _empty_ring(state, disk)
    x = int(ring[state.rand_stream[state.t] % ring.size])
    state.t += 1
    _sweep(state, disk)
    robot.pos = state.domain.cell_of(x)
    return StepOutcome(False, robot.pos, -1)


def multi_step(state: SimState, algorithm: str = "maw") -> StepOutcome:
    """Activate exactly one robot (fixed round-robin by id); t advances by 1."""
    j = state.t % len(state.robots)
    if algorithm == "maw":
        return maw_step(state, j)
    return random_walk_step(state, j)
