"""Pheromone level field, marking semantics and initial-noise generators.

Levels are unbounded 64-bit integers and never decay.  ``robot_marked``
tracks which cells the robot itself has written, which the noisy-run
monitors need to tell robot marks apart from pre-existing noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .geometry import Cell, Domain

NOISE_KINDS = ("none", "uniform_scatter", "const_scatter", "plateau")


@dataclass(frozen=True)
class NoiseProfile:
    kind: str = "none"
    fraction: float = 0.0
    value: int = 0  # const/plateau level; uniform_scatter draws from [1, 10]
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("noise fraction must lie in [0, 1]")
        if self.kind in ("const_scatter", "plateau") and self.value < 1:
            raise ValueError("noise value must be >= 1")


@dataclass(eq=False)
class PheromoneField:
    levels: np.ndarray  # int64, shape (height, width); 0 on obstacles
    robot_marked: np.ndarray  # bool, same shape
    noisy_cells: int = 0  # achieved nonzero count at init (plateau may fall short)

    @property
    def flat_levels(self) -> np.ndarray:
        return self.levels.ravel()

    @property
    def flat_marked(self) -> np.ndarray:
        return self.robot_marked.ravel()


def init_field(domain: Domain, noise: NoiseProfile | None = None, rng=None) -> PheromoneField:
    """All-zero field, optionally overlaid with one of the noise profiles.

    ``rng`` overrides the profile's own seed (the harness derives one per
    run); cell choice is a seeded shuffle so runs are reproducible.
    """
    noise = noise or NoiseProfile()
    levels = np.zeros((domain.height, domain.width), dtype=np.int64)
    marked = np.zeros((domain.height, domain.width), dtype=bool)
    achieved = 0
    if noise.kind != "none" and noise.fraction > 0:
        if rng is None:
            rng = np.random.default_rng(noise.seed)
        free = domain.free_flat
        target = int(noise.fraction * free.size)
        flat = levels.ravel()
        if noise.kind == "plateau":
            chosen = _plateau_cells(domain, target)
            flat[chosen] = noise.value
        else:
            chosen = rng.permutation(free)[:target]
            if noise.kind == "uniform_scatter":
                flat[chosen] = rng.integers(1, 11, size=chosen.size)
            else:
                flat[chosen] = noise.value
        achieved = int(np.count_nonzero(flat))
    return PheromoneField(levels, marked, achieved)


def _plateau_cells(domain: Domain, target: int) -> np.ndarray:
    """A compact axis-aligned rectangle of ~target free cells around the free
    set's centroid.  Grows one edge at a time toward the side adding most free
    cells, then trims the overshoot from the last strip; on fragmented domains
    the achieved count may fall short and is reported via ``noisy_cells``."""
    if target <= 0:
        return np.empty(0, dtype=np.int64)
    free = domain.free
    ys, xs = np.nonzero(free)
    cy, cx = int(round(ys.mean())), int(round(xs.mean()))
    x0 = x1 = cx
    y0 = y1 = cy
    count = int(free[cy, cx])
    h, w = domain.height, domain.width

    def strip_count(side: str) -> int:
        if side == "left" and x0 > 0:
            return int(free[y0 : y1 + 1, x0 - 1].sum())
        if side == "right" and x1 < w - 1:
            return int(free[y0 : y1 + 1, x1 + 1].sum())
        if side == "up" and y0 > 0:
            return int(free[y0 - 1, x0 : x1 + 1].sum())
        if side == "down" and y1 < h - 1:
            return int(free[y1 + 1, x0 : x1 + 1].sum())
        return -1

    last_strip: np.ndarray | None = None
    while count < target:
        gains = {s: strip_count(s) for s in ("left", "right", "up", "down")}
        side, gain = max(gains.items(), key=lambda kv: kv[1])
        can_grow = (x1 - x0 + 1 < w) or (y1 - y0 + 1 < h)
        if gain < 0 or not can_grow:
            break
        if gain == 0 and all(g <= 0 for g in gains.values()):
            # expand anyway toward any legal side to escape an obstacle band
            side = next(s for s, g in gains.items() if g >= 0)
        if side == "left":
            x0 -= 1
            strip = (np.arange(y0, y1 + 1)[free[y0 : y1 + 1, x0]]) * w + x0
        elif side == "right":
            x1 += 1
            strip = (np.arange(y0, y1 + 1)[free[y0 : y1 + 1, x1]]) * w + x1
        elif side == "up":
            y0 -= 1
            strip = y0 * w + np.arange(x0, x1 + 1)[free[y0, x0 : x1 + 1]]
        else:
            y1 += 1
            strip = y1 * w + np.arange(x0, x1 + 1)[free[y1, x0 : x1 + 1]]
        count += strip.size
        last_strip = strip
    rect = free.copy()
    mask = np.zeros_like(free)
    mask[y0 : y1 + 1, x0 : x1 + 1] = True
    chosen = np.flatnonzero((rect & mask).ravel())
    if chosen.size > target and last_strip is not None:
        drop = chosen.size - target
        keep = np.setdiff1d(chosen, last_strip[last_strip.size - drop :])
        return keep
    return chosen


def mark_disk(field: PheromoneField, cells: Iterable[Cell] | np.ndarray, new_level: int) -> None:
    """Assign (not accumulate) ``new_level`` to every cell and flag it marked."""
    if new_level < 1:
        raise ValueError("new_level must be >= 1")
    if isinstance(cells, np.ndarray):
        field.flat_levels[cells] = new_level
        field.flat_marked[cells] = True
        return
    for c in cells:
        field.levels[c.y, c.x] = new_level
        field.robot_marked[c.y, c.x] = True


def min_over(field: PheromoneField, cells) -> tuple[int, set[Cell]]:
    """Exact minimum level over a cell set and all cells attaining it."""
    if isinstance(cells, np.ndarray):
        if cells.size == 0:
            raise ValueError("empty cell set")
        levels = field.flat_levels[cells]
        m = int(levels.min())
        width = field.levels.shape[1]
        argmin = cells[levels == m]
        return m, {Cell(int(f) % width, int(f) // width) for f in argmin}
    cells = list(cells)
    if not cells:
        raise ValueError("empty cell set")
    m = min(int(field.levels[c.y, c.x]) for c in cells)
    return m, {c for c in cells if field.levels[c.y, c.x] == m}


def field_to_pgm(field: PheromoneField, domain: Domain) -> str:
    """P2 snapshot with levels min-max scaled to 0..255; obstacles render 0."""
    levels = field.levels
    free = domain.free
    vals = np.zeros_like(levels)
    if free.any():
        lo = int(levels[free].min())
        hi = int(levels[free].max())
        span = max(hi - lo, 1)
        vals[free] = (levels[free] - lo) * 255 // span
    lines = ["P2", f"{domain.width} {domain.height}", "255"]
    for row in vals:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def field_to_csv(field: PheromoneField) -> str:
    return "\n".join(",".join(str(int(v)) for v in row) for row in field.levels) + "\n"
