"""Experiment runner: seeded batches of simulations, invariant monitors,
theoretical-bound certificates, revisit-gap statistics and the generators for
the benchmark domains (scatter/rooms/maze analogs, corridor loops, stars).
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field, replace
from typing import Optional

import numpy as np

from . import _kernels
from .field import NoiseProfile, PheromoneField, init_field
from .geometry import (
    Domain,
    Neighborhoods,
    Tessellation,
    build_neighborhoods,
    diameter,
    load_domain_file,
    metric_code,
    tessellate,
)
from .walkers import (
    DomainTooSmallError,
    Robot,
    SimState,
    TieBreak,
    maw_step,
    random_walk_step,
)

# ---------------------------------------------------------------------------
# bound certificates


@dataclass(frozen=True)
class BoundCertificate:
    """Worst-case step counts recomputed from the domain at hand.

    coverage_bound: tiles * ceil(diameter/r) + 1 steps to first full coverage.
    revisit_bound: 2 * tiles * (ceil(diameter/r) + 1) between sweeps of a cell.
    noisy_bound: tiles * (max_init - min_init + ceil(diameter/r)) + 1, present
    only when the initial field is nonzero somewhere.
    """

    diameter: float
    tiles: int
    r: int
    gap_bound: int  # ceil(diameter / r): max level difference between any two cells
    coverage_bound: int
    revisit_bound: int
    noisy_bound: Optional[int] = None
    max_init_level: int = 0
    min_init_level: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def bound_certificate(
    domain: Domain,
    r: int,
    noise: NoiseProfile | None = None,
    *,
    tess: Tessellation | None = None,
    exact_diameter: float | None = None,
    init_levels: np.ndarray | None = None,
) -> BoundCertificate:
    d = diameter(domain) if exact_diameter is None else exact_diameter
    if tess is None:
        tess = tessellate(domain, r)
    n = tess.count
    gap = math.ceil(d / r - 1e-12) if d > 0 else 1
    gap = max(gap, 1)
    coverage = n * gap + 1
    revisit = 2 * n * (gap + 1)
    noisy = None
    max_init = min_init = 0
    if noise is not None and noise.kind != "none" and noise.fraction > 0:
        if init_levels is None:
            init_levels = init_field(domain, noise).levels
        free_levels = init_levels[domain.free]
        max_init = int(free_levels.max())
        min_init = int(free_levels.min())
        noisy = n * (max_init - min_init + gap) + 1
    return BoundCertificate(float(d), n, r, gap, coverage, revisit, noisy, max_init, min_init)


# ---------------------------------------------------------------------------
# domain generators


def gen_empty(width: int, height: int, metric: str = "linf") -> Domain:
    return Domain(np.ones((height, width), dtype=bool), metric)


def gen_scatter(width: int, height: int, seed: int = 0, density: float = 0.12, metric: str = "linf") -> Domain:
    """Sparse scattered block obstacles (benchmark domain A analog)."""
    rng = np.random.default_rng(seed)
    free = np.ones((height, width), dtype=bool)
    target = density * width * height
    blocked = 0
    attempts = 0
    while blocked < target and attempts < 500:
        attempts += 1
        bw = int(rng.integers(2, max(3, width // 12) + 1))
        bh = int(rng.integers(2, max(3, height // 12) + 1))
        x = int(rng.integers(0, width - bw + 1))
        y = int(rng.integers(0, height - bh + 1))
        patch = free[y : y + bh, x : x + bw].copy()
        free[y : y + bh, x : x + bw] = False
        if free.any() and _is_connected(free, metric):
            blocked += int(patch.sum())
        else:
            free[y : y + bh, x : x + bw] = patch
    return Domain(free, metric)


def gen_rooms(width: int, height: int, seed: int = 0, pitch: int = 13, metric: str = "linf") -> Domain:
    """Office-like rooms and corridors (benchmark domain B analog): a grid of
    walls with a 2-cell door carved into every wall segment."""
    rng = np.random.default_rng(seed)
    free = np.ones((height, width), dtype=bool)
    xs = list(range(pitch, width - 2, pitch))
    ys = list(range(pitch, height - 2, pitch))
    for wx in xs:
        free[:, wx] = False
    for wy in ys:
        free[wy, :] = False
    # doors: one per wall segment between consecutive crossings
    ybreaks = [0] + ys + [height]
    xbreaks = [0] + xs + [width]
    for wx in xs:
        for y0, y1 in zip(ybreaks[:-1], ybreaks[1:]):
            lo, hi = y0 + 1 if y0 else 0, y1 - 1 if y1 < height else height
            if hi - lo < 2:
                continue
            door = int(rng.integers(lo, hi - 1))
            free[door : door + 2, wx] = True
    for wy in ys:
        for x0, x1 in zip(xbreaks[:-1], xbreaks[1:]):
            lo, hi = x0 + 1 if x0 else 0, x1 - 1 if x1 < width else width
            if hi - lo < 2:
                continue
            door = int(rng.integers(lo, hi - 1))
            free[wy, door : door + 2] = True
    return Domain(free, metric)


def gen_maze(width: int, height: int, seed: int = 0, metric: str = "linf") -> Domain:
    """Recursive-backtracker maze with 1-cell corridors (domain C analog).

    The maze proper has odd dimensions; any leftover border row/column stays
    walled so the requested width/height are met exactly.  After carving the
    corridor tree, every dead end gets one extra wall knocked out (a braid
    maze), leaving a multiply connected corridor network.
    """
    cw, ch = (width - 1) // 2, (height - 1) // 2
    if cw < 1 or ch < 1:
        return gen_empty(width, height, metric)
    rng = np.random.default_rng(seed)
    free = np.zeros((height, width), dtype=bool)
    visited = np.zeros((ch, cw), dtype=bool)
    stack = [(0, 0)]
    visited[0, 0] = True
    free[1, 1] = True
    while stack:
        cx, cy = stack[-1]
        nbrs = [
            (cx + dx, cy + dy)
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
            if 0 <= cx + dx < cw and 0 <= cy + dy < ch and not visited[cy + dy, cx + dx]
        ]
        if not nbrs:
            stack.pop()
            continue
        nx, ny = nbrs[int(rng.integers(0, len(nbrs)))]
        visited[ny, nx] = True
        free[2 * ny + 1, 2 * nx + 1] = True
        free[cy + ny + 1, cx + nx + 1] = True  # knock the wall between the two cells
        stack.append((nx, ny))
    # braid: open one extra wall at every dead end so corridors form loops
    for cy in range(ch):
        for cx in range(cw):
            y, x = 2 * cy + 1, 2 * cx + 1
            dirs = [(dx, dy) for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
                    if 0 <= cx + dx < cw and 0 <= cy + dy < ch]
            open_walls = [d for d in dirs if free[y + d[1], x + d[0]]]
            if len(open_walls) != 1:
                continue
            shut = [d for d in dirs if d not in open_walls]
            if shut:
                dx, dy = shut[int(rng.integers(0, len(shut)))]
                free[y + dy, x + dx] = True
    return Domain(free, metric)


def gen_loops_domain(loop_count: int, r: int = 3, metric: str = "linf", with_labels: bool = False):
    """Chain of 1-cell-wide rectangular corridor loops sharing edge columns.

    Each loop is a (2r+3)-square ring, so its perimeter exceeds 4*(2r) and a
    robot can circulate it.  ``with_labels=True`` additionally returns the
    per-cell chain-position label used by the adversarial tie-break: labels
    grow toward the tail of the chain, so dragging to the lowest label keeps
    pulling the robot back through loops it already walked.
    """
    if loop_count < 1:
        raise ValueError("loop_count must be >= 1")
    s = 2 * r + 3  # outer side of one loop
    width = (s - 1) * loop_count + 1
    free = np.zeros((s, width), dtype=bool)
    for i in range(loop_count):
        x0 = (s - 1) * i
        x1 = x0 + s - 1
        free[0, x0 : x1 + 1] = True
        free[s - 1, x0 : x1 + 1] = True
        free[:, x0] = True
        free[:, x1] = True
    labels = np.tile(np.arange(width, dtype=np.int32), (s, 1))
    labels = np.where(free, labels, 0).astype(np.int32)
    dom = Domain(free, metric)
    if with_labels:
        return dom, labels
    return dom


_STAR_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1))


def gen_star_domain(spokes: int, spoke_len: int, metric: str = "linf") -> Domain:
    """1-cell-wide spokes radiating from a hub cell.

    Up to 8 spokes take distinct grid directions (axis directions first, so
    small counts work under L1 too); beyond 8, extra spokes extend existing
    arms outward in ``spoke_len`` segments, keeping the free-cell count at
    spokes * spoke_len + 1.
    """
    if spokes < 1 or spoke_len < 1:
        raise ValueError("need spokes >= 1 and spoke_len >= 1")
    arm_segments = [0] * 8
    for s in range(spokes):
        arm_segments[s % 8] += 1
    reach = spoke_len * max(arm_segments)
    size = 2 * reach + 1
    free = np.zeros((size, size), dtype=bool)
    free[reach, reach] = True
    for d, segs in enumerate(arm_segments):
        dx, dy = _STAR_DIRS[d]
        for step in range(1, segs * spoke_len + 1):
            free[reach + dy * step, reach + dx * step] = True
    return Domain(free, metric)


def _is_connected(free: np.ndarray, metric: str) -> bool:
    u8 = np.ascontiguousarray(free.ravel(), dtype=np.uint8)
    idx = np.flatnonzero(u8)
    if idx.size == 0:
        return False
    n = u8.shape[0]
    dist = np.empty(n, dtype=np.float64)
    token = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    cnt = _kernels.distance_sweep(
        u8, free.shape[1], free.shape[0], int(idx[0]), 1e18,
        metric_code(metric), dist, token, 0, order,
    )
    return cnt == idx.size


GENERATORS = ("empty", "scatter", "rooms", "maze", "loops", "star")


def gen_domain(spec: str, width: int = 100, height: int = 100, seed: int = 0,
               r: int = 3, metric: str = "linf") -> Domain:
    """Build a domain from a generator spec string: ``empty``, ``scatter``,
    ``rooms``, ``maze``, ``loops:N`` or ``star:K:LEN``."""
    parts = spec.split(":")
    name = parts[0]
    if name == "empty":
        return gen_empty(width, height, metric)
    if name == "scatter":
        return gen_scatter(width, height, seed, metric=metric)
    if name == "rooms":
        return gen_rooms(width, height, seed, metric=metric)
    if name == "maze":
        return gen_maze(width, height, seed, metric=metric)
    if name == "loops":
        if len(parts) != 2:
            raise ValueError("loops spec is loops:N")
        return gen_loops_domain(int(parts[1]), r, metric)
    if name == "star":
        if len(parts) != 3:
            raise ValueError("star spec is star:K:LEN")
        return gen_star_domain(int(parts[1]), int(parts[2]), metric)
    raise ValueError(f"unknown generator {name!r}; expected one of {GENERATORS}")


# ---------------------------------------------------------------------------
# experiment configuration and per-run results


@dataclass(frozen=True)
class ExperimentConfig:
    domain: object = None  # Domain | path str | generator spec str
    metric: str = "linf"
    r: int = 3
    robots: int = 1
    algorithm: str = "maw"
    tie_break: str = "seeded_random"
    noise: NoiseProfile = dc_field(default_factory=NoiseProfile)
    runs: int = 100
    seed: int = 0
    max_steps: Optional[int] = None  # default: the applicable bound certificate
    monitors: str = "off"  # off | sampled | all
    monitor_sampling: int = 200  # pairs per step in sampled mode
    extend_past_cover: int = 0  # keep running this many steps after coverage
    width: int = 100
    height: int = 100
    jobs: int = 1
    record_potential: bool = False

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("r must be >= 2")
        if self.robots < 1 or self.runs < 1:
            raise ValueError("robots and runs must be >= 1")
        if self.algorithm not in ("maw", "random_walk"):
            raise ValueError("algorithm must be 'maw' or 'random_walk'")
        if self.monitors not in ("off", "sampled", "all"):
            raise ValueError("monitors must be off|sampled|all")


MONITOR_NAMES = (
    "proximity",
    "global_gap",
    "monotone",
    "step_distance",
    "potential",
)


@dataclass
class RunResult:
    run_index: int
    seed: int
    cover_time_swept: int  # -1 when uncovered at the cap
    cover_time_marked: int
    steps: int
    max_revisit_gap: int
    violations: dict
    potential_ok: bool  # S_t >= t held at every step
    potential_strict_ok: bool  # S strictly increased at every step
    start_cells: list
    covered: bool
    potential_series: Optional[np.ndarray] = None

    @property
    def violations_total(self) -> int:
        return sum(self.violations.values())


@dataclass
class RunReport:
    config: ExperimentConfig
    certificate: BoundCertificate
    results: list

    @property
    def cover_times(self) -> np.ndarray:
        return np.array([r.cover_time_swept for r in self.results if r.covered], dtype=np.int64)

    @property
    def uncovered_runs(self) -> int:
        return sum(1 for r in self.results if not r.covered)

    @property
    def violations_total(self) -> int:
        return sum(r.violations_total for r in self.results)

    def summary(self) -> dict:
        ct = self.cover_times
        return {
            "runs": len(self.results),
            "covered": len(self.results) - self.uncovered_runs,
            "uncovered": self.uncovered_runs,
            "mean_cover_time": float(ct.mean()) if ct.size else math.nan,
            "std_cover_time": float(ct.std(ddof=1)) if ct.size > 1 else 0.0,
            "min_cover_time": int(ct.min()) if ct.size else -1,
            "max_cover_time": int(ct.max()) if ct.size else -1,
            "max_revisit_gap": max((r.max_revisit_gap for r in self.results), default=0),
            "violations_total": self.violations_total,
            "potential_ok_all": all(r.potential_ok for r in self.results),
        }

    def results_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            [
                "run_index", "seed", "algorithm", "robots",
                "noise_kind", "noise_fraction", "noise_value",
                "cover_time_swept", "cover_time_marked",
                "max_revisit_gap", "violations_total",
            ]
        )
        cfg = self.config
        for r in self.results:
            w.writerow(
                [
                    r.run_index, r.seed, cfg.algorithm, cfg.robots,
                    cfg.noise.kind, cfg.noise.fraction, cfg.noise.value,
                    r.cover_time_swept, r.cover_time_marked,
                    r.max_revisit_gap, r.violations_total,
                ]
            )
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        s = self.summary()
        cfg = self.config
        w.writerow(
            ["algorithm", "robots", "noise_kind", "noise_fraction", "noise_value"]
            + list(s.keys())
        )
        w.writerow(
            [cfg.algorithm, cfg.robots, cfg.noise.kind, cfg.noise.fraction, cfg.noise.value]
            + [s[k] for k in s]
        )
        return buf.getvalue()


# ---------------------------------------------------------------------------
# shared per-experiment context (domain tables computed once)


@dataclass(eq=False)
class ExperimentContext:
    config: ExperimentConfig
    domain: Domain
    nbrs: Neighborhoods
    tess: Tessellation
    certificate: BoundCertificate
    tile_ptr: np.ndarray
    tile_cells: np.ndarray
    tile_of_flat: np.ndarray
    loop_id: np.ndarray
    max_steps: int


def resolve_domain(cfg: ExperimentConfig):
    """Returns (domain, loop_labels or None) from the config's domain field."""
    src = cfg.domain
    if isinstance(src, Domain):
        return src, None
    if isinstance(src, tuple) and isinstance(src[0], Domain):
        return src  # (domain, loop labels)
    if isinstance(src, str):
        if src.split(":")[0] in GENERATORS:
            if src.split(":")[0] == "loops":
                return gen_loops_domain(int(src.split(":")[1]), cfg.r, cfg.metric, with_labels=True)
            return gen_domain(src, cfg.width, cfg.height, cfg.seed, cfg.r, cfg.metric), None
        return load_domain_file(src, cfg.metric), None
    raise ValueError(f"cannot resolve a domain from {src!r}")


def build_context(cfg: ExperimentConfig) -> ExperimentContext:
    domain, labels = resolve_domain(cfg)
    nbrs = build_neighborhoods(domain, cfg.r)
    tess = tessellate(domain, cfg.r)
    cert = bound_certificate(domain, cfg.r, cfg.noise, tess=tess)
    tile_ptr, tile_cells = tess.csr()
    if labels is None:
        labels = np.zeros((domain.height, domain.width), dtype=np.int32)
    max_steps = cfg.max_steps
    if max_steps is None:
        base = cert.noisy_bound if cert.noisy_bound is not None else cert.coverage_bound
        # bounds count whole-team time units; the activation cap scales with k
        base *= cfg.robots
        max_steps = 20 * base if cfg.algorithm == "random_walk" else base
    return ExperimentContext(
        cfg, domain, nbrs, tess, cert, tile_ptr, tile_cells,
        np.ascontiguousarray(tess.tile_of.ravel(), dtype=np.int64),
        np.ascontiguousarray(labels.ravel(), dtype=np.int64), int(max_steps),
    )


def _run_seeds(cfg: ExperimentConfig, run_index: int):
    """Documented splitting rule: SeedSequence((seed, run_index)) spawns the
    noise, start-position and step-stream generators, so any run is
    individually replayable from (seed, run_index)."""
    ss = np.random.SeedSequence((cfg.seed, run_index))
    noise_ss, start_ss, stream_ss = ss.spawn(3)
    return (
        np.random.default_rng(noise_ss),
        np.random.default_rng(start_ss),
        np.random.default_rng(stream_ss),
    )


def _start_positions(domain: Domain, field: PheromoneField, k: int, rng) -> np.ndarray:
    """Clean runs start anywhere free; noisy runs start at minimal-level cells."""
    free = domain.free_flat
    levels = field.flat_levels[free]
    lo = levels.min()
    candidates = free[levels == lo] if lo > 0 or (field.noisy_cells > 0) else free
    return rng.choice(candidates, size=k, replace=True).astype(np.int64)


def run_single(ctx: ExperimentContext, run_index: int) -> RunResult:
    cfg = ctx.config
    noise_rng, start_rng, stream_rng = _run_seeds(cfg, run_index)
    field = init_field(ctx.domain, cfg.noise, rng=noise_rng)
    starts = _start_positions(ctx.domain, field, cfg.robots, start_rng)
    total_cap = ctx.max_steps + cfg.extend_past_cover
    stream = stream_rng.integers(0, 2**62, size=total_cap + 1, dtype=np.int64)
    if cfg.monitors == "off":
        return _run_kernel(ctx, run_index, field, starts, stream)
    return _run_monitored(ctx, run_index, field, starts, stream)


def _time_units(activations: int, robots: int) -> int:
    """Convert an activation count to whole-team time units.

    One time unit activates every robot once (clock phases staggered inside
    it), so reported cover times and revisit gaps are comparable across team
    sizes.  Sentinel values (< 0) pass through.
    """
    if activations < 0 or robots <= 1:
        return activations
    return -(-activations // robots)


def _run_kernel(ctx, run_index, field, starts, stream) -> RunResult:
    cfg = ctx.config
    noisy = 1 if (cfg.noise.kind != "none" and cfg.noise.fraction > 0) else 0
    levels = np.ascontiguousarray(field.flat_levels)
    marked = np.zeros(levels.shape[0], dtype=np.uint8)
    swept = np.zeros(levels.shape[0], dtype=np.uint8)
    last_sweep = np.zeros(levels.shape[0], dtype=np.int64)
    positions = starts.copy()
    record = 1 if cfg.record_potential else 0
    total_cap = ctx.max_steps + cfg.extend_past_cover
    s_series = np.zeros(total_cap + 1 if record else 1, dtype=np.int64)
    out = np.zeros(9, dtype=np.int64)
    _kernels.run_sim(
        _kernels.ALGO_MAW if cfg.algorithm == "maw" else _kernels.ALGO_RANDOM_WALK,
        TieBreak(cfg.tie_break).code,
        levels,
        marked,
        positions,
        ctx.nbrs.disk_ptr,
        ctx.nbrs.disk_idx,
        ctx.nbrs.ring_ptr,
        ctx.nbrs.ring_idx,
        ctx.loop_id,
        ctx.tile_of_flat,
        ctx.tile_ptr,
        ctx.tile_cells,
        noisy,
        ctx.domain.free_count,
        stream,
        ctx.max_steps,
        cfg.extend_past_cover,
        swept,
        last_sweep,
        s_series,
        record,
        out,
    )
    if out[6] == _kernels.ERR_DOMAIN_TOO_SMALL:
        raise DomainTooSmallError("sensing ring empty on a domain larger than the effector")
    cover = _time_units(int(out[0]), cfg.robots)
    return RunResult(
        run_index=run_index,
        seed=cfg.seed,
        cover_time_swept=cover,
        cover_time_marked=_time_units(int(out[1]), cfg.robots),
        steps=int(out[2]),
        max_revisit_gap=_time_units(int(out[5]), cfg.robots),
        violations={},
        potential_ok=bool(out[4] == -1 or noisy),
        potential_strict_ok=bool(out[3] == -1 or noisy),
        start_cells=[ctx.domain.cell_of(int(s)) for s in starts],
        covered=cover >= 0,
        potential_series=s_series[: int(out[2]) + 1] if record else None,
    )


# ---------------------------------------------------------------------------
# monitored (reference stepper) path


def monitor_proximity(state: SimState, sampling: int = 0, noisy: bool = False, rng=None) -> int:
    """Count level gaps > 1 over free pairs at geodesic distance <= r.

    ``sampling`` > 0 checks that many random pairs; 0 checks every pair.  In
    noisy runs only pairs where both cells were robot-written are in scope.
    """
    pa, pb = state.nbrs.pair_a, state.nbrs.pair_b
    if sampling and pa.size > sampling:
        idx = (rng or np.random.default_rng(0)).integers(0, pa.size, size=sampling)
        pa, pb = pa[idx], pb[idx]
    levels = state.field.flat_levels
    bad = np.abs(levels[pa] - levels[pb]) > 1
    if noisy:
        marked = state.field.flat_marked
        bad &= marked[pa] & marked[pb]
    return int(np.count_nonzero(bad))


@dataclass(frozen=True)
class PotentialAudit:
    ok: bool  # S_t >= t everywhere
    strictly_increasing: bool
    first_lag: int  # first t with S_t < t, or -1
    first_flat: int  # first t with S_t <= S_{t-1}, or -1


def monitor_potential(s_series: np.ndarray) -> PotentialAudit:
    """Audit a recorded potential-sum history: strict growth and S_t >= t."""
    t = np.arange(s_series.size)
    lag = np.flatnonzero(s_series < t)
    flat = np.flatnonzero(np.diff(s_series) <= 0) + 1
    return PotentialAudit(
        ok=lag.size == 0,
        strictly_increasing=flat.size == 0,
        first_lag=int(lag[0]) if lag.size else -1,
        first_flat=int(flat[0]) if flat.size else -1,
    )


def _tile_minima(levels, marked, tile_ptr, tile_cells, noisy: bool) -> np.ndarray:
    vals = levels[tile_cells]
    if noisy:
        big = np.int64(2**62)
        vals = np.where(marked[tile_cells], vals, big)
    mins = np.minimum.reduceat(vals, tile_ptr[:-1])
    if noisy:
        mins = np.where(mins == np.int64(2**62), 0, mins)
    return mins


def _run_monitored(ctx: ExperimentContext, run_index, field, starts, stream) -> RunResult:
    cfg = ctx.config
    noisy = cfg.noise.kind != "none" and cfg.noise.fraction > 0
    state = SimState(
        domain=ctx.domain,
        r=cfg.r,
        field=field,
        robots=[Robot(i, ctx.domain.cell_of(int(p))) for i, p in enumerate(starts)],
        nbrs=ctx.nbrs,
        tie=TieBreak(cfg.tie_break),
        rand_stream=stream,
        loop_id=ctx.loop_id.reshape(ctx.domain.height, ctx.domain.width),
    )
    sampling = 0 if cfg.monitors == "all" else cfg.monitor_sampling
    mon_rng = np.random.default_rng((cfg.seed, run_index, 7))
    violations = {name: 0 for name in MONITOR_NAMES}
    free_mask = ctx.domain.free.ravel()
    gap_bound = ctx.certificate.gap_bound

    levels = state.field.flat_levels
    marked = state.field.flat_marked
    mins = _tile_minima(levels, marked, ctx.tile_ptr, ctx.tile_cells, noisy)
    pos_flat = np.array([ctx.domain.flat_of(r.pos) for r in state.robots])
    s_prev = int(mins.sum() - levels[pos_flat].sum())
    s_series = [s_prev]

    total_cap = ctx.max_steps + cfg.extend_past_cover
    cover = -1
    cover_marked = -1
    while state.t < total_cap:
        if cover >= 0 and (cfg.extend_past_cover <= 0 or state.t >= cover + cfg.extend_past_cover):
            break
        j = state.t % len(state.robots)
        prev_levels = levels.copy()
        prev_marked = marked.copy()
        p = ctx.domain.flat_of(state.robots[j].pos)
        if cfg.algorithm == "maw":
            outcome = maw_step(state, j)
        else:
            outcome = random_walk_step(state, j)
        if state.terminal_covered:
            cover = state.t
            break
        x = ctx.domain.flat_of(outcome.moved_to)

        # step geometry: the move target must lie in the sensing ring of p
        ring = state.nbrs.ring(p)
        i = int(np.searchsorted(ring, x))
        if i >= ring.size or ring[i] != x:
            violations["step_distance"] += 1

        # monotone levels (noisy runs: only robot-written cells must not drop)
        scope = prev_marked if noisy else free_mask
        if np.any(levels[scope] < prev_levels[scope]):
            violations["monotone"] += 1

        violations["proximity"] += monitor_proximity(state, sampling, noisy, mon_rng)

        if not noisy and cfg.algorithm == "maw":
            fl = levels[free_mask]
            if int(fl.max() - fl.min()) > gap_bound:
                violations["global_gap"] += 1

        mins = _tile_minima(levels, marked, ctx.tile_ptr, ctx.tile_cells, noisy)
        pos_flat = np.array([ctx.domain.flat_of(r.pos) for r in state.robots])
        s_t = int(mins.sum() - levels[pos_flat].sum())
        s_series.append(s_t)
        s_prev = s_t

        if cover < 0 and state.covered:
            cover = state.t
        if cover_marked < 0 and bool(marked[free_mask].all()):
            cover_marked = state.t

    series = np.array(s_series, dtype=np.int64)
    # audit the potential per whole-team time unit (every robot acted once);
    # the growth guarantees only speak about noise-free runs
    audit = (
        monitor_potential(series[:: cfg.robots])
        if cfg.algorithm == "maw" and not noisy
        else PotentialAudit(True, True, -1, -1)
    )
    # strict per-unit growth is a single-robot property; with overlapping
    # robots a unit's gain can be cancelled by a disk re-levelled under a
    # teammate, so multi-robot runs are held to S_t >= t only
    if not audit.ok or (cfg.robots == 1 and not audit.strictly_increasing):
        violations["potential"] += 1
    return RunResult(
        run_index=run_index,
        seed=cfg.seed,
        cover_time_swept=_time_units(cover, cfg.robots),
        cover_time_marked=_time_units(cover_marked, cfg.robots),
        steps=state.t,
        max_revisit_gap=_time_units(state.max_revisit_gap, cfg.robots),
        violations=violations,
        potential_ok=audit.ok,
        potential_strict_ok=audit.strictly_increasing,
        start_cells=[ctx.domain.cell_of(int(s)) for s in starts],
        covered=cover >= 0,
        potential_series=series if cfg.record_potential else None,
    )


# ---------------------------------------------------------------------------
# batch runner


_WORKER_CTX: ExperimentContext | None = None


def _worker_init(cfg: ExperimentConfig, free: np.ndarray, labels: np.ndarray):
    global _WORKER_CTX
    cfg = replace(cfg, domain=(Domain(free, cfg.metric), labels))
    _WORKER_CTX = build_context(cfg)


def _worker_run(run_index: int) -> RunResult:
    return run_single(_WORKER_CTX, run_index)


def run_experiment(cfg: ExperimentConfig, ctx: ExperimentContext | None = None) -> RunReport:
    """Execute ``cfg.runs`` independent seeded simulations and aggregate.

    Results are keyed by run index, so the report is identical whether runs
    execute sequentially or across ``cfg.jobs`` worker processes.
    """
    if ctx is None:
        ctx = build_context(cfg)
    if cfg.jobs > 1:
        labels = ctx.loop_id.reshape(ctx.domain.height, ctx.domain.width)
        with ProcessPoolExecutor(
            max_workers=cfg.jobs,
            initializer=_worker_init,
            initargs=(replace(cfg, domain=None), np.asarray(ctx.domain.free), labels),
        ) as pool:
            results = list(pool.map(_worker_run, range(cfg.runs), chunksize=4))
    else:
        results = [run_single(ctx, i) for i in range(cfg.runs)]
    return RunReport(cfg, ctx.certificate, results)


def revisit_stats(
    cfg: ExperimentConfig, extend_factor: int = 3, ctx: ExperimentContext | None = None
) -> RunReport:
    """Run past first coverage by ``extend_factor`` times the revisit bound and
    collect the max inter-sweep gap per run (start-to-first-sweep included)."""
    if ctx is None:
        ctx = build_context(cfg)
    cfg = replace(cfg, extend_past_cover=extend_factor * ctx.certificate.revisit_bound)
    ctx = replace_context_config(ctx, cfg)
    return run_experiment(cfg, ctx)


def replace_context_config(ctx: ExperimentContext, cfg: ExperimentConfig) -> ExperimentContext:
    ctx.config = cfg
    return ctx


# ---------------------------------------------------------------------------
# regression helper for the worst-case growth experiment


def loglog_slope(sizes, values) -> float:
    """Least-squares slope of log(values) against log(sizes)."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
