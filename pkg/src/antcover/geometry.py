"""Occupancy-grid domains with geodesic distance queries.

A domain is a rectangular grid of free/obstacle cells under one of three
metrics: L1 (4-neighbor), Linf (8-neighbor, unit diagonal) or an octile
approximation of L2 (8-neighbor, sqrt(2) diagonal).  Distances are always
geodesic: shortest paths through free cells only.
"""

from __future__ import annotations

import heapq
import math
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels

L1 = "l1"
L2 = "l2"
LINF = "linf"
METRICS = (L1, L2, LINF)

_METRIC_CODE = {L1: _kernels.METRIC_L1, LINF: _kernels.METRIC_LINF, L2: _kernels.METRIC_L2}

_EPS = 1e-9


class DomainError(ValueError):
    """Raised for malformed or disconnected domain inputs."""


class Cell(NamedTuple):
    x: int
    y: int


def metric_code(metric: str) -> int:
    if metric not in _METRIC_CODE:
        raise ValueError(f"unknown metric {metric!r}, expected one of {METRICS}")
    return _METRIC_CODE[metric]


def _neighbor_offsets(metric: str):
    axis = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0)]
    if metric == L1:
        return axis
    diag_cost = 1.0 if metric == LINF else math.sqrt(2.0)
    return axis + [(dx, dy, diag_cost) for dx in (-1, 1) for dy in (-1, 1)]


@dataclass(frozen=True, eq=False)
class Domain:
    """Immutable occupancy grid; safe for shared concurrent reads."""

    free: np.ndarray  # bool, shape (height, width)
    metric: str = LINF

    def __post_init__(self):
        free = np.ascontiguousarray(self.free, dtype=bool)
        object.__setattr__(self, "free", free)
        free.setflags(write=False)
        if free.ndim != 2 or free.shape[0] < 1 or free.shape[1] < 1:
            raise DomainError("domain must be a 2-D grid with positive size")
        metric_code(self.metric)
        if self.free_count == 0:
            raise DomainError("domain has no free cells")
        if not self._connected():
            raise DomainError("free cells are disconnected under the metric adjacency")

    @property
    def height(self) -> int:
        return self.free.shape[0]

    @property
    def width(self) -> int:
        return self.free.shape[1]

    @property
    def free_count(self) -> int:
        return int(np.count_nonzero(self.free))

    @property
    def free_flat(self) -> np.ndarray:
        """Flat ids (y * width + x) of free cells, ascending."""
        return np.flatnonzero(self.free.ravel())

    def flat_u8(self) -> np.ndarray:
        return np.ascontiguousarray(self.free.ravel(), dtype=np.uint8)

    def is_free(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height and bool(self.free[y, x])

    def cell_of(self, flat: int) -> Cell:
        return Cell(int(flat) % self.width, int(flat) // self.width)

    def flat_of(self, cell: Cell) -> int:
        if not self.is_free(cell):
            raise DomainError(f"cell {cell} is not a free cell of the domain")
        return cell.y * self.width + cell.x

    def _connected(self) -> bool:
        free = self.flat_u8()
        start = int(np.flatnonzero(free)[0])
        n = free.shape[0]
        dist = np.empty(n, dtype=np.float64)
        token = np.full(n, -1, dtype=np.int64)
        order = np.empty(n, dtype=np.int64)
        cnt = _kernels.distance_sweep(
            free, self.width, self.height, start, 1e18,
            metric_code(self.metric), dist, token, 0, order,
        )
        return cnt == self.free_count

    def to_text(self) -> str:
        rows = ["".join("." if f else "#" for f in row) for row in self.free]
        return "\n".join(rows) + "\n"


def load_domain(text: str, metric: str = LINF) -> Domain:
    """Parse a '.'/'#' grid description; rejects ragged or disconnected input."""
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    if not lines:
        raise DomainError("empty domain description")
    width = len(lines[0])
    if any(len(ln) != width for ln in lines):
        raise DomainError("non-rectangular domain description")
    bad = set("".join(lines)) - {".", "#"}
    if bad:
        raise DomainError(f"unexpected characters in domain: {sorted(bad)}")
    free = np.array([[c == "." for c in ln] for ln in lines], dtype=bool)
    return Domain(free, metric)


def load_domain_file(path, metric: str = LINF) -> Domain:
    """Load a domain from a '.'/'#' text file or a PGM (P2/P5) image."""
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head in (b"P2", b"P5"):
        return load_pgm(path, metric)
    with open(path, "r") as fh:
        return load_domain(fh.read(), metric)


def load_pgm(path, metric: str = LINF) -> Domain:
    """PGM reader: luminance >= 128 (scaled to a 0-255 range) means free."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith((b"P2", b"P5")):
        raise DomainError("not a P2/P5 PGM file")
    magic = data[:2]
    # strip comments, then split the header tokens
    body = data[2:]
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 3:
        m = re.match(rb"\s*(#[^\n]*\n|\S+)", body[pos:])
        if m is None:
            raise DomainError("truncated PGM header")
        tok = m.group(1)
        pos += m.end()
        if not tok.startswith(b"#"):
            tokens.append(tok)
    width, height, maxval = (int(t) for t in tokens)
    if maxval <= 0:
        raise DomainError("bad PGM maxval")
    if magic == b"P5":
        raw = body[pos + 1 : pos + 1 + width * height]
        if len(raw) < width * height:
            raise DomainError("truncated PGM data")
        vals = np.frombuffer(raw, dtype=np.uint8).astype(np.int64)
    else:
        vals = np.array(body[pos:].split()[: width * height], dtype=np.int64)
        if vals.size < width * height:
            raise DomainError("truncated PGM data")
    lum = vals * 255 // maxval
    free = (lum >= 128).reshape(height, width)
    return Domain(free, metric)


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Geodesic distances from one source; inf where unreached (beyond cutoff)."""

    source: Cell
    dist: np.ndarray  # float64, shape (height, width)
    metric: str

    def at(self, cell: Cell) -> float:
        return float(self.dist[cell.y, cell.x])


def geodesic_dist_field(domain: Domain, source: Cell, cutoff: float | None = None) -> DistanceField:
    """Shortest-path distances over free cells from ``source``.

    Reference implementation using heapq; kernels do the bulk work elsewhere.
    """
    src = domain.flat_of(source)
    w, h = domain.width, domain.height
    free = domain.free
    lim = math.inf if cutoff is None else float(cutoff)
    dist = np.full((h, w), np.inf)
    dist[source.y, source.x] = 0.0
    offsets = _neighbor_offsets(domain.metric)
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        uy, ux = divmod(u, w)
        if d > dist[uy, ux]:
            continue
        for dx, dy, cost in offsets:
            vx, vy = ux + dx, uy + dy
            if not (0 <= vx < w and 0 <= vy < h) or not free[vy, vx]:
                continue
            nd = d + cost
            if nd > lim + _EPS:
                continue
            if nd < dist[vy, vx] - 1e-12:
                dist[vy, vx] = nd
                heapq.heappush(heap, (nd, vy * w + vx))
    dist.setflags(write=False)
    return DistanceField(source, dist, domain.metric)


def disk_cells(domain: Domain, center: Cell, r: float) -> set[Cell]:
    """Open geodesic disk: free cells with distance < r (always contains center)."""
    if r < 1:
        raise ValueError("radius must be >= 1")
    field = geodesic_dist_field(domain, center, cutoff=r)
    hi = _disk_hi(domain.metric, r)
    ys, xs = np.nonzero(field.dist < hi)
    return {Cell(int(x), int(y)) for x, y in zip(xs, ys)}


def ring_cells(domain: Domain, center: Cell, r1: float, r2: float) -> set[Cell]:
    """Closed geodesic ring: free cells with r1 <= distance <= r2."""
    if not (0 < r1 <= r2):
        raise ValueError("need 0 < r1 <= r2")
    field = geodesic_dist_field(domain, center, cutoff=r2)
    lo, hi = _ring_bounds(domain.metric, r1, r2)
    ys, xs = np.nonzero((field.dist > lo) & (field.dist < hi))
    return {Cell(int(x), int(y)) for x, y in zip(xs, ys)}


def _disk_hi(metric: str, r: float) -> float:
    # strict '< r'; integer-valued metrics compare against r - 0.5
    return r - _EPS if metric == L2 else r - 0.5


def _ring_bounds(metric: str, r1: float, r2: float) -> tuple[float, float]:
    if metric == L2:
        return r1 - _EPS, r2 + _EPS
    return r1 - 0.5, r2 + 0.5


def _prox_hi(metric: str, r: float) -> float:
    # closed '<= r' for monitor pairs
    return r + _EPS if metric == L2 else r + 0.5


def diameter(domain: Domain, exact: bool = True) -> float:
    """Maximum geodesic distance over all free-cell pairs.

    ``exact=False`` runs a 2-sweep pass instead: a fast lower bound, labeled
    approximate, never above the exact value.
    """
    free = domain.flat_u8()
    code = metric_code(domain.metric)
    if exact:
        return float(_kernels.all_pairs_diameter(free, domain.width, domain.height, code))
    return float(_kernels.two_sweep_diameter(free, domain.width, domain.height, code))


@dataclass(frozen=True, eq=False)
class Tessellation:
    """Partition of the free cells into tiles of geodesic diameter < r."""

    tile_of: np.ndarray  # int32, shape (height, width); -1 on obstacles
    count: int
    r: int

    def cells_of(self, tile: int) -> list[Cell]:
        ys, xs = np.nonzero(self.tile_of == tile)
        return [Cell(int(x), int(y)) for x, y in zip(xs, ys)]

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(tile_ptr, tile_cells) over flat ids, tiles in id order."""
        flat = self.tile_of.ravel()
        cells = np.flatnonzero(flat >= 0)
        order = np.argsort(flat[cells], kind="stable")
        cells = cells[order]
        counts = np.bincount(flat[cells], minlength=self.count)
        ptr = np.zeros(self.count + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return ptr, cells.astype(np.int64)


def tessellate(domain: Domain, r: int) -> Tessellation:
    """Partition free cells into tiles with geodesic diameter < r.

    Construction: r-by-r axis-aligned blocks, split into within-block
    connected components; any component whose geodesic diameter reaches r is
    exploded into single cells.  Tile ids are assigned row-major over blocks,
    so the tessellation is byte-stable.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    h, w = domain.height, domain.width
    tile_of = np.full((h, w), -1, dtype=np.int32)
    next_id = 0
    offsets = _neighbor_offsets(domain.metric)
    for by in range(0, h, r):
        for bx in range(0, w, r):
            block = [
                (x, y)
                for y in range(by, min(by + r, h))
                for x in range(bx, min(bx + r, w))
                if domain.free[y, x]
            ]
            seen: set[tuple[int, int]] = set()
            for start in block:
                if start in seen:
                    continue
                comp = _block_component(domain, start, bx, by, r, offsets, seen)
                next_id = _assign_tiles(domain, comp, r, tile_of, next_id)
    return Tessellation(tile_of, next_id, r)


def _assign_tiles(domain: Domain, comp: list[tuple[int, int]], r: int, tile_of, next_id: int) -> int:
    diam = _component_diameter(domain, comp, cutoff=r) if len(comp) > 1 else 0.0
    if r > 1 and diam < (r - _EPS if domain.metric == L2 else r - 0.5):
        for x, y in comp:
            tile_of[y, x] = next_id
        return next_id + 1
    # r == 1 or the component is too wide: single-cell tiles
    for x, y in comp:
        tile_of[y, x] = next_id
        next_id += 1
    return next_id


def _block_component(domain, start, bx, by, r, offsets, seen) -> list[tuple[int, int]]:
    h, w = domain.height, domain.width
    comp = [start]
    seen.add(start)
    head = 0
    while head < len(comp):
        ux, uy = comp[head]
        head += 1
        for dx, dy, _ in offsets:
            v = (ux + dx, uy + dy)
            vx, vy = v
            if not (bx <= vx < min(bx + r, w) and by <= vy < min(by + r, h)):
                continue
            if v in seen or not domain.free[vy, vx]:
                continue
            seen.add(v)
            comp.append(v)
    return comp


def _component_diameter(domain: Domain, comp: list[tuple[int, int]], cutoff: float | None = None) -> float:
    """All-pairs geodesic diameter of a small cell set (paths may leave the set).

    With a cutoff, pairs farther apart than the cutoff report inf, which is
    all the tessellation check needs.
    """
    best = 0.0
    cells = {Cell(x, y) for x, y in comp}
    for x, y in comp:
        field = geodesic_dist_field(domain, Cell(x, y), cutoff=cutoff)
        for c in cells:
            d = field.at(c)
            if d > best:
                best = d
    return best


def tessellation_count(domain: Domain, r: int) -> tuple[int, Tessellation]:
    tess = tessellate(domain, r)
    return tess.count, tess


@dataclass(frozen=True, eq=False)
class Neighborhoods:
    """Precomputed per-cell effector disk / sensing ring tables (CSR over flat
    ids) plus the monitor pair list (all free pairs at distance <= r)."""

    r: int
    metric: str
    disk_ptr: np.ndarray
    disk_idx: np.ndarray
    ring_ptr: np.ndarray
    ring_idx: np.ndarray
    pair_a: np.ndarray
    pair_b: np.ndarray

    def disk(self, flat: int) -> np.ndarray:
        return self.disk_idx[self.disk_ptr[flat] : self.disk_ptr[flat + 1]]

    def ring(self, flat: int) -> np.ndarray:
        return self.ring_idx[self.ring_ptr[flat] : self.ring_ptr[flat + 1]]


def build_neighborhoods(domain: Domain, r: int) -> Neighborhoods:
    if r < 1:
        raise ValueError("r must be >= 1")
    code = metric_code(domain.metric)
    disk_ptr, disk_idx, ring_ptr, ring_idx, pair_a, pair_b = _kernels.build_neighborhoods(
        domain.flat_u8(),
        domain.width,
        domain.height,
        code,
        float(r),
        _disk_hi(domain.metric, r),
        _ring_bounds(domain.metric, r, 2 * r)[0],
        _ring_bounds(domain.metric, r, 2 * r)[1],
        _prox_hi(domain.metric, r),
    )
    return Neighborhoods(r, domain.metric, disk_ptr, disk_idx, ring_ptr, ring_idx, pair_a, pair_b)
