"""Hot inner loops: bounded geodesic distance sweeps, neighborhood tables and
the full-run simulator.

Every function here is written as plain Python over numpy arrays and gets
compiled with numba's ``@njit`` when available.  Setting the environment
variable ``MAW_NO_NUMBA=1`` (or running without numba installed) selects the
uncompiled fallback path; ``benchmarks/bench_kernels.py`` times both.
"""

import os

import numpy as np

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and os.environ.get("MAW_NO_NUMBA", "") not in (
    "1",
    "true",
    "yes",
)


def jit(fn):
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn


# metric codes shared with geometry.py
METRIC_L1 = 0
METRIC_LINF = 1
METRIC_L2 = 2

_SQRT2 = 1.4142135623730951

# 4-neighborhood first so the L1 case can stop after four entries
_DX = np.array([1, -1, 0, 0, 1, 1, -1, -1], dtype=np.int64)
_DY = np.array([0, 0, 1, -1, 1, -1, 1, -1], dtype=np.int64)


@jit
def _bfs_bounded(free, width, height, dist, token, cur, order, src, cutoff, n_dirs):
    """Unit-cost BFS from ``src`` over free cells, stopping at ``cutoff``.

    ``dist`` entries are only valid where ``token == cur``; ``order`` receives
    the flat ids of reached cells in visit order.  Returns the reached count.
    """
    head = 0
    tail = 0
    order[tail] = src
    tail += 1
    dist[src] = 0.0
    token[src] = cur
    while head < tail:
        u = order[head]
        head += 1
        du = dist[u]
        if du >= cutoff:
            continue
        ux = u % width
        uy = u // width
        for k in range(n_dirs):
            vx = ux + _DX[k]
            vy = uy + _DY[k]
            if vx < 0 or vx >= width or vy < 0 or vy >= height:
                continue
            v = vy * width + vx
            if free[v] == 0:
                continue
            if token[v] == cur:
                continue
            token[v] = cur
            dist[v] = du + 1.0
            order[tail] = v
            tail += 1
    return tail


@jit
def _dijkstra_bounded(
    free, width, height, dist, token, cur, order, heap_d, heap_i, src, cutoff
):
    """Octile Dijkstra (axis cost 1, diagonal sqrt(2)) with a binary heap.

    Same contract as ``_bfs_bounded``; ``order`` receives settled cells in
    nondecreasing distance order.
    """
    size = 0
    heap_d[0] = 0.0
    heap_i[0] = src
    size = 1
    dist[src] = 0.0
    token[src] = cur
    count = 0
    while size > 0:
        d = heap_d[0]
        u = heap_i[0]
        size -= 1
        heap_d[0] = heap_d[size]
        heap_i[0] = heap_i[size]
        # sift down
        i = 0
        while True:
            left = 2 * i + 1
            if left >= size:
                break
            small = left
            right = left + 1
            if right < size and heap_d[right] < heap_d[left]:
                small = right
            if heap_d[small] >= heap_d[i]:
                break
            heap_d[i], heap_d[small] = heap_d[small], heap_d[i]
            heap_i[i], heap_i[small] = heap_i[small], heap_i[i]
            i = small
        if d > dist[u] + 1e-12:
            continue  # stale entry
        order[count] = u
        count += 1
        ux = u % width
        uy = u // width
        for k in range(8):
            vx = ux + _DX[k]
            vy = uy + _DY[k]
            if vx < 0 or vx >= width or vy < 0 or vy >= height:
                continue
            v = vy * width + vx
            if free[v] == 0:
                continue
            step = 1.0 if k < 4 else _SQRT2
            nd = d + step
            if nd > cutoff + 1e-9:
                continue
            if token[v] == cur and dist[v] <= nd + 1e-12:
                continue
            token[v] = cur
            dist[v] = nd
            # sift up
            heap_d[size] = nd
            heap_i[size] = v
            i = size
            size += 1
            while i > 0:
                parent = (i - 1) // 2
                if heap_d[parent] <= heap_d[i]:
                    break
                heap_d[i], heap_d[parent] = heap_d[parent], heap_d[i]
                heap_i[i], heap_i[parent] = heap_i[parent], heap_i[i]
                i = parent
    return count


@jit
def distance_sweep(free, width, height, src, cutoff, metric, dist, token, cur, order):
    """Single-source geodesic distances, bounded by ``cutoff``.

    Dispatches on metric; scratch arrays are caller-owned so repeated sweeps
    avoid reallocation.  Returns the number of reached cells.
    """
    if metric == METRIC_L2:
        n = free.shape[0]
        heap_d = np.empty(16 * n + 16, dtype=np.float64)
        heap_i = np.empty(16 * n + 16, dtype=np.int64)
        return _dijkstra_bounded(
            free, width, height, dist, token, cur, order, heap_d, heap_i, src, cutoff
        )
    n_dirs = 4 if metric == METRIC_L1 else 8
    return _bfs_bounded(
        free, width, height, dist, token, cur, order, src, cutoff, n_dirs
    )


@jit
def all_pairs_diameter(free, width, height, metric):
    """Exact diameter: max geodesic distance over all free-cell pairs."""
    n = free.shape[0]
    dist = np.empty(n, dtype=np.float64)
    token = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    best = 0.0
    cur = 0
    for src in range(n):
        if free[src] == 0:
            continue
        cur += 1
        cnt = distance_sweep(
            free, width, height, src, 1e18, metric, dist, token, cur, order
        )
        for i in range(cnt):
            d = dist[order[i]]
            if d > best:
                best = d
    return best


@jit
def two_sweep_diameter(free, width, height, metric):
    """Fast diameter lower bound: farthest point from an arbitrary free cell,
    then farthest from that.  Never exceeds the exact diameter."""
    n = free.shape[0]
    dist = np.empty(n, dtype=np.float64)
    token = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    src = -1
    for i in range(n):
        if free[i] != 0:
            src = i
            break
    best = 0.0
    for sweep in range(2):
        cnt = distance_sweep(
            free, width, height, src, 1e18, metric, dist, token, sweep + 1, order
        )
        best = 0.0
        far = src
        for i in range(cnt):
            d = dist[order[i]]
            if d > best:
                best = d
                far = order[i]
        src = far
    return best


@jit
def build_neighborhoods(free, width, height, metric, r, disk_hi, ring_lo, ring_hi, prox_hi):
    """Per-cell effector/sensing tables as CSR over flat cell ids.

    For every free cell: the open-disk cells (distance < r), the closed ring
    cells (r <= distance <= 2r) and the monitor pair list (a < b at distance
    <= r).  Threshold floats encode the strict/closed comparisons per metric.
    All lists are sorted by flat id, which makes scan-order tie-breaking the
    least-(y,x) cell and keeps outputs byte-stable.
    """
    n = free.shape[0]
    dist = np.empty(n, dtype=np.float64)
    token = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)

    ri = int(r)
    max_reach = (4 * ri + 3) * (4 * ri + 3)
    disk_ptr = np.zeros(n + 1, dtype=np.int64)
    ring_ptr = np.zeros(n + 1, dtype=np.int64)

    # pass 1: counts
    cur = 0
    n_disk = 0
    n_ring = 0
    n_pair = 0
    for src in range(n):
        if free[src] == 0:
            continue
        cur += 1
        cnt = distance_sweep(
            free, width, height, src, 2.0 * r, metric, dist, token, cur, order
        )
        dc = 0
        rc = 0
        pc = 0
        for i in range(cnt):
            v = order[i]
            d = dist[v]
            if d < disk_hi:
                dc += 1
            elif d > ring_lo and d < ring_hi:
                rc += 1
            if v > src and d < prox_hi:
                pc += 1
        disk_ptr[src + 1] = dc
        ring_ptr[src + 1] = rc
        n_disk += dc
        n_ring += rc
        n_pair += pc
    for i in range(n):
        disk_ptr[i + 1] += disk_ptr[i]
        ring_ptr[i + 1] += ring_ptr[i]

    disk_idx = np.empty(n_disk, dtype=np.int64)
    ring_idx = np.empty(n_ring, dtype=np.int64)
    pair_a = np.empty(n_pair, dtype=np.int64)
    pair_b = np.empty(n_pair, dtype=np.int64)

    # pass 2: fill (sorted by flat id)
    scratch = np.empty(max_reach, dtype=np.int64)
    pair_pos = 0
    for src in range(n):
        if free[src] == 0:
            continue
        cur += 1
        cnt = distance_sweep(
            free, width, height, src, 2.0 * r, metric, dist, token, cur, order
        )
        for i in range(cnt):
            scratch[i] = order[i]
        sub = scratch[:cnt]
        sub.sort()
        dpos = disk_ptr[src]
        rpos = ring_ptr[src]
        for i in range(cnt):
            v = sub[i]
            d = dist[v]
            if d < disk_hi:
                disk_idx[dpos] = v
                dpos += 1
            elif d > ring_lo and d < ring_hi:
                ring_idx[rpos] = v
                rpos += 1
            if v > src and d < prox_hi:
                pair_a[pair_pos] = src
                pair_b[pair_pos] = v
                pair_pos += 1
    return disk_ptr, disk_idx, ring_ptr, ring_idx, pair_a, pair_b


@jit
def _tile_min(levels, marked, tile_cells, lo, hi, noisy):
    """Minimum level over one tile; in noisy runs only robot-written cells
    count and an unwritten tile contributes 0."""
    if noisy != 0:
        best = np.int64(2**62)
        found = False
        for i in range(lo, hi):
            u = tile_cells[i]
            if marked[u] != 0 and levels[u] < best:
                best = levels[u]
                found = True
        if not found:
            return np.int64(0)
        return best
    best = levels[tile_cells[lo]]
    for i in range(lo + 1, hi):
        u = tile_cells[i]
        if levels[u] < best:
            best = levels[u]
    return best


ERR_NONE = 0
ERR_DOMAIN_TOO_SMALL = 1

ALGO_MAW = 0
ALGO_RANDOM_WALK = 1

TIE_RANDOM = 0
TIE_SCAN = 1
TIE_ADVERSARIAL = 2


@jit
def run_sim(
    algo,
    tie_kind,
    levels,
    marked,
    positions,
    disk_ptr,
    disk_idx,
    ring_ptr,
    ring_idx,
    loop_id,
    tile_of,
    tile_ptr,
    tile_cells,
    noisy,
    free_count,
    rand_stream,
    max_steps,
    extend_after_cover,
    swept,
    last_sweep,
    s_series,
    record_s,
    out,
):
    """Run one simulation to coverage (or ``max_steps``) in a single call.

    Robots activate round-robin, one per time step; ``levels``/``marked``/
    ``positions``/``swept``/``last_sweep`` are mutated in place.  The running
    potential sum (per-tile minima minus levels at robot positions) is
    maintained incrementally so its audit is nearly free.

    ``out`` layout: [cover_swept, cover_marked, t_end, first_flat_s,
    first_lagging_s, max_revisit_gap, err, swept_count, marked_count].
    """
    k_robots = positions.shape[0]
    n_tiles = tile_ptr.shape[0] - 1

    tile_min = np.empty(n_tiles, dtype=np.int64)
    sum_tile_min = np.int64(0)
    for i in range(n_tiles):
        m = _tile_min(levels, marked, tile_cells, tile_ptr[i], tile_ptr[i + 1], noisy)
        tile_min[i] = m
        sum_tile_min += m
    pos_sum = np.int64(0)
    for j in range(k_robots):
        pos_sum += levels[positions[j]]
    s_prev = sum_tile_min - pos_sum
    if record_s != 0:
        s_series[0] = s_prev

    touched = np.empty(64, dtype=np.int64)  # distinct tiles under one disk

    swept_count = np.int64(0)
    marked_count = np.int64(0)
    cover_swept = np.int64(-1)
    cover_marked = np.int64(-1)
    first_flat = np.int64(-1)
    first_lag = np.int64(-1)
    max_gap = np.int64(0)
    err = ERR_NONE
    t = np.int64(0)

    while True:
        if cover_swept >= 0 and (
            extend_after_cover <= 0 or t >= cover_swept + extend_after_cover
        ):
            break
        if t >= max_steps:
            break

        j = t % k_robots
        p = positions[j]
        r_lo = ring_ptr[p]
        r_hi = ring_ptr[p + 1]
        d_lo = disk_ptr[p]
        d_hi = disk_ptr[p + 1]

        if r_hi == r_lo:
            if d_hi - d_lo == free_count:
                # effector reaches everything: sweep once and stop covered
                t += 1
                for i in range(d_lo, d_hi):
                    u = disk_idx[i]
                    if swept[u] == 0:
                        swept[u] = 1
                        swept_count += 1
                    gap = t - last_sweep[u]
                    if gap > max_gap:
                        max_gap = gap
                    last_sweep[u] = t
                cover_swept = t
                break
            err = ERR_DOMAIN_TOO_SMALL
            break

        did_mark = False
        if algo == ALGO_MAW:
            min_level = levels[ring_idx[r_lo]]
            n_min = 1
            for i in range(r_lo + 1, r_hi):
                lv = levels[ring_idx[i]]
                if lv < min_level:
                    min_level = lv
                    n_min = 1
                elif lv == min_level:
                    n_min += 1
            # tie-break over the argmin set
            x = np.int64(-1)
            if tie_kind == TIE_SCAN or n_min == 1:
                for i in range(r_lo, r_hi):
                    if levels[ring_idx[i]] == min_level:
                        x = ring_idx[i]
                        break
            elif tie_kind == TIE_RANDOM:
                pick = rand_stream[t] % n_min
                seen = 0
                for i in range(r_lo, r_hi):
                    if levels[ring_idx[i]] == min_level:
                        if seen == pick:
                            x = ring_idx[i]
                            break
                        seen += 1
            else:  # TIE_ADVERSARIAL: drag the robot back toward the first loop
                best_loop = np.int64(2**62)
                for i in range(r_lo, r_hi):
                    c = ring_idx[i]
                    if levels[c] == min_level and loop_id[c] < best_loop:
                        best_loop = loop_id[c]
                        x = c

            if levels[p] <= min_level:
                did_mark = True
                new_level = min_level + 1
                n_touched = 0
                for i in range(d_lo, d_hi):
                    u = disk_idx[i]
                    levels[u] = new_level
                    if marked[u] == 0:
                        marked[u] = 1
                        marked_count += 1
                    tid = tile_of[u]
                    dup = False
                    for q in range(n_touched):
                        if touched[q] == tid:
                            dup = True
                            break
                    if not dup:
                        touched[n_touched] = tid
                        n_touched += 1
                for q in range(n_touched):
                    tid = touched[q]
                    m = _tile_min(
                        levels, marked, tile_cells, tile_ptr[tid], tile_ptr[tid + 1], noisy
                    )
                    sum_tile_min += m - tile_min[tid]
                    tile_min[tid] = m
        else:  # ALGO_RANDOM_WALK
            x = ring_idx[r_lo + rand_stream[t] % (r_hi - r_lo)]

        t += 1
        for i in range(d_lo, d_hi):
            u = disk_idx[i]
            if swept[u] == 0:
                swept[u] = 1
                swept_count += 1
            gap = t - last_sweep[u]
            if gap > max_gap:
                max_gap = gap
            last_sweep[u] = t
        if swept_count == free_count and cover_swept < 0:
            cover_swept = t
        if did_mark and marked_count == free_count and cover_marked < 0:
            cover_marked = t
        positions[j] = x

        pos_sum = np.int64(0)
        for jj in range(k_robots):
            pos_sum += levels[positions[jj]]
        s_t = sum_tile_min - pos_sum
        if record_s != 0 and t < s_series.shape[0]:
            s_series[t] = s_t
        # potential audit in whole-team rounds: one time unit = every robot
        # activated once (clock phases staggered inside the unit)
        if t % k_robots == 0:
            if algo == ALGO_MAW:
                if s_t <= s_prev and first_flat < 0:
                    first_flat = t
                if s_t < t // k_robots and first_lag < 0:
                    first_lag = t
            s_prev = s_t

    out[0] = cover_swept
    out[1] = cover_marked
    out[2] = t
    out[3] = first_flat
    out[4] = first_lag
    out[5] = max_gap
    out[6] = err
    out[7] = swept_count
    out[8] = marked_count
