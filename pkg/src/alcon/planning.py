"""Non-learned planning: frontier detection, the random-frontier baseline,
peak extraction over score maps (the training-free planner), nearest-frontier
projection and grid shortest paths."""

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import ndimage

from .grids import (FREE, OBSTACLE, SCORE_MAX, UNKNOWN, Cell, GridGeometry,
                    OccupancyGrid, ScoreMap, stamp_disk)

SQRT2 = math.sqrt(2.0)

# fixed neighbor scan order; also the tie-break order of equal-cost paths
NEIGHBORS_8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1),
               (0, 1), (1, -1), (1, 0), (1, 1))


class Source(Enum):
    RF = "rf"
    TFP = "tfp"
    RLP_ON = "on"
    RLP_ALC = "alc"
    FUSED = "fused"


@dataclass
class SubgoalProposal:
    """A planner's suggested navigation target in world coordinates."""

    point: tuple[float, float] | None
    score: float
    source: Source
    valid: bool = True
    trace: dict = field(default_factory=dict)

    @staticmethod
    def invalid(source: Source, **trace) -> "SubgoalProposal":
        return SubgoalProposal(None, 0.0, source, valid=False, trace=trace)


@dataclass
class FrontierSet:
    """Free cells 4-adjacent to at least one Unknown cell, row-major order."""

    cells: np.ndarray  # (n, 2) int array of (row, col)
    geometry: GridGeometry

    def __len__(self) -> int:
        return len(self.cells)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.geometry
        xs = g.origin_x + (self.cells[:, 1] + 0.5) * g.resolution
        ys = g.origin_y + (self.cells[:, 0] + 0.5) * g.resolution
        return xs, ys


def detect_frontiers(observed: OccupancyGrid) -> FrontierSet:
    free = observed.cells == FREE
    unknown = observed.cells == UNKNOWN
    near_unknown = np.zeros_like(unknown)
    near_unknown[1:, :] |= unknown[:-1, :]
    near_unknown[:-1, :] |= unknown[1:, :]
    near_unknown[:, 1:] |= unknown[:, :-1]
    near_unknown[:, :-1] |= unknown[:, 1:]
    return FrontierSet(np.argwhere(free & near_unknown), observed.geometry)


def rf_plan(frontiers: FrontierSet,
            rng: np.random.Generator) -> SubgoalProposal:
    """Uniformly random frontier cell."""
    if len(frontiers) == 0:
        raise ValueError("no frontier")
    r, c = frontiers.cells[int(rng.integers(len(frontiers.cells)))]
    point = frontiers.geometry.cell_center(int(r), int(c))
    return SubgoalProposal(point, 0.0, Source.RF)


def nearest_frontier(point: tuple[float, float],
                     frontiers: FrontierSet) -> Cell:
    """Frontier cell whose center is Euclidean-closest to `point`; ties go
    to the lowest (row, col). Raises on an empty set."""
    if len(frontiers) == 0:
        raise ValueError("no frontier")
    cells = frontiers.cells
    xs, ys = frontiers.centers()
    d = (xs - point[0]) ** 2 + (ys - point[1]) ** 2
    best = np.lexsort((cells[:, 1], cells[:, 0], d))[0]
    return int(cells[best, 0]), int(cells[best, 1])


# ---------------------------------------------------------------------------
# peak extraction / training-free planner

TFP_DISK_LEVELS = (255, 150, 50)


@dataclass
class ScorePeak:
    point: tuple[float, float]  # centroid of the peak's equal-value region
    value: int                  # raw level 0..255


def extract_peaks(score: ScoreMap, count: int = 3,
                  nms_radius: float = 2.0) -> list[ScorePeak]:
    """Top score modes of a map, strongest first.

    Each peak is the centroid of the connected region of cells sharing the
    current maximum value (the disk-center convention: the centroid of a
    stamped disk is its center). The region plus everything within
    nms_radius of the centroid is suppressed before the next peak, so one
    blob yields one peak. Ties between equal-valued regions go to the one
    containing the lowest (row, col) cell.
    """
    g = score.geometry
    work = score.scores.copy()
    peaks: list[ScorePeak] = []
    for _ in range(count):
        vmax = int(work.max())
        if vmax <= 0:
            break
        at_max = work == vmax
        labels, _ = ndimage.label(at_max, structure=np.ones((3, 3), dtype=int))
        max_cells = np.argwhere(at_max)
        seed_r, seed_c = max_cells[np.lexsort((max_cells[:, 1],
                                               max_cells[:, 0]))][0]
        region = labels == labels[seed_r, seed_c]
        rows, cols = np.nonzero(region)
        cx = g.origin_x + (cols.mean() + 0.5) * g.resolution
        cy = g.origin_y + (rows.mean() + 0.5) * g.resolution
        peaks.append(ScorePeak((cx, cy), vmax))
        work[region] = 0
        _zero_disk(work, g, (cx, cy), nms_radius)
    return peaks


def _zero_disk(scores: np.ndarray, g: GridGeometry,
               center: tuple[float, float], radius: float) -> None:
    res = g.resolution
    cx, cy = center
    r0 = max(0, int(math.floor((cy - radius - g.origin_y) / res)))
    r1 = min(g.height - 1, int(math.ceil((cy + radius - g.origin_y) / res)))
    c0 = max(0, int(math.floor((cx - radius - g.origin_x) / res)))
    c1 = min(g.width - 1, int(math.ceil((cx + radius - g.origin_x) / res)))
    if r0 > r1 or c0 > c1:
        return
    ys = g.origin_y + (np.arange(r0, r1 + 1) + 0.5) * res
    xs = g.origin_x + (np.arange(c0, c1 + 1) + 0.5) * res
    dx = xs[None, :] - cx
    dy = ys[:, None] - cy
    mask = dx * dx + dy * dy <= radius * radius
    scores[r0:r1 + 1, c0:c1 + 1][mask] = 0


def render_peak_map(peaks: list[ScorePeak], geometry: GridGeometry,
                    disk_radius: float = 2.0) -> ScoreMap:
    """Clean score map with fixed-level disks (255/150/50 by rank) stamped
    at the given peaks; stronger disks win overlaps."""
    clean = ScoreMap(geometry)
    for rank in range(min(len(peaks), len(TFP_DISK_LEVELS)) - 1, -1, -1):
        stamp_disk(clean, peaks[rank].point, disk_radius,
                   TFP_DISK_LEVELS[rank])
    return clean


def tfp_plan(observed_score: ScoreMap,
             nms_radius: float = 2.0) -> SubgoalProposal:
    """Training-free peak planner: the strongest score mode of the map.

    Returns an invalid proposal on an all-zero map (callers fall back to
    the random-frontier baseline)."""
    peaks = extract_peaks(observed_score, count=3, nms_radius=nms_radius)
    if not peaks:
        return SubgoalProposal.invalid(Source.TFP, reason="all-zero score map")
    top = peaks[0]
    return SubgoalProposal(top.point, top.value / SCORE_MAX, Source.TFP,
                           trace={"peaks": len(peaks)})


# ---------------------------------------------------------------------------
# shortest paths

@dataclass
class GridPath:
    """8-connected path as a list of cells (start included) and its metric
    cost. The cost is canonical: (straight + diag*sqrt(2)) * resolution,
    recomputed from exact step counts."""

    cells: list[Cell]
    cost: float
    straight_steps: int
    diag_steps: int

    @property
    def moves(self) -> int:
        return len(self.cells) - 1


def _octile(dr: int, dc: int, res: float) -> float:
    adr, adc = abs(dr), abs(dc)
    lo, hi = (adr, adc) if adr < adc else (adc, adr)
    return ((hi - lo) + lo * SQRT2) * res


def shortest_path(grid: OccupancyGrid, a: Cell, b: Cell,
                  unknown_traversable: bool = False) -> GridPath | None:
    """Minimal-cost 8-connected path from a to b.

    Uniform-cost search with the octile heuristic (A*), which yields the
    same optimal costs as plain Dijkstra. Straight moves cost one
    resolution unit, diagonal moves sqrt(2) units. Obstacle cells are never
    traversable; Unknown cells only when the flag is set. Returns None when
    b is untraversable or disconnected from a. Tie-breaking is fixed by
    neighbor scan order and insertion order, so results are deterministic.
    """
    g = grid.geometry
    if not (g.in_bounds(*a) and g.in_bounds(*b)):
        raise ValueError("endpoint outside grid")
    if grid.cells[a[0], a[1]] == OBSTACLE:
        raise ValueError("start on an Obstacle cell")

    flat = grid.cells.tobytes()
    width, height = g.width, g.height
    res = g.resolution

    def traversable(idx: int) -> bool:
        s = flat[idx]
        return s == FREE or (unknown_traversable and s == UNKNOWN)

    goal = b[0] * width + b[1]
    if not traversable(goal):
        return None
    start = a[0] * width + a[1]
    if start == goal:
        return GridPath([a], 0.0, 0, 0)

    # g-scores as exact (straight, diag) counts; float costs recomputed
    # canonically so equal-cost paths compare equal bit-for-bit
    best: dict[int, tuple[int, int, float]] = {start: (0, 0, 0.0)}
    parent: dict[int, int] = {}
    counter = 0
    heap = [(_octile(b[0] - a[0], b[1] - a[1], res), 0.0, 0, start)]
    br, bc = b

    while heap:
        _, gcost, _, node = heapq.heappop(heap)
        s_cnt, d_cnt, node_g = best[node]
        if gcost > node_g:
            continue
        if node == goal:
            chain = [node]
            while chain[-1] != start:
                chain.append(parent[chain[-1]])
            chain.reverse()
            return GridPath([(p // width, p % width) for p in chain],
                            node_g, s_cnt, d_cnt)
        r, c = node // width, node % width
        for dr, dc in NEIGHBORS_8:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < height and 0 <= nc < width):
                continue
            nb = nr * width + nc
            if not traversable(nb):
                continue
            diag = dr != 0 and dc != 0
            ns = s_cnt + (not diag)
            nd = d_cnt + diag
            ng = (ns + nd * SQRT2) * res
            if ng < best.get(nb, (0, 0, math.inf))[2]:
                best[nb] = (ns, nd, ng)
                parent[nb] = node
                counter += 1
                heapq.heappush(heap, (ng + _octile(br - nr, bc - nc, res),
                                      ng, counter, nb))
    return None
