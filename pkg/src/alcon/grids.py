"""Metric grid primitives: occupancy grids, score maps, disks, view sectors,
bounding-box crops and the normalized model-input encoding.

Conventions used throughout the package:
  - cells are addressed as (row, col); row maps to y, col to x
  - world x = origin_x + (col + 0.5) * resolution (cell centers), same for y
  - occupancy states: UNKNOWN=0, FREE=1, OBSTACLE=2 (uint8 arrays)
  - score maps hold integer levels 0..255 (uint8 arrays)
"""

import math
from dataclasses import dataclass, field

import numpy as np

UNKNOWN = 0
FREE = 1
OBSTACLE = 2

SCORE_MAX = 255
MODEL_INPUT_SIZE = 240

Cell = tuple[int, int]


@dataclass(frozen=True)
class GridGeometry:
    """Shared metric frame of a grid: size, cell size and world origin.

    origin is the world coordinate of the outer corner of cell (0, 0),
    i.e. cell (r, c) spans [origin + c*res, origin + (c+1)*res) in x.
    """

    width: int
    height: int
    resolution: float
    origin_x: float = 0.0
    origin_y: float = 0.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (self.origin_x + (col + 0.5) * self.resolution,
                self.origin_y + (row + 0.5) * self.resolution)

    def world_to_cell(self, x: float, y: float) -> Cell:
        col = int(math.floor((x - self.origin_x) / self.resolution))
        row = int(math.floor((y - self.origin_y) / self.resolution))
        return row, col

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def contains_point(self, x: float, y: float) -> bool:
        return self.in_bounds(*self.world_to_cell(x, y))

    def cell_centers_xy(self):
        """Vector grids of cell-center coordinates, shape (height, width)."""
        xs = self.origin_x + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.origin_y + (np.arange(self.height) + 0.5) * self.resolution
        return np.meshgrid(xs, ys)


@dataclass
class OccupancyGrid:
    """Tri-state workspace map: each cell is Free, Obstacle or Unknown."""

    geometry: GridGeometry
    cells: np.ndarray = None

    def __post_init__(self):
        if self.cells is None:
            self.cells = np.zeros((self.geometry.height, self.geometry.width),
                                  dtype=np.uint8)
        else:
            self.cells = np.asarray(self.cells, dtype=np.uint8)
            if self.cells.shape != (self.geometry.height, self.geometry.width):
                raise ValueError("cell array shape does not match geometry")

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.geometry, self.cells.copy())

    def free_cells(self) -> np.ndarray:
        """All Free cells as an (n, 2) array of (row, col)."""
        return np.argwhere(self.cells == FREE)

    def state_at(self, x: float, y: float) -> int:
        r, c = self.geometry.world_to_cell(x, y)
        if not self.geometry.in_bounds(r, c):
            raise ValueError(f"point ({x}, {y}) outside grid")
        return int(self.cells[r, c])


@dataclass
class ScoreMap:
    """Single-channel 256-level score grid aligned with an OccupancyGrid."""

    geometry: GridGeometry
    scores: np.ndarray = None

    def __post_init__(self):
        if self.scores is None:
            self.scores = np.zeros((self.geometry.height, self.geometry.width),
                                   dtype=np.uint8)
        else:
            self.scores = np.asarray(self.scores, dtype=np.uint8)
            if self.scores.shape != (self.geometry.height, self.geometry.width):
                raise ValueError("score array shape does not match geometry")

    def copy(self) -> "ScoreMap":
        return ScoreMap(self.geometry, self.scores.copy())


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive cell-coordinate box (min_row, min_col) .. (max_row, max_col)."""

    min_row: int
    min_col: int
    max_row: int
    max_col: int

    def __post_init__(self):
        if self.min_row > self.max_row or self.min_col > self.max_col:
            raise ValueError("bounding box min exceeds max")

    @property
    def rows(self) -> int:
        return self.max_row - self.min_row + 1

    @property
    def cols(self) -> int:
        return self.max_col - self.min_col + 1

    def grown(self, margin_cells: int, geometry: GridGeometry) -> "BoundingBox":
        """Box expanded by margin_cells on every side, clipped to the grid."""
        return BoundingBox(
            max(0, self.min_row - margin_cells),
            max(0, self.min_col - margin_cells),
            min(geometry.height - 1, self.max_row + margin_cells),
            min(geometry.width - 1, self.max_col + margin_cells),
        )


@dataclass
class ModelInput:
    """Normalized crop of a score map plus the transform back to world space.

    values is a size x size array in [0, 1]. unit_to_world maps a regressed
    (u, v) in [0, 1]^2 to the corresponding world point inside the crop box.
    """

    values: np.ndarray
    box: BoundingBox
    geometry: GridGeometry  # geometry of the map the box was cut from

    def _extent(self):
        g = self.geometry
        x0 = g.origin_x + self.box.min_col * g.resolution
        y0 = g.origin_y + self.box.min_row * g.resolution
        x1 = g.origin_x + (self.box.max_col + 1) * g.resolution
        y1 = g.origin_y + (self.box.max_row + 1) * g.resolution
        return x0, y0, x1, y1

    def unit_to_world(self, u: float, v: float) -> tuple[float, float]:
        x0, y0, x1, y1 = self._extent()
        return x0 + u * (x1 - x0), y0 + v * (y1 - y0)

    def world_to_unit(self, x: float, y: float) -> tuple[float, float]:
        x0, y0, x1, y1 = self._extent()
        return (x - x0) / (x1 - x0), (y - y0) / (y1 - y0)


def stamp_disk(score: ScoreMap, center: tuple[float, float], radius: float,
               value: int) -> ScoreMap:
    """Raise scores to `value` on all cells whose center lies within `radius`
    of `center` (meters, world frame). Overlaps keep the per-cell maximum.

    Mutates and returns `score`. Portions outside the grid are clipped.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not 0 <= value <= SCORE_MAX:
        raise ValueError("value must be in 0..255")
    g = score.geometry
    cx, cy = center
    res = g.resolution
    # candidate window, clipped to the grid
    r0 = max(0, int(math.floor((cy - radius - g.origin_y) / res)))
    r1 = min(g.height - 1, int(math.ceil((cy + radius - g.origin_y) / res)))
    c0 = max(0, int(math.floor((cx - radius - g.origin_x) / res)))
    c1 = min(g.width - 1, int(math.ceil((cx + radius - g.origin_x) / res)))
    if r0 > r1 or c0 > c1:
        return score
    rows = np.arange(r0, r1 + 1)
    cols = np.arange(c0, c1 + 1)
    ys = g.origin_y + (rows + 0.5) * res
    xs = g.origin_x + (cols + 0.5) * res
    dx = xs[None, :] - cx
    dy = ys[:, None] - cy
    mask = dx * dx + dy * dy <= radius * radius
    window = score.scores[r0:r1 + 1, c0:c1 + 1]
    window[mask] = np.maximum(window[mask], np.uint8(value))
    return score


def mapped_bounding_box(grid: OccupancyGrid) -> BoundingBox:
    """Tight box over every non-Unknown cell. Raises if nothing is mapped."""
    mapped = np.argwhere(grid.cells != UNKNOWN)
    if mapped.size == 0:
        raise ValueError("nothing mapped")
    (rmin, cmin), (rmax, cmax) = mapped.min(axis=0), mapped.max(axis=0)
    return BoundingBox(int(rmin), int(cmin), int(rmax), int(cmax))


def encode_model_input(score: ScoreMap, box: BoundingBox,
                       size: int = MODEL_INPUT_SIZE) -> ModelInput:
    """Crop `box` from the score map, nearest-neighbor resample to size x size
    and scale levels from 0..255 to [0, 1]."""
    g = score.geometry
    if not (g.in_bounds(box.min_row, box.min_col)
            and g.in_bounds(box.max_row, box.max_col)):
        raise ValueError("box outside grid")
    # integer source-index mapping keeps resampling exact and deterministic
    src_r = box.min_row + (np.arange(size) * box.rows) // size
    src_c = box.min_col + (np.arange(size) * box.cols) // size
    values = score.scores[np.ix_(src_r, src_c)].astype(np.float64) / 255.0
    return ModelInput(values=values, box=box, geometry=g)


def expand_map(score: ScoreMap, margin: float) -> ScoreMap:
    """New score map padded by ceil(margin/resolution) zero cells per side.

    The origin shifts so world coordinates of the original content are
    unchanged. margin 0 returns an identical copy.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    g = score.geometry
    m = int(math.ceil(margin / g.resolution))
    if m == 0:
        return score.copy()
    geom = GridGeometry(g.width + 2 * m, g.height + 2 * m, g.resolution,
                        g.origin_x - m * g.resolution,
                        g.origin_y - m * g.resolution)
    out = np.zeros((geom.height, geom.width), dtype=np.uint8)
    out[m:m + g.height, m:m + g.width] = score.scores
    return ScoreMap(geom, out)


# ---------------------------------------------------------------------------
# sector field of view

_RAY_CACHE: dict[int, tuple] = {}


def _bresenham(r0: int, c0: int, r1: int, c1: int) -> list[Cell]:
    """Integer grid cells along the segment, endpoints included."""
    cells = []
    dr = abs(r1 - r0)
    dc = abs(c1 - c0)
    sr = 1 if r0 < r1 else -1
    sc = 1 if c0 < c1 else -1
    err = dc - dr
    r, c = r0, c0
    while True:
        cells.append((r, c))
        if r == r1 and c == c1:
            break
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr
    return cells


def _ray_tables(radius_cells: int):
    """Precomputed disk offsets and occlusion-ray steps for a cell radius.

    Returns (d_rows, d_cols, ray_idx, interior_mask) where ray_idx holds,
    per offset, the linear indices (into a (2R+1)^2 local window) of the
    cells strictly between the center and the offset cell. Padded entries
    point at the window center, which is never an obstacle for a valid pose.
    """
    cached = _RAY_CACHE.get(radius_cells)
    if cached is not None:
        return cached
    R = radius_cells
    side = 2 * R + 1
    offsets = [(dr, dc)
               for dr in range(-R, R + 1)
               for dc in range(-R, R + 1)
               if dr * dr + dc * dc <= (R + 1) * (R + 1)]
    d_rows = np.array([o[0] for o in offsets], dtype=np.int64)
    d_cols = np.array([o[1] for o in offsets], dtype=np.int64)
    center_idx = R * side + R
    rays = []
    for dr, dc in offsets:
        line = _bresenham(0, 0, dr, dc)
        interior = line[1:-1]  # skip own cell and the target cell
        rays.append([(r + R) * side + (c + R) for r, c in interior])
    max_len = max((len(r) for r in rays), default=0)
    ray_idx = np.full((len(offsets), max(1, max_len)), center_idx,
                      dtype=np.int64)
    for i, steps in enumerate(rays):
        if steps:
            ray_idx[i, :len(steps)] = steps
    tables = (d_rows, d_cols, ray_idx)
    _RAY_CACHE[radius_cells] = tables
    return tables


def _wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = a % (2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    return a


def sector_visible_rc(grid: OccupancyGrid, x: float, y: float, heading: float,
                      radius: float = 3.2, half_angle_deg: float = 20.0):
    """Visible cells of a circular view sector as (rows, cols) arrays.

    A cell is visible when its center lies within `radius` of the pose,
    within +/- half_angle of the heading, and the grid ray from the pose
    cell reaches it without crossing an Obstacle cell. The first Obstacle
    hit along a ray is itself visible; cells behind it are not. The pose's
    own cell is always visible.
    """
    g = grid.geometry
    pr, pc = g.world_to_cell(x, y)
    if not g.in_bounds(pr, pc):
        raise ValueError("invalid pose: outside grid")
    if grid.cells[pr, pc] != FREE:
        raise ValueError("invalid pose: not on a Free cell")

    R = int(math.ceil(radius / g.resolution)) + 1
    d_rows, d_cols, ray_idx = _ray_tables(R)

    rows = pr + d_rows
    cols = pc + d_cols
    valid = (rows >= 0) & (rows < g.height) & (cols >= 0) & (cols < g.width)

    cx = g.origin_x + (cols + 0.5) * g.resolution
    cy = g.origin_y + (rows + 0.5) * g.resolution
    dx = cx - x
    dy = cy - y
    dist_sq = dx * dx + dy * dy
    in_range = valid & (dist_sq <= radius * radius)

    half = math.radians(half_angle_deg)
    bearing = np.arctan2(dy, dx) - heading
    bearing = np.mod(bearing + math.pi, 2.0 * math.pi) - math.pi
    in_sector = in_range & (np.abs(bearing) <= half)
    in_sector &= (d_rows != 0) | (d_cols != 0)  # own cell handled separately

    idx = np.nonzero(in_sector)[0]
    if idx.size:
        # occlusion check against a local window padded with Obstacle
        side = 2 * R + 1
        window = np.full((side, side), OBSTACLE, dtype=np.uint8)
        wr0, wr1 = max(0, pr - R), min(g.height, pr + R + 1)
        wc0, wc1 = max(0, pc - R), min(g.width, pc + R + 1)
        window[wr0 - (pr - R):wr1 - (pr - R),
               wc0 - (pc - R):wc1 - (pc - R)] = grid.cells[wr0:wr1, wc0:wc1]
        flat = window.ravel()
        blocked = (flat[ray_idx[idx]] == OBSTACLE).any(axis=1)
        idx = idx[~blocked]

    out_rows = np.concatenate(([pr], rows[idx]))
    out_cols = np.concatenate(([pc], cols[idx]))
    return out_rows, out_cols


def sector_visible_cells(grid: OccupancyGrid, pose, radius: float = 3.2,
                         half_angle_deg: float = 20.0) -> set[Cell]:
    """Set-of-cells wrapper around sector_visible_rc. `pose` needs x, y and
    heading attributes (see sim.Pose)."""
    rows, cols = sector_visible_rc(grid, pose.x, pose.y, pose.heading,
                                   radius, half_angle_deg)
    return {(int(r), int(c)) for r, c in zip(rows, cols)}


def disk_sum_map(score: ScoreMap, radius: float) -> np.ndarray:
    """Integer map of disk sums: out[r, c] = sum of scores over cells whose
    center is within `radius` meters of the center of (r, c). Exact int64
    arithmetic via per-row span cumsums."""
    g = score.geometry
    res = g.resolution
    R = int(math.floor(radius / res)) + 1
    vals = score.scores.astype(np.int64)
    cum = np.zeros((g.height, g.width + 1), dtype=np.int64)
    np.cumsum(vals, axis=1, out=cum[:, 1:])
    out = np.zeros((g.height, g.width), dtype=np.int64)
    rr = radius * radius
    for dr in range(-R, R + 1):
        dy = dr * res
        rem = rr - dy * dy
        if rem < 0:
            continue
        half_w = int(math.floor(math.sqrt(rem) / res))
        # cell-center metric: offset (dr, dc) is inside iff
        # (dr*res)^2 + (dc*res)^2 <= radius^2
        while (half_w * res) ** 2 + dy * dy > rr:
            half_w -= 1
        if half_w < 0:
            continue
        src_lo = max(0, -dr)
        src_hi = min(g.height, g.height - dr)
        if src_lo >= src_hi:
            continue
        cols = np.arange(g.width)
        c_lo = np.clip(cols - half_w, 0, g.width)
        c_hi = np.clip(cols + half_w + 1, 0, g.width)
        rows_src = np.arange(src_lo, src_hi) + dr
        out[src_lo:src_hi, :] += cum[rows_src[:, None], c_hi[None, :]] \
            - cum[rows_src[:, None], c_lo[None, :]]
    return out
