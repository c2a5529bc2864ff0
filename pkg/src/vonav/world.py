"""Static environment: occupancy grid, map file I/O, lidar raycasting, and a
global grid planner producing the nominal path the sub-goal generator follows.

Map file format (documented byte-exact):
  * raster: binary PGM ("P5", maxval 255). Pixel value < 128 means occupied,
    otherwise free. Image row 0 is the maximum-y row of the grid (the map
    renders right side up in image viewers).
  * sidecar: YAML next to the raster with keys
      image: <raster filename, relative to the sidecar>
      resolution: <meters per cell>
      origin: [x, y, heading]   # world pose of the grid's min-x/min-y corner
    The origin heading must be 0 (axis-aligned grids only).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy import ndimage
from scipy.spatial import cKDTree

try:  # compiled DDA kernel; the pure-numpy fallback below is ~20x slower
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None

from .errors import ConfigError
from .geometry import Pose2D

_OCCUPIED_PIXEL_THRESHOLD = 128


@dataclass
class OccupancyGrid:
    """Binary occupancy raster. `cells[row, col]` is True when occupied;
    row r covers world y in [origin.y + r*res, origin.y + (r+1)*res).

    Treat instances as immutable once queried: raycasting and planning cache
    derived structures (EDT, obstacle KD-tree) on first use.
    """

    resolution: float
    cells: np.ndarray
    origin: Pose2D = field(default_factory=lambda: Pose2D(0.0, 0.0, 0.0))

    def __post_init__(self):
        if self.resolution <= 0:
            raise ConfigError(f"resolution must be > 0, got {self.resolution}")
        self.cells = np.asarray(self.cells, dtype=bool)
        if self.cells.ndim != 2:
            raise ConfigError("cells must be a 2-D array")
        if self.origin.heading != 0.0:
            raise ConfigError("grid origin heading must be 0 (axis-aligned)")
        self._edt_m = None
        self._obstacle_tree = None

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) in world coordinates."""
        return (
            self.origin.x,
            self.origin.y,
            self.origin.x + self.width * self.resolution,
            self.origin.y + self.height * self.resolution,
        )

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        col = int(math.floor((x - self.origin.x) / self.resolution))
        row = int(math.floor((y - self.origin.y) / self.resolution))
        return row, col

    def cell_center(self, row: int, col: int) -> np.ndarray:
        return np.array(
            [
                self.origin.x + (col + 0.5) * self.resolution,
                self.origin.y + (row + 0.5) * self.resolution,
            ]
        )

    def in_bounds(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.extent
        return xmin <= x < xmax and ymin <= y < ymax

    def is_occupied(self, x: float, y: float) -> bool:
        """Occupancy at a world point; outside the grid counts as free."""
        if not self.in_bounds(x, y):
            return False
        row, col = self.world_to_cell(x, y)
        return bool(self.cells[row, col])

    def distance_field(self) -> np.ndarray:
        """Per-cell Euclidean distance (meters) to the nearest occupied cell."""
        if self._edt_m is None:
            if self.cells.any():
                self._edt_m = ndimage.distance_transform_edt(~self.cells) * self.resolution
            else:
                self._edt_m = np.full(self.cells.shape, np.inf)
        return self._edt_m

    def inflated(self, radius: float) -> np.ndarray:
        """Boolean array marking cells within `radius` of any occupied cell."""
        return self.distance_field() <= radius

    def obstacle_tree(self):
        """KD-tree over occupied cell centers, or None for an empty map."""
        if self._obstacle_tree is None and self.cells.any():
            rows, cols = np.nonzero(self.cells)
            centers = np.column_stack(
                [
                    self.origin.x + (cols + 0.5) * self.resolution,
                    self.origin.y + (rows + 0.5) * self.resolution,
                ]
            )
            self._obstacle_tree = cKDTree(centers)
        return self._obstacle_tree


def save_map(grid: OccupancyGrid, sidecar_path) -> None:
    """Write the PGM raster and YAML sidecar described in the module docstring."""
    sidecar_path = Path(sidecar_path)
    image_path = sidecar_path.with_suffix(".pgm")
    img = np.where(np.flipud(grid.cells), 0, 255).astype(np.uint8)
    with open(image_path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (grid.width, grid.height))
        f.write(img.tobytes())
    meta = {
        "image": image_path.name,
        "resolution": float(grid.resolution),
        "origin": [float(grid.origin.x), float(grid.origin.y), 0.0],
    }
    sidecar_path.write_text(yaml.safe_dump(meta, sort_keys=True))


def load_map(sidecar_path) -> OccupancyGrid:
    """Load a map from its YAML sidecar (see module docstring)."""
    sidecar_path = Path(sidecar_path)
    try:
        meta = yaml.safe_load(sidecar_path.read_text())
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read map sidecar {sidecar_path}: {e}") from e
    if not isinstance(meta, dict) or "image" not in meta or "resolution" not in meta:
        raise ConfigError(f"map sidecar {sidecar_path} missing image/resolution")
    image_path = sidecar_path.parent / meta["image"]
    try:
        raw = image_path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read map raster {image_path}: {e}") from e
    cells = _parse_pgm(raw, image_path)
    origin = meta.get("origin", [0.0, 0.0, 0.0])
    return OccupancyGrid(
        resolution=float(meta["resolution"]),
        cells=cells,
        origin=Pose2D(float(origin[0]), float(origin[1]), float(origin[2])),
    )


def _parse_pgm(raw: bytes, path) -> np.ndarray:
    # Minimal P5 reader: magic, width, height, maxval, then raw bytes.
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":  # comment line
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ConfigError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    if tokens[0] != b"P5":
        raise ConfigError(f"{path}: expected binary PGM (P5), got {tokens[0]!r}")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise ConfigError(f"{path}: 16-bit PGM not supported")
    if len(raw) - pos < width * height:
        raise ConfigError(f"{path}: raster data shorter than header promises")
    data = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=pos)
    img = data.reshape(height, width)
    return np.flipud(img < _OCCUPIED_PIXEL_THRESHOLD)


@dataclass
class LidarConfig:
    """Planar lidar model. `fov / angular_resolution` must be an integer."""

    range_min: float = 0.1
    range_max: float = 30.0
    fov: float = math.radians(270.0)
    angular_resolution: float = math.radians(0.25)
    rate: float = 20.0

    def __post_init__(self):
        if not 0 < self.range_min < self.range_max:
            raise ConfigError("need 0 < range_min < range_max")
        ratio = self.fov / self.angular_resolution
        if abs(ratio - round(ratio)) > 1e-6:
            raise ConfigError(
                f"fov/angular_resolution must be an integer beam count, got {ratio}"
            )

    @property
    def beam_count(self) -> int:
        return int(round(self.fov / self.angular_resolution))

    def beam_angles(self) -> np.ndarray:
        """Beam angles relative to the sensor heading, ordered from -fov/2.

        Beam i points at -fov/2 + i * angular_resolution, so an even beam
        count puts beam n/2 exactly at 0 (straight ahead).
        """
        return -self.fov / 2 + np.arange(self.beam_count) * self.angular_resolution


@dataclass
class LidarScan:
    """One sweep of ranges in meters, ordered from -fov/2 to +fov/2."""

    ranges: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=float)


def nearest_obstacle_distance(scan: LidarScan) -> float:
    """Distance to the closest return in the scan."""
    if scan.ranges.size == 0:
        raise ValueError("empty scan")
    return float(scan.ranges.min())


def raycast_scan(
    grid: OccupancyGrid,
    sensor_pose: Pose2D,
    cfg: LidarConfig,
    dynamic_obstacles=(),
    timestamp: float = 0.0,
) -> LidarScan:
    """Simulate one lidar sweep against the grid plus dynamic discs.

    Each beam returns the nearest intersection among occupied cells (exact
    DDA grid traversal) and `(center, radius)` discs, clamped into
    [range_min, range_max]. Beams that hit nothing return range_max.
    """
    if not grid.in_bounds(sensor_pose.x, sensor_pose.y):
        raise ValueError(f"sensor at ({sensor_pose.x}, {sensor_pose.y}) outside grid")
    angles = sensor_pose.heading + cfg.beam_angles()
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    hits = _raycast_grid(grid, sensor_pose.position, dirs, cfg.range_max)
    for center, radius in dynamic_obstacles:
        hits = np.minimum(hits, _ray_disc(sensor_pose.position, dirs, center, radius))
    return LidarScan(np.clip(hits, cfg.range_min, cfg.range_max), timestamp)


def _ray_exit_limits(grid: OccupancyGrid, origin, dirs, t_max: float) -> np.ndarray:
    """Per-ray march limit: range cap or the grid bounding-box exit, whichever
    comes first (rays never re-enter an axis-aligned box)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_dx = np.where(dirs[:, 0] != 0.0, 1.0 / dirs[:, 0], np.inf)
        inv_dy = np.where(dirs[:, 1] != 0.0, 1.0 / dirs[:, 1], np.inf)
        xmin, ymin, xmax, ymax = grid.extent
        far_x = np.maximum((xmin - origin[0]) * inv_dx, (xmax - origin[0]) * inv_dx)
        far_y = np.maximum((ymin - origin[1]) * inv_dy, (ymax - origin[1]) * inv_dy)
    far_x = np.where(np.isnan(far_x), np.inf, far_x)
    far_y = np.where(np.isnan(far_y), np.inf, far_y)
    return np.minimum(t_max, np.minimum(far_x, far_y) + grid.resolution)


if njit is not None:

    @njit(cache=True)
    def _dda_kernel(occ, res, fx, fy, dirx, diry, t_limits):  # pragma: no cover
        n = dirx.shape[0]
        h, w = occ.shape
        out = np.full(n, np.inf)
        cx0 = int(math.floor(fx))
        cy0 = int(math.floor(fy))
        start_occupied = 0 <= cy0 < h and 0 <= cx0 < w and occ[cy0, cx0]
        for i in range(n):
            if start_occupied:
                out[i] = 0.0
                continue
            dx, dy = dirx[i], diry[i]
            cx, cy = cx0, cy0
            if dx > 0.0:
                step_x, t_max_x, t_delta_x = 1, (cx + 1 - fx) * res / dx, res / dx
            elif dx < 0.0:
                step_x, t_max_x, t_delta_x = -1, (fx - cx) * res / -dx, res / -dx
            else:
                step_x, t_max_x, t_delta_x = 0, np.inf, np.inf
            if dy > 0.0:
                step_y, t_max_y, t_delta_y = 1, (cy + 1 - fy) * res / dy, res / dy
            elif dy < 0.0:
                step_y, t_max_y, t_delta_y = -1, (fy - cy) * res / -dy, res / -dy
            else:
                step_y, t_max_y, t_delta_y = 0, np.inf, np.inf
            limit = t_limits[i]
            while True:
                if t_max_x <= t_max_y:
                    cx += step_x
                    t = t_max_x
                    t_max_x += t_delta_x
                else:
                    cy += step_y
                    t = t_max_y
                    t_max_y += t_delta_y
                if t > limit:
                    break
                if cx < 0 or cx >= w or cy < 0 or cy >= h:
                    break
                if occ[cy, cx]:
                    out[i] = t
                    break
        return out


def _raycast_grid(grid: OccupancyGrid, origin: np.ndarray, dirs: np.ndarray, t_max: float):
    """Amanatides-Woo traversal for a bundle of rays from one origin.

    Returns the distance at which each ray first enters an occupied cell
    (inf when it exits the map or exceeds t_max first). Exact up to fp: the
    reported distance is to the cell's entry boundary.
    """
    res = grid.resolution
    occ = grid.cells
    n = dirs.shape[0]
    fx = (origin[0] - grid.origin.x) / res
    fy = (origin[1] - grid.origin.y) / res
    t_limit = _ray_exit_limits(grid, origin, dirs, t_max)
    if njit is not None:
        return _dda_kernel(
            occ,
            res,
            float(fx),
            float(fy),
            np.ascontiguousarray(dirs[:, 0]),
            np.ascontiguousarray(dirs[:, 1]),
            t_limit,
        )

    with np.errstate(divide="ignore"):
        inv_dx = np.where(dirs[:, 0] != 0.0, 1.0 / dirs[:, 0], np.inf)
        inv_dy = np.where(dirs[:, 1] != 0.0, 1.0 / dirs[:, 1], np.inf)

    step_x = np.sign(dirs[:, 0]).astype(np.int64)
    step_y = np.sign(dirs[:, 1]).astype(np.int64)
    cx = np.full(n, int(math.floor(fx)), dtype=np.int64)
    cy = np.full(n, int(math.floor(fy)), dtype=np.int64)

    # Distance to the first vertical/horizontal cell boundary along each ray.
    with np.errstate(invalid="ignore"):
        t_max_x = np.where(
            step_x > 0, (cx + 1 - fx) * res * inv_dx, (fx - cx) * res * -inv_dx
        )
        t_max_y = np.where(
            step_y > 0, (cy + 1 - fy) * res * inv_dy, (fy - cy) * res * -inv_dy
        )
    t_max_x = np.where(step_x == 0, np.inf, t_max_x)
    t_max_y = np.where(step_y == 0, np.inf, t_max_y)
    t_delta_x = np.abs(res * inv_dx)
    t_delta_y = np.abs(res * inv_dy)

    hit_t = np.full(n, np.inf)
    t_cur = np.zeros(n)

    idx = np.arange(n)
    h, w = occ.shape
    inside = (cy[idx] >= 0) & (cy[idx] < h) & (cx[idx] >= 0) & (cx[idx] < w)
    occupied = np.zeros(n, dtype=bool)
    occupied[idx[inside]] = occ[cy[idx[inside]], cx[idx[inside]]]
    hit_t[occupied] = 0.0
    idx = idx[~occupied]

    while idx.size:
        use_x = t_max_x[idx] <= t_max_y[idx]
        t_next = np.where(use_x, t_max_x[idx], t_max_y[idx])
        cx[idx] += np.where(use_x, step_x[idx], 0)
        cy[idx] += np.where(use_x, 0, step_y[idx])
        t_max_x[idx] += np.where(use_x, t_delta_x[idx], 0.0)
        t_max_y[idx] += np.where(use_x, 0.0, t_delta_y[idx])
        t_cur[idx] = t_next

        alive = t_cur[idx] <= t_limit[idx]
        idx = idx[alive]
        if not idx.size:
            break
        gx, gy = cx[idx], cy[idx]
        inside = (gy >= 0) & (gy < h) & (gx >= 0) & (gx < w)
        hit = np.zeros(idx.size, dtype=bool)
        hit[inside] = occ[gy[inside], gx[inside]]
        hit_t[idx[hit]] = t_cur[idx[hit]]
        idx = idx[inside & ~hit]
    return hit_t


def _ray_disc(origin: np.ndarray, dirs: np.ndarray, center, radius: float) -> np.ndarray:
    """First-intersection distance of each unit-direction ray with a disc."""
    rel = np.asarray(center, dtype=float) - origin
    c = float(rel @ rel) - radius * radius
    if c < 0.0:  # sensor inside the disc
        return np.zeros(dirs.shape[0])
    b = dirs @ rel
    disc = b * b - c
    ok = (disc >= 0.0) & (b >= 0.0)
    t = np.full(dirs.shape[0], np.inf)
    t[ok] = b[ok] - np.sqrt(disc[ok])
    return t


def segment_blocked(grid: OccupancyGrid, p0, p1) -> bool:
    """True when the open segment p0->p1 crosses any occupied cell."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    d = p1 - p0
    length = float(np.hypot(d[0], d[1]))
    if length == 0.0:
        return grid.is_occupied(p0[0], p0[1])
    dirs = (d / length).reshape(1, 2)
    hit = _raycast_grid(grid, p0, dirs, length)[0]
    return hit < length


# --- global planning -------------------------------------------------------

_DIAG = math.sqrt(2.0)
_NEIGHBORS = (
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (1, 1, _DIAG),
    (1, -1, _DIAG),
    (-1, 1, _DIAG),
    (-1, -1, _DIAG),
)


def astar_grid_path(free: np.ndarray, start_cell, goal_cell):
    """8-connected A* on a boolean free-space array.

    Diagonal moves are disallowed when either adjacent orthogonal cell is
    blocked (no corner cutting). Returns (list of (row, col), cost) or None.
    Deterministic: ties in the open set break on insertion order.
    """
    h_cells, w_cells = free.shape
    sr, sc = start_cell
    gr, gc = goal_cell
    if not (0 <= sr < h_cells and 0 <= sc < w_cells and free[sr, sc]):
        return None
    if not (0 <= gr < h_cells and 0 <= gc < w_cells and free[gr, gc]):
        return None

    def heuristic(r, c):
        dr, dc = abs(r - gr), abs(c - gc)
        return max(dr, dc) + (_DIAG - 1.0) * min(dr, dc)

    g_score = {(sr, sc): 0.0}
    came: dict = {}
    counter = 0
    open_set = [(heuristic(sr, sc), counter, sr, sc)]
    closed = set()
    while open_set:
        _, _, r, c = heapq.heappop(open_set)
        if (r, c) in closed:
            continue
        closed.add((r, c))
        if (r, c) == (gr, gc):
            path = [(r, c)]
            while (r, c) in came:
                r, c = came[(r, c)]
                path.append((r, c))
            path.reverse()
            return path, g_score[(gr, gc)]
        base = g_score[(r, c)]
        for dr, dc, cost in _NEIGHBORS:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h_cells and 0 <= nc < w_cells) or not free[nr, nc]:
                continue
            if dr != 0 and dc != 0 and not (free[r, nc] and free[nr, c]):
                continue
            tentative = base + cost
            if tentative < g_score.get((nr, nc), math.inf):
                g_score[(nr, nc)] = tentative
                came[(nr, nc)] = (r, c)
                counter += 1
                heapq.heappush(
                    open_set, (tentative + heuristic(nr, nc), counter, nr, nc)
                )
    return None


def _segment_free(free: np.ndarray, grid: OccupancyGrid, a, b) -> bool:
    """Line-of-sight check on the inflated grid, sampled at half-resolution."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.hypot(*(b - a)))
    steps = max(2, int(math.ceil(length / (grid.resolution * 0.5))) + 1)
    h_cells, w_cells = free.shape
    for t in np.linspace(0.0, 1.0, steps):
        p = a + (b - a) * t
        row, col = grid.world_to_cell(p[0], p[1])
        if not (0 <= row < h_cells and 0 <= col < w_cells) or not free[row, col]:
            return False
    return True


def plan_global_path(grid: OccupancyGrid, start, goal, inflation_radius: float = 0.3):
    """Shortest obstacle-aware polyline from start to goal, or None.

    Runs 8-connected A* on the grid inflated by `inflation_radius`, then
    shortcut-smooths the cell path (greedy farthest visible waypoint). The
    returned polyline begins exactly at `start` and ends exactly at `goal`.
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    free = ~grid.inflated(inflation_radius)
    result = astar_grid_path(free, grid.world_to_cell(*start), grid.world_to_cell(*goal))
    if result is None:
        return None
    cells, _ = result
    points = [start] + [grid.cell_center(r, c) for r, c in cells[1:-1]] + [goal]

    smoothed = [points[0]]
    i = 0
    while i < len(points) - 1:
        j = len(points) - 1
        while j > i + 1 and not _segment_free(free, grid, points[i], points[j]):
            j -= 1
        smoothed.append(points[j])
        i = j
    return np.array(smoothed)
