"""Observation encoding: the normalized triplet fed to a control policy.

Layout of the 80x80 lidar history grid (fixed and relied on by tests):
scan k of the 10-scan buffer (k = 0 oldest) contributes row 2k (per-sector
minimum) and row 2k+1 (per-sector average); those 20 rows are stacked four
times vertically, so rows r, r+20, r+40, r+60 are always identical.

The pedestrian grids cover a 20x20 m area in front of the robot (x in
[0, 20], y in [-10, 10], 0.25 m cells). A track at (x, y) writes its
velocity into cell (row, col) = (floor((10 - y)/0.25), floor(x/0.25)),
indices clamped into [0, 79]; when two tracks land in one cell the nearer
track wins. Cells without a pedestrian hold exactly 0.

All components are Max-Abs normalized into [-1, 1]:
lidar against the sensor range band, pedestrian velocities against
+/- PED_VELOCITY_BOUND, and the sub-goal against +/- lookahead per axis.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .geometry import Pose2D, to_robot_frame
from .world import LidarConfig, LidarScan

GRID_SIZE = 80
HISTORY_SCANS = 10
PED_AREA_AHEAD = 20.0  # m
PED_AREA_HALF_WIDTH = 10.0  # m
PED_CELL = 0.25  # m
PED_VELOCITY_BOUND = 2.0  # m/s, fast-walk upper bound


@dataclass
class Observation:
    """Normalized policy input; every array value lies in [-1, 1]."""

    lidar: np.ndarray  # (80, 80) float32
    ped_vx: np.ndarray  # (80, 80) float32
    ped_vy: np.ndarray  # (80, 80) float32
    goal: np.ndarray  # (2,) float32

    def components(self):
        return (("lidar", self.lidar), ("ped_vx", self.ped_vx),
                ("ped_vy", self.ped_vy), ("goal", self.goal))


def max_abs_scale(values, lo: float, hi: float) -> np.ndarray:
    """Affine map of [lo, hi] onto [-1, 1]; inputs are clamped into [lo, hi]."""
    if hi <= lo:
        raise ConfigError(f"scaling bounds must satisfy lo < hi, got [{lo}, {hi}]")
    v = np.clip(np.asarray(values, dtype=float), lo, hi)
    return 2.0 * (v - lo) / (hi - lo) - 1.0


def pool_scan(ranges, groups: int = GRID_SIZE, allow_uneven: bool = False):
    """Compress a scan into per-sector (min, avg) rows.

    With `allow_uneven`, a beam count that does not divide evenly is split
    into contiguous groups whose sizes differ by at most one, distributed
    evenly (e.g. 1080 beams -> 80 groups alternating 13/14).
    """
    ranges = np.asarray(ranges, dtype=float)
    n = ranges.size
    if n < groups:
        raise ConfigError(f"{n} beams cannot fill {groups} groups")
    if n % groups == 0:
        block = ranges.reshape(groups, n // groups)
        return block.min(axis=1), block.mean(axis=1)
    if not allow_uneven:
        raise ConfigError(f"{n} beams not divisible into {groups} groups")
    bounds = [(g * n) // groups for g in range(groups + 1)]
    mins = np.empty(groups)
    avgs = np.empty(groups)
    for g in range(groups):
        chunk = ranges[bounds[g] : bounds[g + 1]]
        mins[g] = chunk.min()
        avgs[g] = chunk.mean()
    return mins, avgs


class ScanHistoryBuffer:
    """Ring buffer of the last HISTORY_SCANS scans, oldest first."""

    def __init__(self):
        self._scans: deque[LidarScan] = deque(maxlen=HISTORY_SCANS)

    def reset(self, scan: LidarScan) -> None:
        """Warm start: fill every slot with the first scan."""
        self._scans.clear()
        for _ in range(HISTORY_SCANS):
            self._scans.append(scan)

    def push(self, scan: LidarScan) -> None:
        if not self._scans:
            self.reset(scan)
        else:
            self._scans.append(scan)

    @property
    def full(self) -> bool:
        return len(self._scans) == HISTORY_SCANS

    def scans(self) -> list[LidarScan]:
        return list(self._scans)


def build_lidar_grid(buf: ScanHistoryBuffer, pool, groups: int = GRID_SIZE) -> np.ndarray:
    """Stack pooled history rows into the (80, 80) raw-range grid.

    `pool` maps a scan to its (min_row, avg_row) pair; see the module
    docstring for the exact row layout.
    """
    if not buf.full:
        raise ValueError("scan buffer not warm-started")
    rows = np.empty((2 * HISTORY_SCANS, groups))
    for k, scan in enumerate(buf.scans()):
        mins, avgs = pool(scan)
        rows[2 * k] = mins
        rows[2 * k + 1] = avgs
    return np.tile(rows, (4, 1))


def build_ped_grids(tracks) -> tuple[np.ndarray, np.ndarray]:
    """Scatter track velocities into the two kinematic grids (raw m/s)."""
    vx = np.zeros((GRID_SIZE, GRID_SIZE))
    vy = np.zeros((GRID_SIZE, GRID_SIZE))
    best_dist = np.full((GRID_SIZE, GRID_SIZE), np.inf)
    for track in tracks:
        x, y = float(track.rel_position[0]), float(track.rel_position[1])
        if not (0.0 <= x <= PED_AREA_AHEAD and -PED_AREA_HALF_WIDTH <= y <= PED_AREA_HALF_WIDTH):
            continue
        row = min(GRID_SIZE - 1, max(0, int(math.floor((PED_AREA_HALF_WIDTH - y) / PED_CELL))))
        col = min(GRID_SIZE - 1, max(0, int(math.floor(x / PED_CELL))))
        dist = math.hypot(x, y)
        if dist < best_dist[row, col]:
            best_dist[row, col] = dist
            vx[row, col] = track.rel_velocity.vx
            vy[row, col] = track.rel_velocity.vy
    return vx, vy


def in_area_track_count(tracks) -> int:
    """Tracks inside the pedestrian-grid coverage area."""
    count = 0
    for track in tracks:
        x, y = float(track.rel_position[0]), float(track.rel_position[1])
        if 0.0 <= x <= PED_AREA_AHEAD and -PED_AREA_HALF_WIDTH <= y <= PED_AREA_HALF_WIDTH:
            count += 1
    return count


def select_subgoal(path: np.ndarray, robot_pose: Pose2D, lookahead: float) -> np.ndarray:
    """Pure-pursuit sub-goal: robot-frame point on the path `lookahead` away.

    Walks the path forward from the robot's closest-point projection and
    returns the first circle-segment intersection at that arc position. When
    the remaining path lies entirely inside the lookahead circle the final
    goal is returned instead; when it starts outside (robot far off the
    path), the projection point itself is returned so the robot rejoins the
    path.
    """
    path = np.asarray(path, dtype=float)
    if path.ndim != 2 or path.shape[0] == 0:
        raise ValueError("path must be a non-empty polyline")
    if lookahead <= 0:
        raise ValueError("lookahead must be > 0")
    robot = robot_pose.position
    if path.shape[0] == 1:
        return to_robot_frame(path[0], robot_pose)

    # Closest point on the polyline: segment index + parameter.
    best = (math.inf, 0, 0.0)
    for i in range(path.shape[0] - 1):
        a, b = path[i], path[i + 1]
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0.0 else float(np.clip((robot - a) @ ab / denom, 0.0, 1.0))
        p = a + t * ab
        d = float(np.hypot(*(p - robot)))
        if d < best[0]:
            best = (d, i, t)
    _, seg, t0 = best

    for i in range(seg, path.shape[0] - 1):
        a, b = path[i], path[i + 1]
        lo = t0 if i == seg else 0.0
        hit = _circle_segment_exit(robot, lookahead, a, b, lo)
        if hit is not None:
            return to_robot_frame(hit, robot_pose)

    end = path[-1]
    if float(np.hypot(*(end - robot))) <= lookahead:
        return to_robot_frame(end, robot_pose)
    proj = path[seg] + t0 * (path[seg + 1] - path[seg])
    return to_robot_frame(proj, robot_pose)


def _circle_segment_exit(center, radius, a, b, t_lo):
    """Earliest point on segment a->b (param >= t_lo) at `radius` from center."""
    ab = b - a
    aa = a - center
    qa = float(ab @ ab)
    if qa == 0.0:
        return None
    qb = 2.0 * float(aa @ ab)
    qc = float(aa @ aa) - radius * radius
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    for t in ((-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)):
        if t_lo <= t <= 1.0:
            return a + t * ab
    return None


@dataclass
class EncoderConfig:
    """Pooling sector and normalization bounds for one robot profile."""

    lidar: LidarConfig
    pool_sector_fov: float  # radians of the scan, centered, used for pooling
    lookahead: float = 2.0
    ped_velocity_bound: float = PED_VELOCITY_BOUND

    def __post_init__(self):
        if self.pool_sector_fov > self.lidar.fov + 1e-9:
            raise ConfigError("pooling sector exceeds lidar fov")
        n = self.lidar.beam_count
        start = int(round((self.lidar.fov - self.pool_sector_fov) / 2 / self.lidar.angular_resolution))
        count = int(round(self.pool_sector_fov / self.lidar.angular_resolution))
        if start < 0 or start + count > n:
            raise ConfigError("pooling sector does not fit the scan")
        self.sector_start = start
        self.sector_count = count
        # Uneven pooling is only accepted when it cannot be avoided.
        self.allow_uneven = count % GRID_SIZE != 0
        pool_scan(np.zeros(count), GRID_SIZE, self.allow_uneven)  # validate at startup

    def pool(self, scan: LidarScan):
        sector = scan.ranges[self.sector_start : self.sector_start + self.sector_count]
        return pool_scan(sector, GRID_SIZE, self.allow_uneven)


class ObservationEncoder:
    """Stateful encoder owning the scan history for one episode."""

    def __init__(self, cfg: EncoderConfig):
        self.cfg = cfg
        self.buffer = ScanHistoryBuffer()

    def reset(self, scan: LidarScan) -> None:
        self.buffer.reset(scan)

    def push_scan(self, scan: LidarScan) -> None:
        self.buffer.push(scan)

    def encode(self, tracks, subgoal_rel) -> Observation:
        """Build the normalized observation from current tracker/sub-goal state."""
        lidar_raw = build_lidar_grid(self.buffer, self.cfg.pool)
        vx_raw, vy_raw = build_ped_grids(tracks)
        b = self.cfg.ped_velocity_bound
        lo, hi = self.cfg.lidar.range_min, self.cfg.lidar.range_max
        la = self.cfg.lookahead
        return Observation(
            lidar=max_abs_scale(lidar_raw, lo, hi).astype(np.float32),
            ped_vx=max_abs_scale(vx_raw, -b, b).astype(np.float32),
            ped_vy=max_abs_scale(vy_raw, -b, b).astype(np.float32),
            goal=max_abs_scale(np.asarray(subgoal_rel, dtype=float), -la, la).astype(np.float32),
        )
