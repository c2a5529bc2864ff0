"""Simulated pedestrian perception: a field-of-view and occlusion limited
detector with Gaussian position noise and dropout, plus a lightweight
nearest-neighbor tracker that estimates relative velocities.

The tracker deliberately replaces heavier multi-target machinery: the
downstream grid encoding only needs relative positions and velocities, not
identity-correct tracks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import Pose2D, Velocity2D, _rotation, from_robot_frame, to_robot_frame, wrap_angle
from .world import OccupancyGrid, segment_blocked

ASSOCIATION_GATE = 1.0  # m
VELOCITY_SMOOTHING = 0.7  # weight on the newest finite-difference sample
MAX_COAST_STEPS = 5  # unmatched tracks die after this many misses


@dataclass
class DetectorConfig:
    fov: float = math.radians(90.0)
    range_min: float = 0.3
    range_max: float = 20.0
    position_noise_sigma: float = 0.05
    dropout_prob: float = 0.05

    def __post_init__(self):
        if not 0 < self.fov <= 2 * math.pi:
            raise ConfigError("detector fov must be in (0, 2*pi]")
        if not 0 <= self.range_min < self.range_max:
            raise ConfigError("need 0 <= range_min < range_max")
        if self.position_noise_sigma < 0:
            raise ConfigError("noise sigma must be >= 0")
        if not 0 <= self.dropout_prob < 1:
            raise ConfigError("dropout_prob must be in [0, 1)")


@dataclass
class TrackedPedestrian:
    track_id: int
    rel_position: np.ndarray
    rel_velocity: Velocity2D = field(default_factory=lambda: Velocity2D(0.0, 0.0))
    age: int = 0
    misses: int = 0

    def __post_init__(self):
        self.rel_position = np.asarray(self.rel_position, dtype=float)


def detect(peds, robot_pose: Pose2D, grid: OccupancyGrid | None, cfg: DetectorConfig, rng):
    """Return noisy robot-frame positions of currently visible pedestrians.

    A pedestrian is visible when its center lies inside the FOV wedge and
    range band, the sight line is not blocked by occupied cells, and no
    nearer pedestrian's disc crosses the sight line. Visible detections are
    then dropped with `dropout_prob` and perturbed with isotropic Gaussian
    noise. Results keep roster order; the RNG is consumed in that order.
    """
    robot_xy = robot_pose.position
    candidates = []  # (ped, distance, rel_position)
    for ped in peds:
        rel = to_robot_frame(ped.position, robot_pose)
        dist = float(np.hypot(rel[0], rel[1]))
        if dist < cfg.range_min or dist > cfg.range_max:
            continue
        if abs(wrap_angle(math.atan2(rel[1], rel[0]))) > cfg.fov / 2:
            continue
        candidates.append((ped, dist, rel))

    detections = []
    for ped, dist, rel in candidates:
        if grid is not None and segment_blocked(grid, robot_xy, ped.position):
            continue
        if _occluded_by_peds(robot_xy, ped, dist, peds):
            continue
        if cfg.dropout_prob > 0 and rng.random() < cfg.dropout_prob:
            continue
        noisy = rel.copy()
        if cfg.position_noise_sigma > 0:
            noisy = noisy + rng.normal(0.0, cfg.position_noise_sigma, 2)
        detections.append(noisy)
    return detections


def _occluded_by_peds(robot_xy, target, target_dist, peds) -> bool:
    d = (target.position - robot_xy) / target_dist
    for other in peds:
        if other is target:
            continue
        rel = other.position - robot_xy
        along = float(rel @ d)
        if along <= 0.0 or along >= target_dist:
            continue
        perp = math.hypot(*(rel - along * d))
        if perp <= other.radius:
            return True
    return False


def update_tracks(
    tracks: list[TrackedPedestrian],
    detections,
    dt: float,
    ego_motion: tuple[Pose2D, Pose2D] | None = None,
) -> list[TrackedPedestrian]:
    """Associate detections to tracks and refresh velocity estimates.

    Greedy nearest-neighbor matching inside a 1 m gate; matched tracks update
    velocity with an exponentially smoothed finite difference, unmatched
    tracks coast on their last velocity for up to MAX_COAST_STEPS before
    dying, and unmatched detections spawn zero-velocity tracks.

    When `ego_motion=(prev_pose, new_pose)` is given, existing track state is
    re-expressed in the new robot frame first, so estimated velocities are
    ground-relative rather than polluted by the robot's own motion.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    tracks = [
        TrackedPedestrian(t.track_id, t.rel_position.copy(), t.rel_velocity, t.age, t.misses)
        for t in tracks
    ]
    if ego_motion is not None:
        prev_pose, new_pose = ego_motion
        rot = _rotation(wrap_angle(prev_pose.heading - new_pose.heading))
        for t in tracks:
            world = from_robot_frame(t.rel_position, prev_pose)
            t.rel_position = to_robot_frame(world, new_pose)
            t.rel_velocity = Velocity2D.from_array(t.rel_velocity.array @ rot.T)

    detections = [np.asarray(d, dtype=float) for d in detections]
    pairs = []
    for ti, t in enumerate(tracks):
        for di, det in enumerate(detections):
            dist = float(np.hypot(*(det - t.rel_position)))
            if dist <= ASSOCIATION_GATE:
                pairs.append((dist, ti, di))
    pairs.sort()
    matched_tracks: set[int] = set()
    matched_dets: set[int] = set()
    assignment = {}
    for dist, ti, di in pairs:
        if ti in matched_tracks or di in matched_dets:
            continue
        matched_tracks.add(ti)
        matched_dets.add(di)
        assignment[ti] = di

    next_id = max((t.track_id for t in tracks), default=-1) + 1
    updated = []
    for ti, t in enumerate(tracks):
        if ti in assignment:
            det = detections[assignment[ti]]
            raw = (det - t.rel_position) / dt
            a = VELOCITY_SMOOTHING
            vel = a * raw + (1.0 - a) * t.rel_velocity.array
            updated.append(
                TrackedPedestrian(t.track_id, det, Velocity2D.from_array(vel), t.age + 1, 0)
            )
        elif t.misses + 1 <= MAX_COAST_STEPS:
            coasted = t.rel_position + t.rel_velocity.array * dt
            updated.append(
                TrackedPedestrian(
                    t.track_id, coasted, t.rel_velocity, t.age + 1, t.misses + 1
                )
            )
    for di, det in enumerate(detections):
        if di not in matched_dets:
            updated.append(TrackedPedestrian(next_id, det))
            next_id += 1
    return updated
