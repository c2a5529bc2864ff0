"""Planar geometry shared by every other module: poses, velocities, angle
arithmetic, and rigid-frame transforms.

Convention: x forward, y left, angles counterclockwise-positive and wrapped
into (-pi, pi]. A heading of 0 points along +x ("straight ahead" in the
robot frame).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = math.tau


def wrap_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]. Idempotent and 2*pi-periodic."""
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    w = math.remainder(a, TWO_PI)
    return w if w > -math.pi else w + TWO_PI


def wrap_angles(a) -> np.ndarray:
    """Vectorized wrap into (-pi, pi]."""
    w = np.remainder(np.asarray(a, dtype=float) + np.pi, TWO_PI) - np.pi
    return np.where(w <= -np.pi, w + TWO_PI, w)


@dataclass
class Pose2D:
    """Position plus heading; heading is kept wrapped in (-pi, pi]."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("pose coordinates must be finite")
        self.heading = wrap_angle(self.heading)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass
class Velocity2D:
    """Planar velocity vector in m/s."""

    vx: float
    vy: float

    def __post_init__(self):
        if not (math.isfinite(self.vx) and math.isfinite(self.vy)):
            raise ValueError("velocity components must be finite")

    @classmethod
    def from_array(cls, v) -> "Velocity2D":
        return cls(float(v[0]), float(v[1]))

    @property
    def array(self) -> np.ndarray:
        return np.array([self.vx, self.vy], dtype=float)

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass
class AngularInterval:
    """Wrap-aware angular interval [center - half_width, center + half_width]."""

    center: float
    half_width: float

    def __post_init__(self):
        if not 0.0 <= self.half_width <= math.pi:
            raise ValueError(f"half_width must be in [0, pi], got {self.half_width}")
        self.center = wrap_angle(self.center)

    def contains(self, a: float) -> bool:
        return abs(wrap_angle(a - self.center)) <= self.half_width


def interval_contains(iv: AngularInterval, a: float) -> bool:
    """True iff angle `a` lies inside `iv`, accounting for the +/-pi seam."""
    return iv.contains(a)


def _rotation(heading: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    return np.array([[c, -s], [s, c]])


def to_robot_frame(obj, robot_pose: Pose2D):
    """Express a world-frame point array or Pose2D in the robot's local frame.

    Points may be a single (2,) vector or an (N, 2) array.
    """
    if isinstance(obj, Pose2D):
        local = to_robot_frame(obj.position, robot_pose)
        return Pose2D(local[0], local[1], wrap_angle(obj.heading - robot_pose.heading))
    p = np.asarray(obj, dtype=float)
    d = p - robot_pose.position
    return d @ _rotation(robot_pose.heading)  # equals R^T applied to rows


def from_robot_frame(obj, robot_pose: Pose2D):
    """Inverse of :func:`to_robot_frame`."""
    if isinstance(obj, Pose2D):
        world = from_robot_frame(obj.position, robot_pose)
        return Pose2D(world[0], world[1], wrap_angle(obj.heading + robot_pose.heading))
    p = np.asarray(obj, dtype=float)
    return p @ _rotation(robot_pose.heading).T + robot_pose.position
