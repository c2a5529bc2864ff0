"""Velocity-obstacle geometry and the sampling-based desired-heading search.

For a robot disc A and pedestrian disc B (robot-frame position p_B), the
collision cone is the angular interval [theta - beta, theta + beta] with
theta = atan2(p_By, p_Bx) and sin(beta) = (r_A + r_B) / ||p_B||: any relative
velocity v_A - v_B whose direction falls inside the cone leads to contact at
some future time under constant velocities.

The search samples candidate headings, keeps those whose relative-velocity
direction clears every pedestrian's cone, and returns the free sample
closest to the sub-goal direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import AngularInterval, Velocity2D, wrap_angles

DEFAULT_SAMPLES = 100
# Literal initialization of the search: returned when no sample is free.
BLOCKED_FALLBACK_HEADING = math.pi / 2
# The search needs a nonzero candidate speed; below this every sample is
# trivially free and the result meaningless.
MIN_SEARCH_SPEED = 0.05


@dataclass
class Agent:
    """Disc agent in the robot frame."""

    position: np.ndarray
    velocity: Velocity2D = field(default_factory=lambda: Velocity2D(0.0, 0.0))
    radius: float = 0.3

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        if self.radius <= 0:
            raise ValueError("agent radius must be > 0")


@dataclass
class CollisionCone:
    interval: AngularInterval
    source_id: int = -1


class Overlap:
    """Marker: the two discs already intersect, so no cone exists."""

    __slots__ = ("source_id",)

    def __init__(self, source_id: int = -1):
        self.source_id = source_id


def collision_cone(robot: Agent, ped: Agent, source_id: int = -1):
    """Cone of colliding relative-velocity directions, or Overlap."""
    rel = ped.position - robot.position
    dist = float(np.hypot(rel[0], rel[1]))
    r_sum = robot.radius + ped.radius
    if dist <= r_sum:
        return Overlap(source_id)
    theta = math.atan2(rel[1], rel[0])
    beta = math.asin(r_sum / dist)
    return CollisionCone(AngularInterval(theta, beta), source_id)


def relative_velocity_angle(v_ax: float, theta_u: float, ped_velocity: Velocity2D) -> float:
    """Direction of the candidate relative velocity v_A(theta_u) - v_B.

    Zero relative velocity has no direction; 0 is returned by convention
    (such a pair can never collide, and callers treat it as free).
    """
    rel_x = v_ax * math.cos(theta_u) - ped_velocity.vx
    rel_y = v_ax * math.sin(theta_u) - ped_velocity.vy
    if rel_x == 0.0 and rel_y == 0.0:
        return 0.0
    return math.atan2(rel_y, rel_x)


def heading_samples(n: int, rng=None) -> np.ndarray:
    """Candidate headings: uniform random over [-pi, pi], or, without an RNG,
    a deterministic stratified grid (sample i at -pi + (i + 0.5) * 2pi/n)."""
    if n < 1:
        raise ValueError("need at least one sample")
    if rng is not None:
        return rng.uniform(-math.pi, math.pi, n)
    return -math.pi + (np.arange(n) + 0.5) * (2 * math.pi / n)


def search_desired_heading(
    theta_g: float,
    peds,
    v_ax: float,
    n_samples: int = DEFAULT_SAMPLES,
    rng=None,
    robot_radius: float = 0.3,
    blocked_fallback: float = BLOCKED_FALLBACK_HEADING,
) -> float:
    """Collision-free heading closest to the sub-goal direction.

    With no pedestrians the sub-goal direction is returned unchanged.
    Otherwise `n_samples` candidate headings are drawn (see
    :func:`heading_samples`); a sample is free when, for every pedestrian,
    the relative-velocity direction lies outside that pedestrian's collision
    cone. Among free samples the one minimizing |wrap(theta_u - theta_g)|
    wins. A pedestrian already overlapping the robot blocks every sample;
    when nothing is free the search keeps its initialization
    `blocked_fallback`.
    """
    if not peds:
        return theta_g
    v_ax = max(float(v_ax), MIN_SEARCH_SPEED)
    robot = Agent(np.zeros(2), radius=robot_radius)
    cones = [collision_cone(robot, p, i) for i, p in enumerate(peds)]
    if any(isinstance(c, Overlap) for c in cones):
        return blocked_fallback

    centers = np.array([c.interval.center for c in cones])
    halves = np.array([c.interval.half_width for c in cones])
    ped_v = np.array([[p.velocity.vx, p.velocity.vy] for p in peds])

    samples = heading_samples(n_samples, rng)
    rel_x = v_ax * np.cos(samples)[:, None] - ped_v[None, :, 0]
    rel_y = v_ax * np.sin(samples)[:, None] - ped_v[None, :, 1]
    angles = np.arctan2(rel_y, rel_x)
    inside = np.abs(wrap_angles(angles - centers[None, :])) <= halves[None, :]
    # Zero relative velocity cannot collide regardless of the atan2 convention.
    inside &= (rel_x != 0.0) | (rel_y != 0.0)
    free = ~inside.any(axis=1)
    if not free.any():
        return blocked_fallback
    candidates = samples[free]
    return float(candidates[np.argmin(np.abs(wrap_angles(candidates - theta_g)))])
