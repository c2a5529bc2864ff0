"""Per-step reward: goal progress, passive obstacle penalty, spin penalty,
and the active heading term driven by the velocity-obstacle search."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass
class RewardParams:
    r_goal: float = 20.0
    r_path: float = 3.2
    goal_radius: float = 0.3  # m
    t_max: float = 25.0  # s
    r_collision: float = -20.0
    r_obstacle: float = -0.2
    collision_distance: float = 0.3  # m, robot radius
    caution_distance: float = 1.2  # m
    r_rotation: float = -0.1
    omega_threshold: float = 1.0  # rad/s
    r_angle: float = 0.6
    heading_threshold: float = math.pi / 6  # rad

    def __post_init__(self):
        if self.goal_radius >= self.caution_distance:
            raise ConfigError("goal_radius must be < caution_distance")
        if self.collision_distance > self.caution_distance:
            raise ConfigError("collision_distance must be <= caution_distance")
        if not 0 < self.heading_threshold <= math.pi:
            raise ConfigError("heading_threshold must be in (0, pi]")


@dataclass
class RewardBreakdown:
    """The four terms, their exact float sum, and which branch fired."""

    r_g: float
    r_c: float
    r_w: float
    r_d: float
    total: float
    reached_goal: bool = False
    timed_out: bool = False
    collided: bool = False

    def to_dict(self) -> dict:
        return {
            "r_g": self.r_g,
            "r_c": self.r_c,
            "r_w": self.r_w,
            "r_d": self.r_d,
            "total": self.total,
        }


def reward_goal(dist_now: float, dist_prev: float, t: float, params: RewardParams) -> float:
    """Goal term: arrival bonus, timeout penalty, else progress along the way."""
    if dist_now < params.goal_radius:
        return params.r_goal
    if t >= params.t_max:
        return -params.r_goal
    return params.r_path * (dist_prev - dist_now)


def reward_collision(obstacle_dist: float, params: RewardParams) -> float:
    """Obstacle term from the distance to the nearest obstacle surface."""
    if obstacle_dist <= params.collision_distance:
        return params.r_collision
    if obstacle_dist <= params.caution_distance:
        return params.r_obstacle * (params.caution_distance - obstacle_dist)
    return 0.0


def reward_smoothness(omega_z: float, params: RewardParams) -> float:
    """Spin penalty above the angular-rate threshold."""
    if abs(omega_z) > params.omega_threshold:
        return params.r_rotation * abs(omega_z)
    return 0.0


def reward_heading(theta_d: float, params: RewardParams) -> float:
    """Active heading term; positive only within the allowed deviation."""
    return params.r_angle * (params.heading_threshold - abs(theta_d))


def reward_total(
    dist_now: float,
    dist_prev: float,
    t: float,
    obstacle_dist: float,
    omega_z: float,
    theta_d: float,
    params: RewardParams,
) -> RewardBreakdown:
    """All four terms for one tick, with branch flags for episode labeling."""
    r_g = reward_goal(dist_now, dist_prev, t, params)
    r_c = reward_collision(obstacle_dist, params)
    r_w = reward_smoothness(omega_z, params)
    r_d = reward_heading(theta_d, params)
    return RewardBreakdown(
        r_g=r_g,
        r_c=r_c,
        r_w=r_w,
        r_d=r_d,
        total=r_g + r_c + r_w + r_d,
        reached_goal=dist_now < params.goal_radius,
        timed_out=dist_now >= params.goal_radius and t >= params.t_max,
        collided=obstacle_dist <= params.collision_distance,
    )
