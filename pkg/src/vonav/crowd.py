"""Social-force pedestrian dynamics.

Each pedestrian is driven by the sum of four forces: attraction toward its
current waypoint, and exponential circular repulsions from the nearest static
obstacle cell, from every other pedestrian, and from the robot. The robot
term uses a larger strength than the pedestrian-pedestrian term so people
give the robot a wider berth than they give each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Velocity2D
from .world import OccupancyGrid

SPEED_CAP_FACTOR = 1.3  # max speed relative to desired speed
WAYPOINT_RADIUS = 0.5  # m; advance to the next waypoint inside this


@dataclass
class SocialForceParams:
    """Force-law constants. All strengths/ranges positive; robot repulsion
    must be stronger than pedestrian-pedestrian repulsion."""

    relaxation_time: float = 0.5
    ped_repulsion_strength: float = 2.0
    ped_repulsion_range: float = 0.3
    obs_repulsion_strength: float = 10.0
    obs_repulsion_range: float = 0.2
    robot_repulsion_strength: float = 4.0
    robot_repulsion_range: float = 0.5

    def __post_init__(self):
        values = (
            self.relaxation_time,
            self.ped_repulsion_strength,
            self.ped_repulsion_range,
            self.obs_repulsion_strength,
            self.obs_repulsion_range,
            self.robot_repulsion_strength,
            self.robot_repulsion_range,
        )
        if any(v <= 0 for v in values):
            raise ValueError("all social-force parameters must be positive")
        if self.robot_repulsion_strength <= self.ped_repulsion_strength:
            raise ValueError("robot repulsion must exceed pedestrian repulsion")


@dataclass
class Pedestrian:
    id: int
    position: np.ndarray
    velocity: Velocity2D = field(default_factory=lambda: Velocity2D(0.0, 0.0))
    radius: float = 0.3
    desired_speed: float = 1.2
    waypoints: list = field(default_factory=list)
    waypoint_index: int = 0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        if self.radius <= 0:
            raise ValueError("pedestrian radius must be > 0")
        if not 0 < self.desired_speed <= 2.0:
            raise ValueError("desired_speed must be in (0, 2] m/s")

    @property
    def current_waypoint(self) -> np.ndarray:
        if not self.waypoints:
            return self.position
        return np.asarray(self.waypoints[self.waypoint_index], dtype=float)


@dataclass
class ForceBreakdown:
    """Per-term forces for one pedestrian; `total` is their exact sum."""

    desired: np.ndarray
    obstacle: np.ndarray
    pedestrians: np.ndarray
    robot: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.desired + self.obstacle + self.pedestrians + self.robot


def _repulsion(delta: np.ndarray, surface_sum, strength, rep_range) -> np.ndarray:
    """A * exp((r_sum - d) / B) along delta; rows with d == 0 contribute 0."""
    delta = np.atleast_2d(delta)
    d = np.hypot(delta[:, 0], delta[:, 1])
    safe = d > 0.0
    out = np.zeros_like(delta)
    mag = strength * np.exp((np.asarray(surface_sum)[safe] - d[safe]) / rep_range)
    out[safe] = delta[safe] / d[safe, None] * mag[:, None]
    return out


def _all_forces(
    positions: np.ndarray,
    velocities: np.ndarray,
    radii: np.ndarray,
    desired_speeds: np.ndarray,
    waypoints: np.ndarray,
    grid: OccupancyGrid | None,
    robot,
    params: SocialForceParams,
):
    """Vectorized force terms for the whole crowd; returns per-term (N,2) arrays."""
    n = positions.shape[0]
    to_wp = waypoints - positions
    dist = np.hypot(to_wp[:, 0], to_wp[:, 1])
    e_hat = np.zeros_like(to_wp)
    far = dist > 1e-9
    e_hat[far] = to_wp[far] / dist[far, None]
    f_des = (desired_speeds[:, None] * e_hat - velocities) / params.relaxation_time

    f_per = np.zeros((n, 2))
    if n > 1:
        delta = positions[:, None, :] - positions[None, :, :]  # i minus j
        d = np.hypot(delta[..., 0], delta[..., 1])
        np.fill_diagonal(d, np.inf)  # no self-force; also skips coincident-self
        r_sum = radii[:, None] + radii[None, :]
        with np.errstate(over="ignore"):
            mag = params.ped_repulsion_strength * np.exp(
                (r_sum - d) / params.ped_repulsion_range
            )
        mag[~np.isfinite(d) | (d == 0.0)] = 0.0
        scale = np.where(d > 0, mag / np.where(d > 0, d, 1.0), 0.0)
        f_per = (delta * scale[..., None]).sum(axis=1)

    f_obs = np.zeros((n, 2))
    if grid is not None:
        tree = grid.obstacle_tree()
        if tree is not None:
            _, nearest = tree.query(positions)
            cell_pts = tree.data[nearest]
            f_obs = _repulsion(
                positions - cell_pts,
                radii,
                params.obs_repulsion_strength,
                params.obs_repulsion_range,
            )

    f_rob = np.zeros((n, 2))
    if robot is not None:
        robot_pos, robot_radius = robot
        f_rob = _repulsion(
            positions - np.asarray(robot_pos, dtype=float),
            radii + robot_radius,
            params.robot_repulsion_strength,
            params.robot_repulsion_range,
        )
    return f_des, f_obs, f_per, f_rob


def compute_social_force(
    ped: Pedestrian,
    others,
    grid: OccupancyGrid | None,
    robot,
    params: SocialForceParams,
) -> ForceBreakdown:
    """Resultant force on one pedestrian, broken down by term.

    `robot` is an optional (position, radius) pair; `others` the remaining
    pedestrians. Distant agents contribute exponentially little, never an
    error.
    """
    group = [ped] + list(others)
    f_des, f_obs, f_per, f_rob = _all_forces(
        np.array([p.position for p in group]),
        np.array([p.velocity.array for p in group]),
        np.array([p.radius for p in group]),
        np.array([p.desired_speed for p in group]),
        np.array([p.current_waypoint for p in group]),
        grid,
        robot,
        params,
    )
    return ForceBreakdown(f_des[0], f_obs[0], f_per[0], f_rob[0])


def step_crowd(
    peds: list[Pedestrian],
    grid: OccupancyGrid | None,
    robot,
    params: SocialForceParams,
    dt: float,
) -> list[Pedestrian]:
    """Advance the crowd one tick with semi-implicit Euler.

    Velocities update first and are capped at SPEED_CAP_FACTOR times each
    pedestrian's desired speed, then positions integrate the new velocity;
    a pedestrian within WAYPOINT_RADIUS of its waypoint cycles to the next.
    """
    if not 0 < dt <= 0.1:
        raise ValueError(f"dt must be in (0, 0.1], got {dt}")
    if not peds:
        return []
    positions = np.array([p.position for p in peds])
    velocities = np.array([p.velocity.array for p in peds])
    radii = np.array([p.radius for p in peds])
    desired = np.array([p.desired_speed for p in peds])
    waypoints = np.array([p.current_waypoint for p in peds])

    f_des, f_obs, f_per, f_rob = _all_forces(
        positions, velocities, radii, desired, waypoints, grid, robot, params
    )
    v_new = velocities + (f_des + f_obs + f_per + f_rob) * dt
    speed = np.hypot(v_new[:, 0], v_new[:, 1])
    cap = SPEED_CAP_FACTOR * desired
    over = speed > cap
    v_new[over] *= (cap[over] / speed[over])[:, None]
    x_new = positions + v_new * dt

    out = []
    for i, ped in enumerate(peds):
        wp_index = ped.waypoint_index
        if ped.waypoints:
            wp = np.asarray(ped.waypoints[wp_index], dtype=float)
            if math.hypot(*(x_new[i] - wp)) < WAYPOINT_RADIUS:
                wp_index = (wp_index + 1) % len(ped.waypoints)
        out.append(
            replace(
                ped,
                position=x_new[i],
                velocity=Velocity2D.from_array(v_new[i]),
                waypoint_index=wp_index,
            )
        )
    return out
