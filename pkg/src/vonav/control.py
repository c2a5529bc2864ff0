"""Action handling and the built-in controllers: normalized-action mapping,
unicycle kinematics, the distance-based maximum-velocity switch, and a
model-free steering policy that tracks the velocity-obstacle heading."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose2D, wrap_angle

OMEGA_MAX = 2.0  # rad/s, symmetric actuator bound


@dataclass
class Action:
    v_x: float  # m/s, forward
    omega_z: float  # rad/s, counterclockwise positive


@dataclass
class RobotState:
    pose: Pose2D
    v_x: float = 0.0
    omega_z: float = 0.0
    radius: float = 0.3

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("robot radius must be > 0")


def clamp_normalized(pair) -> np.ndarray:
    return np.clip(np.asarray(pair, dtype=float), -1.0, 1.0)


def denormalize_action(pair, v_max: float) -> Action:
    """Map a normalized [-1, 1]^2 pair onto [0, v_max] x [-OMEGA_MAX, OMEGA_MAX]."""
    a = clamp_normalized(pair)
    return Action(
        v_x=float((a[0] + 1.0) / 2.0 * v_max),
        omega_z=float(a[1] * OMEGA_MAX),
    )


def normalize_action(action: Action, v_max: float) -> np.ndarray:
    """Inverse of :func:`denormalize_action` on the valid action box."""
    return clamp_normalized(
        [2.0 * action.v_x / v_max - 1.0, action.omega_z / OMEGA_MAX]
    )


def velocity_switch(
    d_obs: float, d_threshold: float = 2.2, fast: float = 2.0, slow: float = 0.5
) -> float:
    """Maximum-velocity switching: full speed only with clear space ahead."""
    return fast if d_obs >= d_threshold else slow


def vo_steering_policy(theta_d: float, v_max_now: float, k_omega: float = 2.0) -> Action:
    """Steer toward the desired heading, slowing down while turning hard."""
    omega = max(-OMEGA_MAX, min(OMEGA_MAX, k_omega * theta_d))
    v = v_max_now * max(0.0, math.cos(theta_d))
    return Action(v_x=v, omega_z=omega)


def step_robot(state: RobotState, action: Action, dt: float) -> RobotState:
    """Advance unicycle kinematics one tick using the midpoint heading.

    The translation step uses heading + omega*dt/2, which is second-order
    accurate on circular arcs while keeping |dposition| = v*dt exactly.
    """
    if not 0 < dt <= 0.1:
        raise ValueError(f"dt must be in (0, 0.1], got {dt}")
    heading_mid = state.pose.heading + action.omega_z * dt / 2.0
    return RobotState(
        pose=Pose2D(
            state.pose.x + action.v_x * math.cos(heading_mid) * dt,
            state.pose.y + action.v_x * math.sin(heading_mid) * dt,
            wrap_angle(state.pose.heading + action.omega_z * dt),
        ),
        v_x=action.v_x,
        omega_z=action.omega_z,
        radius=state.radius,
    )
