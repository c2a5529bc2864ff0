"""Episode orchestration: fixed-rate stepping of robot, crowd, sensing,
observation, and reward; termination bookkeeping; benchmark aggregation.

Tick order inside :meth:`Engine.step`: denormalize and clamp the action,
advance the robot, advance the crowd, raycast, detect/track, check
termination (advancing to the next goal on intermediate success), then
encode the observation and heading against the current path and score the
reward. Every stochastic subsystem draws from its own seeded stream
(crowd / detector / heading search), so a (scenario, seed, action script)
triple reproduces trajectories, rewards, and logs bit for bit.

A run visits the scenario's goal sequence in order. Each leg is its own
reward episode: the leg clock, progress baseline, and metrics reset when a
goal is reached, and reaching a non-final goal replans without terminating.
Collision and timeout end the engine episode; the benchmark harness then
records the failed leg and restarts from that leg's goal ("repositioned"
continuation), so every (trial, goal) pair yields exactly one record.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .control import (
    Action,
    RobotState,
    clamp_normalized,
    denormalize_action,
    normalize_action,
    step_robot,
    velocity_switch,
    vo_steering_policy,
)
from .crowd import step_crowd
from .errors import ConfigError, EngineError
from .geometry import Pose2D, wrap_angle
from .observation import ObservationEncoder, in_area_track_count, select_subgoal
from .perception import detect, update_tracks
from .reward import reward_total
from .scenarios import ScenarioConfig
from .vo import Agent, search_desired_heading
from .world import nearest_obstacle_distance, plan_global_path, raycast_scan

OUTCOMES = ("success", "collision", "timeout", "unreachable")


@dataclass
class EpisodeRecord:
    """Outcome and metrics of one goal leg."""

    trial: int
    leg: int
    outcome: str
    duration: float
    path_length: float
    mean_speed: float
    reward_sum: float
    steps: int
    goal: list
    trajectory: list = field(default_factory=list)

    def row(self) -> dict:
        return {
            "trial": self.trial,
            "leg": self.leg,
            "outcome": self.outcome,
            "duration": self.duration,
            "path_length": self.path_length,
            "mean_speed": self.mean_speed,
            "reward_sum": self.reward_sum,
            "steps": self.steps,
            "goal": self.goal,
        }


@dataclass
class BenchmarkSummary:
    scenario: str
    policy: str
    trials: int
    seed: int
    episodes: list[EpisodeRecord]
    success_rate: float
    avg_time: float
    avg_length: float
    avg_speed: float


def summarize(records, scenario: str = "", policy: str = "", trials: int = 0,
              seed: int = 0) -> BenchmarkSummary:
    """Aggregate per-leg records; time/length/speed average over successes."""
    records = list(records)
    successes = [r for r in records if r.outcome == "success"]
    n = len(records)

    def avg(values):
        return float(np.mean(values)) if values else float("nan")

    return BenchmarkSummary(
        scenario=scenario,
        policy=policy,
        trials=trials,
        seed=seed,
        episodes=records,
        success_rate=(len(successes) / n) if n else float("nan"),
        avg_time=avg([r.duration for r in successes]),
        avg_length=avg([r.path_length for r in successes]),
        avg_speed=avg([r.mean_speed for r in successes]),
    )


class Engine:
    """Steps one episode of one scenario; see the module docstring."""

    def __init__(self, scenario: ScenarioConfig):
        self.scenario = scenario
        self.profile = scenario.profile
        self.encoder = ObservationEncoder(self.profile.encoder_config())
        self._active = False
        self._done = True
        self.records: list[EpisodeRecord] = []

    # -- lifecycle ----------------------------------------------------------

    def reset(self, seed=None, start_pose: Pose2D | None = None, goal_index: int = 0):
        """Start an episode; returns (observation, info).

        Seed precedence: argument, then scenario default, then 0. Three RNG
        streams are split from it (crowd speeds, detector noise, heading
        sampling).
        """
        scenario = self.scenario
        if seed is None:
            seed = scenario.seed if scenario.seed is not None else 0
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        crowd_ss, detector_ss, vo_ss = ss.spawn(3)
        self._crowd_rng = np.random.default_rng(crowd_ss)
        self._detector_rng = np.random.default_rng(detector_ss)
        self._vo_rng = None if self.profile.vo_deterministic else np.random.default_rng(vo_ss)

        self.robot = RobotState(
            pose=start_pose if start_pose is not None else scenario.robot_start,
            radius=scenario.robot_radius,
        )
        self._v_max_now = self.profile.v_max
        self.peds = [spec.instantiate(self._crowd_rng) for spec in scenario.pedestrians]
        self.tracks = []
        self.records = []
        self._goal_index = goal_index
        self._global_step = 0
        self._active = True
        self._done = False
        self._start_leg()

        scan = self._scan()
        self.encoder.reset(scan)
        self._last_scan_min = nearest_obstacle_distance(scan)
        self._run_perception(None)

        if self._path is None:
            self._finish_leg("unreachable")
            obs, info = self._encode(), self._info(
                clamped=False, leg_done=True, outcome="unreachable"
            )
            return obs, info
        return self._encode(), self._info(clamped=False, leg_done=False, outcome=None)

    def step(self, action_pair):
        """Advance one tick; returns (observation, reward, done, info)."""
        if not self._active or self._done:
            raise EngineError("step() on a finished or un-reset episode")
        raw = np.asarray(action_pair, dtype=float).reshape(2)
        clamped = bool((raw < -1.0).any() or (raw > 1.0).any())
        action = denormalize_action(clamp_normalized(raw), self.profile.v_max)
        if self.profile.use_velocity_switch:
            self._v_max_now = velocity_switch(
                self._last_scan_min,
                self.profile.switch_distance,
                self.profile.switch_fast,
                self.profile.switch_slow,
            )
        else:
            self._v_max_now = self.profile.v_max
        action = Action(min(action.v_x, self._v_max_now), action.omega_z)

        prev_pose = self.robot.pose
        self.robot = step_robot(self.robot, action, self.scenario.dt)
        if self.peds:
            self.peds = step_crowd(
                self.peds,
                self.scenario.grid,
                (self.robot.pose.position, self.robot.radius),
                self.scenario.crowd,
                self.scenario.dt,
            )
        self._global_step += 1
        scan = self._scan()
        self.encoder.push_scan(scan)
        self._last_scan_min = nearest_obstacle_distance(scan)
        self._run_perception((prev_pose, self.robot.pose))

        # Leg accounting and termination, before the observation so that an
        # advanced goal is already reflected in the sub-goal the policy sees.
        self._leg_steps += 1
        self._leg_path += float(
            np.hypot(
                self.robot.pose.x - prev_pose.x, self.robot.pose.y - prev_pose.y
            )
        )
        t = self._leg_steps * self.scenario.dt
        goal = self.scenario.goals[self._goal_index]
        goal_dist = float(np.hypot(*(goal - self.robot.pose.position)))
        obstacle_dist = self._obstacle_distance(scan)
        reference_prev, reference_now = self._progress_pair(goal_dist)

        outcome = None
        if obstacle_dist <= self.profile.reward.collision_distance or self._ped_contact():
            outcome = "collision"
        elif goal_dist < self.profile.reward.goal_radius:
            outcome = "success"
        elif t >= self.profile.reward.t_max:
            outcome = "timeout"

        advanced = False
        if outcome == "success" and self._goal_index + 1 < len(self.scenario.goals):
            advanced = True  # intermediate goal: keep going on a fresh leg

        theta_d, theta_g = self._heading(action.v_x)
        breakdown = reward_total(
            reference_now,
            reference_prev,
            t,
            obstacle_dist,
            action.omega_z,
            theta_d,
            self.profile.reward,
        )
        self._leg_reward += breakdown.total
        self._prev_goal_dist = goal_dist
        self._trajectory.append(
            {
                "step": self._global_step,
                "pose": [self.robot.pose.x, self.robot.pose.y, self.robot.pose.heading],
                "action": [action.v_x, action.omega_z],
                "reward": breakdown.to_dict(),
                "theta_d": theta_d,
                "peds": [[float(p.position[0]), float(p.position[1])] for p in self.peds],
            }
        )

        leg_done = outcome is not None
        if leg_done:
            self._finish_leg(outcome)
            if advanced:
                self._goal_index += 1
                self._start_leg()  # also rebases the progress distance
                if self._path is None:
                    self._finish_leg("unreachable")
                    outcome = "unreachable"
                else:
                    self._done = False
            theta_d, theta_g = self._heading(action.v_x)

        obs = self._encode()
        info = self._info(
            clamped=clamped,
            leg_done=leg_done,
            outcome=outcome,
            theta=(theta_d, theta_g),
        )
        return obs, breakdown, self._done, info

    # -- helpers -------------------------------------------------------------

    def _start_leg(self):
        goal = self.scenario.goals[self._goal_index]
        self._path = plan_global_path(
            self.scenario.grid,
            self.robot.pose.position,
            goal,
            self.scenario.plan_inflation,
        )
        self._leg_steps = 0
        self._leg_path = 0.0
        self._leg_reward = 0.0
        self._trajectory = []
        self._prev_goal_dist = float(np.hypot(*(goal - self.robot.pose.position)))
        self._prev_subgoal_dist = None

    def _finish_leg(self, outcome: str):
        duration = self._leg_steps * self.scenario.dt
        mean_speed = self._leg_path / duration if duration > 0 else 0.0
        goal = self.scenario.goals[self._goal_index]
        self.records.append(
            EpisodeRecord(
                trial=0,
                leg=self._goal_index,
                outcome=outcome,
                duration=duration,
                path_length=self._leg_path,
                mean_speed=mean_speed,
                reward_sum=self._leg_reward,
                steps=self._leg_steps,
                goal=[float(goal[0]), float(goal[1])],
                trajectory=self._trajectory,
            )
        )
        self._done = True

    def _scan(self):
        return raycast_scan(
            self.scenario.grid,
            self.robot.pose,
            self.profile.lidar,
            [(p.position, p.radius) for p in self.peds],
            timestamp=self._global_step * self.scenario.dt,
        )

    def _run_perception(self, ego_motion):
        if not self.profile.detect_pedestrians:
            self.tracks = []
            return
        detections = detect(
            self.peds,
            self.robot.pose,
            self.scenario.grid,
            self.profile.detector,
            self._detector_rng,
        )
        self.tracks = update_tracks(
            self.tracks, detections, self.scenario.dt, ego_motion
        )

    def _subgoal(self):
        if self._path is None:
            return np.zeros(2)
        return select_subgoal(self._path, self.robot.pose, self.profile.lookahead)

    def _heading(self, v_x: float):
        subgoal = self._subgoal()
        theta_g = math.atan2(subgoal[1], subgoal[0])
        ped_radius = max((s.radius for s in self.scenario.pedestrians), default=0.3)
        agents = [
            Agent(t.rel_position, t.rel_velocity, ped_radius) for t in self.tracks
        ]
        theta_d = search_desired_heading(
            theta_g,
            agents,
            v_x,
            self.profile.vo_samples,
            rng=self._vo_rng,
            robot_radius=self.scenario.robot_radius,
        )
        return theta_d, theta_g

    def _encode(self):
        return self.encoder.encode(self.tracks, self._subgoal())

    def _obstacle_distance(self, scan) -> float:
        """Nearest obstacle surface: lidar returns and pedestrian discs."""
        d = nearest_obstacle_distance(scan)
        for ped in self.peds:
            gap = (
                float(np.hypot(*(ped.position - self.robot.pose.position)))
                - ped.radius
            )
            d = min(d, gap)
        return d

    def _ped_contact(self) -> bool:
        for ped in self.peds:
            gap = (
                float(np.hypot(*(ped.position - self.robot.pose.position)))
                - ped.radius
                - self.robot.radius
            )
            if gap <= 0.0:
                return True
        return False

    def _progress_pair(self, goal_dist: float):
        """Previous/current distance for the progress term (final goal by
        default; the sub-goal alternative is a profile switch)."""
        if self.profile.progress_reference == "subgoal":
            sub = self._subgoal()
            now = float(np.hypot(sub[0], sub[1]))
            prev = self._prev_subgoal_dist if self._prev_subgoal_dist is not None else now
            self._prev_subgoal_dist = now
            return prev, now
        return self._prev_goal_dist, goal_dist

    def _info(self, clamped: bool, leg_done: bool, outcome, theta=None):
        if theta is None:
            theta = self._heading(max(self.robot.v_x, 0.0))
        theta_d, theta_g = theta
        return {
            "t": self._leg_steps * self.scenario.dt,
            "step": self._global_step,
            "leg": self._goal_index,
            "goal_dist": self._prev_goal_dist,
            "d_obs": self._last_scan_min,
            "v_max_now": self._v_max_now,
            "theta_d": float(theta_d),
            "theta_g": float(theta_g),
            "n_tracks": len(self.tracks),
            "n_tracks_in_area": in_area_track_count(self.tracks),
            "clamped": clamped,
            "leg_done": leg_done,
            "outcome": outcome,
            "episode_done": self._done,
        }


# --- policies and the benchmark harness -------------------------------------

def make_policy(name: str, profile, actions_path=None):
    """Built-in policy callables with signature policy(obs, info) -> action.

    "straight" drives flat out without turning, "vo-steer" tracks the
    engine-reported collision-free heading, and "external" replays a JSON
    Lines action script (zero action once exhausted).
    """
    if name == "straight":
        return lambda obs, info: np.array([1.0, 0.0])
    if name == "vo-steer":

        def policy(obs, info):
            act = vo_steering_policy(
                info["theta_d"], info["v_max_now"], profile.k_omega
            )
            return normalize_action(act, profile.v_max)

        return policy
    if name == "external":
        if actions_path is None:
            raise ConfigError("external policy needs an action script file")
        lines = [
            json.loads(line)
            for line in open(actions_path, encoding="utf-8")
            if line.strip()
        ]
        iterator = iter(lines)

        def replay(obs, info):
            return np.asarray(next(iterator, [0.0, 0.0]), dtype=float)

        return replay
    raise ConfigError(f"unknown policy {name!r} (expected vo-steer|straight|external)")


def run_benchmark(
    scenario: ScenarioConfig,
    policy,
    trials: int | None = None,
    seed: int | None = None,
    policy_name: str = "",
    keep_trajectories: bool = True,
) -> BenchmarkSummary:
    """Run `trials` passes over the scenario's goal sequence.

    Every (trial, goal) pair produces exactly one EpisodeRecord. After a
    failed leg the robot restarts from that leg's goal, headed toward the
    next one, under a freshly spawned per-segment seed; see the module
    docstring.
    """
    trials = trials if trials is not None else scenario.trials
    seed = seed if seed is not None else scenario.seed
    if seed is None:
        raise ConfigError("benchmark runs require a seed")
    engine = Engine(scenario)
    goals = scenario.goals
    all_records: list[EpisodeRecord] = []
    trial_seeds = np.random.SeedSequence(seed).spawn(trials)
    for trial, trial_ss in enumerate(trial_seeds):
        start = scenario.robot_start
        goal_index = 0
        while goal_index < len(goals):
            obs, info = engine.reset(
                seed=trial_ss.spawn(1)[0], start_pose=start, goal_index=goal_index
            )
            while not info["episode_done"]:
                obs, _, done, info = engine.step(policy(obs, info))
            records = engine.records
            for record in records:
                record.trial = trial
                if not keep_trajectories:
                    record.trajectory = []
            all_records.extend(records)
            last = records[-1]
            goal_index = last.leg + 1
            if last.outcome == "success":
                continue  # engine already ran through the remaining goals
            if last.outcome != "unreachable" and goal_index < len(goals):
                failed_goal = goals[last.leg]
                nxt = goals[goal_index]
                heading = math.atan2(nxt[1] - failed_goal[1], nxt[0] - failed_goal[0])
                start = Pose2D(failed_goal[0], failed_goal[1], wrap_angle(heading))
            # unreachable legs leave the robot where it is
            if last.outcome == "unreachable":
                start = Pose2D(
                    engine.robot.pose.x, engine.robot.pose.y, engine.robot.pose.heading
                )
    return summarize(
        all_records, scenario=scenario.name, policy=policy_name, trials=trials, seed=seed
    )
