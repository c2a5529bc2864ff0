"""Scenario configuration: robot profiles, the YAML scenario-file format,
map authoring helpers, bundled scenario resolution, and the random
constrained-world generator.

Scenario file schema (YAML, one document):

    name: corridor_05
    profile: turtlebot            # turtlebot | jackal
    map: corridor.map.yaml        # sidecar path relative to this file
    robot: {start: [x, y, heading], radius: 0.3}
    goals: [[x, y], ...]          # visited in order; last one ends the run
    pedestrians:                  # roster; may be empty
      - id: 1
        start: [x, y]
        radius: 0.3
        desired_speed: 1.0        # omit to sample uniform [0.8, 1.2] per seed
        waypoints: [[x, y], ...]  # cyclic
    dt: 0.05                      # optional, default 0.05
    seed: 1234                    # optional default seed
    trials: 4                     # optional default trial count
    overrides:                    # optional profile tweaks
      lookahead: 2.0
      detector: {position_noise_sigma: 0.0, dropout_prob: 0.0, ...}
      reward: {t_max: 25.0, ...}
      control: {v_max: 0.5, k_omega: 2.0}
      vo: {samples: 100, deterministic: false}
    crowd: {robot_repulsion_strength: 4.0, ...}   # social-force overrides
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .crowd import Pedestrian, SocialForceParams
from .errors import ConfigError
from .geometry import Pose2D, Velocity2D
from .observation import EncoderConfig
from .perception import DetectorConfig
from .reward import RewardParams
from .world import LidarConfig, OccupancyGrid, load_map, plan_global_path

BUNDLED_VERSION = "v1"

DESIRED_SPEED_RANGE = (0.8, 1.2)  # m/s, sampled when the roster omits one

# Planned paths keep this much clearance beyond the robot radius; the
# collision shell sits exactly at the radius, so tracking error and cell
# quantization need headroom.
PLAN_CLEARANCE_MARGIN = 0.2


@dataclass
class Profile:
    """Robot/sensor/controller configuration for one platform."""

    name: str
    lidar: LidarConfig
    detector: DetectorConfig
    detect_pedestrians: bool = True
    pool_sector_fov: float = math.radians(180.0)
    lookahead: float = 2.0
    v_max: float = 0.5
    k_omega: float = 2.0
    vo_samples: int = 100
    vo_deterministic: bool = False
    use_velocity_switch: bool = False
    switch_distance: float = 2.2
    switch_fast: float = 2.0
    switch_slow: float = 0.5
    reward: RewardParams = field(default_factory=RewardParams)
    progress_reference: str = "goal"  # or "subgoal"

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            lidar=self.lidar,
            pool_sector_fov=self.pool_sector_fov,
            lookahead=self.lookahead,
        )


def turtlebot_profile() -> Profile:
    """Slow differential-drive platform: 270 deg lidar pooled over the front
    180 deg sector (720 beams, 9 per group), 90 deg pedestrian detector,
    fixed 0.5 m/s speed limit, 2 m sub-goal lookahead."""
    return Profile(
        name="turtlebot",
        lidar=LidarConfig(0.1, 30.0, math.radians(270.0), math.radians(0.25), 20.0),
        detector=DetectorConfig(math.radians(90.0), 0.3, 20.0, 0.05, 0.05),
        pool_sector_fov=math.radians(180.0),
        lookahead=2.0,
        v_max=0.5,
    )


def jackal_profile() -> Profile:
    """Fast platform for constrained static worlds: the full 270 deg scan is
    pooled (1080 beams into groups alternating 13/14), pedestrian grids are
    zeroed, lookahead shrinks to 1 m, and the 2.0/0.5 m/s maximum-velocity
    switch engages below 2.2 m of clearance."""
    return Profile(
        name="jackal",
        lidar=LidarConfig(0.1, 30.0, math.radians(270.0), math.radians(0.25), 20.0),
        detector=DetectorConfig(math.radians(90.0), 0.3, 20.0, 0.05, 0.05),
        detect_pedestrians=False,
        pool_sector_fov=math.radians(270.0),
        lookahead=1.0,
        v_max=2.0,
        use_velocity_switch=True,
    )


_PROFILE_FACTORIES = {"turtlebot": turtlebot_profile, "jackal": jackal_profile}


@dataclass
class PedestrianSpec:
    id: int
    start: np.ndarray
    radius: float = 0.3
    desired_speed: float | None = None
    waypoints: list = field(default_factory=list)

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)

    def instantiate(self, rng) -> Pedestrian:
        speed = self.desired_speed
        if speed is None:
            speed = float(rng.uniform(*DESIRED_SPEED_RANGE))
        return Pedestrian(
            id=self.id,
            position=self.start.copy(),
            velocity=Velocity2D(0.0, 0.0),
            radius=self.radius,
            desired_speed=speed,
            waypoints=[np.asarray(w, dtype=float) for w in self.waypoints],
        )


@dataclass
class ScenarioConfig:
    name: str
    grid: OccupancyGrid
    robot_start: Pose2D
    goals: list
    pedestrians: list[PedestrianSpec] = field(default_factory=list)
    profile: Profile = field(default_factory=turtlebot_profile)
    crowd: SocialForceParams = field(default_factory=SocialForceParams)
    robot_radius: float = 0.3
    plan_inflation: float | None = None  # None: robot_radius + margin
    dt: float = 0.05
    seed: int | None = None
    trials: int = 1

    def __post_init__(self):
        if not self.goals:
            raise ConfigError("goal sequence must be non-empty")
        self.goals = [np.asarray(g, dtype=float) for g in self.goals]
        if not 0 < self.dt <= 0.1:
            raise ConfigError(f"dt must be in (0, 0.1], got {self.dt}")
        if abs(self.dt * self.profile.lidar.rate - 1.0) > 1e-9:
            raise ConfigError(
                f"dt={self.dt} inconsistent with lidar rate {self.profile.lidar.rate} Hz"
            )
        if self.plan_inflation is None:
            self.plan_inflation = self.robot_radius + PLAN_CLEARANCE_MARGIN


def _apply_overrides(obj, values: dict, what: str):
    for key, value in values.items():
        if not hasattr(obj, key):
            raise ConfigError(f"unknown {what} field {key!r}")
        setattr(obj, key, value)
    obj.__post_init__()
    return obj


def load_scenario(path) -> ScenarioConfig:
    """Load and validate a scenario file (see module docstring for schema)."""
    path = resolve_scenario_path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read scenario {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"scenario {path} is not a mapping")
    for key in ("name", "map", "robot", "goals"):
        if key not in data:
            raise ConfigError(f"scenario {path} missing required key {key!r}")
    known = {
        "name", "profile", "map", "robot", "goals", "pedestrians",
        "dt", "seed", "trials", "overrides", "crowd",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"scenario {path} has unknown keys {sorted(unknown)}")

    profile_name = data.get("profile", "turtlebot")
    if profile_name not in _PROFILE_FACTORIES:
        raise ConfigError(f"unknown profile {profile_name!r}")
    profile = _PROFILE_FACTORIES[profile_name]()

    overrides = data.get("overrides") or {}
    if "lookahead" in overrides:
        profile.lookahead = float(overrides["lookahead"])
    for section, target in (("detector", profile.detector), ("reward", profile.reward)):
        if section in overrides:
            _apply_overrides(target, overrides[section], section)
    if "control" in overrides:
        ctl = overrides["control"]
        profile.v_max = float(ctl.get("v_max", profile.v_max))
        profile.k_omega = float(ctl.get("k_omega", profile.k_omega))
    if "vo" in overrides:
        vo_cfg = overrides["vo"]
        profile.vo_samples = int(vo_cfg.get("samples", profile.vo_samples))
        profile.vo_deterministic = bool(
            vo_cfg.get("deterministic", profile.vo_deterministic)
        )

    crowd = SocialForceParams()
    if data.get("crowd"):
        _apply_overrides(crowd, data["crowd"], "crowd")

    robot = data["robot"]
    start = robot.get("start")
    if not (isinstance(start, (list, tuple)) and len(start) == 3):
        raise ConfigError("robot.start must be [x, y, heading]")

    peds = []
    for i, entry in enumerate(data.get("pedestrians") or []):
        if "start" not in entry or "waypoints" not in entry:
            raise ConfigError(f"pedestrian #{i} needs start and waypoints")
        peds.append(
            PedestrianSpec(
                id=int(entry.get("id", i)),
                start=entry["start"],
                radius=float(entry.get("radius", 0.3)),
                desired_speed=(
                    float(entry["desired_speed"]) if "desired_speed" in entry else None
                ),
                waypoints=entry["waypoints"],
            )
        )

    return ScenarioConfig(
        name=str(data["name"]),
        grid=load_map(path.parent / data["map"]),
        robot_start=Pose2D(float(start[0]), float(start[1]), float(start[2])),
        goals=data["goals"],
        pedestrians=peds,
        profile=profile,
        crowd=crowd,
        robot_radius=float(robot.get("radius", 0.3)),
        dt=float(data.get("dt", 0.05)),
        seed=data.get("seed"),
        trials=int(data.get("trials", 1)),
    )


def bundled_scenario_dir() -> Path:
    return Path(resources.files("vonav")) / "data" / "scenarios" / BUNDLED_VERSION


def resolve_scenario_path(path) -> Path:
    """Accept a filesystem path or the bare name of a bundled scenario."""
    p = Path(path)
    if p.exists():
        return p
    bundled = bundled_scenario_dir() / f"{path}.yaml"
    if bundled.exists():
        return bundled
    raise ConfigError(f"scenario not found: {path}")


def list_bundled_scenarios() -> list[str]:
    d = bundled_scenario_dir()
    if not d.is_dir():
        return []
    return sorted(p.stem for p in d.glob("*.yaml") if not p.name.endswith(".map.yaml"))


def validate_scenario(path) -> list[str]:
    """Return a list of problems (empty when the scenario is usable)."""
    problems: list[str] = []
    try:
        cfg = load_scenario(path)
    except ConfigError as e:
        return [str(e)]
    grid = cfg.grid
    inflated = grid.inflated(cfg.plan_inflation)

    def blocked(point, label):
        row, col = grid.world_to_cell(point[0], point[1])
        if not (0 <= row < grid.height and 0 <= col < grid.width):
            problems.append(f"{label} outside the map")
        elif inflated[row, col]:
            problems.append(f"{label} inside inflated obstacle space")

    blocked(cfg.robot_start.position, "robot start")
    for i, goal in enumerate(cfg.goals):
        blocked(goal, f"goal #{i}")
    prev = cfg.robot_start.position
    for i, goal in enumerate(cfg.goals):
        if plan_global_path(grid, prev, goal, cfg.plan_inflation) is None:
            problems.append(f"goal #{i} unreachable from previous waypoint")
        prev = goal
    for spec in cfg.pedestrians:
        if grid.is_occupied(spec.start[0], spec.start[1]):
            problems.append(f"pedestrian {spec.id} starts inside an obstacle")
    return problems


# --- map authoring ----------------------------------------------------------

def empty_grid(width_m: float, height_m: float, resolution: float = 0.05,
               origin=(0.0, 0.0)) -> OccupancyGrid:
    cells = np.zeros(
        (int(round(height_m / resolution)), int(round(width_m / resolution))), dtype=bool
    )
    return OccupancyGrid(resolution, cells, Pose2D(origin[0], origin[1], 0.0))


def fill_rect(grid: OccupancyGrid, x0: float, y0: float, x1: float, y1: float) -> None:
    """Mark the axis-aligned rectangle [x0,x1) x [y0,y1) occupied."""
    r0, c0 = grid.world_to_cell(x0, y0)
    r1, c1 = grid.world_to_cell(x1 - 1e-9, y1 - 1e-9)
    grid.cells[max(r0, 0) : r1 + 1, max(c0, 0) : c1 + 1] = True


def fill_disc(grid: OccupancyGrid, cx: float, cy: float, radius: float) -> None:
    rows = np.arange(grid.height)
    cols = np.arange(grid.width)
    yy = grid.origin.y + (rows + 0.5) * grid.resolution
    xx = grid.origin.x + (cols + 0.5) * grid.resolution
    mask = (xx[None, :] - cx) ** 2 + (yy[:, None] - cy) ** 2 <= radius**2
    grid.cells |= mask


def add_border_walls(grid: OccupancyGrid, thickness: float = 0.2) -> None:
    t = max(1, int(round(thickness / grid.resolution)))
    grid.cells[:t, :] = True
    grid.cells[-t:, :] = True
    grid.cells[:, :t] = True
    grid.cells[:, -t:] = True


def generate_constrained_world(seed: int, difficulty: float):
    """Random cylinder field with a guaranteed corridor.

    Returns (grid, start, goal) with the goal 10 m ahead of the start; the
    cylinder density scales with difficulty in [0, 1] and every emitted world
    is verified connected (a plan at the engine's 0.5 m planning inflation
    exists) before return.
    """
    if not 0.0 <= difficulty <= 1.0:
        raise ConfigError(f"difficulty must be in [0, 1], got {difficulty}")
    rng = np.random.default_rng(seed)
    start = np.array([2.0, 4.0])
    goal = np.array([12.0, 4.0])
    n_cylinders = int(round(difficulty * 36))
    for _ in range(100):
        grid = empty_grid(14.0, 8.0, resolution=0.05)
        add_border_walls(grid, 0.2)
        for _ in range(n_cylinders):
            cx = rng.uniform(3.2, 10.8)
            cy = rng.uniform(0.9, 7.1)
            radius = rng.uniform(0.15, 0.35)
            if (
                math.hypot(cx - start[0], cy - start[1]) < radius + 0.85
                or math.hypot(cx - goal[0], cy - goal[1]) < radius + 0.85
            ):
                continue
            fill_disc(grid, cx, cy, radius)
        if plan_global_path(grid, start, goal, 0.3 + PLAN_CLEARANCE_MARGIN) is not None:
            return grid, start, goal
    raise ConfigError(
        f"no connected world found in 100 attempts (seed={seed}, difficulty={difficulty})"
    )
