"""vonav: deterministic 2D crowd-navigation simulation and motion safety.

Social-force pedestrians, grid-map lidar raycasting, velocity-obstacle
steering, a pooled-lidar/pedestrian-grid/sub-goal observation encoder, a
four-term navigation reward, a benchmark harness, and a newline-delimited
JSON environment protocol for external policy trainers.
"""

from .control import Action, RobotState, denormalize_action, step_robot, velocity_switch, vo_steering_policy
from .crowd import Pedestrian, SocialForceParams, compute_social_force, step_crowd
from .engine import BenchmarkSummary, Engine, EpisodeRecord, make_policy, run_benchmark, summarize
from .errors import ConfigError, EngineError
from .geometry import AngularInterval, Pose2D, Velocity2D, from_robot_frame, interval_contains, to_robot_frame, wrap_angle
from .observation import Observation, ObservationEncoder, build_ped_grids, pool_scan, select_subgoal
from .perception import DetectorConfig, TrackedPedestrian, detect, update_tracks
from .reward import RewardBreakdown, RewardParams, reward_collision, reward_goal, reward_heading, reward_smoothness, reward_total
from .scenarios import Profile, ScenarioConfig, generate_constrained_world, jackal_profile, load_scenario, turtlebot_profile, validate_scenario
from .vo import Agent, CollisionCone, Overlap, collision_cone, relative_velocity_angle, search_desired_heading
from .world import LidarConfig, LidarScan, OccupancyGrid, load_map, nearest_obstacle_distance, plan_global_path, raycast_scan, save_map

__version__ = "0.1.0"
