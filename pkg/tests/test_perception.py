import math

import numpy as np
import pytest

from vonav.crowd import Pedestrian
from vonav.errors import ConfigError
from vonav.geometry import Pose2D, Velocity2D
from vonav.perception import (
    DetectorConfig,
    TrackedPedestrian,
    detect,
    update_tracks,
)
from vonav.scenarios import empty_grid, fill_rect


def ped(pid, pos, vel=(0.0, 0.0), radius=0.3):
    return Pedestrian(
        id=pid, position=np.asarray(pos, float), velocity=Velocity2D(*vel), radius=radius
    )


def clean_cfg(**kw):
    defaults = dict(
        fov=math.radians(90),
        range_min=0.3,
        range_max=20.0,
        position_noise_sigma=0.0,
        dropout_prob=0.0,
    )
    defaults.update(kw)
    return DetectorConfig(**defaults)


def rng():
    return np.random.default_rng(0)


def test_config_validation():
    with pytest.raises(ConfigError):
        DetectorConfig(fov=0.0)
    with pytest.raises(ConfigError):
        DetectorConfig(dropout_prob=1.0)
    with pytest.raises(ConfigError):
        DetectorConfig(position_noise_sigma=-0.1)


def test_detect_straight_ahead_noise_free():
    dets = detect([ped(0, (2.0, 0.0))], Pose2D(0, 0, 0), None, clean_cfg(), rng())
    assert len(dets) == 1
    assert dets[0] == pytest.approx([2.0, 0.0])


def test_detect_behind_robot_missed():
    dets = detect([ped(0, (-2.0, 0.0))], Pose2D(0, 0, 0), None, clean_cfg(), rng())
    assert dets == []


def test_detect_respects_range_band():
    cfg = clean_cfg()
    near = detect([ped(0, (0.2, 0.0))], Pose2D(0, 0, 0), None, cfg, rng())
    far = detect([ped(0, (25.0, 0.0))], Pose2D(0, 0, 0), None, cfg, rng())
    assert near == [] and far == []


def test_detect_wall_occlusion():
    grid = empty_grid(10.0, 6.0, 0.1)
    fill_rect(grid, 3.0, 0.0, 3.2, 6.0)
    cfg = clean_cfg()
    hidden = detect([ped(0, (5.0, 3.0))], Pose2D(1.0, 3.0, 0.0), grid, cfg, rng())
    assert hidden == []
    visible = detect([ped(0, (2.5, 3.0))], Pose2D(1.0, 3.0, 0.0), grid, cfg, rng())
    assert len(visible) == 1


def test_detect_disc_occlusion_by_nearer_pedestrian():
    blocker = ped(0, (2.0, 0.0), radius=0.3)
    target = ped(1, (5.0, 0.0))
    dets = detect([blocker, target], Pose2D(0, 0, 0), None, clean_cfg(), rng())
    assert len(dets) == 1
    assert dets[0] == pytest.approx([2.0, 0.0])
    # offset target is not occluded
    target2 = ped(1, (5.0, 2.5))
    dets2 = detect([blocker, target2], Pose2D(0, 0, 0), None, clean_cfg(), rng())
    assert len(dets2) == 2


def test_detect_rotated_robot_frame():
    dets = detect(
        [ped(0, (0.0, 3.0))], Pose2D(0, 0, math.pi / 2), None, clean_cfg(), rng()
    )
    assert len(dets) == 1
    assert dets[0] == pytest.approx([3.0, 0.0], abs=1e-12)


def test_detect_deterministic_with_seed():
    peds = [ped(i, (2.0 + i, 0.5 * i)) for i in range(4)]
    cfg = DetectorConfig(position_noise_sigma=0.05, dropout_prob=0.2)
    a = detect(peds, Pose2D(0, 0, 0), None, cfg, np.random.default_rng(42))
    b = detect(peds, Pose2D(0, 0, 0), None, cfg, np.random.default_rng(42))
    assert len(a) == len(b)
    for da, db in zip(a, b):
        assert np.array_equal(da, db)


def test_track_velocity_smoothing_hand_value():
    # track at (2,0), detection at (2.05,0), dt=0.05 -> v = 0.7*(1.0) = 0.7
    tracks = [TrackedPedestrian(0, np.array([2.0, 0.0]))]
    out = update_tracks(tracks, [np.array([2.05, 0.0])], 0.05)
    assert len(out) == 1
    assert out[0].rel_velocity.vx == pytest.approx(0.7)
    assert out[0].rel_velocity.vy == pytest.approx(0.0)


def test_track_dies_after_six_missed_steps():
    tracks = [TrackedPedestrian(0, np.array([2.0, 0.0]))]
    for step in range(6):
        tracks = update_tracks(tracks, [], 0.05)
        if step < 5:
            assert len(tracks) == 1, f"died too early at miss {step + 1}"
    assert tracks == []


def test_stationary_pedestrian_velocity_stays_zero():
    tracks = []
    for _ in range(10):
        tracks = update_tracks(tracks, [np.array([3.0, 1.0])], 0.05)
    assert tracks[0].rel_velocity.vx == pytest.approx(0.0)
    assert tracks[0].rel_velocity.vy == pytest.approx(0.0)
    assert tracks[0].age == 9  # spawned at age 0, updated 9 times


def test_constant_velocity_estimate_converges():
    """sigma=0, dropout=0, constant velocity: error < 0.05 m/s within 10 steps."""
    dt = 0.05
    v_true = np.array([0.9, -0.4])
    pos = np.array([4.0, 1.0])
    tracks = []
    for _ in range(12):
        tracks = update_tracks(tracks, [pos.copy()], dt)
        pos = pos + v_true * dt
    err = np.hypot(*(tracks[0].rel_velocity.array - v_true))
    assert err < 0.05


def test_track_count_bounded_by_detections_plus_coasting():
    rng_local = np.random.default_rng(9)
    tracks = []
    for _ in range(50):
        n = int(rng_local.integers(0, 4))
        dets = [rng_local.uniform(0, 10, 2) for _ in range(n)]
        coasting_before = sum(1 for t in tracks if t.misses > 0) + len(tracks)
        tracks = update_tracks(tracks, dets, 0.05)
        assert len(tracks) <= n + coasting_before


def test_new_detections_spawn_zero_velocity_tracks():
    out = update_tracks([], [np.array([1.0, 1.0]), np.array([4.0, -2.0])], 0.05)
    assert [t.track_id for t in out] == [0, 1]
    assert all(t.rel_velocity.speed == 0.0 for t in out)


def test_gate_blocks_far_association():
    tracks = [TrackedPedestrian(0, np.array([0.0, 0.0]))]
    out = update_tracks(tracks, [np.array([2.0, 0.0])], 0.05)
    # detection 2 m away exceeds the 1 m gate: old track coasts, new track spawns
    ids = sorted(t.track_id for t in out)
    assert ids == [0, 1]
    assert [t for t in out if t.track_id == 0][0].misses == 1


def test_ego_motion_compensation_removes_robot_rotation():
    """A static pedestrian must read ~zero velocity while the robot spins."""
    dt = 0.05
    omega = 2.0  # rad/s, the actuator limit
    world_ped = np.array([4.0, 0.0])
    heading = 0.0
    pose_prev = Pose2D(0, 0, heading)
    tracks = update_tracks([], [world_ped.copy()], dt)  # robot at identity
    for _ in range(10):
        heading += omega * dt
        pose_new = Pose2D(0, 0, heading)
        c, s = math.cos(heading), math.sin(heading)
        rel = np.array([c * world_ped[0] + s * world_ped[1],
                        -s * world_ped[0] + c * world_ped[1]])
        tracks = update_tracks(tracks, [rel], dt, ego_motion=(pose_prev, pose_new))
        pose_prev = pose_new
    assert len(tracks) == 1
    assert tracks[0].rel_velocity.speed < 1e-9


def test_without_ego_motion_rotation_pollutes_velocity():
    dt = 0.05
    world_ped = np.array([4.0, 0.0])
    tracks = update_tracks([], [world_ped.copy()], dt)
    heading = 2.0 * dt
    c, s = math.cos(heading), math.sin(heading)
    rel = np.array([c * 4.0, -s * 4.0])
    tracks = update_tracks(tracks, [rel], dt)
    # apparent lateral speed ~ omega * r = 8 m/s, smoothed by 0.7
    assert abs(tracks[0].rel_velocity.vy) > 4.0
