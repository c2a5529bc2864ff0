import math

import numpy as np
import pytest

from vonav.geometry import (
    AngularInterval,
    Pose2D,
    Velocity2D,
    from_robot_frame,
    interval_contains,
    to_robot_frame,
    wrap_angle,
    wrap_angles,
)


def test_wrap_identity():
    assert wrap_angle(0.0) == 0.0


def test_wrap_three_pi():
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi) > 0  # lands on +pi, not -pi


def test_wrap_negative_three_halves_pi():
    assert wrap_angle(-1.5 * math.pi) == pytest.approx(0.5 * math.pi)


def test_wrap_boundary_convention():
    # (-pi, pi]: -pi maps to +pi, +pi stays
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(math.pi) == pytest.approx(math.pi)


def test_wrap_rejects_non_finite():
    with pytest.raises(ValueError):
        wrap_angle(float("nan"))
    with pytest.raises(ValueError):
        wrap_angle(float("inf"))


def test_wrap_idempotent_and_periodic():
    rng = np.random.default_rng(7)
    for a in rng.uniform(-50, 50, 2000):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi
        assert wrap_angle(w) == pytest.approx(w, abs=1e-12)
        assert wrap_angle(a + 2 * math.pi) == pytest.approx(w, abs=1e-9)


def test_wrap_angles_matches_scalar():
    rng = np.random.default_rng(8)
    a = rng.uniform(-30, 30, 500)
    vec = wrap_angles(a)
    for ai, wi in zip(a, vec):
        assert wi == pytest.approx(wrap_angle(ai), abs=1e-12)


def test_to_robot_frame_identity():
    assert to_robot_frame(np.array([1.0, 0.0]), Pose2D(0, 0, 0)) == pytest.approx([1, 0])


def test_to_robot_frame_quarter_turn():
    local = to_robot_frame(np.array([1.0, 0.0]), Pose2D(0, 0, math.pi / 2))
    assert local == pytest.approx([0.0, -1.0], abs=1e-12)


def test_to_robot_frame_translation():
    local = to_robot_frame(np.array([3.0, 4.0]), Pose2D(1, 2, 0))
    assert local == pytest.approx([2.0, 2.0])


def test_frame_round_trip_random():
    rng = np.random.default_rng(42)
    for _ in range(200):
        pose = Pose2D(*rng.uniform(-10, 10, 2), rng.uniform(-math.pi, math.pi))
        pts = rng.uniform(-20, 20, (50, 2))
        back = from_robot_frame(to_robot_frame(pts, pose), pose)
        assert np.abs(back - pts).max() < 1e-9


def test_frame_round_trip_pose():
    pose = Pose2D(2.0, -1.0, 0.7)
    target = Pose2D(5.0, 3.0, -2.1)
    back = from_robot_frame(to_robot_frame(target, pose), pose)
    assert (back.x, back.y, back.heading) == pytest.approx(
        (target.x, target.y, target.heading), abs=1e-9
    )


def test_interval_contains_simple():
    iv = AngularInterval(0.0, math.pi / 6)
    assert interval_contains(iv, 0.1)
    assert not interval_contains(iv, math.pi)


def test_interval_contains_wrap_seam():
    # interval centered at pi: [pi - 0.2, pi + 0.2] crosses the seam
    iv = AngularInterval(math.pi, 0.2)
    assert interval_contains(iv, -math.pi + 0.1)  # wrap(a - pi) = 0.1 <= 0.2
    assert not interval_contains(iv, -math.pi + 0.3)


def _contains_unrolled(center, half, a):
    """Oracle: unroll into up to two non-wrapping sub-intervals of [-pi, pi]."""
    lo, hi = center - half, center + half
    a = wrap_angle(a)
    pieces = []
    if lo < -math.pi:
        pieces.append((-math.pi, hi))
        pieces.append((lo + 2 * math.pi, math.pi))
    elif hi > math.pi:
        pieces.append((lo, math.pi))
        pieces.append((-math.pi, hi - 2 * math.pi))
    else:
        pieces.append((lo, hi))
    return any(p_lo <= a <= p_hi for p_lo, p_hi in pieces)


def test_interval_contains_vs_unrolled_oracle():
    rng = np.random.default_rng(3)
    mismatches = 0
    for _ in range(10_000):
        center = rng.uniform(-math.pi, math.pi)
        half = rng.uniform(0.0, math.pi)
        a = rng.uniform(-4 * math.pi, 4 * math.pi)
        iv = AngularInterval(center, half)
        expected = _contains_unrolled(center, half, a)
        got = interval_contains(iv, a)
        if got != expected:
            # tolerate fp right at the boundary only
            assert abs(abs(wrap_angle(a - center)) - half) < 1e-12
            mismatches += 1
    assert mismatches <= 3


def test_interval_validation():
    with pytest.raises(ValueError):
        AngularInterval(0.0, -0.1)
    with pytest.raises(ValueError):
        AngularInterval(0.0, 3.5)


def test_velocity_helpers():
    v = Velocity2D(3.0, 4.0)
    assert v.speed == pytest.approx(5.0)
    assert Velocity2D.from_array(v.array).vx == 3.0
    with pytest.raises(ValueError):
        Velocity2D(float("nan"), 0.0)


def test_pose_wraps_heading():
    assert Pose2D(0, 0, 3 * math.pi).heading == pytest.approx(math.pi)
