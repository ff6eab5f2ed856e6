import math

import numpy as np
import pytest

from pushbench.geometry import (
    Pose2,
    Pose3,
    ProjectionRadius,
    compose,
    express_in_frame,
    inverse,
    project_lambda,
    project_position,
    rotate_vector_into_frame,
    wrap_angle,
)


def random_pose2(rng):
    return Pose2(rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(-10, 10))


def random_pose3(rng):
    axis = rng.standard_normal(3)
    return Pose3.from_axis_angle(axis, rng.uniform(-math.pi, math.pi), rng.uniform(-5, 5, 3))


def assert_pose2_close(a, b, tol=1e-9):
    assert abs(a.x - b.x) <= tol
    assert abs(a.y - b.y) <= tol
    assert abs(wrap_angle(a.theta - b.theta)) <= tol


class TestWrapAngle:
    def test_range(self):
        for theta in np.linspace(-50, 50, 1111):
            w = wrap_angle(theta)
            assert -math.pi < w <= math.pi

    def test_pi_maps_to_pi(self):
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)

    def test_identity_on_small(self):
        assert wrap_angle(0.5) == pytest.approx(0.5, abs=1e-15)


class TestPose2:
    def test_compose_identity(self):
        rng = np.random.default_rng(0)
        p = random_pose2(rng)
        assert_pose2_close(compose(Pose2.identity(), p), p, tol=1e-12)
        assert_pose2_close(compose(p, Pose2.identity()), p, tol=1e-12)

    def test_compose_hand_case(self):
        # R(pi/2) @ (1,0) = (0,1); translation (1,0) + (0,1) = (1,1)
        out = compose(Pose2(1, 0, math.pi / 2), Pose2(1, 0, 0))
        assert_pose2_close(out, Pose2(1, 1, math.pi / 2), tol=1e-12)

    def test_inverse_cases(self):
        assert_pose2_close(inverse(Pose2.identity()), Pose2.identity(), tol=1e-15)
        assert_pose2_close(inverse(Pose2(3, 0, 0)), Pose2(-3, 0, 0), tol=1e-15)
        assert_pose2_close(inverse(Pose2(0, 0, math.pi / 2)), Pose2(0, 0, -math.pi / 2), tol=1e-15)

    def test_group_laws_random(self):
        rng = np.random.default_rng(1)
        for _ in range(300):
            a, b, c = (random_pose2(rng) for _ in range(3))
            assert_pose2_close(compose(compose(a, b), c), compose(a, compose(b, c)), tol=1e-9)
            assert_pose2_close(compose(a, inverse(a)), Pose2.identity(), tol=1e-12)

    def test_theta_always_wrapped(self):
        rng = np.random.default_rng(2)
        p = Pose2.identity()
        for _ in range(200):
            p = compose(p, random_pose2(rng))
            assert -math.pi < p.theta <= math.pi


class TestPose3:
    def test_unit_quaternion_invariant(self):
        rng = np.random.default_rng(3)
        p = Pose3.identity()
        for _ in range(2000):
            p = compose(p, random_pose3(rng))
            assert abs(np.linalg.norm(p.quaternion) - 1.0) < 1e-9
            assert p.quaternion[0] >= 0.0

    def test_quaternion_norm_drift_million_compositions(self):
        # per-composition drift before renormalisation stays bounded over 1e6
        # random unit-quaternion products (scalar math: the loop dominates)
        rng = np.random.default_rng(4)
        n = 10**6
        half = rng.uniform(-np.pi, np.pi, n) * 0.5
        axes = rng.standard_normal((n, 3))
        axes /= np.linalg.norm(axes, axis=1)[:, None]
        qs = np.concatenate([np.cos(half)[:, None], np.sin(half)[:, None] * axes], axis=1)
        w1, x1, y1, z1 = 1.0, 0.0, 0.0, 0.0
        worst = 0.0
        for w2, x2, y2, z2 in qs:
            w = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2
            x = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2
            y = w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2
            z = w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2
            norm = (w * w + x * x + y * y + z * z) ** 0.5
            drift = abs(norm - 1.0)
            if drift > worst:
                worst = drift
            w1, x1, y1, z1 = w / norm, x / norm, y / norm, z / norm
        assert worst < 1e-6

    def test_group_laws_random(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            a, b, c = (random_pose3(rng) for _ in range(3))
            ab_c = compose(compose(a, b), c)
            a_bc = compose(a, compose(b, c))
            assert np.allclose(ab_c.position, a_bc.position, atol=1e-9)
            assert np.allclose(ab_c.quaternion, a_bc.quaternion, atol=1e-9)
            inv = compose(a, inverse(a))
            assert np.allclose(inv.position, 0.0, atol=1e-12)
            assert np.allclose(inv.quaternion, [1, 0, 0, 0], atol=1e-12)


class TestExpressInFrame:
    def test_self_is_identity(self):
        rng = np.random.default_rng(6)
        p = random_pose2(rng)
        assert_pose2_close(express_in_frame(p, p), Pose2.identity(), tol=1e-12)

    def test_translation_only_frame(self):
        out = express_in_frame(Pose2(1, 1, 0), Pose2(2, 1, 0))
        assert_pose2_close(out, Pose2(1, 0, 0), tol=1e-15)

    def test_rotated_frame_hand_case(self):
        # offset (0,1) rotated by -pi/2 lands on (1,0)
        out = express_in_frame(Pose2(0, 0, math.pi / 2), Pose2(0, 1, math.pi / 2))
        assert_pose2_close(out, Pose2(1, 0, 0), tol=1e-15)

    def test_frame_invariance_under_global_motion(self):
        # express_in_frame(g*ee, g*x) == express_in_frame(ee, x)
        rng = np.random.default_rng(7)
        for _ in range(300):
            g, ee, x = (random_pose2(rng) for _ in range(3))
            lhs = express_in_frame(compose(g, ee), compose(g, x))
            rhs = express_in_frame(ee, x)
            assert_pose2_close(lhs, rhs, tol=1e-9)

    def test_frame_invariance_pose3(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            g, ee, x = (random_pose3(rng) for _ in range(3))
            lhs = express_in_frame(compose(g, ee), compose(g, x))
            rhs = express_in_frame(ee, x)
            assert np.allclose(lhs.position, rhs.position, atol=1e-9)
            assert np.allclose(lhs.quaternion, rhs.quaternion, atol=1e-9)


class TestRotateVector:
    def test_identity_frame(self):
        v = rotate_vector_into_frame(Pose2(3, 4, 0), [1.5, -2.5])
        assert np.allclose(v, [1.5, -2.5], atol=1e-15)

    def test_hand_case(self):
        v = rotate_vector_into_frame(Pose2(5, 5, math.pi / 2), [1.0, 0.0])
        assert np.allclose(v, [0.0, -1.0], atol=1e-15)

    def test_norm_preserved(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            frame = random_pose2(rng)
            v = rng.standard_normal(2) * 10
            out = rotate_vector_into_frame(frame, v)
            assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(v), abs=1e-9)


class TestProjection:
    def test_radius_must_be_positive(self):
        with pytest.raises(ValueError):
            ProjectionRadius(0.0)
        with pytest.raises(ValueError):
            ProjectionRadius(-3.0)

    def test_inside_unchanged(self):
        lam = ProjectionRadius(150.0)
        p = Pose2(60, 0, 0.3)
        assert project_lambda(p, lam) is p

    def test_outside_scaled(self):
        lam = ProjectionRadius(150.0)
        out = project_lambda(Pose2(300, 0, 1.0), lam)
        assert out.x == pytest.approx(150.0, abs=1e-12)
        assert out.y == pytest.approx(0.0, abs=1e-12)
        assert out.theta == 1.0  # rotation untouched

    def test_norm_direction_rotation_idempotence(self):
        rng = np.random.default_rng(10)
        lam = ProjectionRadius(150.0)
        for _ in range(1000):
            p = Pose2(rng.uniform(-600, 600), rng.uniform(-600, 600), rng.uniform(-3, 3))
            q = project_lambda(p, lam)
            # norm bound
            assert math.hypot(q.x, q.y) <= lam.lam + 1e-12
            # direction preserved
            n_in = math.hypot(p.x, p.y)
            if n_in > 0:
                cos = (p.x * q.x + p.y * q.y) / (n_in * math.hypot(q.x, q.y))
                assert cos >= 1 - 1e-12
            # rotation bit-identical
            assert q.theta == p.theta
            # idempotence
            qq = project_lambda(q, lam)
            assert abs(qq.x - q.x) <= 1e-12 and abs(qq.y - q.y) <= 1e-12

    def test_pose3_projection(self):
        lam = ProjectionRadius(2.0)
        p = Pose3.from_axis_angle([0, 0, 1], 0.7, [3.0, 0.0, 4.0])
        out = project_lambda(p, lam)
        assert np.linalg.norm(out.position) == pytest.approx(2.0, abs=1e-12)
        assert np.allclose(out.quaternion, p.quaternion)

    def test_position_helper_matches(self):
        lam = ProjectionRadius(1.0)
        assert np.allclose(project_position([3.0, 4.0], lam), [0.6, 0.8], atol=1e-12)
