"""Rigid-body pose algebra for SE(2)/SE(3) and the locality-ball projection.

Poses are value types; every operation returns a fresh pose. Pose2 keeps its
angle in (-pi, pi], Pose3 keeps a unit quaternion with w >= 0, so repeated
composition never drifts out of canonical form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Pose2",
    "Pose3",
    "ProjectionRadius",
    "wrap_angle",
    "compose",
    "inverse",
    "express_in_frame",
    "transform_point",
    "rotate_vector_into_frame",
    "project_lambda",
]


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    theta = math.remainder(theta, 2.0 * math.pi)
    if theta <= -math.pi:
        theta += 2.0 * math.pi
    return theta


@dataclass(frozen=True)
class Pose2:
    """SE(2) pose: translation (x, y) plus rotation angle theta in (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    @staticmethod
    def identity() -> "Pose2":
        return Pose2(0.0, 0.0, 0.0)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def rotation_matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def compose(self, other: "Pose2") -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    def inverse(self) -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        # R(-theta) @ (-t)
        return Pose2(-(c * self.x + s * self.y), -(-s * self.x + c * self.y), -self.theta)

    def transform_point(self, p) -> np.ndarray:
        """Map a point from this pose's local frame into the parent frame."""
        p = np.asarray(p, dtype=float)
        return self.rotation_matrix() @ p + self.position

    def rotate_vector(self, v) -> np.ndarray:
        """Rotate a free vector by this pose's orientation (no translation)."""
        return self.rotation_matrix() @ np.asarray(v, dtype=float)


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def _quat_canonical(q: np.ndarray) -> np.ndarray:
    q = q / np.linalg.norm(q)
    # q and -q are the same rotation; pin w >= 0 (and break the w == 0 tie
    # with the first nonzero component) so equality checks are meaningful.
    if q[0] < 0 or (q[0] == 0 and (q[1] < 0 or (q[1] == 0 and (q[2] < 0 or (q[2] == 0 and q[3] < 0))))):
        q = -q
    return q


def _quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    # v' = v + 2 * u x (u x v + w v), u = vector part
    u = q[1:]
    t = 2.0 * np.cross(u, v)
    return v + q[0] * t + np.cross(u, t)


@dataclass(frozen=True)
class Pose3:
    """SE(3) pose: 3-vector position plus unit quaternion (w, x, y, z)."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quaternion: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        q = np.asarray(self.quaternion, dtype=float).reshape(4)
        object.__setattr__(self, "quaternion", _quat_canonical(q))

    @staticmethod
    def identity() -> "Pose3":
        return Pose3()

    @staticmethod
    def from_axis_angle(axis, angle: float, position=(0.0, 0.0, 0.0)) -> "Pose3":
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        half = 0.5 * angle
        q = np.concatenate([[math.cos(half)], math.sin(half) * axis])
        return Pose3(np.asarray(position, dtype=float), q)

    def compose(self, other: "Pose3") -> "Pose3":
        return Pose3(
            self.position + _quat_rotate(self.quaternion, other.position),
            _quat_mul(self.quaternion, other.quaternion),
        )

    def inverse(self) -> "Pose3":
        q_inv = self.quaternion * np.array([1.0, -1.0, -1.0, -1.0])
        return Pose3(-_quat_rotate(q_inv, self.position), q_inv)

    def transform_point(self, p) -> np.ndarray:
        return _quat_rotate(self.quaternion, np.asarray(p, dtype=float)) + self.position

    def rotate_vector(self, v) -> np.ndarray:
        return _quat_rotate(self.quaternion, np.asarray(v, dtype=float))


@dataclass(frozen=True)
class ProjectionRadius:
    """Locality horizon: radius of the ball entity positions are projected onto."""

    lam: float

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"projection radius must be positive, got {self.lam}")
        object.__setattr__(self, "lam", float(self.lam))


Pose = Pose2 | Pose3


def compose(a: Pose, b: Pose) -> Pose:
    """Pose of b's frame seen through a (group composition)."""
    return a.compose(b)


def inverse(a: Pose) -> Pose:
    return a.inverse()


def express_in_frame(frame: Pose, x: Pose) -> Pose:
    """Re-express pose x (measured in the world frame) in `frame`'s coordinates."""
    return frame.inverse().compose(x)


def transform_point(frame: Pose, p) -> np.ndarray:
    """Re-express a world-frame point in `frame`'s coordinates."""
    return frame.inverse().transform_point(p)


def rotate_vector_into_frame(frame: Pose, v) -> np.ndarray:
    """Rotate a free vector (e.g. an EE offset) into `frame`'s coordinates.

    Free vectors pick up only the rotational part of the frame change.
    """
    return frame.inverse().rotate_vector(v)


def project_lambda(entity: Pose, r: ProjectionRadius) -> Pose:
    """Project an entity pose's position onto the closed lambda-ball at the origin.

    Positions inside the ball pass through unchanged; positions outside are
    scaled back onto the sphere. Orientation is never touched.
    """
    # norms via sqrt(sum(x^2)) everywhere so scalar and batched projection
    # paths agree bit for bit
    if isinstance(entity, Pose2):
        norm = math.sqrt(entity.x * entity.x + entity.y * entity.y)
        if norm < r.lam:
            return entity
        scale = r.lam / norm
        return Pose2(entity.x * scale, entity.y * scale, entity.theta)
    norm = float(np.sqrt(np.sum(entity.position * entity.position)))
    if norm < r.lam:
        return entity
    return Pose3(entity.position * (r.lam / norm), entity.quaternion)


def project_position(p: np.ndarray, r: ProjectionRadius) -> np.ndarray:
    """Position-only variant of :func:`project_lambda` for point entities."""
    p = np.asarray(p, dtype=float)
    norm = float(np.sqrt(np.sum(p * p)))
    if norm < r.lam:
        return p
    return p * (r.lam / norm)
