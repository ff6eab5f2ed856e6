"""Deterministic 2D PushT environment.

A point-mass EE (disc) pushes a T-shaped rigid block toward a fixed target at
the workspace centre. Contact is quasi-static and position-based: each EE
substep, any disc/polygon penetration is resolved by translating the block
along the contact normal and rotating it about its centroid in proportion to
the torque of that push, exactly as a uniform-density rigid body would respond
to an impulse through the contact point. No velocities, no friction state —
the same (seed, action sequence) always reproduces the same trajectory bit for
bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose2, wrap_angle
from .spaces import WorldAction, WorldState

__all__ = [
    "SimConfig",
    "SamplingManifold",
    "StepOutcome",
    "Episode",
    "reset",
    "step",
    "reward",
    "anchor_point",
    "scripted_demonstrator",
    "rollout",
    "DEFAULT_CONFIG",
    "IN_DIST_MANIFOLD",
    "OOD_MANIFOLD",
]

# Classic T: 120x30 bar with a 30x90 stem hanging off it. Local origin is the
# anchor point = midpoint of the bar/stem junction; the reward tracks this
# point.
T_VERTICES = np.array(
    [
        [-60.0, -30.0],
        [60.0, -30.0],
        [60.0, 0.0],
        [15.0, 0.0],
        [15.0, 90.0],
        [-15.0, 90.0],
        [-15.0, 0.0],
        [-60.0, 0.0],
    ]
)


# ---------------------------------------------------------------------------
# polygon helpers

def polygon_area_centroid_inertia(verts: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Signed area, centroid, and second moment of area per unit area (about
    the centroid) of a simple polygon."""
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    # polar second moment about the origin
    ix = float(np.sum(cross * (y**2 + y * yn + yn**2))) / 12.0
    iy = float(np.sum(cross * (x**2 + x * xn + xn**2))) / 12.0
    i_origin = (ix + iy) / abs(area)
    i_centroid = i_origin - (cx**2 + cy**2)
    return area, np.array([cx, cy]), i_centroid


def world_vertices(pose: Pose2, verts: np.ndarray) -> np.ndarray:
    return verts @ pose.rotation_matrix().T + pose.position


def point_in_polygon(p: np.ndarray, verts: np.ndarray) -> bool:
    """Even-odd rule ray cast, vectorised over edges."""
    x, y = float(p[0]), float(p[1])
    v1 = verts
    v2 = np.roll(verts, -1, axis=0)
    y1, y2 = v1[:, 1], v2[:, 1]
    crossing = (y1 > y) != (y2 > y)
    if not crossing.any():
        return False
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (y - y1) / (y2 - y1)
        xi = v1[:, 0] + t * (v2[:, 0] - v1[:, 0])
    return bool(np.count_nonzero(crossing & (x < xi)) % 2)


def closest_point_on_polygon(p: np.ndarray, verts: np.ndarray) -> tuple[np.ndarray, int]:
    """Closest point on the polygon boundary to p, and the index of its edge."""
    p = np.asarray(p, dtype=float)
    a = verts
    ab = np.roll(verts, -1, axis=0) - a
    denom = np.einsum("ij,ij->i", ab, ab)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.einsum("ij,ij->i", p - a, ab) / denom
    t = np.clip(np.nan_to_num(t), 0.0, 1.0)
    c = a + t[:, None] * ab
    d2 = np.einsum("ij,ij->i", p - c, p - c)
    i = int(np.argmin(d2))  # first minimum: deterministic tie-break
    return c[i], i


def _outward_normal(verts: np.ndarray, edge: int, ccw: bool) -> np.ndarray:
    a = verts[edge]
    b = verts[(edge + 1) % len(verts)]
    e = b - a
    n = np.array([e[1], -e[0]]) if ccw else np.array([-e[1], e[0]])
    return n / np.linalg.norm(n)


def disc_polygon_penetration(
    center: np.ndarray, radius: float, verts: np.ndarray, ccw: bool
) -> tuple[float, np.ndarray, np.ndarray]:
    """Penetration depth of a disc into a polygon.

    Returns (depth, n, c): translating the polygon by depth*n separates the
    pair; c is the contact point on the polygon boundary. depth <= 0 means no
    contact.
    """
    c, edge = closest_point_on_polygon(center, verts)
    d = c - center
    dist = float(np.linalg.norm(d))
    if point_in_polygon(center, verts):
        if dist < 1e-9:
            n = -_outward_normal(verts, edge, ccw)
        else:
            n = -d / dist
        return radius + dist, n, c
    if dist < 1e-9:
        return radius, -_outward_normal(verts, edge, ccw), c
    return radius - dist, d / dist, c


def segment_polygon_clearance(a: np.ndarray, b: np.ndarray, verts: np.ndarray) -> float:
    """Min distance from segment ab to the polygon (0 if it crosses or an
    endpoint is inside)."""
    if point_in_polygon(a, verts) or point_in_polygon(b, verts):
        return 0.0
    best = math.inf
    n = len(verts)
    for i in range(n):
        d = _segment_segment_distance(a, b, verts[i], verts[(i + 1) % n])
        if d < best:
            best = d
    return best


def _segment_segment_distance(p1, p2, q1, q2) -> float:
    d1 = p2 - p1
    d2 = q2 - q1
    r = p1 - q1
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a == 0.0 and e == 0.0:
        return float(np.linalg.norm(r))
    if a == 0.0:
        s, t = 0.0, min(1.0, max(0.0, f / e))
    else:
        c = float(d1 @ r)
        if e == 0.0:
            t, s = 0.0, min(1.0, max(0.0, -c / a))
        else:
            b = float(d1 @ d2)
            denom = a * e - b * b
            s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom != 0.0 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    closest1 = p1 + s * d1
    closest2 = q1 + t * d2
    return float(np.linalg.norm(closest1 - closest2))


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class SimConfig:
    workspace: float = 512.0  # axis-aligned square, px
    ee_radius: float = 15.0
    max_step: float = 15.0  # px of EE travel per control tick
    horizon: int = 300
    t_vertices: np.ndarray = field(default_factory=lambda: T_VERTICES.copy())
    anchor_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    target: np.ndarray = field(default_factory=lambda: np.array([256.0, 256.0]))
    ee_start: np.ndarray = field(default_factory=lambda: np.array([256.0, 460.0]))
    rotation_gain: float = 1.0  # rad per unit torque, normalised by I/A
    reward_scale: float = 534.0  # anchor distance at which reward hits 0
    success_threshold: float = 0.95
    n_substeps: int = 5

    def __post_init__(self) -> None:
        if self.max_step <= 0 or self.horizon < 1:
            raise ValueError("max_step must be > 0 and horizon >= 1")
        object.__setattr__(self, "t_vertices", np.asarray(self.t_vertices, dtype=float))
        object.__setattr__(self, "anchor_offset", np.asarray(self.anchor_offset, dtype=float))
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float))
        object.__setattr__(self, "ee_start", np.asarray(self.ee_start, dtype=float))
        area, centroid, inertia = polygon_area_centroid_inertia(self.t_vertices)
        object.__setattr__(self, "_ccw", bool(area > 0))
        object.__setattr__(self, "_centroid_local", centroid)
        object.__setattr__(self, "_inertia_per_area", inertia)
        object.__setattr__(
            self, "_circumradius", float(np.max(np.linalg.norm(self.t_vertices, axis=1)))
        )

    def content_key(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(repr(
            (
                self.workspace,
                self.ee_radius,
                self.max_step,
                self.horizon,
                self.t_vertices.tolist(),
                self.anchor_offset.tolist(),
                self.target.tolist(),
                self.ee_start.tolist(),
                self.rotation_gain,
                self.reward_scale,
                self.success_threshold,
                self.n_substeps,
            )
        ).encode())
        return h.hexdigest()[:16]


DEFAULT_CONFIG = SimConfig()


@dataclass(frozen=True)
class SamplingManifold:
    """Torus (annulus) of initial block positions around the target, with the
    block orientation drawn uniformly. Radius is drawn with density ∝ r so the
    distribution is uniform in area."""

    r_min: float
    r_max: float
    theta_range: tuple[float, float] = (0.0, 2.0 * math.pi)
    orientation_range: tuple[float, float] = (0.0, 2.0 * math.pi)

    def __post_init__(self) -> None:
        if not (0 <= self.r_min < self.r_max):
            raise ValueError("need 0 <= r_min < r_max")

    def radial_cdf(self, r: np.ndarray) -> np.ndarray:
        """Closed-form CDF of the radius under area-uniform sampling."""
        r = np.clip(np.asarray(r, dtype=float), self.r_min, self.r_max)
        return (r**2 - self.r_min**2) / (self.r_max**2 - self.r_min**2)

    def to_dict(self) -> dict:
        return {
            "r_min": self.r_min,
            "r_max": self.r_max,
            "theta_range": list(self.theta_range),
            "orientation_range": list(self.orientation_range),
        }

    @staticmethod
    def from_dict(d: dict) -> "SamplingManifold":
        return SamplingManifold(
            r_min=float(d["r_min"]),
            r_max=float(d["r_max"]),
            theta_range=tuple(d.get("theta_range", (0.0, 2.0 * math.pi))),
            orientation_range=tuple(d.get("orientation_range", (0.0, 2.0 * math.pi))),
        )


IN_DIST_MANIFOLD = SamplingManifold(r_min=32.0, r_max=180.0)
OOD_MANIFOLD = SamplingManifold(r_min=180.0, r_max=534.0)


@dataclass(frozen=True)
class StepOutcome:
    next: WorldState
    reward: float
    done: bool
    clipped: bool = False


@dataclass
class Episode:
    episode_id: int
    seed: int
    source: str  # "scripted" | "human"
    steps: list  # (WorldState, WorldAction, reward after the action)
    final_state: WorldState
    final_reward: float
    aborted: bool = False


# ---------------------------------------------------------------------------
# environment

def anchor_point(state: WorldState, cfg: SimConfig = DEFAULT_CONFIG) -> np.ndarray:
    """World position of the block point that must reach the target."""
    block = state.entities[0]
    if cfg.anchor_offset[0] == 0.0 and cfg.anchor_offset[1] == 0.0:
        return block.position
    return block.transform_point(cfg.anchor_offset)


def reward(s: WorldState, cfg: SimConfig = DEFAULT_CONFIG) -> float:
    """1 at the target, falling linearly to 0 at `reward_scale` px away."""
    d = float(np.linalg.norm(anchor_point(s, cfg) - cfg.target))
    return 1.0 - min(1.0, d / cfg.reward_scale)


def reset(seed: int, manifold: SamplingManifold, cfg: SimConfig = DEFAULT_CONFIG) -> WorldState:
    """Sample an initial state: block drawn from the manifold (rejection
    sampling keeps the block position inside the workspace — positions are
    never clamped), EE at its fixed start pose."""
    rng = np.random.default_rng(seed)
    lo_t, hi_t = manifold.theta_range
    lo_o, hi_o = manifold.orientation_range
    for _ in range(10_000):
        u = rng.random()
        r = math.sqrt(manifold.r_min**2 + u * (manifold.r_max**2 - manifold.r_min**2))
        theta = lo_t + (hi_t - lo_t) * rng.random()
        orient = lo_o + (hi_o - lo_o) * rng.random()
        pos = cfg.target + r * np.array([math.cos(theta), math.sin(theta)])
        if 0.0 <= pos[0] <= cfg.workspace and 0.0 <= pos[1] <= cfg.workspace:
            block = Pose2(pos[0], pos[1], wrap_angle(orient))
            ee = Pose2(cfg.ee_start[0], cfg.ee_start[1], 0.0)
            return WorldState(ee=ee, entities=(block,), target=cfg.target.copy(), t=0)
    raise RuntimeError(
        f"manifold r in [{manifold.r_min}, {manifold.r_max}] rejected 10000 samples; "
        "it may lie entirely outside the workspace"
    )


def _clamp_ee(p: np.ndarray, cfg: SimConfig) -> np.ndarray:
    r = cfg.ee_radius
    return np.array(
        [min(cfg.workspace - r, max(r, p[0])), min(cfg.workspace - r, max(r, p[1]))]
    )


def _clamp_block(pose: Pose2, cfg: SimConfig) -> Pose2:
    verts = world_vertices(pose, cfg.t_vertices)
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    dx = max(0.0, -lo[0]) - max(0.0, hi[0] - cfg.workspace)
    dy = max(0.0, -lo[1]) - max(0.0, hi[1] - cfg.workspace)
    if dx == 0.0 and dy == 0.0:
        return pose
    return Pose2(pose.x + dx, pose.y + dy, pose.theta)


_RESOLVE_TOL = 1e-9
_MAX_RESOLVE_ITERS = 12


def _resolve_substep(ee: np.ndarray, block: Pose2, cfg: SimConfig) -> tuple[np.ndarray, Pose2]:
    """Push the block out of the EE disc; if the walls pin the block, back the
    EE off instead, so nothing ends the substep interpenetrating."""
    for _ in range(_MAX_RESOLVE_ITERS):
        verts = world_vertices(block, cfg.t_vertices)
        depth, n, contact = disc_polygon_penetration(ee, cfg.ee_radius, verts, cfg._ccw)
        if depth <= _RESOLVE_TOL:
            return ee, block
        # deep overlaps (possible right after reset) are worked off in chunks
        # so a single iteration never produces a wild rotation
        applied = min(depth, cfg.ee_radius)
        push = applied * n
        centroid = block.transform_point(cfg._centroid_local)
        arm = contact - centroid
        dtheta = cfg.rotation_gain * (arm[0] * push[1] - arm[1] * push[0]) / cfg._inertia_per_area
        c, s = math.cos(dtheta), math.sin(dtheta)
        rel = block.position - centroid
        new_pos = centroid + np.array([c * rel[0] - s * rel[1], s * rel[0] + c * rel[1]]) + push
        block = _clamp_block(Pose2(new_pos[0], new_pos[1], block.theta + dtheta), cfg)
    verts = world_vertices(block, cfg.t_vertices)
    depth, n, _ = disc_polygon_penetration(ee, cfg.ee_radius, verts, cfg._ccw)
    if depth > _RESOLVE_TOL:
        # walls pinned the block; the EE yields instead (may leave the EE
        # against a wall, never the pair interpenetrating)
        ee = ee - depth * n
    return ee, block


def step(s: WorldState, a: WorldAction, cfg: SimConfig = DEFAULT_CONFIG) -> StepOutcome:
    """Advance one control tick. Actions longer than max_step are clipped."""
    delta = np.asarray(a.delta, dtype=float)
    if not np.all(np.isfinite(delta)):
        raise ValueError(f"non-finite action {delta!r} at t={s.t}")
    norm = float(np.linalg.norm(delta))
    clipped = norm > cfg.max_step
    if clipped:
        delta = delta * (cfg.max_step / norm)

    ex, ey = s.ee.x, s.ee.y
    block = s.entities[0]
    if norm > 0.0:
        sx = delta[0] / cfg.n_substeps
        sy = delta[1] / cfg.n_substeps
        r = cfg.ee_radius
        hi = cfg.workspace - r
        reach = cfg.ee_radius + cfg._circumradius
        reach2 = reach * reach
        for _ in range(cfg.n_substeps):
            ex = min(hi, max(r, ex + sx))
            ey = min(hi, max(r, ey + sy))
            # bounding-circle reject: most substeps are contact-free
            dx = ex - block.x
            dy = ey - block.y
            if dx * dx + dy * dy <= reach2:
                ee, block = _resolve_substep(np.array([ex, ey]), block, cfg)
                ex, ey = float(ee[0]), float(ee[1])

    nxt = WorldState(
        ee=Pose2(ex, ey, 0.0),
        entities=(block,) + s.entities[1:],
        target=s.target,
        t=s.t + 1,
    )
    r = reward(nxt, cfg)
    done = nxt.t >= cfg.horizon or r >= cfg.success_threshold
    return StepOutcome(next=nxt, reward=r, done=done, clipped=clipped)


# ---------------------------------------------------------------------------
# scripted demonstrator

_STANDOFF = 112.0  # px behind the anchor; clears the block (max extent ~91) + EE
_REACH_TOL = 18.0
_LATERAL_TOL = 30.0  # half-width of the push corridor
_LOOKAHEAD = 60.0  # pursuit point this far ahead of the anchor while pushing
_BEHIND_NEED = 75.0  # approach region depth that must fit inside the workspace
_CLEAR_MARGIN = 2.0
_STOP_TOL = 1e-6


def _rotated(v: np.ndarray, a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def scripted_demonstrator(s: WorldState, cfg: SimConfig = DEFAULT_CONFIG) -> WorldAction:
    """Two-phase push controller, re-planned every step.

    APPROACH: head for the standoff point behind the anchor (seen from the
    target); when the straight path would graze the block, orbit around it —
    each step targets a waypoint a short arc further along the standoff
    circle, orthogonal to the push axis at first and converging on the
    standoff point. PUSH: once inside the corridor behind the anchor, chase a
    pursuit point a fixed lookahead ahead of the anchor on the push line,
    which keeps contact while steering lateral drift out.

    Near walls the straight push line may have no room behind the block; the
    push axis is then rotated in fixed increments until the approach region
    fits inside the workspace, giving an oblique but feasible push.
    """
    anchor = anchor_point(s, cfg)
    ee = s.ee.position
    err = cfg.target - anchor
    dist = float(np.linalg.norm(err))
    if dist <= _STOP_TOL:
        return WorldAction(np.zeros(2))
    w0 = err / dist  # direction the anchor must travel
    margin = cfg.ee_radius + 2.0
    w = w0
    for phi in (0.0, 0.35, -0.35, 0.7, -0.7, 1.05, -1.05):
        cand = _rotated(w0, phi)
        p = anchor - _BEHIND_NEED * cand
        if margin <= p[0] <= cfg.workspace - margin and margin <= p[1] <= cfg.workspace - margin:
            w = cand
            break
    u_hat = -w
    standoff = _clamp_ee(anchor + _STANDOFF * u_hat, cfg)

    def _move_toward(goal: np.ndarray) -> WorldAction:
        goal = _clamp_ee(goal, cfg)
        d = goal - ee
        n = float(np.linalg.norm(d))
        if n <= 1e-12:
            return WorldAction(np.zeros(2))
        return WorldAction(d * (min(cfg.max_step, n) / n))

    ee_to_anchor = ee - anchor
    ee_dist = float(np.linalg.norm(ee_to_anchor))
    along = float(ee_to_anchor @ u_hat)  # > 0: EE behind the anchor
    lateral = float(u_hat[0] * ee_to_anchor[1] - u_hat[1] * ee_to_anchor[0])
    aligned = 0.0 < along <= _STANDOFF + cfg.max_step and abs(lateral) <= _LATERAL_TOL
    if float(np.linalg.norm(standoff - ee)) <= _REACH_TOL or aligned:
        return _move_toward(anchor + min(dist, _LOOKAHEAD) * w)

    verts = world_vertices(s.entities[0], cfg.t_vertices)
    if segment_polygon_clearance(ee, standoff, verts) >= cfg.ee_radius + _CLEAR_MARGIN:
        return _move_toward(standoff)
    ang_ee = math.atan2(ee_to_anchor[1], ee_to_anchor[0]) if ee_dist > 1e-9 else 0.0
    ang_standoff = math.atan2(u_hat[1], u_hat[0])
    dang = wrap_angle(ang_standoff - ang_ee)
    arc = cfg.max_step / _STANDOFF
    turn = math.copysign(min(abs(dang), arc), dang if dang != 0.0 else 1.0)
    bearing = ang_ee + turn
    waypoint = anchor + _STANDOFF * np.array([math.cos(bearing), math.sin(bearing)])
    return _move_toward(waypoint)


# ---------------------------------------------------------------------------
# rollout

def rollout(
    policy,
    init: WorldState,
    cfg: SimConfig = DEFAULT_CONFIG,
    horizon: int | None = None,
    episode_id: int = 0,
    seed: int = 0,
    source: str = "scripted",
) -> Episode:
    """Run a policy to completion, recording every (state, action, reward)."""
    H = cfg.horizon if horizon is None else horizon
    state = init
    steps = []
    aborted = False
    final_reward = reward(state, cfg)
    while state.t < H:
        action = policy(state)
        delta = np.asarray(action.delta, dtype=float)
        if not np.all(np.isfinite(delta)):
            aborted = True
            break
        outcome = step(state, action, cfg)
        steps.append((state, action, outcome.reward))
        state = outcome.next
        final_reward = outcome.reward
        if outcome.done:
            break
    return Episode(
        episode_id=episode_id,
        seed=seed,
        source=source,
        steps=steps,
        final_state=state,
        final_reward=final_reward,
        aborted=aborted,
    )
