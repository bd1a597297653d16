"""Ground-truth world model: textured plane, ballistic bodies, pinhole camera.

Frames and conventions:

* World: right-handed, Z up. Gravity defaults to (0, 0, -9.81) m/s^2.
* Camera: x right, y down, z along the optical axis (CV convention). The
  front mounting maps camera z to world +X, camera x to world -Y and camera
  y to world -Z, so image-plane displacements live in the world Y/Z plane.
* The background is a textured plane facing the camera, so background motion
  between two camera poses is exactly the plane-induced homography.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import GeometryError, InfeasibleThrowError
from .events import CameraIntrinsics
from .homography import matrix_to_h4pt

GRAVITY = np.array([0.0, 0.0, -9.81])

# Columns are the camera axes expressed in world coordinates.
FRONT_MOUNT = np.array([
    [0.0, 0.0, 1.0],
    [-1.0, 0.0, 0.0],
    [0.0, -1.0, 0.0],
])

_VOID_INTENSITY = 0.4


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


@dataclass
class PlaneModel:
    """Textured plane: anchor point, unit normal (faces the camera), and
    in-plane texture axes in meters."""

    point: np.ndarray
    normal: np.ndarray
    e_u: np.ndarray
    e_v: np.ndarray
    texture: object

    @classmethod
    def frontal(cls, texture, depth: float = 4.0) -> "PlaneModel":
        """Fronto-parallel plane ``depth`` meters along the optical axis."""
        return cls(
            point=np.array([depth, 0.0, 0.0]),
            normal=np.array([-1.0, 0.0, 0.0]),
            e_u=np.array([0.0, -1.0, 0.0]),
            e_v=np.array([0.0, 0.0, -1.0]),
            texture=texture,
        )


@dataclass
class IMOBody:
    """Independently moving object; a sphere, or a bounding sphere standing
    in for an unknown shape (``kind='proxy'``)."""

    radius: float
    position: np.ndarray
    velocity: np.ndarray
    launch_time: float = 0.0
    intensity: float = 0.05
    kind: str = "sphere"
    ballistic: bool = True

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError("IMO radius must be positive")
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)

    def position_at(self, t: float, gravity: np.ndarray) -> np.ndarray:
        if t <= self.launch_time:
            return self.position
        dt = t - self.launch_time
        g = gravity if self.ballistic else 0.0
        return self.position + self.velocity * dt + 0.5 * g * dt * dt

    def velocity_at(self, t: float, gravity: np.ndarray) -> np.ndarray:
        if t <= self.launch_time:
            return np.zeros(3)
        g = gravity if self.ballistic else 0.0
        return self.velocity + g * (t - self.launch_time)


def _static_position(pos):
    pos = np.asarray(pos, dtype=float)
    return lambda t: pos


@dataclass
class CameraRig:
    intrinsics: CameraIntrinsics
    position_fn: Callable[[float], np.ndarray] = field(
        default_factory=lambda: _static_position(np.zeros(3))
    )
    rotation_fn: Callable[[float], np.ndarray] | None = None
    mount: np.ndarray = field(default_factory=lambda: FRONT_MOUNT.copy())

    def pose(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(position, camera-to-world rotation) at time t."""
        rot = self.mount
        if self.rotation_fn is not None:
            rot = self.mount @ self.rotation_fn(t)
        return np.asarray(self.position_fn(t), dtype=float), rot


@dataclass
class WorldState:
    planes: list[PlaneModel]
    imos: list[IMOBody]
    camera: CameraRig
    gravity: np.ndarray = field(default_factory=lambda: GRAVITY.copy())

    @property
    def plane(self) -> PlaneModel:
        return self.planes[0]

    def camera_pose(self, t: float):
        return self.camera.pose(t)


@dataclass
class GroundTruthFrame:
    """Exact per-pixel labels for the window [t0, t1], anchored at t1.

    ``flow`` is the forward displacement (px over the window) of the content
    arriving at each pixel: homography flow on background, object image
    motion on IMO pixels. ``h4pt_bg`` is the true background homography
    mapping frame-t0 pixels to frame-t1 pixels.
    """

    t0: float
    t1: float
    mask: np.ndarray
    flow: np.ndarray
    h4pt_bg: np.ndarray
    imo_states: list[dict]


@lru_cache(maxsize=8)
def _camera_rays(fx, fy, cx, cy, width, height) -> np.ndarray:
    xs, ys = np.meshgrid(np.arange(width, dtype=float), np.arange(height, dtype=float))
    d = np.stack([(xs - cx) / fx, (ys - cy) / fy, np.ones_like(xs)], axis=-1)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def camera_rays(intr: CameraIntrinsics) -> np.ndarray:
    return _camera_rays(intr.fx, intr.fy, intr.cx, intr.cy, intr.width, intr.height)


def project_point(intr: CameraIntrinsics, x_cam: np.ndarray) -> np.ndarray:
    """Pixel coordinates of a camera-frame point (z must be positive)."""
    x_cam = np.asarray(x_cam, dtype=float)
    if x_cam[-1] <= 0:
        raise GeometryError("point is behind the camera")
    return np.array([
        intr.fx * x_cam[0] / x_cam[2] + intr.cx,
        intr.fy * x_cam[1] / x_cam[2] + intr.cy,
    ])


def world_to_camera(pos: np.ndarray, rot_cw: np.ndarray, x_world: np.ndarray) -> np.ndarray:
    return rot_cw.T @ (np.asarray(x_world, dtype=float) - pos)


def camera_to_world(pos: np.ndarray, rot_cw: np.ndarray, x_cam: np.ndarray) -> np.ndarray:
    return pos + rot_cw @ np.asarray(x_cam, dtype=float)


def _render(world: WorldState, t: float, cam_pos=None, cam_rot=None):
    intr = world.camera.intrinsics
    pos, rot = world.camera_pose(t)
    if cam_pos is not None:
        pos = np.asarray(cam_pos, dtype=float)
    if cam_rot is not None:
        rot = cam_rot

    rays = camera_rays(intr) @ rot.T
    h, w = intr.height, intr.width
    depth = np.full((h, w), np.inf)
    intensity = np.full((h, w), _VOID_INTENSITY)
    ids = np.zeros((h, w), dtype=np.int32)

    for plane in world.planes:
        standoff = float(np.dot(pos - plane.point, plane.normal))
        if standoff <= 1e-2:
            raise GeometryError("camera is behind or inside the background plane")
        denom = rays @ plane.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            t_hit = np.dot(plane.point - pos, plane.normal) / denom
        hit = (denom < -1e-9) & (t_hit > 0) & (t_hit < depth)
        if not np.any(hit):
            continue
        pts = pos + rays[hit] * t_hit[hit, None]
        rel = pts - plane.point
        tex = plane.texture.sample(rel @ plane.e_u, rel @ plane.e_v)
        depth[hit] = t_hit[hit]
        intensity[hit] = tex

    for index, imo in enumerate(world.imos):
        center = imo.position_at(t, world.gravity)
        oc = pos - center
        cc = float(np.dot(oc, oc) - imo.radius**2)
        if cc <= 0:
            raise GeometryError("camera is inside an IMO")
        b = rays @ oc
        disc = b * b - cc
        hit = disc > 0
        t_hit = np.where(hit, -b - np.sqrt(np.where(hit, disc, 0.0)), np.inf)
        hit &= (t_hit > 1e-6) & (t_hit < depth)
        depth[hit] = t_hit[hit]
        intensity[hit] = imo.intensity
        ids[hit] = index + 1

    return intensity, ids, depth


def render_log_intensity(world: WorldState, t: float, cam_pos=None, cam_rot=None) -> np.ndarray:
    """Per-pixel log intensity from pinhole projection with z-buffering."""
    intensity, _, _ = _render(world, t, cam_pos, cam_rot)
    return np.log(np.maximum(intensity, 1e-3))


def render_ids(world: WorldState, t: float, cam_pos=None, cam_rot=None) -> np.ndarray:
    _, ids, _ = _render(world, t, cam_pos, cam_rot)
    return ids


def analytic_plane_homography(world: WorldState, t0: float, t1: float) -> np.ndarray:
    """Exact pixel homography of the primary plane from frame t0 to t1."""
    intr = world.camera.intrinsics
    p0, r0 = world.camera_pose(t0)
    p1, r1 = world.camera_pose(t1)
    plane = world.plane

    r_rel = r1.T @ r0
    t_rel = r1.T @ (p0 - p1)
    n_c = r0.T @ plane.normal
    d = float(np.dot(plane.point - p0, plane.normal))  # signed, negative side ok
    k = np.array([[intr.fx, 0, intr.cx], [0, intr.fy, intr.cy], [0, 0, 1.0]])
    h = k @ (r_rel + np.outer(t_rel, n_c) / d) @ np.linalg.inv(k)
    return h / h[2, 2]


def ground_truth(world: WorldState, t0: float, t1: float) -> GroundTruthFrame:
    """Exact mask, flow, and background homography for [t0, t1] (no estimation)."""
    intr = world.camera.intrinsics
    h_bg = analytic_plane_homography(world, t0, t1)
    mask = render_ids(world, t1)
    h4pt = matrix_to_h4pt(h_bg, intr.width, intr.height)

    xs, ys = np.meshgrid(np.arange(intr.width, dtype=float), np.arange(intr.height, dtype=float))
    pts = np.stack([xs, ys], axis=-1)
    hinv = np.linalg.inv(h_bg)
    x, y = pts[..., 0], pts[..., 1]
    w = hinv[2, 0] * x + hinv[2, 1] * y + hinv[2, 2]
    u = (hinv[0, 0] * x + hinv[0, 1] * y + hinv[0, 2]) / w
    v = (hinv[1, 0] * x + hinv[1, 1] * y + hinv[1, 2]) / w
    flow = np.stack([x - u, y - v], axis=-1)

    p0c, r0c = world.camera_pose(t0)
    p1c, r1c = world.camera_pose(t1)
    states = []
    for index, imo in enumerate(world.imos):
        c0 = imo.position_at(t0, world.gravity)
        c1 = imo.position_at(t1, world.gravity)
        cam0 = world_to_camera(p0c, r0c, c0)
        cam1 = world_to_camera(p1c, r1c, c1)
        visible = cam1[2] > imo.radius
        if visible:
            obj_flow = project_point(intr, cam1) - (
                project_point(intr, cam0) if cam0[2] > imo.radius else project_point(intr, cam1)
            )
            flow[mask == index + 1] = obj_flow
        states.append({
            "id": index + 1,
            "radius": imo.radius,
            "kind": imo.kind,
            "position_w": c1.copy(),
            "velocity_w": imo.velocity_at(t1, world.gravity),
            "position_cam": cam1,
            "visible": bool(visible),
        })
    return GroundTruthFrame(t0, t1, mask, flow, h4pt, states)


def aim_ballistic(p0: np.ndarray, target: np.ndarray, speed: float,
                  gravity: np.ndarray) -> tuple[np.ndarray, float]:
    """Initial velocity of magnitude ``speed`` whose arc passes through target.

    Solves |d - g t^2 / 2|^2 = speed^2 t^2 for the flight time t (quartic in
    t, quadratic in t^2) and returns the direct (shortest-time) arc.
    """
    p0 = np.asarray(p0, dtype=float)
    d = np.asarray(target, dtype=float) - p0
    g = np.asarray(gravity, dtype=float)
    a = np.dot(g, g) / 4.0
    b = -(np.dot(d, g) + speed * speed)
    c = np.dot(d, d)
    if a < 1e-12:
        dist = np.linalg.norm(d)
        if dist < 1e-9:
            raise InfeasibleThrowError("launch point coincides with target")
        t = dist / speed
        return d / t, t
    disc = b * b - 4 * a * c
    if disc < 0:
        raise InfeasibleThrowError("target out of reach at this speed")
    roots = [(-b - np.sqrt(disc)) / (2 * a), (-b + np.sqrt(disc)) / (2 * a)]
    times = sorted(np.sqrt(u) for u in roots if u > 1e-12)
    if not times:
        raise InfeasibleThrowError("no forward-time ballistic solution")
    t = times[0]
    v = (d - 0.5 * g * t * t) / t
    return v, t


def closest_approach(p0: np.ndarray, v0: np.ndarray, gravity: np.ndarray,
                     point: np.ndarray, t_max: float = np.inf) -> tuple[float, float]:
    """(min distance, argmin time >= 0) between a ballistic arc and a point.

    The squared distance is a quartic in t; its derivative's real roots are
    the candidate minima.
    """
    a = np.asarray(p0, dtype=float) - np.asarray(point, dtype=float)
    b = np.asarray(v0, dtype=float)
    c = np.asarray(gravity, dtype=float) / 2.0
    # d/dt |a + b t + c t^2|^2
    coeffs = [
        4 * np.dot(c, c),
        6 * np.dot(b, c),
        2 * (np.dot(b, b) + 2 * np.dot(a, c)),
        2 * np.dot(a, b),
    ]
    if abs(coeffs[0]) < 1e-12 and abs(coeffs[1]) < 1e-12:
        roots = [] if abs(coeffs[2]) < 1e-12 else [-coeffs[3] / coeffs[2]]
    else:
        roots = [r.real for r in np.roots(coeffs) if abs(r.imag) < 1e-9]
    candidates = [0.0] + [r for r in roots if 0.0 <= r <= t_max]
    if np.isfinite(t_max):
        candidates.append(t_max)

    def dist(t):
        return float(np.linalg.norm(a + b * t + c * t * t))

    best_t = min(candidates, key=dist)
    return dist(best_t), best_t


def spawn_throw(
    rng: np.random.Generator,
    aim: np.ndarray,
    speed_range: tuple[float, float] = (6.0, 8.0),
    spread: float = 0.0,
    launch_distance: tuple[float, float] = (2.2, 3.0),
    lateral_range: tuple[float, float] = (-0.6, 0.6),
    vertical_range: tuple[float, float] = (-0.3, 0.3),
    gravity: np.ndarray = GRAVITY,
    launch_time: float = 0.0,
    radius: float = 0.14,
    intensity: float = 0.05,
    kind: str = "sphere",
) -> IMOBody:
    """Random throw guaranteed to pass within ``spread`` of the aim point.

    The launch point is sampled in front of the aim (along world +X); the
    target is the aim plus a uniform-in-ball offset of radius ``spread``, so
    the unperturbed arc intersects the quadrotor's bounding sphere whenever
    spread <= that sphere's radius.
    """
    if speed_range[0] <= 0 or speed_range[1] < speed_range[0]:
        raise InfeasibleThrowError("speed range must be positive and ordered")
    aim = np.asarray(aim, dtype=float)
    p0 = aim + np.array([
        rng.uniform(*launch_distance),
        rng.uniform(*lateral_range),
        rng.uniform(*vertical_range),
    ])
    offset = np.zeros(3)
    if spread > 0:
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        offset = direction * spread * rng.uniform() ** (1 / 3)
    speed = rng.uniform(*speed_range)
    velocity, _ = aim_ballistic(p0, aim + offset, speed, gravity)
    return IMOBody(
        radius=radius,
        position=p0,
        velocity=velocity,
        launch_time=launch_time,
        intensity=intensity,
        kind=kind,
    )
