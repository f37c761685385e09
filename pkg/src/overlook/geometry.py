"""Pose and camera-rig math for the perspective-switching travel technique.

Everything here is pure: poses and rig states are immutable values, and the
transition curve is a function of its endpoints and a normalized time. World
axes are x east, y up, z north; yaw is a rotation about +y with yaw 0 facing
+z, and positive pitch looks down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

# Anthropometric defaults. The scaling rules act on these; the base values
# themselves are ordinary adult averages.
IPD_BASE = 0.064
EYE_HEIGHT_BASE = 1.70


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    a = math.fmod(a + math.pi, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    return a - math.pi


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def horizontal_norm(self) -> float:
        return math.hypot(self.x, self.z)

    def distance_to(self, other: "Vec3") -> float:
        return (self - other).norm()

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n < 1e-12:
            raise ValueError("cannot normalize a zero-length vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)

    def to_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @staticmethod
    def of(seq) -> "Vec3":
        x, y, z = seq
        return Vec3(float(x), float(y), float(z))


@dataclass(frozen=True)
class Pose:
    """A viewpoint or body placement: position plus yaw/pitch orientation."""

    position: Vec3
    yaw: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        if not self.position.is_finite():
            raise ValueError("pose position must be finite")
        if not (-math.pi / 2 - 1e-12 <= self.pitch <= math.pi / 2 + 1e-12):
            raise ValueError(f"pitch {self.pitch} outside [-pi/2, pi/2]")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))
        object.__setattr__(self, "pitch", min(max(self.pitch, -math.pi / 2), math.pi / 2))

    def forward(self) -> Vec3:
        """Unit view direction for this yaw/pitch."""
        cp = math.cos(self.pitch)
        return Vec3(math.sin(self.yaw) * cp, -math.sin(self.pitch), math.cos(self.yaw) * cp)

    def facing_xz(self) -> Vec3:
        """Unit horizontal facing (pitch ignored)."""
        return Vec3(math.sin(self.yaw), 0.0, math.cos(self.yaw))


@dataclass(frozen=True)
class RigState:
    """The player's disembodied camera rig.

    eye_separation is kept exactly proportional to scale: it always equals
    (eye_separation / scale at construction) * scale, which is what makes the
    world read as a miniature when the rig grows.
    """

    eye: Pose
    scale: float = 1.0
    eye_separation: float = IPD_BASE

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ValueError("rig scale must be positive")
        if self.eye_separation <= 0.0:
            raise ValueError("eye separation must be positive")

    @property
    def ipd_base(self) -> float:
        return self.eye_separation / self.scale

    @staticmethod
    def first_person(position: Vec3, yaw: float = 0.0, pitch: float = 0.0,
                     ipd_base: float = IPD_BASE) -> "RigState":
        return RigState(eye=Pose(position, yaw, pitch), scale=1.0, eye_separation=ipd_base)

    def with_eye(self, eye: Pose) -> "RigState":
        return RigState(eye=eye, scale=self.scale, eye_separation=self.eye_separation)


@dataclass(frozen=True)
class TransitionParams:
    """Tunable shape of the switch between first-person and travel mode.

    duration:          seconds for the full camera translation
    tm_scale:          body-scale factor in travel mode
    view_angle:        depression angle toward the avatar once on top (rad)
    horizontal_share:  how strongly horizontal motion leads vertical growth
    """

    duration: float = 0.5
    tm_scale: float = 10.0
    view_angle: float = math.pi / 4
    horizontal_share: float = 0.5

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("transition duration must be positive")
        if self.tm_scale <= 1.0:
            raise ValueError("travel-mode scale must exceed 1")
        if not 0.0 < self.view_angle <= math.pi / 2:
            raise ValueError("view angle must lie in (0, pi/2]")
        if not 0.0 < self.horizontal_share < 1.0:
            raise ValueError("horizontal share must lie in (0, 1)")


def ease(t: float) -> float:
    """Smoothstep easing 3t^2 - 2t^3 on [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"ease argument {t} outside [0, 1]")
    return t * t * (3.0 - 2.0 * t)


def depression_offset(eye_height: float, view_angle: float) -> float:
    """Horizontal distance at which an eye at eye_height sees the ground
    under the given depression angle."""
    if eye_height <= 0.0:
        raise ValueError("eye height must be positive")
    if not 0.0 < view_angle <= math.pi / 2:
        raise ValueError("view angle must lie in (0, pi/2]")
    if abs(view_angle - math.pi / 2) < 1e-12:
        return 0.0
    return eye_height / math.tan(view_angle)


def tm_pose_from_nm(nm: RigState, avatar_pos: Vec3, params: TransitionParams,
                    eye_height_base: float = EYE_HEIGHT_BASE) -> RigState:
    """Travel-mode rig for a first-person rig standing at avatar_pos.

    The eye rises to eye_height_base * tm_scale above the avatar's ground
    height and slides backward along the current facing far enough that the
    avatar sits at exactly params.view_angle below the horizon. Yaw is kept;
    only pitch is re-aimed at the avatar.
    """
    if abs(nm.scale - 1.0) > 1e-9:
        raise ValueError("travel-mode pose must be derived from a scale-1 rig")
    eye_height = eye_height_base * params.tm_scale
    back = depression_offset(eye_height, params.view_angle)
    facing = nm.eye.facing_xz()
    eye_pos = Vec3(avatar_pos.x - facing.x * back,
                   avatar_pos.y + eye_height,
                   avatar_pos.z - facing.z * back)
    pitch = math.atan2(eye_height, back)
    eye = Pose(eye_pos, yaw=nm.eye.yaw, pitch=pitch)
    return RigState(eye=eye, scale=params.tm_scale,
                    eye_separation=nm.ipd_base * params.tm_scale)


def transition_sample(from_rig: RigState, to_rig: RigState, t: float,
                      params: TransitionParams) -> RigState:
    """Rig at normalized time t along the curved switch between two rigs.

    For a growing transition the horizontal displacement leads and vertical
    growth lags (ease(t)^share versus ease(t)^(1/share)); the shrinking
    direction is exactly the time-mirror of the growing one, so ascending and
    descending trace the same curve. Scale interpolates in log space and the
    eye separation stays proportional to it at every sample.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transition time {t} outside [0, 1]")
    if t == 0.0:
        return from_rig
    if t == 1.0:
        return to_rig
    if from_rig.scale > to_rig.scale:
        return transition_sample(to_rig, from_rig, 1.0 - t, params)

    e = ease(t)
    h_progress = e ** params.horizontal_share
    v_progress = e ** (1.0 / params.horizontal_share)

    delta = to_rig.eye.position - from_rig.eye.position
    pos = Vec3(from_rig.eye.position.x + h_progress * delta.x,
               from_rig.eye.position.y + v_progress * delta.y,
               from_rig.eye.position.z + h_progress * delta.z)

    scale = math.exp((1.0 - e) * math.log(from_rig.scale) + e * math.log(to_rig.scale))
    yaw = wrap_angle(from_rig.eye.yaw + e * wrap_angle(to_rig.eye.yaw - from_rig.eye.yaw))
    pitch = from_rig.eye.pitch + e * (to_rig.eye.pitch - from_rig.eye.pitch)

    return RigState(eye=Pose(pos, yaw=yaw, pitch=pitch), scale=scale,
                    eye_separation=from_rig.ipd_base * scale)
