"""Arc-based teleport baseline: parabolic aim preview, instant relocation.

The rig never scales and stays locked to the avatar's head; a commit moves
both to the arc landing in the same tick. Headless agents do not hold a
controller, so aim directions are synthesized by inverting the ballistic
equation for a desired landing point (always the low arc).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .avatar import Avatar
from .geometry import EYE_HEIGHT_BASE, Pose, RigState, Vec3, wrap_angle
from .metrics import EventLog, KIND_AIM, KIND_RELOCATION
from .outstanding import AimPreview, TechniqueStateError
from .world import DEFAULT_GRAVITY, DEFAULT_LAUNCH_SPEED, WorldModel


def invert_ballistics(origin: Vec3, target: Vec3, v0: float,
                      g: float = DEFAULT_GRAVITY) -> Vec3 | None:
    """Launch direction that lands a speed-v0 projectile on target, choosing
    the low arc. None when the target is out of ballistic reach."""
    dx = target.x - origin.x
    dz = target.z - origin.z
    r = math.hypot(dx, dz)
    dy = target.y - origin.y
    if r < 1e-9:
        return Vec3(0.0, -1.0, 0.0) if dy <= 0.0 else None
    disc = v0 ** 4 - g * (g * r * r + 2.0 * dy * v0 * v0)
    if disc < 0.0:
        return None
    tan_theta = (v0 * v0 - math.sqrt(disc)) / (g * r)
    ux, uz = dx / r, dz / r
    horiz = 1.0 / math.sqrt(1.0 + tan_theta * tan_theta)
    vert = tan_theta * horiz
    return Vec3(ux * horiz, vert, uz * horiz)


@dataclass
class TeleportConfig:
    v0: float = DEFAULT_LAUNCH_SPEED
    gravity: float = DEFAULT_GRAVITY

    @property
    def flat_range(self) -> float:
        """Maximum range onto ground at launch height (45 degree arc)."""
        return self.v0 * self.v0 / self.gravity


class TeleportTechnique:
    """Baseline technique state for one session."""

    name = "teleport"

    def __init__(self, world: WorldModel, avatar: Avatar,
                 config: TeleportConfig | None = None,
                 ipd_base: float = 0.064,
                 eye_height_base: float = EYE_HEIGHT_BASE,
                 log: EventLog | None = None):
        self.world = world
        self.avatar = avatar
        self.config = config or TeleportConfig()
        self.ipd_base = ipd_base
        self.eye_height_base = eye_height_base
        self.log = log
        self.rig = self._head_rig()
        self.aiming = False
        self.preview: AimPreview | None = None
        self.last_arc: list[Vec3] = []
        self.diagnostics: list[str] = []
        self._tick = 0

    mode_label = "NM"
    in_transition = False

    def _head_rig(self, yaw: float | None = None, pitch: float = 0.0) -> RigState:
        eye = Vec3(self.avatar.position.x,
                   self.avatar.position.y + self.eye_height_base,
                   self.avatar.position.z)
        return RigState.first_person(eye, yaw=self.avatar.yaw if yaw is None else yaw,
                                     pitch=pitch, ipd_base=self.ipd_base)

    def _log(self, kind: str, distance: float | None = None) -> None:
        if self.log is not None:
            self.log.append(self._tick, kind, self.mode_label, distance)

    def _reject(self, message: str) -> None:
        self.diagnostics.append(message)
        raise TechniqueStateError(message)

    # -- inputs ----------------------------------------------------------------

    def handle_look(self, dyaw: float, dpitch: float) -> None:
        eye = self.rig.eye
        pitch = min(max(eye.pitch + dpitch, -math.pi / 2), math.pi / 2)
        self.rig = self.rig.with_eye(Pose(eye.position, wrap_angle(eye.yaw + dyaw), pitch))
        self.avatar.yaw = self.rig.eye.yaw

    def handle_move(self, dx: float, dz: float) -> None:
        self.avatar.move_physically(dx, dz, self.world)
        self.rig = self._head_rig(yaw=self.rig.eye.yaw, pitch=self.rig.eye.pitch)

    def press_switch(self) -> None:
        self.diagnostics.append("teleport has no perspective switch; ignored")

    def press_trigger(self) -> None:
        self.aiming = True

    def release_trigger(self) -> None:
        if self.aiming and self.preview is not None and self.preview.valid:
            self.commit_teleport()
        self.aiming = False
        self.preview = None
        self.last_arc = []

    def toggle_run(self) -> None:
        self.avatar.running = not self.avatar.running

    def set_speed_mode(self, run: bool) -> None:
        self.avatar.running = run

    # -- aiming and committing ----------------------------------------------------

    def aim_arc(self) -> AimPreview | None:
        """Preview the arc landing along the current view direction."""
        if not self.aiming:
            self._reject("arc preview requires the trigger held")
        samples, hit = self.world.parabolic_arc(self.rig.eye.position,
                                                self.rig.eye.forward(),
                                                v0=self.config.v0,
                                                g=self.config.gravity)
        self.last_arc = samples
        if hit is None:
            self.preview = None
            return None
        self.preview = AimPreview(hit=hit, valid=hit.on_terrain and hit.navigable)
        return self.preview

    def commit_teleport(self) -> Vec3:
        """Relocate avatar and rig to the previewed landing, same tick."""
        if self.preview is None or not self.preview.valid:
            self._reject("no valid teleport preview")
        landing = self.preview.hit.point
        distance = self.avatar.position.distance_to(landing)
        self.avatar.teleport_to(landing)
        self.rig = self._head_rig(yaw=self.rig.eye.yaw, pitch=self.rig.eye.pitch)
        self._log(KIND_AIM, distance=distance)
        self._log(KIND_RELOCATION, distance=distance)
        return landing

    def tick(self, dt: float, tick_index: int) -> None:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        self._tick = tick_index
        if self.aiming:
            self.aim_arc()
        self.rig = self._head_rig(yaw=self.rig.eye.yaw, pitch=self.rig.eye.pitch)

    def occluded(self) -> bool:
        return False
