"""Kinematics of the 4-DOF parallelogram arm.

The parallelogram linkage keeps the gripper level and lets the elbow servo
sit on the base plate, so the elbow servo sets the forearm's angle from
horizontal directly (it is not relative to the upper arm). A pose is thus
three world angles: base yaw, upper-arm elevation and forearm elevation.

Arm frame: origin on the ground below the yaw axis, ``x`` to the right,
``y`` forward, ``z`` up, all in cm. Servo commands are degrees in [0, 180].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

SERVO_MIN = 0.0
SERVO_MAX = 180.0
LEVEL_WRIST = 90.0
_ANGLE_TOL = 1e-9  # deg of slack before a solution counts as off-servo


class KinematicsError(ValueError):
    pass


class Unreachable(KinematicsError):
    """No arm configuration places the tip at the target."""


class ServoLimit(KinematicsError):
    """The elbow-up solution exists but needs a servo outside [0, 180]."""


@dataclass(frozen=True)
class ArmGeometry:
    shoulder_height: float = 9.0
    upper_len: float = 20.0
    fore_len: float = 19.0
    wrist_offset: float = 8.0

    def __post_init__(self):
        if min(self.shoulder_height, self.upper_len, self.fore_len,
               self.wrist_offset) <= 0:
            raise KinematicsError("arm lengths must be positive")

    @property
    def max_reach(self) -> float:
        """Horizontal tip distance at full forward extension."""
        return self.upper_len + self.fore_len + self.wrist_offset


@dataclass(frozen=True)
class Calibration:
    """Affine servo-to-world maps: ``world = sign * (servo - zero)`` in degrees."""

    yaw_zero: float = 90.0
    yaw_sign: float = 1.0
    shoulder_zero: float = 90.0
    shoulder_sign: float = 1.0
    elbow_zero: float = 90.0
    elbow_sign: float = 1.0

    def __post_init__(self):
        for s in (self.yaw_sign, self.shoulder_sign, self.elbow_sign):
            if s not in (1.0, -1.0):
                raise KinematicsError("calibration signs must be +1 or -1")

    def to_world(self, q: JointAngles) -> tuple[float, float, float]:
        """World ``(yaw, shoulder, elbow)`` in degrees."""
        return (self.yaw_sign * (q.base_yaw - self.yaw_zero),
                self.shoulder_sign * (q.shoulder - self.shoulder_zero),
                self.elbow_sign * (q.elbow - self.elbow_zero))

    def to_servo(self, yaw: float, shoulder: float,
                 elbow: float) -> tuple[float, float, float]:
        return (self.yaw_zero + self.yaw_sign * yaw,
                self.shoulder_zero + self.shoulder_sign * shoulder,
                self.elbow_zero + self.elbow_sign * elbow)


DEFAULT_CALIBRATION = Calibration()


@dataclass(frozen=True)
class JointAngles:
    base_yaw: float
    shoulder: float
    elbow: float
    wrist_roll: float = LEVEL_WRIST
    gripper: float = 90.0

    def __post_init__(self):
        for name in ("base_yaw", "shoulder", "elbow", "wrist_roll", "gripper"):
            v = getattr(self, name)
            if not SERVO_MIN <= v <= SERVO_MAX:
                raise KinematicsError(f"{name}={v} outside servo range [0, 180]")

    def positioning(self) -> tuple[float, float, float, float]:
        """The four DOF joints (the gripper is not counted)."""
        return (self.base_yaw, self.shoulder, self.elbow, self.wrist_roll)


DOF = 4


@dataclass(frozen=True)
class WorkspaceBounds:
    x: tuple[float, float] = (-46.0, 46.0)
    y: tuple[float, float] = (9.0, 46.0)
    z: tuple[float, float] = (5.0, 32.0)


WORKSPACE = WorkspaceBounds()


@dataclass(frozen=True)
class ServoSpec:
    stall_torque: float  # kg*cm
    preferred_range: tuple[float, float] = (40.0, 140.0)
    position_offset: float = 0.5  # cm, typical positioning error
    resolution: float = 1.0  # deg

    def __post_init__(self):
        lo, hi = self.preferred_range
        if self.stall_torque <= 0:
            raise KinematicsError("stall_torque must be positive")
        if not SERVO_MIN <= lo <= hi <= SERVO_MAX:
            raise KinematicsError("preferred_range must lie within [0, 180]")
        if self.resolution <= 0:
            raise KinematicsError("resolution must be positive")


MG955_4V8 = ServoSpec(stall_torque=8.5)
MG955_6V = ServoSpec(stall_torque=10.0)
SG90_4V8 = ServoSpec(stall_torque=2.5)

# datasheet stall torque by supply voltage
STALL_TORQUE = {
    "mg955": {4.8: 8.5, 6.0: 10.0},
    "sg90": {4.8: 2.5},
}


def servo_spec(model: str, voltage: float = 4.8, **kw) -> ServoSpec:
    try:
        torque = STALL_TORQUE[model][voltage]
    except KeyError:
        raise KinematicsError(f"no stall torque for {model} at {voltage} V") from None
    return ServoSpec(stall_torque=torque, **kw)


@dataclass(frozen=True)
class LinkMasses:
    """Masses in grams; link CoMs at mid-link, effector mass at the tip."""

    upper: float = 60.0
    fore: float = 60.0
    effector: float = 40.0


@dataclass(frozen=True)
class GripperModel:
    screw_pitch: float = 0.8  # mm of nut travel per screw revolution
    max_aperture: float = 60.0  # mm

    def __post_init__(self):
        if self.screw_pitch <= 0 or self.max_aperture <= 0:
            raise KinematicsError("gripper pitch and aperture must be positive")


def forward_kinematics(g: ArmGeometry, q: JointAngles,
                       cal: Calibration = DEFAULT_CALIBRATION
                       ) -> tuple[float, float, float]:
    yaw, sh, el = (math.radians(a) for a in cal.to_world(q))
    r = g.upper_len * math.cos(sh) + g.fore_len * math.cos(el) + g.wrist_offset
    z = g.shoulder_height + g.upper_len * math.sin(sh) + g.fore_len * math.sin(el)
    return r * math.sin(yaw), r * math.cos(yaw), z


def _servo(v: float, name: str) -> float:
    if v < SERVO_MIN - _ANGLE_TOL or v > SERVO_MAX + _ANGLE_TOL:
        raise ServoLimit(f"{name} servo would need {v:.3f} deg")
    return min(SERVO_MAX, max(SERVO_MIN, v))


def inverse_kinematics(g: ArmGeometry, target: tuple[float, float, float],
                       cal: Calibration = DEFAULT_CALIBRATION,
                       gripper: float = 90.0) -> JointAngles:
    """Closed-form elbow-up solution placing the level gripper tip at ``target``."""
    x, y, z = target
    yaw = math.atan2(x, y)
    r = math.hypot(x, y) - g.wrist_offset
    dz = z - g.shoulder_height
    l1, l2 = g.upper_len, g.fore_len
    if r < 0:
        raise Unreachable(f"target {target} is inside the wrist offset")
    dist = math.hypot(r, dz)
    slack = 1e-9 * (l1 + l2)
    if dist > l1 + l2 + slack:
        raise Unreachable(f"target {target} is {dist - l1 - l2:.3f} cm beyond reach")
    if dist < abs(l1 - l2) - slack:
        raise Unreachable(f"target {target} is inside the inner reach limit")
    cos_bend = (dist * dist - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    cos_bend = min(1.0, max(-1.0, cos_bend))
    # elbow-up: the forearm bends down relative to the upper arm
    bend = -math.acos(cos_bend)
    shoulder = math.atan2(dz, r) + math.atan2(-l2 * math.sin(bend),
                                              l1 + l2 * math.cos(bend))
    elbow = shoulder + bend
    s_yaw, s_sh, s_el = cal.to_servo(math.degrees(yaw), math.degrees(shoulder),
                                     math.degrees(elbow))
    return JointAngles(_servo(s_yaw, "base_yaw"), _servo(s_sh, "shoulder"),
                       _servo(s_el, "elbow"), LEVEL_WRIST, gripper)


def in_workspace(p: tuple[float, float, float],
                 w: WorkspaceBounds = WORKSPACE) -> bool:
    x, y, z = p
    return (w.x[0] <= x <= w.x[1] and w.y[0] <= y <= w.y[1]
            and w.z[0] <= z <= w.z[1])


def _round_angle(v: float, res: float) -> float:
    k = v / res
    lo = math.floor(k)
    frac = k - lo
    if abs(frac - 0.5) < 1e-9:
        # tie: go toward the centre of travel
        cand = (lo * res, (lo + 1) * res)
        out = min(cand, key=lambda a: abs(a - 90.0))
    else:
        out = (lo + 1) * res if frac > 0.5 else lo * res
    return min(SERVO_MAX, max(SERVO_MIN, out))


def quantize(q: JointAngles, s: ServoSpec) -> tuple[JointAngles, bool]:
    """Round every joint to the servo resolution.

    ``degraded`` flags a positioning joint outside the servo's preferred
    band, where its offset grows.
    """
    vals = [_round_angle(v, s.resolution) for v in
            (q.base_yaw, q.shoulder, q.elbow, q.wrist_roll, q.gripper)]
    out = JointAngles(*vals)
    lo, hi = s.preferred_range
    degraded = any(not lo <= v <= hi for v in out.positioning())
    return out, degraded


@dataclass(frozen=True)
class TorqueCheck:
    ok: bool
    joint: str | None  # first joint over its limit
    moments: dict = field(default_factory=dict)  # kg*cm per joint


def gravity_moments(g: ArmGeometry, q: JointAngles, payload_g: float,
                    masses: LinkMasses = LinkMasses(),
                    cal: Calibration = DEFAULT_CALIBRATION) -> dict[str, float]:
    """Static holding moments in kg*cm for the shoulder and elbow servos.

    With the elbow driven through the parallelogram, each servo holds the
    weight hanging past its own link: the shoulder carries the whole
    forearm-side load at the elbow pivot, the elbow servo carries the
    forearm and tip loads. The level-effector couple from the wrist offset
    is reacted by the linkage, not by either servo.
    """
    _, sh, el = (math.radians(a) for a in cal.to_world(q))
    tip = masses.effector + payload_g
    shoulder = g.upper_len * abs(math.cos(sh)) * (masses.upper / 2 + masses.fore + tip)
    elbow = g.fore_len * abs(math.cos(el)) * (masses.fore / 2 + tip)
    return {"shoulder": shoulder / 1000.0, "elbow": elbow / 1000.0}


def static_torque_check(g: ArmGeometry, q: JointAngles, payload_g: float,
                        specs: dict[str, ServoSpec],
                        masses: LinkMasses = LinkMasses(),
                        safety_factor: float = 1.0,
                        cal: Calibration = DEFAULT_CALIBRATION) -> TorqueCheck:
    if payload_g < 0:
        raise KinematicsError("payload must be non-negative")
    moments = gravity_moments(g, q, payload_g, masses, cal)
    for joint in ("shoulder", "elbow"):
        if moments[joint] * safety_factor > specs[joint].stall_torque:
            return TorqueCheck(False, joint, moments)
    return TorqueCheck(True, None, moments)


def gripper_aperture(screw_angle: float, m: GripperModel) -> float:
    """Jaw opening in mm for a gripper servo angle (linear lead-screw map)."""
    if not SERVO_MIN <= screw_angle <= SERVO_MAX:
        raise KinematicsError(f"gripper angle {screw_angle} outside [0, 180]")
    return min(m.max_aperture, max(0.0, m.max_aperture * screw_angle / 180.0))
