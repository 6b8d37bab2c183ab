"""Deterministic kinematic world simulator.

The world is 2-D ground truth (cm, heading in rad, counter-clockwise from
+x) plus the actuator board's internal state: latched base velocities, the
arm's servo angles and the gripper. A virtual pinhole camera at the robot's
reference point renders detections; commands reach the board through the
protocol codec and a loopback pipe on every tick.
"""

from __future__ import annotations

import csv
import io
import json
import math
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from . import kinematics as kin
from . import mission as msn
from . import protocol as proto

PICK_TOLERANCE = 2.0  # cm, horizontal tip-to-object distance


def rng_for(seed: int, label: str) -> np.random.Generator:
    """Independent stream for one subsystem; labels never share draws."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(label.encode())]))


@dataclass(frozen=True)
class SimObject:
    class_label: str
    x: float
    y: float
    diameter_mm: float = 30.0
    mass_g: float = 150.0
    picked: bool = False


@dataclass(frozen=True)
class Pose:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0

    def forward(self) -> tuple[float, float]:
        return math.cos(self.heading), math.sin(self.heading)

    def right(self) -> tuple[float, float]:
        return math.sin(self.heading), -math.cos(self.heading)

    def to_body(self, x: float, y: float) -> tuple[float, float]:
        """World point to ``(forward, right)`` relative to this pose."""
        dx, dy = x - self.x, y - self.y
        fx, fy = self.forward()
        rx, ry = self.right()
        return dx * fx + dy * fy, dx * rx + dy * ry


@dataclass(frozen=True)
class ActuatorModel:
    base_speed: float = 20.0  # cm/s at full command
    yaw_rate: float = 1.0  # rad/s at full command
    servo_slew: float = 180.0  # deg/s
    latency: float = 0.01  # s from send to effect
    wheel_radius: float = 3.0  # cm
    motor_rpm: float = 300.0

    def __post_init__(self):
        if min(self.base_speed, self.yaw_rate, self.servo_slew, self.latency,
               self.wheel_radius, self.motor_rpm) <= 0:
            raise ValueError("actuator parameters must be positive")
        if self.base_speed > self.no_load_speed:
            raise ValueError("base_speed exceeds the wheels' no-load speed")

    @property
    def no_load_speed(self) -> float:
        """cm/s at motor rpm with no load."""
        return 2 * math.pi * self.wheel_radius * self.motor_rpm / 60


@dataclass(frozen=True)
class DetectorOracle:
    pixel_sigma: float = 2.0
    miss_prob: float = 0.05
    confidence_mean: float = 0.93
    confidence_sigma: float = 0.04

    def __post_init__(self):
        if self.pixel_sigma < 0 or self.confidence_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")
        if not 0 <= self.miss_prob < 1:
            raise ValueError("miss_prob must be in [0, 1)")


@dataclass(frozen=True)
class ArmSetup:
    geometry: kin.ArmGeometry = kin.ArmGeometry()
    calibration: kin.Calibration = kin.DEFAULT_CALIBRATION
    servos: dict = field(default_factory=lambda: {
        "base_yaw": kin.MG955_4V8, "shoulder": kin.MG955_4V8,
        "elbow": kin.MG955_4V8, "wrist_roll": kin.SG90_4V8,
        "gripper": kin.SG90_4V8})
    masses: kin.LinkMasses = kin.LinkMasses()
    safety_factor: float = 1.0
    gripper: kin.GripperModel = kin.GripperModel()
    home: kin.JointAngles = kin.JointAngles(90.0, 170.0, 90.0, 90.0, 180.0)

    @property
    def quantizer(self) -> kin.ServoSpec:
        return self.servos["shoulder"]


@dataclass(frozen=True)
class ArmState:
    q: kin.JointAngles
    goal: kin.JointAngles | None = None
    aperture: float = 60.0  # mm
    holding: int | None = None  # index of the object in the gripper
    ack_on_arrival: bool = False


@dataclass(frozen=True)
class WorldState:
    pose: Pose
    objects: tuple[SimObject, ...]
    arm: ArmState
    bin_fill: int = 0
    time: float = 0.0
    v_forward: float = 0.0  # cm/s, body frame
    v_right: float = 0.0
    omega: float = 0.0  # rad/s, counter-clockwise positive
    ready_acks: tuple = ()  # deferred acks produced while advancing

    def visible_count(self) -> int:
        return sum(1 for o in self.objects if not o.picked)


def initial_world(pose: Pose, objects, arm: ArmSetup) -> WorldState:
    return WorldState(pose, tuple(objects),
                      ArmState(arm.home, aperture=kin.gripper_aperture(arm.home.gripper, arm.gripper)))


# -- perception -----------------------------------------------------------

def render_detections(w: WorldState, cam: geo.CameraModel,
                      oracle: DetectorOracle, rng: np.random.Generator) -> list[msn.Detection]:
    """Synthetic detector: pinhole projection plus noise, misses and confidences.

    The bottom-centre of a noiseless box is the projection of the object's
    ground position. Random draws are taken for every in-view object in a
    fixed order, so the stream position never depends on the outcome.
    """
    out = []
    f = cam.focal_length
    for obj in w.objects:
        if obj.picked:
            continue
        forward, right = w.pose.to_body(obj.x, obj.y)
        proj = geo.project_ground_point(cam, forward, right)
        if proj is None:
            continue
        pix, depth = proj
        if not (0 <= pix.x <= cam.image_width and 0 <= pix.y <= cam.image_height):
            continue
        missed = rng.random() < oracle.miss_prob
        noise = rng.normal(0.0, 1.0, 4) * oracle.pixel_sigma
        conf = float(np.clip(rng.normal(oracle.confidence_mean, oracle.confidence_sigma), 0, 1))
        if missed:
            continue
        size = f * (obj.diameter_mm / 10) / depth
        box = (pix.x - size / 2 + noise[0], pix.y - size + noise[1],
               pix.x + size / 2 + noise[2], pix.y + noise[3])
        if not (box[0] < box[2] and box[1] < box[3]):
            continue
        out.append(msn.Detection(obj.class_label, conf, geo.BoundingBox(*map(float, box))))
    return out


# -- actuation ------------------------------------------------------------

def arm_base_position(w: WorldState, cam: geo.CameraModel) -> tuple[float, float]:
    fx, fy = w.pose.forward()
    return w.pose.x + cam.arm_base_offset * fx, w.pose.y + cam.arm_base_offset * fy


def tip_world(w: WorldState, q: kin.JointAngles, arm: ArmSetup,
              cam: geo.CameraModel) -> tuple[float, float]:
    x, y, _ = kin.forward_kinematics(arm.geometry, q, arm.calibration)
    bx, by = arm_base_position(w, cam)
    fx, fy = w.pose.forward()
    rx, ry = w.pose.right()
    return bx + y * fx + x * rx, by + y * fy + x * ry


@dataclass(frozen=True)
class PickResult:
    success: bool
    reason: str | None = None  # too_far | aperture | torque | nothing
    index: int | None = None


def resolve_pick(w: WorldState, arm: ArmSetup, q: kin.JointAngles,
                 aperture: float, cam: geo.CameraModel) -> PickResult:
    """Outcome of closing the gripper at pose ``q`` with jaws open ``aperture`` mm."""
    tx, ty = tip_world(w, q, arm, cam)
    best, best_d = None, math.inf
    for i, obj in enumerate(w.objects):
        if obj.picked:
            continue
        d = math.hypot(obj.x - tx, obj.y - ty)
        if d < best_d:
            best, best_d = i, d
    if best is None:
        return PickResult(False, "nothing")
    obj = w.objects[best]
    if best_d > PICK_TOLERANCE:
        return PickResult(False, "too_far", best)
    if aperture < obj.diameter_mm:
        return PickResult(False, "aperture", best)
    torque = kin.static_torque_check(arm.geometry, q, obj.mass_g, arm.servos,
                                     arm.masses, arm.safety_factor, arm.calibration)
    if not torque.ok:
        return PickResult(False, "torque", best)
    return PickResult(True, None, best)


def accept_command(w: WorldState, c: proto.Command, model: ActuatorModel,
                   arm: ArmSetup, cam: geo.CameraModel):
    """Apply a command to the board state at the current instant.

    Returns ``(world, ack, pick)``; ``ack`` is ``None`` when the reply is
    deferred until the arm arrives, ``pick`` is the :class:`PickResult` of a
    close-gripper command.
    """
    if isinstance(c, proto.Move):
        s = c.speed / proto.SPEED_MAX
        if c.direction in ("F", "B"):
            w = replace(w, v_forward=(s if c.direction == "F" else -s) * model.base_speed)
        elif c.direction in ("L", "R"):
            w = replace(w, v_right=(s if c.direction == "R" else -s) * model.base_speed)
        else:
            w = replace(w, omega=(-s if c.direction == "CW" else s) * model.yaw_rate)
        return w, proto.Ok(), None
    if isinstance(c, proto.Stop):
        return replace(w, v_forward=0.0, v_right=0.0, omega=0.0), proto.Ok(), None
    if isinstance(c, proto.ArmTo):
        try:
            q = kin.inverse_kinematics(arm.geometry, c.to_cm(), arm.calibration,
                                       gripper=w.arm.q.gripper)
        except kin.KinematicsError:
            return w, proto.Err(proto.UNREACHABLE), None
        q, _ = kin.quantize(q, arm.quantizer)
        return replace(w, arm=replace(w.arm, goal=q, ack_on_arrival=True)), None, None
    if isinstance(c, proto.Home):
        return replace(w, arm=replace(w.arm, goal=arm.home, ack_on_arrival=True)), None, None
    if isinstance(c, proto.Grip):
        if c.action == "O":
            fill = w.bin_fill + (w.arm.holding is not None)
            q = replace(w.arm.q, gripper=kin.SERVO_MAX)
            a = kin.gripper_aperture(kin.SERVO_MAX, arm.gripper)
            return replace(w, bin_fill=fill, arm=replace(w.arm, q=q, aperture=a, holding=None)), proto.Ok(), None
        if w.arm.holding is not None:
            return w, proto.Ok(), None  # already closed on an object
        pick = resolve_pick(w, arm, w.arm.q, w.arm.aperture, cam)
        objects = w.objects
        holding = None
        if pick.success:
            objects = tuple(replace(o, picked=True) if i == pick.index else o
                            for i, o in enumerate(objects))
            holding = pick.index
            aperture = objects[pick.index].diameter_mm
        else:
            aperture = 0.0
        q = replace(w.arm.q, gripper=kin.SERVO_MIN)
        w = replace(w, objects=objects, arm=replace(w.arm, q=q, aperture=aperture, holding=holding))
        return w, (proto.Ok() if pick.success else proto.Err(proto.GRIP_EMPTY)), pick
    raise TypeError(f"not a command: {c!r}")


def _slew(cur: float, goal: float, max_step: float) -> float:
    if abs(goal - cur) <= max_step:
        return goal
    return cur + math.copysign(max_step, goal - cur)


def advance(w: WorldState, model: ActuatorModel, dt: float) -> WorldState:
    """Integrate base motion and servo slew over ``dt`` seconds."""
    if dt <= 0:
        return w
    p = w.pose
    h0 = p.heading
    if w.omega == 0.0:
        c, s = math.cos(h0) * dt, math.sin(h0) * dt
        h1 = h0
    else:
        h1 = h0 + w.omega * dt
        c = (math.sin(h1) - math.sin(h0)) / w.omega  # integral of cos(h)
        s = (math.cos(h0) - math.cos(h1)) / w.omega  # integral of sin(h)
    # forward = (cos h, sin h); right = (sin h, -cos h)
    x = p.x + w.v_forward * c + w.v_right * s
    y = p.y + w.v_forward * s - w.v_right * c
    heading = math.remainder(h1, 2 * math.pi)
    w = replace(w, pose=Pose(x, y, heading), time=w.time + dt)

    a = w.arm
    if a.goal is not None:
        step = model.servo_slew * dt
        q = kin.JointAngles(*(_slew(cur, goal, step) for cur, goal in zip(
            (a.q.base_yaw, a.q.shoulder, a.q.elbow, a.q.wrist_roll),
            (a.goal.base_yaw, a.goal.shoulder, a.goal.elbow, a.goal.wrist_roll))),
            gripper=a.q.gripper)
        arrived = q.positioning() == a.goal.positioning()
        acks = w.ready_acks
        if arrived and a.ack_on_arrival:
            acks = acks + (proto.Ok(),)
        a = replace(a, q=q, goal=None if arrived else a.goal,
                    ack_on_arrival=a.ack_on_arrival and not arrived)
        w = replace(w, arm=a, ready_acks=acks)
    return w


def apply_command(w: WorldState, c: proto.Command, model: ActuatorModel, dt: float,
                  arm: ArmSetup = ArmSetup(), cam: geo.CameraModel | None = None):
    """Accept ``c`` and integrate ``dt`` seconds; returns ``(world, acks)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if cam is None:
        cam = geo.CameraModel.from_degrees(24.4, 47.0, 30.0, 640, 480)
    w, ack, _ = accept_command(w, c, model, arm, cam)
    w = advance(w, model, dt)
    acks = ([ack] if ack is not None else []) + list(w.ready_acks)
    return replace(w, ready_acks=()), acks


# -- closed loop ----------------------------------------------------------

@dataclass(frozen=True)
class LinkConfig:
    max_chunk: int = 7  # loopback chunk size bound; 0 delivers whole writes
    corrupt_prob: float = 0.0


class _Link:
    """Planner/board byte link: codec, chunked pipes and splitters both ways."""

    def __init__(self, cfg: LinkConfig, rng: np.random.Generator):
        self.down = proto.LoopbackPipe(rng, cfg.max_chunk, cfg.corrupt_prob)
        self.up = proto.LoopbackPipe(rng, cfg.max_chunk, cfg.corrupt_prob)
        self.board_rx = proto.FrameSplitter()
        self.host_rx = proto.FrameSplitter()

    def send(self, cmds) -> list:
        """Planner side: commands out; board side: parsed commands or parse errors."""
        for c in cmds:
            self.down.write(proto.encode(c))
        out = []
        for chunk in self.down.read():
            for item in self.board_rx.feed(chunk):
                if isinstance(item, proto.Err):
                    out.append(item)
                    continue
                try:
                    out.append(proto.decode(item))
                except proto.ProtocolError as exc:
                    out.append(proto.error_ack(exc))
        return out

    def reply(self, acks) -> list:
        for a in acks:
            self.up.write(proto.encode_ack(a))
        out = []
        for chunk in self.up.read():
            for item in self.host_rx.feed(chunk):
                if isinstance(item, proto.Err):
                    out.append(item)
                    continue
                try:
                    out.append(proto.decode_ack(item))
                except proto.ProtocolError as exc:
                    out.append(proto.error_ack(exc))
        return out


class _Direct:
    """Same interface as :class:`_Link` with no bytes involved."""

    def send(self, cmds):
        return list(cmds)

    def reply(self, acks):
        return list(acks)


def _wire_text(c) -> str:
    return proto.encode(c).split(b"*")[0].decode("ascii")


def _detection_record(t: float, dets) -> dict:
    return {"t": t, "detections": [
        {"class": d.class_label, "confidence": d.confidence,
         "bbox": list(d.bbox.as_tuple())} for d in dets]}


@dataclass
class Report:
    seed: int
    picked: int
    attempts: int
    outcomes: list
    sim_duration: float
    final_state: str
    ticks: int
    bin_fill: int
    config: dict
    trajectory: list = field(default_factory=list, repr=False)
    phases: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "picked": self.picked, "attempts": self.attempts,
                "outcomes": self.outcomes, "sim_duration": self.sim_duration,
                "final_state": self.final_state, "ticks": self.ticks,
                "bin_fill": self.bin_fill, "config": self.config}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        writer.writerows(self.trajectory)
        return buf.getvalue()


TRAJECTORY_COLUMNS = ("tick", "time", "x", "y", "heading", "state", "command", "objects")


def run_scenario(cfg, seed: int, wire: bool = True, replay=None,
                 record: list | None = None) -> Report:
    """Run one closed-loop episode.

    ``cfg`` is a :class:`litterbot.config.ScenarioConfig`. ``replay`` is an
    optional list of ``(t, detections)`` frames used instead of the oracle
    detector; ``record`` receives one JSON-ready record per rendered frame.
    """
    cam, mcfg, arm, model = cfg.camera, cfg.mission, cfg.arm, cfg.actuator
    dt = mcfg.control_period
    if model.latency >= dt:
        raise ValueError("actuator latency must be shorter than the control period")
    det_rng = rng_for(seed, "detector")
    link = _Link(cfg.link, rng_for(seed, "link")) if wire else _Direct()

    world = initial_world(cfg.start, cfg.objects, arm)
    state = msn.MissionState()
    acks_in: list = []
    outcomes = []
    trajectory = []
    phases = []
    next_frame = 0.0
    frames = list(replay) if replay is not None else None
    frame_i = 0
    n_ticks = int(math.floor(cfg.time_budget / dt + 1e-9))
    k = 0
    for k in range(n_ticks + 1):
        t = k * dt
        dets = None
        if frames is not None:
            while frame_i < len(frames) and frames[frame_i][0] <= t + 1e-9:
                dets = frames[frame_i][1]
                frame_i += 1
        elif t + 1e-9 >= next_frame:
            dets = render_detections(world, cam, cfg.detector, det_rng)
            next_frame += mcfg.detection_period
            if record is not None:
                record.append(_detection_record(t, dets))

        state, cmds = msn.step(state, dets, t, mcfg, cam, acks_in)
        phases.append(state.phase.value)

        world = advance(world, model, model.latency)
        acks = []
        for item in link.send(cmds):
            if isinstance(item, proto.Err):
                acks.append(item)
                continue
            world, ack, pick = accept_command(world, item, model, arm, cam)
            if ack is not None:
                acks.append(ack)
            if pick is not None:
                outcomes.append({"time": round(t, 6), "outcome": "success" if pick.success else "miss",
                                 "reason": pick.reason, "object": pick.index})
        world = advance(world, model, dt - model.latency)
        acks.extend(world.ready_acks)
        world = replace(world, ready_acks=())
        acks_in = link.reply(acks)

        trajectory.append((k, repr(t), repr(world.pose.x), repr(world.pose.y),
                           repr(world.pose.heading), state.phase.value,
                           "|".join(_wire_text(c) for c in cmds),
                           ";".join("picked" if o.picked else "free" for o in world.objects)))
        if state.phase is msn.Phase.DONE:
            break

    picked = sum(o.picked for o in world.objects)
    return Report(seed=seed, picked=picked, attempts=len(outcomes), outcomes=outcomes,
                  sim_duration=round(k * dt, 6), final_state=state.phase.value,
                  ticks=k + 1, bin_fill=world.bin_fill, config=cfg.to_dict(),
                  trajectory=trajectory, phases=phases)
