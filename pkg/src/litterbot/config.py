"""Scenario files (YAML) and detection logs (JSON lines).

Every key has a default, listed in ``DEFAULTS`` and in the committed
``formats/default_scenario.yaml``. A scenario file overrides any subset;
unknown keys are rejected so typos do not silently fall back to defaults.
Angles are degrees in files and radians in memory.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import yaml

from . import controller as ctl
from . import geometry as geo
from . import kinematics as kin
from . import mission as msn
from . import sim


class ConfigError(ValueError):
    """A scenario or log problem; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


DEFAULTS = {
    "time_budget": 120.0,
    "robot": {"x": 0.0, "y": 0.0, "heading_deg": 0.0},
    "camera": {
        "half_view_angle_deg": 24.4,
        "tilt_angle_deg": 47.0,
        "mount_height": 30.0,
        "image_width": 640,
        "image_height": 480,
        "arm_base_offset": 5.0,
    },
    "arm": {
        "geometry": {"shoulder_height": 9.0, "upper_len": 20.0,
                     "fore_len": 19.0, "wrist_offset": 8.0},
        "calibration": {"yaw_zero": 90.0, "yaw_sign": 1.0,
                        "shoulder_zero": 90.0, "shoulder_sign": 1.0,
                        "elbow_zero": 90.0, "elbow_sign": 1.0},
        "servos": {
            "base_yaw": {"model": "mg955", "voltage": 4.8},
            "shoulder": {"model": "mg955", "voltage": 4.8},
            "elbow": {"model": "mg955", "voltage": 4.8},
            "wrist_roll": {"model": "sg90", "voltage": 4.8},
            "gripper": {"model": "sg90", "voltage": 4.8},
        },
        "resolution_deg": 1.0,
        "preferred_range_deg": [40.0, 140.0],
        "link_masses": {"upper": 60.0, "fore": 60.0, "effector": 40.0},
        "safety_factor": 1.0,
        "gripper": {"screw_pitch": 0.8, "max_aperture": 60.0},
        "home": {"base_yaw": 90.0, "shoulder": 170.0, "elbow": 90.0,
                 "wrist_roll": 90.0, "gripper": 180.0},
    },
    "controller": {"kp": 0.004, "ki": 0.0, "kd": 0.001,
                   "integral_limit": 500.0, "deadband": 5.0},
    "mission": {
        "confidence_threshold": 0.90,
        "target_classes": ["bottle"],
        "detection_period": 1 / 3.5,
        "control_period": 0.05,
        "scan_speed": 0.3,
        "lost_limit": 3,
        "lock_iou": 0.3,
        "lock_gate": 150.0,
        "pick_height": 6.0,
        "bin_pose": [-20.0, 15.0, 20.0],
        "approach_goal": 25.0,
        "approach_gain": 0.05,
        "max_retries": 2,
        "pick_count": 1,
        "ack_timeout": 2.0,
    },
    "actuator": {"base_speed": 20.0, "yaw_rate": 1.0, "servo_slew": 180.0,
                 "latency": 0.01, "wheel_radius": 3.0, "motor_rpm": 300.0},
    "detector": {"pixel_sigma": 2.0, "miss_prob": 0.05,
                 "confidence_mean": 0.93, "confidence_sigma": 0.04},
    "link": {"max_chunk": 7, "corrupt_prob": 0.0},
    "objects": [
        {"class": "bottle", "x": 60.0, "y": 20.0, "diameter_mm": 30.0, "mass_g": 150.0},
    ],
}

OBJECT_KEYS = {"class", "x", "y", "diameter_mm", "mass_g"}


def _merge(base, over, path: str):
    if isinstance(base, dict):
        if not isinstance(over, dict):
            raise ConfigError(path or "<root>", "expected a mapping")
        out = copy.deepcopy(base)
        for k, v in over.items():
            sub = f"{path}.{k}" if path else str(k)
            if k not in base:
                raise ConfigError(sub, "unknown key")
            out[k] = _merge(base[k], v, sub)
        return out
    if path == "objects":
        if not isinstance(over, list):
            raise ConfigError(path, "expected a list of objects")
        for i, o in enumerate(over):
            if not isinstance(o, dict):
                raise ConfigError(f"objects[{i}]", "expected a mapping")
            extra = set(o) - OBJECT_KEYS
            if extra:
                raise ConfigError(f"objects[{i}].{sorted(extra)[0]}", "unknown key")
            if not {"class", "x", "y"} <= set(o):
                raise ConfigError(f"objects[{i}]", "needs class, x and y")
        return copy.deepcopy(over)
    return copy.deepcopy(over)


def _num(d: dict, key: str, path: str) -> float:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}.{key}", f"expected a finite number, got {v!r}")
    return float(v)


def _int(d: dict, key: str, path: str) -> int:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {v!r}")
    return v


def _nums(d: dict, path: str, skip=()) -> dict:
    return {k: _num(d, k, path) for k in d if k not in skip}


def _build(section: str, factory, *args, **kw):
    try:
        return factory(*args, **kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(section, str(exc)) from None


@dataclass(frozen=True)
class ScenarioConfig:
    camera: geo.CameraModel
    arm: sim.ArmSetup
    mission: msn.MissionConfig
    actuator: sim.ActuatorModel
    detector: sim.DetectorOracle
    link: sim.LinkConfig
    start: sim.Pose
    objects: tuple
    time_budget: float
    raw: dict

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def from_dict(data: dict | None) -> ScenarioConfig:
    raw = _merge(DEFAULTS, data or {}, "")

    tb = _num(raw, "time_budget", "<root>")
    if tb <= 0:
        raise ConfigError("time_budget", "must be positive")

    r = raw["robot"]
    start = sim.Pose(_num(r, "x", "robot"), _num(r, "y", "robot"),
                     math.radians(_num(r, "heading_deg", "robot")))

    c = raw["camera"]
    camera = _build("camera", geo.CameraModel.from_degrees,
                    _num(c, "half_view_angle_deg", "camera"),
                    _num(c, "tilt_angle_deg", "camera"),
                    _num(c, "mount_height", "camera"),
                    _int(c, "image_width", "camera"),
                    _int(c, "image_height", "camera"),
                    _num(c, "arm_base_offset", "camera"))

    a = raw["arm"]
    geometry = _build("arm.geometry", kin.ArmGeometry, **_nums(a["geometry"], "arm.geometry"))
    calibration = _build("arm.calibration", kin.Calibration,
                         **_nums(a["calibration"], "arm.calibration"))
    pr = a["preferred_range_deg"]
    if not (isinstance(pr, list) and len(pr) == 2):
        raise ConfigError("arm.preferred_range_deg", "expected [low, high]")
    preferred = (_num({"0": pr[0]}, "0", "arm.preferred_range_deg"),
                 _num({"1": pr[1]}, "1", "arm.preferred_range_deg"))
    resolution = _num(a, "resolution_deg", "arm")
    servos = {}
    for joint, spec in a["servos"].items():
        path = f"arm.servos.{joint}"
        if not isinstance(spec, dict) or set(spec) - {"model", "voltage"}:
            raise ConfigError(path, "expected {model, voltage}")
        spec = {**DEFAULTS["arm"]["servos"][joint], **spec}
        servos[joint] = _build(path, kin.servo_spec, str(spec["model"]),
                               _num(spec, "voltage", path),
                               preferred_range=preferred, resolution=resolution)
    masses = _build("arm.link_masses", kin.LinkMasses, **_nums(a["link_masses"], "arm.link_masses"))
    gripper = _build("arm.gripper", kin.GripperModel, **_nums(a["gripper"], "arm.gripper"))
    home = _build("arm.home", kin.JointAngles, **_nums(a["home"], "arm.home"))
    safety = _num(a, "safety_factor", "arm")
    if safety <= 0:
        raise ConfigError("arm.safety_factor", "must be positive")
    arm = sim.ArmSetup(geometry, calibration, servos, masses, safety, gripper, home)

    k = raw["controller"]
    gains = _build("controller", ctl.PidGains, _num(k, "kp", "controller"),
                   _num(k, "ki", "controller"), _num(k, "kd", "controller"),
                   _num(k, "integral_limit", "controller"))

    m = raw["mission"]
    classes = m["target_classes"]
    if not isinstance(classes, list) or not all(isinstance(s, str) for s in classes):
        raise ConfigError("mission.target_classes", "expected a list of strings")
    bin_pose = m["bin_pose"]
    if not isinstance(bin_pose, list) or len(bin_pose) != 3:
        raise ConfigError("mission.bin_pose", "expected [x, y, z] in cm")
    bin_pose = tuple(_num({"v": v}, "v", "mission.bin_pose") for v in bin_pose)
    mission = _build("mission", msn.MissionConfig,
                     confidence_threshold=_num(m, "confidence_threshold", "mission"),
                     target_classes=frozenset(classes),
                     deadband=_num(k, "deadband", "controller"),
                     detection_period=_num(m, "detection_period", "mission"),
                     control_period=_num(m, "control_period", "mission"),
                     gains=gains,
                     scan_speed=_num(m, "scan_speed", "mission"),
                     lost_limit=_int(m, "lost_limit", "mission"),
                     lock_iou=_num(m, "lock_iou", "mission"),
                     lock_gate=_num(m, "lock_gate", "mission"),
                     pick_height=_num(m, "pick_height", "mission"),
                     bin_pose=bin_pose,
                     approach_goal=_num(m, "approach_goal", "mission"),
                     approach_gain=_num(m, "approach_gain", "mission"),
                     max_retries=_int(m, "max_retries", "mission"),
                     pick_count=_int(m, "pick_count", "mission"),
                     ack_timeout=_num(m, "ack_timeout", "mission"))
    try:
        kin.inverse_kinematics(geometry, bin_pose, calibration)
    except kin.KinematicsError as exc:
        raise ConfigError("mission.bin_pose", f"arm cannot reach the bin: {exc}") from None

    actuator = _build("actuator", sim.ActuatorModel, **_nums(raw["actuator"], "actuator"))
    if actuator.latency >= mission.control_period:
        raise ConfigError("actuator.latency", "must be shorter than mission.control_period")
    detector = _build("detector", sim.DetectorOracle, **_nums(raw["detector"], "detector"))
    ln = raw["link"]
    link = sim.LinkConfig(_int(ln, "max_chunk", "link"), _num(ln, "corrupt_prob", "link"))
    if link.max_chunk < 0 or not 0 <= link.corrupt_prob <= 1:
        raise ConfigError("link", "max_chunk must be >= 0 and corrupt_prob in [0, 1]")

    objects = []
    for i, o in enumerate(raw["objects"]):
        path = f"objects[{i}]"
        o = {"diameter_mm": 30.0, "mass_g": 150.0, **o}
        if not isinstance(o["class"], str):
            raise ConfigError(f"{path}.class", "expected a string")
        d, mass = _num(o, "diameter_mm", path), _num(o, "mass_g", path)
        if d <= 0 or mass < 0:
            raise ConfigError(path, "diameter must be positive and mass non-negative")
        objects.append(sim.SimObject(o["class"], _num(o, "x", path), _num(o, "y", path), d, mass))

    return ScenarioConfig(camera, arm, mission, actuator, detector, link, start,
                          tuple(objects), tb, raw)


def load(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read scenario: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"invalid YAML: {exc}") from None
    return from_dict(data)


def default() -> ScenarioConfig:
    return from_dict({})


def dump_defaults() -> str:
    return yaml.safe_dump(DEFAULTS, sort_keys=False)


def parse_detection_record(line: str, lineno: int):
    """One JSON-lines record -> ``(t, [Detection])``."""
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {lineno}", f"invalid JSON: {exc.msg}") from None
    if not isinstance(rec, dict):
        raise ConfigError(f"line {lineno}", "record must be an object")
    for key in ("t", "detections"):
        if key not in rec:
            raise ConfigError(f"line {lineno}", f"missing {key!r}")
    t = rec["t"]
    if isinstance(t, bool) or not isinstance(t, (int, float)):
        raise ConfigError(f"line {lineno}", "'t' must be a number")
    if not isinstance(rec["detections"], list):
        raise ConfigError(f"line {lineno}", "'detections' must be a list")
    dets = []
    for j, d in enumerate(rec["detections"]):
        where = f"line {lineno}"
        if not isinstance(d, dict):
            raise ConfigError(where, f"detection {j} must be an object")
        for key in ("class", "confidence", "bbox"):
            if key not in d:
                raise ConfigError(where, f"detection {j} missing {key!r}")
        bbox = d["bbox"]
        if not (isinstance(bbox, list) and len(bbox) == 4
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)):
            raise ConfigError(where, f"detection {j} bbox must be [x0, y0, x1, y1]")
        try:
            dets.append(msn.Detection(str(d["class"]), float(d["confidence"]),
                                      geo.BoundingBox(*map(float, bbox))))
        except (ValueError, TypeError) as exc:
            raise ConfigError(where, f"detection {j}: {exc}") from None
    return float(t), dets


def load_detection_log(path) -> list:
    frames = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read log: {exc.strerror}") from None
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        t, dets = parse_detection_record(line, n)
        if frames and t < frames[-1][0]:
            raise ConfigError(f"line {n}", "timestamps must be non-decreasing")
        frames.append((t, dets))
    return frames


def write_detection_log(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
