"""Sense-plan-act mission executive.

``step`` is a pure function called once per control tick. ``dets`` is the
detector output when a new frame arrived on this tick and ``None``
otherwise; ``acks`` are the actuator replies received since the last tick,
in the order the commands were sent.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from . import controller as ctl
from . import geometry as geo
from . import kinematics as kin
from . import protocol as proto


@dataclass(frozen=True)
class Detection:
    class_label: str
    confidence: float
    bbox: geo.BoundingBox

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class MissionConfig:
    confidence_threshold: float = 0.90
    target_classes: frozenset = frozenset({"bottle"})
    deadband: float = 5.0  # px
    detection_period: float = 1 / 3.5  # s
    control_period: float = 0.05  # s
    gains: ctl.PidGains = field(default_factory=ctl.PidGains)
    scan_speed: float = 0.3  # command magnitude while searching
    lost_limit: int = 3  # detection ticks without the target before giving up
    lock_iou: float = 0.3
    lock_gate: float = 150.0  # px, centre-distance fallback when boxes stop overlapping
    pick_height: float = 6.0  # cm, arm-frame z of the grasp
    bin_pose: tuple[float, float, float] = (-20.0, 15.0, 20.0)
    approach_goal: float = 25.0  # cm, arm-frame y to drive toward
    approach_gain: float = 0.05  # magnitude per cm of remaining distance
    max_retries: int = 2
    pick_count: int = 1
    ack_timeout: float = 2.0  # s without the awaited ack before resending
    workspace: kin.WorkspaceBounds = kin.WORKSPACE

    def __post_init__(self):
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold must be in [0, 1]")
        if self.detection_period <= 0 or self.control_period <= 0:
            raise ValueError("periods must be positive")
        if self.deadband < 0:
            raise ValueError("deadband must be non-negative")
        if not 0 < self.scan_speed <= 1:
            raise ValueError("scan_speed must be in (0, 1]")
        if self.lost_limit < 0 or self.max_retries < 0 or self.pick_count < 1:
            raise ValueError("lost_limit/max_retries must be >= 0, pick_count >= 1")
        if self.ack_timeout <= 0:
            raise ValueError("ack_timeout must be positive")


class Phase(enum.Enum):
    SEARCH = "Search"
    ALIGN = "Align"
    RANGE = "Range"
    APPROACH = "Approach"
    PICK = "Pick"
    DEPOSIT = "Deposit"
    DONE = "Done"


@dataclass(frozen=True)
class MissionState:
    phase: Phase = Phase.SEARCH
    lock: Detection | None = None
    lost: int = 0
    pid_x: ctl.PidState = ctl.PidState()
    pid_y: ctl.PidState = ctl.PidState()
    last_frame: float | None = None
    held: tuple = ()  # motion commands repeated between frames
    target: tuple[float, float, float] | None = None  # arm frame, cm
    plan: tuple = ()  # stop-and-wait command sequence
    seq: int = 0
    awaiting: bool = False
    carrying: bool = False
    outstanding: int = 0  # commands sent and not yet acked
    wait_since: float | None = None  # when the plan started waiting on the link
    picks: int = 0
    retries: int = 0
    clock: float = float("-inf")


def filter_detections(dets, cfg: MissionConfig) -> list[Detection]:
    kept = [d for d in dets if d.class_label in cfg.target_classes
            and d.confidence >= cfg.confidence_threshold]
    return sorted(kept, key=lambda d: (-d.confidence, -d.bbox.area, d.bbox.x_min))


def range_target(det: Detection, camera: geo.CameraModel,
                 cfg: MissionConfig) -> tuple[float, float, float]:
    """Arm-frame grasp point for a detection, ranged from its bottom edge."""
    d, lateral = geo.ground_point(camera, det.bbox.bottom_center)
    x, y = geo.camera_to_arm_frame(d, lateral, camera)
    return x, y, cfg.pick_height


def _to_wire(mc: ctl.MotionCommand) -> proto.Command:
    if mc.motion is ctl.Motion.STOP:
        return proto.Stop()
    return proto.Move(mc.motion.value, ctl.speed_byte(mc.magnitude))


def _axis_commands(motions: list[ctl.MotionCommand]) -> tuple:
    """Wire commands setting both base axes; an axis left out gets speed 0."""
    out = [_to_wire(m) for m in motions]
    dirs = {c.direction for c in out}
    if not dirs & {"CW", "CC"}:
        out.insert(0, proto.Move("CW", 0))
    if not dirs & {"F", "B"}:
        out.append(proto.Move("F", 0))
    return tuple(out)


def _match(lock: Detection, accepted: list[Detection],
           cfg: MissionConfig) -> Detection | None:
    """Re-find the locked target: best IoU, else nearest centre within the gate.

    The gate covers frames where the base turned far enough that the old and
    new boxes no longer overlap.
    """
    best, best_iou = None, cfg.lock_iou
    for d in accepted:
        iou = lock.bbox.iou(d.bbox)
        if iou >= best_iou:
            best, best_iou = d, iou
    if best is not None:
        return best
    c = geo.bbox_center(lock.bbox)
    best_dist = cfg.lock_gate
    for d in accepted:
        dc = geo.bbox_center(d.bbox)
        dist = math.hypot(dc.x - c.x, dc.y - c.y)
        if dist <= best_dist:
            best, best_dist = d, dist
    return best


def _search(state: MissionState) -> MissionState:
    return replace(state, phase=Phase.SEARCH, lock=None, lost=0,
                   pid_x=ctl.PidState(), pid_y=ctl.PidState(),
                   last_frame=None, held=(), target=None)


def _lose(state: MissionState, cfg: MissionConfig):
    """One detection tick without the locked target."""
    lost = state.lost + 1
    if lost > cfg.lost_limit:
        return _search(state), [proto.Stop()]
    return replace(state, lost=lost, held=(proto.Stop(),)), [proto.Stop()]


def _scan(cfg: MissionConfig) -> proto.Command:
    return proto.Move("CW", ctl.speed_byte(cfg.scan_speed))


def _begin_plan(state: MissionState, phase: Phase, plan: tuple,
                carrying: bool = False) -> MissionState:
    return replace(state, phase=phase, plan=plan, seq=0, awaiting=False,
                   carrying=carrying, held=(), wait_since=None)


def _pick_plan(target) -> tuple:
    return (proto.ArmTo.from_cm(*target), proto.Grip("C"))


def _deposit_plan(cfg: MissionConfig) -> tuple:
    return (proto.ArmTo.from_cm(*cfg.bin_pose), proto.Grip("O"), proto.Home())


_RECOVER_PLAN = (proto.Grip("O"), proto.Home())


def _run_plan(state: MissionState, result, cfg: MissionConfig):
    """Advance a stop-and-wait sequence given the ack of its last command.

    A corrupted newline can swallow a command or its ack, so waiting longer
    than ``ack_timeout`` forgets the outstanding count and resends.
    """
    if state.awaiting or (state.outstanding and result is None):
        if state.wait_since is None:
            return replace(state, wait_since=state.clock), []
        if state.clock - state.wait_since <= cfg.ack_timeout:
            return state, []
        state = replace(state, outstanding=0, awaiting=False)
        return replace(state, awaiting=True, wait_since=state.clock), [state.plan[state.seq]]
    if result is not None:
        sent = state.plan[state.seq]
        if isinstance(result, proto.Err):
            if result.code == proto.UNREACHABLE and state.phase is Phase.PICK:
                retries = state.retries + 1
                if retries > cfg.max_retries:
                    return replace(_search(state), retries=0, plan=()), [proto.Home()]
                st = replace(state, phase=Phase.APPROACH, retries=retries,
                             plan=(), last_frame=None, held=(proto.Stop(),))
                return st, [proto.Stop()]
            if result.code == proto.GRIP_EMPTY:
                return _run_plan(_begin_plan(state, Phase.DEPOSIT, _RECOVER_PLAN), None, cfg)
            # transport or parse failure: send the same line again
            return replace(state, awaiting=True, wait_since=state.clock), [sent]
        state = replace(state, seq=state.seq + 1)
        if state.seq == len(state.plan):
            return _finish_plan(state, cfg)
    if state.outstanding:
        return replace(state, wait_since=state.clock), []
    return replace(state, awaiting=True, wait_since=state.clock), [state.plan[state.seq]]


def _finish_plan(state: MissionState, cfg: MissionConfig):
    if state.phase is Phase.PICK:
        st = _begin_plan(state, Phase.DEPOSIT, _deposit_plan(cfg), carrying=True)
        return _run_plan(st, None, cfg)
    if state.carrying:
        picks = state.picks + 1
        st = replace(_search(state), picks=picks, retries=0, plan=(),
                     carrying=False)
        if picks >= cfg.pick_count:
            st = replace(st, phase=Phase.DONE)
        return st, []
    retries = state.retries + 1
    if retries > cfg.max_retries:
        retries = 0  # abandon this target
    return replace(_search(state), retries=retries, plan=()), []


def step(state: MissionState, dets, clock: float, cfg: MissionConfig,
         camera: geo.CameraModel, acks=()) -> tuple[MissionState, list]:
    if clock < state.clock:
        raise ValueError(f"clock went backwards: {clock} < {state.clock}")
    state = replace(state, clock=clock)

    result = None
    outstanding = state.outstanding
    for ack in acks:
        outstanding = max(0, outstanding - 1)
        if state.awaiting and outstanding == 0:
            result = ack
    awaiting = state.awaiting and result is None
    state = replace(state, outstanding=outstanding, awaiting=awaiting)

    state, cmds = _dispatch(state, dets, result, clock, cfg, camera)
    return replace(state, outstanding=state.outstanding + len(cmds)), list(cmds)


def _dispatch(state, dets, result, clock, cfg, camera):
    phase = state.phase
    if phase is Phase.DONE:
        return state, []
    if phase in (Phase.PICK, Phase.DEPOSIT):
        return _run_plan(state, result, cfg)

    accepted = filter_detections(dets, cfg) if dets is not None else None

    if phase is Phase.SEARCH:
        if accepted:
            st = replace(_search(state), phase=Phase.ALIGN, lock=accepted[0])
            return st, [proto.Stop()]
        return state, [_scan(cfg)]

    if accepted is None:
        return state, list(state.held)
    match = _match(state.lock, accepted, cfg)
    if match is None:
        return _lose(state, cfg)
    state = replace(state, lock=match, lost=0)

    if phase is Phase.ALIGN:
        err = geo.alignment_error(geo.frame_center(camera), geo.bbox_center(match.bbox))
        dt = clock - state.last_frame if state.last_frame is not None else cfg.detection_period
        ux, pid_x = ctl.pid_step(cfg.gains, state.pid_x, err.dx, dt)
        uy, pid_y = ctl.pid_step(cfg.gains, state.pid_y, err.dy, dt)
        state = replace(state, pid_x=pid_x, pid_y=pid_y, last_frame=clock)
        motions = ctl.align_command(ux, uy, cfg.deadband, err.dx, err.dy)
        if motions == [ctl.STOP]:
            return replace(state, phase=Phase.RANGE, held=()), [proto.Stop()]
        cmds = _axis_commands(motions)
        return replace(state, held=cmds), list(cmds)

    try:
        target = range_target(match, camera, cfg)
    except geo.RayMissesGround:
        return _search(state), [proto.Stop()]
    inside = kin.in_workspace(target, cfg.workspace)

    if phase is Phase.RANGE:
        state = replace(state, target=target)
        if inside:
            return _run_plan(_begin_plan(state, Phase.PICK, _pick_plan(target)), None, cfg)
        return replace(state, phase=Phase.APPROACH, last_frame=None), []

    # Approach: close the forward gap while keeping the target centred
    if inside:
        return replace(state, phase=Phase.RANGE, target=target, held=()), [proto.Stop()]
    remaining = target[1] - cfg.approach_goal
    motions = []
    if remaining:
        m = min(1.0, cfg.approach_gain * abs(remaining))
        motions.append(ctl.MotionCommand(
            ctl.Motion.FORWARD if remaining > 0 else ctl.Motion.BACKWARD, m))
    err = geo.alignment_error(geo.frame_center(camera), geo.bbox_center(match.bbox))
    if err.dx:
        m = min(1.0, cfg.gains.kp * abs(err.dx))
        motions.append(ctl.MotionCommand(
            ctl.Motion.ROTATE_CW if err.dx > 0 else ctl.Motion.ROTATE_CCW, m))
    cmds = _axis_commands(motions)
    return replace(state, target=target, held=cmds), list(cmds)
