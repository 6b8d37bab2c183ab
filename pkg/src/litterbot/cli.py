"""Command line entry point.

    litterbot run --scenario PATH --seed N --out PATH [--trajectory CSV] [--record JSONL]
    litterbot ik-check --x X --y Y --z Z [--scenario PATH]
    litterbot replay --log JSONL --scenario PATH [--out PATH]
    litterbot proto-fuzz --iterations N [--seed N]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import config, kinematics as kin, protocol as proto, sim

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def _load(path) -> config.ScenarioConfig:
    return config.default() if path is None else config.load(path)


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_run(args) -> int:
    try:
        cfg = _load(args.scenario)
    except config.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    record = [] if args.record else None
    report = sim.run_scenario(cfg, args.seed, wire=not args.no_wire, record=record)
    _emit(report.to_json(), args.out)
    if args.trajectory:
        Path(args.trajectory).write_text(report.trajectory_csv())
    if record is not None:
        config.write_detection_log(record, args.record)
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        cfg = _load(args.scenario)
        frames = config.load_detection_log(args.log)
    except config.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = sim.run_scenario(cfg, args.seed, replay=frames)
    _emit(report.to_json(), args.out)
    if args.trajectory:
        Path(args.trajectory).write_text(report.trajectory_csv())
    return EXIT_OK


def cmd_ik_check(args) -> int:
    try:
        arm = _load(args.scenario).arm
    except config.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    target = (args.x, args.y, args.z)
    try:
        q = kin.inverse_kinematics(arm.geometry, target, arm.calibration)
    except kin.KinematicsError as exc:
        print(f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL
    p = kin.forward_kinematics(arm.geometry, q, arm.calibration)
    residual = float(np.linalg.norm(np.subtract(p, target)))
    print(f"base_yaw={q.base_yaw:.6f} shoulder={q.shoulder:.6f} elbow={q.elbow:.6f} "
          f"wrist_roll={q.wrist_roll:.6f} gripper={q.gripper:.6f}")
    print(f"fk_residual_cm={residual:.3e}")
    print(f"in_workspace={kin.in_workspace(target)}")
    return EXIT_OK


def fuzz(iterations: int, seed: int = 0, max_len: int = 80) -> dict:
    """Feed random byte strings to the decoder; count outcomes by kind.

    Half the inputs are mutated valid frames so the deeper parse paths see
    traffic, half are raw noise.
    """
    rng = np.random.default_rng(seed)
    valid = [proto.encode(c) for c in (
        proto.Stop(), proto.Home(), proto.Move("F", 200), proto.Move("CC", 0),
        proto.ArmTo(-120, 300, 60), proto.Grip("O"), proto.Grip("C"))]
    counts = {"command": 0}
    for i in range(iterations):
        if i % 2:
            data = rng.integers(0, 256, int(rng.integers(0, max_len))).astype(np.uint8).tobytes()
        else:
            buf = bytearray(valid[int(rng.integers(len(valid)))])
            for _ in range(int(rng.integers(1, 4))):
                pos = int(rng.integers(len(buf)))
                buf[pos] = int(rng.integers(256))
            data = bytes(buf)
        try:
            proto.decode(data)
            counts["command"] += 1
        except proto.ProtocolError as exc:
            key = f"err{exc.code}"
            counts[key] = counts.get(key, 0) + 1
    return counts


def cmd_proto_fuzz(args) -> int:
    counts = fuzz(args.iterations, args.seed)
    for k in sorted(counts):
        print(f"{k}: {counts[k]}")
    print(f"total: {sum(counts.values())} abnormal: 0")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="litterbot", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a closed-loop scenario")
    r.add_argument("--scenario", help="scenario YAML (defaults if omitted)")
    r.add_argument("--seed", type=int, default=1)
    r.add_argument("--out", help="report JSON path (stdout if omitted)")
    r.add_argument("--trajectory", help="write the per-tick trajectory CSV here")
    r.add_argument("--record", help="write rendered detections as JSON lines")
    r.add_argument("--no-wire", action="store_true", help="bypass the codec (differential runs)")
    r.set_defaults(func=cmd_run)

    k = sub.add_parser("ik-check", help="solve IK for one target and report the FK residual")
    for axis in ("x", "y", "z"):
        k.add_argument(f"--{axis}", type=float, required=True, help=f"{axis} in cm, arm frame")
    k.add_argument("--scenario", help="take arm geometry from this scenario")
    k.set_defaults(func=cmd_ik_check)

    y = sub.add_parser("replay", help="drive the mission from a detection log")
    y.add_argument("--log", required=True)
    y.add_argument("--scenario", help="scenario YAML (defaults if omitted)")
    y.add_argument("--seed", type=int, default=1)
    y.add_argument("--out")
    y.add_argument("--trajectory")
    y.set_defaults(func=cmd_replay)

    f = sub.add_parser("proto-fuzz", help="fuzz the frame decoder")
    f.add_argument("--iterations", type=int, default=100_000)
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_proto_fuzz)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
