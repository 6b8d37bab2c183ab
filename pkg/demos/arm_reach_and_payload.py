"""
Reach, servo rounding and payload of the parallelogram arm
==========================================================

The parallelogram keeps the gripper level, so the arm is a yaw joint plus a
planar two-link chain with a fixed horizontal wrist offset.
"""

import numpy as np

from litterbot import kinematics as kin

g = kin.ArmGeometry()
print("max horizontal reach (cm):", g.max_reach)

# Solve for a grasp point and check it with forward kinematics.
target = (-6.0, 28.0, 6.0)
q = kin.inverse_kinematics(g, target)
print("servo angles:", q)
print("tip:", np.round(kin.forward_kinematics(g, q), 9))

# Real servos step in whole degrees. Rounding moves the tip by a few mm, and
# more at long reach, where the base yaw lever arm is longest.
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(2000):
    p = (rng.uniform(-40, 40), rng.uniform(9, 46), rng.uniform(5, 32))
    try:
        exact = kin.inverse_kinematics(g, p)
    except kin.KinematicsError:
        continue
    rounded, degraded = kin.quantize(exact, kin.MG955_4V8)
    worst = max(worst, float(np.linalg.norm(np.subtract(kin.forward_kinematics(g, rounded), p))))
print(f"worst 1-degree rounding error over the workspace box: {worst:.3f} cm")

# The workspace box and the true reachable set differ at the corners.
corner = (46.0, 46.0, 32.0)
print("corner in box:", kin.in_workspace(corner))
try:
    kin.inverse_kinematics(g, corner)
except kin.Unreachable as exc:
    print("but IK says:", exc)

# Static holding torque at full extension, the worst case for the shoulder.
specs = {"shoulder": kin.MG955_4V8, "elbow": kin.MG955_4V8}
stretched = kin.JointAngles(90, 90, 90)
for payload in (0, 100, 200, 500, 2500):
    check = kin.static_torque_check(g, stretched, payload, specs)
    m = check.moments
    print(f"{payload:5d} g: shoulder {m['shoulder']:5.2f} kg*cm, elbow {m['elbow']:5.2f} kg*cm,"
          f" {'ok' if check.ok else 'exceeds ' + check.joint}")

# The lead-screw gripper opens linearly with its servo angle.
print("aperture at 45 deg:", kin.gripper_aperture(45, kin.GripperModel()), "mm")
