"""Reference computations that share no code path with the package.

Each oracle recomputes a quantity a different way: matrix chains instead of
trig sums, plane intersection instead of tangents, finite differences of
potential energy instead of lever arms.
"""

import math
from functools import reduce
from operator import xor

import numpy as np


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def ray_plane_ground_point(half_view, tilt, h, width, height, u, v):
    """Intersect the pixel's viewing ray with the ground (z = 0).

    Coordinates are (forward, right, up). The camera starts looking straight
    down with image rows running forward, then pitches forward by ``tilt``.
    Returns (forward, right), or None if the ray never reaches the ground.
    """
    f = (height / 2) / math.tan(half_view)
    k_inv = np.linalg.inv(np.array([[f, 0, width / 2], [0, f, height / 2], [0, 0, 1.0]]))
    looking_down = np.array([[0, 1, 0], [1, 0, 0], [0, 0, -1.0]])
    r = rot_y(-tilt) @ looking_down
    d = r @ (k_inv @ np.array([u, v, 1.0]))
    if d[2] >= 0:
        return None
    t = h / -d[2]
    p = np.array([0, 0, h]) + t * d
    return p[0], p[1]


def _homog(rot, trans):
    m = np.eye(4)
    m[:3, :3] = rot
    m[:3, 3] = trans
    return m


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def fk_chain(shoulder_height, upper, fore, wrist, yaw_deg, sh_deg, el_deg):
    """Tip position from a 4x4 transform chain.

    Frame convention inside the chain: x forward along the arm's vertical
    plane, z up. The yaw about z is applied so that positive yaw turns the
    arm toward +x of the arm frame (to the right), i.e. the final frame is
    (right, forward, up) = (sin yaw * r, cos yaw * r, z).
    """
    yaw, sh, el = map(math.radians, (yaw_deg, sh_deg, el_deg))
    # pitch about the joint axis: rotate x toward z by angle a
    def pitch(a):
        return rot_y(-a)
    t = _homog(rot_z(-yaw), [0, 0, 0])
    t = t @ _homog(np.eye(3), [0, 0, shoulder_height])
    t = t @ _homog(pitch(sh), [0, 0, 0]) @ _homog(np.eye(3), [upper, 0, 0])
    # forearm angle is absolute (parallelogram): undo the shoulder pitch
    t = t @ _homog(pitch(el - sh), [0, 0, 0]) @ _homog(np.eye(3), [fore, 0, 0])
    # level effector: undo the forearm pitch, then the horizontal wrist offset
    t = t @ _homog(pitch(-el), [0, 0, 0]) @ _homog(np.eye(3), [wrist, 0, 0])
    p = t @ np.array([0, 0, 0, 1.0])
    forward_along, lateral_left = p[0], p[1]
    # chain x is the heading direction; map rotation-about-z output to (right, forward)
    return -lateral_left, forward_along, p[2]


def xor_fold(data: bytes) -> int:
    return reduce(xor, data, 0)


def frame_oracle(payload: str) -> bytes:
    return payload.encode() + b"*" + format(xor_fold(payload.encode()), "02X").encode() + b"\n"


def potential_energy(shoulder_height, upper, fore, m_upper, m_fore, m_tip, sh, el):
    """Gravitational potential (g = 1) of the arm in gram*cm."""
    z_upper = shoulder_height + upper / 2 * math.sin(sh)
    z_fore = shoulder_height + upper * math.sin(sh) + fore / 2 * math.sin(el)
    z_tip = shoulder_height + upper * math.sin(sh) + fore * math.sin(el)
    return m_upper * z_upper + m_fore * z_fore + m_tip * z_tip


def holding_moments(shoulder_height, upper, fore, m_upper, m_fore, m_tip, sh, el, eps=1e-6):
    """Servo holding moments in kg*cm by virtual work: |dV/d(angle)|."""
    def v(a, b):
        return potential_energy(shoulder_height, upper, fore, m_upper, m_fore, m_tip, a, b)
    d_sh = (v(sh + eps, el) - v(sh - eps, el)) / (2 * eps)
    d_el = (v(sh, el + eps) - v(sh, el - eps)) / (2 * eps)
    return abs(d_sh) / 1000, abs(d_el) / 1000


def pid_recurrence(kp, ki, kd, errors, dt, limit=math.inf):
    """Term-by-term scalar PID outputs for an error sequence."""
    out = []
    integral = 0.0
    prev = None
    for e in errors:
        integral += e * dt
        integral = max(-limit, min(limit, integral))
        d = 0.0 if prev is None else (e - prev) / dt
        out.append(kp * e + ki * integral + kd * d)
        prev = e
    return out


def fk_planar_grid(shoulder_height, upper, fore, wrist, yaw_deg, sh_deg, el_deg):
    """Vectorised tip positions (right, forward, up) for arrays of world angles.

    Cross-checked against :func:`fk_chain`; used where the chain is too slow.
    """
    yaw, sh, el = (np.radians(np.asarray(a, dtype=float)) for a in (yaw_deg, sh_deg, el_deg))
    r = upper * np.cos(sh) + fore * np.cos(el) + wrist
    z = shoulder_height + upper * np.sin(sh) + fore * np.sin(el)
    return np.stack(np.broadcast_arrays(r * np.sin(yaw), r * np.cos(yaw), z), axis=-1)


def quantization_error_bound(shoulder_height, upper, fore, wrist, res=1.0, levels=5):
    """Worst tip displacement when every joint is off by up to res/2.

    Exhaustive over the servo grid (every pose a quantizer can output) and a
    ``levels``-per-axis grid of perturbations spanning [-res/2, res/2]. Base
    yaw only rotates the result, so it is fixed at zero and perturbed.
    """
    grid = np.arange(-90.0, 90.0 + 1e-9, res)
    sh, el = np.meshgrid(grid, grid, indexing="ij")
    sh, el = sh.ravel(), el.ravel()
    base = fk_planar_grid(shoulder_height, upper, fore, wrist, 0.0, sh, el)
    steps = np.linspace(-res / 2, res / 2, levels)
    worst = 0.0
    for dy in steps:
        for ds in steps:
            for de in steps:
                p = fk_planar_grid(shoulder_height, upper, fore, wrist, dy, sh + ds, el + de)
                worst = max(worst, float(np.max(np.linalg.norm(p - base, axis=1))))
    return worst
