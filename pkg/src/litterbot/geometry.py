"""Camera model, pixel centering errors and ground-plane ranging.

Conventions used throughout the package:

* angles are radians here; degrees only appear in config files and on the wire
* pixel ``x`` grows rightward, pixel ``y`` grows with the ray's angle from
  vertical, so the row ``y = image_height`` images the far edge of the view
  (the ray at ``tilt + half_view``)
* ground coordinates relative to the camera are ``forward`` (along the
  heading) and ``lateral`` (positive to the right), in cm
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class GeometryError(ValueError):
    """Invalid camera or box parameters."""


class RayMissesGround(GeometryError):
    """The viewing ray is at or above the horizon."""


@dataclass(frozen=True)
class CameraModel:
    half_view_angle: float  # rad, half of the vertical view angle
    tilt_angle: float  # rad, optical axis from vertical
    mount_height: float  # cm
    image_width: int
    image_height: int
    arm_base_offset: float = 0.0  # cm, arm base ahead of the camera

    def __post_init__(self):
        if not 0.0 < self.half_view_angle < math.pi / 2:
            raise GeometryError("half_view_angle must be in (0, pi/2)")
        if not 0.0 <= self.tilt_angle < math.pi / 2:
            raise GeometryError("tilt_angle must be in [0, pi/2)")
        if self.half_view_angle + self.tilt_angle >= math.pi / 2:
            raise GeometryError("half_view_angle + tilt_angle must be below pi/2")
        if self.mount_height <= 0:
            raise GeometryError("mount_height must be positive")
        if self.image_width <= 0 or self.image_height <= 0:
            raise GeometryError("image dimensions must be positive")

    @property
    def focal_length(self) -> float:
        """Focal length in pixels (square pixels)."""
        return (self.image_height / 2) / math.tan(self.half_view_angle)

    @classmethod
    def from_degrees(cls, half_view_deg, tilt_deg, mount_height, image_width,
                     image_height, arm_base_offset=0.0):
        return cls(math.radians(half_view_deg), math.radians(tilt_deg),
                   mount_height, image_width, image_height, arm_base_offset)


@dataclass(frozen=True)
class PixelPoint:
    x: float
    y: float


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise GeometryError(f"degenerate bounding box {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    @property
    def bottom_center(self) -> PixelPoint:
        return PixelPoint((self.x_min + self.x_max) / 2, self.y_max)

    def iou(self, other: BoundingBox) -> float:
        ix = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        iy = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        if ix <= 0 or iy <= 0:
            return 0.0
        inter = ix * iy
        return inter / (self.area + other.area - inter)


@dataclass(frozen=True)
class AlignmentError:
    dx: float
    dy: float

    @property
    def is_zero(self) -> bool:
        return self.dx == 0 and self.dy == 0


def frame_center(camera: CameraModel) -> PixelPoint:
    return PixelPoint(camera.image_width / 2, camera.image_height / 2)


def bbox_center(b: BoundingBox) -> PixelPoint:
    if not (b.x_min < b.x_max and b.y_min < b.y_max):
        raise GeometryError(f"degenerate bounding box {b.as_tuple()}")
    return PixelPoint((b.x_min + b.x_max) / 2, (b.y_min + b.y_max) / 2)


def alignment_error(frame_c: PixelPoint, obj_c: PixelPoint) -> AlignmentError:
    """Pixel offset of the object centre from the frame centre."""
    return AlignmentError(obj_c.x - frame_c.x, obj_c.y - frame_c.y)


def ground_distance_edge(camera: CameraModel) -> float:
    """Ground distance ``h * tan(half_view + tilt)`` of the edge-of-view ray."""
    angle = camera.half_view_angle + camera.tilt_angle
    if angle >= math.pi / 2:
        raise RayMissesGround(f"ray angle {angle:.6f} rad from vertical")
    return camera.mount_height * math.tan(angle)


def ray_angle(camera: CameraModel, p: PixelPoint) -> float:
    """Angle from vertical of the ray through pixel row ``p.y``."""
    f = camera.focal_length
    return camera.tilt_angle + math.atan((p.y - camera.image_height / 2) / f)


def ground_distance_ray(camera: CameraModel, p: PixelPoint) -> float:
    """Forward ground distance (cm) of the point imaged at pixel ``p``.

    Exact for any column: the forward coordinate of a pinhole ray's
    ground intersection depends only on the row.
    """
    angle = ray_angle(camera, p)
    if angle >= math.pi / 2:
        raise RayMissesGround(f"pixel row {p.y} looks at or above the horizon")
    return camera.mount_height * math.tan(angle)


def ground_point(camera: CameraModel, p: PixelPoint) -> tuple[float, float]:
    """``(forward, lateral)`` cm of the ground point imaged at ``p``."""
    f = camera.focal_length
    du = p.x - camera.image_width / 2
    dv = p.y - camera.image_height / 2
    s, c = math.sin(camera.tilt_angle), math.cos(camera.tilt_angle)
    # downward component of the ray (f*axis + du*right + dv*row direction)
    down = f * c - dv * s
    if down <= 0:
        raise RayMissesGround(f"pixel row {p.y} looks at or above the horizon")
    forward = ground_distance_ray(camera, p)
    lateral = camera.mount_height * du / down
    return forward, lateral


def project_ground_point(camera: CameraModel, forward: float,
                         lateral: float) -> tuple[PixelPoint, float] | None:
    """Pinhole projection of a ground point; inverse of :func:`ground_point`.

    Returns the pixel and the depth along the optical axis, or ``None`` if
    the point is behind the image plane.
    """
    s, c = math.sin(camera.tilt_angle), math.cos(camera.tilt_angle)
    h = camera.mount_height
    depth = forward * s + h * c
    if depth <= 0:
        return None
    f = camera.focal_length
    u = camera.image_width / 2 + f * lateral / depth
    v = camera.image_height / 2 + f * (forward * c - h * s) / depth
    return PixelPoint(u, v), depth


def camera_to_arm_frame(d: float, lateral: float,
                        camera: CameraModel) -> tuple[float, float]:
    """Camera ground coordinates to arm-base ``(x, y)``: x lateral, y forward."""
    return lateral, d - camera.arm_base_offset
