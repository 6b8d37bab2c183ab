import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from litterbot import geometry as geo

from oracles import ray_plane_ground_point


def cam(half=0.4, tilt=0.6, h=30.0, w=640, hgt=480, offset=5.0):
    return geo.CameraModel(half, tilt, h, w, hgt, offset)


def random_cameras(rng, n):
    out = []
    while len(out) < n:
        half = rng.uniform(0.05, 1.2)
        tilt = rng.uniform(0.0, 1.4)
        if half + tilt >= math.pi / 2 - 1e-3:
            continue
        out.append(geo.CameraModel(half, tilt, rng.uniform(5, 200),
                                   int(rng.integers(1, 4000)), int(rng.integers(1, 4000))))
    return out


@pytest.mark.parametrize("w,h,expected", [(640, 480, (320, 240)), (1, 1, (0.5, 0.5)),
                                          (1280, 720, (640, 360))])
def test_frame_center(w, h, expected):
    c = geo.frame_center(geo.CameraModel(0.4, 0.5, 30, w, h))
    assert (c.x, c.y) == expected


def test_bbox_center_examples():
    assert geo.bbox_center(geo.BoundingBox(100, 100, 200, 300)) == geo.PixelPoint(150, 200)
    assert geo.bbox_center(geo.BoundingBox(0, 0, 2, 2)) == geo.PixelPoint(1, 1)


def test_bbox_center_random_midpoints():
    rng = np.random.default_rng(3)
    for _ in range(100):
        x, y = rng.uniform(-1000, 1000, 2)
        w, h = rng.uniform(0.5, 500, 2)
        c = geo.bbox_center(geo.BoundingBox(x, y, x + w, y + h))
        assert c.x == pytest.approx(x + w / 2, rel=1e-12, abs=1e-9)
        assert c.y == pytest.approx(y + h / 2, rel=1e-12, abs=1e-9)


@pytest.mark.parametrize("box", [(10, 0, 10, 5), (0, 5, 4, 5), (3, 0, 1, 2)])
def test_degenerate_box_rejected(box):
    with pytest.raises(geo.GeometryError):
        geo.BoundingBox(*box)


def test_alignment_error_examples():
    f = geo.PixelPoint(320, 240)
    assert geo.alignment_error(f, geo.PixelPoint(320, 240)).is_zero
    e = geo.alignment_error(f, geo.PixelPoint(420, 200))
    assert (e.dx, e.dy) == (100, -40)


coord = st.floats(-1e4, 1e4, allow_nan=False)


@given(coord, coord, coord, coord)
def test_alignment_error_antisymmetric(ax, ay, bx, by):
    a, b = geo.PixelPoint(ax, ay), geo.PixelPoint(bx, by)
    e1, e2 = geo.alignment_error(a, b), geo.alignment_error(b, a)
    assert (e1.dx, e1.dy) == (-e2.dx, -e2.dy)
    assert e1.is_zero == (a == b)


def test_edge_distance_trivial():
    c = geo.CameraModel(1e-9, 0.0, 30.0, 640, 480)
    assert geo.ground_distance_edge(c) == pytest.approx(0.0, abs=1e-6)
    c = geo.CameraModel(math.pi / 8, math.pi / 8, 30.0, 640, 480)
    assert geo.ground_distance_edge(c) == pytest.approx(30.0, rel=1e-12)


def test_edge_distance_against_plane_intersection():
    c = geo.CameraModel(0.3, 0.4, 25.0, 640, 480)
    fwd, right = ray_plane_ground_point(0.3, 0.4, 25.0, 640, 480, 320, 480)
    assert geo.ground_distance_edge(c) == pytest.approx(fwd, rel=1e-12)
    assert geo.ground_distance_edge(c) == pytest.approx(25 * math.tan(0.7), rel=1e-12)
    assert right == pytest.approx(0.0, abs=1e-9)


def test_camera_rejects_ray_above_horizon():
    with pytest.raises(geo.GeometryError):
        geo.CameraModel(0.8, 0.8, 30, 640, 480)


def test_ray_distance_examples():
    c = cam()
    assert geo.ground_distance_ray(c, geo.frame_center(c)) == pytest.approx(30 * math.tan(0.6), rel=1e-12)
    bottom = geo.PixelPoint(320, 480)
    assert geo.ground_distance_ray(c, bottom) == pytest.approx(30 * math.tan(1.0), rel=1e-12)


def test_ray_above_horizon_raises():
    c = cam(half=0.5, tilt=1.0)  # rays past the frame edge reach the horizon
    with pytest.raises(geo.RayMissesGround):
        geo.ground_distance_ray(c, geo.PixelPoint(320, 5000))
    with pytest.raises(geo.RayMissesGround):
        geo.ground_point(c, geo.PixelPoint(320, 5000))


def test_ray_matches_plane_oracle_random_pixels():
    rng = np.random.default_rng(11)
    c = cam()
    for _ in range(100):
        u, v = rng.uniform(0, 640), rng.uniform(0, 480)
        fwd, right = ray_plane_ground_point(c.half_view_angle, c.tilt_angle, c.mount_height,
                                            640, 480, u, v)
        p = geo.PixelPoint(u, v)
        assert geo.ground_distance_ray(c, p) == pytest.approx(fwd, rel=1e-9)
        got_fwd, got_right = geo.ground_point(c, p)
        assert got_fwd == pytest.approx(fwd, rel=1e-9)
        assert got_right == pytest.approx(right, rel=1e-9, abs=1e-9)


def test_bottom_edge_ray_equals_closed_form_random_cameras():
    for c in random_cameras(np.random.default_rng(5), 100):
        edge = geo.PixelPoint(c.image_width / 2, c.image_height)
        assert geo.ground_distance_ray(c, edge) == pytest.approx(geo.ground_distance_edge(c), rel=1e-12)


angle = st.floats(0.01, 0.7)


@given(angle, angle, st.floats(1, 100), st.floats(1e-3, 0.05))
def test_edge_distance_increasing(half, tilt, h, bump):
    base = geo.ground_distance_edge(geo.CameraModel(half, tilt, h, 640, 480))
    assert geo.ground_distance_edge(geo.CameraModel(half, tilt, h + bump, 640, 480)) > base
    assert geo.ground_distance_edge(geo.CameraModel(half + bump, tilt, h, 640, 480)) > base
    assert geo.ground_distance_edge(geo.CameraModel(half, tilt + bump, h, 640, 480)) > base


def test_projection_inverts_ray():
    rng = np.random.default_rng(2)
    c = cam()
    n = 0
    while n < 200:
        fwd, right = rng.uniform(0, 120), rng.uniform(-60, 60)
        pix, depth = geo.project_ground_point(c, fwd, right)
        if not (0 <= pix.x <= 640 and 0 <= pix.y <= 480):
            continue
        n += 1
        back = geo.ground_point(c, pix)
        assert back[0] == pytest.approx(fwd, abs=1e-9)
        assert back[1] == pytest.approx(right, abs=1e-9)


def test_projection_behind_camera_is_none():
    c = cam(tilt=0.0)
    assert geo.project_ground_point(c, 0.0, 0.0)[0] == geo.frame_center(c)
    c = cam(half=0.3, tilt=0.2)
    # the image plane's depth is zero beyond this point behind the camera
    assert geo.project_ground_point(c, -c.mount_height / math.tan(0.2) - 1, 0.0) is None


def test_camera_to_arm_frame():
    c = cam(offset=10.0)
    assert geo.camera_to_arm_frame(50, 0, c) == (0, 40)
    assert geo.camera_to_arm_frame(10, 0, c) == (0, 0)
    rng = np.random.default_rng(8)
    for d, lat in rng.uniform(-100, 100, (50, 2)):
        x, y = geo.camera_to_arm_frame(d, lat, c)
        assert (y + c.arm_base_offset, x) == pytest.approx((d, lat), abs=1e-12)


def test_bbox_iou():
    a = geo.BoundingBox(0, 0, 10, 10)
    assert a.iou(a) == 1.0
    assert a.iou(geo.BoundingBox(20, 20, 30, 30)) == 0.0
    assert a.iou(geo.BoundingBox(5, 0, 15, 10)) == pytest.approx(50 / 150)
