"""
Ranging an object with one tilted camera
========================================

A camera mounted ``h`` cm above the floor and pitched forward sees the floor
as a perspective plane. Each image row maps to one ray angle, so the row of
a box's bottom edge is enough to say how far away the object stands.
"""

import math

import numpy as np

from litterbot import geometry as geo

# The default rig: 30 cm up, tilted 47 degrees forward, 24.4 degree half view.
cam = geo.CameraModel.from_degrees(24.4, 47.0, 30.0, 640, 480, arm_base_offset=5.0)
print("focal length (px):", round(cam.focal_length, 2))

# The bottom row of the image is the far limit of the view. Its distance has
# a closed form, and the general ray model agrees with it exactly.
edge = geo.PixelPoint(cam.image_width / 2, cam.image_height)
print("edge distance, closed form :", geo.ground_distance_edge(cam))
print("edge distance, ray model   :", geo.ground_distance_ray(cam, edge))

# Sweep rows down the centre column. Distance grows quickly toward the far
# edge, which is why pixel noise hurts far objects most.
for v in np.linspace(0, cam.image_height, 7):
    d = geo.ground_distance_ray(cam, geo.PixelPoint(320, v))
    print(f"row {v:5.0f} -> {d:6.2f} cm")

# Project a known floor point into the image, then recover it.
pix, depth = geo.project_ground_point(cam, 55.0, -12.0)
print("pixel of (55 cm ahead, 12 cm left):", (round(pix.x, 1), round(pix.y, 1)))
forward, lateral = geo.ground_point(cam, pix)
print("recovered:", round(forward, 9), round(lateral, 9))

# The arm sits a few cm ahead of the camera, so the grasp target shifts.
x, y = geo.camera_to_arm_frame(forward, lateral, cam)
print("arm frame target (x right, y forward):", round(x, 3), round(y, 3))

# One pixel of error in the bottom edge, near and far.
for v in (300, 460):
    a = geo.ground_distance_ray(cam, geo.PixelPoint(320, v))
    b = geo.ground_distance_ray(cam, geo.PixelPoint(320, v + 1))
    print(f"row {v}: {b - a:.3f} cm per pixel, ray angle {math.degrees(geo.ray_angle(cam, geo.PixelPoint(320, v))):.1f} deg")
