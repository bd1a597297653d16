from __future__ import annotations

import numpy as np
import pytest

from dodgesim import textures, world as wd
from dodgesim.errors import GeometryError, InfeasibleThrowError
from dodgesim.events import CameraIntrinsics
from dodgesim.homography import apply_homography, h4pt_to_matrix, image_corners
from tests.helpers import make_world


class TestRender:
    def test_uniform_world_has_zero_gradient(self):
        w = make_world(textures.Uniform(0.6))
        img = wd.render_log_intensity(w, 0.0)
        assert np.allclose(img, np.log(0.6), atol=1e-12)
        gy, gx = np.gradient(img)
        assert np.allclose(gx, 0) and np.allclose(gy, 0)

    def test_static_world_is_time_invariant(self):
        w = make_world()
        assert np.array_equal(wd.render_log_intensity(w, 0.0), wd.render_log_intensity(w, 2.5))

    def test_translating_camera_shifts_edge_one_px_per_frame(self):
        intr = CameraIntrinsics.default()
        depth = 2.0
        # 1 px/frame at 100 frames/s: camera speed = depth / fx * 100
        speed = depth / intr.fx * 100.0
        # camera moving along world +Y looks left, so scene content moves right
        cam = wd.CameraRig(intr, position_fn=lambda t: np.array([0.0, speed * t, 0.0]))
        w = make_world(textures.StepEdge(), depth=depth, camera=cam)

        def edge_col(t):
            img = wd.render_log_intensity(w, t)
            row = img[intr.height // 2]
            return int(np.argmax(np.abs(np.diff(row))))

        c0 = edge_col(0.0)
        assert edge_col(0.01) == c0 + 1
        assert edge_col(0.03) == c0 + 3

    def test_camera_behind_plane_rejected(self):
        cam = wd.CameraRig(CameraIntrinsics.default(),
                           position_fn=lambda t: np.array([5.0, 0.0, 0.0]))
        w = make_world(depth=4.0, camera=cam)
        with pytest.raises(GeometryError):
            wd.render_log_intensity(w, 0.0)

    def test_camera_inside_sphere_rejected(self):
        ball = wd.IMOBody(radius=0.5, position=np.array([0.1, 0, 0]), velocity=np.zeros(3))
        w = make_world(imos=[ball])
        with pytest.raises(GeometryError):
            wd.render_log_intensity(w, 0.0)

    def test_sphere_mask_radius_matches_closed_form(self):
        intr = CameraIntrinsics.default()
        r, z = 0.14, 2.0
        ball = wd.IMOBody(radius=r, position=np.array([z, 0, 0]), velocity=np.zeros(3))
        w = make_world(imos=[ball], intr=intr)
        mask = wd.render_ids(w, 0.0) == 1
        measured = np.sqrt(mask.sum() / np.pi)
        expected = intr.fx * r / np.sqrt(z * z - r * r)
        assert measured == pytest.approx(expected, abs=0.5)

    def test_occlusion_sphere_in_front_of_plane(self):
        ball = wd.IMOBody(radius=0.3, position=np.array([2.0, 0, 0]), velocity=np.zeros(3))
        w = make_world(imos=[ball])
        ids = wd.render_ids(w, 0.0)
        assert ids[90, 120] == 1
        assert ids[5, 5] == 0


class TestGroundTruth:
    def test_background_only_matches_analytic_homography(self):
        intr = CameraIntrinsics.default()
        cam = wd.CameraRig(intr, position_fn=lambda t: np.array([0.0, 0.2 * t, 0.1 * t]))
        w = make_world(camera=cam)
        gt = wd.ground_truth(w, 0.0, 0.1)
        assert not gt.mask.any()
        h = wd.analytic_plane_homography(w, 0.0, 0.1)
        corners = image_corners(intr.width, intr.height)
        assert np.allclose(apply_homography(h, corners) - corners, gt.h4pt_bg, atol=1e-9)

    def test_homography_composition(self):
        intr = CameraIntrinsics.default()
        cam = wd.CameraRig(
            intr,
            position_fn=lambda t: np.array([0.05 * t, 0.3 * t, -0.2 * t]),
            rotation_fn=lambda t: wd.rot_y(0.05 * t),
        )
        w = make_world(camera=cam)
        h01 = wd.analytic_plane_homography(w, 0.0, 0.05)
        h12 = wd.analytic_plane_homography(w, 0.05, 0.1)
        h02 = wd.analytic_plane_homography(w, 0.0, 0.1)
        corners = image_corners(intr.width, intr.height)
        composed = apply_homography(h12 @ h01, corners)
        direct = apply_homography(h02, corners)
        assert np.max(np.linalg.norm(composed - direct, axis=1)) < 0.1

    def test_pure_rotation_homography_is_depth_independent(self):
        intr = CameraIntrinsics.default()
        cam = wd.CameraRig(intr, rotation_fn=lambda t: wd.rot_y(0.3 * t))
        near = make_world(camera=cam, depth=2.0)
        far = make_world(camera=cam, depth=8.0)
        h_near = wd.analytic_plane_homography(near, 0.0, 0.1)
        h_far = wd.analytic_plane_homography(far, 0.0, 0.1)
        assert np.allclose(h_near, h_far, atol=1e-10)
        gt = wd.ground_truth(near, 0.0, 0.1)
        # background flow is drawn from the homography; spot-check one pixel
        h = h4pt_to_matrix(gt.h4pt_bg, intr.width, intr.height)
        x = np.array([60.0, 40.0])
        src = apply_homography(np.linalg.inv(h), x)
        assert np.allclose(gt.flow[40, 60], x - src, atol=1e-6)

    def test_rendered_motion_consistent_with_homography(self):
        intr = CameraIntrinsics.default()
        cam = wd.CameraRig(intr, position_fn=lambda t: np.array([0.0, 0.5 * t, 0.0]))
        w = make_world(textures.value_noise(42), camera=cam)
        img0 = wd.render_log_intensity(w, 0.0)
        img1 = wd.render_log_intensity(w, 0.02)
        h = wd.analytic_plane_homography(w, 0.0, 0.02)
        # sample img0 at H^-1(x), compare to img1 on the interior
        from dodgesim.events import EventFrame, warp_frame_matrix
        frame = EventFrame(intr.width, intr.height, 0, 1, img0, img0 * 0, img0 * 0)
        warped = warp_frame_matrix(frame, h).ch_pos
        inner = np.s_[20:-20, 20:-20]
        err = np.abs(warped[inner] - img1[inner])
        assert np.percentile(err, 99) < 0.05
        assert np.median(err) < 0.005

    def test_imo_flow_matches_projection_displacement(self):
        intr = CameraIntrinsics.default()
        ball = wd.IMOBody(radius=0.2, position=np.array([2.5, 0.3, 0.0]),
                          velocity=np.array([0.0, -1.5, 0.5]), ballistic=False)
        w = make_world(imos=[ball])
        gt = wd.ground_truth(w, 0.0, 0.05)
        assert gt.mask.any()
        c0 = wd.project_point(intr, wd.world_to_camera(*w.camera_pose(0.0), ball.position))
        p1 = ball.position_at(0.05, w.gravity)
        c1 = wd.project_point(intr, wd.world_to_camera(*w.camera_pose(0.05), p1))
        pix = np.argwhere(gt.mask == 1)[0]
        assert np.allclose(gt.flow[pix[0], pix[1]], c1 - c0, atol=1e-9)
        assert gt.imo_states[0]["visible"]


class TestThrows:
    def test_zero_gravity_straight_line(self, rng):
        aim = np.array([0.0, 0.0, 1.0])
        body = wd.spawn_throw(rng, aim, spread=0.0, gravity=np.zeros(3))
        d, _ = wd.closest_approach(body.position, body.velocity, np.zeros(3), aim)
        assert d < 1e-9

    def test_default_gravity_hits_center_with_zero_spread(self, rng):
        aim = np.array([0.0, 0.0, 1.2])
        body = wd.spawn_throw(rng, aim, spread=0.0)
        d, t = wd.closest_approach(body.position, body.velocity, wd.GRAVITY, aim)
        assert d < 1e-9
        assert 0.2 < t < 1.5

    def test_hundred_spawns_are_collision_courses(self):
        rng = np.random.default_rng(99)
        aim = np.array([0.0, 0.0, 1.0])
        quad_radius = 0.3
        hits = 0
        for _ in range(100):
            body = wd.spawn_throw(rng, aim, spread=0.25)
            d, _ = wd.closest_approach(body.position, body.velocity, wd.GRAVITY, aim)
            hits += d <= quad_radius
        assert hits == 100

    def test_infeasible_throw_raises(self):
        with pytest.raises(InfeasibleThrowError):
            wd.aim_ballistic(np.zeros(3), np.array([100.0, 0, 0]), 1.0, wd.GRAVITY)

    def test_holds_position_before_launch(self):
        body = wd.IMOBody(radius=0.1, position=np.array([3.0, 0, 0]),
                          velocity=np.array([-5.0, 0, 0]), launch_time=0.5)
        assert np.array_equal(body.position_at(0.2, wd.GRAVITY), body.position)
        after = body.position_at(0.6, wd.GRAVITY)
        assert after[0] < 3.0
