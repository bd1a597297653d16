from __future__ import annotations

import numpy as np

from dodgesim import textures, world as wd
from dodgesim.events import CameraIntrinsics
from dodgesim.sensor import generate_events


def make_world(texture=None, depth=4.0, imos=(), camera=None, intr=None):
    intr = intr or CameraIntrinsics.default()
    camera = camera or wd.CameraRig(intr)
    texture = texture or textures.texture_by_name("checker_coarse")
    return wd.WorldState(
        planes=[wd.PlaneModel.frontal(texture, depth)],
        imos=list(imos),
        camera=camera,
    )


def translating_world(texture=None, image_speed_px_s=300.0, depth=4.0, intr=None):
    """Camera panning so the plane texture moves at the given image speed."""
    intr = intr or CameraIntrinsics.default()
    cam_speed = image_speed_px_s * depth / intr.fx
    cam = wd.CameraRig(intr, position_fn=lambda t: np.array([0.0, cam_speed * t, 0.0]))
    return make_world(texture=texture, depth=depth, camera=cam, intr=intr)


def moving_edge_events(image_speed_px_s=300.0, duration=0.03, seed=0, sim_rate=2000.0,
                       texture=None, noise_rate_hz=0.0, threshold_jitter=0.1):
    world = translating_world(texture or textures.StepEdge(), image_speed_px_s)
    events = generate_events(
        world, 0.0, duration, sim_rate=sim_rate, threshold_jitter=threshold_jitter,
        noise_rate_hz=noise_rate_hz, rng=np.random.default_rng(seed),
    )
    return world, events
