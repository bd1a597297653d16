from __future__ import annotations

import numpy as np
import pytest

from dodgesim.events import CameraIntrinsics


@pytest.fixture
def intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics.default()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
