"""Procedural plane textures with a seen / held-out split.

Textures map in-plane metric coordinates (u, v) to intensities in
[0.15, 1.0]. Smooth ones are rasterized once and sampled bilinearly with
wraparound; hard-edged ones are analytic. The held-out set is only ever used
for *_o evaluation splits, never for tuning.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

INTENSITY_LO = 0.15
INTENSITY_HI = 1.0


class Texture:
    name: str = "texture"

    def sample(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _to_range(values: np.ndarray) -> np.ndarray:
    return INTENSITY_LO + (INTENSITY_HI - INTENSITY_LO) * np.clip(values, 0.0, 1.0)


class Checkerboard(Texture):
    def __init__(self, period_m: float = 0.25, name: str = "checker"):
        self.period = period_m
        self.name = name

    def sample(self, u, v):
        parity = (np.floor(u / self.period) + np.floor(v / self.period)) % 2
        return _to_range(parity)


class Stripes(Texture):
    def __init__(self, period_m: float = 0.18, angle_deg: float = 0.0, name: str = "stripes"):
        self.period = period_m
        self.angle = np.deg2rad(angle_deg)
        self.name = name

    def sample(self, u, v):
        s = u * np.cos(self.angle) + v * np.sin(self.angle)
        return _to_range(np.floor(s / self.period) % 2)


class Rings(Texture):
    def __init__(self, period_m: float = 0.2, name: str = "rings"):
        self.period = period_m
        self.name = name

    def sample(self, u, v):
        r = np.hypot(u, v)
        return _to_range(np.floor(r / self.period) % 2)


class StepEdge(Texture):
    """Single vertical step at u = 0; dark left, bright right."""

    def __init__(self, name: str = "step_edge"):
        self.name = name

    def sample(self, u, v):
        return _to_range((u >= 0.0).astype(float))


class Uniform(Texture):
    def __init__(self, intensity: float = 0.5, name: str = "uniform"):
        self.intensity = intensity
        self.name = name

    def sample(self, u, v):
        return np.full(np.broadcast(u, v).shape, self.intensity)


class _RasterTexture(Texture):
    """Bilinear wraparound sampling of a tiled raster covering extent_m."""

    def __init__(self, raster: np.ndarray, extent_m: float, name: str):
        self.raster = raster
        self.extent = extent_m
        self.name = name

    def sample(self, u, v):
        n_rows, n_cols = self.raster.shape
        uu = np.asarray(u) / self.extent * n_cols
        vv = np.asarray(v) / self.extent * n_rows
        j0 = np.floor(uu).astype(np.int64)
        i0 = np.floor(vv).astype(np.int64)
        fj = uu - j0
        fi = vv - i0
        i0 %= n_rows
        j0 %= n_cols
        i1 = (i0 + 1) % n_rows
        j1 = (j0 + 1) % n_cols
        r = self.raster
        return (
            r[i0, j0] * (1 - fi) * (1 - fj)
            + r[i1, j0] * fi * (1 - fj)
            + r[i0, j1] * (1 - fi) * fj
            + r[i1, j1] * fi * fj
        )


def value_noise(seed: int, cell_m: float = 0.2, extent_m: float = 2.0,
                resolution: int = 256, name: str | None = None) -> Texture:
    """Smooth random texture: coarse random grid upsampled with a spline."""
    rng = np.random.default_rng(seed)
    cells = max(4, int(round(extent_m / cell_m)))
    coarse = rng.uniform(0.0, 1.0, size=(cells, cells))
    raster = ndimage.zoom(coarse, resolution / cells, order=3, mode="grid-wrap")
    raster = (raster - raster.min()) / max(np.ptp(raster), 1e-9)
    return _RasterTexture(_to_range(raster), extent_m, name or f"noise_{seed}")


def blob_field(seed: int, n_blobs: int = 40, extent_m: float = 2.0,
               resolution: int = 256, name: str | None = None) -> Texture:
    """Random bright blobs on a dark ground, rasterized once."""
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:resolution, 0:resolution] / resolution * extent_m
    raster = np.zeros((resolution, resolution))
    centers = rng.uniform(0, extent_m, size=(n_blobs, 2))
    sigmas = rng.uniform(0.02, 0.08, size=n_blobs)
    for (cu, cv), s in zip(centers, sigmas):
        # wrapped distance so the tile is seamless
        du = np.minimum(np.abs(xs - cu), extent_m - np.abs(xs - cu))
        dv = np.minimum(np.abs(ys - cv), extent_m - np.abs(ys - cv))
        raster += np.exp(-(du**2 + dv**2) / (2 * s * s))
    raster = raster / max(raster.max(), 1e-9)
    return _RasterTexture(_to_range(raster), extent_m, name or f"blobs_{seed}")


def seen_textures() -> list[Texture]:
    return [
        Checkerboard(0.25, name="checker_coarse"),
        Checkerboard(0.12, name="checker_fine"),
        Stripes(0.18, 0.0, name="stripes_v"),
        Stripes(0.15, 45.0, name="stripes_diag"),
        blob_field(11, name="blobs_a"),
        value_noise(7, cell_m=0.2, name="noise_a"),
    ]


def held_out_textures() -> list[Texture]:
    return [
        value_noise(101, cell_m=0.15, name="noise_b"),
        blob_field(202, n_blobs=55, name="blobs_b"),
        Rings(0.2, name="rings"),
        Stripes(0.1, 100.0, name="stripes_o"),
    ]


def texture_by_name(name: str) -> Texture:
    for tex in seen_textures() + held_out_textures() + [StepEdge(), Uniform()]:
        if tex.name == name:
            return tex
    raise KeyError(f"unknown texture {name!r}")
