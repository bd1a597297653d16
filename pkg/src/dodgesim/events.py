"""Event records, 3-channel event frames, and frame warping.

An event stream is a numpy structured array with fields ``t`` (microseconds),
``x``, ``y`` (pixel coordinates) and ``p`` (polarity +1/-1), sorted by
timestamp with ties broken by (y, x, p). An event frame integrates a stream
over a window into three per-pixel channels: positive count, negative count,
and mean inter-event time normalized by the window length.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from . import homography
from .errors import EventOrderError, GeometryError

EVENT_DTYPE = np.dtype([("t", "<i8"), ("x", "<i2"), ("y", "<i2"), ("p", "<i1")])

DEFAULT_WIDTH = 240
DEFAULT_HEIGHT = 180


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics; focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise GeometryError("principal point must lie inside the sensor")

    @classmethod
    def default(cls) -> "CameraIntrinsics":
        # DAVIS 240C-like geometry: 240x180, ~70 deg horizontal FOV.
        return cls(fx=200.0, fy=200.0, cx=120.0, cy=90.0)


def make_events(t, x, y, p) -> np.ndarray:
    """Pack parallel columns into an event array (no validation)."""
    ev = np.empty(len(t), dtype=EVENT_DTYPE)
    ev["t"] = t
    ev["x"] = x
    ev["y"] = y
    ev["p"] = p
    return ev


def empty_events() -> np.ndarray:
    return np.empty(0, dtype=EVENT_DTYPE)


def sort_events(events: np.ndarray) -> np.ndarray:
    """Canonical order: t, then y, x, p."""
    order = np.lexsort((events["p"], events["x"], events["y"], events["t"]))
    return events[order]


def validate_events(events: np.ndarray, width: int, height: int) -> None:
    """Check ordering and geometric bounds; raise on violation."""
    if events.size == 0:
        return
    t = events["t"]
    if np.any(t[:-1] > t[1:]):
        raise EventOrderError("event timestamps are not sorted")
    if np.any(t < 0):
        raise EventOrderError("negative event timestamp")
    x, y = events["x"], events["y"]
    if np.any((x < 0) | (x >= width) | (y < 0) | (y >= height)):
        raise GeometryError("event coordinates outside sensor bounds")
    if not np.all(np.abs(events["p"]) == 1):
        raise GeometryError("polarity must be +1 or -1")


@dataclass(frozen=True)
class EventFrame:
    """3-channel event frame over [t_start, t_end) in microseconds.

    Count channels hold raw (possibly fractional, after warping) per-pixel
    event counts; ``ch_time`` is the mean inter-event time at each pixel
    divided by the window length, zero for pixels with fewer than two events.
    """

    width: int
    height: int
    t_start: int
    t_end: int
    ch_pos: np.ndarray
    ch_neg: np.ndarray
    ch_time: np.ndarray

    @property
    def dt(self) -> int:
        return self.t_end - self.t_start

    @property
    def combined(self) -> np.ndarray:
        return self.ch_pos + self.ch_neg

    @property
    def total_count(self) -> float:
        return float(self.ch_pos.sum() + self.ch_neg.sum())

    def channels(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.ch_pos, self.ch_neg, self.ch_time

    def with_channels(self, ch_pos, ch_neg, ch_time) -> "EventFrame":
        return replace(self, ch_pos=ch_pos, ch_neg=ch_neg, ch_time=ch_time)

    def normalized(self, scale: float | None = None) -> "EventFrame":
        """Display form: count channels scaled into [0, 1].

        The default normalizer is the frame's own max per-pixel combined
        count; pass ``scale`` to pin an absolute one.
        """
        if scale is None:
            scale = float(self.combined.max())
        if scale <= 0:
            return self
        return self.with_channels(self.ch_pos / scale, self.ch_neg / scale, self.ch_time)


def zero_frame(width: int, height: int, t_start: int, t_end: int) -> EventFrame:
    shape = (height, width)
    return EventFrame(
        width, height, t_start, t_end,
        np.zeros(shape), np.zeros(shape), np.zeros(shape),
    )


def accumulate_frame(
    events: np.ndarray,
    t_start: int,
    t_end: int,
    geometry: CameraIntrinsics,
) -> EventFrame:
    """Bin events in [t_start, t_end) into a 3-channel frame.

    Mean inter-event time per pixel telescopes to
    (last_t - first_t) / (count - 1), so a single pass with per-pixel
    min/max/count suffices; pixels with fewer than two events get 0.
    """
    if t_end <= t_start:
        raise ValueError("window must be non-empty")
    validate_events(events, geometry.width, geometry.height)
    lo = np.searchsorted(events["t"], t_start, side="left")
    hi = np.searchsorted(events["t"], t_end, side="left")
    ev = events[lo:hi]
    frame = zero_frame(geometry.width, geometry.height, t_start, t_end)
    if ev.size == 0:
        return frame

    shape = (geometry.height, geometry.width)
    flat = ev["y"].astype(np.int64) * geometry.width + ev["x"].astype(np.int64)
    pos = np.bincount(flat[ev["p"] > 0], minlength=shape[0] * shape[1])
    neg = np.bincount(flat[ev["p"] < 0], minlength=shape[0] * shape[1])
    count = pos + neg

    t = ev["t"].astype(np.float64)
    t_min = np.full(shape[0] * shape[1], np.inf)
    t_max = np.full(shape[0] * shape[1], -np.inf)
    np.minimum.at(t_min, flat, t)
    np.maximum.at(t_max, flat, t)
    ch_time = np.zeros(shape[0] * shape[1])
    multi = count >= 2
    ch_time[multi] = (t_max[multi] - t_min[multi]) / (count[multi] - 1) / float(t_end - t_start)

    return frame.with_channels(
        pos.reshape(shape).astype(float),
        neg.reshape(shape).astype(float),
        ch_time.reshape(shape),
    )


def warp_frame(frame: EventFrame, h4pt: np.ndarray) -> EventFrame:
    """Resample every channel under the homography induced by ``h4pt``.

    Inverse mapping with bilinear interpolation; destination pixels that map
    outside the source are zero.
    """
    matrix = homography.h4pt_to_matrix(h4pt, frame.width, frame.height)
    return warp_frame_matrix(frame, matrix)


def warp_frame_matrix(frame: EventFrame, matrix: np.ndarray) -> EventFrame:
    if np.allclose(matrix, np.eye(3), atol=1e-12):
        return frame.with_channels(*(ch.copy() for ch in frame.channels()))
    inv = homography.invert_matrix(matrix)
    xs, ys = np.meshgrid(np.arange(frame.width), np.arange(frame.height))
    pts = np.stack([xs, ys], axis=-1).reshape(-1, 2)
    src = homography.apply_homography(inv, pts)
    coords = np.stack(
        [src[:, 1].reshape(frame.height, frame.width),
         src[:, 0].reshape(frame.height, frame.width)]
    )
    warped = [
        ndimage.map_coordinates(ch, coords, order=1, mode="constant", cval=0.0)
        for ch in frame.channels()
    ]
    return frame.with_channels(*warped)
