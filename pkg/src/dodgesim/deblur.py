"""Motion compensation of event frames by direct optimization.

Events in a window are translated along a parametric trajectory to the window
midpoint and re-binned; the trajectory parameters maximize frame contrast
while a distance term keeps the result close to the input, i.e. we minimize

    -C(warped) / C(input) + lambda * D(input, warped) / D(input, empty)

with a coarse integer grid search followed by derivative-free simplex
refinement. A side effect mirrors the denoising behaviour of the lossy
reconstruction this replaces: pixels whose warped support stays below a
threshold are zeroed, and the truncated-robust distance ships with a more
aggressive threshold than plain L2 (its cost model caps the penalty for
dropping weak pixels).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import EmptyWindowError, SolverError
from .events import CameraIntrinsics, EventFrame, accumulate_frame
from .homography import h4pt_to_matrix, invert_matrix

WARP_MODELS = ("flow", "flow_rotation", "h4pt_rate")
CONTRAST_FNS = ("variance", "sum_sq")
DISTANCE_FNS = ("l2", "robust")

_SUPPORT_DEFAULTS = {"l2": 0.5, "robust": 1.25}


@dataclass
class DeblurParams:
    warp_model: str = "flow"
    contrast_fn: str = "variance"
    distance_fn: str = "l2"
    lam: float = 0.5
    grid_radius: float = 6.0
    grid_step: float = 2.0
    refine_iters: int = 60
    rotation_candidates: tuple = (-0.12, -0.04, 0.0, 0.04, 0.12)
    time_bins: int = 8
    support_threshold: float | None = None
    init: np.ndarray | None = None

    def __post_init__(self):
        if self.warp_model not in WARP_MODELS:
            raise ValueError(f"unknown warp model {self.warp_model!r}")
        if self.contrast_fn not in CONTRAST_FNS:
            raise ValueError(f"unknown contrast function {self.contrast_fn!r}")
        if self.distance_fn not in DISTANCE_FNS:
            raise ValueError(f"unknown distance function {self.distance_fn!r}")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.refine_iters < 1:
            raise ValueError("iteration cap must be >= 1")

    @property
    def n_params(self) -> int:
        return {"flow": 2, "flow_rotation": 3, "h4pt_rate": 8}[self.warp_model]

    @property
    def support(self) -> float:
        if self.support_threshold is not None:
            return self.support_threshold
        return _SUPPORT_DEFAULTS[self.distance_fn]


@dataclass
class DeblurResult:
    deblurred: EventFrame
    warp: np.ndarray
    model: str
    contrast_before: float
    contrast_after: float
    objective_trace: list = field(default_factory=list)
    fell_back: bool = False
    n_events: int = 0


def contrast(frame: EventFrame, fn: str = "variance") -> float:
    """Scalar sharpness of a frame's combined count image."""
    return _contrast_image(frame.combined, fn)


def _contrast_image(combined: np.ndarray, fn: str) -> float:
    if fn == "variance":
        return float(np.var(combined))
    if fn == "sum_sq":
        return float(np.mean(combined * combined))
    raise ValueError(f"unknown contrast function {fn!r}")


def _distance(pos, neg, ref_pos, ref_neg, fn: str) -> float:
    r2 = (pos - ref_pos) ** 2 + (neg - ref_neg) ** 2
    if fn == "l2":
        return float(np.mean(r2))
    if fn == "robust":
        nonzero = r2[r2 > 0]
        if nonzero.size == 0:
            return 0.0
        cap = np.percentile(nonzero, 95.0)
        return float(np.mean(np.minimum(r2, cap)))
    raise ValueError(f"unknown distance function {fn!r}")


def _warp_positions(x, y, s, theta, params: DeblurParams, intr: CameraIntrinsics):
    """Event positions translated along the model trajectory to the midpoint.

    ``s`` is the signed fractional offset of each event from the window
    midpoint, in (-0.5, 0.5]; theta is expressed per window.
    """
    model = params.warp_model
    if model == "flow":
        return x - theta[0] * s, y - theta[1] * s
    if model == "flow_rotation":
        ux, uy, omega = theta
        dx, dy = x - intr.cx, y - intr.cy
        ang = -omega * s
        cos, sin = np.cos(ang), np.sin(ang)
        wx = intr.cx + cos * dx - sin * dy - ux * s
        wy = intr.cy + sin * dx + cos * dy - uy * s
        return wx, wy
    # h4pt_rate: piecewise-constant homography over a few time bins
    wx = np.empty_like(x)
    wy = np.empty_like(y)
    edges = np.linspace(-0.5, 0.5, params.time_bins + 1)
    bins = np.clip(np.digitize(s, edges) - 1, 0, params.time_bins - 1)
    rate = np.asarray(theta, dtype=float).reshape(4, 2)
    for b in range(params.time_bins):
        sel = bins == b
        if not np.any(sel):
            continue
        s_b = 0.5 * (edges[b] + edges[b + 1])
        h = h4pt_to_matrix(rate * s_b, intr.width, intr.height)
        hinv = invert_matrix(h)
        xs, ys = x[sel], y[sel]
        w = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
        wx[sel] = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / w
        wy[sel] = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / w
    return wx, wy


def _splat(wx, wy, positive, width, height):
    """Bilinear scatter of unit masses; returns (pos, neg) count images."""
    x0 = np.floor(wx).astype(np.int64)
    y0 = np.floor(wy).astype(np.int64)
    fx = wx - x0
    fy = wy - y0
    n_pix = width * height
    out = []
    for mask in (positive, ~positive):
        acc = np.zeros(n_pix)
        for dx, dy, wgt in (
            (0, 0, (1 - fx) * (1 - fy)),
            (1, 0, fx * (1 - fy)),
            (0, 1, (1 - fx) * fy),
            (1, 1, fx * fy),
        ):
            xs = x0 + dx
            ys = y0 + dy
            ok = mask & (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
            if np.any(ok):
                acc += np.bincount(ys[ok] * width + xs[ok], weights=wgt[ok], minlength=n_pix)
        out.append(acc.reshape(height, width))
    return out[0], out[1]


def _time_channel(wx, wy, t_us, t_start, t_end, width, height):
    """Mean inter-event time of the warped events, nearest-pixel binning."""
    xs = np.round(wx).astype(np.int64)
    ys = np.round(wy).astype(np.int64)
    ok = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    xs, ys, t = xs[ok], ys[ok], t_us[ok].astype(float)
    n_pix = width * height
    flat = ys * width + xs
    count = np.bincount(flat, minlength=n_pix)
    t_min = np.full(n_pix, np.inf)
    t_max = np.full(n_pix, -np.inf)
    np.minimum.at(t_min, flat, t)
    np.maximum.at(t_max, flat, t)
    ch = np.zeros(n_pix)
    multi = count >= 2
    ch[multi] = (t_max[multi] - t_min[multi]) / (count[multi] - 1) / float(t_end - t_start)
    return ch.reshape(height, width)


def deblur_frame(
    events: np.ndarray,
    t_start: int,
    t_end: int,
    geometry: CameraIntrinsics,
    params: DeblurParams | None = None,
) -> DeblurResult:
    """Fit the warp minimizing the contrast/distance objective and re-bin.

    Raises EmptyWindowError when the window holds no events, SolverError when
    the objective turns non-finite.
    """
    params = params or DeblurParams()
    input_frame = accumulate_frame(events, t_start, t_end, geometry)
    lo = np.searchsorted(events["t"], t_start, side="left")
    hi = np.searchsorted(events["t"], t_end, side="left")
    ev = events[lo:hi]
    if ev.size == 0:
        raise EmptyWindowError("deblur window holds no events")

    x = ev["x"].astype(float)
    y = ev["y"].astype(float)
    t_us = ev["t"].astype(np.int64)
    mid = 0.5 * (t_start + t_end)
    s = (t_us - mid) / float(t_end - t_start)
    positive = ev["p"] > 0

    c0 = max(contrast(input_frame, params.contrast_fn), 1e-12)
    d0 = max(float(np.mean(input_frame.ch_pos**2 + input_frame.ch_neg**2)), 1e-12)
    trace: list[float] = []

    def objective(theta):
        wx, wy = _warp_positions(x, y, s, np.asarray(theta, dtype=float), params, geometry)
        pos, neg = _splat(wx, wy, positive, geometry.width, geometry.height)
        c = _contrast_image(pos + neg, params.contrast_fn)
        d = _distance(pos, neg, input_frame.ch_pos, input_frame.ch_neg, params.distance_fn)
        value = -c / c0 + params.lam * d / d0
        if not np.isfinite(value):
            raise SolverError("non-finite deblur objective", trace=list(trace))
        return value

    best_theta, best_value = _solve(objective, params, trace)

    wx, wy = _warp_positions(x, y, s, best_theta, params, geometry)
    pos, neg = _splat(wx, wy, positive, geometry.width, geometry.height)
    ch_time = _time_channel(wx, wy, t_us, t_start, t_end, geometry.width, geometry.height)
    weak = (pos + neg) < params.support
    pos[weak] = 0.0
    neg[weak] = 0.0
    ch_time[weak] = 0.0
    out = input_frame.with_channels(pos, neg, ch_time)

    before = contrast(input_frame, params.contrast_fn)
    after = contrast(out, params.contrast_fn)
    if after < before - 1e-9:
        return DeblurResult(
            deblurred=input_frame,
            warp=np.zeros(params.n_params),
            model=params.warp_model,
            contrast_before=before,
            contrast_after=before,
            objective_trace=trace,
            fell_back=True,
            n_events=int(ev.size),
        )
    return DeblurResult(
        deblurred=out,
        warp=best_theta,
        model=params.warp_model,
        contrast_before=before,
        contrast_after=after,
        objective_trace=trace,
        fell_back=False,
        n_events=int(ev.size),
    )


def _grid_points(params: DeblurParams) -> np.ndarray:
    init = np.zeros(params.n_params) if params.init is None else np.asarray(params.init, float)
    steps = np.arange(-params.grid_radius, params.grid_radius + 1e-9, params.grid_step)
    if params.warp_model == "flow":
        grid = [init + np.array([dx, dy]) for dx in steps for dy in steps]
    elif params.warp_model == "flow_rotation":
        grid = [
            init + np.array([dx, dy, om])
            for dx in steps
            for dy in steps
            for om in params.rotation_candidates
        ]
    else:
        # 8-dof: seed from uniform corner displacement rates only
        grid = [
            init + np.tile([dx, dy], 4)
            for dx in steps
            for dy in steps
        ]
    return np.array(grid)


def _solve(objective, params: DeblurParams, trace: list):
    best_theta = None
    best_value = np.inf
    for theta in _grid_points(params):
        value = objective(theta)
        if value < best_value:
            best_value = value
            best_theta = theta
            trace.append(value)

    result = optimize.minimize(
        objective,
        best_theta,
        method="Nelder-Mead",
        options={"maxiter": params.refine_iters, "xatol": 0.02, "fatol": 1e-6},
    )
    if np.isfinite(result.fun) and result.fun < best_value:
        best_value = float(result.fun)
        best_theta = np.asarray(result.x, dtype=float)
        trace.append(best_value)
    return best_theta, best_value
