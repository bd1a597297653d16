"""Event synthesis: per-pixel log-intensity threshold crossings.

A pixel fires an event of sign(delta log I) each time the accumulated change
since its last event crosses the (per-pixel jittered) threshold. Timestamps
are linearly interpolated inside a simulation step; a refractory period and
a uniform background noise rate model sensor non-idealities.
"""

from __future__ import annotations

import numpy as np

from .events import CameraIntrinsics, empty_events, make_events
from .world import WorldState, render_log_intensity

US = 1_000_000.0


class EventSensor:
    """Stateful stepper: feed log-intensity images at increasing times."""

    def __init__(
        self,
        intrinsics: CameraIntrinsics,
        threshold: float = 0.2,
        threshold_jitter: float = 0.1,
        refractory_us: float = 100.0,
        noise_rate_hz: float = 0.0,
        rng: np.random.Generator | None = None,
    ):
        if threshold <= 0:
            raise ValueError("event threshold must be positive")
        self.intrinsics = intrinsics
        self.refractory_us = float(refractory_us)
        self.noise_rate_hz = float(noise_rate_hz)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        shape = (intrinsics.height, intrinsics.width)
        jitter = self.rng.uniform(-threshold_jitter, threshold_jitter, size=shape)
        self.tau_pos = threshold * (1.0 + jitter)
        self.tau_neg = threshold * (1.0 + jitter)
        self.l_ref: np.ndarray | None = None
        self.l_prev: np.ndarray | None = None
        self.t_prev = 0.0
        self.last_event_us = np.full(shape, -np.inf)

    def reset(self) -> None:
        self.l_ref = None
        self.l_prev = None
        self.t_prev = 0.0
        self.last_event_us.fill(-np.inf)

    def step(self, log_image: np.ndarray, t: float) -> np.ndarray:
        """Events triggered between the previous step and time ``t`` (seconds)."""
        if self.l_ref is None:
            self.l_ref = log_image.astype(float).copy()
            self.l_prev = self.l_ref.copy()
            self.t_prev = t
            return empty_events()
        if t <= self.t_prev:
            raise ValueError("sensor steps must advance in time")

        l_new = log_image.astype(float)
        delta = l_new - self.l_ref
        n_pos = np.floor_divide(np.maximum(delta, 0.0), self.tau_pos).astype(np.int64)
        n_neg = np.floor_divide(np.maximum(-delta, 0.0), self.tau_neg).astype(np.int64)
        max_n = int(max(n_pos.max(initial=0), n_neg.max(initial=0)))

        t0_us, t1_us = self.t_prev * US, t * US
        span = l_new - self.l_prev
        ref0 = self.l_ref.copy()
        chunks = []
        for i in range(max_n):
            for sign, counts, tau in ((1, n_pos, self.tau_pos), (-1, n_neg, self.tau_neg)):
                ys, xs = np.nonzero(counts > i)
                if ys.size == 0:
                    continue
                level = ref0[ys, xs] + sign * (i + 1) * tau[ys, xs]
                denom = span[ys, xs]
                frac = np.where(
                    np.abs(denom) > 1e-12,
                    (level - self.l_prev[ys, xs]) / np.where(denom == 0, 1.0, denom),
                    1.0,
                )
                t_ev = t0_us + np.clip(frac, 0.0, 1.0) * (t1_us - t0_us)
                ok = t_ev >= self.last_event_us[ys, xs] + self.refractory_us
                if not np.any(ok):
                    continue
                ys, xs, t_ev = ys[ok], xs[ok], t_ev[ok]
                self.last_event_us[ys, xs] = t_ev
                self.l_ref[ys, xs] += sign * tau[ys, xs]
                chunks.append(
                    make_events(np.round(t_ev).astype(np.int64), xs, ys,
                                np.full(ys.size, sign, dtype=np.int8))
                )

        if self.noise_rate_hz > 0:
            n_pix = self.intrinsics.width * self.intrinsics.height
            lam = self.noise_rate_hz * (t - self.t_prev) * n_pix
            n_noise = int(self.rng.poisson(lam))
            if n_noise:
                xs = self.rng.integers(0, self.intrinsics.width, size=n_noise)
                ys = self.rng.integers(0, self.intrinsics.height, size=n_noise)
                t_ev = self.rng.uniform(t0_us, t1_us, size=n_noise)
                pol = self.rng.choice(np.array([-1, 1], dtype=np.int8), size=n_noise)
                # a noise event resets the pixel's reference level
                self.l_ref[ys, xs] = l_new[ys, xs]
                self.last_event_us[ys, xs] = np.maximum(self.last_event_us[ys, xs], t_ev)
                chunks.append(make_events(np.round(t_ev).astype(np.int64), xs, ys, pol))

        self.l_prev = l_new.copy()
        self.t_prev = t
        if not chunks:
            return empty_events()
        ev = np.concatenate(chunks)
        order = np.lexsort((ev["p"], ev["x"], ev["y"], ev["t"]))
        return ev[order]


def generate_events(
    world: WorldState,
    t_start: float,
    t_end: float,
    sim_rate: float = 2000.0,
    threshold: float = 0.2,
    threshold_jitter: float = 0.1,
    refractory_us: float = 100.0,
    noise_rate_hz: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Simulate the sensor over [t_start, t_end] seconds; timestamps in us.

    Deterministic given (world, rng seed, sim_rate, threshold).
    """
    if threshold <= 0:
        raise ValueError("event threshold must be positive")
    if t_end <= t_start:
        raise ValueError("empty simulation range")
    sensor = EventSensor(
        world.camera.intrinsics,
        threshold=threshold,
        threshold_jitter=threshold_jitter,
        refractory_us=refractory_us,
        noise_rate_hz=noise_rate_hz,
        rng=rng,
    )
    n_steps = max(1, int(np.ceil((t_end - t_start) * sim_rate)))
    times = np.linspace(t_start, t_end, n_steps + 1)
    chunks = []
    for t in times:
        ev = sensor.step(render_log_intensity(world, float(t)), float(t))
        if ev.size:
            chunks.append(ev)
    if not chunks:
        return empty_events()
    return np.concatenate(chunks)
