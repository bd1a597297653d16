"""Event stream and frame file formats.

Binary event files: ASCII magic ``EVD1``, uint16 width, uint16 height, then
little-endian records of (uint32 t_us, uint16 x, uint16 y, int8 polarity,
int8 pad). Text alternative: CSV lines ``t,x,y,p``. Frames are exported as
one portable float map (PFM) per channel plus a JSON sidecar carrying the
window metadata.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import EventFileError, EventOrderError, GeometryError
from .events import EVENT_DTYPE, EventFrame, empty_events, make_events, validate_events

MAGIC = b"EVD1"
_RECORD_DTYPE = np.dtype(
    [("t", "<u4"), ("x", "<u2"), ("y", "<u2"), ("p", "<i1"), ("pad", "<i1")]
)


def write_events_binary(path, events: np.ndarray, width: int, height: int) -> None:
    path = Path(path)
    rec = np.zeros(events.size, dtype=_RECORD_DTYPE)
    rec["t"] = events["t"]
    rec["x"] = events["x"]
    rec["y"] = events["y"]
    rec["p"] = events["p"]
    header = MAGIC + np.array([width, height], dtype="<u2").tobytes()
    path.write_bytes(header + rec.tobytes())


def read_events_binary(path) -> tuple[np.ndarray, int, int]:
    """Returns (events, width, height); validates magic, framing, and order."""
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise EventFileError(f"bad magic in {path}: expected {MAGIC!r}")
    width, height = np.frombuffer(raw[4:8], dtype="<u2")
    body = raw[8:]
    if len(body) % _RECORD_DTYPE.itemsize != 0:
        index = len(body) // _RECORD_DTYPE.itemsize
        raise EventFileError(f"truncated record at index {index} in {path}")
    rec = np.frombuffer(body, dtype=_RECORD_DTYPE)
    events = make_events(rec["t"], rec["x"], rec["y"], rec["p"])
    _validate_file_events(events, int(width), int(height), path)
    return events, int(width), int(height)


def write_events_csv(path, events: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,x,y,p\n")
        for t, x, y, p in zip(events["t"], events["x"], events["y"], events["p"]):
            fh.write(f"{t},{x},{y},{p}\n")


def read_events_csv(path, width: int, height: int) -> np.ndarray:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("t,"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise EventFileError(f"{path}:{lineno}: expected 't,x,y,p'")
            try:
                events.append(tuple(int(v) for v in parts))
            except ValueError as exc:
                raise EventFileError(f"{path}:{lineno}: {exc}") from exc
    if not events:
        return empty_events()
    arr = np.array(events, dtype=np.int64)
    ev = make_events(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])
    _validate_file_events(ev, width, height, path)
    return ev


def _validate_file_events(events, width, height, path) -> None:
    try:
        validate_events(events, width, height)
    except EventOrderError as exc:
        raise EventFileError(f"{path}: unsorted timestamps ({exc})") from exc
    except GeometryError as exc:
        bad = np.nonzero(
            (events["x"] >= width) | (events["y"] >= height) | (np.abs(events["p"]) != 1)
        )[0]
        index = int(bad[0]) if bad.size else -1
        raise EventFileError(f"{path}: corrupt record at index {index} ({exc})") from exc


def import_events(path, fmt: str | None = None, width: int = 0, height: int = 0):
    """Load events from binary or CSV; format inferred from suffix if omitted."""
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "binary"
    if fmt == "binary":
        return read_events_binary(path)
    if fmt == "csv":
        return read_events_csv(path, width, height), width, height
    raise ValueError(f"unknown event format {fmt!r}")


def write_pfm(path, image: np.ndarray) -> None:
    """Grayscale portable float map, little-endian (negative scale)."""
    image = np.asarray(image, dtype=np.float32)
    if image.ndim != 2:
        raise ValueError("write_pfm expects a 2D array")
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{image.shape[1]} {image.shape[0]}\n".encode())
        fh.write(b"-1.0\n")
        # PFM stores rows bottom-to-top.
        fh.write(np.flipud(image).tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"Pf":
            raise EventFileError(f"{path}: not a grayscale PFM file")
        width, height = (int(v) for v in fh.readline().split())
        scale = float(fh.readline())
        data = np.frombuffer(fh.read(), dtype="<f4" if scale < 0 else ">f4")
    if data.size != width * height:
        raise EventFileError(f"{path}: truncated PFM payload")
    return np.flipud(data.reshape(height, width)).astype(np.float32)


def export_frame(frame: EventFrame, directory, stem: str, normalized: bool = True) -> dict:
    """Write one PFM per channel plus a JSON sidecar; returns the sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = frame.normalized() if normalized else frame
    names = {}
    for channel, data in zip(("pos", "neg", "time"), out.channels()):
        name = f"{stem}_{channel}.pfm"
        write_pfm(directory / name, data)
        names[channel] = name
    sidecar = {
        "width": frame.width,
        "height": frame.height,
        "t_start_us": int(frame.t_start),
        "t_end_us": int(frame.t_end),
        "normalized": bool(normalized),
        "normalizer": float(frame.combined.max()) if normalized else 1.0,
        "channels": names,
    }
    with open(directory / f"{stem}.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
    return sidecar


def load_frame(directory, stem: str) -> EventFrame:
    directory = Path(directory)
    with open(directory / f"{stem}.json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    channels = {
        ch: read_pfm(directory / name).astype(float)
        for ch, name in sidecar["channels"].items()
    }
    return EventFrame(
        sidecar["width"],
        sidecar["height"],
        sidecar["t_start_us"],
        sidecar["t_end_us"],
        channels["pos"],
        channels["neg"],
        channels["time"],
    )
