"""Thermogram stack container and the TGS1 binary file format.

Layout of a TGS1 file, all integers little-endian:

    bytes 0..3    magic "TGS1"
    bytes 4..15   uint32 nx, ny, n_frames
    bytes 16..19  float32 fps
    bytes 20..23  uint32 metadata byte length
    ...           UTF-8 metadata, one "key = value" per line
    ...           frames, time-major then row-major, float32

Stacks hold 32-bit intensities (camera realistic); pipeline math runs in
64-bit and narrows only when a new stack is built.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMagic, IndexOutOfRange, NonFiniteData, TruncatedFile

MAGIC = b"TGS1"
FORMAT_VERSION = "TGS1"


@dataclass(eq=False)
class ThermogramStack:
    """Frames over time for a pixel grid, with self-describing metadata."""

    data: np.ndarray
    fps: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.ndim != 3:
            raise ValueError("data must be (n_frames, ny, nx)")
        if not np.isfinite(data).all():
            raise NonFiniteData("stack data must be finite")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        self.data = data
        self.fps = float(self.fps)
        self.metadata = {str(k): str(v) for k, v in self.metadata.items()}

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def ny(self) -> int:
        return self.data.shape[1]

    @property
    def nx(self) -> int:
        return self.data.shape[2]

    def pixel_trace(self, jx, jy) -> np.ndarray:
        """Time trend of one pixel as float64."""
        self._check_pixel(jx, jy)
        return self.data[:, jy, jx].astype(np.float64)

    def times(self) -> np.ndarray:
        return np.arange(self.n_frames) / self.fps

    def _check_pixel(self, jx, jy):
        if not (0 <= jx < self.nx and 0 <= jy < self.ny):
            raise IndexOutOfRange(
                f"pixel ({jx}, {jy}) outside {self.nx} x {self.ny} grid")


def _encode_metadata(metadata) -> bytes:
    lines = []
    for key in sorted(metadata):
        value = metadata[key]
        if "\n" in key or "\n" in value or "=" in key:
            raise ValueError(f"metadata key/value not encodable: {key!r}")
        lines.append(f"{key} = {value}")
    return "\n".join(lines).encode("utf-8")


def _decode_metadata(blob) -> dict:
    metadata = {}
    for line in blob.decode("utf-8").splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(" = ")
        metadata[key] = value
    return metadata


def write_stack(stack, path):
    """Write a stack; the round trip through :func:`read_stack` is bit-exact."""
    meta = _encode_metadata(stack.metadata)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", stack.nx, stack.ny, stack.n_frames))
        fh.write(struct.pack("<f", stack.fps))
        fh.write(struct.pack("<I", len(meta)))
        fh.write(meta)
        fh.write(stack.data.astype("<f4").tobytes())


def read_stack(path) -> ThermogramStack:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise BadMagic(f"{path}: expected {MAGIC!r} header")
    if len(blob) < 24:
        raise TruncatedFile(f"{path}: header incomplete")
    nx, ny, n_frames = struct.unpack_from("<III", blob, 4)
    (fps,) = struct.unpack_from("<f", blob, 16)
    (meta_len,) = struct.unpack_from("<I", blob, 20)
    offset = 24
    if len(blob) < offset + meta_len:
        raise TruncatedFile(f"{path}: metadata incomplete")
    metadata = _decode_metadata(blob[offset: offset + meta_len])
    offset += meta_len
    count = n_frames * ny * nx
    expected = offset + 4 * count
    if len(blob) < expected:
        raise TruncatedFile(
            f"{path}: expected {expected} bytes, found {len(blob)}")
    data = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
    data = data.astype(np.float32).reshape(n_frames, ny, nx)
    if not np.isfinite(data).all():
        raise NonFiniteData(f"{path}: non-finite samples")
    return ThermogramStack(data=data, fps=float(fps), metadata=metadata)


def export_slice(stack, time_index, path):
    """Write one frame as 16-bit PGM plus a raw CSV matrix and a sidecar.

    The PGM is min-max scaled to [0, 65535]; the scaling bounds go to
    ``<path>.txt`` and the unscaled values to ``<path>.csv``. Returns the
    three paths written.
    """
    if not (0 <= time_index < stack.n_frames):
        raise IndexOutOfRange(
            f"frame {time_index} outside 0..{stack.n_frames - 1}")
    frame = stack.data[time_index].astype(np.float64)
    lo, hi = float(frame.min()), float(frame.max())
    if hi > lo:
        scaled = np.round((frame - lo) / (hi - lo) * 65535.0)
    else:
        scaled = np.zeros_like(frame)
    pgm_path = str(path)
    if not pgm_path.endswith(".pgm"):
        pgm_path += ".pgm"
    base = pgm_path[:-4]
    with open(pgm_path, "wb") as fh:
        fh.write(f"P5\n{stack.nx} {stack.ny}\n65535\n".encode("ascii"))
        fh.write(scaled.astype(">u2").tobytes())
    csv_path = base + ".csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in frame:
            writer.writerow([f"{v:.9g}" for v in row])
    sidecar_path = base + ".txt"
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        fh.write(f"frame_index = {time_index}\n")
        fh.write(f"time_s = {time_index / stack.fps!r}\n")
        fh.write(f"scale_min = {lo!r}\n")
        fh.write(f"scale_max = {hi!r}\n")
    return pgm_path, csv_path, sidecar_path


def export_pixel_trace(stack, jx, jy, path):
    """Two-column CSV (time_s, value) of one pixel's time trend."""
    trace = stack.pixel_trace(jx, jy)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "value"])
        for n, v in enumerate(trace):
            writer.writerow([repr(n / stack.fps), repr(float(v))])
