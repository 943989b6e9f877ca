"""Binary feature trajectories and text run reports.

Trajectory file layout (all integers unsigned 32-bit, all reals IEEE-754
float64, everything little-endian)::

    magic      4 bytes  b"TSTJ"
    version    u32      1
    n_slots    u32
    slots      n_slots x (layer u32, submodule u32)   submodule: 0=sa 1=ca 2=mlp
    ndim       u32
    shape      ndim x u32
    n_steps    u32
    timesteps  n_steps x f64
    payload    n_slots x n_steps x prod(shape) x f64, slot-major, row-major tensors
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .forecast import SlotId, Submodule

MAGIC = b"TSTJ"
VERSION = 1


class TrajectoryFormatError(ValueError):
    pass


class BadMagicError(TrajectoryFormatError):
    pass


class UnsupportedVersionError(TrajectoryFormatError):
    pass


class LengthMismatchError(TrajectoryFormatError):
    pass


class Trajectory(NamedTuple):
    slots: list[SlotId]
    timesteps: np.ndarray
    tensors: np.ndarray  # [n_slots, n_steps, *shape]


def _stack(slots, timesteps, tensors) -> np.ndarray:
    if isinstance(tensors, np.ndarray):
        arr = np.asarray(tensors, dtype=np.float64)
    else:
        rows = []
        for per_slot in tensors:
            rows.append([np.asarray(getattr(x, "data", x), dtype=np.float64) for x in per_slot])
        shapes = {r.shape for per_slot in rows for r in per_slot}
        if len(shapes) > 1:
            raise ValueError(f"tensors have inconsistent shapes: {sorted(shapes)}")
        if any(len(per_slot) != len(timesteps) for per_slot in rows):
            raise ValueError("every slot needs one tensor per timestep")
        arr = np.array(rows, dtype=np.float64)
    if arr.ndim < 2 or arr.shape[0] != len(slots) or arr.shape[1] != len(timesteps):
        raise ValueError(
            f"tensors of shape {arr.shape} do not match {len(slots)} slots x {len(timesteps)} steps"
        )
    return arr


def encode_trajectory(slots: Sequence[SlotId], timesteps, tensors) -> bytes:
    slots = [SlotId(int(s[0]), Submodule(int(s[1]))) for s in slots]
    timesteps = np.asarray(timesteps, dtype=np.float64)
    arr = _stack(slots, timesteps, tensors)
    shape = arr.shape[2:]
    parts = [MAGIC, struct.pack("<II", VERSION, len(slots))]
    parts += [struct.pack("<II", s.layer, int(s.submodule)) for s in slots]
    parts.append(struct.pack(f"<I{len(shape)}I", len(shape), *shape))
    parts.append(struct.pack("<I", len(timesteps)))
    parts.append(timesteps.astype("<f8").tobytes())
    parts.append(np.ascontiguousarray(arr).astype("<f8").tobytes())
    return b"".join(parts)


def write_trajectory(path, slots, timesteps, tensors) -> None:
    blob = encode_trajectory(slots, timesteps, tensors)
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
    except OSError as exc:
        raise OSError(f"cannot write trajectory file {path}: {exc}") from exc


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.blob):
            raise LengthMismatchError(
                f"truncated header: need at least {self.pos + size} bytes, file has {len(self.blob)}"
            )
        out = struct.unpack_from(fmt, self.blob, self.pos)
        self.pos += size
        return out


def decode_trajectory(blob: bytes) -> Trajectory:
    if blob[:4] != MAGIC:
        raise BadMagicError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    r = _Reader(blob)
    r.pos = 4
    (version,) = r.take("<I")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version} (this reader handles {VERSION})")
    (n_slots,) = r.take("<I")
    slots = []
    for _ in range(n_slots):
        layer, sub = r.take("<II")
        if sub > 2:
            raise TrajectoryFormatError(f"unknown submodule code {sub}")
        slots.append(SlotId(layer, Submodule(sub)))
    (ndim,) = r.take("<I")
    shape = r.take(f"<{ndim}I")
    (n_steps,) = r.take("<I")
    timesteps = np.frombuffer(blob, "<f8", n_steps, r.pos) if r.pos + 8 * n_steps <= len(blob) else None
    expected = r.pos + 8 * n_steps + 8 * n_slots * n_steps * math.prod(shape)
    if timesteps is None or len(blob) != expected:
        raise LengthMismatchError(f"expected {expected} bytes, file has {len(blob)}")
    r.pos += 8 * n_steps
    payload = np.frombuffer(blob, "<f8", offset=r.pos).astype(np.float64)
    tensors = payload.reshape((n_slots, n_steps) + tuple(shape))
    return Trajectory(slots, timesteps.astype(np.float64), tensors)


def read_trajectory(path) -> Trajectory:
    with open(path, "rb") as fh:
        return decode_trajectory(fh.read())


class TrajectoryRecorder:
    """Collects branch outputs from :func:`featcast.sampler.sample`."""

    def __init__(self):
        self.steps: list[float] = []
        self.features: dict[SlotId, list[np.ndarray]] = {}

    def __call__(self, step: int, t: float, slot: SlotId, feature) -> None:
        if not self.steps or self.steps[-1] != t:
            self.steps.append(t)
        self.features.setdefault(slot, []).append(np.array(feature.data))

    def to_trajectory(self) -> Trajectory:
        slots = list(self.features)
        return Trajectory(slots, np.array(self.steps), np.array([self.features[s] for s in slots]))


# -- run reports --------------------------------------------------------------


def _fmt(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x} cannot be serialized")
        text = format(x, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_fmt(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if not len(obj):
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_fmt(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _fmt(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(obj, indent: int = 2) -> str:
    """JSON text with sorted keys and every real printed to 17 significant digits."""
    return _fmt(obj, indent, 0) + "\n"


@dataclass
class RunReport:
    config: dict
    trace: str
    full_steps: int
    flops: dict
    speedup: float
    theoretical_speedup: float
    divergence: dict | None = None
    prediction_errors: dict | None = None
    notes: dict = field(
        default_factory=lambda: {"offset_units": "sampler steps; k and N share the same unit"}
    )

    def to_dict(self) -> dict:
        out = {
            "config": self.config,
            "trace": self.trace,
            "full_steps": self.full_steps,
            "flops": self.flops,
            "speedup": self.speedup,
            "theoretical_speedup": self.theoretical_speedup,
            "notes": self.notes,
        }
        if self.divergence is not None:
            out["divergence"] = self.divergence
        if self.prediction_errors is not None:
            out["prediction_errors"] = self.prediction_errors
        return out

    def dumps(self) -> str:
        return dumps_report(self.to_dict())

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "RunReport":
        d = json.loads(text)
        return cls(
            config=d["config"],
            trace=d["trace"],
            full_steps=d["full_steps"],
            flops=d["flops"],
            speedup=d["speedup"],
            theoretical_speedup=d["theoretical_speedup"],
            divergence=d.get("divergence"),
            prediction_errors=d.get("prediction_errors"),
            notes=d.get("notes", {}),
        )
