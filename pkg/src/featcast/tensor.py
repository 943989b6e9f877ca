"""Immutable float64 feature blocks and the two primitives the rest of the
package is built from."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ShapeMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FeatureTensor:
    """Dense row-major float64 block with an explicit shape.

    The backing array is copied on construction and marked read-only, so a
    tensor can be shared between caches and threads without defensive copies.
    """

    data: np.ndarray

    def __init__(self, data, shape: Sequence[int] | None = None):
        arr = np.array(data, dtype=np.float64, copy=True, order="C")
        if shape is not None:
            shape = tuple(int(s) for s in shape)
            if any(s <= 0 for s in shape):
                raise ValueError(f"shape entries must be positive, got {shape}")
            if int(np.prod(shape)) != arr.size:
                raise ShapeMismatchError(
                    f"shape {shape} needs {int(np.prod(shape))} values, got {arr.size}"
                )
            arr = arr.reshape(shape)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def wrap(cls, arr: np.ndarray) -> "FeatureTensor":
        """Adopt a float64 array without copying. The caller gives up the array."""
        out = object.__new__(cls)
        if arr.dtype != np.float64 or not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(out, "data", arr)
        return out

    @classmethod
    def zeros(cls, shape: Sequence[int]) -> "FeatureTensor":
        return cls.wrap(np.zeros(tuple(shape)))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def __len__(self) -> int:
        return self.data.shape[0] if self.data.ndim else 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureTensor):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def bitwise_equal(self, other: "FeatureTensor") -> bool:
        return self.shape == other.shape and self.data.tobytes() == other.data.tobytes()

    def __repr__(self) -> str:
        return f"FeatureTensor(shape={self.shape}, data={np.array2string(self.flat(), threshold=8)})"


def as_tensor(x) -> FeatureTensor:
    return x if isinstance(x, FeatureTensor) else FeatureTensor(x)


def check_same_shape(a: FeatureTensor, b: FeatureTensor, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{what} have different shapes: {a.shape} vs {b.shape}")


def axpy(alpha: float, x, y) -> FeatureTensor:
    """Return ``alpha * x + y`` as a new tensor."""
    x, y = as_tensor(x), as_tensor(y)
    check_same_shape(x, y, "axpy x and y")
    return FeatureTensor.wrap(alpha * x.data + y.data)


def l2_distance(a, b) -> float:
    a, b = as_tensor(a), as_tensor(b)
    check_same_shape(a, b, "l2_distance operands")
    diff = a.data - b.data
    return float(np.sqrt(np.sum(diff * diff)))
