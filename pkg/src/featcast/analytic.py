"""Closed-form feature trajectories with exact derivatives of any order."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, pi

import numpy as np

from .tensor import FeatureTensor


@dataclass(frozen=True)
class Polynomial:
    """Per-component polynomial; ``coeffs[..., j]`` multiplies ``t**j``."""

    coeffs: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[-1] - 1

    def eval(self, t: float, order: int = 0) -> np.ndarray:
        c = self.coeffs
        deg = c.shape[-1] - 1
        out = np.zeros(c.shape[:-1])
        # Horner on the differentiated coefficients
        for j in range(deg, order - 1, -1):
            out = out * t + c[..., j] * (factorial(j) // factorial(j - order))
        return out


@dataclass(frozen=True)
class Sinusoid:
    """Per-component ``amplitude * sin(frequency * t + phase)``."""

    amplitude: np.ndarray
    frequency: np.ndarray
    phase: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return self.amplitude.shape

    def eval(self, t: float, order: int = 0) -> np.ndarray:
        return (
            self.amplitude
            * self.frequency**order
            * np.sin(self.frequency * t + self.phase + order * pi / 2)
        )


class AnalyticTrajectory:
    def __init__(self, kind: Polynomial | Sinusoid):
        self.kind = kind

    @classmethod
    def polynomial(cls, coeffs, shape=None) -> "AnalyticTrajectory":
        c = np.asarray(coeffs, dtype=np.float64)
        if shape is not None:
            c = np.broadcast_to(c, tuple(shape) + c.shape[-1:]).copy()
        elif c.ndim == 1:
            c = c.reshape(1, -1)
        return cls(Polynomial(c))

    @classmethod
    def sinusoid(cls, amplitude=1.0, frequency=1.0, phase=0.0, shape=(1,)) -> "AnalyticTrajectory":
        def arr(v):
            return np.broadcast_to(np.asarray(v, dtype=np.float64), tuple(shape)).copy()

        return cls(Sinusoid(arr(amplitude), arr(frequency), arr(phase)))

    @classmethod
    def random_polynomial(cls, degree: int, shape, rng: np.random.Generator) -> "AnalyticTrajectory":
        return cls(Polynomial(rng.uniform(-1.0, 1.0, size=tuple(shape) + (degree + 1,))))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.kind.shape

    def __call__(self, t: float, derivative_order: int = 0) -> np.ndarray:
        return self.kind.eval(t, derivative_order)


def analytic_eval(traj: AnalyticTrajectory, t: float, derivative_order: int = 0) -> FeatureTensor:
    if derivative_order < 0:
        raise ValueError(f"derivative_order must be >= 0, got {derivative_order}")
    return FeatureTensor.wrap(np.array(traj(t, derivative_order), dtype=np.float64))
