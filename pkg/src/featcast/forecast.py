"""Finite-difference caches and Taylor extrapolation of cached features.

A cache is refreshed at every full activation with the new feature and the
chain of forward differences back through the previous activations, spaced
``interval_n`` sampler steps apart. Between activations the feature ``k``
steps past the anchor is predicted as

    F(t - k) ~= F(t) + sum_{i=1..m} diff_i / (i! * N**i) * (-k)**i

Sampler time runs downwards, so "ahead" means smaller ``t``.

``form="newton"`` swaps ``(-k)**i`` for the factorial power
``(-k)(-k-N)...(-k-(i-1)N)``, which turns the expansion into the
interpolating polynomial through the cached activations. It agrees with the
default form for ``m <= 1`` and is exact on polynomial trajectories of degree
``<= m``; the default form is not (its derivative estimates are one-sided).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import comb, factorial
from typing import NamedTuple, Sequence

import numpy as np

from .tensor import FeatureTensor, ShapeMismatchError, as_tensor

MAX_ORDER = 6
FORMS = ("taylor", "newton")

_FACTORIALS = tuple(factorial(i) for i in range(9))


class ScheduleError(ValueError):
    """Raised when caches are fed out of order or queried before any activation."""


class Submodule(enum.IntEnum):
    SELF_ATTENTION = 0
    CROSS_ATTENTION = 1
    MLP = 2

    @property
    def short(self) -> str:
        return ("sa", "ca", "mlp")[self]


class SlotId(NamedTuple):
    layer: int
    submodule: Submodule

    def __str__(self) -> str:
        return f"L{self.layer}.{Submodule(self.submodule).short}"

    @classmethod
    def parse(cls, text: str) -> "SlotId":
        layer, sub = text.split(".")
        return cls(int(layer.lstrip("L")), Submodule(("sa", "ca", "mlp").index(sub)))


@dataclass
class TaylorCache:
    """Per-slot store of forward differences at the latest full activation.

    ``diffs[i]`` holds the i-th difference anchored at ``anchor_t``. Only
    ``min(samples_seen, order_m + 1)`` entries exist, so during warmup the
    usable order is truncated (see :meth:`effective_order`).
    """

    order_m: int
    interval_n: float = 1
    diffs: list[FeatureTensor] = field(default_factory=list)
    anchor_t: float | None = None
    samples_seen: int = 0

    def __post_init__(self):
        if not 0 <= self.order_m <= MAX_ORDER:
            raise ValueError(f"order_m must be in [0, {MAX_ORDER}], got {self.order_m}")
        if not self.interval_n > 0:
            raise ValueError(f"interval_n must be positive, got {self.interval_n}")

    @property
    def shape(self) -> tuple[int, ...] | None:
        return self.diffs[0].shape if self.diffs else None

    def effective_order(self) -> int:
        return min(self.order_m, max(self.samples_seen - 1, 0))

    def update(self, feature, t: float) -> "TaylorCache":
        """Absorb a fresh full activation at timestep ``t`` (in place)."""
        feature = as_tensor(feature)
        if self.diffs:
            if feature.shape != self.shape:
                raise ShapeMismatchError(
                    f"feature shape {feature.shape} does not match cached shape {self.shape}"
                )
            if not t < self.anchor_t:
                raise ScheduleError(
                    f"timesteps must decrease: got t={t} after anchor t={self.anchor_t}"
                )
        new = [feature]
        depth = min(self.samples_seen, self.order_m)
        for i in range(1, depth + 1):
            new.append(FeatureTensor.wrap(self.diffs[i - 1].data - new[i - 1].data))
        self.diffs = new
        self.anchor_t = t
        self.samples_seen += 1
        return self

    def predict(self, offset_k: float, form: str = "taylor") -> FeatureTensor:
        """Extrapolate the feature ``offset_k`` steps past the anchor."""
        if self.samples_seen == 0:
            raise ScheduleError("predict before any full activation")
        m = self.effective_order()
        if m == 0:
            return self.diffs[0]
        return FeatureTensor.wrap(
            _expand([d.data for d in self.diffs[: m + 1]], self.interval_n, offset_k, form)
        )


def _expand(diffs: Sequence[np.ndarray], n: float, k: float, form: str) -> np.ndarray:
    # Terms are accumulated left to right in a fixed order so results are
    # reproducible to the last bit.
    if form not in FORMS:
        raise ValueError(f"unknown form {form!r}, expected one of {FORMS}")
    acc = diffs[0]
    power = 1.0
    for i in range(1, len(diffs)):
        if form == "taylor":
            power = power * -k if i > 1 else -k
        else:
            power = power * (-k - (i - 1) * n) if i > 1 else -k
        acc = acc + diffs[i] / (_FACTORIALS[i] * n**i) * power
    return acc


def cache_update(cache: TaylorCache, feature, t: float) -> TaylorCache:
    return cache.update(feature, t)


def predict(cache: TaylorCache, offset_k: float, form: str = "taylor") -> FeatureTensor:
    return cache.predict(offset_k, form)


def effective_order(cache: TaylorCache) -> int:
    return cache.effective_order()


def linear_predict(current, previous, interval_n: float, offset_k: float) -> FeatureTensor:
    """First-order extrapolation written directly from two activations.

    Equal to ``predict`` at effective order 1, bit for bit.
    """
    cur, prev = as_tensor(current), as_tensor(previous)
    return FeatureTensor.wrap(cur.data + (cur.data - prev.data) / interval_n * offset_k)


def binomial_difference(history: Sequence, i: int) -> FeatureTensor:
    """i-th forward difference from raw samples, without recursion.

    ``history`` is oldest first, so ``history[-1]`` is the newest activation
    and ``history[-1 - j]`` lies ``j`` intervals before it.
    """
    if i < 0:
        raise ValueError(f"difference order must be nonnegative, got {i}")
    if i >= len(history):
        raise ValueError(f"order {i} difference needs {i + 1} samples, got {len(history)}")
    samples = [as_tensor(h) for h in history]
    acc = np.zeros(samples[-1].shape)
    for j in range(i + 1):
        acc = acc + (-1) ** (i - j) * comb(i, j) * samples[-1 - j].data
    return FeatureTensor.wrap(acc)
