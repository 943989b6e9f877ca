"""A small seeded DiT-shaped network that produces cacheable features.

Each layer applies self-attention, cross-attention against a fixed context,
and a two-layer MLP, each as a residual branch ``h + gain * f(h)``. The
branch outputs ``gain * f(h)`` are the cached features: one slot per
(layer, submodule).

Weights are drawn from :class:`~featcast.rng.Xoshiro256StarStar` in this
order, each array filled row-major: context ``[ctx_tokens, C]`` (std 1);
then per layer: self-attention ``Wq, Wk, Wv, Wo``, cross-attention
``Wq, Wk, Wv, Wo`` (all ``[C, C]``), MLP ``W1 [C, H]``, ``W2 [H, C]``; finally
the output projection ``[C, C]`` (std ``1/sqrt(C)``). All other weights use
std ``0.2/sqrt(C)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .forecast import SlotId, Submodule
from .rng import Xoshiro256StarStar
from .tensor import FeatureTensor, ShapeMismatchError, as_tensor

Hook = Callable[[SlotId, FeatureTensor], None]
Provider = Callable[[SlotId], FeatureTensor]

_RMS_EPS = 1e-6


@dataclass(frozen=True)
class DenoiserDims:
    layers: int = 8
    tokens: int = 16
    channels: int = 64
    hidden: int = 256
    context_tokens: int = 16

    @property
    def slots(self) -> int:
        return 3 * self.layers


def _rms_norm(h: np.ndarray) -> np.ndarray:
    return h / np.sqrt(np.mean(h * h, axis=-1, keepdims=True) + _RMS_EPS)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def time_embedding(t: float, channels: int) -> np.ndarray:
    """Sinusoidal embedding with angular frequencies spread over [0.5, 8]."""
    half = channels // 2
    freqs = 0.5 * 16.0 ** (np.arange(half) / max(half - 1, 1))
    emb = np.empty(channels)
    emb[0 : 2 * half : 2] = np.sin(freqs * t)
    emb[1 : 2 * half : 2] = np.cos(freqs * t)
    if channels % 2:
        emb[-1] = 0.0
    return emb


class ToyDenoiser:
    def __init__(self, seed: int = 42, dims: DenoiserDims = DenoiserDims(), gain: float = 1.0):
        self.seed = seed
        self.dims = dims
        self.gain = gain
        C, H = dims.channels, dims.hidden
        gen = Xoshiro256StarStar(seed)
        std = 0.2 / math.sqrt(C)
        self.context = gen.normal_array((dims.context_tokens, C))
        self.blocks = []
        for _ in range(dims.layers):
            sa = tuple(gen.normal_array((C, C), std) for _ in range(4))
            ca = tuple(gen.normal_array((C, C), std) for _ in range(4))
            mlp = (gen.normal_array((C, H), std), gen.normal_array((H, C), std))
            self.blocks.append((sa, ca, mlp))
        self.w_out = gen.normal_array((C, C), 1.0 / math.sqrt(C))
        # context keys/values never change, precompute per layer
        self._ctx_kv = [(self.context @ ca[1], self.context @ ca[2]) for _, ca, _ in self.blocks]
        self._scale = 1.0 / math.sqrt(C)

    @property
    def slot_ids(self) -> list[SlotId]:
        return [SlotId(l, s) for l in range(self.dims.layers) for s in Submodule]

    def _branch(self, layer: int, sub: Submodule, h: np.ndarray) -> np.ndarray:
        sa, ca, mlp = self.blocks[layer]
        u = _rms_norm(h)
        if sub == Submodule.SELF_ATTENTION:
            wq, wk, wv, wo = sa
            att = _softmax((u @ wq) @ (u @ wk).T * self._scale)
            out = att @ (u @ wv) @ wo
        elif sub == Submodule.CROSS_ATTENTION:
            wq, _, _, wo = ca
            k, v = self._ctx_kv[layer]
            att = _softmax((u @ wq) @ k.T * self._scale)
            out = att @ v @ wo
        else:
            w1, w2 = mlp
            out = np.tanh(u @ w1) @ w2
        return self.gain * out

    def _check(self, x) -> np.ndarray:
        x = as_tensor(x)
        want = (self.dims.tokens, self.dims.channels)
        if x.shape != want:
            raise ShapeMismatchError(f"denoiser input has shape {x.shape}, expected {want}")
        return x.data

    def _run(self, x, t: float, hook: Hook | None, provide: Provider | None) -> FeatureTensor:
        h = self._check(x) + time_embedding(t, self.dims.channels)
        for layer in range(self.dims.layers):
            for sub in Submodule:
                slot = SlotId(layer, sub)
                if provide is not None:
                    feat = provide(slot).data
                else:
                    feat = self._branch(layer, sub, h)
                    if hook is not None:
                        hook(slot, FeatureTensor.wrap(feat))
                h = h + feat
        return FeatureTensor.wrap(_rms_norm(h) @ self.w_out)

    def forward(self, x, t: float, hook: Hook | None = None) -> FeatureTensor:
        """Full evaluation; ``hook(slot, feature)`` sees every branch output in order."""
        return self._run(x, t, hook, None)

    def forward_cached(self, x, t: float, provide: Provider) -> FeatureTensor:
        """Evaluation with every branch output supplied by ``provide(slot)``.

        Only the residual adds, the time embedding and the output head run.
        """
        return self._run(x, t, None, provide)


def denoiser_forward(model: ToyDenoiser, x, t: float, hooks: Hook | None = None) -> FeatureTensor:
    return model.forward(x, t, hooks)


@lru_cache(maxsize=8)
def cached_model(seed: int = 42, dims: DenoiserDims = DenoiserDims()) -> ToyDenoiser:
    """Weight generation is pure Python and takes about a second; share instances."""
    return ToyDenoiser(seed, dims)
