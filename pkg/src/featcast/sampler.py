"""Deterministic Euler-style sampling loop with feature forecasting."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .denoiser import ToyDenoiser
from .forecast import ScheduleError, SlotId, TaylorCache
from .metrics import count_flops
from .rng import Xoshiro256StarStar
from .schedule import ActivationSchedule, build_uniform, theoretical_speedup
from .tensor import FeatureTensor, l2_distance
from .trajectory_io import RunReport


@dataclass(frozen=True)
class SamplerConfig:
    """Update ``x <- x - sigma(t) * (x - D(x, t)) * dt`` over ``t = 1 - s/T``.

    ``sigma`` falls linearly from ``sigma_max`` at t=1 to ``sigma_min`` at t=0.
    The initial state is a standard normal draw from ``seed``.
    """

    total_steps: int = 50
    seed: int = 42
    sigma_max: float = 2.0
    sigma_min: float = 0.5

    def times(self) -> np.ndarray:
        return 1.0 - np.arange(self.total_steps) / self.total_steps

    def sigma(self, t: float) -> float:
        return self.sigma_min + (self.sigma_max - self.sigma_min) * t

    def initial_state(self, shape) -> FeatureTensor:
        return FeatureTensor.wrap(Xoshiro256StarStar(self.seed).normal_array(tuple(shape)))


def make_caches(model: ToyDenoiser, order_m: int, interval_n: int) -> dict[SlotId, TaylorCache]:
    return {slot: TaylorCache(order_m, interval_n) for slot in model.slot_ids}


def plain_sample(config: SamplerConfig, model: ToyDenoiser) -> FeatureTensor:
    """Reference run: every step evaluates the network, nothing is cached."""
    x = config.initial_state((model.dims.tokens, model.dims.channels)).data
    dt = 1.0 / config.total_steps
    for t in config.times():
        out = model.forward(x, float(t)).data
        x = x - config.sigma(t) * (x - out) * dt
    return FeatureTensor.wrap(x)


def sample(
    config: SamplerConfig,
    model: ToyDenoiser,
    schedule: ActivationSchedule,
    caches: dict[SlotId, TaylorCache] | None = None,
    *,
    order_m: int = 0,
    form: str = "taylor",
    diagnostic: bool = False,
    recorder=None,
) -> tuple[FeatureTensor, RunReport]:
    """Run the sampler, forecasting branch outputs on PREDICT steps.

    ``caches`` defaults to fresh caches of ``order_m``. With ``diagnostic``
    every PREDICT step also runs the network on the same input and records,
    per slot, the l2 distance between forecast and true branch output.
    ``recorder(step, t, slot, feature)`` is called for every freshly computed
    branch output.
    """
    if schedule.total_steps != config.total_steps:
        raise ScheduleError(
            f"schedule has {schedule.total_steps} steps, sampler config has {config.total_steps}"
        )
    schedule.validate()
    if caches is None:
        caches = make_caches(model, order_m, schedule.interval_n)
    missing = set(model.slot_ids) - set(caches)
    if missing:
        raise ScheduleError(f"no cache for slots {sorted(str(s) for s in missing)}")
    orders = {c.order_m for c in caches.values()}
    order_m = max(orders)

    x = config.initial_state((model.dims.tokens, model.dims.channels)).data
    dt = 1.0 / config.total_steps
    errors: dict[str, list] = {str(s): [] for s in model.slot_ids} if diagnostic else {}

    for step, (t, d) in enumerate(zip(config.times(), schedule.decisions)):
        t = float(t)
        if d.full:

            def hook(slot, feat, t=t, step=step):
                caches[slot].update(feat, t)
                if recorder is not None:
                    recorder(step, t, slot, feat)

            out = model.forward(x, t, hook)
        else:
            preds = {}

            def provide(slot, k=d.offset_k):
                preds[slot] = caches[slot].predict(k, form)
                return preds[slot]

            out = model.forward_cached(x, t, provide)
            if diagnostic:

                def shadow(slot, feat, step=step):
                    errors[str(slot)].append([step, l2_distance(preds[slot], feat)])

                model.forward(x, t, shadow)
        x = x - config.sigma(t) * (x - out.data) * dt

    ledger = count_flops(model.dims, schedule, order_m)
    report = RunReport(
        config={
            "sampler": asdict(config),
            "model_seed": model.seed,
            "dims": asdict(model.dims),
            "interval_n": schedule.interval_n,
            "order_m": order_m,
            "tail_dense": schedule.tail_dense,
            "form": form,
            "diagnostic": diagnostic,
        },
        trace=schedule.trace(),
        full_steps=schedule.full_steps,
        flops=ledger.totals(),
        speedup=ledger.speedup,
        theoretical_speedup=theoretical_speedup(schedule),
        prediction_errors=errors if diagnostic else None,
    )
    return FeatureTensor.wrap(x), report


def run_cell(
    interval_n: int,
    order_m: int,
    config: SamplerConfig = SamplerConfig(),
    model: ToyDenoiser | None = None,
    *,
    tail_dense: int = 0,
    form: str = "taylor",
    diagnostic: bool = False,
) -> tuple[FeatureTensor, RunReport]:
    from .denoiser import cached_model

    model = model or cached_model()
    sched = build_uniform(config.total_steps, interval_n, tail_dense)
    return sample(config, model, sched, order_m=order_m, form=form, diagnostic=diagnostic)
