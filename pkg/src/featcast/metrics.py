"""Run quality, FLOP accounting and empirical checks of the forecast error bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .analytic import AnalyticTrajectory
from .forecast import MAX_ORDER, TaylorCache, binomial_difference
from .schedule import ActivationSchedule
from .tensor import as_tensor, check_same_shape, l2_distance

PSNR_CAP = 300.0


def divergence_report(accelerated_final, full_final) -> dict[str, float]:
    """Distance of an accelerated run's output from the all-full reference.

    ``psnr_like`` uses the reference's max-abs entry as the signal range and
    is capped at 300 dB (identical outputs would otherwise be infinite).
    """
    acc, ref = as_tensor(accelerated_final), as_tensor(full_final)
    check_same_shape(acc, ref, "divergence operands")
    diff = acc.data - ref.data
    l2 = l2_distance(acc, ref)
    max_abs = float(np.max(np.abs(diff))) if diff.size else 0.0
    rmse = math.sqrt(float(np.mean(diff * diff))) if diff.size else 0.0
    rng = float(np.max(np.abs(ref.data))) if ref.size else 0.0
    if rmse == 0.0:
        psnr = PSNR_CAP
    elif rng == 0.0:
        psnr = -PSNR_CAP
    else:
        psnr = min(PSNR_CAP, 20.0 * math.log10(rng / rmse))
    return {"l2": l2, "max_abs": max_abs, "psnr_like": psnr}


# -- FLOPs ------------------------------------------------------------------


def attention_macs(tokens: int, channels: int) -> int:
    return 2 * tokens * tokens * channels + 4 * tokens * channels * channels


def mlp_macs(tokens: int, channels: int, hidden: int) -> int:
    return 2 * tokens * channels * hidden


def full_step_macs(dims) -> int:
    per_layer = 2 * attention_macs(dims.tokens, dims.channels) + mlp_macs(
        dims.tokens, dims.channels, dims.hidden
    )
    return dims.layers * per_layer


@dataclass
class FlopLedger:
    """Per-step multiply-accumulate counts, full network vs forecasting."""

    full_compute: list[int] = field(default_factory=list)
    prediction_overhead: list[int] = field(default_factory=list)
    full_only_total: int = 0

    @property
    def total_full_compute(self) -> int:
        return sum(self.full_compute)

    @property
    def total_prediction_overhead(self) -> int:
        return sum(self.prediction_overhead)

    @property
    def total(self) -> int:
        return self.total_full_compute + self.total_prediction_overhead

    @property
    def speedup(self) -> float:
        return self.full_only_total / self.total

    def totals(self) -> dict:
        return {
            "full_compute": self.total_full_compute,
            "prediction_overhead": self.total_prediction_overhead,
            "total": self.total,
            "full_only_total": self.full_only_total,
            "speedup": self.speedup,
        }


def count_flops(dims, schedule: ActivationSchedule, order_m: int) -> FlopLedger:
    """Cost model: every slot forecast costs ``m_eff`` MACs per element.

    ``m_eff`` follows the same warmup truncation as the caches, so the first
    predictions after one or two activations are cheaper.
    """
    per_full = full_step_macs(dims)
    per_slot_elems = dims.tokens * dims.channels
    ledger = FlopLedger(full_only_total=per_full * schedule.total_steps)
    seen = 0
    for d in schedule.decisions:
        if d.full:
            seen += 1
            ledger.full_compute.append(per_full)
            ledger.prediction_overhead.append(0)
        else:
            m_eff = min(order_m, max(seen - 1, 0))
            ledger.full_compute.append(0)
            ledger.prediction_overhead.append(dims.slots * m_eff * per_slot_elems)
    return ledger


# -- error bound ------------------------------------------------------------


@dataclass
class ErrorBoundEstimate:
    """Right-hand side of the forecast error bound for one (N, m, k) cell.

    ``m_sup`` is the sup-norm of the (m+1)-th derivative on ``[t-k, t]``;
    ``c_consts[i-1]`` is the fitted finite-difference constant for order i.
    The remainder term is never materialized on its own.
    """

    m_sup: float
    c_consts: list[float]
    bound_value: float
    remainder_term: float
    difference_terms: list[float]


@dataclass
class BoundCheck:
    empirical_error: float
    bound_value: float
    satisfied: bool
    estimate: ErrorBoundEstimate

    @property
    def ratio(self) -> float:
        if self.bound_value == 0.0:
            return 0.0 if self.empirical_error == 0.0 else math.inf
        return self.empirical_error / self.bound_value


def _fresh_cache(traj: AnalyticTrajectory, t: float, n: float, m: int) -> TaylorCache:
    cache = TaylorCache(m, n)
    for j in range(m, -1, -1):
        cache.update(traj(t + j * n), t + j * n)
    return cache


def derivative_sup(traj: AnalyticTrajectory, order: int, lo: float, hi: float, spacing: float = 1e-3) -> float:
    """Dense-grid max of ``||F^(order)||`` over ``[lo, hi]``, endpoints included."""
    count = max(2, int(math.ceil((hi - lo) / spacing)) + 1)
    return max(float(np.linalg.norm(traj(float(x), order))) for x in np.linspace(lo, hi, count))


def difference_error(traj: AnalyticTrajectory, t: float, n: float, i: int) -> float:
    """``||diff_i / n**i - F^(i)(t)||`` with exact samples at spacing ``n``."""
    history = [traj(t + j * n) for j in range(i, -1, -1)]
    approx = binomial_difference(history, i).data / n**i
    return float(np.linalg.norm(approx - traj(t, i)))


def fit_difference_constants(traj: AnalyticTrajectory, t: float, n: float, m: int, probes: int = 8) -> list[float]:
    """Per-order constants ``C_i`` for the finite-difference part of the bound.

    For each order the difference error is probed at spacings ``n, n/2, ...``
    and fitted by least squares to ``a_i * spacing`` (one-sided differences
    are first-order accurate). ``C_i = n**(i-1) * max(a_i * n, measured(n))``:
    the fit is floored by the direct measurement at the working spacing, so
    the constant is an upper envelope rather than an average.
    """
    consts = []
    spacings = np.array([n / 2**j for j in range(probes)])
    for i in range(1, m + 1):
        errs = np.array([difference_error(traj, t, float(h), i) for h in spacings])
        slope = float(spacings @ errs / (spacings @ spacings))
        consts.append(n ** (i - 1) * max(slope * n, float(errs[0])))
    return consts


def error_bound(traj: AnalyticTrajectory, n: float, m: int, k: float, t: float = 0.0) -> ErrorBoundEstimate:
    m_sup = derivative_sup(traj, m + 1, t - abs(k), t)
    remainder = m_sup / factorial(m + 1) * abs(k) ** (m + 1)
    consts = fit_difference_constants(traj, t, n, m)
    terms = [c / (factorial(i) * abs(n) ** (i - 1)) * abs(k) ** i for i, c in enumerate(consts, 1)]
    return ErrorBoundEstimate(m_sup, consts, remainder + sum(terms), remainder, terms)


def verify_error_bound(
    traj: AnalyticTrajectory, n: float, m: int, k: float, t: float = 0.0
) -> BoundCheck:
    """Compare the actual forecast error against the bound.

    Exact samples at ``t, t+n, ..., t+m*n`` feed a cache of order ``m`` and
    the feature is forecast at ``t-k``. ``n`` and ``k`` share the trajectory's
    time unit. Besides the relative ``1e-9`` slack, errors below ``1e-12``
    times the feature scale count as rounding and always pass.
    """
    if m > MAX_ORDER:
        raise ValueError(f"order {m} above the supported maximum {MAX_ORDER}")
    pred = _fresh_cache(traj, t, n, m).predict(k)
    truth = traj(t - k)
    empirical = float(np.linalg.norm(pred.data - truth))
    est = error_bound(traj, n, m, k, t)
    floor = 1e-12 * max(1.0, float(np.linalg.norm(truth)))
    ok = empirical <= est.bound_value * (1 + 1e-9) or empirical <= floor
    return BoundCheck(empirical, est.bound_value, ok, est)


def estimate_derivative_sup(samples: np.ndarray, order: int, spacing: float) -> dict:
    """Rough ``sup ||F^(order)||`` from a densely recorded trajectory.

    ``samples`` is ``[steps, ...]`` at uniform ``spacing``. For features with no
    closed form this is the best available estimate and is flagged as such;
    it is not a rigorous bound.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[0] <= order:
        raise ValueError(f"need more than {order} samples, got {samples.shape[0]}")
    d = np.diff(samples, n=order, axis=0) / spacing**order
    norms = np.linalg.norm(d.reshape(d.shape[0], -1), axis=1)
    return {"value": float(norms.max()), "estimate": True, "order": order}
