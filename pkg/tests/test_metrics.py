import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from featcast.analytic import AnalyticTrajectory
from featcast.denoiser import DenoiserDims
from featcast.metrics import (
    PSNR_CAP,
    count_flops,
    difference_error,
    divergence_report,
    estimate_derivative_sup,
    verify_error_bound,
)
from featcast.schedule import build_uniform, theoretical_speedup
from featcast.tensor import ShapeMismatchError

DIMS = DenoiserDims()


def test_divergence_identical():
    r = divergence_report([1.0, 2.0], [1.0, 2.0])
    assert r == {"l2": 0.0, "max_abs": 0.0, "psnr_like": PSNR_CAP}


def test_divergence_example():
    r = divergence_report([1.0, 0.0], [1.0, 1.0])
    assert r["l2"] == 1.0 and r["max_abs"] == 1.0
    assert r["psnr_like"] == pytest.approx(20 * math.log10(1 / math.sqrt(0.5)))


def test_divergence_matches_scalar_loop(rng):
    a, b = rng.normal(size=37), rng.normal(size=37)
    r = divergence_report(a, b)
    assert r["l2"] == pytest.approx(math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b))), rel=1e-12)
    assert r["max_abs"] == max(abs(x - y) for x, y in zip(a, b))


def test_divergence_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        divergence_report([1.0], [1.0, 2.0])


def test_flops_all_full():
    ledger = count_flops(DIMS, build_uniform(50, 1), 3)
    assert ledger.total_prediction_overhead == 0
    assert ledger.speedup == 1.0


def test_flops_speedup_ranges():
    assert 4.5 <= count_flops(DIMS, build_uniform(50, 5), 1).speedup <= 5.0
    assert 2.5 <= count_flops(DIMS, build_uniform(50, 3), 2).speedup <= 3.0


def test_prediction_overhead_per_slot():
    ledger = count_flops(DIMS, build_uniform(7, 3), 2)
    elems = DIMS.tokens * DIMS.channels
    # steps 1,2 follow one activation (m_eff 0); steps 4,5 follow two (m_eff 1)
    assert ledger.prediction_overhead == [0, 0, 0, 0, DIMS.slots * elems, DIMS.slots * elems, 0]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.integers(1, 8), st.integers(0, 6), st.data())
def test_speedup_never_exceeds_theoretical(total, n, m, data):
    sched = build_uniform(total, n, data.draw(st.integers(0, total - 1)))
    assert count_flops(DIMS, sched, m).speedup <= theoretical_speedup(sched)


def multi_sine(components=16):
    return AnalyticTrajectory.sinusoid(phase=2 * np.pi * np.arange(components) / components, shape=(components,))


@pytest.mark.parametrize("n", [0.5, 0.25, 0.1])
@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("frac", [0.2, 0.5, 0.8])
def test_bound_satisfied_on_sines(n, m, frac):
    r = verify_error_bound(multi_sine(), n, m, frac * n)
    assert r.satisfied, (r.empirical_error, r.bound_value)
    assert r.bound_value >= 0 and r.estimate.m_sup >= 0


def test_bound_single_sine_example():
    r = verify_error_bound(AnalyticTrajectory.sinusoid(), 0.5, 2, 0.25)
    assert r.satisfied
    assert r.estimate.m_sup <= 1.0


@pytest.mark.parametrize("degree", [0, 1, 2, 3])
def test_bound_satisfied_on_polynomials(degree, rng):
    traj = AnalyticTrajectory.random_polynomial(degree, (8,), rng)
    for m in (1, 2, 3):
        assert verify_error_bound(traj, 0.25, m, 0.1).satisfied


def test_polynomial_low_degree_is_exact():
    traj = AnalyticTrajectory.polynomial([[1.0, 2.0], [-3.0, 0.5]], shape=(2,))
    r = verify_error_bound(traj, 0.5, 1, 0.3)
    assert r.empirical_error <= 1e-12 and r.satisfied


@pytest.mark.parametrize("n", [0.5, 0.25, 0.1])
def test_error_decreases_with_order_on_sines(n):
    errs = [verify_error_bound(multi_sine(), n, m, 0.5 * n).empirical_error for m in (0, 1, 2)]
    assert errs[2] <= errs[1] <= errs[0]


def test_difference_error_first_order():
    traj = multi_sine()
    e1, e2 = difference_error(traj, 0.0, 0.1, 1), difference_error(traj, 0.0, 0.05, 1)
    assert 1.8 < e1 / e2 < 2.2


def test_estimated_sup_is_flagged():
    ts = np.linspace(0, 1, 101)
    est = estimate_derivative_sup(np.sin(ts)[:, None], 1, ts[1] - ts[0])
    assert est["estimate"] is True
    assert est["value"] == pytest.approx(1.0, abs=0.01)
