"""Acceptance criteria 1-9, one or more ``test_criterion_<n>_*`` functions each.

The terminal summary prints one PASS/FAIL line per criterion (see conftest).
Time budgets are asserted alongside the numerical checks.
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from featcast.analytic import AnalyticTrajectory
from featcast.denoiser import DenoiserDims
from featcast.forecast import (
    SlotId,
    Submodule,
    TaylorCache,
    binomial_difference,
    linear_predict,
)
from featcast.metrics import count_flops, divergence_report, verify_error_bound
from featcast.pca import TrajectoryMatrix, derivative_trajectory, pca_project
from featcast.sampler import SamplerConfig, plain_sample, run_cell, sample
from featcast.schedule import build_uniform, theoretical_speedup
from featcast.trajectory_io import TrajectoryRecorder, decode_trajectory, encode_trajectory


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.2f} s, budget {self.seconds} s"


def forecast_poly(traj, t, n, m, k, form="taylor"):
    cache = TaylorCache(m, n)
    for j in range(m, -1, -1):
        cache.update(traj(t + j * n), t + j * n)
    return cache.predict(k, form).data


def polynomial_failures(form):
    """Relative forecast error per grid cell above 1e-9, over random polynomials."""
    failures = []
    for seed in range(6):
        rng = np.random.default_rng(seed)
        t0 = float(rng.uniform(-1, 1))
        for d in range(5):
            traj = AnalyticTrajectory.random_polynomial(d, (4,), rng)
            for m in range(d, 5):
                for n in range(2, 8):
                    for k in range(1, n):
                        truth = traj(t0 - k)
                        err = np.linalg.norm(forecast_poly(traj, t0, n, m, k, form) - truth)
                        rel = err / max(np.linalg.norm(truth), 1e-300)
                        if rel > 1e-9:
                            failures.append((d, m, n, k, rel))
    return failures


# 1 -------------------------------------------------------------------------


def test_criterion_1_polynomial_exactness():
    """Default forecast, degree d <= m, every N in 2..7 and k in 1..N-1."""
    with Budget(5):
        failures = polynomial_failures("taylor")
    if failures:
        degrees = sorted({f[0] for f in failures})
        worst = max(failures, key=lambda f: f[-1])
        pytest.fail(
            f"{len(failures)} cells above 1e-9 relative error, degrees {degrees}; "
            f"worst d={worst[0]} m={worst[1]} N={worst[2]} k={worst[3]} rel={worst[4]:.3g}"
        )


def test_interpolating_form_is_polynomial_exact():
    """Not a criterion: the interpolating expansion meets the same grid."""
    assert polynomial_failures("newton") == []


# 2 -------------------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 6).flatmap(
        lambda length: st.tuples(
            arrays(np.float64, (length, 3), elements=st.floats(-1e3, 1e3)),
            st.integers(0, 6),
        )
    )
)
def test_criterion_2_oracle_equivalence(case):
    history, order = case
    cache = TaylorCache(order, 1)
    for i, row in enumerate(history):
        cache.update(row, -i)
    for i, diff in enumerate(d.data for d in cache.diffs):
        want = binomial_difference(list(history[-(i + 1):]), i).data
        scale = max(1.0, np.abs(history[-(i + 1):]).max() * 2**i)
        assert np.max(np.abs(diff - want)) <= 1e-12 * scale


def test_criterion_2_budget():
    rng = np.random.default_rng(0)
    with Budget(5):
        for _ in range(200):
            history = rng.normal(size=(int(rng.integers(1, 7)), 8))
            cache = TaylorCache(6, 1)
            for i, row in enumerate(history):
                cache.update(row, -i)
            for i, diff in enumerate(d.data for d in cache.diffs):
                want = binomial_difference(list(history[-(i + 1):]), i).data
                assert np.allclose(diff, want, rtol=1e-12, atol=1e-12 * 2**i)


# 3 -------------------------------------------------------------------------


def test_criterion_3_degenerate_identities():
    rng = np.random.default_rng(3)
    with Budget(1):
        for _ in range(50):
            prev, cur = rng.normal(size=(2, 5, 4))
            n = int(rng.integers(1, 8))
            k = int(rng.integers(1, n + 1))
            c0 = TaylorCache(0, n).update(prev, 1.0).update(cur, 0.0)
            assert c0.predict(k).data.tobytes() == cur.tobytes()
            c1 = TaylorCache(1, n).update(prev, 1.0).update(cur, 0.0)
            assert c1.predict(k).bitwise_equal(linear_predict(cur, prev, n, k))
            for m in range(4):
                cm = TaylorCache(m, n).update(prev, 1.0).update(cur, 0.0)
                assert cm.predict(0).data.tobytes() == cur.tobytes()


# 4 -------------------------------------------------------------------------

SINE = AnalyticTrajectory.sinusoid(phase=2 * np.pi * np.arange(64) / 64, shape=(64,))


def test_criterion_4_bound_grid():
    with Budget(10):
        cells = [
            verify_error_bound(SINE, n, m, frac * n)
            for n in (0.5, 0.25, 0.1)
            for m in (1, 2, 3)
            for frac in (0.2, 0.4, 0.6, 0.8)
        ]
    bad = [(c.empirical_error, c.bound_value) for c in cells if not c.satisfied]
    assert not bad, f"{len(bad)} of {len(cells)} cells violate the bound: {bad[:3]}"


@pytest.mark.parametrize("n", [0.5, 0.25, 0.1])
@pytest.mark.parametrize("m", [1, 2])
def test_criterion_4_offset_scaling(m, n):
    """Error at offset 2 over error at offset 1, offsets in trajectory time."""
    e1 = verify_error_bound(SINE, n, m, 1.0).empirical_error
    e2 = verify_error_bound(SINE, n, m, 2.0).empirical_error
    assert 2**m <= e2 / e1 <= 2 ** (m + 2), e2 / e1


# 5 and 6 -------------------------------------------------------------------


@pytest.fixture(scope="module")
def sweep():
    config, model = SamplerConfig(), None
    start = time.perf_counter()
    from featcast.denoiser import cached_model

    model = cached_model(42)
    ref = plain_sample(config, model)
    div = {
        (n, o): divergence_report(run_cell(n, o, config, model)[0], ref)["l2"]
        for n in range(3, 8)
        for o in range(5)
    }
    return div, time.perf_counter() - start


def test_criterion_5_ablation_ordering(sweep):
    div, elapsed = sweep
    assert elapsed < 60
    for n in range(3, 8):
        assert div[n, 3] <= div[n, 2] <= div[n, 1] <= div[n, 0], [div[n, o] for o in range(4)]
    for o in range(5):
        column = [div[n, o] for n in range(3, 8)]
        assert all(a <= b for a, b in zip(column, column[1:])), (o, column)


def test_criterion_6_saturation(sweep):
    div, _ = sweep
    for n in (3, 4, 5):
        assert abs(div[n, 4] - div[n, 3]) <= 0.1 * abs(div[n, 1] - div[n, 0])


# 7 -------------------------------------------------------------------------


def test_criterion_7_speedup_accounting():
    dims = DenoiserDims()
    with Budget(1):
        s3 = count_flops(dims, build_uniform(50, 3), 2).speedup
        s5 = count_flops(dims, build_uniform(50, 5), 2).speedup
        assert 2.5 <= s3 <= 3.0, s3
        assert 4.2 <= s5 <= 5.0, s5
        for total in (10, 50, 73):
            for n in range(1, 9):
                for tail in (0, 3):
                    sched = build_uniform(total, n, tail)
                    for m in range(7):
                        assert count_flops(dims, sched, m).speedup <= theoretical_speedup(sched)


# 8 -------------------------------------------------------------------------


def test_criterion_8_determinism():
    small = DenoiserDims(layers=4, tokens=8, channels=32, hidden=64)
    from featcast.denoiser import ToyDenoiser

    config = SamplerConfig(total_steps=20)
    with Budget(10):
        outputs = []
        for _ in range(2):
            model = ToyDenoiser(42, small)
            rec = TrajectoryRecorder()
            out, rep = sample(config, model, build_uniform(20, 3), order_m=2, recorder=rec)
            outputs.append((out.data.tobytes(), rep.dumps(), encode_trajectory(*rec.to_trajectory())))
        assert outputs[0] == outputs[1]


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.builds(SlotId, st.integers(0, 63), st.sampled_from(list(Submodule))), min_size=1, max_size=3),
    st.integers(1, 4),
    st.lists(st.integers(1, 3), max_size=3),
    st.data(),
)
def test_criterion_8_round_trip(slots, steps, shape, data):
    tensors = data.draw(arrays(np.float64, (len(slots), steps, *shape), elements=st.floats(allow_nan=False)))
    times = data.draw(arrays(np.float64, steps, elements=st.floats(-1, 1)))
    blob = encode_trajectory(slots, times, tensors)
    got = decode_trajectory(blob)
    assert got.slots == slots
    assert got.tensors.tobytes() == tensors.tobytes()
    assert encode_trajectory(*got) == blob


# 9 -------------------------------------------------------------------------


def test_criterion_9_pca_pipeline():
    rng = np.random.default_rng(9)
    with Budget(5):
        t = np.linspace(0, 1, 40)[:, None]
        line = rng.normal(size=300) + t * rng.normal(size=300)
        ev = pca_project(TrajectoryMatrix(line), 2).explained_variance
        assert ev[1] <= 1e-9 * ev[0]

        x = rng.normal(size=(10, 4))
        res = pca_project(TrajectoryMatrix(x), 4)
        recon = res.projections @ res.components.T
        assert np.max(np.abs(recon - (x - x.mean(axis=0)))) <= 1e-9

        traj = TrajectoryMatrix(rng.normal(size=(50, 12)))
        for order in range(5):
            assert derivative_trajectory(traj, order).shape[0] == 50 - order
