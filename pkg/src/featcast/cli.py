"""Command-line experiments: single runs, ablation grids, bound checks, PCA export.

Exit codes: 0 success, 1 runtime failure (or a failed bound check), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analytic import AnalyticTrajectory
from .denoiser import DenoiserDims, cached_model
from .forecast import FORMS, MAX_ORDER
from .metrics import divergence_report, verify_error_bound
from .pca import TrajectoryMatrix, derivative_trajectory, pca_project, projections_csv
from .sampler import SamplerConfig, plain_sample, sample
from .schedule import build_uniform
from .trajectory_io import TrajectoryFormatError, TrajectoryRecorder, read_trajectory, write_trajectory

logger = logging.getLogger("featcast")


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _float_list(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=int, default=50, help="sampler steps T (default 50)")
    p.add_argument("--seed", type=int, default=42, help="seed of the initial state (default 42)")
    p.add_argument("--model-seed", type=int, default=42, help="seed of the network weights (default 42)")
    p.add_argument("--layers", type=int, default=8)
    p.add_argument("--tokens", type=int, default=16)
    p.add_argument("--channels", type=int, default=64)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--tail-dense", type=int, default=0, help="final steps forced to full activation")
    p.add_argument("--form", choices=FORMS, default="taylor", help="forecast expansion (default taylor)")


def _dims(args) -> DenoiserDims:
    return DenoiserDims(args.layers, args.tokens, args.channels, args.hidden)


def _check_common(args) -> None:
    if args.steps < 1:
        raise ValueError("--steps must be >= 1")
    order = getattr(args, "order", 0)
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"--order must be in [0, {MAX_ORDER}]")


def run_report(args):
    """One accelerated run plus its all-full reference; returns the report."""
    _check_common(args)
    model = cached_model(args.model_seed, _dims(args))
    config = SamplerConfig(total_steps=args.steps, seed=args.seed)
    sched = build_uniform(args.steps, args.interval, args.tail_dense)
    out, report = sample(
        config, model, sched, order_m=args.order, form=args.form, diagnostic=args.diagnostic
    )
    report.divergence = divergence_report(out, plain_sample(config, model))
    report.config["cli"] = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return report


def cmd_run(args) -> int:
    report = run_report(args)
    _emit(report.dumps(), args.output)
    return 0


ABLATION_COLUMNS = [
    "N", "O", "full_steps", "flops_total", "prediction_overhead",
    "speedup", "theoretical_speedup", "l2", "max_abs", "psnr_like",
]


def _ablation_cell(params: tuple) -> list:
    n, o, steps, seed, model_seed, dims, tail, form = params
    model = cached_model(model_seed, dims)
    config = SamplerConfig(total_steps=steps, seed=seed)
    out, rep = sample(config, model, build_uniform(steps, n, tail), order_m=o, form=form)
    ref = _reference(config, model_seed, dims)
    div = divergence_report(out, ref)
    return [
        n, o, rep.full_steps, rep.flops["total"], rep.flops["prediction_overhead"],
        rep.speedup, rep.theoretical_speedup, div["l2"], div["max_abs"], div["psnr_like"],
    ]


_REFS: dict = {}


def _reference(config, model_seed, dims):
    key = (config, model_seed, dims)
    if key not in _REFS:
        _REFS[key] = plain_sample(config, cached_model(model_seed, dims))
    return _REFS[key]


def ablation_rows(intervals, orders, *, steps=50, seed=42, model_seed=42, dims=DenoiserDims(),
                  tail_dense=0, form="taylor", jobs=1) -> list[list]:
    """Grid rows ordered N-major; identical for any ``jobs``."""
    cells = [(n, o, steps, seed, model_seed, dims, tail_dense, form) for n in intervals for o in orders]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_ablation_cell, cells))
    return [_ablation_cell(c) for c in cells]


def rows_to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def cmd_ablate(args) -> int:
    _check_common(args)
    if any(n < 1 for n in args.intervals) or any(not 0 <= o <= MAX_ORDER for o in args.orders):
        raise ValueError("intervals must be >= 1 and orders within [0, 6]")
    rows = ablation_rows(
        args.intervals, args.orders, steps=args.steps, seed=args.seed, model_seed=args.model_seed,
        dims=_dims(args), tail_dense=args.tail_dense, form=args.form, jobs=args.jobs,
    )
    _emit(rows_to_csv(ABLATION_COLUMNS, rows), args.output)
    return 0


BOUND_COLUMNS = ["kind", "N", "m", "k", "empirical_error", "bound_value", "ratio", "satisfied"]


def bound_trajectory(kind: str, components: int, degree: int, seed: int) -> AnalyticTrajectory:
    if kind == "sine":
        phases = 2 * np.pi * np.arange(components) / components
        return AnalyticTrajectory.sinusoid(phase=phases, shape=(components,))
    return AnalyticTrajectory.random_polynomial(degree, (components,), np.random.default_rng(seed))


def bound_rows(kind, intervals, orders, fractions, *, components=16, degree=3, seed=0, anchor=0.0):
    traj = bound_trajectory(kind, components, degree, seed)
    rows = []
    for n in intervals:
        for m in orders:
            for f in fractions:
                k = f * n
                r = verify_error_bound(traj, n, m, k, anchor)
                rows.append([kind, n, m, k, r.empirical_error, r.bound_value, r.ratio, int(r.satisfied)])
    return rows


def cmd_verify_bounds(args) -> int:
    if any(not 0 < f < 1 for f in args.fractions):
        raise ValueError("--fractions must lie strictly between 0 and 1 (k < N)")
    rows = bound_rows(
        args.kind, args.intervals, args.orders, args.fractions,
        components=args.components, degree=args.degree, seed=args.seed, anchor=args.anchor,
    )
    _emit(rows_to_csv(BOUND_COLUMNS, rows), args.output)
    failed = sum(1 for r in rows if not r[-1])
    if failed:
        print(f"{failed} of {len(rows)} cells violate the bound", file=sys.stderr)
        return 1
    return 0


def cmd_record(args) -> int:
    _check_common(args)
    model = cached_model(args.model_seed, _dims(args))
    config = SamplerConfig(total_steps=args.steps, seed=args.seed)
    rec = TrajectoryRecorder()
    sample(config, model, build_uniform(args.steps, args.interval, args.tail_dense),
           order_m=args.order, form=args.form, recorder=rec)
    traj = rec.to_trajectory()
    write_trajectory(args.output, traj.slots, traj.timesteps, traj.tensors)
    return 0


def pca_tables(path, order: int, components: int, interval: float = 1, slot: str | None = None,
               global_fit: bool = False) -> dict[str, str]:
    """CSV text keyed by slot name (or ``"global"``)."""
    traj = read_trajectory(path)
    n_steps = len(traj.timesteps)
    if global_fit:
        mats = {"global": np.concatenate([t.reshape(n_steps, -1) for t in traj.tensors], axis=1)}
    else:
        names = [str(s) for s in traj.slots]
        wanted = names if slot is None else [slot]
        for w in wanted:
            if w not in names:
                raise ValueError(f"slot {w} not in trajectory (have {', '.join(names)})")
        mats = {w: traj.tensors[names.index(w)].reshape(n_steps, -1) for w in wanted}
    out = {}
    for name, rows in mats.items():
        tm = derivative_trajectory(TrajectoryMatrix(rows, 0, traj.timesteps), order, interval)
        res = pca_project(tm, components)
        out[name] = projections_csv(res, tm.times)
    return out


def cmd_pca(args) -> int:
    tables = pca_tables(args.input, args.order, args.components, args.interval, args.slot, args.global_fit)
    if len(tables) == 1:
        _emit(next(iter(tables.values())), args.output)
    else:
        if not args.output_dir:
            raise ValueError("several slots selected: pass --output-dir, --slot or --global")
        d = Path(args.output_dir)
        d.mkdir(parents=True, exist_ok=True)
        for name, text in tables.items():
            (d / f"{name}.csv").write_text(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="featcast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one accelerated run, report as JSON")
    _add_model_args(p)
    p.add_argument("--interval", type=int, default=3, help="activation interval N (default 3)")
    p.add_argument("--order", type=int, default=2, help="expansion order O (default 2)")
    p.add_argument("--diagnostic", action="store_true", help="shadow full runs for per-step errors")
    p.add_argument("--output", help="report path (default stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablate", help="grid over intervals and orders, CSV")
    _add_model_args(p)
    p.add_argument("--intervals", type=_int_list, default=list(range(1, 8)), help="e.g. 1-7 or 3,5")
    p.add_argument("--orders", type=_int_list, default=list(range(0, 5)), help="e.g. 0-4")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--output", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("verify-bounds", help="check the forecast error bound on analytic trajectories")
    p.add_argument("--kind", choices=("sine", "polynomial"), default="sine")
    p.add_argument("--intervals", type=_float_list, default=[0.5, 0.25, 0.1], help="N in trajectory time")
    p.add_argument("--orders", type=_int_list, default=[1, 2, 3])
    p.add_argument("--fractions", type=_float_list, default=[0.2, 0.4, 0.6, 0.8], help="k as a fraction of N")
    p.add_argument("--components", type=int, default=16)
    p.add_argument("--degree", type=int, default=3, help="polynomial degree")
    p.add_argument("--seed", type=int, default=0, help="polynomial coefficient seed")
    p.add_argument("--anchor", type=float, default=0.0, help="anchor time t")
    p.add_argument("--output", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("record", help="record branch outputs at full steps to a trajectory file")
    _add_model_args(p)
    p.add_argument("--interval", type=int, default=1)
    p.add_argument("--order", type=int, default=0)
    p.add_argument("--output", required=True, help="trajectory file path")
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("pca", help="PCA projections of a recorded trajectory, CSV")
    p.add_argument("--input", required=True, help="trajectory file")
    p.add_argument("--order", type=int, default=0, help="finite-difference order 0-4")
    p.add_argument("--components", type=int, default=2)
    p.add_argument("--interval", type=float, default=1.0, help="row spacing used to scale differences")
    p.add_argument("--slot", help="slot name such as L0.sa (default: every slot)")
    p.add_argument("--global", dest="global_fit", action="store_true", help="one fit over all slots")
    p.add_argument("--output", help="CSV path for a single table (default stdout)")
    p.add_argument("--output-dir", help="directory for per-slot tables")
    p.set_defaults(func=cmd_pca)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, TrajectoryFormatError) as exc:
        print(f"featcast {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
