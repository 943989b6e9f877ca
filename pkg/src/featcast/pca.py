"""PCA of feature trajectories and of their finite-difference derivatives."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .rng import Xoshiro256StarStar

MAX_COLUMNS = 256
SUBSAMPLE_SEED = 42


@dataclass(frozen=True)
class TrajectoryMatrix:
    """One row per recorded timestep, one column per flattened feature entry."""

    rows: np.ndarray
    order: int = 0
    times: np.ndarray | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            rows = rows.reshape(rows.shape[0], -1)
        if rows.shape[0] < 1:
            raise ValueError("trajectory matrix needs at least one row")
        if np.isnan(rows).any():
            raise ValueError("trajectory matrix contains NaN")
        object.__setattr__(self, "rows", rows)
        if self.times is None:
            object.__setattr__(self, "times", np.arange(rows.shape[0], dtype=np.float64))
        elif len(self.times) != rows.shape[0]:
            raise ValueError("times and rows disagree in length")

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape


def derivative_trajectory(features: TrajectoryMatrix, order: int, n: float = 1) -> TrajectoryMatrix:
    """Row-wise ``order``-th forward difference scaled by ``1/n**order``.

    Row ``i`` of the result combines input rows ``i .. i+order`` and keeps the
    timestamp of row ``i``.
    """
    if features.order != 0:
        raise ValueError("derivatives are taken of raw features (order 0)")
    if order < 0:
        raise ValueError(f"order must be nonnegative, got {order}")
    if features.rows.shape[0] <= order:
        raise ValueError(
            f"order {order} derivative needs more than {order} rows, got {features.rows.shape[0]}"
        )
    if order == 0:
        return features
    d = np.diff(features.rows, n=order, axis=0) / n**order
    return TrajectoryMatrix(d, order, features.times[: d.shape[0]])


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and matching eigenvectors as
    columns. Each eigenvector's first entry above 1e-12 in magnitude is
    positive.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {a.shape}")
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    for _ in range(max_sweeps):
        # summed directly: subtracting the diagonal from the full norm cancels
        off = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))
        if off <= tol * scale or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                app, aqq = a[p, p], a[q, q]
                # below the rounding level of both diagonal entries
                if abs(apq) * 1e16 <= min(abs(app), abs(aqq)) or apq == 0.0:
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                g = np.array([[c, s], [-s, c]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    vals = np.diag(a).copy()
    idx = np.argsort(-vals, kind="stable")
    vals, v = vals[idx], v[:, idx]
    return vals, _fix_signs(v)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        nz = np.flatnonzero(np.abs(vecs[:, j]) > 1e-12)
        if nz.size and vecs[nz[0], j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vecs


def subsample_columns(n_cols: int, limit: int = MAX_COLUMNS, seed: int = SUBSAMPLE_SEED) -> np.ndarray:
    """Sorted column indices kept when ``n_cols`` exceeds ``limit``.

    Partial Fisher-Yates over ``range(n_cols)`` driven by xoshiro256**:
    swap position ``i`` with ``i + floor(u * (n_cols - i))``.
    """
    if n_cols <= limit:
        return np.arange(n_cols)
    gen = Xoshiro256StarStar(seed)
    perm = list(range(n_cols))
    for i in range(limit):
        j = i + int(gen.uniform() * (n_cols - i))
        perm[i], perm[j] = perm[j], perm[i]
    return np.sort(np.array(perm[:limit]))


@dataclass
class PcaResult:
    projections: np.ndarray  # [rows, components]
    explained_variance: np.ndarray  # [components]
    components: np.ndarray  # [cols, components], in the kept-column space
    mean: np.ndarray
    columns: np.ndarray
    total_variance: float


def pca_project(matrix: TrajectoryMatrix, components: int) -> PcaResult:
    """Project centered rows onto the leading covariance eigenvectors.

    The covariance is ``Xc.T @ Xc / (rows - 1)`` (``/ 1`` for a single row).
    When rows are fewer than columns the decomposition runs on the Gram
    matrix instead and eigenvectors are mapped back.
    """
    x = matrix.rows
    cols = subsample_columns(x.shape[1])
    x = x[:, cols]
    rows, width = x.shape
    if not 1 <= components <= min(rows, width):
        raise ValueError(f"components must be in [1, {min(rows, width)}], got {components}")
    mean = x.mean(axis=0)
    xc = x - mean
    denom = max(rows - 1, 1)
    total = float(np.sum(xc * xc)) / denom
    if width <= rows:
        vals, vecs = jacobi_eigh(xc.T @ xc / denom)
        vals = np.clip(vals[:components], 0.0, None)
        vecs = vecs[:, :components]
    else:
        gvals, gvecs = jacobi_eigh(xc @ xc.T / denom)
        vals = np.clip(gvals[:components], 0.0, None)
        vecs = np.zeros((width, components))
        for j in range(components):
            # null directions keep a zero loading vector
            if vals[j] > 0.0 and vals[j] > 1e-14 * gvals[0]:
                v = xc.T @ gvecs[:, j]
                vecs[:, j] = v / np.linalg.norm(v)
        vecs = _fix_signs(vecs)
    proj = xc @ vecs
    return PcaResult(proj, vals, vecs, mean, cols, total)


def projections_csv(result: PcaResult, times) -> str:
    """CSV text: header ``t,pc1,...`` then one row per timestep, 17 significant digits."""
    buf = io.StringIO()
    k = result.projections.shape[1]
    buf.write(",".join(["t"] + [f"pc{j + 1}" for j in range(k)]) + "\n")
    for t, row in zip(times, result.projections):
        buf.write(",".join(format(float(v), ".17g") for v in (t, *row)) + "\n")
    return buf.getvalue()
