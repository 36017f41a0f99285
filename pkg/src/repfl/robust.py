"""Per-parameter outlier detection on a round of client updates.

Every function here works column-wise: the input is either one column of
``M`` client values or a matrix shaped ``(M, N)`` holding ``N`` columns side
by side. Columns never interact, so the matrix form is only a vectorised
loop.

Pipeline for a column: :func:`rescale` squeezes its range, :func:`repeated_median_line`
fits a line of value against rank, :func:`confidence_scores` turns residuals
into scores in ``(0, 1]`` and :func:`rectify` swaps low-score values for the
column median.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RobustConfig:
    range_threshold: float = 2.0
    confidence_threshold: float = 0.1
    lam: float = 2.0
    residual_eps: float = 1e-12
    max_rescale_iter: int = 100

    def __post_init__(self) -> None:
        if self.range_threshold <= 0:
            raise ValueError("range_threshold must be positive")
        if not 0 < self.confidence_threshold < 1:
            raise ValueError("confidence_threshold must be in (0, 1)")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.max_rescale_iter < 0:
            raise ValueError("max_rescale_iter must be >= 0")


@dataclass(frozen=True)
class RegressionLine:
    slope: np.ndarray | float
    intercept: np.ndarray | float
    ranks: np.ndarray


def _as_matrix(column: np.ndarray) -> tuple[np.ndarray, bool]:
    arr = np.asarray(column, dtype=float)
    if arr.ndim == 1:
        return arr[:, None], True
    if arr.ndim != 2:
        raise ValueError("expected a column (M,) or a matrix (M, N)")
    return arr, False


def _out(arr: np.ndarray, squeeze: bool) -> np.ndarray:
    return arr[:, 0] if squeeze else arr


def rescale(column: np.ndarray, cfg: RobustConfig = RobustConfig()) -> np.ndarray:
    """Shrink each column's range below ``cfg.range_threshold``.

    While the range exceeds the threshold, the current maximum drops by the
    column's population std and the current minimum rises by it. Columns still
    too wide after ``max_rescale_iter`` passes are clamped to
    ``median +/- threshold / 2``.
    """
    w, squeeze = _as_matrix(column)
    w = w.copy()
    if w.shape[0] < 2:
        raise ValueError("rescale needs at least two clients")
    for _ in range(cfg.max_rescale_iter):
        active = np.flatnonzero(np.ptp(w, axis=0) > cfg.range_threshold)
        if active.size == 0:
            break
        sub = w[:, active]
        sigma = sub.std(axis=0)
        hi = sub.argmax(axis=0)
        lo = sub.argmin(axis=0)
        w[hi, active] -= sigma
        w[lo, active] += sigma
    else:
        wide = np.ptp(w, axis=0) > cfg.range_threshold
        if wide.any():
            med = np.median(w[:, wide], axis=0)
            half = cfg.range_threshold / 2
            w[:, wide] = np.clip(w[:, wide], med - half, med + half)
    return _out(w, squeeze)


def ranks(column: np.ndarray) -> np.ndarray:
    """1-based ascending ranks, ties broken by client index."""
    w, squeeze = _as_matrix(column)
    order = np.argsort(w, axis=0, kind="stable")
    r = np.empty_like(order)
    np.put_along_axis(r, order, np.arange(1, w.shape[0] + 1)[:, None], axis=0)
    return _out(r, squeeze)


def _offdiag_index(m: int) -> np.ndarray:
    # row i lists every j != i
    return np.array([[j for j in range(m) if j != i] for i in range(m)], dtype=int)


def repeated_median_fit(x: np.ndarray, y: np.ndarray, chunk: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Siegel repeated-median slope and intercept of ``y`` on ``x``, column by column.

    ``x`` and ``y`` are ``(M, N)``; x values within a column must be distinct.
    """
    m, n = y.shape
    others = _offdiag_index(m)
    slope = np.empty(n)
    for start in range(0, n, chunk):
        sl = slice(start, start + chunk)
        ys, xs = y[:, sl], x[:, sl]
        dy = ys[others] - ys[:, None, :]
        dx = xs[others] - xs[:, None, :]
        slope[sl] = np.median(np.median(dy / dx, axis=1), axis=0)
    return slope, np.median(y - slope * x, axis=0)


def repeated_median_line(column: np.ndarray, chunk: int = 4096) -> RegressionLine:
    """Repeated-median fit of value against rank."""
    w, squeeze = _as_matrix(column)
    if w.shape[0] < 2:
        raise ValueError("repeated median needs at least two clients")
    x = ranks(w)
    slope, intercept = repeated_median_fit(x.astype(float), w, chunk)
    if squeeze:
        return RegressionLine(float(slope[0]), float(intercept[0]), x[:, 0])
    return RegressionLine(slope, intercept, x)


def leverage(m: int) -> np.ndarray:
    """Hat-matrix diagonal for the design ``[1, x]`` with ``x = 1..m``, indexed by rank - 1."""
    x = np.arange(1, m + 1, dtype=float)
    design = np.column_stack([np.ones(m), x])
    hat = design @ np.linalg.solve(design.T @ design, design.T)
    return np.diag(hat).copy()


def confidence_scores(
    column: np.ndarray, line: RegressionLine, cfg: RobustConfig = RobustConfig()
) -> np.ndarray:
    w, squeeze = _as_matrix(column)
    m, n = w.shape
    if m < 3:
        raise ValueError("confidence scores need at least three clients")
    x = np.asarray(line.ranks, dtype=float).reshape(m, -1)
    slope = np.broadcast_to(np.asarray(line.slope, dtype=float), (n,))
    intercept = np.broadcast_to(np.asarray(line.intercept, dtype=float), (n,))

    res = w - slope * x - intercept
    scale = np.median(np.abs(res), axis=0)
    perfect = scale < cfg.residual_eps
    safe = np.where(perfect, 1.0, scale)
    e = 25.0 * (m - 1) * res / (37.0 * (m + 4) * safe)

    root = np.sqrt(1.0 - leverage(m))[x.astype(int) - 1]
    studentized = np.abs(e) / root
    bound = cfg.lam * np.sqrt(2.0 / m)
    # psi(z)/z is 1 inside the clamp and bound/|z| outside
    with np.errstate(divide="ignore", over="ignore"):
        scores = np.where(studentized <= bound, 1.0, bound / studentized)
    scores[:, perfect] = 1.0
    return _out(scores, squeeze)


def rectify(column: np.ndarray, scores: np.ndarray, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Replace values scoring ``<= threshold`` by the column median.

    Returns the new column and a boolean mask that is ``True`` for accepted
    (positive) observations.
    """
    w, squeeze = _as_matrix(column)
    s, _ = _as_matrix(scores)
    if s.shape != w.shape:
        raise ValueError("scores and column differ in shape")
    accepted = s > threshold
    med = np.median(w, axis=0)
    out = np.where(accepted, w, med)
    return _out(out, squeeze), _out(accepted, squeeze)
