"""Server-side aggregation rules over a round of flattened client models."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .reputation import ClientReputation, ReputationConfig, update_weights
from .robust import RobustConfig, confidence_scores, rectify, repeated_median_line, rescale


@dataclass(frozen=True)
class UpdateMatrix:
    rows: np.ndarray
    sample_counts: np.ndarray
    client_ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError("rows must be an (M, N) matrix with M >= 1")
        counts = np.asarray(self.sample_counts, dtype=float)
        if counts.shape != (rows.shape[0],) or (counts < 1).any():
            raise ValueError("need one sample count >= 1 per client")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "sample_counts", counts)
        if not self.client_ids:
            object.__setattr__(self, "client_ids", tuple(range(rows.shape[0])))

    @property
    def n_clients(self) -> int:
        return self.rows.shape[0]


def _matrix(updates) -> np.ndarray:
    return updates.rows if isinstance(updates, UpdateMatrix) else np.atleast_2d(np.asarray(updates, dtype=float))


def fedavg(updates: UpdateMatrix) -> np.ndarray:
    q = updates.sample_counts
    return (q / q.sum()) @ updates.rows


def coord_median(updates) -> np.ndarray:
    return np.median(_matrix(updates), axis=0)


def trimmed_mean(updates, beta: int) -> np.ndarray:
    w = _matrix(updates)
    m = w.shape[0]
    if beta < 0 or 2 * beta >= m:
        raise ValueError(f"trimmed mean needs 0 <= 2*beta < M (beta={beta}, M={m})")
    s = np.sort(w, axis=0)
    return s[beta : m - beta].mean(axis=0)


def residual_reweight(updates, cfg: RobustConfig = RobustConfig()) -> np.ndarray:
    """Confidence-weighted mean per coordinate, scores from the raw columns."""
    w = _matrix(updates)
    scores = confidence_scores(w, repeated_median_line(w), cfg)
    return (scores * w).sum(axis=0) / scores.sum(axis=0)


@dataclass(frozen=True)
class ReputationRound:
    """What the reputation aggregator saw and decided in one round."""

    global_params: np.ndarray
    states: list[ClientReputation]
    positive: np.ndarray
    negative: np.ndarray
    rectified: np.ndarray = field(repr=False)

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.states])


def detect(rows: np.ndarray, cfg: RobustConfig) -> tuple[np.ndarray, np.ndarray]:
    """Rescale, fit, score and rectify every column; returns ``(rectified, accepted)``."""
    scaled = rescale(rows, cfg)
    scores = confidence_scores(scaled, repeated_median_line(scaled), cfg)
    return rectify(scaled, scores, cfg.confidence_threshold)


def reputation_aggregate(
    updates,
    states: list[ClientReputation] | None,
    robust_cfg: RobustConfig,
    rep_cfg: ReputationConfig,
    t: int,
) -> ReputationRound:
    w = _matrix(updates)
    m, n = w.shape
    if m < 3:
        raise ValueError("reputation aggregation needs at least three clients")
    if states is None:
        states = [ClientReputation() for _ in range(m)]
    if len(states) != m:
        raise ValueError("one reputation state per client required")

    rectified, accepted = detect(w, robust_cfg)
    positive = accepted.sum(axis=1)
    negative = n - positive
    new_states = update_weights(
        [s.record(t, int(p), int(q), rep_cfg) for s, p, q in zip(states, positive, negative)]
    )
    weights = np.array([s.weight for s in new_states])
    return ReputationRound(weights @ rectified, new_states, positive, negative, rectified)


@dataclass(frozen=True)
class AggregatorKind:
    name: str = "reputation"
    beta: int = 1
    robust: RobustConfig = RobustConfig()
    reputation: ReputationConfig = ReputationConfig()

    NAMES = ("fedavg", "coord-median", "trimmed-mean", "residual", "reputation")

    def __post_init__(self) -> None:
        if self.name not in self.NAMES:
            raise ValueError(f"unknown aggregator {self.name!r}; choose from {', '.join(self.NAMES)}")

    def validate(self, n_clients: int) -> None:
        if self.name == "trimmed-mean" and 2 * self.beta >= n_clients:
            raise ValueError(f"trimmed mean needs 2*beta < M (beta={self.beta}, M={n_clients})")
        if self.name in ("residual", "reputation") and n_clients < 3:
            raise ValueError(f"{self.name} aggregation needs at least three clients")


def aggregate(kind: AggregatorKind, updates: UpdateMatrix, states, t: int):
    """Dispatch to one rule. Returns ``(global_vector, ReputationRound | None)``."""
    if kind.name == "fedavg":
        return fedavg(updates), None
    if kind.name == "coord-median":
        return coord_median(updates), None
    if kind.name == "trimmed-mean":
        return trimmed_mean(updates, kind.beta), None
    if kind.name == "residual":
        return residual_reweight(updates, kind.robust), None
    out = reputation_aggregate(updates, states, kind.robust, kind.reputation, t)
    return out.global_params, out
