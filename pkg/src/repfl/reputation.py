"""Subjective-logic client reputation.

A client's per-round reputation is the expected value of a Beta opinion built
from accepted (positive) and rejected (negative) parameter observations, with
rejections weighted more heavily. Per-round values are smoothed with an
exponentially decaying sliding window and min-max normalised across clients
to obtain aggregation weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class ReputationConfig:
    kappa: float = 0.3
    prior: float = 0.5
    prior_weight: float = 2.0
    decay: float = 0.5
    window: int = 10

    def __post_init__(self) -> None:
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must be in (0, 1)")
        if not 0 <= self.prior <= 1:
            raise ValueError("prior must be in [0, 1]")
        if self.prior_weight <= 0:
            raise ValueError("prior_weight must be positive")
        if self.decay <= 0:
            raise ValueError("decay must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")

    @property
    def eta(self) -> float:
        return 1.0 - self.kappa


def opinion(positive: float, negative: float, cfg: ReputationConfig = ReputationConfig()) -> tuple[float, float, float]:
    """Belief, disbelief and uncertainty from observation counts."""
    if positive < 0 or negative < 0:
        raise ValueError("observation counts must be non-negative")
    pos = cfg.kappa * positive
    neg = cfg.eta * negative
    total = pos + neg + cfg.prior_weight
    return pos / total, neg / total, cfg.prior_weight / total


def round_reputation(positive: float, negative: float, cfg: ReputationConfig = ReputationConfig()) -> float:
    if positive < 0 or negative < 0:
        raise ValueError("observation counts must be non-negative")
    pos = cfg.kappa * positive
    return (pos + cfg.prior_weight * cfg.prior) / (pos + cfg.eta * negative + cfg.prior_weight)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    positive: int
    negative: int
    reputation: float


def windowed_reputation(history, cfg: ReputationConfig, t: int) -> float:
    """Decay-weighted mean of per-round reputations in ``[max(t - window, 0), t]``.

    ``history`` is an iterable of :class:`RoundRecord` (or ``(round, value)``
    pairs). Entries outside the window are ignored.
    """
    start = max(t - cfg.window, 0)
    num = den = 0.0
    for entry in history:
        j, value = (entry.round, entry.reputation) if isinstance(entry, RoundRecord) else entry
        if start <= j <= t:
            theta = math.exp(-cfg.decay * (t - j))
            num += theta * value
            den += theta
    if den == 0.0:
        raise ValueError(f"no reputation entries in window [{start}, {t}]")
    return num / den


def minmax_normalize(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("nothing to normalise")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.full(v.shape, 1.0 / v.size)
    return (v - lo) / (hi - lo)


@dataclass(frozen=True)
class ClientReputation:
    """One client's reputation trail; immutable, updated via :meth:`record`."""

    history: tuple[RoundRecord, ...] = field(default_factory=tuple)
    windowed: float | None = None
    normalized: float | None = None
    weight: float | None = None

    def record(self, t: int, positive: int, negative: int, cfg: ReputationConfig) -> "ClientReputation":
        if self.history and t <= self.history[-1].round:
            raise ValueError(f"round {t} is not after round {self.history[-1].round}")
        entry = RoundRecord(t, int(positive), int(negative), round_reputation(positive, negative, cfg))
        start = max(t - cfg.window, 0)
        # older entries cannot re-enter the window, so drop them
        kept = tuple(h for h in self.history if h.round >= start) + (entry,)
        return ClientReputation(kept, windowed_reputation(kept, cfg, t))

    @property
    def last(self) -> RoundRecord | None:
        return self.history[-1] if self.history else None


def update_weights(states: list[ClientReputation]) -> list[ClientReputation]:
    """Min-max normalise windowed reputations and derive aggregation weights."""
    normalized = minmax_normalize([s.windowed for s in states])
    weights = normalized / normalized.sum()
    return [replace(s, normalized=float(r), weight=float(w)) for s, r, w in zip(states, normalized, weights)]
