"""Data-poisoning attacks and their activation schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .datagen import Dataset


@dataclass(frozen=True)
class Schedule:
    """When an attacker poisons its data.

    ``kind`` is one of ``never``, ``always``, ``once``, ``from`` or ``every``;
    ``start`` and ``period`` are used by the last three.
    """

    kind: str = "always"
    start: int = 1
    period: int = 1

    KINDS = ("never", "always", "once", "from", "every")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown schedule {self.kind!r}")
        if self.start < 1 or self.period < 1:
            raise ValueError("schedule start and period must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        """``always``, ``never``, ``once:3``, ``from:3`` or ``every:10:30``."""
        parts = text.strip().split(":")
        kind, args = parts[0], [int(p) for p in parts[1:]]
        need = {"never": 0, "always": 0, "once": 1, "from": 1, "every": 2}
        if kind not in need or len(args) != need[kind]:
            raise ValueError(f"bad schedule {text!r}")
        return cls(kind, *args)

    def shifted(self, offset: int) -> "Schedule":
        if self.kind in ("never", "always"):
            return self
        return Schedule(self.kind, self.start + offset, self.period)

    def __str__(self) -> str:
        if self.kind in ("never", "always"):
            return self.kind
        if self.kind == "every":
            return f"every:{self.start}:{self.period}"
        return f"{self.kind}:{self.start}"


def schedule_active(schedule: Schedule, t: int) -> bool:
    if t < 1:
        raise ValueError("rounds are numbered from 1")
    k = schedule.kind
    if k == "never":
        return False
    if k == "always":
        return True
    if k == "once":
        return t == schedule.start
    if k == "from":
        return t >= schedule.start
    return t >= schedule.start and (t - schedule.start) % schedule.period == 0


ALL_CLASSES = -1


@dataclass(frozen=True)
class AttackConfig:
    """``kind`` is ``none``, ``label-flip`` or ``backdoor``.

    ``rate`` is the flip rate (fraction of source-class samples) for label
    flipping and the poison rate (fraction of the shard) for backdoors.
    ``source=ALL_CLASSES`` turns label flipping into a full cyclic flip
    ``y -> (y + 1) mod K``; success is then measured on the class that lands
    on ``target``.
    ``stagger`` delays the k-th attacker's schedule by ``k * stagger`` rounds.
    An empty ``trigger`` is filled in by :func:`default_trigger`.
    """

    kind: str = "none"
    fraction: float = 0.0
    source: int = 0
    target: int = 1
    rate: float = 1.0
    trigger: tuple[tuple[int, float], ...] = ()
    extra_epochs: int = 5
    schedule: Schedule = field(default_factory=Schedule)
    stagger: int = 0
    seed: int = 0

    KINDS = ("none", "label-flip", "backdoor")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown attack {self.kind!r}")
        if not 0 <= self.fraction <= 1:
            raise ValueError("attacker fraction must be in [0, 1]")
        if not 0 <= self.rate <= 1:
            raise ValueError("attack rate must be in [0, 1]")
        if self.extra_epochs < 0:
            raise ValueError("extra_epochs must be >= 0")
        if self.stagger < 0:
            raise ValueError("stagger must be >= 0")
        if self.kind == "label-flip" and self.source == self.target:
            raise ValueError("label flip needs source != target")

    @property
    def enabled(self) -> bool:
        return self.kind != "none" and self.fraction > 0

    def attacked_class(self, n_classes: int) -> int:
        """True class of the test samples a label flip is trying to move."""
        return (self.target - 1) % n_classes if self.source == ALL_CLASSES else self.source


def choose_attackers(n_clients: int, fraction: float, seed: int) -> list[int]:
    """First ceil(fraction * M) ids of a seeded shuffle, sorted."""
    count = math.ceil(round(fraction * n_clients, 9))
    order = np.random.default_rng(seed).permutation(n_clients)
    return sorted(int(i) for i in order[:count])


def flip_labels(dataset: Dataset, source: int, target: int, rate: float, seed: int) -> Dataset:
    """Relabel ``round(rate * |source class|)`` seeded-chosen source samples as ``target``.

    With ``source == ALL_CLASSES`` the chosen samples come from the whole
    shard and each moves to the next class index instead.
    """
    if source == target:
        raise ValueError("source and target must differ")
    k = dataset.n_classes
    if not ((0 <= source < k or source == ALL_CLASSES) and 0 <= target < k):
        raise ValueError("class index out of range")
    if source == ALL_CLASSES:
        members = np.arange(len(dataset))
    else:
        members = np.flatnonzero(dataset.labels == source)
    count = int(round(rate * len(members)))
    chosen = members[np.random.default_rng(seed).permutation(len(members))[:count]]
    labels = dataset.labels.copy()
    labels[chosen] = (labels[chosen] + 1) % k if source == ALL_CLASSES else target
    return Dataset(dataset.features.copy(), labels, k)


def apply_trigger(features: np.ndarray, trigger) -> np.ndarray:
    out = np.array(features, dtype=float, copy=True)
    for idx, value in trigger:
        out[..., idx] = value
    return out


def implant_backdoor(dataset: Dataset, trigger, target: int, rate: float, seed: int) -> Dataset:
    if not trigger:
        raise ValueError("trigger must not be empty")
    for idx, _ in trigger:
        if not 0 <= idx < dataset.n_features:
            raise ValueError(f"trigger index {idx} outside [0, {dataset.n_features})")
    if not 0 <= target < dataset.n_classes:
        raise ValueError("target class out of range")
    count = int(round(rate * len(dataset)))
    chosen = np.random.default_rng(seed).permutation(len(dataset))[:count]
    features = dataset.features.copy()
    labels = dataset.labels.copy()
    features[chosen] = apply_trigger(features[chosen], trigger)
    labels[chosen] = target
    return Dataset(features, labels, dataset.n_classes)


def default_trigger(train: Dataset, size: int = 10) -> tuple[tuple[int, float], ...]:
    """Last ``size`` feature columns set to the 99th percentile of the training features."""
    size = min(size, train.n_features)
    value = float(np.percentile(train.features, 99))
    return tuple((j, value) for j in range(train.n_features - size, train.n_features))


def poison(dataset: Dataset, attack: AttackConfig, seed: int) -> Dataset:
    if attack.kind == "label-flip":
        return flip_labels(dataset, attack.source, attack.target, attack.rate, seed)
    if attack.kind == "backdoor":
        return implant_backdoor(dataset, attack.trigger, attack.target, attack.rate, seed)
    return dataset
