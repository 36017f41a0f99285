"""Synthetic data, Dirichlet non-IID partitioning, and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self) -> None:
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise DataError("features must be 2-D and labels 1-D")
        if len(self.features) != len(self.labels):
            raise DataError("features and labels differ in length")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DataError("label outside [0, n_classes)")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx], self.n_classes)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


@dataclass(frozen=True)
class DataSpec:
    n_classes: int = 2
    n_features: int = 100
    per_class: int = 500
    separation: float = 6.0
    noise: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if self.n_features < self.n_classes:
            raise ValueError("class means sit on distinct axes, so n_features must be >= n_classes")
        if self.per_class < 1:
            raise ValueError("per_class must be >= 1")
        if self.noise <= 0:
            raise ValueError("noise must be positive")


def synth_dataset(spec: DataSpec) -> Dataset:
    """Isotropic Gaussian blob per class, centred at ``separation * e_k``."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_classes * spec.per_class
    labels = np.repeat(np.arange(spec.n_classes), spec.per_class)
    means = np.zeros((spec.n_classes, spec.n_features))
    means[np.arange(spec.n_classes), np.arange(spec.n_classes)] = spec.separation
    features = means[labels] + rng.normal(0.0, spec.noise, size=(n, spec.n_features))
    return Dataset(features, labels, spec.n_classes)


def largest_remainder(fractions: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to ``total`` that track ``fractions * total``."""
    raw = np.asarray(fractions, dtype=float) * total
    counts = np.floor(raw).astype(int)
    short = total - counts.sum()
    if short > 0:
        # stable sort keeps the lowest index first among equal remainders
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


@dataclass(frozen=True)
class ClientPartition:
    shards: list[Dataset]
    indices: list[np.ndarray] = field(repr=False)

    @property
    def sizes(self) -> list[int]:
        return [len(s) for s in self.shards]

    @property
    def has_empty(self) -> bool:
        return any(len(s) == 0 for s in self.shards)


def dirichlet_partition(dataset: Dataset, n_clients: int, iota: float, seed: int) -> ClientPartition:
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    if iota <= 0:
        raise ValueError("iota must be positive")
    rng = np.random.default_rng(seed)
    buckets: list[list[np.ndarray]] = [[] for _ in range(n_clients)]
    for k in range(dataset.n_classes):
        members = np.flatnonzero(dataset.labels == k)
        members = members[rng.permutation(len(members))]
        g = rng.gamma(iota, 1.0, size=n_clients)
        counts = largest_remainder(g / g.sum(), len(members))
        bounds = np.concatenate([[0], np.cumsum(counts)])
        for i in range(n_clients):
            buckets[i].append(members[bounds[i] : bounds[i + 1]])
    indices = [np.sort(np.concatenate(b)).astype(int) for b in buckets]
    return ClientPartition([dataset.subset(idx) for idx in indices], indices)


def stratified_split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Per-class held-out split; returns ``(train, test)``."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for k in range(dataset.n_classes):
        members = np.flatnonzero(dataset.labels == k)
        members = members[rng.permutation(len(members))]
        n_test = int(round(test_fraction * len(members)))
        test_idx.append(members[:n_test])
        train_idx.append(members[n_test:])
    return (
        dataset.subset(np.sort(np.concatenate(train_idx))),
        dataset.subset(np.sort(np.concatenate(test_idx))),
    )


def write_csv(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + [f"f{j}" for j in range(dataset.n_features)])
        for label, row in zip(dataset.labels, dataset.features):
            writer.writerow([int(label)] + [repr(float(v)) for v in row])


def load_csv(path: str | Path, n_classes: int | None = None) -> Dataset:
    """Read a ``label,f0,f1,...`` file.

    ``n_classes`` defaults to ``max(label) + 1`` (at least 2). Errors carry the
    1-based line number of the offending row.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "label":
            raise DataError(f"{path}:1: header must start with 'label'")
        width = len(header) - 1
        labels, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) - 1 != width:
                raise DataError(f"{path}:{lineno}: expected {width} features, got {len(row) - 1}")
            try:
                label = int(row[0])
                feats = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
            if label < 0:
                raise DataError(f"{path}:{lineno}: negative label {label}")
            if n_classes is not None and label >= n_classes:
                raise DataError(f"{path}:{lineno}: label {label} >= n_classes {n_classes}")
            labels.append(label)
            rows.append(feats)
    k = n_classes if n_classes is not None else max(2, max(labels, default=0) + 1)
    features = np.asarray(rows, dtype=float).reshape(len(rows), width)
    return Dataset(features, np.asarray(labels, dtype=int), k)
