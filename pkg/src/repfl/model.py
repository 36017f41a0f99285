"""Dense multilayer perceptron with softmax output and hand-written backprop.

Parameters are stored as an immutable sequence of ``(weight, bias)`` layers,
``weight`` shaped ``(out, in)``. Hidden layers use ReLU; the last layer feeds a
softmax. With no hidden layers the model is plain multinomial logistic
regression, which is what the small-parameter experiments use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelParams:
    layers: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("model needs at least one layer")
        prev_out = None
        for k, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {k}: bad shapes {w.shape} / {b.shape}")
            if prev_out is not None and w.shape[1] != prev_out:
                raise ValueError(f"layer {k}: expects {w.shape[1]} inputs, previous layer gives {prev_out}")
            prev_out = w.shape[0]

    @property
    def shapes(self) -> tuple[tuple[int, int], ...]:
        return tuple(w.shape for w, _ in self.layers)

    @property
    def n_features(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def n_classes(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def size(self) -> int:
        return sum(w.size + b.size for w, b in self.layers)

    def flatten(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in self.layers])

    @classmethod
    def unflatten(cls, vector: np.ndarray, shapes: Sequence[tuple[int, int]]) -> "ModelParams":
        vector = np.asarray(vector, dtype=float)
        expected = sum(o * i + o for o, i in shapes)
        if vector.shape != (expected,):
            raise ValueError(f"vector has shape {vector.shape}, expected ({expected},)")
        layers = []
        pos = 0
        for out, inp in shapes:
            w = vector[pos : pos + out * inp].reshape(out, inp).copy()
            pos += out * inp
            b = vector[pos : pos + out].copy()
            pos += out
            layers.append((w, b))
        return cls(tuple(layers))

    def map(self, fn) -> "ModelParams":
        return ModelParams(tuple((fn(w), fn(b)) for w, b in self.layers))


def layer_sizes(n_features: int, n_classes: int, hidden: Sequence[int] = (64, 32)) -> list[int]:
    return [n_features, *hidden, n_classes]


def init_params(sizes: Sequence[int], seed: int) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation."""
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = rng.uniform(-bound, bound, size=fan_out)
        layers.append((w, b))
    return ModelParams(tuple(layers))


def zeros_like(params: ModelParams) -> ModelParams:
    return params.map(np.zeros_like)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(params: ModelParams, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    # returns the input to every layer plus the output logits
    inputs = []
    h = x
    last = len(params.layers) - 1
    for k, (w, b) in enumerate(params.layers):
        inputs.append(h)
        h = h @ w.T + b
        if k < last:
            h = np.maximum(h, 0.0)
    return inputs, h


def mlp_forward(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Class probabilities for one sample ``(F,)`` or a batch ``(b, F)``."""
    x = np.asarray(features, dtype=float)
    if x.shape[-1] != params.n_features:
        raise ValueError(f"expected {params.n_features} features, got {x.shape[-1]}")
    _, logits = _forward(params, np.atleast_2d(x))
    probs = softmax(logits)
    return probs[0] if x.ndim == 1 else probs


def predict(params: ModelParams, features: np.ndarray) -> np.ndarray:
    # argmax picks the lowest class index on ties
    return np.argmax(mlp_forward(params, np.atleast_2d(features)), axis=1)


def nll_loss(probs: np.ndarray, label: int) -> float:
    return float(-np.log(max(float(probs[label]), PROB_FLOOR)))


def mean_nll(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> float:
    probs = mlp_forward(params, np.atleast_2d(features))
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, PROB_FLOOR))))


def gradient(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> ModelParams:
    """Mean NLL gradient over a batch, same layout as ``params``."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels, dtype=int).reshape(-1)
    if x.shape[0] == 0 or x.shape[0] != y.shape[0]:
        raise ValueError("batch must be nonempty with one label per row")
    if x.shape[1] != params.n_features:
        raise ValueError(f"expected {params.n_features} features, got {x.shape[1]}")
    if y.min() < 0 or y.max() >= params.n_classes:
        raise ValueError("label out of range")

    inputs, logits = _forward(params, x)
    delta = softmax(logits)
    delta[np.arange(len(y)), y] -= 1.0
    delta /= len(y)

    grads = []
    for k in range(len(params.layers) - 1, -1, -1):
        w, _ = params.layers[k]
        h = inputs[k]
        grads.append((delta.T @ h, delta.sum(axis=0)))
        if k > 0:
            # inputs[k] is the post-ReLU activation of layer k-1
            delta = (delta @ w) * (h > 0)
    return ModelParams(tuple(reversed(grads)))


def sgd_step(params: ModelParams, grad: ModelParams, lr: float) -> ModelParams:
    if params.shapes != grad.shapes:
        raise ValueError("gradient shape does not match parameters")
    return ModelParams(
        tuple((w - lr * gw, b - lr * gb) for (w, b), (gw, gb) in zip(params.layers, grad.layers))
    )


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    epochs: int = 10
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


def local_train(params: ModelParams, features: np.ndarray, labels: np.ndarray, cfg: TrainConfig) -> ModelParams:
    """Mini-batch SGD for ``cfg.epochs`` passes, reshuffling every epoch."""
    n = len(labels)
    if cfg.epochs == 0:
        return params
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            params = sgd_step(params, gradient(params, features[idx], labels[idx]), cfg.lr)
    return params
