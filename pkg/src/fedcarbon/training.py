"""A small differentiable classifier and the FedAVG client/server primitives.

The model is a one-hidden-layer tanh network with a softmax head, trained
by mini-batch SGD with momentum. It is deliberately tiny: live simulation
runs measure round counts on synthetic class-cluster data, not benchmark
accuracy, so everything stays in float64 numpy where gradients can be
checked against finite differences.

Momentum buffers live inside `local_train` and start at zero on every
call, which models clients that keep no optimizer state between rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_LEARNING_RATE = 0.05
DEFAULT_MOMENTUM = 0.9
DEFAULT_BATCH_SIZE = 32


@dataclass(frozen=True)
class ModelParams:
    """Weights for input -> hidden -> classes, stored as float64 arrays."""

    hidden_weights: np.ndarray
    hidden_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: np.ndarray

    def as_arrays(self) -> tuple[np.ndarray, ...]:
        return (self.hidden_weights, self.hidden_bias, self.output_weights, self.output_bias)

    @classmethod
    def from_arrays(cls, arrays: tuple[np.ndarray, ...]) -> ModelParams:
        return cls(*arrays)

    def copy(self) -> ModelParams:
        return ModelParams(*(a.copy() for a in self.as_arrays()))


@dataclass(frozen=True)
class TrainConfig:
    """Client-side optimization settings."""

    learning_rate: float = DEFAULT_LEARNING_RATE
    momentum: float = DEFAULT_MOMENTUM
    batch_size: int = DEFAULT_BATCH_SIZE
    local_epochs: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.local_epochs < 1:
            raise ValueError(f"local_epochs must be >= 1, got {self.local_epochs}")


def init_params(input_dim: int, hidden_dim: int, num_classes: int, seed: int) -> ModelParams:
    """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer."""
    if min(input_dim, hidden_dim, num_classes) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    hidden_bound = 1.0 / math.sqrt(input_dim)
    output_bound = 1.0 / math.sqrt(hidden_dim)
    return ModelParams(
        hidden_weights=rng.uniform(-hidden_bound, hidden_bound, (input_dim, hidden_dim)),
        hidden_bias=rng.uniform(-hidden_bound, hidden_bound, hidden_dim),
        output_weights=rng.uniform(-output_bound, output_bound, (hidden_dim, num_classes)),
        output_bias=rng.uniform(-output_bound, output_bound, num_classes),
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def forward(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Class probabilities, one row per sample, rows summing to 1."""
    hidden = np.tanh(features @ params.hidden_weights + params.hidden_bias)
    logits = hidden @ params.output_weights + params.output_bias
    return _softmax(logits)


def cross_entropy_loss(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> float:
    probs = forward(params, features)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.clip(picked, 1e-300, None))))


def loss_and_gradients(
    params: ModelParams, features: np.ndarray, labels: np.ndarray
) -> tuple[float, tuple[np.ndarray, ...]]:
    """Mean cross-entropy and its gradient for every parameter array."""
    n = len(labels)
    hidden = np.tanh(features @ params.hidden_weights + params.hidden_bias)
    logits = hidden @ params.output_weights + params.output_bias
    probs = _softmax(logits)
    picked = probs[np.arange(n), labels]
    loss = float(-np.mean(np.log(np.clip(picked, 1e-300, None))))

    d_logits = probs.copy()
    d_logits[np.arange(n), labels] -= 1.0
    d_logits /= n
    grad_output_weights = hidden.T @ d_logits
    grad_output_bias = d_logits.sum(axis=0)
    d_hidden = (d_logits @ params.output_weights.T) * (1.0 - hidden * hidden)
    grad_hidden_weights = features.T @ d_hidden
    grad_hidden_bias = d_hidden.sum(axis=0)
    return loss, (grad_hidden_weights, grad_hidden_bias, grad_output_weights, grad_output_bias)


def local_train(
    params: ModelParams,
    features: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
) -> tuple[ModelParams, int]:
    """Run local epochs of momentum SGD on one client's data.

    Returns the updated parameters and the number of optimizer steps taken.
    The input parameters are not mutated; the shuffle order is a pure
    function of config.seed.
    """
    if len(features) != len(labels):
        raise ValueError("features and labels disagree on sample count")
    if len(labels) == 0:
        return params.copy(), 0
    arrays = [a.copy() for a in params.as_arrays()]
    velocities = [np.zeros_like(a) for a in arrays]
    rng = np.random.default_rng(config.seed)
    steps = 0
    for _ in range(config.local_epochs):
        order = rng.permutation(len(labels))
        for start in range(0, len(labels), config.batch_size):
            batch = order[start : start + config.batch_size]
            current = ModelParams.from_arrays(tuple(arrays))
            _, grads = loss_and_gradients(current, features[batch], labels[batch])
            for i, grad in enumerate(grads):
                velocities[i] = config.momentum * velocities[i] + grad
                arrays[i] = arrays[i] - config.learning_rate * velocities[i]
            steps += 1
    return ModelParams.from_arrays(tuple(arrays)), steps


def fedavg_aggregate(updates: list[tuple[ModelParams, int]]) -> ModelParams:
    """Average client parameters weighted by their sample counts.

    Weights are normalized before use, so a single update is returned
    unchanged bit for bit.
    """
    if not updates:
        raise ValueError("cannot aggregate zero updates")
    for _, weight in updates:
        if weight < 0:
            raise ValueError(f"weights must be >= 0, got {weight}")
    total = sum(weight for _, weight in updates)
    if total <= 0:
        raise ValueError("total weight must be positive")
    merged: list[np.ndarray] | None = None
    for params, weight in updates:
        share = weight / total
        contributions = [share * a for a in params.as_arrays()]
        if merged is None:
            merged = contributions
        else:
            merged = [m + c for m, c in zip(merged, contributions)]
    assert merged is not None
    return ModelParams.from_arrays(tuple(merged))


def evaluate_accuracy(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of samples whose argmax class matches; ties pick the lowest class."""
    if len(labels) == 0:
        raise ValueError("cannot evaluate on an empty set")
    predictions = np.argmax(forward(params, features), axis=1)
    return float(np.mean(predictions == labels))


@dataclass(frozen=True)
class SyntheticDataset:
    """Gaussian class clusters with a held-out test split."""

    train_features: np.ndarray
    train_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    num_classes: int

    @property
    def input_dim(self) -> int:
        return self.train_features.shape[1]


def make_synthetic_classification(
    num_classes: int,
    input_dim: int,
    train_per_class: int,
    test_per_class: int,
    cluster_std: float,
    seed: int,
) -> SyntheticDataset:
    """Sample one Gaussian cluster per class around unit-scale random centers."""
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    if cluster_std <= 0:
        raise ValueError(f"cluster_std must be > 0, got {cluster_std}")
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 1.0, (num_classes, input_dim))

    def sample(per_class: int) -> tuple[np.ndarray, np.ndarray]:
        features = np.concatenate(
            [
                centers[c] + rng.normal(0.0, cluster_std, (per_class, input_dim))
                for c in range(num_classes)
            ]
        )
        labels = np.repeat(np.arange(num_classes), per_class)
        return features, labels

    train_features, train_labels = sample(train_per_class)
    test_features, test_labels = sample(test_per_class)
    return SyntheticDataset(
        train_features=train_features,
        train_labels=train_labels,
        test_features=test_features,
        test_labels=test_labels,
        num_classes=num_classes,
    )
