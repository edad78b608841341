"""Unit tests for the classifier, its gradients and the FedAVG primitives."""

from __future__ import annotations

import numpy as np
import pytest

from fedcarbon.training import (
    ModelParams,
    TrainConfig,
    cross_entropy_loss,
    evaluate_accuracy,
    fedavg_aggregate,
    forward,
    init_params,
    local_train,
    loss_and_gradients,
    make_synthetic_classification,
)


def tiny_problem(seed: int = 0):
    rng = np.random.default_rng(seed)
    features = rng.normal(0.0, 1.0, (8, 3))
    labels = rng.integers(0, 3, 8)
    params = init_params(3, 4, 3, seed=seed + 1)
    return params, features, labels


def finite_difference_gradients(params, features, labels, step=1e-5):
    """Central-difference gradient of the loss, coordinate by coordinate."""
    grads = []
    for index in range(4):
        arrays = [a.copy() for a in params.as_arrays()]
        grad = np.zeros_like(arrays[index])
        flat = arrays[index].reshape(-1)
        grad_flat = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            high = cross_entropy_loss(ModelParams.from_arrays(tuple(arrays)), features, labels)
            flat[i] = original - step
            low = cross_entropy_loss(ModelParams.from_arrays(tuple(arrays)), features, labels)
            flat[i] = original
            grad_flat[i] = (high - low) / (2 * step)
        grads.append(grad)
    return tuple(grads)


class TestForward:
    def test_rows_are_probabilities(self):
        params, features, _ = tiny_problem()
        probs = forward(params, features)
        assert probs.shape == (8, 3)
        assert np.all(probs > 0) and np.all(probs < 1)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_zero_params_give_uniform(self):
        params = ModelParams(
            hidden_weights=np.zeros((3, 4)),
            hidden_bias=np.zeros(4),
            output_weights=np.zeros((4, 3)),
            output_bias=np.zeros(3),
        )
        probs = forward(params, np.ones((5, 3)))
        assert np.allclose(probs, 1.0 / 3.0, atol=1e-12)


class TestGradients:
    def test_matches_finite_differences(self):
        """Backprop agrees with central differences to a relative 1e-4."""
        for seed in range(3):
            params, features, labels = tiny_problem(seed)
            _, analytic = loss_and_gradients(params, features, labels)
            numeric = finite_difference_gradients(params, features, labels)
            for a, n in zip(analytic, numeric):
                scale = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
                assert np.linalg.norm(a - n) / scale < 1e-4

    def test_loss_matches_loss_and_gradients(self):
        params, features, labels = tiny_problem(4)
        loss, _ = loss_and_gradients(params, features, labels)
        assert abs(loss - cross_entropy_loss(params, features, labels)) < 1e-12


class TestLocalTrain:
    def test_one_epoch_full_batch_is_one_step(self):
        params, features, labels = tiny_problem()
        config = TrainConfig(batch_size=len(labels), local_epochs=1)
        _, steps = local_train(params, features, labels, config)
        assert steps == 1

    def test_step_count(self):
        params, features, labels = tiny_problem()
        config = TrainConfig(batch_size=3, local_epochs=2)
        _, steps = local_train(params, features, labels, config)
        assert steps == 2 * 3  # ceil(8 / 3) batches per epoch

    def test_zero_learning_rate_changes_nothing(self):
        params, features, labels = tiny_problem()
        config = TrainConfig(learning_rate=0.0, momentum=0.0, local_epochs=3)
        after, _ = local_train(params, features, labels, config)
        for before_a, after_a in zip(params.as_arrays(), after.as_arrays()):
            assert np.array_equal(before_a, after_a)

    def test_does_not_mutate_input(self):
        params, features, labels = tiny_problem()
        snapshot = params.copy()
        local_train(params, features, labels, TrainConfig())
        for a, b in zip(params.as_arrays(), snapshot.as_arrays()):
            assert np.array_equal(a, b)

    def test_deterministic_per_seed(self):
        params, features, labels = tiny_problem()
        config = TrainConfig(batch_size=3, local_epochs=2, seed=11)
        a, _ = local_train(params, features, labels, config)
        b, _ = local_train(params, features, labels, config)
        for x, y in zip(a.as_arrays(), b.as_arrays()):
            assert np.array_equal(x, y)

    def test_loss_decreases_on_easy_data(self):
        data = make_synthetic_classification(3, 4, 30, 10, cluster_std=0.3, seed=5)
        params = init_params(4, 8, 3, seed=6)
        before = cross_entropy_loss(params, data.train_features, data.train_labels)
        config = TrainConfig(learning_rate=0.1, momentum=0.9, batch_size=16, local_epochs=2)
        after_params, _ = local_train(params, data.train_features, data.train_labels, config)
        after = cross_entropy_loss(after_params, data.train_features, data.train_labels)
        assert after < before


class TestAggregate:
    def test_weighted_mean(self):
        """Scalar check: values 0 and 3 with weights 1 and 2 average to 2."""
        zeros = ModelParams(np.zeros((1, 1)), np.zeros(1), np.zeros((1, 1)), np.zeros(1))
        threes = ModelParams(np.full((1, 1), 3.0), np.full(1, 3.0), np.full((1, 1), 3.0), np.full(1, 3.0))
        merged = fedavg_aggregate([(zeros, 1), (threes, 2)])
        for a in merged.as_arrays():
            assert np.allclose(a, 2.0, atol=1e-12)

    def test_single_update_is_bitwise_identity(self):
        params, _, _ = tiny_problem()
        merged = fedavg_aggregate([(params, 37)])
        for a, b in zip(merged.as_arrays(), params.as_arrays()):
            assert np.array_equal(a, b)

    def test_rejects_empty_and_zero_weight(self):
        params, _, _ = tiny_problem()
        with pytest.raises(ValueError):
            fedavg_aggregate([])
        with pytest.raises(ValueError):
            fedavg_aggregate([(params, 0)])


class TestEvaluate:
    def test_perfect_and_worst_case(self):
        params, features, _ = tiny_problem()
        probs = forward(params, features)
        best = np.argmax(probs, axis=1)
        assert evaluate_accuracy(params, features, best) == 1.0
        wrong = (best + 1) % 3
        assert evaluate_accuracy(params, features, wrong) == 0.0

    def test_argmax_tie_takes_lowest_class(self):
        params = ModelParams(np.zeros((2, 2)), np.zeros(2), np.zeros((2, 2)), np.zeros(2))
        features = np.ones((4, 2))
        assert evaluate_accuracy(params, features, np.zeros(4, dtype=int)) == 1.0
        assert evaluate_accuracy(params, features, np.ones(4, dtype=int)) == 0.0


class TestSyntheticData:
    def test_shapes_and_labels(self):
        data = make_synthetic_classification(4, 6, 25, 10, cluster_std=1.0, seed=0)
        assert data.train_features.shape == (100, 6)
        assert data.test_features.shape == (40, 6)
        assert sorted(set(data.train_labels)) == [0, 1, 2, 3]
        assert data.input_dim == 6

    def test_seeded_reproducibility(self):
        a = make_synthetic_classification(3, 5, 10, 5, cluster_std=0.7, seed=42)
        b = make_synthetic_classification(3, 5, 10, 5, cluster_std=0.7, seed=42)
        assert np.array_equal(a.train_features, b.train_features)
        assert np.array_equal(a.test_labels, b.test_labels)

    def test_tight_clusters_are_separable(self):
        data = make_synthetic_classification(3, 8, 40, 20, cluster_std=0.2, seed=1)
        params = init_params(8, 10, 3, seed=2)
        config = TrainConfig(learning_rate=0.2, momentum=0.9, batch_size=32, local_epochs=20)
        trained, _ = local_train(params, data.train_features, data.train_labels, config)
        assert evaluate_accuracy(trained, data.test_features, data.test_labels) > 0.9
