"""Tests for the task-weight, noise-weight, and coupling updates."""

from __future__ import annotations

from typing import List, Tuple

import numpy as np
import pytest

from model.base import SolverError
from model.multitask_regression import (
    CouplingMatrix,
    NoiseWeights,
    compute_dd,
    coupling_penalty,
    l21_norm,
    matrix_sqrt_psd,
    update_coupling,
    update_noise_weights,
    update_task_weights,
    update_task_weights_noisy,
)


def _one_hot(classes: np.ndarray, n_classes: int) -> np.ndarray:
    y = np.zeros((n_classes, classes.size))
    y[classes, np.arange(classes.size)] = 1.0
    return y


def _make_tasks(
    n_tasks: int = 2,
    k: int = 6,
    n_classes: int = 3,
    n_labeled: int = 10,
    seed: int = 0,
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    rng = np.random.default_rng(seed)
    features = [rng.uniform(size=(k, n_labeled)) for _ in range(n_tasks)]
    labels = [_one_hot(rng.integers(0, n_classes, size=n_labeled), n_classes) for _ in range(n_tasks)]
    return features, labels


def _random_coupling(k: int, n_classes: int, seed: int) -> CouplingMatrix:
    rng = np.random.default_rng(seed)
    d, _ = update_coupling([rng.normal(size=(k, n_classes)) for _ in range(2)])
    return d


def test_matrix_sqrt_examples() -> None:
    np.testing.assert_allclose(matrix_sqrt_psd(np.eye(3)), np.eye(3), atol=1e-12)
    np.testing.assert_allclose(matrix_sqrt_psd(np.diag([9.0, 16.0])), np.diag([3.0, 4.0]), atol=1e-12)


def test_matrix_sqrt_squares_back() -> None:
    rng = np.random.default_rng(4)
    a = rng.normal(size=(5, 5))
    m = a.T @ a
    root = matrix_sqrt_psd(m)
    assert np.linalg.norm(root @ root - m) <= 1e-8 * np.linalg.norm(m)


def test_matrix_sqrt_rejects_bad_input() -> None:
    with pytest.raises(ValueError):
        matrix_sqrt_psd(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        matrix_sqrt_psd(np.diag([1.0, -1.0]))


def test_matrix_sqrt_rejects_small_negative_eigenvalue_next_to_large_one() -> None:
    with pytest.raises(ValueError, match="indefinite"):
        matrix_sqrt_psd(np.diag([1e6, -5e-7]))


def test_matrix_sqrt_clamps_rounding_level_negatives() -> None:
    root = matrix_sqrt_psd(np.diag([4.0, -1e-12]))
    np.testing.assert_allclose(root, np.diag([2.0, 0.0]), atol=1e-12)


def test_dd_of_uniform_coupling() -> None:
    d = CouplingMatrix.identity(4, ridge_eps=1e-12)
    np.testing.assert_allclose(compute_dd(d), 8.0 * np.eye(4), rtol=1e-9)


def test_dd_matches_dense_inverse() -> None:
    d = _random_coupling(5, 3, seed=1)
    dd = compute_dd(d)
    expected = 2.0 * np.linalg.inv(d.d + d.ridge_eps * np.eye(5))
    np.testing.assert_allclose(dd, expected, rtol=1e-7)
    np.testing.assert_allclose(dd, dd.T, atol=1e-9 * np.abs(dd).max())


def test_task_weights_zero_labels() -> None:
    features, _ = _make_tasks()
    w = update_task_weights(features[0], np.zeros((3, 10)), CouplingMatrix.identity(6), 1e-4)
    np.testing.assert_array_equal(w, np.zeros((6, 3)))


def test_task_weights_identity_features() -> None:
    y = _one_hot(np.array([0, 1, 2, 1]), 3)
    w = update_task_weights(np.eye(4), y, CouplingMatrix.identity(4), 1e-10)
    np.testing.assert_allclose(w, y.T, atol=1e-6)


@pytest.mark.parametrize("noisy", [False, True])
def test_task_weights_zero_gradient(noisy: bool) -> None:
    rng = np.random.default_rng(2)
    for _ in range(50):
        k = int(rng.integers(2, 11))
        n_classes = int(rng.integers(2, 5))
        n_labeled = int(rng.integers(2, 21))
        f = rng.uniform(size=(k, n_labeled))
        y = _one_hot(rng.integers(0, n_classes, size=n_labeled), n_classes)
        d, _ = update_coupling([rng.normal(size=(k, k))])
        gamma = float(10.0 ** rng.uniform(-3.0, 0.0))
        wd = rng.normal(scale=0.1, size=(k, n_classes)) if noisy else np.zeros((k, n_classes))
        if noisy:
            w = update_task_weights_noisy(f, y, d, NoiseWeights(wd), gamma)
        else:
            w = update_task_weights(f, y, d, gamma)
        dd = compute_dd(d)
        gradient = 2.0 * f @ (f.T @ (w + wd) - y.T) + 2.0 * gamma * dd @ w
        scale = (1.0 + np.linalg.norm(w)) * (1.0 + np.linalg.norm(f @ y.T)) * (1.0 + np.abs(dd).max())
        assert np.linalg.norm(gradient) <= 1e-8 * scale


def test_task_weights_minimize_regularized_loss() -> None:
    features, labels = _make_tasks(seed=5)
    d = _random_coupling(6, 3, seed=6)
    gamma = 0.1
    dd = compute_dd(d)
    f, y = features[1], labels[1]

    def loss(w: np.ndarray) -> float:
        return float(np.sum((y - w.T @ f) ** 2) + gamma * np.trace(w.T @ dd @ w))

    w = update_task_weights(f, y, d, gamma)
    rng = np.random.default_rng(7)
    for _ in range(5):
        direction = rng.normal(size=w.shape)
        assert loss(w + 1e-3 * direction) >= loss(w) - 1e-12
        assert loss(w - 1e-3 * direction) >= loss(w) - 1e-12


def test_noisy_weights_without_noise_match_plain_update() -> None:
    features, labels = _make_tasks()
    d = _random_coupling(6, 3, seed=3)
    plain = update_task_weights(features[0], labels[0], d, 0.2)
    noisy = update_task_weights_noisy(features[0], labels[0], d, NoiseWeights.zeros(6, 3), 0.2)
    np.testing.assert_allclose(noisy, plain, rtol=1e-12, atol=1e-14)


def test_noisy_weights_stationary() -> None:
    features, labels = _make_tasks(seed=8)
    rng = np.random.default_rng(9)
    d = _random_coupling(6, 3, seed=10)
    wd = NoiseWeights(rng.normal(scale=0.1, size=(6, 3)))
    gamma = 0.05
    dd = compute_dd(d)
    f, y = features[0], labels[0]
    w = update_task_weights_noisy(f, y, d, wd, gamma)
    gradient = 2.0 * f @ (f.T @ (w + wd.wd) - y.T) + 2.0 * gamma * dd @ w
    scale = (1.0 + np.linalg.norm(w)) * (1.0 + np.linalg.norm(f @ y.T)) * (1.0 + np.abs(dd).max())
    assert np.linalg.norm(gradient) <= 1e-8 * scale


def test_noise_weights_vanish_at_clean_fixed_point() -> None:
    features, _ = _make_tasks()
    rng = np.random.default_rng(12)
    weights = [rng.normal(size=(6, 3)) for _ in features]
    exact = [w.T @ f for w, f in zip(weights, features)]
    wd = update_noise_weights(features, exact, weights, 1e-2, NoiseWeights.zeros(6, 3))
    np.testing.assert_allclose(wd.wd, 0.0, atol=1e-10)


def test_noise_weights_tiny_mu_is_least_squares() -> None:
    rng = np.random.default_rng(13)
    f = rng.uniform(size=(3, 20))
    y = _one_hot(rng.integers(0, 2, size=20), 2)
    previous = NoiseWeights(rng.normal(size=(3, 2)))
    wd = update_noise_weights([f], [y], [np.zeros((3, 2))], 1e-10, previous)
    expected, *_ = np.linalg.lstsq(f.T, y.T, rcond=None)
    np.testing.assert_allclose(wd.wd, expected, atol=1e-6)


def test_noise_weights_match_direct_solve() -> None:
    features, labels = _make_tasks(seed=14)
    rng = np.random.default_rng(15)
    weights = [rng.normal(scale=0.2, size=(6, 3)) for _ in features]
    previous = NoiseWeights(rng.normal(size=(6, 3)))
    mu = 0.4
    wd = update_noise_weights(features, labels, weights, mu, previous)
    lhs = sum(f @ f.T for f in features) + mu * np.diag(previous.reweighting())
    rhs = sum(f @ y.T - f @ f.T @ w for f, y, w in zip(features, labels, weights))
    np.testing.assert_allclose(wd.wd, np.linalg.solve(lhs, rhs), rtol=1e-8, atol=1e-10)


def test_reweighted_steps_never_increase_objective() -> None:
    features, labels = _make_tasks(seed=16)
    rng = np.random.default_rng(17)
    weights = [rng.normal(scale=0.2, size=(6, 3)) for _ in features]
    mu = 0.5

    def objective(wd: np.ndarray) -> float:
        fit = sum(np.sum((y - (w + wd).T @ f) ** 2) for f, y, w in zip(features, labels, weights))
        return float(fit + mu * l21_norm(wd))

    wd = NoiseWeights(rng.normal(size=(6, 3)))
    previous = objective(wd.wd)
    for _ in range(20):
        wd = update_noise_weights(features, labels, weights, mu, wd)
        current = objective(wd.wd)
        assert current <= previous * (1.0 + 1e-7) + 1e-12
        previous = current


def test_reweighting_diagonal() -> None:
    wd = NoiseWeights(np.array([[3.0, 4.0], [0.0, 0.0]]), irls_eps=1e-8)
    np.testing.assert_allclose(wd.reweighting(), [0.1, 0.5e8])


def test_l21_norm_example() -> None:
    assert l21_norm(np.array([[3.0, 4.0], [0.0, 0.0]])) == pytest.approx(5.0)


def test_coupling_of_orthonormal_weights() -> None:
    d, value = update_coupling([np.eye(4)[:, :2], np.eye(4)[:, 2:]])
    np.testing.assert_allclose(d.d, np.eye(4) / 4.0, atol=1e-12)
    assert value == pytest.approx(16.0)


def test_coupling_of_diagonal_weights() -> None:
    d, value = update_coupling([np.diag([3.0, 4.0])])
    np.testing.assert_allclose(d.d, np.diag([3.0 / 7.0, 4.0 / 7.0]), atol=1e-12)
    assert value == pytest.approx(49.0)


def test_coupling_random_properties() -> None:
    rng = np.random.default_rng(18)
    for _ in range(100):
        k = int(rng.integers(2, 7))
        d, _ = update_coupling([rng.normal(size=(k, 2)) for _ in range(int(rng.integers(1, 4)))])
        assert np.trace(d.d) == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(d.d, d.d.T, atol=1e-12)
        assert np.linalg.eigvalsh(d.d).min() >= -1e-10


def test_coupling_of_zero_weights_falls_back() -> None:
    d, value = update_coupling([np.zeros((3, 2)), np.zeros((3, 2))])
    np.testing.assert_allclose(d.d, np.eye(3) / 3.0)
    assert value == 0.0


def test_alternating_weights_and_coupling_descend() -> None:
    features, labels = _make_tasks(n_tasks=2, k=3, n_classes=2, n_labeled=8, seed=19)
    gamma = 0.5

    def objective(weights: List[np.ndarray], d: CouplingMatrix) -> float:
        fit = sum(np.sum((y - w.T @ f) ** 2) for f, y, w in zip(features, labels, weights))
        return float(fit + gamma * coupling_penalty(weights, d))

    d = CouplingMatrix.identity(3)
    weights = [np.zeros((3, 2)) for _ in features]
    previous = objective(weights, d)
    for _ in range(10):
        weights = [update_task_weights(f, y, d, gamma) for f, y in zip(features, labels)]
        after_weights = objective(weights, d)
        assert after_weights <= previous * (1.0 + 1e-7)
        d, _ = update_coupling(weights)
        after_coupling = objective(weights, d)
        assert after_coupling <= after_weights * (1.0 + 1e-7)
        previous = after_coupling


def test_singular_system_raises_solver_error() -> None:
    d = CouplingMatrix(np.full((2, 2), np.nan))
    with pytest.raises(SolverError):
        compute_dd(d)
