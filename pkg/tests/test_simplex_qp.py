"""Tests for the simplex-constrained view-weight solver."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from model.simplex_qp import ViewWeights, project_to_simplex, solve_view_weights, view_objective


def _active_set_oracle(f: np.ndarray, lam: float) -> np.ndarray:
    """Enumerate supports; each gives a closed-form stationary point of the restricted problem."""
    best, best_value = None, np.inf
    n = f.size
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            idx = list(support)
            nu = (-f[idx].sum() - 2.0 * lam) / len(idx)
            restricted = (-f[idx] - nu) / (2.0 * lam)
            if restricted.min() < -1e-12:
                continue
            pi = np.zeros(n)
            pi[idx] = np.maximum(restricted, 0.0)
            value = view_objective(pi, f, lam)
            if value < best_value:
                best, best_value = pi, value
    return best


def test_projection_example() -> None:
    np.testing.assert_allclose(project_to_simplex(np.array([0.9, 0.2, -0.1])), [0.85, 0.15, 0.0], atol=1e-12)


def test_projection_keeps_simplex_points() -> None:
    point = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_to_simplex(point), point, atol=1e-15)


def test_small_lambda_puts_all_weight_on_best_view() -> None:
    weights = solve_view_weights(np.array([1.0, 2.0]), 0.5)
    np.testing.assert_allclose(weights.pi, [1.0, 0.0], atol=1e-12)


def test_large_lambda_splits_weight() -> None:
    weights = solve_view_weights(np.array([1.0, 2.0]), 2.0)
    np.testing.assert_allclose(weights.pi, [0.625, 0.375], atol=1e-12)


def test_huge_lambda_is_nearly_uniform() -> None:
    weights = solve_view_weights(np.array([0.3, 1.7, 4.0, 2.2]), 1e6)
    np.testing.assert_allclose(weights.pi, np.full(4, 0.25), atol=1e-5)


def test_matches_active_set_oracle() -> None:
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 9))
        f = rng.uniform(0.0, 10.0, size=n)
        lam = float(10.0 ** rng.uniform(-3.0, 1.0))
        weights = solve_view_weights(f, lam)
        oracle = _active_set_oracle(f, lam)
        assert view_objective(weights.pi, f, lam) == pytest.approx(view_objective(oracle, f, lam), abs=1e-6)


def test_beats_random_feasible_points() -> None:
    rng = np.random.default_rng(1)
    for _ in range(5):
        f = rng.uniform(0.0, 3.0, size=6)
        lam = float(rng.uniform(0.2, 4.0))
        best = view_objective(solve_view_weights(f, lam).pi, f, lam)
        samples = rng.dirichlet(np.ones(6), size=10_000)
        values = samples @ f + lam * np.sum(samples**2, axis=1)
        assert best <= values.min() + 1e-12


def test_two_views_against_grid() -> None:
    f = np.array([0.8, 1.1])
    lam = 0.3
    grid = np.linspace(0.0, 1.0, 10_001)
    values = f[0] * grid + f[1] * (1.0 - grid) + lam * (grid**2 + (1.0 - grid) ** 2)
    weights = solve_view_weights(f, lam)
    assert weights.pi[0] == pytest.approx(grid[np.argmin(values)], abs=1e-4)
    assert view_objective(weights.pi, f, lam) <= values.min() + 1e-12


def test_smaller_error_gets_larger_weight() -> None:
    rng = np.random.default_rng(2)
    for _ in range(50):
        f = rng.uniform(0.0, 2.0, size=5)
        pi = solve_view_weights(f, float(rng.uniform(0.1, 3.0))).pi
        order = np.argsort(f)
        assert np.all(np.diff(pi[order]) <= 1e-12)


def test_solution_lies_on_simplex() -> None:
    pi = solve_view_weights(np.array([3.0, 0.0, 1.0]), 0.7).pi
    assert pi.min() >= 0.0
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)


def test_rejects_invalid_input() -> None:
    with pytest.raises(ValueError):
        solve_view_weights(np.array([1.0, 2.0]), 0.0)
    with pytest.raises(ValueError):
        solve_view_weights(np.array([]), 1.0)
    with pytest.raises(ValueError):
        solve_view_weights(np.array([1.0, -0.1]), 1.0)
    with pytest.raises(ValueError):
        ViewWeights(np.array([0.6, 0.6]), 1.0)


def test_uniform_weights() -> None:
    weights = ViewWeights.uniform(6, lam=2.0)
    np.testing.assert_allclose(weights.pi, np.full(6, 1.0 / 6.0))
    assert weights.lam == 2.0
