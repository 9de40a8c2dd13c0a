"""Reference learners applied to latent or raw features (columns are instances)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.special import logsumexp, softmax
from sklearn.cluster import kmeans_plusplus


def predict_labels(w_t: np.ndarray, f_u: np.ndarray) -> np.ndarray:
    """argmax over classes of W_t^T F_u, ties resolved toward the lowest class."""
    if w_t.shape[0] != f_u.shape[0]:
        raise ValueError(f"weights have {w_t.shape[0]} rows, features have {f_u.shape[0]}")
    return np.argmax(w_t.T @ f_u, axis=0)


@dataclass(frozen=True, eq=False)
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    inertia_trace: List[float]


def _assign(points: np.ndarray, centers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    distances = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(distances, axis=1)
    return labels, distances[np.arange(points.shape[0]), labels]


def lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int = 300, tol: float = 1e-10) -> KMeansResult:
    """Lloyd iterations on row-wise ``points``; empty clusters keep their center."""
    centers = centers.copy()
    labels, nearest = _assign(points, centers)
    trace = [float(nearest.sum())]
    for _ in range(max_iter):
        for c in range(centers.shape[0]):
            members = points[labels == c]
            if members.shape[0]:
                centers[c] = members.mean(axis=0)
        labels, nearest = _assign(points, centers)
        trace.append(float(nearest.sum()))
        if trace[-2] - trace[-1] <= tol * max(trace[-2], 1.0):
            break
    return KMeansResult(labels, centers, trace[-1], trace)


def fit_kmeans(points: np.ndarray, k: int, seed: int, restarts: int = 10) -> KMeansResult:
    """k-means++ seeded restarts on the columns of ``points``; lowest inertia wins."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    samples = np.ascontiguousarray(np.asarray(points, dtype=np.float64).T)
    if k > samples.shape[0]:
        raise ValueError(f"k={k} exceeds the number of points {samples.shape[0]}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(restarts, 1)):
        centers, _ = kmeans_plusplus(samples, n_clusters=k, random_state=int(rng.integers(2**31 - 1)))
        result = lloyd(samples, centers)
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def kmeans(points: np.ndarray, k: int, seed: int, restarts: int = 10) -> np.ndarray:
    return fit_kmeans(points, k, seed, restarts).labels


def _with_bias(x: np.ndarray) -> np.ndarray:
    return np.vstack([x, np.ones((1, x.shape[1]))])


def softmax_loss_and_grad(weights: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy plus (l2 / 2) ||W||^2 for scores W^T x; ``y`` is one-hot C x n."""
    n = x.shape[1]
    scores = weights.T @ x
    loss = float(np.sum(logsumexp(scores, axis=0) - np.sum(y * scores, axis=0)) / n)
    loss += 0.5 * l2 * float(np.sum(weights * weights))
    grad = x @ (softmax(scores, axis=0) - y).T / n + l2 * weights
    return loss, grad


def softmax_classifier(
    train_x: np.ndarray,
    train_y: np.ndarray,
    test_x: np.ndarray,
    n_classes: int,
    l2: float = 1e-3,
    epochs: int = 500,
    seed: int = 0,
) -> np.ndarray:
    """Multinomial logistic regression by full-batch gradient descent.

    Features are standardized with training statistics and a bias row is added.
    Weights start at zero and the step is 1 / L for the Lipschitz bound L of the
    gradient, so a run depends on ``seed`` only through the caller's split.
    """
    del seed
    mean = train_x.mean(axis=1, keepdims=True)
    std = train_x.std(axis=1, keepdims=True)
    std[std == 0] = 1.0
    x = _with_bias((train_x - mean) / std)
    x_test = _with_bias((test_x - mean) / std)

    y = np.zeros((n_classes, x.shape[1]))
    y[np.asarray(train_y, dtype=np.int64), np.arange(x.shape[1])] = 1.0
    lipschitz = 0.5 * np.linalg.norm(x, ord=2) ** 2 / x.shape[1] + l2
    step = 1.0 / lipschitz

    weights = np.zeros((x.shape[0], n_classes))
    for _ in range(epochs):
        _, grad = softmax_loss_and_grad(weights, x, y, l2)
        weights -= step * grad
    return np.argmax(weights.T @ x_test, axis=0)
