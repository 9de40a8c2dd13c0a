"""View-weight subproblem: minimize f.pi + lambda * ||pi||^2 over the probability simplex."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIMPLEX_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ViewWeights:
    """Simplex-constrained weights ordered task-major: index t * V + v."""

    pi: np.ndarray
    lam: float

    def __post_init__(self) -> None:
        pi = np.array(self.pi, dtype=np.float64, copy=True).reshape(-1)
        if pi.size == 0:
            raise ValueError("view weights must not be empty")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"view weights are not on the simplex (sum {pi.sum():.12g})")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @classmethod
    def uniform(cls, size: int, lam: float) -> "ViewWeights":
        return cls(np.full(size, 1.0 / size), lam)


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto {x >= 0, sum(x) = 1} by sorting."""
    values = np.asarray(v, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise ValueError("cannot project an empty vector onto the simplex")
    if not np.all(np.isfinite(values)):
        raise ValueError("simplex projection requires finite entries")
    ordered = np.sort(values)[::-1]
    cumulative = np.cumsum(ordered) - 1.0
    ranks = np.arange(1, values.size + 1)
    support = ordered - cumulative / ranks > 0
    rho = int(np.nonzero(support)[0][-1])
    theta = cumulative[rho] / (rho + 1)
    projected = np.maximum(values - theta, 0.0)
    # renormalize away the rounding drift of the cumulative sum
    return projected / projected.sum()


def view_objective(pi: np.ndarray, f: np.ndarray, lam: float) -> float:
    return float(np.dot(f, pi) + lam * np.dot(pi, pi))


def solve_view_weights(f: np.ndarray, lam: float) -> ViewWeights:
    """Exact minimizer of f.pi + lam * ||pi||^2 on the simplex."""
    errors = np.asarray(f, dtype=np.float64).reshape(-1)
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if errors.size == 0:
        raise ValueError("reconstruction error vector is empty")
    if not np.all(np.isfinite(errors)) or np.any(errors < 0):
        raise ValueError("reconstruction errors must be finite and nonnegative")
    return ViewWeights(project_to_simplex(-errors / (2.0 * lam)), lam)
