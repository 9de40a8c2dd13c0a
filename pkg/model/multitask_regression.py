"""Closed-form updates for task weights, noise weights, and the task coupling matrix."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from model.base import SolverError

logger = logging.getLogger("mtmvcsf.regression")

SYMMETRY_TOL = 1e-10
EIGEN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Unit-trace PSD matrix coupling the task weights."""

    d: np.ndarray
    ridge_eps: float = 1e-8

    def __post_init__(self) -> None:
        d = np.array(self.d, dtype=np.float64, copy=True)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError(f"coupling matrix must be square, got shape {d.shape}")
        d = 0.5 * (d + d.T)
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @classmethod
    def identity(cls, size: int, ridge_eps: float = 1e-8) -> "CouplingMatrix":
        return cls(np.eye(size) / size, ridge_eps)

    @property
    def size(self) -> int:
        return self.d.shape[0]

    def ridged(self) -> np.ndarray:
        return self.d + self.ridge_eps * np.eye(self.size)

    def inverse(self) -> np.ndarray:
        """(D + ridge_eps * I)^-1."""
        return _spd_solve(self.ridged(), np.eye(self.size), "ridged coupling matrix")


@dataclass(frozen=True, eq=False)
class NoiseWeights:
    """Noise-absorbing weights shared across tasks; discarded at prediction time."""

    wd: np.ndarray
    irls_eps: float = 1e-8

    def __post_init__(self) -> None:
        wd = np.array(self.wd, dtype=np.float64, copy=True)
        if not np.all(np.isfinite(wd)):
            raise SolverError("noise weights contain non-finite entries")
        wd.setflags(write=False)
        object.__setattr__(self, "wd", wd)

    @classmethod
    def zeros(cls, k_joint: int, n_classes: int, irls_eps: float = 1e-8) -> "NoiseWeights":
        return cls(np.zeros((k_joint, n_classes)), irls_eps)

    def reweighting(self) -> np.ndarray:
        """Diagonal of E_d: 1 / (2 * max(||row k||, irls_eps))."""
        row_norms = np.linalg.norm(self.wd, axis=1)
        return 1.0 / (2.0 * np.maximum(row_norms, self.irls_eps))


def l21_norm(m: np.ndarray) -> float:
    """Sum of the Euclidean norms of the rows."""
    return float(np.linalg.norm(m, axis=1).sum())


def _spd_solve(lhs: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    try:
        factor = linalg.cho_factor(lhs, lower=True, check_finite=True)
        return linalg.cho_solve(factor, rhs)
    except (linalg.LinAlgError, ValueError) as exc:
        cond = np.linalg.cond(lhs) if np.all(np.isfinite(lhs)) else float("inf")
        logger.warning("Cholesky solve failed for %s (cond ~ %.3e)", what, cond)
        raise SolverError(f"singular system in {what} (condition estimate {cond:.3e})") from exc


def matrix_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root through an eigendecomposition."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix square root requires a symmetric input")
    eigenvalues, eigenvectors = linalg.eigh(0.5 * (m + m.T))
    # absolute floor, widened only by the eigensolver's own rounding error
    rounding = m.shape[0] * np.finfo(np.float64).eps * float(np.abs(eigenvalues).max(initial=0.0))
    if eigenvalues.size and eigenvalues.min() < -max(EIGEN_TOL, rounding):
        raise ValueError(f"matrix is indefinite (min eigenvalue {eigenvalues.min():.3e})")
    roots = np.sqrt(np.clip(eigenvalues, 0.0, None))
    root = (eigenvectors * roots) @ eigenvectors.T
    return 0.5 * (root + root.T)


def compute_dd(d: CouplingMatrix) -> np.ndarray:
    """DD = D~^-1 + D~^-T with D~ = D + ridge_eps * I."""
    inverse = d.inverse()
    return inverse + inverse.T


def _weights_system(f_l: np.ndarray, d: CouplingMatrix, gamma: float) -> np.ndarray:
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if f_l.shape[0] != d.size:
        raise ValueError(f"features have {f_l.shape[0]} rows, coupling matrix is {d.size} x {d.size}")
    lhs = f_l @ f_l.T + gamma * compute_dd(d)
    return 0.5 * (lhs + lhs.T)


def update_task_weights(
    f_l: np.ndarray,
    y: np.ndarray,
    d: CouplingMatrix,
    gamma: float,
) -> np.ndarray:
    """W_t = (F_l F_l^T + gamma * DD)^-1 F_l Y^T."""
    if f_l.shape[1] != y.shape[1]:
        raise ValueError(f"features have {f_l.shape[1]} columns, labels have {y.shape[1]}")
    lhs = _weights_system(f_l, d, gamma)
    return _spd_solve(lhs, f_l @ y.T, "task weight update")


def update_task_weights_noisy(
    f_l: np.ndarray,
    y: np.ndarray,
    d: CouplingMatrix,
    wd: NoiseWeights,
    gamma: float,
) -> np.ndarray:
    """W_t = (F_l F_l^T + gamma * DD)^-1 (F_l Y^T - F_l F_l^T W_d)."""
    if f_l.shape[1] != y.shape[1]:
        raise ValueError(f"features have {f_l.shape[1]} columns, labels have {y.shape[1]}")
    lhs = _weights_system(f_l, d, gamma)
    rhs = f_l @ y.T - (f_l @ f_l.T) @ wd.wd
    return _spd_solve(lhs, rhs, "noisy task weight update")


def update_noise_weights(
    f_l_all: Sequence[np.ndarray],
    y_all: Sequence[np.ndarray],
    w_all: Sequence[np.ndarray],
    mu: float,
    wd_prev: NoiseWeights,
) -> NoiseWeights:
    """One reweighted least-squares step for the L2,1-penalized noise weights."""
    if mu <= 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    if not (len(f_l_all) == len(y_all) == len(w_all)) or not f_l_all:
        raise ValueError("noise update needs matching, non-empty per-task inputs")
    gram = sum(f_l @ f_l.T for f_l in f_l_all)
    rhs = sum(f_l @ y.T - (f_l @ f_l.T) @ w for f_l, y, w in zip(f_l_all, y_all, w_all))
    lhs = gram + mu * np.diag(wd_prev.reweighting())
    lhs = 0.5 * (lhs + lhs.T)
    return NoiseWeights(_spd_solve(lhs, rhs, "noise weight update"), wd_prev.irls_eps)


def update_coupling(
    w_all: Sequence[np.ndarray],
    ridge_eps: float = 1e-8,
) -> Tuple[CouplingMatrix, float]:
    """D = (W W^T)^(1/2) / tr((W W^T)^(1/2)); also returns tr((W W^T)^(1/2))^2."""
    if not w_all:
        raise ValueError("coupling update needs at least one task")
    w = np.hstack(list(w_all))
    root = matrix_sqrt_psd(w @ w.T)
    trace = float(np.trace(root))
    if trace <= 0.0 or not np.isfinite(trace):
        logger.debug("all task weights are zero; coupling falls back to I/K")
        return CouplingMatrix.identity(w.shape[0], ridge_eps), 0.0
    return CouplingMatrix(root / trace, ridge_eps), trace**2


def coupling_penalty(w_all: Sequence[np.ndarray], d: CouplingMatrix, dd: Optional[np.ndarray] = None) -> float:
    """sum_t tr(W_t^T DD W_t), the coupling term the closed-form W_t update minimizes exactly.

    For the symmetric ridged D this is 2 * sum_t tr(W_t^T D~^-1 W_t).
    """
    if dd is None:
        dd = compute_dd(d)
    return float(sum(np.trace(w.T @ dd @ w) for w in w_all))
