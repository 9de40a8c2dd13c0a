"""Shared hyperparameters, enums, and error types for the MTMVCSF solvers."""

from __future__ import annotations

import math
from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

try:  # Python < 3.11 fallback
    from enum import StrEnum
except ImportError:
    class StrEnum(str, Enum):
        """Minimal StrEnum replacement for older Python versions."""

        def __str__(self) -> str:
            return str(self.value)


class MTMVError(Exception):
    """Base class for every error raised by this package."""


class SolverError(MTMVError, RuntimeError):
    """A numerical subproblem could not be solved."""


class DivergenceError(SolverError):
    """The training objective became non-finite or jumped upward."""


class Algorithm(StrEnum):
    """Training schedules supported by the trainer."""

    STANDARD = "standard"
    ANTI_NOISE = "an"


class Hyperparams(BaseModel):
    """Tradeoff weights, factor dimensions, and stopping rules for one fit."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    beta: float = Field(default=1e-5, ge=0.0)
    gamma: float = Field(default=1e-4, gt=0.0)
    lam: float = Field(default=1.0, gt=0.0, alias="lambda")
    mu: float = Field(default=1e-4, gt=0.0)
    k_per_view: int = Field(default=50, ge=2)
    kc_per: float = Field(default=0.4, gt=0.0, lt=1.0)
    max_iters: int = Field(default=100, ge=0)
    rel_tol: float = Field(default=1e-5, gt=0.0)
    seed: int = 0
    normalize_input: bool = True
    ridge_eps: float = Field(default=1e-8, gt=0.0)
    irls_eps: float = Field(default=1e-8, gt=0.0)
    den_eps: float = Field(default=1e-12, gt=0.0)
    divergence_ratio: float = Field(default=0.10, gt=0.0)
    h_orientation: Literal["kkt", "printed"] = "kkt"

    @property
    def n_common(self) -> int:
        """Rows of the common factor block, Kc = round(KcPer * K)."""
        return int(math.floor(self.kc_per * self.k_per_view + 0.5))

    @property
    def n_specific(self) -> int:
        """Rows of each view-specific factor block, Ks = K - Kc."""
        return self.k_per_view - self.n_common

    def joint_dim(self, n_views: int) -> int:
        """Row count of the fused latent feature, Ks * V + Kc."""
        return self.n_specific * n_views + self.n_common

    @model_validator(mode="after")
    def check_block_sizes(self) -> "Hyperparams":
        if self.n_common < 1 or self.n_specific < 1:
            msg = (
                f"k_per_view={self.k_per_view} with kc_per={self.kc_per} gives "
                f"Ks={self.n_specific}, Kc={self.n_common}; both must be >= 1"
            )
            raise ValueError(msg)
        return self
