"""Nonnegative bases and factor blocks with their multiplicative updates.

Each view of a task is factorized as X ~ B F with B = [B_specific, B_common] and
F = [F_specific; F_common]. The common rows are stored once per task and shared
by every view, so the fused feature of a task is

    F_t = [F^{1,s}; ...; F^{V,s}; F^c]     (Ks * V + Kc rows, labeled columns first)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

Orientation = Literal["kkt", "printed"]


@dataclass(frozen=True)
class BlockLayout:
    """Row layout of the fused feature of one task."""

    n_views: int
    n_specific: int
    n_common: int

    def __post_init__(self) -> None:
        if self.n_views < 1 or self.n_specific < 1 or self.n_common < 1:
            msg = f"invalid block layout V={self.n_views}, Ks={self.n_specific}, Kc={self.n_common}"
            raise ValueError(msg)

    @property
    def k_joint(self) -> int:
        return self.n_specific * self.n_views + self.n_common

    @property
    def k_per_view(self) -> int:
        return self.n_specific + self.n_common

    def specific_rows(self, v: int) -> slice:
        return slice(v * self.n_specific, (v + 1) * self.n_specific)

    @property
    def common_rows(self) -> slice:
        return slice(self.n_specific * self.n_views, self.k_joint)

    def block_map(self) -> Dict[str, List[int]]:
        """Half-open row ranges per block, keyed ``view<v>`` and ``common``."""
        blocks: Dict[str, List[int]] = {}
        for v in range(self.n_views):
            rows = self.specific_rows(v)
            blocks[f"view{v}"] = [rows.start, rows.stop]
        blocks["common"] = [self.common_rows.start, self.common_rows.stop]
        return blocks


@dataclass(eq=False)
class BasisMatrix:
    """M x (Ks + Kc) nonnegative basis; the first Ks columns are view specific."""

    b: np.ndarray
    n_specific: int

    def __post_init__(self) -> None:
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.b.ndim != 2 or not 0 < self.n_specific < self.b.shape[1]:
            raise ValueError(f"basis of shape {self.b.shape} cannot hold {self.n_specific} specific columns")
        if np.any(self.b < 0):
            raise ValueError("basis matrix has negative entries")

    @property
    def specific(self) -> np.ndarray:
        return self.b[:, : self.n_specific]

    @property
    def common(self) -> np.ndarray:
        return self.b[:, self.n_specific:]


@dataclass(eq=False)
class ViewFactors:
    """Handle onto the blocks of one view; common blocks are the task's own arrays."""

    blocks: "FactorBlocks"
    v: int

    @property
    def specific_labeled(self) -> np.ndarray:
        return self.blocks.specific_labeled[self.v]

    @property
    def specific_unlabeled(self) -> np.ndarray:
        return self.blocks.specific_unlabeled[self.v]

    @property
    def common_labeled(self) -> np.ndarray:
        return self.blocks.common_labeled

    @property
    def common_unlabeled(self) -> np.ndarray:
        return self.blocks.common_unlabeled

    def labeled(self) -> np.ndarray:
        return np.vstack([self.specific_labeled, self.common_labeled])

    def unlabeled(self) -> np.ndarray:
        return np.vstack([self.specific_unlabeled, self.common_unlabeled])

    def full(self) -> np.ndarray:
        """(Ks + Kc) x N factor of this view, labeled columns first."""
        return np.hstack([self.labeled(), self.unlabeled()])


@dataclass(eq=False)
class FactorBlocks:
    """Specific blocks per view and one shared common block pair for a task."""

    specific_labeled: List[np.ndarray]
    specific_unlabeled: List[np.ndarray]
    common_labeled: np.ndarray
    common_unlabeled: np.ndarray

    def __post_init__(self) -> None:
        if len(self.specific_labeled) != len(self.specific_unlabeled) or not self.specific_labeled:
            raise ValueError("specific blocks must be given for every view")
        for block in [*self.specific_labeled, *self.specific_unlabeled, self.common_labeled, self.common_unlabeled]:
            if np.any(block < 0):
                raise ValueError("factor blocks must be nonnegative")

    @property
    def layout(self) -> BlockLayout:
        return BlockLayout(
            n_views=len(self.specific_labeled),
            n_specific=self.specific_labeled[0].shape[0],
            n_common=self.common_labeled.shape[0],
        )

    @property
    def n_labeled(self) -> int:
        return self.common_labeled.shape[1]

    @property
    def n_unlabeled(self) -> int:
        return self.common_unlabeled.shape[1]

    def view(self, v: int) -> ViewFactors:
        return ViewFactors(self, v)

    def copy(self) -> "FactorBlocks":
        return FactorBlocks(
            specific_labeled=[block.copy() for block in self.specific_labeled],
            specific_unlabeled=[block.copy() for block in self.specific_unlabeled],
            common_labeled=self.common_labeled.copy(),
            common_unlabeled=self.common_unlabeled.copy(),
        )

    def min_entry(self) -> float:
        blocks = [*self.specific_labeled, *self.specific_unlabeled, self.common_labeled, self.common_unlabeled]
        return float(min(block.min(initial=np.inf) for block in blocks))


@dataclass(frozen=True, eq=False)
class JointFeatures:
    """Fused latent feature F_t of one task."""

    f: np.ndarray
    layout: BlockLayout
    n_labeled: int

    @property
    def labeled(self) -> np.ndarray:
        return self.f[:, : self.n_labeled]

    @property
    def unlabeled(self) -> np.ndarray:
        return self.f[:, self.n_labeled:]

    def block_map(self) -> Dict[str, List[int]]:
        return self.layout.block_map()

    def disassemble(self) -> FactorBlocks:
        layout = self.layout
        specific = [self.f[layout.specific_rows(v)] for v in range(layout.n_views)]
        common = self.f[layout.common_rows]
        return FactorBlocks(
            specific_labeled=[block[:, : self.n_labeled].copy() for block in specific],
            specific_unlabeled=[block[:, self.n_labeled:].copy() for block in specific],
            common_labeled=common[:, : self.n_labeled].copy(),
            common_unlabeled=common[:, self.n_labeled:].copy(),
        )


def assemble_joint_features(blocks: FactorBlocks) -> JointFeatures:
    """Stack view-specific blocks then the common block, labeled columns first."""
    rows = [
        np.hstack([labeled, unlabeled])
        for labeled, unlabeled in zip(blocks.specific_labeled, blocks.specific_unlabeled)
    ]
    rows.append(np.hstack([blocks.common_labeled, blocks.common_unlabeled]))
    return JointFeatures(np.vstack(rows), blocks.layout, blocks.n_labeled)


def labeled_joint(blocks: FactorBlocks) -> np.ndarray:
    """F_{t,l} without materializing the unlabeled columns."""
    return np.vstack([*blocks.specific_labeled, blocks.common_labeled])


def pos_neg_split(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(M+, M-) with M+ = (|M| + M) / 2 and M- = (|M| - M) / 2."""
    m = np.asarray(m, dtype=np.float64)
    magnitude = np.abs(m)
    return (magnitude + m) / 2.0, (magnitude - m) / 2.0


@dataclass(frozen=True, eq=False)
class HSplit:
    """Nonnegative parts of the prediction gradient H = H+ - H- over labeled columns."""

    plus: np.ndarray
    minus: np.ndarray
    layout: BlockLayout

    def specific(self, v: int) -> Tuple[np.ndarray, np.ndarray]:
        rows = self.layout.specific_rows(v)
        return self.plus[rows], self.minus[rows]

    def common(self) -> Tuple[np.ndarray, np.ndarray]:
        rows = self.layout.common_rows
        return self.plus[rows], self.minus[rows]


def compute_h_split(
    w_t: np.ndarray,
    f_l: np.ndarray,
    y: np.ndarray,
    layout: BlockLayout,
    wd: Optional[np.ndarray] = None,
) -> HSplit:
    """H+ = (W W^T)+ F_l + W- Y and H- = (W W^T)- F_l + W+ Y, with W = W_t (+ W_d)."""
    w = w_t if wd is None else w_t + wd
    if w.shape[0] != f_l.shape[0] or w.shape[1] != y.shape[0] or f_l.shape[1] != y.shape[1]:
        msg = f"inconsistent shapes W {w.shape}, F_l {f_l.shape}, Y {y.shape}"
        raise ValueError(msg)
    gram_plus, gram_minus = pos_neg_split(w @ w.T)
    w_plus, w_minus = pos_neg_split(w)
    plus = gram_plus @ f_l + w_minus @ y
    minus = gram_minus @ f_l + w_plus @ y
    return HSplit(plus, minus, layout)


def update_basis(b: BasisMatrix, x: np.ndarray, f: np.ndarray, den_eps: float = 1e-12) -> BasisMatrix:
    """B <- B * (X F^T) / (B F F^T + eps)."""
    numerator = x @ f.T
    denominator = b.b @ (f @ f.T) + den_eps
    return BasisMatrix(b.b * (numerator / denominator), b.n_specific)


@dataclass(frozen=True, eq=False)
class FactorRatios:
    """Square-root multiplicative factors for every block of one task."""

    specific_labeled: List[np.ndarray]
    specific_unlabeled: List[np.ndarray]
    common_labeled: np.ndarray
    common_unlabeled: np.ndarray

    def apply(self, blocks: FactorBlocks) -> FactorBlocks:
        return FactorBlocks(
            specific_labeled=[f * r for f, r in zip(blocks.specific_labeled, self.specific_labeled)],
            specific_unlabeled=[f * r for f, r in zip(blocks.specific_unlabeled, self.specific_unlabeled)],
            common_labeled=blocks.common_labeled * self.common_labeled,
            common_unlabeled=blocks.common_unlabeled * self.common_unlabeled,
        )

    def pairs(self, blocks: FactorBlocks) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(values, ratios) for every block, in layout order."""
        pairs = list(zip(blocks.specific_labeled, self.specific_labeled))
        pairs += list(zip(blocks.specific_unlabeled, self.specific_unlabeled))
        pairs.append((blocks.common_labeled, self.common_labeled))
        pairs.append((blocks.common_unlabeled, self.common_unlabeled))
        return pairs


def _sq(numerator: np.ndarray, denominator: np.ndarray, den_eps: float) -> np.ndarray:
    return np.sqrt(numerator / (denominator + den_eps))


def factor_ratios(
    blocks: FactorBlocks,
    bases: Sequence[BasisMatrix],
    views: Sequence[np.ndarray],
    pi_t: np.ndarray,
    h: Optional[HSplit],
    beta: float,
    den_eps: float = 1e-12,
    orientation: Orientation = "kkt",
) -> FactorRatios:
    """Sq factors of all four block families, computed from one snapshot of ``blocks``.

    ``views`` are the task's view matrices, ``pi_t`` its V view weights. With
    ``h`` omitted or beta = 0 the labeled rules reduce to weighted NMF updates.
    """
    layout = blocks.layout
    n_labeled = blocks.n_labeled
    use_h = h is not None and beta > 0

    spec_l: List[np.ndarray] = []
    spec_u: List[np.ndarray] = []
    common_l_num = np.zeros_like(blocks.common_labeled)
    common_l_den = np.zeros_like(blocks.common_labeled)
    common_u_num = np.zeros_like(blocks.common_unlabeled)
    common_u_den = np.zeros_like(blocks.common_unlabeled)

    pi_t = np.asarray(pi_t, dtype=np.float64)
    # ratios without beta terms are invariant to a shared scale of the weights
    pi_u = pi_t / pi_t.sum() if pi_t.sum() > 0 else np.full(pi_t.size, 1.0 / pi_t.size)
    pi_l = pi_t if use_h else pi_u
    scale_l = pi_t if use_h else np.ones(pi_t.size)

    for v in range(layout.n_views):
        basis = bases[v]
        x_l = views[v][:, :n_labeled]
        x_u = views[v][:, n_labeled:]
        handle = blocks.view(v)
        recon_l = basis.b @ handle.labeled()
        recon_u = basis.b @ handle.unlabeled()

        num_l = scale_l[v] * (basis.specific.T @ x_l)
        den_l = scale_l[v] * (basis.specific.T @ recon_l)
        if use_h:
            h_plus, h_minus = h.specific(v)
            if orientation == "kkt":
                num_l = num_l + beta * h_minus
                den_l = den_l + beta * h_plus
            else:
                num_l = num_l + beta * h_plus
                den_l = den_l + beta * h_minus
        spec_l.append(_sq(num_l, den_l, den_eps))
        spec_u.append(_sq(basis.specific.T @ x_u, basis.specific.T @ recon_u, den_eps))

        common_l_num += pi_l[v] * (basis.common.T @ x_l)
        common_l_den += pi_l[v] * (basis.common.T @ recon_l)
        common_u_num += pi_u[v] * (basis.common.T @ x_u)
        common_u_den += pi_u[v] * (basis.common.T @ recon_u)

    if use_h:
        h_plus, h_minus = h.common()
        if orientation == "kkt":
            common_l_num += beta * h_minus
            common_l_den += beta * h_plus
        else:
            common_l_num += beta * h_plus
            common_l_den += beta * h_minus

    return FactorRatios(
        specific_labeled=spec_l,
        specific_unlabeled=spec_u,
        common_labeled=_sq(common_l_num, common_l_den, den_eps),
        common_unlabeled=_sq(common_u_num, common_u_den, den_eps),
    )


def update_factor_blocks(
    blocks: FactorBlocks,
    bases: Sequence[BasisMatrix],
    views: Sequence[np.ndarray],
    pi_t: np.ndarray,
    h: Optional[HSplit],
    beta: float,
    den_eps: float = 1e-12,
    orientation: Orientation = "kkt",
) -> FactorBlocks:
    """One snapshot sweep over the four block families of a task."""
    ratios = factor_ratios(blocks, bases, views, pi_t, h, beta, den_eps, orientation)
    return ratios.apply(blocks)
