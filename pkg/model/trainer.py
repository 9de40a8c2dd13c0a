"""Alternating optimization of the standard and anti-noise MTMVCSF objectives."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

import numpy as np
from pydantic import BaseModel

from data.models import MultiViewDataset
from data.preprocess.normalize import normalize_dataset
from eval.training_trace import IterationTraceEntry, TrainingTraceLogger
from model.base import Algorithm, DivergenceError, Hyperparams, SolverError
from model.factorization import (
    BasisMatrix,
    BlockLayout,
    FactorBlocks,
    FactorRatios,
    JointFeatures,
    assemble_joint_features,
    compute_h_split,
    factor_ratios,
    labeled_joint,
    update_basis,
    update_factor_blocks,
)
from model.multitask_regression import (
    CouplingMatrix,
    NoiseWeights,
    compute_dd,
    coupling_penalty,
    l21_norm,
    update_coupling,
    update_noise_weights,
    update_task_weights,
    update_task_weights_noisy,
)
from model.simplex_qp import ViewWeights, solve_view_weights

PHASES = ("weights", "noise", "coupling", "basis", "factors", "view_weights", "objective")


@dataclass(eq=False)
class TrainState:
    """Every variable of one run; bases and factors are indexed [t][v] and [t]."""

    dataset: MultiViewDataset
    layout: BlockLayout
    bases: List[List[BasisMatrix]]
    factors: List[FactorBlocks]
    weights: List[np.ndarray]
    coupling: CouplingMatrix
    view_weights: ViewWeights
    noise: Optional[NoiseWeights] = None
    iteration: int = 0
    labels: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.labels:
            self.labels = [task.labels.one_hot for task in self.dataset.tasks]

    def view_matrix(self, t: int, v: int) -> np.ndarray:
        return self.dataset.tasks[t].views[v].values

    def views(self, t: int) -> List[np.ndarray]:
        return [view.values for view in self.dataset.tasks[t].views]

    def labeled_features(self, t: int) -> np.ndarray:
        return labeled_joint(self.factors[t])

    def joint_features(self) -> List[JointFeatures]:
        return [assemble_joint_features(blocks) for blocks in self.factors]

    def view_errors(self) -> np.ndarray:
        """T x V matrix of ||X - B F||_F^2."""
        errors = np.zeros((self.dataset.n_tasks, self.dataset.n_views))
        for t, blocks in enumerate(self.factors):
            for v in range(self.dataset.n_views):
                residual = self.view_matrix(t, v) - self.bases[t][v].b @ blocks.view(v).full()
                errors[t, v] = float(np.sum(residual * residual))
        return errors

    def check_invariants(self) -> None:
        """Raise SolverError if a nonnegativity, simplex, or coupling invariant is broken."""
        for t, blocks in enumerate(self.factors):
            if blocks.min_entry() < 0:
                raise SolverError(f"task {t}: negative factor entry")
            for v, basis in enumerate(self.bases[t]):
                if basis.b.min() < 0:
                    raise SolverError(f"task {t} view {v}: negative basis entry")
        d = self.coupling.d
        if abs(np.trace(d) - 1.0) > 1e-10:
            raise SolverError(f"coupling trace {np.trace(d):.12g} != 1")
        if np.linalg.eigvalsh(d).min() < -1e-10:
            raise SolverError("coupling matrix is not PSD")
        pi = self.view_weights.pi
        if pi.min() < 0 or abs(pi.sum() - 1.0) > 1e-10:
            raise SolverError("view weights left the simplex")


class ObjectiveTerms(BaseModel):
    """Breakdown of the objective; ``coupling`` and ``noise`` include gamma and mu."""

    reconstruction: float
    view_errors: List[List[float]]
    view_penalty: float
    prediction: float
    coupling: float
    noise: float = 0.0
    beta: float
    total: float

    def scalars(self) -> Dict[str, float]:
        return {
            "reconstruction": self.reconstruction,
            "view_penalty": self.view_penalty,
            "prediction": self.prediction,
            "coupling": self.coupling,
            "noise": self.noise,
        }


def prepare_dataset(ds: MultiViewDataset, hp: Hyperparams) -> MultiViewDataset:
    return normalize_dataset(ds) if hp.normalize_input else ds


def _init_scale(mean: float, k: int, partner: Optional[float] = None) -> float:
    """Upper end of a uniform draw so that E[(B F)_ij] equals ``mean`` for inner dimension ``k``.

    Without ``partner`` both sides share the scale; with it, the other side is drawn on [0, partner].
    """
    if mean <= 0.0:
        return 1.0
    if partner is None:
        return 2.0 * float(np.sqrt(mean / k))
    return 4.0 * mean / (k * partner)


def initialize_state(ds: MultiViewDataset, hp: Hyperparams, algorithm: Algorithm = Algorithm.STANDARD) -> TrainState:
    """Uniform bases and factors from the run seed, scaled to the data mean; W_t = 0, W_d = 0, D = I / K.

    A task's factor blocks are drawn on [0, 2 sqrt(m / K_v)] with m the mean over its views,
    and each B_v is sized so the first reconstruction of view v has the mean of X_v.
    """
    layout = BlockLayout(ds.n_views, hp.n_specific, hp.n_common)
    rng = np.random.default_rng(hp.seed)
    bases: List[List[BasisMatrix]] = []
    factors: List[FactorBlocks] = []
    for task in ds.tasks:
        view_means = [float(view.values.mean()) for view in task.views]
        factor_scale = _init_scale(float(np.mean(view_means)), layout.k_per_view)
        task_bases: List[BasisMatrix] = []
        specific_labeled: List[np.ndarray] = []
        specific_unlabeled: List[np.ndarray] = []
        for view, view_mean in zip(task.views, view_means):
            basis_scale = _init_scale(view_mean, layout.k_per_view, factor_scale)
            task_bases.append(
                BasisMatrix(rng.uniform(0.0, basis_scale, size=(view.n_features, layout.k_per_view)), layout.n_specific)
            )
            specific_labeled.append(rng.uniform(0.0, factor_scale, size=(layout.n_specific, ds.n_labeled)))
            specific_unlabeled.append(rng.uniform(0.0, factor_scale, size=(layout.n_specific, ds.n_unlabeled)))
        common_labeled = rng.uniform(0.0, factor_scale, size=(layout.n_common, ds.n_labeled))
        common_unlabeled = rng.uniform(0.0, factor_scale, size=(layout.n_common, ds.n_unlabeled))
        bases.append(task_bases)
        factors.append(FactorBlocks(specific_labeled, specific_unlabeled, common_labeled, common_unlabeled))

    noise = None
    if algorithm == Algorithm.ANTI_NOISE:
        noise = NoiseWeights.zeros(layout.k_joint, ds.n_classes, hp.irls_eps)
    return TrainState(
        dataset=ds,
        layout=layout,
        bases=bases,
        factors=factors,
        weights=[np.zeros((layout.k_joint, ds.n_classes)) for _ in ds.tasks],
        coupling=CouplingMatrix.identity(layout.k_joint, hp.ridge_eps),
        view_weights=ViewWeights.uniform(ds.n_tasks * ds.n_views, hp.lam),
        noise=noise,
    )


def objective_terms(state: TrainState, hp: Hyperparams, noisy: bool = False) -> ObjectiveTerms:
    errors = state.view_errors()
    pi = state.view_weights.pi.reshape(errors.shape)
    reconstruction = float(np.sum(pi * errors))
    view_penalty = float(hp.lam * np.dot(state.view_weights.pi, state.view_weights.pi))

    wd = state.noise.wd if noisy and state.noise is not None else None
    prediction = 0.0
    for t, w_t in enumerate(state.weights):
        w = w_t if wd is None else w_t + wd
        residual = state.labels[t] - w.T @ state.labeled_features(t)
        prediction += float(np.sum(residual * residual))
    coupling = hp.gamma * coupling_penalty(state.weights, state.coupling, compute_dd(state.coupling))
    noise = hp.mu * l21_norm(wd) if wd is not None else 0.0

    total = reconstruction + view_penalty + hp.beta * (prediction + coupling + noise)
    return ObjectiveTerms(
        reconstruction=reconstruction,
        view_errors=errors.tolist(),
        view_penalty=view_penalty,
        prediction=prediction,
        coupling=coupling,
        noise=noise,
        beta=hp.beta,
        total=total,
    )


def objective(state: TrainState, hp: Hyperparams) -> float:
    """Weighted reconstruction + lambda ||pi||^2 + beta * (prediction + coupling)."""
    return objective_terms(state, hp, noisy=False).total


def objective_noisy(state: TrainState, hp: Hyperparams) -> float:
    """As ``objective`` with W_t + W_d in the prediction term plus mu * ||W_d||_{2,1}."""
    return objective_terms(state, hp, noisy=True).total


def min_max_normalize(trace: List[float]) -> List[float]:
    low, high = min(trace), max(trace)
    if high == low:
        return [0.0 for _ in trace]
    return [(value - low) / (high - low) for value in trace]


@dataclass(eq=False)
class TrainReport:
    """Outcome of one training run."""

    algorithm: Algorithm
    hyperparams: Hyperparams
    objective_trace: List[float]
    terms: List[ObjectiveTerms]
    converged: bool
    iterations: int
    state: TrainState
    timings_ms: Dict[str, float] = field(default_factory=dict)
    phase_trace: List[Dict[str, float]] = field(default_factory=list)

    @property
    def normalized_trace(self) -> List[float]:
        return min_max_normalize(self.objective_trace)

    @property
    def features(self) -> List[JointFeatures]:
        return self.state.joint_features()

    @property
    def weights(self) -> List[np.ndarray]:
        return self.state.weights

    @property
    def noise_weights(self) -> Optional[NoiseWeights]:
        return self.state.noise

    def sq_ratios(self) -> List[FactorRatios]:
        """Multiplicative factors the next factor sweep would apply, per task."""
        state = self.state
        hp = self.hyperparams
        wd = state.noise.wd if state.noise is not None else None
        ratios: List[FactorRatios] = []
        for t, blocks in enumerate(state.factors):
            h = compute_h_split(state.weights[t], state.labeled_features(t), state.labels[t], state.layout, wd)
            pi_t = state.view_weights.pi.reshape(state.dataset.n_tasks, -1)[t]
            ratios.append(
                factor_ratios(blocks, state.bases[t], state.views(t), pi_t, h, hp.beta, hp.den_eps, hp.h_orientation)
            )
        return ratios


@dataclass
class Trainer:
    """Runs the alternating schedule of one algorithm until the objective settles."""

    hp: Hyperparams
    algorithm: Algorithm = Algorithm.STANDARD
    trace_logger: Optional[TrainingTraceLogger] = None
    run_id: str = "train"
    record_phases: bool = False

    def __post_init__(self) -> None:
        self._logger = logging.getLogger(f"mtmvcsf.{self.__class__.__name__}")
        self._timings: Dict[str, float] = {}

    @property
    def noisy(self) -> bool:
        return self.algorithm == Algorithm.ANTI_NOISE

    @contextmanager
    def _timed(self, phase: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = (time.perf_counter() - start) * 1000.0
            self._timings[phase] = self._timings.get(phase, 0.0) + elapsed

    def fit(self, ds: MultiViewDataset, state: Optional[TrainState] = None) -> TrainReport:
        """Fit from ``ds``; a prepared ``state`` from initialize_state may be passed instead."""
        start = time.perf_counter()
        self._timings = {phase: 0.0 for phase in PHASES}
        hp = self.hp
        if state is None:
            state = initialize_state(prepare_dataset(ds, hp), hp, self.algorithm)
        self._logger.info(
            "fitting %s on %s (T=%d V=%d N=%d, K_joint=%d, max_iters=%d)",
            self.algorithm.value, state.dataset.name, state.dataset.n_tasks, state.dataset.n_views,
            state.dataset.n_total, state.layout.k_joint, hp.max_iters,
        )

        terms = objective_terms(state, hp, self.noisy)
        trace = [terms.total]
        all_terms = [terms]
        phase_trace: List[Dict[str, float]] = []
        self._log_trace(0, terms)

        converged = False
        for iteration in range(1, hp.max_iters + 1):
            phases = self._sweep(state)
            state.iteration = iteration
            state.check_invariants()
            with self._timed("objective"):
                terms = objective_terms(state, hp, self.noisy)
            if self.record_phases:
                phase_trace.append(phases)

            previous, current = trace[-1], terms.total
            trace.append(current)
            all_terms.append(terms)
            change = abs(previous - current) / max(abs(previous), np.finfo(float).tiny)
            self._log_trace(iteration, terms, change)
            self._guard(iteration, previous, current)
            self._logger.debug("iteration %d objective %.10g (relative change %.3e)", iteration, current, change)
            if change < hp.rel_tol:
                converged = True
                break

        iterations = len(trace) - 1
        if converged:
            self._logger.info("converged after %d iteration(s), objective %.10g", iterations, trace[-1])
        elif hp.max_iters > 0:
            self._logger.warning("stopped at max_iters=%d without converging", hp.max_iters)
        self._timings["total"] = (time.perf_counter() - start) * 1000.0
        return TrainReport(
            algorithm=self.algorithm,
            hyperparams=hp,
            objective_trace=trace,
            terms=all_terms,
            converged=converged,
            iterations=iterations,
            state=state,
            timings_ms=dict(self._timings),
            phase_trace=phase_trace,
        )

    def _guard(self, iteration: int, previous: float, current: float) -> None:
        if not np.isfinite(current):
            raise DivergenceError(f"objective became non-finite at iteration {iteration}")
        if current > previous * (1.0 + self.hp.divergence_ratio):
            msg = (
                f"objective rose from {previous:.6g} to {current:.6g} at iteration {iteration} "
                f"(more than {self.hp.divergence_ratio:.0%}); check beta, gamma and mu"
            )
            raise DivergenceError(msg)

    def _phase_value(self, state: TrainState) -> float:
        return objective_terms(state, self.hp, self.noisy).total

    def _sweep(self, state: TrainState) -> Dict[str, float]:
        """One outer iteration; returns the objective after each phase when recording."""
        hp = self.hp
        ds = state.dataset
        phases: Dict[str, float] = {}

        def mark(name: str) -> None:
            if self.record_phases:
                phases[name] = self._phase_value(state)

        f_l = [state.labeled_features(t) for t in range(ds.n_tasks)]
        with self._timed("weights"):
            if self.noisy:
                state.weights = [
                    update_task_weights_noisy(f_l[t], state.labels[t], state.coupling, state.noise, hp.gamma)
                    for t in range(ds.n_tasks)
                ]
            else:
                state.weights = [
                    update_task_weights(f_l[t], state.labels[t], state.coupling, hp.gamma)
                    for t in range(ds.n_tasks)
                ]
        mark("weights")

        if self.noisy:
            with self._timed("noise"):
                state.noise = update_noise_weights(f_l, state.labels, state.weights, hp.mu, state.noise)
            mark("noise")

        with self._timed("coupling"):
            state.coupling, _ = update_coupling(state.weights, hp.ridge_eps)
        mark("coupling")

        wd = state.noise.wd if self.noisy else None
        pi = state.view_weights.pi.reshape(ds.n_tasks, ds.n_views)
        # H from the snapshot taken before any basis or factor moves
        splits = [
            compute_h_split(state.weights[t], f_l[t], state.labels[t], state.layout, wd)
            for t in range(ds.n_tasks)
        ]
        with self._timed("basis"):
            for t in range(ds.n_tasks):
                state.bases[t] = [
                    update_basis(basis, state.view_matrix(t, v), state.factors[t].view(v).full(), hp.den_eps)
                    for v, basis in enumerate(state.bases[t])
                ]
        mark("basis")

        with self._timed("factors"):
            state.factors = [
                update_factor_blocks(
                    blocks, state.bases[t], state.views(t), pi[t], splits[t], hp.beta, hp.den_eps, hp.h_orientation
                )
                for t, blocks in enumerate(state.factors)
            ]
        mark("factors")

        with self._timed("view_weights"):
            state.view_weights = solve_view_weights(state.view_errors().reshape(-1), hp.lam)
        mark("view_weights")
        return phases

    def _log_trace(self, iteration: int, terms: ObjectiveTerms, rel_change: Optional[float] = None) -> None:
        if self.trace_logger is None:
            return
        self.trace_logger.append(
            IterationTraceEntry(
                run_id=self.run_id,
                algorithm=self.algorithm.value,
                iteration=iteration,
                objective=terms.total,
                rel_change=rel_change,
                terms=terms.scalars(),
            )
        )


def fit_mtmvcsf(ds: MultiViewDataset, hp: Hyperparams, **options) -> TrainReport:
    """Standard schedule: W_t, D, bases and factors, view weights."""
    return Trainer(hp, Algorithm.STANDARD, **options).fit(ds)


def fit_an_mtmvcsf(ds: MultiViewDataset, hp: Hyperparams, **options) -> TrainReport:
    """Anti-noise schedule: W_t, W_d, D, bases and factors, view weights."""
    return Trainer(hp, Algorithm.ANTI_NOISE, **options).fit(ds)


def fit(ds: MultiViewDataset, hp: Hyperparams, algorithm: Algorithm, **options) -> TrainReport:
    return Trainer(hp, Algorithm(algorithm), **options).fit(ds)
