"""Command-line entry point: generate, train, noise-sweep, evaluate, and grid."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import yaml
from pydantic import ValidationError

from app.config import RunConfig, resolve_config
from data.loaders.dataset_files import save_dataset
from data.models import DatasetError, DatasetManifest
from data.synthetic import generate_synth
from eval.exports import write_comparisons, write_grid, write_size_sweep, write_sweep, write_train_outputs
from eval.protocols import latent_vs_raw, noise_sweep, segmented_grid_search, summarize_comparisons, training_size_sweep
from eval.training_trace import TrainingTraceLogger
from model.base import Algorithm, MTMVError, SolverError
from model.trainer import Trainer

logger = logging.getLogger("mtmvcsf.cli")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def cmd_generate(config: RunConfig) -> List[Path]:
    """Write the configured synthetic dataset and print its manifest summary."""
    if config.synth is None:
        raise ValueError("generate needs a synth recipe (use --preset synth1/synth2 or a synth block)")
    ds = generate_synth(config.synth)
    root = save_dataset(ds, config.output_dir)
    manifest = DatasetManifest.from_dataset(ds)
    print(
        f"{manifest.name}: T={manifest.n_tasks} V={manifest.n_views} C={manifest.n_classes} "
        f"N={manifest.n_total} N_l={manifest.n_labeled} dims={manifest.dims[0]} -> {root}"
    )
    return [root]


def cmd_train(config: RunConfig) -> List[Path]:
    ds = config.load_dataset()
    hp = config.hyperparams_for()
    trace_path = config.output_dir / "trace.jsonl"
    run_id = f"{ds.name}-{config.algorithm.value}-{hp.seed}"
    trace_logger = TrainingTraceLogger(trace_path)
    trace_logger.start_run(run_id)
    report = Trainer(hp, config.algorithm, trace_logger=trace_logger, run_id=run_id).fit(ds)
    written = write_train_outputs(report, config.output_dir, config.document(), config.record_timings)
    summary = trace_logger.summarize(run_id)
    if not summary.non_increasing:
        logger.warning("run %s: objective rose by up to %.3e between iterations", run_id, summary.largest_increase)
    print(f"{config.algorithm.value}: converged={report.converged} iterations={summary.iterations} "
          f"objective {summary.initial_objective:.6g} -> {summary.final_objective:.6g}")
    return written + [trace_path]


def cmd_noise_sweep(config: RunConfig) -> List[Path]:
    experiment = config.experiment
    table = noise_sweep(
        config.load_dataset(),
        config.hyperparams,
        config.hyperparams_an,
        experiment.noise_fractions,
        experiment.seeds,
        workers=experiment.workers,
    )
    return write_sweep(table, config.output_dir, config.document())


def cmd_evaluate(config: RunConfig) -> List[Path]:
    experiment = config.experiment
    ds = config.load_dataset()
    hp = config.hyperparams_for()
    if experiment.eval_mode == "sizes":
        rows = training_size_sweep(ds, hp, experiment.sizes, experiment.seeds, config.algorithm, experiment.workers)
        return write_size_sweep(rows, config.output_dir, config.document())
    tables = [latent_vs_raw(ds, hp, experiment.eval_mode, seed, config.algorithm) for seed in experiment.seeds]
    return write_comparisons(tables, summarize_comparisons(tables), config.output_dir, config.document())


def cmd_grid(config: RunConfig) -> List[Path]:
    experiment = config.experiment
    hp = config.hyperparams_for()
    result = segmented_grid_search(
        config.load_dataset(),
        hp,
        config.algorithm,
        experiment.model_grid,
        experiment.dim_grid,
        seed=hp.seed,
        workers=experiment.workers,
    )
    print(f"best score {result.best_score:.4f} with {result.best.model_dump(by_alias=True)}")
    return write_grid(result, config.output_dir, config.document())


COMMANDS: Dict[str, Callable[[RunConfig], List[Path]]] = {
    "generate": cmd_generate,
    "train": cmd_train,
    "noise-sweep": cmd_noise_sweep,
    "evaluate": cmd_evaluate,
    "grid": cmd_grid,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtmvcsf", description=__doc__)
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = commands.add_parser(name)
        sub.add_argument("--config", type=Path, help="YAML run configuration")
        sub.add_argument("--seed", type=int)
        sub.add_argument("--out", type=Path, help="output directory")
        sub.add_argument("--preset", help="dataset preset, e.g. synth1")
        sub.add_argument("--dataset", type=Path, help="dataset directory")
        sub.add_argument("--algorithm", choices=[a.value for a in Algorithm])
        sub.add_argument("--max-iters", type=int, dest="max_iters")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    overrides = {
        "seed": args.seed,
        "out": args.out,
        "preset": args.preset,
        "dataset": args.dataset,
        "algorithm": args.algorithm,
        "max_iters": args.max_iters,
    }
    try:
        config = resolve_config(args.config, overrides)
        written = COMMANDS[args.command](config)
    except (ValidationError, DatasetError, yaml.YAMLError, ValueError, OSError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_VALIDATION
    except (SolverError, MTMVError, RuntimeError) as exc:
        logger.error("%s aborted: %s", args.command, exc)
        return EXIT_RUNTIME
    logger.info("%s wrote %d file(s)", args.command, len(written))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
