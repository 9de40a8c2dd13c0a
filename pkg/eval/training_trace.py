"""Per-iteration training traces stored as JSONL, one file shared by any number of runs."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel

from data.models import DatasetError
from data.storage import atomic_write_text

logger = logging.getLogger("mtmvcsf.trace")


class IterationTraceEntry(BaseModel):
    """Objective and its terms after one outer iteration of a training run."""

    run_id: str
    algorithm: str
    iteration: int
    objective: float
    rel_change: Optional[float] = None
    terms: Dict[str, float]


class TraceSummary(BaseModel):
    run_id: str
    iterations: int
    initial_objective: float
    final_objective: float
    final_rel_change: Optional[float]
    largest_increase: float

    @property
    def non_increasing(self) -> bool:
        return self.largest_increase <= 0.0


@dataclass
class TrainingTraceLogger:
    """Append-only JSONL trace; a run restarted under the same id replaces its old entries."""

    path: Path

    def start_run(self, run_id: str) -> None:
        entries = self.read()
        kept = [entry for entry in entries if entry.run_id != run_id]
        if len(kept) == len(entries):
            return
        logger.info("dropping %d stale trace entries of run %s", len(entries) - len(kept), run_id)
        atomic_write_text(self.path, "".join(entry.model_dump_json() + "\n" for entry in kept))

    def append(self, entry: IterationTraceEntry) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(entry.model_dump_json() + "\n")

    def read(self, run_id: Optional[str] = None) -> List[IterationTraceEntry]:
        if not self.path.exists():
            return []
        entries: List[IterationTraceEntry] = []
        with self.path.open("r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = IterationTraceEntry.model_validate_json(line)
                except ValueError:
                    # truncated last line of an interrupted run
                    continue
                if run_id is None or entry.run_id == run_id:
                    entries.append(entry)
        return entries

    def summarize(self, run_id: str) -> TraceSummary:
        entries = self.read(run_id)
        if not entries:
            raise DatasetError(f"trace {self.path} has no entries for run {run_id}")
        objectives = [entry.objective for entry in entries]
        increases = [after - before for before, after in zip(objectives, objectives[1:])]
        return TraceSummary(
            run_id=run_id,
            iterations=entries[-1].iteration,
            initial_objective=objectives[0],
            final_objective=objectives[-1],
            final_rel_change=entries[-1].rel_change,
            largest_increase=max(increases, default=0.0),
        )
