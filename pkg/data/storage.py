"""Atomic file writers shared by dataset serialization and report exports."""

from __future__ import annotations

import csv
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence, Union

import numpy as np

from data.models import DatasetError

FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


@contextmanager
def atomic_open(path: PathLike) -> Iterator[IO[str]]:
    """Yield a text handle on a temp file beside ``path``; rename it into place on success."""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    except OSError as exc:
        raise DatasetError(f"cannot write {target}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            yield handle
        os.replace(tmp_name, target)
    except OSError as exc:
        Path(tmp_name).unlink(missing_ok=True)
        raise DatasetError(f"cannot write {target}: {exc}") from exc
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def atomic_write_text(path: PathLike, text: str) -> Path:
    with atomic_open(path) as handle:
        handle.write(text)
    return Path(path)


def atomic_write_matrix(path: PathLike, values: np.ndarray, fmt: str = FLOAT_FORMAT) -> Path:
    """Headerless comma-separated rows; a 1-D array becomes a single row."""
    with atomic_open(path) as handle:
        np.savetxt(handle, np.atleast_2d(values), fmt=fmt, delimiter=",", newline="\n")
    return Path(path)


def atomic_write_csv(
    path: PathLike,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
) -> Path:
    """Write a CSV table with a header row; floats use the round-trip format."""
    with atomic_open(path) as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_format_cell(cell) for cell in row] for row in rows)
    return Path(path)


def _format_cell(cell: object) -> str:
    if isinstance(cell, (bool, np.bool_)):
        return "true" if cell else "false"
    if isinstance(cell, (float, np.floating)):
        return FLOAT_FORMAT % float(cell)
    if isinstance(cell, (int, np.integer)):
        return str(int(cell))
    return str(cell)
