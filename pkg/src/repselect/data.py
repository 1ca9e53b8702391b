"""Core value types: datasets, distance matrices, selections and solve results."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DataError(ValueError):
    """Base class for invalid input data."""


class DimensionError(DataError):
    pass


class LabelError(DataError):
    pass


class SizeError(DataError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """``n`` data points stored as rows of a common length ``m``."""

    rows: np.ndarray
    labels: tuple[str, ...] | None = None

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def m(self) -> int:
        return self.rows.shape[1]

    def label_of(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = [f"f{j}" for j in range(self.m)]
        w.writerow((["label"] if self.labels is not None else []) + cols)
        for i, row in enumerate(self.rows):
            vals = [repr(float(v)) for v in row]
            w.writerow(([self.labels[i]] if self.labels is not None else []) + vals)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def make_data_matrix(
    rows: Iterable[Sequence[float]], labels: Sequence[str] | None = None, *, min_rows: int = 2
) -> DataMatrix:
    """Validate rows into a read-only matrix.

    Selection needs at least two points; ``min_rows=1`` admits a single
    series for return and index arithmetic.
    """
    rows = [list(r) for r in rows]
    if not rows:
        raise SizeError(f"data matrix needs at least {min_rows} rows, got 0")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DimensionError(f"ragged rows: found lengths {sorted(widths)}")
    if widths.pop() < 1:
        raise DimensionError("rows must have at least one column")
    if len(rows) < min_rows:
        raise SizeError(f"data matrix needs at least {min_rows} rows, got {len(rows)}")
    arr = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DataError("data matrix contains non-finite values")
    if labels is not None:
        labels = tuple(str(s) for s in labels)
        if len(labels) != len(rows):
            raise LabelError(f"expected {len(rows)} labels, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise LabelError("labels must be distinct")
    return DataMatrix(_frozen(arr), labels)


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_data_csv(path: str | Path) -> DataMatrix:
    """Read a data CSV.

    The header row is optional and detected by the presence of non-numeric
    fields beyond the first column.  A non-numeric leading column is read as
    labels.
    """
    with open(path, newline="") as fh:
        records = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not records:
        raise SizeError(f"{path}: no data rows")
    if not all(_is_float(c) for c in records[0][1:]) or (
        len(records) > 1 and not _is_float(records[0][0]) and _is_float(records[1][0])
    ):
        records = records[1:]
    has_labels = any(not _is_float(r[0]) for r in records)
    if has_labels:
        labels = [r[0].strip() for r in records]
        body = [r[1:] for r in records]
    else:
        labels, body = None, records
    try:
        rows = [[float(c) for c in r] for r in body]
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return make_data_matrix(rows, labels)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric, zero-diagonal, nonnegative ``n x n`` matrix."""

    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_upper(cls, full: np.ndarray) -> "DistanceMatrix":
        """Build from the strict upper triangle of ``full``; the rest is mirrored."""
        full = np.asarray(full, dtype=np.float64)
        if full.ndim != 2 or full.shape[0] != full.shape[1]:
            raise DimensionError(f"distance matrix must be square, got shape {full.shape}")
        upper = np.triu(full, k=1)
        sym = upper + upper.T
        if not np.all(np.isfinite(sym)):
            raise DataError("distance matrix has non-finite entries")
        if np.any(sym < 0):
            raise DataError("distance matrix has negative entries")
        return cls(_frozen(sym))


@dataclass(frozen=True)
class Selection:
    chosen: tuple[int, ...]
    n: int

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.chosen, self.chosen[1:])):
            raise ValueError("selection indices must be strictly increasing")
        if self.chosen and (self.chosen[0] < 0 or self.chosen[-1] >= self.n):
            raise ValueError(f"selection index out of range [0, {self.n})")

    @property
    def bits(self) -> np.ndarray:
        x = np.zeros(self.n, dtype=np.int8)
        x[list(self.chosen)] = 1
        return x

    @classmethod
    def from_indices(cls, indices: Iterable[int], n: int) -> "Selection":
        idx = sorted(int(i) for i in indices)
        if len(set(idx)) != len(idx):
            raise ValueError("duplicate selection indices")
        return cls(tuple(idx), n)

    def __len__(self) -> int:
        return len(self.chosen)


def selection_from_bits(bits: Sequence[int] | np.ndarray) -> Selection:
    x = np.asarray(bits).astype(np.int8)
    return Selection(tuple(int(i) for i in np.flatnonzero(x)), len(x))


def bits_to_str(bits: Sequence[int] | np.ndarray) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits))


def bits_from_str(s: str) -> np.ndarray:
    s = s.strip()
    if set(s) - {"0", "1"}:
        raise DataError(f"not a bit string: {s!r}")
    return np.array([c == "1" for c in s], dtype=np.int8)


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Best state found by one solver run.

    ``trials`` is the number of independent restarts the run folded together.
    ``stats`` carries solver instrumentation counters.
    """

    best_bits: np.ndarray
    energy: float
    hamming_weight: int
    constraint_satisfied: bool
    solver_name: str
    seed: int
    trials: int
    wall_time: float = 0.0
    stats: dict = field(default_factory=dict)

    def to_dict(self, *, include_time: bool = False) -> dict:
        d = {
            "best_bits": bits_to_str(self.best_bits),
            "energy": self.energy,
            "hamming_weight": self.hamming_weight,
            "constraint_satisfied": self.constraint_satisfied,
            "solver_name": self.solver_name,
            "seed": self.seed,
            "trials": self.trials,
            "stats": dict(self.stats),
        }
        if include_time:
            d["wall_time"] = self.wall_time
        return d
