"""Pairwise distances between data points."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import DataError, DataMatrix, DimensionError, DistanceMatrix


class DegenerateInputError(DataError):
    """A metric is undefined for the given vectors (e.g. zero variance)."""


@dataclass(frozen=True)
class Metric:
    """One of ``euclidean``, ``correlation``, ``cosine``, ``minkowski``, ``seuclidean``.

    ``p`` is only meaningful for Minkowski.
    """

    kind: str
    p: float = 2.0

    KINDS = ("euclidean", "correlation", "cosine", "minkowski", "seuclidean")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown metric {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "minkowski" and not (self.p > 0 and math.isfinite(self.p)):
            raise ValueError(f"Minkowski order must be > 0, got {self.p}")

    @classmethod
    def parse(cls, text: str) -> "Metric":
        """Parse a CLI metric flag such as ``euclidean`` or ``minkowski:3``."""
        name, _, arg = text.strip().lower().partition(":")
        if name == "minkowski":
            try:
                return cls("minkowski", float(arg) if arg else 2.0)
            except ValueError:
                raise ValueError(f"bad Minkowski order in {text!r}") from None
        if arg:
            raise ValueError(f"metric {name!r} takes no argument")
        return cls(name)

    def __str__(self) -> str:
        return f"minkowski:{self.p:g}" if self.kind == "minkowski" else self.kind


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"vector shapes differ: {a.shape} vs {b.shape}")
    return a, b


def euclidean(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def minkowski(a, b, p: float) -> float:
    a, b = _pair(a, b)
    if not p > 0:
        raise ValueError(f"Minkowski order must be > 0, got {p}")
    return float(np.sum(np.abs(a - b) ** p) ** (1.0 / p))


def cosine_distance(a, b) -> float:
    a, b = _pair(a, b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateInputError("cosine distance undefined for a zero vector")
    return float(np.clip(1.0 - np.dot(a, b) / (na * nb), 0.0, 2.0))


def correlation_distance(a, b) -> float:
    """One minus the Pearson correlation of ``a`` and ``b``; lies in [0, 2]."""
    a, b = _pair(a, b)
    if a.size < 2:
        raise DimensionError("correlation distance needs vectors of length >= 2")
    da = a - a.mean()
    db = b - b.mean()
    saa, sbb = np.dot(da, da), np.dot(db, db)
    if saa == 0 or sbb == 0:
        raise DegenerateInputError("correlation distance undefined for a constant vector")
    r = np.dot(da, db) / math.sqrt(saa * sbb)
    return float(np.clip(1.0 - r, 0.0, 2.0))


def standardized_euclidean(a, b, scale) -> float:
    a, b = _pair(a, b)
    return float(np.sqrt(np.sum(((a - b) / scale) ** 2)))


def column_std(data: DataMatrix) -> np.ndarray:
    """Per-column sample standard deviation (ddof=1) used by ``seuclidean``."""
    s = data.rows.std(axis=0, ddof=1)
    if np.any(s == 0):
        bad = np.flatnonzero(s == 0).tolist()
        raise DegenerateInputError(f"zero-variance columns {bad} under standardized Euclidean")
    return s


def _row_fn(data: DataMatrix, metric: Metric):
    """Return ``f(i) -> distances from row i to rows i+1..n-1``."""
    rows = data.rows
    kind = metric.kind
    if kind == "euclidean":
        return lambda i: np.sqrt(np.sum((rows[i + 1:] - rows[i]) ** 2, axis=1))
    if kind == "minkowski":
        p = metric.p
        return lambda i: np.sum(np.abs(rows[i + 1:] - rows[i]) ** p, axis=1) ** (1.0 / p)
    if kind == "seuclidean":
        scaled = rows / column_std(data)
        return lambda i: np.sqrt(np.sum((scaled[i + 1:] - scaled[i]) ** 2, axis=1))
    if kind == "cosine":
        norms = np.linalg.norm(rows, axis=1)
        _check_degenerate(norms == 0, "cosine distance undefined for a zero vector")
        unit = rows / norms[:, None]
        return lambda i: np.clip(1.0 - unit[i + 1:] @ unit[i], 0.0, 2.0)
    if data.m < 2:
        raise DimensionError("correlation distance needs vectors of length >= 2")
    centered = rows - rows.mean(axis=1, keepdims=True)
    ss = np.einsum("ij,ij->i", centered, centered)
    _check_degenerate(ss == 0, "correlation distance undefined for a constant vector")
    root = np.sqrt(ss)
    return lambda i: np.clip(1.0 - (centered[i + 1:] @ centered[i]) / (root[i + 1:] * root[i]), 0.0, 2.0)


def _check_degenerate(mask: np.ndarray, message: str) -> None:
    bad = np.flatnonzero(mask)
    if bad.size:
        i = int(bad[0])
        j = 1 if i == 0 else 0
        raise DegenerateInputError(f"rows ({min(i, j)}, {max(i, j)}): {message}")


def build_distance_matrix(data: DataMatrix, metric: Metric | str = "euclidean", threads: int = 1) -> DistanceMatrix:
    """Evaluate ``metric`` over every unordered pair of rows.

    Only the upper triangle is computed; the matrix is mirrored and the
    diagonal is exactly zero.  ``threads`` splits the work by row and does
    not affect the result.
    """
    if isinstance(metric, str):
        metric = Metric.parse(metric)
    row_fn = _row_fn(data, metric)
    n = data.n
    out = np.zeros((n, n), dtype=np.float64)

    def fill_row(i: int) -> None:
        out[i, i + 1:] = row_fn(i)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(fill_row, range(n - 1)))
    else:
        for i in range(n - 1):
            fill_row(i)
    return DistanceMatrix.from_upper(out)
