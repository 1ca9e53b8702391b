"""Synthetic datasets: Gaussian blobs, noisy sine/cosine curves, and
geometric-Brownian series driven by a shared volatility matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import DataError, DataMatrix, make_data_matrix


class LabeledData(NamedTuple):
    data: DataMatrix
    classes: np.ndarray


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


@dataclass(frozen=True)
class BlobSpec:
    centers: tuple[tuple[float, float], ...] = ((0.0, 0.0), (20.0, 0.0))
    points_per_blob: int = 90
    std_dev: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if not self.centers:
            raise DataError("need at least one blob center")
        if self.points_per_blob < 1:
            raise DataError("points_per_blob must be >= 1")
        if not self.std_dev > 0:
            raise DataError("std_dev must be > 0")


def gen_blobs(spec: BlobSpec) -> LabeledData:
    rng = _rng(spec.seed)
    centers = np.asarray(spec.centers, dtype=np.float64).reshape(-1, 2)
    p = spec.points_per_blob
    noise = rng.standard_normal((len(centers) * p, 2)) * spec.std_dev
    pts = np.repeat(centers, p, axis=0) + noise
    classes = np.repeat(np.arange(len(centers)), p)
    return LabeledData(make_data_matrix(pts), classes)


@dataclass(frozen=True)
class TrigSpec:
    curves_per_class: int = 50
    num_samples: int = 100
    sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 2:
            raise DataError("num_samples must be >= 2")
        if self.curves_per_class < 1:
            raise DataError("curves_per_class must be >= 1")
        if self.sigma < 0:
            raise DataError("sigma must be >= 0")


def trig_grid(num_samples: int) -> np.ndarray:
    """Uniform grid over the closed interval [0, 2 pi]."""
    return np.linspace(0.0, 2.0 * np.pi, num_samples)


def gen_trig(spec: TrigSpec) -> LabeledData:
    """Rows ``0..c-1`` are noisy sines (class 0), rows ``c..2c-1`` noisy cosines (class 1)."""
    t = trig_grid(spec.num_samples)
    c = spec.curves_per_class
    base = np.vstack([np.tile(np.sin(t), (c, 1)), np.tile(np.cos(t), (c, 1))])
    if spec.sigma > 0:
        base = base + spec.sigma * _rng(spec.seed).standard_normal(base.shape)
    return LabeledData(make_data_matrix(base), np.repeat([0, 1], c))


@dataclass(frozen=True)
class SdeSpec:
    """Multiplicative SDE ``dx_i = mu_i x_i dt + sum_j sigma_ij x_i dW_j``."""

    mu: tuple[float, ...] = (0.1, -0.1)
    sigma: tuple[tuple[float, ...], ...] = ((0.2, 0.1), (0.1, 0.2))
    x0: tuple[float, ...] = (1.0, 1.0)
    dt: float = 1.0 / 253
    steps: int = 253
    seed: int = 0

    def __post_init__(self):
        dims = len(self.mu)
        if dims < 1:
            raise DataError("need at least one dimension")
        s = np.asarray(self.sigma, dtype=np.float64)
        if s.shape != (dims, dims):
            raise DataError(f"sigma must be {dims}x{dims}, got shape {s.shape}")
        if len(self.x0) != dims or any(v <= 0 for v in self.x0):
            raise DataError("x0 must have one positive value per dimension")
        if not self.dt > 0:
            raise DataError("dt must be > 0")
        if self.steps < 1:
            raise DataError("steps must be >= 1")

    @property
    def dims(self) -> int:
        return len(self.mu)


def simulate_sde(spec: SdeSpec, paths: int, rng: np.random.Generator) -> np.ndarray:
    """Euler-Maruyama paths, shape ``(paths, dims, steps + 1)``."""
    mu = np.asarray(spec.mu, dtype=np.float64)
    sig = np.asarray(spec.sigma, dtype=np.float64)
    out = np.empty((paths, spec.dims, spec.steps + 1))
    out[:, :, 0] = spec.x0
    dW = rng.standard_normal((paths, spec.steps, spec.dims)) * np.sqrt(spec.dt)
    for t in range(spec.steps):
        growth = 1.0 + mu * spec.dt + dW[:, t, :] @ sig.T
        out[:, :, t + 1] = out[:, :, t] * growth
    return out


def gen_sde(spec: SdeSpec) -> LabeledData:
    """One realization: a row per dimension, ``steps + 1`` columns; class = dimension."""
    paths = simulate_sde(spec, 1, _rng(spec.seed))[0]
    return LabeledData(make_data_matrix(paths), np.arange(spec.dims))


@dataclass(frozen=True)
class ParamSampler:
    """Draws drift and volatility entries: ``uniform`` on [low, high] or ``gaussian(loc, scale)``."""

    kind: str = "uniform"
    low: float = -1.0
    high: float = 1.0
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian", "fixed"):
            raise DataError(f"unknown sampler {self.kind!r}")

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray | None:
        if self.kind == "uniform":
            return rng.uniform(self.low, self.high, shape)
        if self.kind == "gaussian":
            return rng.normal(self.loc, self.scale, shape)
        return None


def gen_sde_population(base: SdeSpec, num_realizations: int, sampler: ParamSampler | None = None) -> LabeledData:
    """Many realizations of one SDE sharing drift and volatility.

    Parameters are drawn once from ``sampler`` (``None`` or ``kind="fixed"``
    keeps those of ``base``).  Rows are grouped by dimension, each group
    holding ``num_realizations`` series, and the class label is the
    dimension index, so a 2-D SDE yields two clusters.
    """
    if num_realizations < 1:
        raise DataError("num_realizations must be >= 1")
    rng = _rng(base.seed)
    spec = base
    if sampler is not None and sampler.kind != "fixed":
        dims = base.dims
        mu = sampler.draw(rng, dims)
        sig = sampler.draw(rng, (dims, dims))
        spec = SdeSpec(
            tuple(mu.tolist()), tuple(map(tuple, sig.tolist())), base.x0, base.dt, base.steps, base.seed
        )
    paths = simulate_sde(spec, num_realizations, rng)
    rows = paths.transpose(1, 0, 2).reshape(spec.dims * num_realizations, spec.steps + 1)
    classes = np.repeat(np.arange(spec.dims), num_realizations)
    return LabeledData(make_data_matrix(rows), classes)
