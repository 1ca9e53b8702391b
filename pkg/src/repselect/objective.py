"""Selector cost function, its weighted extension, and compilation to QUBO form.

The selection cost for a bit vector ``x`` over a distance matrix ``d`` is::

    C(x) = (1/2k) x d x^T - (1/n) x d 1^T + A (sum(x) - k)^2

Compiled models keep linear terms on the diagonal (``x_i**2 == x_i``) and
each pair coefficient once in the upper triangle, plus a constant offset.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import DataError, DimensionError, DistanceMatrix

DEFAULT_PENALTY = 2.0


@dataclass(frozen=True, eq=False)
class SelectorProblem:
    d: DistanceMatrix
    k: int
    A: float = DEFAULT_PENALTY

    def __post_init__(self):
        if not (1 <= self.k <= self.d.n):
            raise DataError(f"k must be in [1, {self.d.n}], got {self.k}")
        if not math.isfinite(self.A) or self.A < 0:
            raise DataError(f"penalty A must be finite and >= 0, got {self.A}")

    @property
    def n(self) -> int:
        return self.d.n


@dataclass(frozen=True)
class WeightedConfig:
    """Binary expansion of per-point weights plus the weight-budget penalty."""

    n_D: int = 1
    w_min: float = 0.0
    w_max: float = 1.0
    B: float = 1.0
    W: float = 1.0

    def __post_init__(self):
        if self.n_D < 1:
            raise DataError(f"n_D must be >= 1, got {self.n_D}")
        if not self.w_min < self.w_max:
            raise DataError(f"need w_min < w_max, got {self.w_min}, {self.w_max}")
        if self.B < 0:
            raise DataError(f"budget penalty B must be >= 0, got {self.B}")

    @property
    def bit_coeffs(self) -> np.ndarray:
        """Place values of the weight bits, scaled so all-ones sums to 1."""
        j = np.arange(self.n_D)
        return 2.0**j / (2.0**self.n_D - 1.0)


@dataclass(frozen=True, eq=False)
class QuboModel:
    """``energy(x) = sum_{i<=j} coeffs[i, j] x_i x_j + offset``.

    ``k`` is the target Hamming weight over the selection variables (those
    named ``x[i]``), when the model came from a selection problem.
    """

    coeffs: np.ndarray
    offset: float = 0.0
    var_names: tuple[str, ...] = ()
    k: int | None = None
    _sym: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        q = np.asarray(self.coeffs, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise DimensionError(f"QUBO matrix must be square, got {q.shape}")
        if np.any(np.tril(q, -1) != 0):
            raise DataError("QUBO matrix must be upper triangular")
        q = q.copy()
        q.flags.writeable = False
        object.__setattr__(self, "coeffs", q)
        if not self.var_names:
            object.__setattr__(self, "var_names", tuple(f"x[{i}]" for i in range(q.shape[0])))
        elif len(self.var_names) != q.shape[0]:
            raise DataError("var_names length does not match the number of variables")
        off = np.triu(q, 1)
        sym = off + off.T
        sym.flags.writeable = False
        object.__setattr__(self, "_sym", sym)

    @property
    def num_vars(self) -> int:
        return self.coeffs.shape[0]

    @property
    def linear(self) -> np.ndarray:
        return np.diag(self.coeffs)

    @property
    def couplings(self) -> np.ndarray:
        """Symmetric off-diagonal coupling matrix with zero diagonal."""
        return self._sym

    @property
    def selection_vars(self) -> np.ndarray:
        return np.array([i for i, s in enumerate(self.var_names) if s.startswith("x[")], dtype=np.intp)

    def energy(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.num_vars,):
            raise DimensionError(f"expected {self.num_vars} bits, got shape {x.shape}")
        return float(x @ self.coeffs @ x + self.offset)

    def energies(self, states) -> np.ndarray:
        """Energies of a batch of states, one per row."""
        s = np.asarray(states, dtype=np.float64)
        return np.einsum("ri,ri->r", s @ self.coeffs, s) + self.offset

    def to_json(self, path: str | Path | None = None) -> str:
        iu, ju = np.nonzero(self.coeffs)
        doc = {
            "num_vars": self.num_vars,
            "offset": self.offset,
            "k": self.k,
            "terms": [[int(i), int(j), float(self.coeffs[i, j])] for i, j in zip(iu, ju)],
            "var_names": {str(i): s for i, s in enumerate(self.var_names)},
        }
        text = json.dumps(doc, indent=1) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text: str) -> "QuboModel":
        doc = json.loads(text)
        n = int(doc["num_vars"])
        q = np.zeros((n, n))
        for i, j, c in doc["terms"]:
            i, j = sorted((int(i), int(j)))
            q[i, j] += float(c)
        names = doc.get("var_names") or {}
        return cls(q, float(doc.get("offset", 0.0)), tuple(names[str(i)] for i in range(n)) if names else (), doc.get("k"))

    def to_coo(self, path: str | Path | None = None) -> str:
        """Coordinate text: one ``i j coeff`` line per nonzero, offset in a comment."""
        lines = [f"# num_vars {self.num_vars}", f"# offset {self.offset!r}"]
        iu, ju = np.nonzero(self.coeffs)
        lines += [f"{i} {j} {float(self.coeffs[i, j])!r}" for i, j in zip(iu, ju)]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_coo(cls, text: str) -> "QuboModel":
        offset, n, terms = 0.0, None, []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(" ")
                if key == "offset":
                    offset = float(val)
                elif key == "num_vars":
                    n = int(val)
                continue
            i, j, c = line.split()
            terms.append((int(i), int(j), float(c)))
        if n is None:
            n = 1 + max((max(i, j) for i, j, _ in terms), default=-1)
        q = np.zeros((n, n))
        for i, j, c in terms:
            i, j = sorted((i, j))
            q[i, j] += c
        return cls(q, offset)


def _as_bits(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise DimensionError(f"expected a bit vector of length {n}, got shape {x.shape}")
    return x


def evaluate_cost(problem: SelectorProblem, x) -> float:
    """Evaluate the selection cost directly from the distance matrix."""
    d = problem.d.entries
    x = _as_bits(x, problem.n)
    quad = (x @ d @ x) / (2 * problem.k)
    lin = (x @ d.sum(axis=1)) / problem.n
    return float(quad - lin + problem.A * (x.sum() - problem.k) ** 2)


def evaluate_cost_batch(problem: SelectorProblem, states) -> np.ndarray:
    """Row-wise :func:`evaluate_cost` for a 2-D array of bit vectors."""
    d = problem.d.entries
    s = np.asarray(states, dtype=np.float64)
    sd = s @ d
    quad = np.einsum("ri,ri->r", sd, s) / (2 * problem.k)
    lin = sd.sum(axis=1) / problem.n
    return quad - lin + problem.A * (s.sum(axis=1) - problem.k) ** 2


def compile_qubo(problem: SelectorProblem) -> QuboModel:
    d = problem.d.entries
    n, k, A = problem.n, problem.k, problem.A
    # x d x^T counts each unordered pair twice; the diagonal of d is zero.
    q = np.triu(d, 1) / k
    # (sum x - k)^2 = sum x_i (1 - 2k) + 2 sum_{i<j} x_i x_j + k^2
    q[np.triu_indices(n, 1)] += 2.0 * A
    q[np.diag_indices(n)] = -d.sum(axis=1) / n + A * (1 - 2 * k)
    return QuboModel(q, float(A * k * k), tuple(f"x[{i}]" for i in range(n)), k)


def expand_weights(config: WeightedConfig, bits) -> float:
    bits = np.asarray(bits, dtype=np.float64)
    if bits.shape != (config.n_D,):
        raise DimensionError(f"expected {config.n_D} weight bits, got shape {bits.shape}")
    return float(config.w_min + (config.w_max - config.w_min) * (config.bit_coeffs @ bits))


def evaluate_weighted_cost(problem: SelectorProblem, config: WeightedConfig, x, X) -> float:
    """Weighted cost with ``chi_i = w_i x_i``, evaluated without any auxiliaries."""
    n = problem.n
    x = _as_bits(x, n)
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (n, config.n_D):
        raise DimensionError(f"weight bit matrix must be {(n, config.n_D)}, got {X.shape}")
    d = problem.d.entries
    w = config.w_min + (config.w_max - config.w_min) * (X @ config.bit_coeffs)
    chi = w * x
    quad = (chi @ d @ chi) / (2 * problem.k)
    lin = (chi @ d.sum(axis=1)) / n
    return float(
        quad - lin + problem.A * (x.sum() - problem.k) ** 2 + config.B * (chi.sum() - config.W) ** 2
    )


class _Poly:
    """Quadratic polynomial accumulator over binary variables."""

    def __init__(self, num_vars: int):
        self.q = np.zeros((num_vars, num_vars))
        self.const = 0.0

    def add(self, i: int, j: int, c: float) -> None:
        if i > j:
            i, j = j, i
        self.q[i, j] += c

    def add_square_of_linear(self, idx: Sequence[int], coef: Sequence[float], const: float, scale: float) -> None:
        """Add ``scale * (sum_t coef_t v_{idx_t} + const)^2`` using ``v^2 = v``."""
        idx = np.asarray(idx)
        coef = np.asarray(coef, dtype=np.float64)
        for a in range(len(idx)):
            self.add(idx[a], idx[a], scale * (coef[a] ** 2 + 2 * const * coef[a]))
            for b in range(a + 1, len(idx)):
                self.add(idx[a], idx[b], 2 * scale * coef[a] * coef[b])
        self.const += scale * const * const


def compile_weighted_qubo(problem: SelectorProblem, config: WeightedConfig) -> QuboModel:
    """Quadratize the weighted cost into a QUBO.

    Variable layout: ``x[i]`` (n), then ``X[i,j]`` (n * n_D), then
    ``y[i,j]`` (n * n_D) standing for the product ``x[i] * X[i,j]``.  The
    weighted value ``chi_i`` is linear in ``x`` and ``y``, so the objective is
    quadratic once every ``y`` is tied to its product by the penalty
    ``M (3y + xX - 2xy - 2Xy)``.
    """
    n, nd = problem.n, config.n_D
    d = problem.d.entries
    N = n + 2 * n * nd

    def X_idx(i, j):
        return n + i * nd + j

    def y_idx(i, j):
        return n + n * nd + i * nd + j

    # chi_i = sum_t lin[i][t] * v_{terms[i][t]}
    span = config.w_max - config.w_min
    chi_vars = [[i] + [y_idx(i, j) for j in range(nd)] for i in range(n)]
    chi_coef = [[config.w_min] + list(span * config.bit_coeffs) for _ in range(n)]

    obj = _Poly(N)
    rowsum = d.sum(axis=1)
    for i in range(n):
        for a, ca in zip(chi_vars[i], chi_coef[i]):
            obj.add(a, a, -rowsum[i] / n * ca)
        for j in range(i + 1, n):
            c = d[i, j] / problem.k
            if c == 0:
                continue
            for a, ca in zip(chi_vars[i], chi_coef[i]):
                for b, cb in zip(chi_vars[j], chi_coef[j]):
                    obj.add(a, b, c * ca * cb)
    obj.add_square_of_linear(range(n), np.ones(n), -float(problem.k), problem.A)
    all_vars = [v for vs in chi_vars for v in vs]
    all_coef = [c for cs in chi_coef for c in cs]
    obj.add_square_of_linear(all_vars, all_coef, -float(config.W), config.B)

    M = 1.0 + float(np.abs(obj.q).sum())
    for i in range(n):
        for j in range(nd):
            xi, Xij, yij = i, X_idx(i, j), y_idx(i, j)
            obj.add(yij, yij, 3 * M)
            obj.add(xi, Xij, M)
            obj.add(xi, yij, -2 * M)
            obj.add(Xij, yij, -2 * M)

    names = (
        [f"x[{i}]" for i in range(n)]
        + [f"X[{i},{j}]" for i in range(n) for j in range(nd)]
        + [f"y[{i},{j}]" for i in range(n) for j in range(nd)]
    )
    return QuboModel(obj.q, obj.const, tuple(names), problem.k)


def split_weighted_state(state, n: int, n_D: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a compiled weighted state into ``(x, X, y)``."""
    s = np.asarray(state)
    x = s[:n]
    X = s[n : n + n * n_D].reshape(n, n_D)
    y = s[n + n * n_D :].reshape(n, n_D)
    return x, X, y


def join_weighted_state(x, X) -> np.ndarray:
    """Assemble a compiled state with every auxiliary set to its product."""
    x = np.asarray(x, dtype=np.int8)
    X = np.asarray(X, dtype=np.int8)
    y = X * x[:, None]
    return np.concatenate([x, X.ravel(), y.ravel()])
