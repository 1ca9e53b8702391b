"""Index reconstruction from selected assets, plus the evaluation statistics
used for the synthetic and market experiments."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import DataError, DataMatrix, DimensionError, Selection, make_data_matrix, selection_from_bits
from .distances import Metric, build_distance_matrix
from .objective import SelectorProblem, compile_qubo, evaluate_cost_batch
from .solvers import SolverConfig, TooManyVariablesError, derive_seed, iter_weight_k, solve
from .synthgen import TrigSpec, gen_trig

MAX_FULL_ENUMERATION_VARS = 24
MAX_FILTERED_ENUMERATION = 10**7


class MissingDataError(DataError):
    pass


class DegenerateReturnError(DataError):
    pass


@dataclass(frozen=True, eq=False)
class PriceTable:
    """Close prices, one row per ticker, one column per date."""

    tickers: tuple[str, ...]
    dates: tuple[str, ...]
    prices: np.ndarray

    def window(self, start: str | None = None, end: str | None = None) -> "PriceTable":
        """Restrict to dates within ``[start, end]`` (ISO strings, inclusive)."""
        keep = [i for i, d in enumerate(self.dates) if (start is None or d >= start) and (end is None or d <= end)]
        if len(keep) < 2:
            raise DataError(f"window [{start}, {end}] holds {len(keep)} dates; need at least 2")
        return PriceTable(self.tickers, tuple(self.dates[i] for i in keep), self.prices[:, keep])


def read_prices_csv(path: str | Path) -> PriceTable:
    """Read long-format ``date,ticker,close`` rows.

    Every ticker must have a price on every date present in the file; gaps
    are rejected rather than filled.
    """
    table: dict[str, dict[str, float]] = {}
    dates: set[str] = set()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"date", "ticker", "close"} - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                day = dt.date.fromisoformat(row["date"].strip()).isoformat()
                price = float(row["close"])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            tick = row["ticker"].strip()
            if day in table.setdefault(tick, {}):
                raise DataError(f"{path}:{lineno}: duplicate price for {tick} on {day}")
            table[tick][day] = price
            dates.add(day)
    if not table:
        raise DataError(f"{path}: no price rows")
    all_dates = tuple(sorted(dates))
    gaps = {t: len(all_dates) - len(v) for t, v in table.items() if len(v) != len(all_dates)}
    if gaps:
        raise MissingDataError(f"missing prices for tickers {sorted(gaps)} (counts {gaps})")
    tickers = tuple(sorted(table))
    prices = np.array([[table[t][d] for d in all_dates] for t in tickers])
    return PriceTable(tickers, all_dates, prices)


def write_prices_csv(table: PriceTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "ticker", "close"])
        for j, day in enumerate(table.dates):
            for i, tick in enumerate(table.tickers):
                w.writerow([day, tick, repr(float(table.prices[i, j]))])


@dataclass(frozen=True, eq=False)
class ReturnsMatrix:
    data: DataMatrix
    dates: tuple[str, ...]

    def __post_init__(self):
        if len(self.dates) != self.data.m:
            raise DimensionError(f"{self.data.m} return columns but {len(self.dates)} dates")


@dataclass(frozen=True, eq=False)
class IndexSeries:
    values: np.ndarray
    kind: str = "proxy_index"


def returns_from_prices(prices: PriceTable | Sequence[Sequence[float]], tickers=None, dates=None) -> ReturnsMatrix:
    """Simple daily returns ``p_t / p_{t-1} - 1``.

    Accepts a :class:`PriceTable` or a 2-D array of prices (one asset per
    row).  The first date is consumed, so returns are dated by the later day.
    """
    if isinstance(prices, PriceTable):
        tickers, dates, p = prices.tickers, prices.dates, prices.prices
    else:
        p = np.asarray(prices, dtype=np.float64)
    if p.ndim != 2:
        raise DimensionError("prices must be 2-D: one row per asset")
    if p.shape[1] < 2:
        raise DataError("need at least 2 prices per asset")
    if not np.all(np.isfinite(p)):
        raise MissingDataError("prices contain non-finite values")
    if np.any(p <= 0):
        raise DataError("prices must be positive")
    if dates is None:
        dates = tuple(str(i) for i in range(p.shape[1]))
    elif len(dates) != p.shape[1]:
        raise DimensionError(f"{p.shape[1]} price columns but {len(dates)} dates")
    r = p[:, 1:] / p[:, :-1] - 1.0
    return ReturnsMatrix(make_data_matrix(r, tickers, min_rows=1), tuple(dates[1:]))


def proxy_index(returns: ReturnsMatrix) -> IndexSeries:
    """Equal-weighted mean return across every asset."""
    return IndexSeries(_mean_rows(returns.data.rows, np.arange(returns.data.n)), "proxy_index")


def subset_index(returns: ReturnsMatrix, selection: Selection) -> IndexSeries:
    if len(selection) == 0:
        raise DataError("subset index needs a nonempty selection")
    return IndexSeries(_mean_rows(returns.data.rows, np.array(selection.chosen)), "selected_subset")


def _mean_rows(rows: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # proxy and subset share this path so the full subset equals the proxy bit for bit
    return rows[idx].mean(axis=0)


def mse(a: IndexSeries | np.ndarray, b: IndexSeries | np.ndarray) -> float:
    a = np.asarray(getattr(a, "values", a), dtype=np.float64)
    b = np.asarray(getattr(b, "values", b), dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"series lengths differ: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def cumulative_returns(s: IndexSeries | np.ndarray) -> IndexSeries:
    """Compounded ``prod_{u<=t} (1 + r_u) - 1``."""
    kind = getattr(s, "kind", "proxy_index")
    r = np.asarray(getattr(s, "values", s), dtype=np.float64)
    if np.any(r <= -1):
        raise DegenerateReturnError("a return <= -100% cannot be compounded")
    return IndexSeries(np.cumprod(1.0 + r) - 1.0, kind)


@dataclass(frozen=True)
class CurvePoint:
    k: int
    selection: Selection
    mse: float
    satisfied: bool


def mse_curve(
    returns: ReturnsMatrix,
    k_values: Sequence[int],
    *,
    metric: Metric | str = "correlation",
    A: float = 2.0,
    config: SolverConfig = SolverConfig(),
    threads: int = 1,
) -> list[CurvePoint]:
    """Solve the selection problem for each ``k`` and score ``S_k`` against the proxy."""
    n = returns.data.n
    for k in k_values:
        if not 1 <= k <= n:
            raise DataError(f"k={k} outside [1, {n}]")
    if not k_values:
        return []
    d = build_distance_matrix(returns.data, metric, threads=threads)
    proxy = proxy_index(returns)
    out = []
    for k in k_values:
        model = compile_qubo(SelectorProblem(d, k, A))
        rep = solve(model, config, threads=threads)
        sel = selection_from_bits(rep.best_bits)
        err = mse(subset_index(returns, sel), proxy) if len(sel) else math.inf
        out.append(CurvePoint(k, sel, err, rep.constraint_satisfied))
    return out


def class_accuracy(selections: Sequence[Selection], labels: Sequence[int], trials: int | None = None) -> float:
    """Fraction of size-2 selections holding one index from each of two classes."""
    if trials is not None and trials != len(selections):
        raise DataError(f"expected {trials} selections, got {len(selections)}")
    labels = np.asarray(labels)
    if len(np.unique(labels)) > 2:
        raise DataError("class_accuracy expects binary labels")
    if not selections:
        raise DataError("no selections to score")
    hits = 0
    for s in selections:
        if len(s) != 2:
            raise DataError(f"selection of size {len(s)}; expected 2")
        hits += labels[s.chosen[0]] != labels[s.chosen[1]]
    return float(hits / len(selections))


def trig_trial_selections(
    sigma: float,
    trials: int,
    config: SolverConfig,
    *,
    curves: int = 50,
    samples: int = 100,
    metric: Metric | str = "correlation",
    A: float = 2.0,
    stream: int = 0,
    threads: int = 1,
) -> tuple[list[Selection], np.ndarray]:
    """Solve ``trials`` freshly generated trig datasets at noise ``sigma`` with ``k=2``.

    Trial ``t`` regenerates its data and seeds its solver with
    ``derive_seed(config.seed, stream, t)``.
    """
    selections, labels = [], None
    for t in range(trials):
        seed = derive_seed(config.seed, stream, t)
        gen = gen_trig(TrigSpec(curves, samples, sigma, seed))
        labels = gen.classes
        d = build_distance_matrix(gen.data, metric, threads=threads)
        rep = solve(compile_qubo(SelectorProblem(d, 2, A)), replace(config, seed=seed), threads=threads)
        selections.append(selection_from_bits(rep.best_bits))
    return selections, labels


def trial_accuracy(selections: Sequence[Selection], labels) -> float:
    """:func:`class_accuracy` where selections of the wrong size count as misses."""
    scored = [s for s in selections if len(s) == 2]
    if not scored:
        return 0.0
    return float(class_accuracy(scored, labels) * len(scored) / len(selections))


def sweep_sigma(sigmas: Sequence[float], trials: int, config: SolverConfig, **kw) -> list[tuple[float, float]]:
    """Accuracy of ``k=2`` selections on trig data for each noise level."""
    if trials < 1:
        raise DataError("trials must be >= 1")
    out = []
    for i, sigma in enumerate(sigmas):
        sels, labels = trig_trial_selections(sigma, trials, config, stream=i, **kw)
        out.append((float(sigma), trial_accuracy(sels, labels)))
    return out


@dataclass(frozen=True)
class CombinationStats:
    k_filter: int | None
    evaluated: int
    mean: float
    std: float
    minimum: float
    maximum: float
    quantiles: dict
    hist_counts: tuple[int, ...]
    hist_edges: tuple[float, ...]
    target_cost: float
    target_percentile: float

    def to_dict(self) -> dict:
        return {
            "k_filter": self.k_filter,
            "evaluated": self.evaluated,
            "mean": self.mean,
            "std": self.std,
            "min": self.minimum,
            "max": self.maximum,
            "quantiles": self.quantiles,
            "histogram": {"counts": list(self.hist_counts), "edges": list(self.hist_edges)},
            "target_cost": self.target_cost,
            "target_percentile": self.target_percentile,
        }


_QUANTILES = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)


def _all_states(n: int, chunk_bits: int = 16):
    L = min(n, chunk_bits)
    lo = ((np.arange(2**L)[:, None] >> np.arange(L - 1, -1, -1)) & 1).astype(np.int8)
    H = n - L
    for hv in range(2**H):
        hi = np.array([(hv >> (H - 1 - i)) & 1 for i in range(H)], dtype=np.int8)
        yield np.hstack([np.broadcast_to(hi, (lo.shape[0], H)), lo])


def _weight_k_states(n: int, k: int, chunk: int = 100_000):
    for combos in iter_weight_k(n, k, chunk):
        s = np.zeros((combos.shape[0], n), dtype=np.int8)
        np.put_along_axis(s, combos, 1, axis=1)
        yield s


def enumerate_combinations(
    problem: SelectorProblem, k_filter: int | None, target: Selection, bins: int = 50
) -> CombinationStats:
    """Evaluate the cost of every state (or every weight-``k_filter`` state).

    The target percentile is the fraction of enumerated costs strictly below
    the target's cost.
    """
    n = problem.n
    if target.n != n:
        raise DimensionError(f"target selection over {target.n} points; problem has {n}")
    if k_filter is None:
        if n > MAX_FULL_ENUMERATION_VARS:
            raise TooManyVariablesError(f"full enumeration limited to n <= {MAX_FULL_ENUMERATION_VARS}, got {n}")
        chunks = _all_states(n)
    else:
        if not 0 <= k_filter <= n:
            raise DataError(f"k_filter={k_filter} outside [0, {n}]")
        total = math.comb(n, k_filter)
        if total > MAX_FILTERED_ENUMERATION:
            raise TooManyVariablesError(f"C({n},{k_filter}) = {total} exceeds {MAX_FILTERED_ENUMERATION}")
        chunks = _weight_k_states(n, k_filter)
    target_cost = float(evaluate_cost_batch(problem, target.bits[None, :])[0])
    tol = 1e-12 * max(1.0, abs(target_cost))
    costs = np.concatenate([evaluate_cost_batch(problem, s) for s in chunks])
    below = int(np.count_nonzero(costs < target_cost - tol))
    counts, edges = np.histogram(costs, bins=bins)
    return CombinationStats(
        k_filter=k_filter,
        evaluated=int(costs.size),
        mean=float(costs.mean()),
        std=float(costs.std()),
        minimum=float(costs.min()),
        maximum=float(costs.max()),
        quantiles={str(q): float(v) for q, v in zip(_QUANTILES, np.quantile(costs, _QUANTILES))},
        hist_counts=tuple(int(c) for c in counts),
        hist_edges=tuple(float(e) for e in edges),
        target_cost=target_cost,
        target_percentile=below / costs.size,
    )
