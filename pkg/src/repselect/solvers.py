"""QUBO minimizers: exhaustive enumeration, simulated annealing, tabu search,
and a random fixed-weight baseline.

Heuristic backends run ``num_reads`` independent restarts.  Every read draws
from its own random stream keyed by ``(seed, backend, read index)``, so the
result does not depend on how reads are batched or spread over threads.
Tabu restarts run in lock-step as rows of a matrix; annealing runs a
compiled per-read loop over pre-drawn uniforms.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations, islice

import numpy as np
from numba import njit

from .data import SolveReport, bits_to_str
from .objective import QuboModel

MAX_EXHAUSTIVE_VARS = 30
MAX_WEIGHTED_ENUMERATION = 10**7
READ_BLOCK = 128
TIE_TOL = 1e-12

_SA, _TABU, _BASELINE, _TMAX, _TRIAL = range(5)


class SolverError(RuntimeError):
    pass


class TooManyVariablesError(SolverError):
    pass


@dataclass(frozen=True)
class SAParams:
    """Geometric annealing schedule; ``None`` temperatures are auto-scaled per model."""

    t_max: float | None = None
    t_min: float | None = None
    sweeps: int = 100


@dataclass(frozen=True)
class TabuParams:
    tenure: int | None = None
    max_iters: int | None = None


@dataclass(frozen=True)
class SolverConfig:
    backend: str = "sa"
    seed: int = 0
    num_reads: int = 1000
    sa: SAParams = field(default_factory=SAParams)
    tabu: TabuParams = field(default_factory=TabuParams)
    baseline_k: int | None = None

    BACKENDS = ("exhaustive", "sa", "tabu", "random")

    def __post_init__(self):
        if self.backend not in self.BACKENDS:
            raise ValueError(f"unknown solver {self.backend!r}; expected one of {self.BACKENDS}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        sa = self.sa
        if sa.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if sa.t_min is not None and sa.t_min <= 0:
            raise ValueError("t_min must be > 0")
        if sa.t_max is not None and sa.t_min is not None and sa.t_max < sa.t_min:
            raise ValueError("t_max must be >= t_min")
        if self.tabu.tenure is not None and self.tabu.tenure < 1:
            raise ValueError("tabu tenure must be >= 1")
        if self.tabu.max_iters is not None and self.tabu.max_iters < 1:
            raise ValueError("tabu max_iters must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def derive_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])


def _weight(model: QuboModel, bits: np.ndarray) -> int:
    sel = model.selection_vars
    return int(bits[sel].sum()) if sel.size else int(bits.sum())


def _report(model, bits, name, seed, reads, t0, k=None, stats=None) -> SolveReport:
    bits = np.asarray(bits, dtype=np.int8)
    bits.flags.writeable = False
    k = model.k if k is None else k
    hw = _weight(model, bits)
    return SolveReport(
        best_bits=bits,
        energy=model.energy(bits),
        hamming_weight=hw,
        constraint_satisfied=True if k is None else hw == k,
        solver_name=name,
        seed=seed,
        trials=reads,
        wall_time=time.perf_counter() - t0,
        stats=stats or {},
    )


def pick_best(model: QuboModel, states: np.ndarray) -> np.ndarray:
    """Lowest-energy row; near-ties go to the lowest bitstring (index 0 most significant)."""
    uniq = np.unique(np.asarray(states, dtype=np.int8), axis=0)
    e = model.energies(uniq)
    m = e.min()
    return uniq[np.flatnonzero(e <= m + TIE_TOL * max(1.0, abs(m)))[0]]


# --------------------------------------------------------------------------
# exhaustive


def _bit_table(L: int) -> np.ndarray:
    v = np.arange(2**L, dtype=np.int64)
    shifts = np.arange(L - 1, -1, -1, dtype=np.int64)
    return ((v[:, None] >> shifts) & 1).astype(np.float64)


def iter_energies(model: QuboModel, block_bits: int = 16):
    """Yield ``(start, energies)`` over all ``2**N`` states in ascending order.

    State value ``v`` has bit ``i`` at ``(v >> (N - 1 - i)) & 1``.
    """
    N = model.num_vars
    L = min(N, block_bits)
    H = N - L
    q = model.coeffs
    lo = _bit_table(L)
    e_lo = model.energies(lo) if H == 0 else np.einsum("ri,ri->r", lo @ q[H:, H:], lo) + model.offset
    if H == 0:
        yield 0, e_lo
        return
    hi_table = _bit_table(H) if H <= 16 else None
    q_hh, q_hl = q[:H, :H], q[:H, H:]
    for hv in range(2**H):
        if hi_table is not None:
            hb = hi_table[hv]
        else:
            hb = ((hv >> np.arange(H - 1, -1, -1)) & 1).astype(np.float64)
        yield hv << L, e_lo + (hb @ q_hh @ hb) + lo @ (hb @ q_hl)


def iter_weight_k(N: int, k: int, chunk: int = 200_000):
    it = combinations(range(N), k)
    while True:
        block = list(islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.intp).reshape(len(block), k)


def weight_k_energies(model: QuboModel, combos: np.ndarray) -> np.ndarray:
    q = model.coeffs
    e = np.full(combos.shape[0], model.offset)
    k = combos.shape[1]
    for a in range(k):
        e = e + q[combos[:, a], combos[:, a]]
        for b in range(a + 1, k):
            e = e + q[combos[:, a], combos[:, b]]
    return e


def solve_exhaustive(model: QuboModel, k: int | None = None, *, seed: int = 0) -> SolveReport:
    """Global minimum by enumeration.

    With ``k`` set, only states of Hamming weight ``k`` are enumerated.  Ties
    go to the lowest bitstring read as a binary number with index 0 as the
    most significant bit.
    """
    t0 = time.perf_counter()
    N = model.num_vars
    if k is not None:
        return _solve_weight_k(model, k, seed, t0)
    if N > MAX_EXHAUSTIVE_VARS:
        raise TooManyVariablesError(f"exhaustive search limited to {MAX_EXHAUSTIVE_VARS} variables, got {N}")
    best_e, best_v, count = math.inf, 0, 0
    for start, e in iter_energies(model):
        count += e.size
        m = e.min()
        if m < best_e - TIE_TOL * max(1.0, abs(m)):
            best_e = m
            best_v = start + int(np.flatnonzero(e <= m + TIE_TOL * max(1.0, abs(m)))[0])
    bits = np.array([(best_v >> (N - 1 - i)) & 1 for i in range(N)], dtype=np.int8)
    return _report(model, bits, "exhaustive", seed, 1, t0, stats={"evaluated": count})


def _solve_weight_k(model: QuboModel, k: int, seed: int, t0: float) -> SolveReport:
    N = model.num_vars
    if not 0 <= k <= N:
        raise SolverError(f"weight {k} outside [0, {N}]")
    total = math.comb(N, k)
    if total > MAX_WEIGHTED_ENUMERATION:
        raise TooManyVariablesError(f"C({N},{k}) = {total} exceeds the enumeration bound {MAX_WEIGHTED_ENUMERATION}")
    best_e, best_c = math.inf, None
    for combos in iter_weight_k(N, k):
        e = weight_k_energies(model, combos)
        m = e.min()
        tol = TIE_TOL * max(1.0, abs(m))
        # lexicographically last combination is the lowest bitstring
        c = combos[np.flatnonzero(e <= m + tol)[-1]]
        if best_c is None or m <= best_e + tol:
            best_e, best_c = min(m, best_e), c
    bits = np.zeros(N, dtype=np.int8)
    bits[best_c] = 1
    return _report(model, bits, "exhaustive", seed, 1, t0, stats={"evaluated": total})


# --------------------------------------------------------------------------
# heuristics


def _blocks(num_reads: int):
    return [range(s, min(s + READ_BLOCK, num_reads)) for s in range(0, num_reads, READ_BLOCK)]


def _run_blocks(fn, num_reads: int, threads: int):
    blocks = _blocks(num_reads)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(min(threads, len(blocks))) as pool:
            parts = list(pool.map(fn, blocks))
    else:
        parts = [fn(b) for b in blocks]
    states = np.concatenate([p[0] for p in parts])
    stats: dict = {}
    for _, s in parts:
        for key, v in s.items():
            stats[key] = stats.get(key, 0) + v
    return states, stats


def _initial_state(g: np.random.Generator, N: int, read: int) -> np.ndarray:
    x = g.integers(0, 2, N, dtype=np.int8)
    # read 0 is a cold start so degenerate landscapes return the tie-break state
    return np.zeros(N, dtype=np.int8) if read == 0 else x


def auto_temperatures(model: QuboModel, seed: int, samples: int = 100) -> tuple[float, float]:
    """``t_max`` = largest single-flip change seen from random states; ``t_min = 1e-3 t_max``."""
    g = _stream(seed, _TMAX)
    x = g.integers(0, 2, (samples, model.num_vars)).astype(np.float64)
    field_ = model.linear + x @ model.couplings
    t_max = float(np.abs((1 - 2 * x) * field_).max()) if model.num_vars else 0.0
    if not t_max > 0:
        t_max = 1.0
    return t_max, 1e-3 * t_max


def sa_schedule(t_max: float, t_min: float, sweeps: int) -> np.ndarray:
    ratio = (t_min / t_max) ** (1.0 / sweeps)
    return t_max * ratio ** np.arange(sweeps)


@njit(cache=True, nogil=True)
def _sa_kernel(h, J, x0, e0, u, temps, best_x):
    R, N = x0.shape
    S = temps.shape[0]
    uphill = 0
    downhill = 0
    perm = np.empty(N, dtype=np.int64)
    for a in range(R):
        x = x0[a].copy()
        f = h + J @ x
        e = e0[a]
        best_e = e
        best_x[a] = x
        for s in range(S):
            T = temps[s]
            # Fisher-Yates shuffle driven by this sweep's first row of uniforms
            for j in range(N):
                perm[j] = j
            for j in range(N - 1, 0, -1):
                c = min(int(u[a, 0, s, j] * (j + 1)), j)
                perm[j], perm[c] = perm[c], perm[j]
            for t in range(N):
                i = perm[t]
                step = 1.0 - 2.0 * x[i]
                delta = step * f[i]
                if delta <= 0.0:
                    downhill += 1
                elif u[a, 1, s, t] < np.exp(-delta / T):
                    uphill += 1
                else:
                    continue
                x[i] += step
                for j in range(N):
                    f[j] += step * J[i, j]
                e += delta
                if e < best_e:
                    best_e = e
                    best_x[a] = x
    return uphill, downhill


def _sa_block(model: QuboModel, seed: int, temps: np.ndarray, reads: range):
    N, R, S = model.num_vars, len(reads), len(temps)
    x = np.empty((R, N))
    u = np.empty((R, 2, S, N))
    for a, r in enumerate(reads):
        g = _stream(seed, _SA, r)
        x[a] = _initial_state(g, N, r)
        u[a] = g.random((2, S, N))
    best_x = np.empty((R, N))
    J = np.ascontiguousarray(model.couplings)
    uphill, downhill = _sa_kernel(model.linear.astype(np.float64), J, x, model.energies(x), u, temps, best_x)
    return best_x.astype(np.int8), {"uphill_accepted": int(uphill), "downhill_accepted": int(downhill)}


def solve_sa(model: QuboModel, config: SolverConfig, *, threads: int = 1, k: int | None = None) -> SolveReport:
    """Simulated annealing with Metropolis acceptance and a geometric schedule.

    One sweep proposes every variable once, in a fresh random order.
    """
    t0 = time.perf_counter()
    t_max, t_min = config.sa.t_max, config.sa.t_min
    if t_max is None or t_min is None:
        auto_max, auto_min = auto_temperatures(model, config.seed)
        t_max = auto_max if t_max is None else t_max
        t_min = min(auto_min, t_max) if t_min is None else t_min
    temps = sa_schedule(t_max, t_min, config.sa.sweeps)
    states, stats = _run_blocks(lambda b: _sa_block(model, config.seed, temps, b), config.num_reads, threads)
    stats.update(t_max=float(t_max), t_min=float(t_min))
    return _report(model, pick_best(model, states), "sa", config.seed, config.num_reads, t0, k, stats)


def tabu_defaults(N: int, params: TabuParams) -> tuple[int, int]:
    tenure = params.tenure if params.tenure is not None else max(1, min(10, N // 4))
    max_iters = params.max_iters if params.max_iters is not None else max(100, 10 * N)
    return min(tenure, max(N - 1, 1)), max_iters


def _tabu_block(model: QuboModel, seed: int, tenure: int, max_iters: int, reads: range):
    N, R = model.num_vars, len(reads)
    h, J = model.linear, model.couplings
    x = np.empty((R, N))
    for a, r in enumerate(reads):
        x[a] = _initial_state(_stream(seed, _TABU, r), N, r)
    f = h + x @ J
    e = model.energies(x)
    best_x, best_e = x.copy(), e.copy()
    tabu_until = np.zeros((R, N), dtype=np.int64)
    rows = np.arange(R)
    aspirated = missed = 0
    if N == 1:
        tenure = 0
    for it in range(max_iters):
        step = 1.0 - 2.0 * x
        delta = step * f
        tabu = tabu_until > it
        aspire = tabu & (e[:, None] + delta < best_e[:, None])
        cand = np.where(~tabu | aspire, delta, np.inf)
        i = np.argmin(cand, axis=1)
        d_i = delta[rows, i]
        aspirated += int(tabu[rows, i].sum())
        # instrumentation: an aspirating move existed, so the chosen move must set a new best
        missed += int((aspire.any(axis=1) & ~(e + d_i < best_e)).sum())
        dx = step[rows, i]
        x[rows, i] += dx
        f += dx[:, None] * J[i]
        e += d_i
        tabu_until[rows, i] = it + 1 + tenure
        better = e < best_e
        if better.any():
            best_e[better] = e[better]
            best_x[better] = x[better]
    return best_x.astype(np.int8), {"aspiration_moves": aspirated, "aspiration_missed": missed}


def solve_tabu(model: QuboModel, config: SolverConfig, *, threads: int = 1, k: int | None = None) -> SolveReport:
    """Single-bit-flip tabu search with best-improvement moves and aspiration.

    Each iteration takes the best admissible flip, even if uphill.  A flip
    is admissible when it is not tabu, or when it would beat the best
    energy seen so far in that read.
    """
    t0 = time.perf_counter()
    tenure, max_iters = tabu_defaults(model.num_vars, config.tabu)
    states, stats = _run_blocks(
        lambda b: _tabu_block(model, config.seed, tenure, max_iters, b), config.num_reads, threads
    )
    stats.update(tenure=tenure, max_iters=max_iters)
    return _report(model, pick_best(model, states), "tabu", config.seed, config.num_reads, t0, k, stats)


def sample_baseline_states(model: QuboModel, config: SolverConfig, k: int) -> np.ndarray:
    """All ``num_reads`` uniformly random weight-``k`` states, one per row."""
    N = model.num_vars
    if not 0 <= k <= N:
        raise SolverError(f"baseline weight {k} outside [0, {N}]")
    states = np.zeros((config.num_reads, N), dtype=np.int8)
    for r in range(config.num_reads):
        pick = np.argsort(_stream(config.seed, _BASELINE, r).random(N), kind="stable")[:k]
        states[r, pick] = 1
    return states


def solve_random_baseline(model: QuboModel, config: SolverConfig, *, threads: int = 1, k: int | None = None) -> SolveReport:
    t0 = time.perf_counter()
    weight = config.baseline_k if config.baseline_k is not None else (k if k is not None else model.k)
    if weight is None:
        raise SolverError("random baseline needs a target weight k")
    states = sample_baseline_states(model, config, weight)
    return _report(model, pick_best(model, states), "random", config.seed, config.num_reads, t0, k)


def solve(model: QuboModel, config: SolverConfig, *, threads: int = 1, k: int | None = None) -> SolveReport:
    """Dispatch on ``config.backend``.

    Exhaustive search over more than ``MAX_EXHAUSTIVE_VARS`` variables falls
    back to enumerating only the states of the target weight ``model.k``.
    """
    if config.backend == "exhaustive":
        restrict = model.k if model.num_vars > MAX_EXHAUSTIVE_VARS and model.k is not None else None
        rep = solve_exhaustive(model, restrict, seed=config.seed)
        if k is not None and k != model.k:
            rep = replace(rep, constraint_satisfied=rep.hamming_weight == k)
        return rep
    fn = {"sa": solve_sa, "tabu": solve_tabu, "random": solve_random_baseline}[config.backend]
    return fn(model, config, threads=threads, k=k)


# --------------------------------------------------------------------------
# repeated trials


@dataclass(frozen=True, eq=False)
class TrialBatch:
    reports: tuple[SolveReport, ...]
    k: int | None
    satisfied_fraction: float
    mean_energy: float
    std_energy: float

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "trials": len(self.reports),
            "satisfied_fraction": self.satisfied_fraction,
            "mean_energy": self.mean_energy,
            "std_energy": self.std_energy,
            "reports": [r.to_dict() for r in self.reports],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "seed", "energy", "hamming_weight", "constraint_satisfied", "bits"])
        for t, r in enumerate(self.reports):
            w.writerow([t, r.seed, repr(r.energy), r.hamming_weight, int(r.constraint_satisfied), bits_to_str(r.best_bits)])
        return buf.getvalue()


def run_trials(model: QuboModel, config: SolverConfig, trials: int, k: int | None = None, *, threads: int = 1) -> TrialBatch:
    """Repeat a solve ``trials`` times with per-trial seeds derived from ``config.seed``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    k = model.k if k is None else k
    configs = [replace(config, seed=derive_seed(config.seed, _TRIAL, t)) for t in range(trials)]

    def one(cfg: SolverConfig) -> SolveReport:
        return solve(model, cfg, k=k)

    if threads > 1 and trials > 1:
        with ThreadPoolExecutor(min(threads, trials)) as pool:
            reports = tuple(pool.map(one, configs))
    else:
        reports = tuple(one(c) for c in configs)
    energies = np.array([r.energy for r in reports])
    sat = sum(r.constraint_satisfied for r in reports)
    return TrialBatch(reports, k, sat / trials, float(energies.mean()), float(energies.std()))
