"""Command-line front end.

Every command writes its artifacts into ``--out`` together with a
``manifest.json`` that echoes the configuration and records a SHA-256 hash
of each artifact.  Identical flags produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import DataError, Selection, bits_from_str, read_data_csv, selection_from_bits
from .distances import Metric, build_distance_matrix
from .finance import (
    cumulative_returns,
    enumerate_combinations,
    mse_curve,
    proxy_index,
    read_prices_csv,
    returns_from_prices,
    subset_index,
    sweep_sigma,
    write_prices_csv,
    PriceTable,
)
from .objective import QuboModel, SelectorProblem, WeightedConfig, compile_qubo, compile_weighted_qubo
from .solvers import SAParams, SolverConfig, SolverError, TabuParams, TooManyVariablesError, run_trials, solve
from .synthgen import BlobSpec, ParamSampler, SdeSpec, TrigSpec, gen_blobs, gen_sde, gen_sde_population, gen_trig

EXIT_OK = 0
EXIT_UNSATISFIED = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NOINPUT = 66
EXIT_TOO_LARGE = 69
EXIT_SOLVER = 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if any(v < 1 for v in out):
        raise argparse.ArgumentTypeError("k values must be >= 1")
    return out


def _metric(text: str) -> Metric:
    try:
        return Metric.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# --------------------------------------------------------------------------
# output helpers


class Run:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.artifacts: dict[str, str] = {}

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        path.write_text(text)
        self.artifacts[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def finish(self, status: str = "ok") -> None:
        config = {k: _jsonable(v) for k, v in sorted(vars(self.args).items()) if k not in ("out", "func", "threads")}
        doc = {"tool": "repselect", "version": __version__, "status": status, "config": config, "artifacts": self.artifacts}
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Metric):
        return str(v)
    return v


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=1) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _solver_config(args, k: int | None = None) -> SolverConfig:
    try:
        return SolverConfig(
            backend=args.solver,
            seed=args.seed,
            num_reads=args.reads,
            sa=SAParams(t_max=args.tmax, t_min=args.tmin, sweeps=args.sweeps),
            tabu=TabuParams(tenure=args.tenure, max_iters=args.tabu_iters),
            baseline_k=k,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_problem(args) -> tuple:
    data = read_data_csv(args.data)
    if args.k > data.n:
        raise UsageError(f"--k {args.k} exceeds the number of data points ({data.n})")
    d = build_distance_matrix(data, args.metric, threads=args.threads)
    return data, SelectorProblem(d, args.k, args.A)


# --------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    run = Run(args)
    if args.kind == "blobs":
        centers = np.asarray(args.centers, dtype=float).reshape(-1, 2) if args.centers else np.array([[0.0, 0.0], [20.0, 0.0]])
        spec = BlobSpec(tuple(map(tuple, centers.tolist())), args.points, args.std, args.seed)
        gen = gen_blobs(spec)
    elif args.kind == "trig":
        gen = gen_trig(TrigSpec(args.curves, args.samples, args.sigma, args.seed))
    else:
        mu = tuple(args.mu)
        dims = len(mu)
        sig = np.asarray(args.vol, dtype=float)
        if sig.size != dims * dims:
            raise UsageError(f"--vol needs {dims * dims} entries for {dims} dimensions")
        x0 = tuple(args.x0) if args.x0 else (1.0,) * dims
        spec = SdeSpec(mu, tuple(map(tuple, sig.reshape(dims, dims).tolist())), x0, args.dt, args.steps, args.seed)
        if args.realizations is None:
            gen = gen_sde(spec)
        else:
            sampler = ParamSampler(args.sampler, -args.sampler_width, args.sampler_width, args.sampler_loc, args.sampler_scale)
            gen = gen_sde_population(spec, args.realizations, sampler)
        if args.as_prices:
            n = gen.data.n
            tickers = tuple(f"S{i:03d}" for i in range(n))
            dates = tuple(str(np.datetime64("2021-01-01") + np.timedelta64(t, "D")) for t in range(gen.data.m))
            table = PriceTable(tickers, dates, np.asarray(gen.data.rows))
            write_prices_csv(table, run.out / "prices.csv")
            run.artifacts["prices.csv"] = hashlib.sha256((run.out / "prices.csv").read_bytes()).hexdigest()
    run.write("data.csv", gen.data.to_csv())
    run.write("labels.csv", _csv_text(["index", "class"], [[i, int(c)] for i, c in enumerate(gen.classes)]))
    run.finish()
    return EXIT_OK


def _selection_doc(data, sel: Selection) -> dict:
    return {"indices": list(sel.chosen), "labels": [data.label_of(i) for i in sel.chosen]}


def cmd_select(args) -> int:
    run = Run(args)
    data, problem = _load_problem(args)
    model = compile_qubo(problem)
    rep = solve(model, _solver_config(args, args.k), threads=args.threads)
    sel = selection_from_bits(rep.best_bits)
    doc = {"report": rep.to_dict(), "selection": _selection_doc(data, sel), "k": args.k, "A": args.A}
    if args.format == "json":
        run.write("selection.json", _dump_json(doc))
    else:
        run.write("selection.csv", _csv_text(["index", "label"], [[i, data.label_of(i)] for i in sel.chosen]))
        r = rep.to_dict()
        run.write("report.csv", _csv_text(list(r), [[r[c] if c != "stats" else json.dumps(r[c], sort_keys=True) for c in r]]))
    status = "ok" if rep.constraint_satisfied else "constraint_unsatisfied"
    run.finish(status)
    if not rep.constraint_satisfied:
        print(f"solution weight {rep.hamming_weight} != k={args.k}", file=sys.stderr)
        return EXIT_UNSATISFIED
    return EXIT_OK


def cmd_compile(args) -> int:
    run = Run(args)
    _, problem = _load_problem(args)
    if args.weighted:
        cfg = WeightedConfig(args.nd, args.wmin, args.wmax, args.B, args.k if args.W is None else args.W)
        model = compile_weighted_qubo(problem, cfg)
    else:
        model = compile_qubo(problem)
    run.write("model.json", model.to_json())
    run.write("model.qubo", model.to_coo())
    run.finish()
    return EXIT_OK


def _read_model(path: str) -> QuboModel:
    text = Path(path).read_text()
    if path.endswith(".json"):
        return QuboModel.from_json(text)
    return QuboModel.from_coo(text)


def cmd_solve(args) -> int:
    run = Run(args)
    model = _read_model(args.model)
    k = args.k if args.k is not None else model.k
    rep = solve(model, _solver_config(args, k), threads=args.threads, k=k)
    run.write("report.json", _dump_json(rep.to_dict()))
    run.finish("ok" if rep.constraint_satisfied else "constraint_unsatisfied")
    return EXIT_OK if rep.constraint_satisfied else EXIT_UNSATISFIED


def cmd_trials(args) -> int:
    run = Run(args)
    if args.model:
        model = _read_model(args.model)
        k = args.k if args.k is not None else model.k
    else:
        if args.data is None or args.k is None:
            raise UsageError("trials needs --model, or --data with --k")
        _, problem = _load_problem(args)
        model, k = compile_qubo(problem), args.k
    batch = run_trials(model, _solver_config(args, k), args.trials, k, threads=args.threads)
    run.write("trials.csv", batch.to_csv())
    if args.format == "json":
        run.write("trials.json", batch.to_json())
    run.write(
        "summary.json",
        _dump_json({k_: v for k_, v in batch.to_dict().items() if k_ != "reports"}),
    )
    run.finish()
    return EXIT_OK


def cmd_sweep_sigma(args) -> int:
    run = Run(args)
    rows = sweep_sigma(
        args.sigmas,
        args.trials,
        _solver_config(args, 2),
        curves=args.curves,
        samples=args.samples,
        metric=args.metric,
        A=args.A,
        threads=args.threads,
    )
    run.write("accuracy.csv", _csv_text(["sigma", "accuracy"], [[repr(float(s)), repr(float(a))] for s, a in rows]))
    run.finish()
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    run = Run(args)
    table = read_prices_csv(args.prices).window(args.start, args.end)
    returns = returns_from_prices(table)
    n = returns.data.n
    bad = [k for k in args.k if k > n]
    if bad:
        raise UsageError(f"k values {bad} exceed the number of assets ({n})")
    curve = mse_curve(returns, args.k, metric=args.metric, A=args.A, config=_solver_config(args), threads=args.threads)
    run.write(
        "mse_curve.csv",
        _csv_text(
            ["k", "mse", "constraint_satisfied", "tickers"],
            [[p.k, repr(p.mse), int(p.satisfied), " ".join(returns.data.label_of(i) for i in p.selection.chosen)] for p in curve],
        ),
    )
    proxy = proxy_index(returns)
    cols = {"proxy": proxy.values, "proxy_cum": cumulative_returns(proxy).values}
    for p in curve:
        if len(p.selection):
            s = subset_index(returns, p.selection)
            cols[f"S{p.k}"] = s.values
            cols[f"S{p.k}_cum"] = cumulative_returns(s).values
    rows = [[day] + [repr(float(v[t])) for v in cols.values()] for t, day in enumerate(returns.dates)]
    run.write("series.csv", _csv_text(["date", *cols], rows))
    run.finish()
    return EXIT_OK


def _parse_target(text: str, n: int, problem, args) -> Selection:
    if text == "optimum":
        cfg = SolverConfig(backend="exhaustive", seed=args.seed)
        return selection_from_bits(solve(compile_qubo(problem), cfg).best_bits)
    if set(text) <= {"0", "1"} and len(text) == n:
        return selection_from_bits(bits_from_str(text))
    try:
        return Selection.from_indices((int(v) for v in text.split(",") if v.strip()), n)
    except ValueError as exc:
        raise UsageError(f"bad --target {text!r}: {exc}") from None


def cmd_enumerate(args) -> int:
    run = Run(args)
    _, problem = _load_problem(args)
    target = _parse_target(args.target, problem.n, problem, args)
    stats = enumerate_combinations(problem, args.k_filter, target, bins=args.bins)
    doc = stats.to_dict()
    doc["target"] = list(target.chosen)
    run.write("enumeration.json", _dump_json(doc))
    run.finish()
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=_nonneg_int, default=0)
    g.add_argument("--out", default="out", help="output directory")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--threads", type=_positive_int, default=1, help="worker cap; results do not depend on it")
    return p


def _solver_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("solver")
    g.add_argument("--solver", choices=SolverConfig.BACKENDS, default="sa")
    g.add_argument("--reads", type=_positive_int, default=1000)
    g.add_argument("--sweeps", type=_positive_int, default=100)
    g.add_argument("--tmax", type=float, default=None)
    g.add_argument("--tmin", type=float, default=None)
    g.add_argument("--tenure", type=_positive_int, default=None)
    g.add_argument("--tabu-iters", type=_positive_int, default=None)
    return p


def _problem_flags(k_required: bool = True) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("problem")
    g.add_argument("--data", required=k_required, help="data CSV, one point per row")
    g.add_argument("--metric", type=_metric, default=Metric("euclidean"))
    g.add_argument("--k", type=_positive_int, required=k_required)
    g.add_argument("--A", type=float, default=2.0, help="cardinality penalty")
    return p


def build_parser() -> argparse.ArgumentParser:
    common, solver = _common(), _solver_flags()
    parser = _Parser(prog="repselect", description="Representative selection as a QUBO.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a synthetic dataset")
    gsub = gen.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    b = gsub.add_parser("blobs", parents=[common])
    b.add_argument("--centers", type=_float_list, default=None, help="x0,y0,x1,y1,...")
    b.add_argument("--points", type=_positive_int, default=90)
    b.add_argument("--std", type=float, default=2.0)
    t = gsub.add_parser("trig", parents=[common])
    t.add_argument("--curves", type=_positive_int, default=50)
    t.add_argument("--samples", type=int, default=100)
    t.add_argument("--sigma", type=float, default=0.1)
    s = gsub.add_parser("sde", parents=[common])
    s.add_argument("--mu", type=_float_list, default=[0.1, -0.1])
    s.add_argument("--vol", type=_float_list, default=[0.2, 0.1, 0.1, 0.2], help="row-major volatility matrix")
    s.add_argument("--x0", type=_float_list, default=None)
    s.add_argument("--dt", type=float, default=1.0 / 253)
    s.add_argument("--steps", type=_positive_int, default=253)
    s.add_argument("--realizations", type=_positive_int, default=None)
    s.add_argument("--sampler", choices=("uniform", "gaussian", "fixed"), default="fixed")
    s.add_argument("--sampler-width", type=float, default=1.0, help="uniform sampler draws from [-w, w]")
    s.add_argument("--sampler-loc", type=float, default=0.0)
    s.add_argument("--sampler-scale", type=float, default=1.0)
    s.add_argument("--as-prices", action="store_true", help="also write date,ticker,close prices.csv")
    for p in (b, t, s):
        p.set_defaults(func=cmd_gen)

    sel = sub.add_parser("select", parents=[common, _problem_flags(), solver], help="choose k representatives")
    sel.set_defaults(func=cmd_select)

    comp = sub.add_parser("compile", parents=[common, _problem_flags()], help="write the QUBO model")
    comp.add_argument("--weighted", action="store_true")
    comp.add_argument("--nd", type=_positive_int, default=1)
    comp.add_argument("--wmin", type=float, default=0.0)
    comp.add_argument("--wmax", type=float, default=1.0)
    comp.add_argument("--B", type=float, default=1.0, help="budget penalty")
    comp.add_argument("--W", type=float, default=None, help="weight budget (default: k)")
    comp.set_defaults(func=cmd_compile)

    sv = sub.add_parser("solve", parents=[common, solver], help="minimize a QUBO model file")
    sv.add_argument("--model", required=True, help="model.json or coordinate text")
    sv.add_argument("--k", type=_nonneg_int, default=None)
    sv.set_defaults(func=cmd_solve)

    tr = sub.add_parser("trials", parents=[common, _problem_flags(False), solver], help="repeated solves")
    tr.add_argument("--model", default=None)
    tr.add_argument("--trials", type=_positive_int, default=300)
    tr.set_defaults(func=cmd_trials)

    sw = sub.add_parser("sweep-sigma", parents=[common, solver], help="accuracy vs trig noise level")
    sw.add_argument("--sigmas", type=_float_list, required=True)
    sw.add_argument("--trials", type=_positive_int, default=200)
    sw.add_argument("--curves", type=_positive_int, default=50)
    sw.add_argument("--samples", type=int, default=100)
    sw.add_argument("--metric", type=_metric, default=Metric("correlation"))
    sw.add_argument("--A", type=float, default=2.0)
    sw.set_defaults(func=cmd_sweep_sigma)

    rc = sub.add_parser("reconstruct", parents=[common, solver], help="MSE of S_k against the proxy index")
    rc.add_argument("--prices", required=True)
    rc.add_argument("--start", default=None)
    rc.add_argument("--end", default=None)
    rc.add_argument("--k", type=_int_list, required=True, help="e.g. 2,5,10 or 2-6")
    rc.add_argument("--metric", type=_metric, default=Metric("correlation"))
    rc.add_argument("--A", type=float, default=2.0)
    rc.set_defaults(func=cmd_reconstruct)

    en = sub.add_parser("enumerate", parents=[common, _problem_flags()], help="cost of every combination")
    en.add_argument("--k-filter", type=_nonneg_int, default=None)
    en.add_argument("--target", default="optimum", help="'optimum', a bit string, or comma-separated indices")
    en.add_argument("--bins", type=_positive_int, default=50)
    en.set_defaults(func=cmd_enumerate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"repselect: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"repselect: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except TooManyVariablesError as exc:
        print(f"repselect: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except DataError as exc:
        print(f"repselect: invalid data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SolverError, ValueError) as exc:
        print(f"repselect: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
