import hashlib
import json

import numpy as np
import pytest

from repselect.cli import main
from repselect.objective import QuboModel


def run(argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


@pytest.fixture
def blobs(tmp_path):
    out = tmp_path / "gen"
    assert run(["gen", "blobs", "--points", 6, "--seed", 1, "--out", out]) == 0
    return out / "data.csv"


def test_gen_writes_manifest(tmp_path):
    out = tmp_path / "g"
    assert run(["gen", "trig", "--curves", 3, "--samples", 10, "--out", out]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok"
    assert man["config"]["curves"] == 3
    for name, digest in man["artifacts"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    assert len((out / "data.csv").read_text().splitlines()) == 7


def test_select_byte_identical(tmp_path, blobs):
    outs = []
    for i, threads in enumerate((1, 3)):
        out = tmp_path / f"s{i}"
        code = run(["select", "--data", blobs, "--k", 2, "--A", 100, "--reads", 200, "--seed", 7, "--threads", threads, "--out", out])
        assert code == 0
        outs.append(out)
    for name in ("selection.json", "manifest.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    doc = json.loads((outs[0] / "selection.json").read_text())
    assert len(doc["selection"]["indices"]) == 2
    assert doc["report"]["constraint_satisfied"] is True


def test_select_csv_format(tmp_path, blobs):
    out = tmp_path / "s"
    assert run(["select", "--data", blobs, "--k", 3, "--A", 100, "--solver", "tabu", "--reads", 20, "--format", "csv", "--out", out]) == 0
    assert (out / "selection.csv").read_text().startswith("index,label\n")
    assert (out / "report.csv").exists()


def test_select_unsatisfied_exit_code(tmp_path, blobs):
    out = tmp_path / "s"
    assert run(["select", "--data", blobs, "--k", 2, "--solver", "exhaustive", "--out", out]) == 2
    assert json.loads((out / "manifest.json").read_text())["status"] == "constraint_unsatisfied"


@pytest.mark.parametrize(
    "argv",
    [
        ["select", "--data", "x.csv", "--k", 0],
        ["select", "--k", 2],
        ["select", "--data", "x.csv", "--k", 2, "--solver", "qaoa"],
        ["select", "--data", "x.csv", "--k", 2, "--metric", "manhattan"],
    ],
)
def test_usage_errors(argv, tmp_path):
    assert run(argv + ["--out", tmp_path / "o"]) == 64


def test_unknown_command():
    assert run(["bogus"]) == 64


def test_k_exceeding_points_is_usage_error(tmp_path, blobs):
    assert run(["select", "--data", blobs, "--k", 13, "--out", tmp_path / "o"]) == 64


def test_bad_temperatures_is_usage_error(tmp_path, blobs):
    argv = ["select", "--data", blobs, "--k", 2, "--tmax", 1, "--tmin", 2, "--out", tmp_path / "o"]
    assert run(argv) == 64


def test_missing_input(tmp_path):
    assert run(["select", "--data", tmp_path / "nope.csv", "--k", 2, "--out", tmp_path / "o"]) == 66


def test_bad_data(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,2\n3\n")
    assert run(["select", "--data", p, "--k", 1, "--out", tmp_path / "o"]) == 65


def test_enumerate_too_large(tmp_path):
    p = tmp_path / "d.csv"
    np.savetxt(p, np.random.default_rng(0).normal(size=(25, 2)), delimiter=",")
    assert run(["enumerate", "--data", p, "--k", 2, "--target", "0,1", "--out", tmp_path / "o"]) == 69
    out = tmp_path / "f"
    assert run(["enumerate", "--data", p, "--k", 2, "--k-filter", 2, "--target", "0,1", "--out", out]) == 0
    doc = json.loads((out / "enumeration.json").read_text())
    assert doc["evaluated"] == 300


def test_enumerate_optimum_percentile_zero(tmp_path, blobs):
    out = tmp_path / "e"
    assert run(["enumerate", "--data", blobs, "--k", 2, "--out", out]) == 0
    doc = json.loads((out / "enumeration.json").read_text())
    assert doc["evaluated"] == 2**12
    assert doc["target_percentile"] == 0.0


def test_compile_then_solve(tmp_path, blobs):
    out = tmp_path / "c"
    assert run(["compile", "--data", blobs, "--k", 2, "--A", 100, "--out", out]) == 0
    a = QuboModel.from_json((out / "model.json").read_text())
    b = QuboModel.from_coo((out / "model.qubo").read_text())
    assert np.array_equal(a.coeffs, b.coeffs) and a.offset == b.offset
    sol = tmp_path / "s"
    assert run(["solve", "--model", out / "model.json", "--solver", "exhaustive", "--out", sol]) == 0
    rep = json.loads((sol / "report.json").read_text())
    assert rep["hamming_weight"] == 2


def test_compile_weighted(tmp_path, blobs):
    out = tmp_path / "c"
    assert run(["compile", "--data", blobs, "--k", 2, "--weighted", "--nd", 2, "--out", out]) == 0
    m = QuboModel.from_json((out / "model.json").read_text())
    assert m.num_vars == 12 + 2 * 12 * 2


def test_trials_outputs(tmp_path, blobs):
    out = tmp_path / "t"
    argv = ["trials", "--data", blobs, "--k", 2, "--trials", 3, "--reads", 20, "--sweeps", 10, "--out", out]
    assert run(argv) == 0
    lines = (out / "trials.csv").read_text().splitlines()
    assert len(lines) == 4
    summary = json.loads((out / "summary.json").read_text())
    assert summary["trials"] == 3
    assert run(["trials", "--trials", 2, "--out", tmp_path / "u"]) == 64


def test_sweep_sigma_output(tmp_path):
    out = tmp_path / "w"
    argv = ["sweep-sigma", "--sigmas", "0,0.5", "--trials", 2, "--curves", 3, "--samples", 12,
            "--solver", "tabu", "--reads", 5, "--out", out]
    assert run(argv) == 0
    rows = (out / "accuracy.csv").read_text().splitlines()
    assert rows[0] == "sigma,accuracy" and len(rows) == 3
    for row in rows[1:]:
        sigma, acc = row.split(",")
        float(sigma), float(acc)


def test_gen_sde_prices_and_reconstruct(tmp_path):
    g = tmp_path / "g"
    argv = ["gen", "sde", "--realizations", 4, "--steps", 30, "--as-prices", "--seed", 2, "--out", g]
    assert run(argv) == 0
    out = tmp_path / "r"
    argv = ["reconstruct", "--prices", g / "prices.csv", "--k", "2-3,8", "--solver", "tabu", "--reads", 10, "--out", out]
    assert run(argv) == 0
    rows = (out / "mse_curve.csv").read_text().splitlines()
    assert rows[0] == "k,mse,constraint_satisfied,tickers"
    assert rows[-1].startswith("8,0.0,1,")
    assert run(["reconstruct", "--prices", g / "prices.csv", "--k", 9, "--out", tmp_path / "x"]) == 64


def test_select_blob_scenario_matches_pair_oracle(tmp_path):
    from itertools import combinations

    from repselect.data import read_data_csv
    from repselect.distances import build_distance_matrix
    from repselect.objective import SelectorProblem, evaluate_cost_batch

    g = tmp_path / "g"
    assert run(["gen", "blobs", "--seed", 0, "--out", g]) == 0
    out = tmp_path / "s"
    assert run(["select", "--data", g / "data.csv", "--k", 2, "--solver", "exhaustive", "--out", out]) == 0
    chosen = json.loads((out / "selection.json").read_text())["selection"]["indices"]

    p = SelectorProblem(build_distance_matrix(read_data_csv(g / "data.csv"), "euclidean"), 2, 2.0)
    pairs = np.array(list(combinations(range(180), 2)))
    states = np.zeros((len(pairs), 180), dtype=np.int8)
    np.put_along_axis(states, pairs, 1, axis=1)
    best = pairs[np.argmin(evaluate_cost_batch(p, states))].tolist()
    assert chosen == best
    # the literal minimum pairs two nearby points of the same blob
    assert (chosen[0] < 90) == (chosen[1] < 90)
