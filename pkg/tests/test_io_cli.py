import json
import logging
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opsys_index import cli
from opsys_index.cache import ENV_VAR
from opsys_index.io import (
    InputFormatError,
    canonical_graph,
    canonical_space,
    digest,
    graph_to_dimacs,
    load_map,
    load_operator_space,
    load_system,
    parse_graph,
    parse_graph_text,
    write_system,
)
from opsys_index.systems import Graph, full_system, same_span, system_from_graph

C5_DIMACS = "p edge 5 5\ne 1 2\ne 2 3\ne 3 4\ne 4 5\ne 5 1\n"


# ---------------------------------------------------------------- parsing


def test_parse_dimacs_c5(tmp_path):
    p = tmp_path / "c5.dimacs"
    p.write_text("c a comment\n" + C5_DIMACS)
    g = parse_graph(p, "dimacs")
    assert g == Graph.cycle(5)
    assert parse_graph(p) == g


def test_parse_edgelist():
    g = parse_graph_text("3\n0 1\n", "edgelist")
    assert g.vertex_count == 3 and g.sorted_edges() == [(0, 1)]


def test_duplicates_and_reversals_merge():
    g = parse_graph_text("p edge 3 3\ne 1 2\ne 2 1\ne 1 2\n", "dimacs")
    assert g.sorted_edges() == [(0, 1)]


@pytest.mark.parametrize("text, fmt, msg", [
    ("p edge 2 1\ne 1 1\n", "dimacs", "self-loop"),
    ("p edge 2 1\ne 1 3\n", "dimacs", "out of range"),
    ("p edge two 1\n", "dimacs", "header"),
    ("p graph 2 1\n", "dimacs", "header"),
    ("e 1 2\n", "dimacs", "before"),
    ("3\n0 3\n", "edgelist", "out of range"),
    ("3\n1 1\n", "edgelist", "self-loop"),
    ("3 4\n", "edgelist", "vertex count"),
    ("", "edgelist", "empty"),
])
def test_parse_errors(text, fmt, msg):
    with pytest.raises(InputFormatError, match=msg):
        parse_graph_text(text, fmt)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])))))
def test_dimacs_round_trip_and_digest_invariance(data):
    n, edges = data
    g = Graph(n, frozenset(edges))
    assert parse_graph_text(graph_to_dimacs(g), "dimacs") == g
    shuffled = "\n".join([f"p edge {n} {len(edges)}"] + [f"e {j + 1} {i + 1}" for i, j in reversed(edges)])
    h = parse_graph_text(shuffled, "dimacs")
    assert digest(canonical_graph(h)) == digest(canonical_graph(g))


def test_system_json_round_trip(tmp_path):
    s = system_from_graph(Graph.cycle(5))
    path = tmp_path / "s.json"
    write_system(s, path)
    back = load_system(str(path))
    assert same_span(back, s)


def test_canonical_space_is_basis_independent(rng):
    s = system_from_graph(Graph.path(3))
    mats = list(s.basis)
    perm = [mats[k] for k in rng.permutation(len(mats))]
    mixed = [m + 0.5 * perm[0] for m in perm[1:]] + [perm[0]]
    assert digest(canonical_space(mats, 3)) == digest(canonical_space(perm, 3))
    assert digest(canonical_space(mats, 3)) == digest(canonical_space(mixed, 3))
    assert digest(canonical_space(mats, 3)) != digest(canonical_space(list(full_system(3).basis), 3))


def test_load_system_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InputFormatError):
        load_system(str(bad))
    kernel = tmp_path / "k.json"
    kernel.write_text(json.dumps({"ambient_dim": 2, "basis": [[[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]]}))
    with pytest.raises(InputFormatError, match="identity"):
        load_system(str(kernel))
    nonherm = tmp_path / "n.json"
    nonherm.write_text(json.dumps({"ambient_dim": 2, "basis": [[[[1, 0], [1, 0]], [[0, 0], [1, 0]]]]}))
    with pytest.raises(InputFormatError):
        load_system(str(nonherm))
    missing = tmp_path / "m.json"
    missing.write_text(json.dumps({"basis": []}))
    with pytest.raises(InputFormatError, match="ambient_dim"):
        load_system(str(missing))


def test_builtins():
    assert load_system("full:3").dim == 9
    assert load_system("scalar:2").dim == 1
    assert load_system("diagonal:4").dim == 4
    assert load_operator_space("full:2").dim == 4
    t = load_map("transpose:2")
    np.testing.assert_allclose(t(np.array([[1, 2], [3, 4]])), [[1, 3], [2, 4]])


# ---------------------------------------------------------------- command line


def run_cli(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def c5(tmp_path):
    p = tmp_path / "c5.dimacs"
    p.write_text(C5_DIMACS)
    return str(p)


@pytest.fixture(autouse=True)
def no_env_cache(monkeypatch):
    monkeypatch.delenv(ENV_VAR, raising=False)


def test_theta_command(c5, capsys):
    code, out, _ = run_cli(["theta", "--graph", c5], capsys)
    rec = json.loads(out)
    assert code == 0
    assert abs(rec["value"] - 2.2360679) <= 1e-7
    for key in ("command", "inputs", "value", "dual_value", "gap", "status", "solver"):
        assert key in rec
    assert rec["solver"]["tol"] == 1e-8 and rec["solver"]["iterations"] > 0
    assert rec["status"] == "optimal"


def test_output_round_trips_byte_identically(c5, capsys):
    _, out, _ = run_cli(["qtheta", "--graph", c5], capsys)
    assert cli.dumps(json.loads(out)) == out


def test_twelve_significant_digits():
    assert cli._num(math.pi) == 3.14159265359
    assert cli._num(float("inf")) is None and cli._num(float("nan")) is None
    assert cli.dumps({"a": 1 / 3}) == '{\n  "a": 0.333333333333\n}\n'


def test_lambda_tilde_command(capsys):
    code, out, _ = run_cli(["lambda-tilde", "--system", "full:3"], capsys)
    assert code == 0
    assert abs(json.loads(out)["value"] - 9) <= 1e-5


def test_mult_check_command(capsys):
    code, out, _ = run_cli(["mult-check", "--system", "full:2", "--system0", "scalar:2"], capsys)
    rec = json.loads(out)
    assert code == 0
    assert rec["details"]["relative_deviation"] <= 1e-5
    assert abs(rec["value"] - 16) <= 1e-5


def test_out_flag(c5, tmp_path, capsys):
    dest = tmp_path / "r.json"
    code, out, _ = run_cli(["coindex", "--graph", c5, "--out", str(dest)], capsys)
    assert code == 0 and out == ""
    assert json.loads(dest.read_text())["value"] <= math.sqrt(5) + 1e-6


def test_compare_and_hoffman_and_linf(c5, capsys):
    code, out, _ = run_cli(["compare", "--graph", c5], capsys)
    d = json.loads(out)["details"]
    assert code == 0 and abs(d["cp_index"] - d["lovasz_theta"]) <= 1e-6
    code, out, _ = run_cli(["hoffman", "--graph", c5, "--restarts", "3"], capsys)
    assert code == 0 and json.loads(out)["value"] <= math.sqrt(5) + 1e-6
    code, out, _ = run_cli(["bounded-index-linf", "--dim", "4"], capsys)
    assert code == 0 and json.loads(out)["value"] == 4


def test_cb_norm_and_relative_theta(tmp_path, capsys):
    code, out, _ = run_cli(["cb-norm", "--map", "transpose:2"], capsys)
    assert code == 0 and abs(json.loads(out)["value"] - 2) <= 1e-5
    g, h = tmp_path / "g.txt", tmp_path / "h.txt"
    g.write_text("3\n0 1\n1 2\n0 2\n")
    h.write_text("3\n0 1\n")
    code, out, _ = run_cli(["relative-theta", "--graph", str(g), "--graph", str(h)], capsys)
    assert code == 0 and abs(json.loads(out)["value"] - 2) <= 1e-5
    code, _, err = run_cli(["relative-theta", "--graph", str(h), "--graph", str(g)], capsys)
    assert code == 1 and "subgraph" in err


def test_exit_codes(c5, tmp_path, capsys):
    assert run_cli(["nonsense"], capsys)[0] == 1
    assert run_cli(["theta"], capsys)[0] == 1
    bad = tmp_path / "bad.dimacs"
    bad.write_text("p edge 2 1\ne 1 1\n")
    code, _, err = run_cli(["theta", "--graph", str(bad)], capsys)
    assert code == 1 and "self-loop" in err
    code, _, err = run_cli(["lambda-tilde", "--system", "full:11"], capsys)
    assert code == 1 and "exceeds" in err
    code, out, _ = run_cli(["cp-index", "--graph", c5, "--max-iter", "2"], capsys)
    assert code == 3 and json.loads(out)["status"] == "max_iterations"


def test_cache_hit_miss_and_corruption(c5, tmp_path, capsys, caplog):
    cache = tmp_path / "cache"
    args = ["theta", "--graph", c5, "--cache-dir", str(cache)]
    _, first, _ = run_cli(args, capsys)
    files = list(cache.glob("*.json"))
    assert len(files) == 1
    with caplog.at_level(logging.INFO, logger="opsys_index"):
        _, second, _ = run_cli(args, capsys)
    assert second == first
    assert any("served from cache" in r.message for r in caplog.records)
    # changed tolerance: a miss and a second record
    _, third, _ = run_cli(args + ["--tol", "1e-7"], capsys)
    assert json.loads(third)["parameters"]["tol"] == 1e-7
    assert len(list(cache.glob("*.json"))) == 2
    # corrupted record: warning, recompute, record rewritten
    files[0].write_text("garbage")
    caplog.clear()
    with caplog.at_level(logging.WARNING, logger="opsys_index"):
        _, fourth, _ = run_cli(args, capsys)
    assert any("corrupted" in r.message for r in caplog.records)
    assert json.loads(fourth)["value"] == json.loads(first)["value"]
    assert json.loads(files[0].read_text())["value"] == json.loads(first)["value"]


def test_cache_from_environment(c5, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(ENV_VAR, str(tmp_path / "envcache"))
    run_cli(["theta", "--graph", c5], capsys)
    assert len(list((tmp_path / "envcache").glob("*.json"))) == 1


def test_digest_invariant_under_edge_order(tmp_path, capsys):
    a, b = tmp_path / "a.dimacs", tmp_path / "b.dimacs"
    a.write_text(C5_DIMACS)
    b.write_text("p edge 5 5\ne 1 5\ne 5 4\ne 4 3\ne 2 1\ne 3 2\n")
    _, ra, _ = run_cli(["theta", "--graph", str(a)], capsys)
    _, rb, _ = run_cli(["theta", "--graph", str(b)], capsys)
    assert json.loads(ra)["digest"] == json.loads(rb)["digest"]


def test_console_script(c5):
    proc = subprocess.run([sys.executable, "-m", "opsys_index.cli", "theta", "--graph", c5],
                          capture_output=True, text=True, env={**os.environ, ENV_VAR: ""})
    assert proc.returncode == 0
    assert abs(json.loads(proc.stdout)["value"] - math.sqrt(5)) <= 1e-9
