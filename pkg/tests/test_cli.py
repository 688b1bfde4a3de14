import csv
import io
import json

import pytest

from cspref.cli import main
from cspref.hypergraph import Hypergraph
from cspref.instances import Instance, sample_planted
from cspref.predicates import named_predicate


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_writes_json_and_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "gen", "--pred", "xor:3", "--n", "100", "--p", "1e-3", "--seed", "1", "--out", str(a))[0] == 0
    assert run(capsys, "gen", "--pred", "xor:3", "--n", "100", "--p", "1e-3", "--seed", "1", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    inst = Instance.from_dict(json.loads(a.read_text()))
    assert inst.n == 100 and inst.k == 3


def test_gen_multiple_seeds(tmp_path, capsys):
    out = tmp_path / "inst-{seed}.json"
    assert run(capsys, "gen", "--pred", "or:3", "--n", "20", "--m", "50", "--seed", "3", "--seed", "4", "--out", str(out))[0] == 0
    assert (tmp_path / "inst-3.json").exists() and (tmp_path / "inst-4.json").exists()


def test_gen_rejects_both_densities(capsys):
    code, _, err = run(capsys, "gen", "--pred", "xor:3", "--n", "10", "--p", "0.1", "--m", "5")
    assert code == 1 and "not allowed" in err


def test_refute_planted_never_below_one(tmp_path, capsys):
    inst, _ = sample_planted(named_predicate("or", k=3), 30, 3000, 0)
    path = tmp_path / "planted.json"
    path.write_text(json.dumps(inst.to_dict()))
    code, out, _ = run(capsys, "refute", str(path))
    report = json.loads(out)
    assert report["verdict"] == "fail" or report["bound"] >= 1
    assert not (code == 0 and report["bound"] < 1)


def test_refute_fail_path(tmp_path, capsys):
    code, out, _ = run(capsys, "refute", "--pred", "or:3", "--n", "30", "--m", "2000", "--cap-dim", "10")
    assert code == 2
    assert json.loads(out)["verdict"] == "fail"


def test_refute_batch_rows_and_aggregate(capsys):
    argv = ["refute", "--pred", "xor:3", "--n", "20", "--m", "600", "--target", "1.0", "--no-timing"]
    for s in range(30):
        argv += ["--seed", str(s)]
    code, out, _ = run(capsys, *argv)
    report = json.loads(out)
    assert code == 0
    assert [r["seed"] for r in report["rows"]] == list(range(30))
    agg = report["aggregate"]
    assert agg["runs"] == 30 and agg["bounds"] + agg["fails"] == 30
    hits = sum(r["report"]["bound"] <= 1.0 for r in report["rows"])
    assert agg["success_rate"] == hits / 30


def test_refute_is_reproducible(capsys):
    argv = ["refute", "--pred", "maj:3", "--n", "15", "--m", "400", "--seed", "2", "--no-timing"]
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second


def test_refute_csv_and_sweep(capsys):
    code, out, _ = run(capsys, "refute", "--pred", "xor:3", "--n", "20", "--m", "100",
                       "--sweep", "200:800:3", "--seed", "1", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 3
    assert [int(r["m"]) for r in rows] == [200, 400, 800]


def test_refute_dimacs_input(tmp_path, capsys):
    path = tmp_path / "f.cnf"
    path.write_text("p cnf 3 2\n1 2 3 0\n-1 -2 -3 0\n")
    code, out, _ = run(capsys, "refute", str(path), "--method", "strong")
    assert code == 0 and json.loads(out)["bound"] >= 1


def test_refute_bad_input(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert run(capsys, "refute", str(path))[0] == 1
    assert run(capsys, "refute")[0] == 1


def test_predicate_command(capsys):
    code, out, _ = run(capsys, "predicate", "--pred", "maj:3")
    rep = json.loads(out)
    deltas = {row["t"]: row["delta"] for row in rep["lp"]}
    assert code == 0 and deltas[2] == "1/4" and deltas[3] == "1/2"
    assert all(row["dual_separates"] and row["above_granularity"] for row in rep["lp"])
    rep = json.loads(run(capsys, "predicate", "--pred", "or:3")[1])
    deltas = {row["t"]: row["delta"] for row in rep["lp"]}
    assert deltas[2] == "0/1" and deltas[3] == "1/8"


def test_predicate_huang_table_mode(capsys):
    code, out, _ = run(capsys, "predicate", "--pred", "huang:4", "--t", "4")
    rep = json.loads(out)
    assert code == 0 and rep["k"] == 8
    assert [row["t"] for row in rep["lp"]] == [1, 2, 3, 4]


def test_predicate_separator(capsys):
    rep = json.loads(run(capsys, "predicate", "--pred", "thr:5,-1", "--separator", "thr_minus1:5")[1])
    assert rep["separator"]["delta"] == "1/196" and rep["separator"]["verified"]


def test_predicate_arity_cap(capsys):
    assert run(capsys, "predicate", "--pred", "or:17")[0] == 1


def test_hypergraph_command(tmp_path, capsys):
    code, out, _ = run(capsys, "hypergraph", "--n", "20", "--p", "0.2", "--uniformity", "3", "--seed", "0")
    rep = json.loads(out)
    assert code == 0 and "beta" in rep["independence"]
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps(Hypergraph(12, 3, []).to_dict()))
    rep = json.loads(run(capsys, "hypergraph", str(empty), "--p", "0.1", "--xi", "3")[1])
    assert rep["chromatic"]["status"] == "not certified"


def test_hypergraph_edge_list(tmp_path, capsys):
    path = tmp_path / "edges.txt"
    path.write_text("1 2 3\n2 3 4\n1 3 4\n")
    code, out, _ = run(capsys, "hypergraph", str(path), "--p", "0.5")
    rep = json.loads(out)
    assert code == 0 and rep["edges"] == 3 and rep["n"] == 4
    H = Hypergraph.from_edge_list(path.read_text())
    assert Hypergraph.from_edge_list(H.to_edge_list()).edge_set() == H.edge_set()
    assert H.to_edge_list() == "1 2 3\n1 3 4\n2 3 4\n"


def test_hypergraph_needs_p(tmp_path, capsys):
    path = tmp_path / "edges.txt"
    path.write_text("1 2 3\n")
    assert run(capsys, "hypergraph", str(path))[0] == 1


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("CSPREF_THREADS", "2")
    argv = ["refute", "--pred", "xor:3", "--n", "15", "--m", "200", "--seed", "0", "--seed", "1", "--no-timing"]
    rows = json.loads(run(capsys, *argv)[1])["rows"]
    monkeypatch.setenv("CSPREF_THREADS", "1")
    assert json.loads(run(capsys, *argv)[1])["rows"] == rows
