"""The spec-file front end: exit codes, report shape, demos and DOT export."""
import json
from pathlib import Path

import pytest

from corrkit import cli

DATA = Path(__file__).parent / "data"
ALL_OPS = DATA / "all_ops.json"


def write(tmp_path, data, name="spec.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(p)


def run_json(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip().startswith("{") else out.out), out.err


# ---------------------------------------------------------------- registry


def test_every_op_is_exercised_by_the_bundle():
    ops = {t["op"] for t in json.loads(ALL_OPS.read_text())["tasks"]}
    assert ops == set(cli.REGISTRY)


def test_bundle_passes(capsys):
    code, rep, _ = run_json(capsys, ["run", str(ALL_OPS)])
    failed = [t["task"] for t in rep["tasks"] if not t["passed"]]
    assert code == 0, failed
    assert len(rep["tasks"]) == len(cli.REGISTRY)


def test_report_shape(capsys):
    code, rep, _ = run_json(capsys, ["demo", "skw"])
    assert code == 0
    assert set(rep) == {"schema", "source", "tolerance", "seed", "passed", "tasks"}
    assert rep["schema"] == cli.REPORT_SCHEMA and rep["source"] == "demo:skw"
    for t in rep["tasks"]:
        assert {"task", "op", "passed", "max_residual", "residuals", "conditions",
                "failures", "witnesses", "details"} <= set(t)


# ---------------------------------------------------------------- demos


@pytest.mark.parametrize("name", cli.DEMOS)
def test_demo_is_deterministic(name, capsys):
    assert cli.main(["demo", name]) == 0
    first = capsys.readouterr().out
    assert cli.main(["demo", name]) == 0
    assert capsys.readouterr().out == first


def test_skw_demo_certifies_the_isomorphism(capsys):
    _, rep, _ = run_json(capsys, ["demo", "skw"])
    iso = [t for t in rep["tasks"] if t["op"] == "graphs.verify_graph_product_isomorphism"]
    assert iso and all(t["passed"] for t in iso)


def test_parallel_matches_sequential(capsys):
    cli.main(["run", str(ALL_OPS)])
    seq = capsys.readouterr().out
    cli.main(["run", str(ALL_OPS), "--parallel"])
    assert capsys.readouterr().out == seq


# ---------------------------------------------------------------- exit codes


def test_empty_tasks_pass(tmp_path, capsys):
    code, rep, _ = run_json(capsys, ["run", write(tmp_path, {"tasks": []})])
    assert code == 0 and rep["passed"] and rep["tasks"] == []


def test_documented_product(tmp_path, capsys):
    spec = {"algebras": {"C2": {"blocks": [1, 1]}},
            "tasks": [{"op": "fdalg.multiply", "args": {"algebra": "C2", "a": [[2, 0], [0, 3]],
                                                        "b": [[5, 0], [0, 7]]},
                       "expect": {"product": [[10, 0], [0, 21]]}}]}
    code, rep, _ = run_json(capsys, ["run", write(tmp_path, spec)])
    assert code == 0 and rep["tasks"][0]["details"]["product"] == [[10, 0], [0, 21]]


def test_failed_expectation_exits_one(tmp_path, capsys):
    spec = {"tasks": [{"op": "fdalg.make_cyclic_group", "args": {"n": 4}, "expect": {"order": 5}}]}
    code, rep, _ = run_json(capsys, ["run", write(tmp_path, spec)])
    assert code == 1
    t = rep["tasks"][0]
    assert t["failures"] == ["expect.order"]
    assert t["witnesses"][0]["at"] == {"expected": 5, "actual": 4}


@pytest.mark.parametrize("spec, pointer", [
    ({"algebras": {"A": {"group_algebra": "Z9"}}, "tasks": []}, "/algebras/A"),
    ({"groups": {"Z2": {"cyclic": 0}}, "tasks": []}, "/groups/Z2"),
    ({"tasks": [{"op": "fdalg.no_such_op"}]}, "/tasks/0/op"),
    ({"tasks": [{"op": "fdalg.make_cyclic_group", "args": {"n": -1}}]}, "/tasks/0/args/n"),
    ({"tasks": [{"op": "fdalg.make_cyclic_group", "args": {"n": 2}, "expect": {"nope": 1}}]},
     "/tasks/0/expect/nope"),
    ({"tasks": "none"}, "/tasks"),
], ids=["dangling", "schema", "unknown-op", "bad-arg", "bad-expect", "tasks-type"])
def test_input_errors_exit_two_with_pointer(tmp_path, capsys, spec, pointer):
    code = cli.main(["run", write(tmp_path, spec)])
    err = capsys.readouterr().err
    assert code == 2
    assert err.startswith("corrkit: input error at ")
    assert f"at {pointer}" in err


def test_invalid_json_exits_two(tmp_path, capsys):
    code = cli.main(["run", write(tmp_path, '{"tasks": [\n  oops]}')])
    err = capsys.readouterr().err
    assert code == 2 and "line 2" in err


def test_missing_file_exits_two(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "absent.json")]) == 2
    assert "cannot read" in capsys.readouterr().err


# ---------------------------------------------------------------- flags


def test_text_format_and_out(tmp_path, capsys):
    out = tmp_path / "report.txt"
    spec = {"tasks": [{"name": "z3", "op": "fdalg.make_cyclic_group", "args": {"n": 3}}]}
    assert cli.main(["run", write(tmp_path, spec), "--format", "text", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert out.read_text() == "PASS z3 max_residual=0\nPASS 1 task(s)\n"


def test_timing_flag(tmp_path, capsys):
    spec = {"tasks": [{"op": "fdalg.make_cyclic_group", "args": {"n": 3}}]}
    _, rep, _ = run_json(capsys, ["run", write(tmp_path, spec), "--timing"])
    assert rep["tasks"][0]["seconds"] >= 0
    _, rep, _ = run_json(capsys, ["run", write(tmp_path, spec)])
    assert "seconds" not in rep["tasks"][0]


def test_tolerance_from_environment(tmp_path, capsys, monkeypatch):
    spec = {"tasks": [{"op": "fdalg.make_cyclic_group", "args": {"n": 3}}]}
    path = write(tmp_path, spec)
    monkeypatch.setenv("CORRKIT_TOLERANCE", "1e-6")
    _, rep, _ = run_json(capsys, ["run", path])
    assert rep["tolerance"] == 1e-6
    _, rep, _ = run_json(capsys, ["run", path, "--tolerance", "1e-3"])
    assert rep["tolerance"] == 1e-3
    monkeypatch.setenv("CORRKIT_TOLERANCE", "tight")
    assert cli.main(["run", path]) == 2
    assert "CORRKIT_TOLERANCE" in capsys.readouterr().err


def test_seed_is_recorded(capsys):
    _, rep, _ = run_json(capsys, ["demo", "crossed-z2", "--seed", "7"])
    assert rep["seed"] == 7


# ---------------------------------------------------------------- export-dot


def skw_spec():
    return json.loads(cli.demo_text("skw"))


def test_export_empty_graph(tmp_path):
    spec = {"graphs": {"G": {"vertices": [], "edges": []}}, "tasks": []}
    out = tmp_path / "g.dot"
    assert cli.main(["export-dot", write(tmp_path, spec), "G", str(out)]) == 0
    assert out.read_text() == 'digraph "G" {\n}\n'


def test_export_skw_product(tmp_path):
    out = tmp_path / "exf.dot"
    assert cli.main(["export-dot", write(tmp_path, skw_spec()), "ExF", str(out)]) == 0
    lines = out.read_text().splitlines()
    nodes = [ln for ln in lines if ln.strip().endswith(";") and "->" not in ln]
    loops = [ln for ln in lines if "->" in ln]
    assert len(nodes) == 2 and len(loops) == 2
    for ln in loops:
        src, dst = ln.split("[")[0].split("->")
        assert src.strip() == dst.strip()


def test_export_labeled_graph(tmp_path):
    out = tmp_path / "f.dot"
    assert cli.main(["export-dot", write(tmp_path, skw_spec()), "F", str(out)]) == 0
    assert '"w" -> "w" [id="e", label="1"];' in out.read_text()


def test_export_unknown_graph(tmp_path, capsys):
    assert cli.main(["export-dot", write(tmp_path, skw_spec()), "Nope", str(tmp_path / "x.dot")]) == 2
    assert "/graphs/Nope" in capsys.readouterr().err
