import importlib.resources
import json
import os
import subprocess
import sys

import jsonschema
import pytest

from fmtk.cli import main, run
from fmtk.classes import NestedWord, format_nested_word, parse_nested_word
from fmtk.structures import clique, graph, path, serialize_structure

SCHEMA = json.loads(importlib.resources.files("fmtk").joinpath("report_schema.json").read_text())


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for n in (0, 1, 3, 9, 10):
        (tmp_path / f"p{n}.str").write_text(serialize_structure(path(n)))
    (tmp_path / "k3.str").write_text(serialize_structure(clique(3)))
    (tmp_path / "edge.str").write_text(serialize_structure(graph(2, [(0, 1)])))
    (tmp_path / "v0.str").write_text(serialize_structure(graph([0])))
    (tmp_path / "v1.str").write_text(serialize_structure(graph([1])))
    (tmp_path / "bad.str").write_text("vocab E/2\nuniverse 0 1\nE 0 7\n")
    (tmp_path / "f.fml").write_text("exists x. exists y. E(x,y)\n")
    (tmp_path / "nw.txt").write_text(format_nested_word(NestedWord.of("abaabba", [(1, 7), (2, 4), (5, 6)])))
    (tmp_path / "optree.txt").write_text("join\n  *\n  union\n    *\n    *\n")
    (tmp_path / "cotree.txt").write_text("fn:0110\n  leaf:1:a\n  fn:0000\n    leaf:2:b\n    leaf:2:a\n")
    (tmp_path / "chain.txt").write_text("a\n" + "".join("  " * i + "a\n" for i in range(1, 12)))
    return tmp_path


def call(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSpecExamples:
    def test_paths_equivalent(self, workdir, capsys):
        code, out, _ = call(capsys, "equiv", "p9.str", "p10.str", "--m", "2", "--logic", "fo")
        assert (code, out) == (0, "equivalent\n")

    def test_fixture_then_eval(self, workdir, capsys):
        assert call(capsys, "fixture", "glt-counterexample", "1", "1", "--out", ".")[0] == 0
        assert call(capsys, "eval", "A.str", "psi_k.fml") == (0, "true\n", "")
        assert call(capsys, "eval", "B.str", "psi_k.fml")[1] == "false\n"

    def test_malformed_structure(self, workdir, capsys):
        code, _, err = call(capsys, "eval", "bad.str", "f.fml")
        assert code == 2
        assert "bad.str: line 3" in err


class TestExitCodes:
    def test_refuted_with_counterexample(self, workdir, capsys):
        code, out, _ = call(capsys, "psc-check", "f.fml", "--family", "graphs<=4", "--k", "1", "--json")
        report = json.loads(out)
        assert code == 1 and report["result"]["verdict"] == "counterexample"
        assert "structure" in report["result"]["counterexample"]

    def test_universe_cap(self, workdir, capsys):
        assert call(capsys, "eval", "p9.str", "f.fml", "--max-universe", "4")[0] == 3

    def test_inconclusive_cover_search_is_cap(self, workdir, capsys):
        code, out, _ = call(capsys, "pce-check", "f.fml", "--family", "graphs<=3", "--k", "2", "--cover-cap", "1", "--json")
        assert code == 3 and json.loads(out)["result"]["verdict"] == "inconclusive"

    def test_family_size_cap(self, workdir, capsys):
        assert call(capsys, "psc-check", "f.fml", "--family", "graphs<=9", "--k", "1")[0] == 3

    def test_usage(self, workdir, capsys):
        assert call(capsys, "equiv", "p9.str")[0] == 2
        assert call(capsys, "no-such-verb")[0] == 2
        assert call(capsys, "eval", "p3.str", "exists x. (E(x,x)")[0] == 2
        assert call(capsys, "eval", "p3.str", "R(x)")[0] == 2
        assert call(capsys, "psc-check", "f.fml", "--family", "trees", "--k", "1")[0] == 2
        assert call(capsys, "--help")[0] == 0

    def test_ebsp_none_below_bound(self, workdir, capsys):
        code, out, _ = call(capsys, "ebsp-search", "p9.str", "--family", "paths<=10", "--family-size", "10", "--m", "2", "--bound", "3")
        assert code == 1 and out.startswith("no witness")

    def test_cover_check(self, workdir, capsys):
        assert call(capsys, "cover-check", "edge.str", "v0.str", "v1.str", "--k", "1")[0] == 0
        assert call(capsys, "cover-check", "edge.str", "v0.str", "v1.str", "--k", "2")[0] == 1


class TestVerbs:
    def test_nested_word_round_trip(self, workdir, capsys):
        code, tree, _ = call(capsys, "nw-encode", "nw.txt")
        assert code == 0
        (workdir / "t.txt").write_text(tree)
        _, word, _ = call(capsys, "nw-decode", "t.txt")
        assert parse_nested_word(word) == parse_nested_word((workdir / "nw.txt").read_text())

    def test_optree(self, workdir, capsys):
        code, out, _ = call(capsys, "optree-eval", "optree.txt", "v0.str", "v0.str", "v1.str")
        assert code == 0 and out.startswith("vocab E/2\nuniverse")
        assert out.count("\nE ") == 4

    def test_cotree(self, workdir, capsys):
        code, out, _ = call(capsys, "cotree-graph", "cotree.txt", "--json")
        text = json.loads(out)["result"]["structure"]
        assert code == 0 and text.count("\nE ") == 4

    def test_prune_chain(self, workdir, capsys):
        code, out, _ = call(capsys, "prune", "chain.txt", "--oracle", "words", "--m", "2", "--json")
        result = json.loads(out)["result"]
        assert code == 0 and result["output_size"] < result["input_size"] == 12

    def test_theory_certificate(self, workdir, capsys):
        code, out, _ = call(capsys, "decide-theory", "exists x. a(x)", "--family", "words:ab", "--p", "3", "--json")
        cert = json.loads(out)["result"]["certificate"]
        assert code == 1 and "a" not in cert["word"]
        assert call(capsys, "decide-theory", "forall x. (a(x) | b(x))", "--family", "words:ab", "--p", "3")[:2] == (0, "accepted\n")

    def test_unary_theory_uses_default_witness(self, workdir, capsys):
        code, out, _ = call(capsys, "decide-theory", "exists x. P(x)", "--family", "unary:P", "--json")
        assert code == 1 and json.loads(out)["result"]["bound"] == 2

    def test_scheme_fixture_round_trips(self, workdir, capsys):
        call(capsys, "fixture", "scheme", "xi1", "--out", ".")
        (workdir / "order.str").write_text("vocab le/2\nuniverse 1 2 3\n" + "".join(f"le {a} {b}\n" for a in (1, 2, 3) for b in (1, 2, 3) if a <= b))
        from_file = call(capsys, "scheme-apply", "xi1.scheme", "order.str")
        builtin = call(capsys, "scheme-apply", "successor_closure", "order.str")
        assert from_file == builtin and from_file[0] == 0


SCHEMA_CASES = [
    ("eval", "p3.str", "f.fml"),
    ("rank", "f.fml"),
    ("equiv", "p1.str", "p9.str", "--m", "2"),
    ("type", "p3.str", "--m", "2", "--tuple", "0"),
    ("relativize", "f.fml", "--vars", "u,v"),
    ("ccq", "k3.str", "--tuple", "0,1"),
    ("crux", "p3.str", "f.fml", "--family", "graphs<=4", "--k", "2"),
    ("crux", "p3.str", "f.fml", "--family", "graphs<=4", "--set", "0"),
    ("psc-check", "f.fml", "--family", "paths:2<=5", "--k", "2"),
    ("pce-check", "f.fml", "--family", "graphs<=3", "--k", "1"),
    ("glt-translate", "exists x. P(x)", "--k", "1", "--p", "3"),
    ("hpt-translate", "f.fml", "--family", "digraphs", "--k", "0", "--p", "2"),
    ("scheme-apply", "complement", "f.fml"),
    ("ebsp-search", "p9.str", "--family", "paths<=10", "--family-size", "10", "--m", "2", "--tuple", "4"),
    ("ebsp-search", "p3.str", "--family", "graphs<=4", "--m", "1", "--tuple", "0,1", "--via-labels"),
    ("witness-profile", "--family", "unary:P,Q<=5", "--k", "1", "--m", "2", "--seed", "3"),
    ("fixture", "phi-k", "2"),
    ("fixture", "glt-counterexample", "1", "1", "--block", "0"),
    ("eval", "bad.str", "f.fml"),
    ("no-such-verb",),
]


@pytest.mark.parametrize("argv", SCHEMA_CASES, ids=lambda a: "-".join(a[:2]))
def test_json_reports_validate(workdir, capsys, argv):
    code, out, _ = call(capsys, *argv, "--json")
    report = json.loads(out)
    jsonschema.validate(report, SCHEMA)
    assert report["exit_code"] == code


@pytest.mark.parametrize("argv", SCHEMA_CASES[:18], ids=lambda a: "-".join(a[:2]))
def test_text_and_json_deterministic_in_process(workdir, argv):
    first, second = run(list(argv)), run(list(argv))
    assert first.render(True) == second.render(True)
    assert first.render(False) == second.render(False)


def test_deterministic_across_processes(workdir):
    argvs = [
        ["witness-profile", "--family", "graphs<=4", "--m", "2", "--seed", "7", "--json"],
        ["psc-check", "f.fml", "--family", "graphs<=4", "--k", "1", "--json"],
        ["hpt-translate", "f.fml", "--family", "digraphs", "--k", "1", "--p", "2"],
        ["type", "k3.str", "--m", "3"],
    ]
    for argv in argvs:
        outs = set()
        for seed in ("1", "2"):
            env = dict(os.environ, PYTHONHASHSEED=seed)
            proc = subprocess.run([sys.executable, "-m", "fmtk", *argv], capture_output=True, env=env, cwd=workdir)
            outs.add(proc.stdout)
        assert len(outs) == 1, argv
