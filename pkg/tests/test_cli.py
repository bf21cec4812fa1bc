import json

import pytest

from effcore.cli import main
from effcore.conformance import corpus_source


@pytest.fixture
def corpus_file(tmp_path):
    p = tmp_path / "corpus.effh"
    p.write_text(corpus_source())
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse(capsys, corpus_file):
    code, out, _ = run(capsys, "parse", corpus_file)
    assert code == 0 and "def p0" in out
    code, out, _ = run(capsys, "parse", corpus_file, "--emit", "json")
    assert code == 0 and json.loads(out)


def test_typecheck(capsys, corpus_file):
    code, out, _ = run(capsys, "typecheck", corpus_file)
    assert code == 0 and "p0: ok" in out


def test_run_with_trace(capsys, corpus_file):
    code, out, _ = run(capsys, "run", corpus_file, "--def", "p0", "--trace")
    assert code == 0
    assert "[HandleOp]" in out and out.rstrip().endswith("NormalReturn after 12 steps: return true")
    code, out, _ = run(capsys, "run", corpus_file, "--def", "count3", "--fuel", "2")
    assert code == 1


def test_denote(capsys, corpus_file):
    code, out, _ = run(capsys, "denote", corpus_file, "--def", "unhandled")
    assert code == 0 and out.strip() == "tick(<>) { <> -> false }"


def test_cps(capsys, corpus_file):
    code, out, _ = run(capsys, "cps", corpus_file, "--def", "p0", "--check-typed", "--normalize")
    assert code == 0 and "typed at" in out and ": yes" in out


def test_prove_eq(capsys, corpus_file):
    code, out, _ = run(capsys, "prove-eq", corpus_file, "--goal", "handle_op", "--trace")
    assert code == 0 and out.startswith("handle_op: Proved")
    code, out, _ = run(capsys, "prove-eq", corpus_file, "--goal", "comm_instance", "--emit", "json")
    assert code == 0 and json.loads(out)["verdict"] == "Proved"


def test_prove_eq_unknown(capsys, tmp_path):
    p = tmp_path / "g.effh"
    p.write_text("goal differ : bool ! {} = return true == return false")
    code, out, _ = run(capsys, "prove-eq", str(p), "--goal", "differ")
    assert code == 1 and out.startswith("differ: Unknown")


def test_check_respects(capsys, corpus_file):
    code, out, _ = run(capsys, "check-respects", corpus_file, "--def", "p0", "--theory", "ND")
    assert code == 0 and "overall: Holds" in out
    code, out, _ = run(capsys, "check-respects", corpus_file, "--def", "p0_first", "--theory", "ND")
    assert code == 1 and "counterexample" in out


def test_conformance(capsys, tmp_path):
    out_file = tmp_path / "rep.json"
    code, out, _ = run(capsys, "conformance", "-n", "5", "--out", str(out_file))
    assert code == 0 and "disagreements=0" in out
    assert json.loads(out_file.read_text())["summary"]["programs"] == 5
    code, out, _ = run(capsys, "conformance", "--corpus", "--mutate", "cps-op")
    assert code == 1


def test_errors(capsys, tmp_path, corpus_file):
    code, _, err = run(capsys, "parse", str(tmp_path / "missing.effh"))
    assert code == 2 and "cannot read" in err
    bad = tmp_path / "bad.effh"
    bad.write_text("def x : bool ! {} = return")
    code, _, err = run(capsys, "parse", str(bad))
    assert code == 1 and err.startswith(str(bad) + ":")
    code, _, err = run(capsys, "run", corpus_file, "--def", "nope")
    assert code == 2
    code, _, err = run(capsys, "run", corpus_file, "--def", "eta")
    assert code == 2
    ill = tmp_path / "ill.effh"
    ill.write_text("def x : bool ! {} = return <>")
    code, out, _ = run(capsys, "typecheck", str(ill))
    assert code == 1 and "x: Mismatch" in out
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2
