import json

import pytest

from effcore import mutation
from effcore.conformance import (
    FLAGS, LAWS, gen_law_instance, law_agreement, run_conformance, run_corpus, safe_check, to_json,
)
from effcore.generate import GenConfig
from effcore.syntax import UNIT, CompType, Context
from effcore.typecheck import check_term


@pytest.fixture(scope="module")
def corpus_report():
    return run_corpus()


def test_empty_run():
    rep = run_conformance(GenConfig(), 0)
    assert rep["records"] == [] and rep["summary"]["programs"] == 0
    assert rep["summary"]["disagreements"] == 0


def test_reports_are_byte_identical():
    a = to_json(run_conformance(GenConfig(seed=5, max_depth=6), 25))
    b = to_json(run_conformance(GenConfig(seed=5, max_depth=6), 25))
    assert a == b
    assert json.loads(a)["summary"]["programs"] == 25


def test_value_reduction_by_parity():
    rep = run_conformance(GenConfig(seed=10), 4)
    assert [r["value_reduction"] for r in rep["records"]] == [True, False, True, False]


def test_corpus_agrees(corpus_report):
    s = corpus_report["summary"]
    assert s["programs"] == 24 and s["disagreements"] == 0
    ids = {r["id"] for r in corpus_report["records"]}
    assert {"p0", "p0+vr", "unhandled", "proj_stuck+vr"} <= ids
    stuck = next(r for r in corpus_report["records"] if r["id"] == "proj_stuck")
    assert stuck["outcome"] == "stuck-proj"


@pytest.mark.parametrize("name", mutation.KNOWN)
def test_mutants_are_noticed(name):
    with mutation.mutate(name):
        rep = run_corpus()
    assert rep["summary"]["disagreements"] >= 1
    assert not mutation.active(name)


def test_unknown_mutation():
    with pytest.raises(ValueError):
        with mutation.mutate("nothing"):
            pass


def test_crash_becomes_failing_record(programs):
    m, ty = programs["p0"]
    # checked at the wrong type: the record fails, nothing escapes
    r = safe_check("x", m, CompType(UNIT, ty.effect))
    assert not all(r["flags"].values()) and r["errors"]
    good = safe_check("p0", m, ty)
    assert set(good["flags"]) == set(FLAGS) and all(good["flags"].values())


@pytest.mark.parametrize("law", LAWS)
def test_law_instances(law):
    for seed in range(1, 21):
        ctx, lhs, rhs, ty = gen_law_instance(law, seed)
        check_term(ctx, lhs, ty, "eff+", "skip")
        check_term(ctx, rhs, ty, "eff+", "skip")
        res = law_agreement(ctx, lhs, rhs, ty, law != "case-handle")
        assert all(v for v in res.values() if v is not None), (law, seed, res)
