import pytest
from hypothesis import given, settings, strategies as st

from effcore.conformance import corpus_source
from effcore.generate import CH, EXC, STATE, TICK, GenConfig, gen_program
from effcore.surface import (
    ParseError, TheoryDecl, parse, parse_comp, parse_type, print_file, print_term,
)
from effcore.prims import BOOL, INT
from effcore.syntax import (
    PURE, UNIT, Arrow, Case, CompType, Handle, Let, OpCall, Prod, Return, Sum, Tuple,
    Var, alpha_eq,
)
from effcore.typecheck import TypeCheckError

SIGS = {s.name: s for s in (CH, TICK, STATE, EXC)}


def test_unit_literal():
    assert parse_comp("return <>") == Return(Tuple(()))
    assert print_term(Tuple(())) == "<>"


def test_handle_op_shape(env):
    m = parse_comp("handle choice(<>) with {choice(x, k) -> k x} to r. return r", env)
    assert isinstance(m, Handle) and isinstance(m.subject, OpCall)
    assert m.effect.sig == CH
    (cl,) = m.handler.clauses
    assert (cl.op, cl.x_name, cl.k_name) == ("choice", "x", "k")
    assert m.body == Return(Var(0))


def test_or_sugar_shape(env):
    m = parse_comp("let x = choice(<>) in case x of inl _ -> return true ; inr _ -> return false", env)
    assert isinstance(m, Let) and isinstance(m.bound, OpCall)
    assert isinstance(m.body, Case) and m.body.scrutinee == Var(0) and len(m.body.branches) == 2


def test_theory_prints_axioms_in_order(corpus):
    (th,) = [d for d in corpus.decls if isinstance(d, TheoryDecl)]
    text = print_file(corpus)
    pos = [text.index(f"axiom {a}") for a in ("idem", "comm", "assoc")]
    assert pos == sorted(pos)
    assert [a.name for a in th.theory.axioms] == ["idem", "comm", "assoc"]


def test_corpus_round_trip(corpus):
    again = parse(print_file(corpus))
    assert again == corpus
    assert print_file(again) == print_file(corpus)


def test_generated_terms_round_trip():
    for seed in range(1, 1001):
        _, m = gen_program(GenConfig(seed=seed))
        back = parse_comp(print_term(m), SIGS)
        assert alpha_eq(back, m), seed


def test_nodes_carry_spans(env):
    m = parse_comp("let x = choice(<>) in return x", env)
    assert m.span is not None and m.bound.span is not None and m.body.span is not None
    assert m.body.span.start == len("let x = choice(<>) in ")


@pytest.mark.parametrize("src, at", [
    ("def p : bool ! {} = return (", None),
    ("def p : bool ! {} = let x = return true return x", "return x"),
    ("sig A = { a : unit ~> unit, a : unit ~> unit }", "a : unit ~> unit }"),
    ("def p : bool ! {} = handle return true with Nope { } to y. return y", "Nope"),
])
def test_parse_error_spans(src, at):
    with pytest.raises(ParseError) as err:
        parse(src)
    # None: the error sits at end of input
    assert err.value.span.start == (len(src) if at is None else src.index(at))


def test_duplicate_clause_rejected(env):
    with pytest.raises(ParseError):
        parse_comp("handle return <> with Tick { tick(_, k) -> k <> ; tick(_, k) -> k <> } to r. return r", env)


def test_types_parse():
    assert parse_type("unit + unit") == Sum((UNIT, UNIT))
    assert parse_type("bool -> bool ! {}") == Arrow(BOOL, CompType(BOOL, PURE))
    assert parse_type("int4 * bool") == Prod((INT, BOOL))


ALPHABET = ["def", "p", ":", "bool", "!", "{", "}", "=", "return", "true", "<", ">", ",", "(", ")",
            "let", "x", "in", "handle", "with", "to", ".", "case", "of", "inl", "inr", "_", "->",
            ";", "fun", "pi", "1", "sig", "~>", "unit", "+", "*", "theory", "axiom", "~", "@", "\n"]


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(ALPHABET), max_size=30))
def test_parser_never_panics(tokens):
    src = " ".join(tokens)
    try:
        parse(src)
    except ParseError as e:
        assert e.span is not None
        assert 0 <= e.span.start <= len(src)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_corrupted_corpus_reports_span(data):
    src = corpus_source()
    i = data.draw(st.integers(0, len(src) - 1))
    junk = data.draw(st.sampled_from(["", "(", "}", "let", "@", "->"]))
    bad = src[:i] + junk + src[i + 1:]
    try:
        parse(bad)
    except ParseError as e:
        assert 0 <= e.span.start <= len(bad)
    except TypeCheckError as e:
        # theory axioms are checked as they are declared
        assert e.span is None or 0 <= e.span.start <= len(bad)
