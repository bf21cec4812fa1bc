import pytest
from hypothesis import given, settings, strategies as st

from effcore.generate import CH, EXC, STATE, TICK
from effcore.prims import BOOL
from effcore.surface import parse_comp, parse_value, print_term
from effcore.syntax import (
    UNIT, App, Clause, Context, Effect, Handle, Handler, Lam, OpCall, OpType,
    Return, Signature, Tuple, Var, alpha_eq, free_vars, instantiate, shift,
    subst_value,
)

from helpers import CTX, closing_subst, term_in, value_in

seeds = st.integers(0, 10**6)
SIGS = {s.name: s for s in (CH, TICK, STATE, EXC)}


def test_subst_replaces_variable():
    assert subst_value(Return(Var(0, "x")), {0: Tuple(())}) == Return(Tuple(()))


def test_subst_avoids_capture():
    # fun y -> return x, with x := y, where y is free outside
    lam = Lam(UNIT, None, Return(Var(1, "x")), "y")
    out = subst_value(lam, {0: Var(0, "y")})
    assert out == Lam(UNIT, None, Return(Var(1)), "y")
    assert out != Lam(UNIT, None, Return(Var(0)), "y")
    # printing renames the binder instead of capturing
    assert print_term(out, Context.of(("y", UNIT))) == "fun (y1 : unit) -> return y"


def test_handle_op_clause_substitution(env):
    ctx = Context.of(("v", UNIT))
    body = parse_comp("let a = k (inl <>) in return a", env, Context.of(("x", UNIT), ("k", UNIT)))
    cont = Lam(CH.lookup("choice").result, None, parse_comp("return true", env), "y")
    out = instantiate(body, [cont, Var(0, "v")])
    want = parse_comp("let a = (fun (y : unit + unit) -> return true) (inl <>) in return a", env, ctx)
    assert out == want


def test_alpha_eq_examples():
    assert alpha_eq(Lam(UNIT, None, Return(Var(0)), "x"), Lam(UNIT, None, Return(Var(0)), "y"))
    assert not alpha_eq(Lam(UNIT, None, Return(Var(0)), "x"), Lam(UNIT, None, Return(Tuple(())), "x"))
    eff = Effect(TICK)

    def h(x, k, r):
        cl = Clause("tick", App(Var(0, k), Var(1, x)), x, k)
        return Handle(OpCall("tick", Tuple(())), Handler((cl,)), Return(Var(0, r)), eff, r)

    assert alpha_eq(h("x", "k", "r"), h("p", "q", "s"))


def test_free_vars_examples(env):
    assert free_vars(Return(Var(0, "x"))) == {0}
    assert free_vars(Lam(UNIT, None, Return(Var(0)), "x")) == set()
    # a clause body  k y  under x, k: y sits two binders further out
    cl = Clause("tick", App(Var(0, "k"), Var(2, "y")))
    assert free_vars(Handler((cl,))) == {0}


def test_duplicate_handler_clause_rejected():
    with pytest.raises(ValueError):
        Handler((Clause("tick", Return(Tuple(()))), Clause("tick", Return(Tuple(())))))


@settings(max_examples=200, deadline=None)
@given(seeds, seeds, seeds)
def test_substitution_composes(ts, s1, s2):
    _, t = term_in(ts)
    # sigma2 : CTX -> CTX, sigma1 : CTX -> empty
    sigma2 = {i: value_in(s2 + i, CTX.lookup(i)) for i in range(len(CTX)) if (s2 >> i) & 1}
    sigma1 = closing_subst(s1)
    composed = {i: subst_value(sigma2[i], sigma1) if i in sigma2 else sigma1[i] for i in range(len(CTX))}
    assert subst_value(subst_value(t, sigma2), sigma1) == subst_value(t, composed)


@settings(max_examples=200, deadline=None)
@given(seeds, seeds)
def test_weaken_then_instantiate_is_identity(ts, vs):
    _, t = term_in(ts)
    v = value_in(vs, BOOL)
    assert instantiate(shift(t, 1), [v]) == t


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_disjoint_substitution_is_identity(ts):
    _, t = term_in(ts)
    fv = free_vars(t)
    sigma = {i: Var(i + 100) for i in range(len(CTX)) if i not in fv}
    assert subst_value(t, sigma) == t


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_untouched_terms_stay_shared(ts):
    _, t = term_in(ts)
    assert shift(t, 3, cutoff=len(CTX)) is t


@settings(max_examples=100, deadline=None)
@given(seeds, seeds)
def test_alpha_eq_is_stable_under_substitution(ts, s1):
    _, t = term_in(ts)
    sigma = closing_subst(s1)
    # the printed form renames binders; reading it back gives the same term
    u = parse_comp(print_term(t, CTX), SIGS, CTX)
    assert alpha_eq(subst_value(t, sigma), subst_value(u, sigma))


@given(st.permutations([("a", OpType(UNIT, UNIT)), ("b", OpType(BOOL, UNIT)), ("c", OpType(UNIT, BOOL))]))
def test_signature_order_does_not_matter(ops):
    assert Signature(tuple(ops)) == Signature.of({"c": OpType(UNIT, BOOL), "a": OpType(UNIT, UNIT),
                                                  "b": OpType(BOOL, UNIT)})


def test_value_parse_scopes(env):
    v = parse_value("fun (y : unit) -> return x", env, Context.of(("x", UNIT)))
    assert free_vars(v) == {0}
