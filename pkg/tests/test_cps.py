import pytest
from hypothesis import given, settings, strategies as st

from effcore import cps
from effcore.conformance import gen_law_instance
from effcore.cps import (
    Forall, TArrow, TProd, TargetTypeError, TmApp, TmLam, TmProj, TmTuple, TmVar, TyApp, TyLam, TyVar,
    cps_context, cps_term, cps_type, print_term, print_type, target_eq, target_normalize,
    target_typecheck,
)
from effcore.deep import deep
from effcore.generate import TICK, GenConfig, gen_program
from effcore.operational import eval_fuel
from effcore.surface import parse_comp
from effcore.syntax import PURE, UNIT, Arrow, CompType, Context, Effect, OpCall, Return, Tuple

ONE = TProd(())
TICK_EFF = Effect(TICK)


def test_types():
    assert cps_type(UNIT) == ONE
    assert cps_type(CompType(UNIT, PURE)) == Forall(TArrow(TArrow(ONE, TyVar(0)), TArrow(ONE, TyVar(0))))
    tick = print_type(cps_type(CompType(UNIT, TICK_EFF)))
    assert tick == "forall X0. (1 -> X0) -> (1 * (1 -> X0) -> X0) -> X0"


def test_return_and_op():
    ret = cps_term(Context(), Return(Tuple(())), PURE)
    assert ret == TyLam(TmLam(TArrow(ONE, TyVar(0)), TmLam(ONE, TmApp(TmVar(1), TmTuple(())))))
    op = cps_term(Context(), OpCall("tick", Tuple(())), TICK_EFF)
    # a one-operation handler record is the clause itself
    assert print_term(op) == r"/\X0. \x0 : 1 -> X0. \x1 : 1 * (1 -> X0) -> X0. x1 <<>, x0>"


def test_handle_shape(env):
    m = parse_comp("handle tick(<>) with Tick { tick(_, k) -> k <> } to x. return x", env)
    t = cps_term(Context(), m, PURE)
    # [[M]] [[[C]]] (fun x -> [[N]]) [[H]]
    assert isinstance(t, TmApp) and isinstance(t.fn, TmApp) and isinstance(t.fn.fn, TyApp)
    assert t.fn.fn.term == cps_term(Context(), m.subject, TICK_EFF)
    assert t.fn.fn.type == cps_type(CompType(UNIT, PURE))
    assert target_typecheck(0, (), t) == cps_type(CompType(UNIT, PURE))


def test_target_typecheck_examples():
    ident = TyLam(TmLam(TyVar(0), TmVar(0)))
    assert target_typecheck(0, (), ident) == Forall(TArrow(TyVar(0), TyVar(0)))
    with pytest.raises(TargetTypeError):
        target_typecheck(0, (), TmLam(ONE, TmApp(TmVar(0), TmVar(0))))
    with pytest.raises(TargetTypeError):
        target_typecheck(0, (), TmVar(0))


def test_target_normalize_examples():
    assert target_normalize(TmApp(TmLam(ONE, TmVar(0)), TmTuple(()))) == TmTuple(())
    k = TyLam(TmLam(TArrow(ONE, TyVar(0)), TmApp(TmVar(0), TmTuple(()))))
    assert target_normalize(TmApp(TyApp(k, ONE), TmLam(ONE, TmVar(0)))) == TmTuple(())


def test_target_eq_examples():
    f_ty = TArrow(ONE, ONE)
    ident = TyLam(TmLam(TyVar(0), TmVar(0)))
    assert target_eq(ident, ident)
    assert target_eq(TmLam(ONE, TmApp(TmVar(1), TmVar(0))), TmVar(0), (f_ty,))
    # every unit value is <> up to eta
    assert target_eq(TmVar(0), TmTuple(()), (ONE,))


def test_p0_normal_form(programs):
    m, ty = programs["p0"]
    nf = target_normalize(cps_term(Context(), m, PURE))
    assert print_term(nf) == (r"/\X0. \x0 : (forall X1. X1 -> X1 -> X1) -> X0. \x1 : 1. "
                              r"x0 (/\X1. \x2 : X1. \x3 : X1. x3)")


def test_corpus_is_typed(programs):
    for name, (m, ty) in programs.items():
        assert target_typecheck(0, (), cps_term(Context(), m, ty.effect)) == cps_type(ty), name


def test_context_translation():
    ctx = Context.of(("a", UNIT), ("f", Arrow(UNIT, CompType(UNIT, PURE))))
    # index 0 first
    assert cps_context(ctx) == (TArrow(ONE, cps_type(CompType(UNIT, PURE))), ONE)


@pytest.mark.parametrize("law", ["handle-ret", "handle-let", "handle-op"])
def test_handler_laws(law):
    for seed in range(1, 31):
        ctx, lhs, rhs, ty = gen_law_instance(law, seed)
        a = cps_term(ctx, lhs, ty.effect, ty.ret)
        b = cps_term(ctx, rhs, ty.effect, ty.ret)
        assert deep(target_eq, a, b, cps_context(ctx)), (law, seed)


def images_agree(seed, vr):
    ty, m = gen_program(GenConfig(seed=seed, max_depth=6))
    _, trace = eval_fuel(m, 2000, vr, ty.effect)
    want = cps_type(ty)
    first = None
    for t in trace:
        img = cps_term(Context(), t, ty.effect, ty.ret)
        assert target_typecheck(0, (), img) == want
        nf = target_normalize(img, (), want)
        first = first or nf
        assert nf == first


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10**6), st.booleans())
def test_steps_preserve_cps_images(seed, vr):
    deep(images_agree, seed, vr)


def test_json_forms():
    j = cps.type_to_json(cps_type(CompType(UNIT, PURE)))
    assert j == {"forall": {"arrow": [{"arrow": [{"prod": []}, {"tyvar": 0}]},
                                      {"arrow": [{"prod": []}, {"tyvar": 0}]}]}}
    assert cps.term_to_json(TmProj(1, TmVar(0))) == {"proj": 1, "term": {"var": 0}}
