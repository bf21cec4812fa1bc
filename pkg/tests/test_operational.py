from hypothesis import given, settings, strategies as st

from effcore.generate import TICK, GenConfig, gen_program
from effcore.operational import (
    FuelExhausted, HandleFrame, LetFrame, NormalOp, NormalReturn, NormalStuckProj,
    Stepped, classify, decompose, eval_fuel, plug, step,
)
from effcore.prims import BOOL, const
from effcore.surface import parse_comp, print_term
from effcore.syntax import PURE, CompType, Context, Effect, OpCall, Return, Tuple, UNIT, instantiate
from effcore.typecheck import check_term

TICK_EFF = Effect(TICK)


def comp(src, env, ty):
    return check_term(Context(), parse_comp(src, env), ty)


def test_let_return(env):
    m = comp("let x = return <> in return x", env, CompType(UNIT, PURE))
    assert step(m, effect=PURE) == Stepped(Return(Tuple(())), "RetLet")


def test_handle_return(env):
    m = comp("handle return true with Tick { tick(_, k) -> k <> } to x. return not(x)", env,
             CompType(BOOL, PURE))
    out = step(m, effect=PURE)
    assert out.rule == "HandleRet"
    assert out.term == instantiate(m.body, [const("bool", 1)])


def test_handle_op_captures_context(env):
    src = ("handle (let z = tick(<>) in return z) with Tick { tick(x, k) -> k x } to r. return true")
    m = comp(src, env, CompType(BOOL, PURE))
    out = step(m, effect=PURE)
    assert out.rule == "HandleOp"
    want = comp("(fun (y : unit) -> handle (let z = return y in return z) with Tick { tick(x, k) -> k x }"
                " to r. return true) <>", env, CompType(BOOL, PURE))
    assert out.term == want


def test_eval_examples(env):
    out, trace = eval_fuel(Return(Tuple(())), 10)
    assert out == NormalReturn(Tuple(())) and len(trace) == 1
    out, trace = eval_fuel(OpCall("tick", Tuple(())), 10, effect=TICK_EFF)
    assert isinstance(out, NormalOp) and out.op == "tick" and len(out.context) == 0


def test_p0(programs):
    m, ty = programs["p0"]
    out, trace = eval_fuel(m, 64, effect=ty.effect)
    assert out == NormalReturn(const("bool", 1))
    rules = [step(a, effect=ty.effect).rule for a in trace[:-1]]
    # by hand: the clause runs k (inl <>): beta, let, case, return clause, let;
    # then the same for k (inr <>); finally or(true, false)
    assert rules == ["HandleOp",
                     "BetaLam", "RetLet", "BetaCase", "HandleRet", "RetLet",
                     "BetaLam", "RetLet", "BetaCase", "HandleRet", "RetLet",
                     "Value"]


def test_corpus_outcomes(programs):
    frozen = {
        "p0": "true", "p0_first": "false", "p0_theory": "true", "count3": "3", "tick_count": "3",
        "state": "true", "forward": "3", "exc": "false", "case_handle": "false",
    }
    for name, want in frozen.items():
        m, ty = programs[name]
        for vr in (False, True):
            out, _ = eval_fuel(m, 1000, vr, ty.effect)
            assert isinstance(out, NormalReturn) and print_term(out.value) == want, name


def test_projection_needs_value_reduction(programs):
    for name in ("proj_stuck", "proj_pair"):
        m, ty = programs[name]
        out, trace = eval_fuel(m, 100, False, ty.effect)
        assert isinstance(out, NormalStuckProj)
        assert classify(trace[-1]) == "stuck-proj"
        out, trace = eval_fuel(m, 100, True, ty.effect)
        assert isinstance(out, NormalReturn)


def test_unhandled_op_context_has_no_handler(programs):
    m, ty = programs["unhandled"]
    out, _ = eval_fuel(m, 100, effect=ty.effect)
    assert isinstance(out, NormalOp) and out.op == "tick"
    assert not any(isinstance(f, HandleFrame) for f in out.context.frames)


def test_fuel_exhausted(programs):
    m, ty = programs["count3"]
    out, trace = eval_fuel(m, 3, effect=ty.effect)
    assert isinstance(out, FuelExhausted) and len(trace) == 4


def test_decompose_examples(env):
    m = parse_comp("let x = tick(<>) in return x", env)
    ctx, r = decompose(m)
    assert r == OpCall("tick", Tuple(())) and isinstance(ctx.frames[0], LetFrame)
    m = parse_comp("handle tick(<>) with Tick { tick(_, k) -> k <> } to x. return x", env)
    ctx, r = decompose(m)
    assert r == OpCall("tick", Tuple(())) and isinstance(ctx.frames[0], HandleFrame)


def test_plug_decompose_round_trip():
    for seed in range(1, 1001):
        _, m = gen_program(GenConfig(seed=seed))
        assert plug(*decompose(m)) == m


SHAPES = {NormalReturn: "return", NormalOp: "op", NormalStuckProj: "stuck-proj"}


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 10**6), st.booleans())
def test_progress_preservation_determinism(seed, vr):
    ty, m = gen_program(GenConfig(seed=seed, max_depth=6))
    out, trace = eval_fuel(m, 5000, vr, ty.effect)
    for a in trace:
        assert check_term(Context(), a, ty, "eff+", "skip") == a
    for a, b in zip(trace, trace[1:]):
        assert classify(a, vr) is None
        assert step(a, vr, ty.effect) == step(a, vr, ty.effect)
        assert step(a, vr, ty.effect).term == b
    if not isinstance(out, FuelExhausted):
        assert classify(trace[-1], vr) == SHAPES[type(out)]
    if vr:
        assert not isinstance(out, NormalStuckProj)
