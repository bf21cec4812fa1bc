"""Small-step evaluation of closed computations.

A computation is split into an evaluation context (a stack of let and handle
frames) and the redex in its hole.  The handler rule captures the frames
between an operation and the nearest enclosing handle; those frames contain
no handle by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import prims
from .syntax import (
    App, Case, Comp, Effect, Handle, Handler, Inj, Lam, Let, OpCall, PrimApp,
    Proj, Return, Tuple, Value, Var, instantiate, shift,
)

DEFAULT_FUEL = 100_000


class IllFormed(Exception):
    """Raised on input the typechecker should have rejected."""


@dataclass(frozen=True, slots=True)
class LetFrame:
    body: Comp
    name: str = "x"

    def plug(self, m):
        return Let(m, self.body, self.name)

    def shifted(self, d):
        return LetFrame(shift(self.body, d, 1), self.name)


@dataclass(frozen=True, slots=True)
class HandleFrame:
    handler: Handler
    effect: Effect
    body: Comp
    name: str = "x"

    def plug(self, m):
        return Handle(m, self.handler, self.body, self.effect, self.name)

    def shifted(self, d):
        return HandleFrame(shift(self.handler, d), self.effect, shift(self.body, d, 1), self.name)


@dataclass(frozen=True, slots=True)
class EvalContext:
    frames: tuple = ()  # outermost first

    def plug(self, m: Comp) -> Comp:
        for fr in reversed(self.frames):
            m = fr.plug(m)
        return m

    def has_handle(self):
        return any(isinstance(f, HandleFrame) for f in self.frames)

    def __len__(self):
        return len(self.frames)


# ---------------------------------------------------------------- outcomes

@dataclass(frozen=True)
class Stepped:
    term: Comp
    rule: str


@dataclass(frozen=True)
class NormalReturn:
    value: Value


@dataclass(frozen=True)
class NormalOp:
    context: EvalContext
    op: str
    arg: Value


@dataclass(frozen=True)
class NormalStuckProj:
    context: EvalContext
    redex: Comp


@dataclass(frozen=True)
class FuelExhausted:
    term: Comp


def decompose(m: Comp):
    frames = []
    while True:
        if isinstance(m, Let):
            frames.append(LetFrame(m.body, m.name))
            m = m.bound
        elif isinstance(m, Handle):
            frames.append(HandleFrame(m.handler, m.effect, m.body, m.name))
            m = m.subject
        else:
            return EvalContext(tuple(frames)), m


def plug(ctx: EvalContext, m: Comp) -> Comp:
    return ctx.plug(m)


# ---------------------------------------------------------------- value reduction

def value_head_step(v, value_reduction):
    """('step', v') | ('normal', v) | ('stuck', v) for the head of a closed value."""
    if isinstance(v, Proj):
        w = v.value
        if isinstance(w, Tuple):
            if value_reduction:
                return "step", w.items[v.index - 1]
            return "stuck", v
        kind, w2 = value_head_step(w, value_reduction)
        if kind == "step":
            return "step", Proj(v.index, w2)
        return "stuck", v
    if isinstance(v, PrimApp) and v.args:
        for i, a in enumerate(v.args):
            if prims.is_const(a):
                continue
            kind, a2 = value_head_step(a, value_reduction)
            if kind == "step":
                return "step", PrimApp(v.name, v.args[:i] + (a2,) + v.args[i + 1:])
            return "stuck", v
        return "step", prims.delta(v)
    return "normal", v


def value_deep_step(v, value_reduction) -> Optional[Value]:
    """Reduce the leftmost reducible position of a returned value, if any."""
    kind, v2 = value_head_step(v, value_reduction)
    if kind == "step":
        return v2
    if kind == "stuck":
        return None
    if isinstance(v, Tuple):
        for i, x in enumerate(v.items):
            x2 = value_deep_step(x, value_reduction)
            if x2 is not None:
                return Tuple(v.items[:i] + (x2,) + v.items[i + 1:])
    elif isinstance(v, Inj):
        x2 = value_deep_step(v.value, value_reduction)
        if x2 is not None:
            return Inj(v.index, v.arity, x2, v.type)
    return None


# ---------------------------------------------------------------- step

def step(m: Comp, value_reduction: bool = False, effect: Optional[Effect] = None):
    """One step of the context-capturing semantics.

    `effect` is the effect of the whole program; it is needed to annotate
    the continuation built by the handler rule when the handle sits at top level.
    """
    ctx, r = decompose(m)
    frames = ctx.frames
    if isinstance(r, Return):
        if not frames:
            v2 = value_deep_step(r.value, value_reduction)
            if v2 is not None:
                return Stepped(Return(v2), "Value")
            return NormalReturn(r.value)
        fr = frames[-1]
        rest = EvalContext(frames[:-1])
        rule = "RetLet" if isinstance(fr, LetFrame) else "HandleRet"
        return Stepped(rest.plug(instantiate(fr.body, [r.value])), rule)
    if isinstance(r, App):
        if isinstance(r.fn, Lam):
            return Stepped(ctx.plug(instantiate(r.fn.body, [r.arg])), "BetaLam")
        kind, f2 = value_head_step(r.fn, value_reduction)
        if kind == "step":
            return Stepped(ctx.plug(App(f2, r.arg)), "Value")
        if kind == "stuck":
            return NormalStuckProj(ctx, r)
        raise IllFormed(f"application of a non-function {r.fn!r}")
    if isinstance(r, Case):
        v = r.scrutinee
        if isinstance(v, Inj):
            return Stepped(ctx.plug(instantiate(r.branches[v.index - 1], [v.value])), "BetaCase")
        kind, v2 = value_head_step(v, value_reduction)
        if kind == "step":
            return Stepped(ctx.plug(Case(v2, r.branches, r.names)), "Value")
        if kind == "stuck":
            return NormalStuckProj(ctx, r)
        raise IllFormed(f"case on a non-injection {v!r}")
    if isinstance(r, OpCall):
        j = None
        for i in range(len(frames) - 1, -1, -1):
            if isinstance(frames[i], HandleFrame):
                j = i
                break
        if j is None:
            return NormalOp(ctx, r.op, r.arg)
        fr = frames[j]
        cl = fr.handler.clause(r.op)
        ot = fr.effect.sig.lookup(r.op)
        if cl is None or ot is None:
            raise IllFormed(f"no clause for {r.op}")
        out = effect
        for i in range(j - 1, -1, -1):
            if isinstance(frames[i], HandleFrame):
                out = frames[i].effect
                break
        if out is None:
            raise IllFormed("the program's effect is needed to build the continuation")
        captured = EvalContext(tuple(f.shifted(1) for f in frames[j:]))
        kont = Lam(ot.result, out, captured.plug(Return(Var(0, "y"))), "y")
        result = instantiate(cl.body, [kont, r.arg])
        return Stepped(EvalContext(frames[:j]).plug(result), "HandleOp")
    raise IllFormed(f"cannot step {r!r}")


def eval_fuel(m: Comp, fuel: int = DEFAULT_FUEL, value_reduction: bool = False,
              effect: Optional[Effect] = None):
    """Iterate step; return (outcome, trace) where trace starts with m."""
    trace = [m]
    for _ in range(fuel):
        out = step(m, value_reduction, effect)
        if not isinstance(out, Stepped):
            return out, trace
        m = out.term
        trace.append(m)
    out = step(m, value_reduction, effect)
    if isinstance(out, Stepped):
        return FuelExhausted(m), trace
    return out, trace


def classify(m: Comp, value_reduction: bool = False) -> Optional[str]:
    """Which normal-form shape m has: 'return', 'op', 'stuck-proj', or None.

    Written independently of step so the harness can cross-check it.
    """
    if isinstance(m, Return):
        return None if _reducible(m.value, value_reduction) else "return"
    ctx, r = decompose(m)
    if isinstance(r, OpCall):
        return None if ctx.has_handle() else "op"
    if isinstance(r, App) and not isinstance(r.fn, Lam):
        return None if _head_reducible(r.fn, value_reduction) else "stuck-proj"
    if isinstance(r, Case) and not isinstance(r.scrutinee, Inj):
        return None if _head_reducible(r.scrutinee, value_reduction) else "stuck-proj"
    return None


def _head_reducible(v, value_reduction) -> bool:
    # closed, well typed: projections reduce only under value reduction,
    # primitives reduce once their arguments are constants
    if isinstance(v, Proj):
        return value_reduction
    if isinstance(v, PrimApp) and v.args:
        for a in v.args:
            if not prims.is_const(a):
                return _head_reducible(a, value_reduction)
        return True
    return False


def _reducible(v, value_reduction) -> bool:
    if isinstance(v, (Proj, PrimApp)) and (not isinstance(v, PrimApp) or v.args):
        return _head_reducible(v, value_reduction)
    if isinstance(v, Tuple):
        return any(_reducible(x, value_reduction) for x in v.items)
    if isinstance(v, Inj):
        return _reducible(v.value, value_reduction)
    return False
