"""Bidirectional typechecking and elaboration.

Checking a term also elaborates it: injections get their full sum type and
lambdas without an effect annotation get the one demanded by the context.
Everything downstream of the checker works on elaborated terms, whose types
can be synthesised without any expected type.

Computations are always checked against a known effect (the ambient
signature); only their return type is synthesised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import prims
from .syntax import (
    EMPTY_SIG, PURE, App, Arrow, Axiom, Base, Case, Clause, Comp, CompType,
    Context, Effect, EffectTheory, Handle, Handler, Inj, Lam, Let, OpCall,
    PrimApp, Prod, Proj, Return, Signature, Sum, Tuple, Value, ValueType, Var,
    instantiate, is_ground, shift,
)

MODES = ("eff", "eff+", "effE")

KINDS = (
    "UnboundVar", "OpNotInSignature", "SignatureMismatch", "HandlerClauseMissing",
    "HandlerClauseExtra", "NotGround", "RespectFailure", "Mismatch",
)


class TypeCheckError(Exception):
    def __init__(self, kind, message, span=None, expected=None, actual=None,
                 axiom=None, witness=None):
        assert kind in KINDS, kind
        self.kind = kind
        self.message = message
        self.span = span
        self.expected = expected
        self.actual = actual
        self.axiom = axiom
        self.witness = witness
        where = f"{span.line}:{span.column}: " if span is not None else ""
        super().__init__(f"{where}{kind}: {message}")

    def to_json(self):
        d = {"kind": self.kind, "message": self.message}
        if self.span is not None:
            d["span"] = {"start": self.span.start, "end": self.span.end,
                         "line": self.span.line, "column": self.span.column}
        if self.axiom is not None:
            d["axiom"] = self.axiom
        if self.witness is not None:
            d["witness"] = self.witness
        return d


def _show(t):
    from .surface import print_type
    return print_type(t)


@dataclass
class Checker:
    mode: str = "eff+"
    respects: str = "semantic"  # semantic | syntactic | skip
    depth: int = 0
    max_depth: int = 4
    warnings: list = field(default_factory=list)
    _wf: set = field(default_factory=set)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")

    def err(self, kind, msg, node=None, **kw):
        return TypeCheckError(kind, msg, getattr(node, "span", None), **kw)

    # ---------------------------------------------------------- types

    def wf_type(self, t, node=None):
        if t in self._wf:
            return
        if isinstance(t, Base):
            if self.mode == "eff":
                raise self.err("Mismatch", f"base type {t.name} needs mode eff+", node)
            if t.name not in prims.BASES:
                raise self.err("Mismatch", f"unknown base type {t.name}", node)
        elif isinstance(t, Prod):
            for x in t.items:
                self.wf_type(x, node)
        elif isinstance(t, Sum):
            if self.mode == "eff":
                raise self.err("Mismatch", "sum types need mode eff+", node)
            for x in t.items:
                self.wf_type(x, node)
        elif isinstance(t, Arrow):
            self.wf_type(t.arg, node)
            self.wf_comp_type(t.result, node)
        else:
            raise self.err("Mismatch", f"not a value type: {t!r}", node)
        self._wf.add(t)

    def wf_comp_type(self, c, node=None):
        self.wf_type(c.ret, node)
        self.wf_effect(c.effect, node)

    def wf_effect(self, e, node=None):
        if e.axioms and self.mode != "effE":
            raise self.err("Mismatch", f"effect theory {e.theory.name} needs mode effE", node)
        if e.theory is not None and e.theory.sig != e.sig:
            raise self.err("SignatureMismatch", "theory signature differs from effect signature", node)
        for op, ot in e.sig.ops:
            if self.mode == "effE" and not (is_ground(ot.arg) and is_ground(ot.result)):
                raise self.err("NotGround", f"operation {op} has a non-ground type in mode effE", node)
            self.wf_type(ot.arg, node)
            self.wf_type(ot.result, node)

    # ---------------------------------------------------------- values

    def check_value(self, ctx, v, expected: ValueType) -> Value:
        if isinstance(v, Lam) and isinstance(expected, Arrow):
            if v.arg != expected.arg:
                raise self.err("Mismatch", f"lambda argument is {_show(v.arg)}, expected {_show(expected.arg)}",
                               v, expected=expected.arg, actual=v.arg)
            eff = v.effect if v.effect is not None else expected.result.effect
            if eff != expected.result.effect:
                raise self.err("SignatureMismatch", "lambda effect differs from expected effect", v,
                               expected=expected.result.effect, actual=eff)
            self.wf_type(v.arg, v)
            self.wf_effect(eff, v)
            body, _ = self.comp(ctx.extend(v.name, v.arg), v.body, eff, expected.result.ret)
            return Lam(v.arg, eff, body, v.name, v.span)
        if isinstance(v, Tuple) and isinstance(expected, Prod):
            if len(v.items) != len(expected.items):
                raise self.err("Mismatch", f"tuple of {len(v.items)} components, expected {len(expected.items)}",
                               v, expected=expected)
            return Tuple(tuple(self.check_value(ctx, x, t) for x, t in zip(v.items, expected.items)), v.span)
        if isinstance(v, Inj) and isinstance(expected, Sum):
            if v.type is not None and v.type != expected:
                raise self.err("Mismatch", f"injection into {_show(v.type)}, expected {_show(expected)}",
                               v, expected=expected, actual=v.type)
            if v.arity != len(expected.items) or not 1 <= v.index <= v.arity:
                raise self.err("Mismatch", f"injection in#{v.index}/{v.arity} does not fit {_show(expected)}",
                               v, expected=expected)
            self.wf_type(expected, v)
            inner = self.check_value(ctx, v.value, expected.items[v.index - 1])
            return Inj(v.index, v.arity, inner, expected, v.span)
        v2, t = self.synth_value(ctx, v)
        if t != expected:
            raise self.err("Mismatch", f"expected {_show(expected)}, found {_show(t)}", v,
                           expected=expected, actual=t)
        return v2

    def synth_value(self, ctx, v):
        if isinstance(v, Var):
            t = ctx.lookup(v.index)
            if t is None:
                raise self.err("UnboundVar", f"unbound variable {v.name} (index {v.index})", v)
            return v, t
        if isinstance(v, Lam):
            eff = v.effect if v.effect is not None else PURE
            self.wf_type(v.arg, v)
            self.wf_effect(eff, v)
            body, ret = self.comp(ctx.extend(v.name, v.arg), v.body, eff, None)
            return Lam(v.arg, eff, body, v.name, v.span), Arrow(v.arg, CompType(ret, eff))
        if isinstance(v, Tuple):
            pairs = [self.synth_value(ctx, x) for x in v.items]
            return Tuple(tuple(p[0] for p in pairs), v.span), Prod(tuple(p[1] for p in pairs))
        if isinstance(v, Proj):
            inner, t = self.synth_value(ctx, v.value)
            if not isinstance(t, Prod):
                raise self.err("Mismatch", f"projection from non-product {_show(t)}", v, actual=t)
            if not 1 <= v.index <= len(t.items):
                raise self.err("Mismatch", f"projection {v.index} out of range for {_show(t)}", v, actual=t)
            return Proj(v.index, inner, v.span), t.items[v.index - 1]
        if isinstance(v, Inj):
            if v.type is None:
                raise self.err("Mismatch", "cannot infer the sum type of an injection here; "
                                           "annotate it as inl[A + B] V", v)
            return self.check_value(ctx, v, v.type), v.type
        if isinstance(v, PrimApp):
            if self.mode == "eff":
                raise self.err("Mismatch", "primitives need mode eff+", v)
            if not prims.is_prim_name(v.name):
                raise self.err("UnboundVar", f"unknown primitive {v.name}", v)
            params, res = prims.prim_type(v.name)
            if len(params) != len(v.args):
                raise self.err("Mismatch", f"{v.name} takes {len(params)} arguments, got {len(v.args)}", v)
            args = tuple(self.check_value(ctx, a, t) for a, t in zip(v.args, params))
            return (v if args == v.args else PrimApp(v.name, args, v.span)), res
        raise self.err("Mismatch", f"not a value: {v!r}", v)

    # ---------------------------------------------------------- computations

    def comp(self, ctx, m, eff: Effect, expected: Optional[ValueType]):
        """Check m under eff; return (elaborated m, return type)."""
        m2, ret = self._comp(ctx, m, eff, expected)
        if expected is not None and ret != expected:
            raise self.err("Mismatch", f"expected return type {_show(expected)}, found {_show(ret)}",
                           m, expected=expected, actual=ret)
        return m2, ret

    def _comp(self, ctx, m, eff, expected):
        if isinstance(m, Return):
            if expected is not None:
                return Return(self.check_value(ctx, m.value, expected), m.span), expected
            v, t = self.synth_value(ctx, m.value)
            return Return(v, m.span), t
        if isinstance(m, Let):
            bound, a = self.comp(ctx, m.bound, eff, None)
            body, b = self.comp(ctx.extend(m.name, a), m.body, eff, expected)
            return Let(bound, body, m.name, m.span), b
        if isinstance(m, App):
            f, ft = self.synth_value(ctx, m.fn)
            if not isinstance(ft, Arrow):
                raise self.err("Mismatch", f"applying a non-function of type {_show(ft)}", m, actual=ft)
            if ft.result.effect != eff:
                raise self.err("SignatureMismatch",
                               f"function has effect {_show_eff(ft.result.effect)}, context has {_show_eff(eff)}",
                               m, expected=eff, actual=ft.result.effect)
            a = self.check_value(ctx, m.arg, ft.arg)
            return App(f, a, m.span), ft.result.ret
        if isinstance(m, OpCall):
            ot = eff.sig.lookup(m.op)
            if ot is None:
                raise self.err("OpNotInSignature", f"operation {m.op} is not in {_show_eff(eff)}", m)
            return OpCall(m.op, self.check_value(ctx, m.arg, ot.arg), m.span), ot.result
        if isinstance(m, Handle):
            inner = m.effect
            self.wf_effect(inner, m)
            subject, a = self.comp(ctx, m.subject, inner, None)
            body, ret = self.comp(ctx.extend(m.name, a), m.body, eff, expected)
            c = CompType(ret, eff)
            handler = self.handler(ctx, m.handler, inner.sig, c)
            if inner.axioms and self.mode == "effE" and self.respects != "skip":
                self.require_respects(ctx, handler, inner.theory, c, m)
            return Handle(subject, handler, body, inner, m.name, m.span), ret
        if isinstance(m, Case):
            if self.mode == "eff":
                raise self.err("Mismatch", "case needs mode eff+", m)
            v, t = self.synth_value(ctx, m.scrutinee)
            if not isinstance(t, Sum):
                raise self.err("Mismatch", f"case on non-sum type {_show(t)}", m, actual=t)
            if len(t.items) != m.arity:
                raise self.err("Mismatch", f"case with {m.arity} branches on {_show(t)}", m, actual=t)
            branches = []
            ret = expected
            for i, (b, ti) in enumerate(zip(m.branches, t.items)):
                b2, r = self.comp(ctx.extend(m.name_of(i), ti), b, eff, ret)
                ret = r
                branches.append(b2)
            if ret is None:
                raise self.err("Mismatch", "cannot infer the result type of an empty case", m)
            return Case(v, tuple(branches), m.names, m.span), ret
        raise self.err("Mismatch", f"not a computation: {m!r}", m)

    def handler(self, ctx, h: Handler, sig: Signature, c: CompType) -> Handler:
        have = set(h.ops())
        for op in sig.names():
            if op not in have:
                raise self.err("HandlerClauseMissing", f"handler has no clause for {op}", h)
        clauses = []
        for cl in h.clauses:
            ot = sig.lookup(cl.op)
            if ot is None:
                raise self.err("HandlerClauseExtra", f"handler clause for {cl.op}, which is not in the signature", cl)
            inner = ctx.extend(cl.x_name, ot.arg).extend(cl.k_name, Arrow(ot.result, c))
            body, _ = self.comp(inner, cl.body, c.effect, c.ret)
            clauses.append(Clause(cl.op, body, cl.x_name, cl.k_name, cl.span))
        return Handler(tuple(clauses), h.span)

    def require_respects(self, ctx, handler, theory, c, node):
        if self.depth >= self.max_depth:
            raise self.err("RespectFailure", "respects checks nested too deeply", node)
        verdict = check_respects(ctx, handler, theory, c, self.respects, depth=self.depth + 1)
        for av in verdict.verdicts:
            if av.status in ("Fails", "Unknown"):
                what = "does not hold" if av.status == "Fails" else "could not be derived"
                raise self.err("RespectFailure",
                               f"handler does not respect {theory.name}: axiom {av.axiom} {what}",
                               node, axiom=av.axiom, witness=av.witness)
        if verdict.mode == "semantic" and verdict.syntactic_unknown:
            self.warnings.append(f"handler for {theory.name} respects it only semantically "
                                 f"(not derivable for: {', '.join(verdict.syntactic_unknown)})")


def _show_eff(e):
    from .surface import _Printer
    return _Printer().effect(e)


# ---------------------------------------------------------------- public API

def elaborate_value(ctx, v, expected=None, mode="eff+", respects="semantic"):
    ch = Checker(mode, respects)
    if expected is not None:
        ch.wf_type(expected, v)
        return ch.check_value(ctx, v, expected)
    return ch.synth_value(ctx, v)[0]


def elaborate_comp(ctx, m, ctype: CompType, mode="eff+", respects="semantic"):
    ch = Checker(mode, respects)
    ch.wf_comp_type(ctype, m)
    return ch.comp(ctx, m, ctype.effect, ctype.ret)[0]


def infer_value(ctx, v, mode="eff+", respects="semantic") -> ValueType:
    return Checker(mode, respects).synth_value(ctx, v)[1]


def infer_comp(ctx, m, effect: Effect, mode="eff+", respects="semantic") -> CompType:
    ch = Checker(mode, respects)
    ch.wf_effect(effect, m)
    return CompType(ch.comp(ctx, m, effect, None)[1], effect)


def check_handler(ctx, h, sig, c: CompType, mode="eff+"):
    ch = Checker(mode, "skip")
    if isinstance(sig, Effect):
        sig = sig.sig
    return ch.handler(ctx, h, sig, c)


def check_term(ctx, t, ty, mode="eff+", respects="semantic"):
    """Elaborate a term against a value or computation type."""
    if isinstance(ty, CompType):
        return elaborate_comp(ctx, t, ty, mode, respects)
    return elaborate_value(ctx, t, ty, mode, respects)


# ---------------------------------------------------------------- effect theories

def is_ground_value(v) -> bool:
    if isinstance(v, Var):
        return True
    if isinstance(v, Tuple):
        return all(is_ground_value(x) for x in v.items)
    if isinstance(v, (Proj, Inj)):
        return is_ground_value(v.value)
    return False


def is_effect_term(m) -> bool:
    if isinstance(m, Return):
        return is_ground_value(m.value)
    if isinstance(m, Let):
        return (isinstance(m.bound, OpCall) and is_ground_value(m.bound.arg)
                and is_effect_term(m.body))
    if isinstance(m, Case):
        return is_ground_value(m.scrutinee) and all(is_effect_term(b) for b in m.branches)
    return False


def elaborate_theory(theory: EffectTheory) -> EffectTheory:
    """Typecheck every axiom as a ground effect term and fill in annotations."""
    ch = Checker("eff+", "skip")
    for op, ot in theory.sig.ops:
        if not (is_ground(ot.arg) and is_ground(ot.result)):
            raise TypeCheckError("NotGround", f"theory {theory.name}: operation {op} is not ground")
    eff = Effect(theory.sig)
    out = []
    for ax in theory.axioms:
        for t in (*ax.ctx_types, ax.result):
            if not is_ground(t):
                raise TypeCheckError("NotGround", f"axiom {ax.name}: {_show(t)} is not ground")
        ctx = Context(tuple(zip(ax.ctx_names or ("x",) * len(ax.ctx_types), ax.ctx_types)))
        sides = []
        for side in (ax.lhs, ax.rhs):
            s2, _ = ch.comp(ctx, side, eff, ax.result)
            if not is_effect_term(s2):
                raise TypeCheckError("NotGround", f"axiom {ax.name}: side is not an effect-theory term",
                                     getattr(side, "span", None))
            sides.append(s2)
        out.append(Axiom(ax.name, ax.ctx_types, sides[0], sides[1], ax.result, ax.ctx_names))
    return EffectTheory(theory.name, theory.sig, tuple(out))


def translate_effect_term(mhat, handler: Handler, sig: Signature, out: CompType, n_delta: int):
    """The handler-instantiated form M^[H, k].

    mhat lives in the axiom context (n_delta variables).  The result lives in
    Gamma, Delta, k, where Gamma is the handler's context and k : A -> out.
    """

    def tr(m, d):
        if isinstance(m, Return):
            return App(Var(d, "k"), shift(m.value, 1, d))
        if isinstance(m, Let):
            op = m.bound.op
            cl = handler.clause(op)
            if cl is None:
                raise TypeCheckError("HandlerClauseMissing", f"handler has no clause for {op}")
            ot = sig.lookup(op)
            body = shift(cl.body, n_delta + 1 + d, 2)
            kont = Lam(ot.result, out.effect, tr(m.body, d + 1), m.name)
            return instantiate(body, [kont, shift(m.bound.arg, 1, d)])
        if isinstance(m, Case):
            return Case(shift(m.scrutinee, 1, d), tuple(tr(b, d + 1) for b in m.branches), m.names)
        raise TypeCheckError("NotGround", "not an effect-theory term")

    return tr(mhat, 0)


def respects_context(ctx: Context, ax: Axiom, c: CompType) -> Context:
    names = ax.ctx_names or ("x",) * len(ax.ctx_types)
    return ctx.extend_many(zip(names, ax.ctx_types)).extend("k", Arrow(ax.result, c))


@dataclass(frozen=True)
class AxiomVerdict:
    axiom: str
    status: str  # Proved | Unknown | Holds | Fails
    witness: Optional[str] = None


@dataclass(frozen=True)
class RespectsVerdict:
    mode: str
    verdicts: tuple
    syntactic_unknown: tuple = ()

    @property
    def status(self):
        st = [v.status for v in self.verdicts]
        if self.mode == "syntactic":
            return "Proved" if all(s == "Proved" for s in st) else "Unknown"
        return "Holds" if all(s == "Holds" for s in st) else "Fails"


def check_respects(ctx, handler, theory, c: CompType, mode="semantic", depth=0) -> RespectsVerdict:
    """Decide whether the handler validates every axiom of the theory."""
    sig = theory.sig
    for ax in theory.axioms:
        for side in (ax.lhs, ax.rhs):
            for op in _ops_of(side):
                if handler.clause(op) is None or op not in sig:
                    raise TypeCheckError("HandlerClauseMissing", f"axiom {ax.name} uses {op}, which the handler lacks")
    if mode == "semantic":
        from .freemodel import NotFinitelyDenotable, respects_semantic
        try:
            verdicts = respects_semantic(ctx, handler, theory, c)
        except NotFinitelyDenotable as e:
            raise TypeCheckError("NotGround", f"semantic respects check impossible: {e}")
        syn = _syntactic(ctx, handler, theory, c)
        unknown = tuple(v.axiom for v in syn if v.status != "Proved")
        return RespectsVerdict("semantic", tuple(verdicts), unknown)
    if mode == "syntactic":
        return RespectsVerdict("syntactic", tuple(_syntactic(ctx, handler, theory, c)))
    raise ValueError(f"unknown respects mode {mode!r}")


def _syntactic(ctx, handler, theory, c):
    from .equations import Proved, check_derivable_eq
    out = []
    for ax in theory.axioms:
        n = len(ax.ctx_types)
        lhs = translate_effect_term(ax.lhs, handler, theory.sig, c, n)
        rhs = translate_effect_term(ax.rhs, handler, theory.sig, c, n)
        res = check_derivable_eq(respects_context(ctx, ax, c), lhs, rhs, c)
        out.append(AxiomVerdict(ax.name, "Proved" if isinstance(res, Proved) else "Unknown"))
    return out


def _ops_of(m):
    if isinstance(m, Let):
        yield m.bound.op
        yield from _ops_of(m.body)
    elif isinstance(m, Case):
        for b in m.branches:
            yield from _ops_of(b)
