"""Random well-typed terms, generated top-down from the typing rules.

Every choice is made against a goal type, so the output typechecks by
construction.  Depth bounds the nesting of computations; the weights make
leaves more likely as the remaining depth shrinks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import prims
from .syntax import (
    UNIT, VOID, App, Arrow, Base, Case, Clause, CompType, Context, Effect,
    Handle, Handler, Inj, Lam, Let, OpCall, OpType, PrimApp, Prod, Proj,
    Return, Signature, Sum, Tuple, Var,
)

BOOL, INT = prims.BOOL, prims.INT
UU = Sum((UNIT, UNIT))

CH = Signature.of({"choice": OpType(UNIT, UU)}, "Ch")
TICK = Signature.of({"tick": OpType(UNIT, UNIT)}, "Tick")
STATE = Signature.of({"get": OpType(UNIT, BOOL), "put": OpType(BOOL, UNIT)}, "St")
EXC = Signature.of({"raise": OpType(UNIT, VOID)}, "Exc")
# signatures allowed without sums or base types
PAIR = Signature.of({"emit": OpType(Prod((UNIT, UNIT)), UNIT)}, "Emit")

SIGNATURES = (CH, TICK, STATE, EXC)

PURE = Effect(Signature(()))


class Uninhabitable(Exception):
    pass


@dataclass
class GenConfig:
    seed: int = 1
    max_depth: int = 8
    signature_pool: tuple = SIGNATURES
    base_type_pool: tuple = (BOOL, INT)
    handler_density: float = 0.3
    mode: str = "eff+"
    thunk_density: float = 0.05  # lambdas taking effectful functions (not finitely denotable)
    redex_density: float = 0.04  # projections out of literal tuples

    def rng(self):
        return random.Random(self.seed * 7919 + 17)


def value_types(cfg: GenConfig):
    if cfg.mode == "eff":
        return (UNIT, Prod((UNIT, UNIT)), Arrow(UNIT, CompType(UNIT, PURE)))
    b = cfg.base_type_pool
    out = [UNIT, *b, UU]
    if BOOL in b:
        out += [Prod((BOOL, BOOL)), Arrow(BOOL, CompType(BOOL, PURE))]
    if INT in b:
        out += [Prod((INT, BOOL))]
    return tuple(out)


def target_types(cfg: GenConfig):
    """Pool of closed-program types."""
    if cfg.mode == "eff":
        sigs = [s for s in cfg.signature_pool if _eff_ok(s)] or [PAIR, TICK]
        return tuple([CompType(UNIT, PURE), CompType(Prod((UNIT, UNIT)), PURE)]
                     + [CompType(UNIT, Effect(s)) for s in sigs])
    pool = [CompType(t, PURE) for t in value_types(cfg) if not isinstance(t, Arrow)]
    pool += [CompType(BOOL, PURE)] * 3
    for s in cfg.signature_pool:
        pool.append(CompType(BOOL if BOOL in cfg.base_type_pool else UNIT, Effect(s)))
    return tuple(pool)


def _eff_ok(sig):
    return all(_eff_type(t.arg) and _eff_type(t.result) for _, t in sig.ops)


def _eff_type(t):
    if isinstance(t, Prod):
        return all(_eff_type(x) for x in t.items)
    if isinstance(t, Arrow):
        return _eff_type(t.arg) and _eff_type(t.result.ret)
    return False


class _Gen:
    def __init__(self, cfg: GenConfig, rng=None):
        self.cfg = cfg
        self.rng = rng or cfg.rng()
        self.types = value_types(cfg)
        self.sums = cfg.mode != "eff"
        sigs = cfg.signature_pool if self.sums else [s for s in cfg.signature_pool if _eff_ok(s)]
        self.sigs = tuple(sigs) or ((PAIR, TICK) if not self.sums else SIGNATURES)

    # ------------------------------------------------------------ helpers
    def pick(self, xs):
        return xs[self.rng.randrange(len(xs))]

    def vars_of(self, ctx, ty):
        return [i for i in range(len(ctx)) if ctx.lookup(i) == ty]

    def funs_to(self, ctx, ret, eff):
        return [i for i in range(len(ctx))
                if isinstance(ctx.lookup(i), Arrow) and ctx.lookup(i).result == CompType(ret, eff)
                and _inhabited(ctx.lookup(i).arg, ctx)]

    def leafy(self, depth):
        if depth <= 0:
            return True
        return self.rng.random() < 0.25 + 0.6 * (1 - depth / max(1, self.cfg.max_depth))

    # ------------------------------------------------------------ values
    def value(self, ctx, ty, depth):
        here = self.vars_of(ctx, ty)
        r = self.rng.random()
        if here and r < 0.5:
            return Var(self.pick(here))
        if depth > 0 and r < 0.6:
            p = self.proj_source(ctx, ty)
            if p is not None:
                return p
        return self.construct(ctx, ty, depth)

    def proj_source(self, ctx, ty):
        cands = []
        for i in range(len(ctx)):
            t = ctx.lookup(i)
            if isinstance(t, Prod):
                cands += [(i, j) for j, x in enumerate(t.items) if x == ty]
        if not cands:
            return None
        i, j = self.pick(cands)
        return Proj(j + 1, Var(i))

    def construct(self, ctx, ty, depth):
        rng = self.rng
        if isinstance(ty, Base):
            names = prims.CARRIERS[ty.name]
            if depth > 0 and rng.random() < 0.35:
                return self.prim_value(ctx, ty, depth - 1)
            return PrimApp(self.pick(names))
        if depth > 0 and rng.random() < self.cfg.redex_density:
            # a projection out of a literal tuple: a value-level redex
            extra = self.pick(self.types[:3])
            return Proj(1, Tuple((self.construct(ctx, ty, depth - 1), self.value(ctx, extra, 0))))
        if isinstance(ty, Prod):
            return Tuple(tuple(self.value(ctx, x, depth - 1) for x in ty.items))
        if isinstance(ty, Sum):
            if not ty.items:
                raise Uninhabitable("no closed value of the empty sum")
            if ty == UU and depth > 0 and rng.random() < 0.2:
                return PrimApp("test", (self.value(ctx, BOOL, depth - 1),))
            order = list(range(len(ty.items)))
            rng.shuffle(order)
            for i in order:
                try:
                    return Inj(i + 1, len(ty.items), self.value(ctx, ty.items[i], depth - 1), ty)
                except Uninhabitable:
                    continue
            raise Uninhabitable("no inhabited summand")
        if isinstance(ty, Arrow):
            body = self.comp(ctx.extend(self.fresh(ctx), ty.arg), ty.result.ret, ty.result.effect, depth - 1)
            return Lam(ty.arg, ty.result.effect, body, self.fresh(ctx))
        raise Uninhabitable(f"cannot build a value of {ty!r}")

    def prim_value(self, ctx, ty, depth):
        if ty == BOOL:
            opts = ["not", "and", "or"] + (["eq"] if INT in self.cfg.base_type_pool else [])
        else:
            opts = ["add"]
        name = self.pick(opts)
        params, _ = prims.prim_type(name)
        return PrimApp(name, tuple(self.value(ctx, p, depth) for p in params))

    def fresh(self, ctx):
        return f"v{len(ctx)}"

    # ------------------------------------------------------------ computations
    def comp(self, ctx, ret, eff, depth):
        rng = self.rng
        rules = ["return"]
        w = [1.0]
        funs = self.funs_to(ctx, ret, eff)
        if funs:
            rules.append("call")
            w.append(2.5)
        ops = [op for op, ot in eff.sig.ops] if len(eff.sig) else []
        if not self.leafy(depth):
            rules += ["let", "app"]
            w += [1.2, 0.5]
            if ops:
                rules.append("op")
                w.append(2.0)
            rules.append("handle")
            w.append(self.cfg.handler_density * 8)
            if self.sums:
                rules.append("case")
                w.append(0.7)
        elif ops:
            rules.append("op")
            w.append(0.8)
        for _ in range(6):
            rule = rng.choices(rules, w)[0]
            try:
                return self.rule(rule, ctx, ret, eff, depth, funs, ops)
            except Uninhabitable:
                continue
        # last resort: something that cannot fail if the type is inhabited
        if funs:
            return self.rule("call", ctx, ret, eff, depth, funs, ops)
        for op in ops:
            if eff.sig.lookup(op).result == VOID:
                return OpCall(op, self.value(ctx, eff.sig.lookup(op).arg, 0))
        return Return(self.value(ctx, ret, depth))

    def rule(self, rule, ctx, ret, eff, depth, funs, ops):
        rng = self.rng
        d = depth - 1
        if rule == "return":
            return Return(self.value(ctx, ret, depth))
        if rule == "call":
            i = self.pick(funs)
            return App(Var(i), self.value(ctx, ctx.lookup(i).arg, max(d, 0)))
        if rule == "let":
            b = self.pick(self.types)
            bound = self.comp(ctx, b, eff, d)
            return Let(bound, self.comp(ctx.extend(self.fresh(ctx), b), ret, eff, d), self.fresh(ctx))
        if rule == "op":
            op = self.pick(ops)
            ot = eff.sig.lookup(op)
            arg = self.value(ctx, ot.arg, max(d, 0))
            if ot.result == ret and rng.random() < 0.3:
                return OpCall(op, arg)
            body = self.comp(ctx.extend(self.fresh(ctx), ot.result), ret, eff, max(d, 0))
            return Let(OpCall(op, arg), body, self.fresh(ctx))
        if rule == "app":
            if rng.random() < self.cfg.thunk_density and self.sigs:
                # an argument that is itself an effectful function
                inner = Effect(self.pick(self.sigs)) if rng.random() < 0.5 else eff
                a = Arrow(UNIT, CompType(self.pick(self.types[:3]), inner))
            else:
                a = self.pick(self.types)
            f = Lam(a, eff, self.comp(ctx.extend(self.fresh(ctx), a), ret, eff, d), self.fresh(ctx))
            if rng.random() < self.cfg.redex_density * 2:
                f = Proj(1, Tuple((f, Tuple(()))))
            return App(f, self.value(ctx, a, d))
        if rule == "handle":
            return self.handle(ctx, ret, eff, d)
        if rule == "case":
            s = self.pick([UU, Sum((BOOL, UNIT)), Sum((UNIT, UNIT, UNIT))] if BOOL in self.cfg.base_type_pool
                          else [UU, Sum((UNIT, UNIT, UNIT))])
            scrut = self.value(ctx, s, d)
            names = tuple(self.fresh(ctx) for _ in s.items)
            branches = tuple(self.comp(ctx.extend(self.fresh(ctx), t), ret, eff, d) for t in s.items)
            return Case(scrut, branches, names)
        raise ValueError(rule)

    def handle(self, ctx, ret, eff, depth):
        rng = self.rng
        sig = self.pick(self.sigs)
        inner_eff = Effect(sig)
        a = self.pick(self.types[:4]) if rng.random() < 0.7 else ret
        subject = self.comp(ctx, a, inner_eff, depth + (1 if rng.random() < 0.5 else 0))
        handler = self.handler(ctx, sig, ret, eff, depth)
        body = self.comp(ctx.extend(self.fresh(ctx), a), ret, eff, max(depth - 1, 0))
        return Handle(subject, handler, body, inner_eff, self.fresh(ctx))

    def handler(self, ctx, sig, ret, eff, depth):
        c = CompType(ret, eff)
        clauses = []
        for op, ot in sig.ops:
            inner = ctx.extend("p", ot.arg).extend("k", Arrow(ot.result, c))
            clauses.append(Clause(op, self.clause_body(inner, ot, ret, eff, depth), "p", "k"))
        return Handler(tuple(clauses))

    def clause_body(self, ctx, ot, ret, eff, depth):
        """Clause bodies call the continuation often, sometimes twice."""
        rng = self.rng
        if ot.result == VOID or rng.random() < 0.15:
            return self.comp(ctx, ret, eff, max(depth - 1, 0))
        r = rng.random()
        if r < 0.55:
            return App(Var(0, "k"), self.value(ctx, ot.result, 1))
        if r < 0.85 and ret in (BOOL, UNIT, INT):
            # run the continuation twice and combine
            b = ot.result
            k1 = App(Var(0, "k"), self.value(ctx, b, 1))
            c2 = ctx.extend("a", ret)
            k2 = App(Var(1, "k"), self.value(c2, b, 1))
            c3 = c2.extend("b", ret)
            if ret == BOOL:
                fin = Return(PrimApp(self.pick(["and", "or"]), (Var(1, "a"), Var(0, "b"))))
            elif ret == INT:
                fin = Return(PrimApp("add", (Var(1, "a"), Var(0, "b"))))
            else:
                fin = Return(Var(self.pick([0, 1])))
            return Let(k1, Let(k2, fin, "b"), "a")
        return self.comp(ctx, ret, eff, max(depth - 1, 0))


def gen_well_typed(cfg: GenConfig, target, ctx: Context = Context(), rng=None):
    """A term of the target type (a CompType or a ValueType) in ctx."""
    g = _Gen(cfg, rng)
    if isinstance(target, CompType):
        if not _inhabited(target.ret, ctx) and not any(
                ot.result == VOID or not _inhabited(ot.result, ctx) for _, ot in target.effect.sig.ops):
            raise Uninhabitable("goal type has no inhabitant")
        return g.comp(ctx, target.ret, target.effect, cfg.max_depth)
    if not _inhabited(target, ctx):
        raise Uninhabitable("goal type has no inhabitant")
    return g.value(ctx, target, cfg.max_depth)


def _inhabited(t, ctx):
    if any(ctx.lookup(i) == t for i in range(len(ctx))):
        return True
    if isinstance(t, Sum):
        return any(_inhabited(x, ctx) for x in t.items)
    if isinstance(t, Prod):
        return all(_inhabited(x, ctx) for x in t.items)
    return True


def gen_program(cfg: GenConfig):
    """(type, closed computation) for cfg.seed, with the type drawn from the pool."""
    rng = cfg.rng()
    pool = target_types(cfg)
    ty = pool[rng.randrange(len(pool))]
    return ty, gen_well_typed(cfg, ty, Context(), rng)


def contains_handle(t) -> bool:
    if isinstance(t, Handle):
        return True
    from .equations import _children
    return any(contains_handle(c) for _, c in _children(t))
