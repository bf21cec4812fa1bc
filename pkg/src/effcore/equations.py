"""Derivable equality by oriented rewriting.

The beta, monad and handler laws are oriented left to right and applied
outermost-first until nothing applies.  The eta laws are never used as
rewrites; two normal forms are instead compared up to eta, directed by their
types.  With an effect theory the prover also tries a bounded number of
axiom instances at matching subterms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from . import prims
from .syntax import (
    App, Arrow, Axiom, Base, Case, Clause, Comp, CompType, Context, Effect,
    EffectTheory, Handle, Handler, Inj, Lam, Let, OpCall, PrimApp, Prod, Proj,
    Return, Sum, Tuple, Value, ValueType, Var, instantiate, shift, free_vars,
)
from .typecheck import Checker, TypeCheckError

DEFAULT_BUDGET = 10_000
AXIOM_DEPTH = 6
AXIOM_INSTANCES = 100


class Rule(Enum):
    BetaLam = "BetaLam"
    BetaProj = "BetaProj"
    BetaCase = "BetaCase"
    PrimDelta = "PrimDelta"
    RetLet = "RetLet"
    LetLet = "LetLet"
    LetRet = "LetRet"
    HandleRet = "HandleRet"
    HandleLet = "HandleLet"
    HandleOp = "HandleOp"
    CaseHandle = "CaseHandle"


@dataclass(frozen=True)
class AxiomInstance:
    axiom: str
    direction: str  # "lr" rewrites lhs to rhs, "rl" the other way
    sigma: tuple  # values for the axiom context, first variable first


@dataclass(frozen=True)
class Step:
    position: tuple
    rule: object  # Rule or AxiomInstance
    before: object
    after: object


@dataclass(frozen=True)
class ProofTrace:
    lhs_steps: tuple = ()
    rhs_steps: tuple = ()

    def __len__(self):
        return len(self.lhs_steps) + len(self.rhs_steps)


@dataclass(frozen=True)
class Proved:
    trace: ProofTrace
    normal_form: object = None


@dataclass(frozen=True)
class Unknown:
    reason: str
    lhs_normal: object = None
    rhs_normal: object = None


class BudgetExhausted(Exception):
    def __init__(self, partial, steps):
        self.partial = partial
        self.steps = steps
        super().__init__(f"rewrite budget exhausted after {len(steps)} steps")


# ---------------------------------------------------------------- rewriting

def _head_comp(m, eff):
    """One rule at the root of m, in priority order, or None."""
    if isinstance(m, App):
        if isinstance(m.fn, Lam):
            return Rule.BetaLam, instantiate(m.fn.body, [m.arg])
        return None
    if isinstance(m, Case):
        v = m.scrutinee
        if isinstance(v, Inj):
            return Rule.BetaCase, instantiate(m.branches[v.index - 1], [v.value])
        return None
    if isinstance(m, Let):
        b = m.bound
        if isinstance(b, Return):
            return Rule.RetLet, instantiate(m.body, [b.value])
        if isinstance(b, Let):
            return Rule.LetLet, Let(b.bound, Let(b.body, shift(m.body, 1, 1), m.name), b.name)
        body = m.body
        if isinstance(body, Return) and isinstance(body.value, Var) and body.value.index == 0:
            return Rule.LetRet, b
        return None
    if isinstance(m, Handle):
        s = m.subject
        if isinstance(s, Return):
            return Rule.HandleRet, instantiate(m.body, [s.value])
        if isinstance(s, Let):
            inner = Handle(s.body, shift(m.handler, 1), shift(m.body, 1, 1), m.effect, m.name)
            return Rule.HandleLet, Handle(s.bound, m.handler, inner, m.effect, s.name)
        if isinstance(s, OpCall):
            cl = m.handler.clause(s.op)
            ot = m.effect.sig.lookup(s.op)
            if cl is None or ot is None:
                return None
            kont = Lam(ot.result, eff, m.body, m.name)
            return Rule.HandleOp, instantiate(cl.body, [kont, s.arg])
        if isinstance(s, Case):
            h1 = shift(m.handler, 1)
            n1 = shift(m.body, 1, 1)
            return Rule.CaseHandle, Case(s.scrutinee, tuple(
                Handle(b, h1, n1, m.effect, m.name) for b in s.branches), s.names)
        return None
    return None


def _head_value(v):
    if isinstance(v, Proj) and isinstance(v.value, Tuple):
        return Rule.BetaProj, v.value.items[v.index - 1]
    if isinstance(v, PrimApp) and v.args:
        r = prims.delta(v)
        if r is not None:
            return Rule.PrimDelta, r
    return None


# Without a trace to record, normalizing a subterm is a pure function of the
# subterm and its ambient effect, so results are shared across calls.  Keys
# use object identity (hashing terms is linear in their size); each entry
# keeps its term alive so the identity cannot be reused.
_MEMO = {}
_MEMO_LIMIT = 200_000


class _Normalizer:
    def __init__(self, budget, record):
        self.budget = budget
        self.record = record
        self.steps = []
        self.count = 0
        self.memo = None if record else _MEMO
        if self.memo is not None and len(self.memo) > _MEMO_LIMIT:
            self.memo.clear()

    def tick(self, path, rule, before, after):
        self.count += 1
        if self.record:
            self.steps.append(Step(path, rule, before, after))
        if self.count > self.budget:
            raise BudgetExhausted(after, tuple(self.steps))

    def comp(self, m, eff, path):
        memo = self.memo
        if memo is None:
            return self._comp(m, eff, path)
        key = (id(m), id(eff))
        hit = memo.get(key)
        if hit is not None and hit[0] is m and hit[1] is eff:
            return hit[2]
        nf = self._comp(m, eff, path)
        memo[key] = (m, eff, nf)
        return nf

    def _comp(self, m, eff, path):
        while True:
            r = _head_comp(m, eff)
            if r is not None:
                self.tick(path, r[0], m, r[1])
                m = r[1]
                continue
            m2 = self.comp_children(m, eff, path)
            if m2 is m:
                return m
            m = m2
            r = _head_comp(m, eff)
            if r is None:
                return m
            self.tick(path, r[0], m, r[1])
            m = r[1]

    def comp_children(self, m, eff, path):
        if isinstance(m, Return):
            v = self.value(m.value, path + ("value",))
            return m if v is m.value else Return(v)
        if isinstance(m, Let):
            b = self.comp(m.bound, eff, path + ("bound",))
            n = self.comp(m.body, eff, path + ("body",))
            return m if (b is m.bound and n is m.body) else Let(b, n, m.name)
        if isinstance(m, App):
            f = self.value(m.fn, path + ("fn",))
            a = self.value(m.arg, path + ("arg",))
            return m if (f is m.fn and a is m.arg) else App(f, a)
        if isinstance(m, OpCall):
            a = self.value(m.arg, path + ("arg",))
            return m if a is m.arg else OpCall(m.op, a)
        if isinstance(m, Handle):
            s = self.comp(m.subject, m.effect, path + ("subject",))
            changed = s is not m.subject
            clauses = []
            for cl in m.handler.clauses:
                b = self.comp(cl.body, eff, path + ("clause:" + cl.op,))
                changed = changed or b is not cl.body
                clauses.append(cl if b is cl.body else Clause(cl.op, b, cl.x_name, cl.k_name))
            n = self.comp(m.body, eff, path + ("body",))
            changed = changed or n is not m.body
            if not changed:
                return m
            return Handle(s, Handler(tuple(clauses)), n, m.effect, m.name)
        if isinstance(m, Case):
            v = self.value(m.scrutinee, path + ("scrutinee",))
            changed = v is not m.scrutinee
            bs = []
            for i, b in enumerate(m.branches):
                b2 = self.comp(b, eff, path + (f"branch:{i + 1}",))
                changed = changed or b2 is not b
                bs.append(b2)
            return Case(v, tuple(bs), m.names) if changed else m
        raise TypeError(f"not a computation: {m!r}")

    def value(self, v, path):
        if isinstance(v, Var):
            return v
        if isinstance(v, Lam):
            b = self.comp(v.body, v.effect, path + ("body",))
            return v if b is v.body else Lam(v.arg, v.effect, b, v.name)
        if isinstance(v, Tuple):
            items = tuple(self.value(x, path + (f"item:{i + 1}",)) for i, x in enumerate(v.items))
            v2 = v if all(a is b for a, b in zip(items, v.items)) else Tuple(items)
            return v2
        if isinstance(v, Inj):
            x = self.value(v.value, path + ("value",))
            return v if x is v.value else Inj(v.index, v.arity, x, v.type)
        if isinstance(v, Proj):
            x = self.value(v.value, path + ("value",))
            v2 = v if x is v.value else Proj(v.index, x)
        elif isinstance(v, PrimApp):
            if not v.args:
                return v
            args = tuple(self.value(a, path + (f"arg:{i + 1}",)) for i, a in enumerate(v.args))
            v2 = v if all(a is b for a, b in zip(args, v.args)) else PrimApp(v.name, args)
        else:
            raise TypeError(f"not a value: {v!r}")
        r = _head_value(v2)
        if r is None:
            return v2
        self.tick(path, r[0], v2, r[1])
        return self.value(r[1], path)


_CACHE = {}
_CACHE_LIMIT = 20_000


def normalize(ctx, m, budget=DEFAULT_BUDGET, effect: Optional[Effect] = None, record=True):
    """Normal form of m and the rewrite steps taken.

    For a computation, `effect` is its ambient effect (needed to annotate
    the continuation introduced by the handler rule).
    """
    if not record:
        key = (m, effect)
        hit = _CACHE.get(key)
        if hit is not None:
            return hit, ProofTrace()
    nz = _Normalizer(budget, record)
    if isinstance(m, Comp):
        if effect is None:
            raise ValueError("normalizing a computation needs its effect")
        nf = nz.comp(m, effect, ())
    else:
        nf = nz.value(m, ())
    if not record:
        if len(_CACHE) > _CACHE_LIMIT:
            _CACHE.clear()
        _CACHE[(m, effect)] = nf
    return nf, ProofTrace(tuple(nz.steps))


def replay(start, steps):
    """Apply recorded steps to start; used to validate traces."""
    t = start
    for s in steps:
        cur = subterm(t, s.position)
        if cur != s.before:
            raise ValueError(f"trace does not match at {s.position}")
        t = replace(t, s.position, s.after)
    return t


# ---------------------------------------------------------------- positions

def _children(t):
    """(selector, child) pairs in traversal order."""
    if isinstance(t, Return):
        return [("value", t.value)]
    if isinstance(t, Let):
        return [("bound", t.bound), ("body", t.body)]
    if isinstance(t, App):
        return [("fn", t.fn), ("arg", t.arg)]
    if isinstance(t, OpCall):
        return [("arg", t.arg)]
    if isinstance(t, Handle):
        return ([("subject", t.subject)] + [("clause:" + c.op, c.body) for c in t.handler.clauses]
                + [("body", t.body)])
    if isinstance(t, Case):
        return [("scrutinee", t.scrutinee)] + [(f"branch:{i + 1}", b) for i, b in enumerate(t.branches)]
    if isinstance(t, Lam):
        return [("body", t.body)]
    if isinstance(t, Tuple):
        return [(f"item:{i + 1}", x) for i, x in enumerate(t.items)]
    if isinstance(t, (Proj, Inj)):
        return [("value", t.value)]
    if isinstance(t, PrimApp):
        return [(f"arg:{i + 1}", x) for i, x in enumerate(t.args)]
    return []


def subterm(t, path):
    for sel in path:
        t = dict(_children(t))[sel]
    return t


def replace(t, path, new):
    if not path:
        return new
    sel, rest = path[0], path[1:]
    child = dict(_children(t))[sel]
    c2 = replace(child, rest, new)
    return _rebuild(t, sel, c2)


def _rebuild(t, sel, c):
    if isinstance(t, Return):
        return Return(c)
    if isinstance(t, Let):
        return Let(c, t.body, t.name) if sel == "bound" else Let(t.bound, c, t.name)
    if isinstance(t, App):
        return App(c, t.arg) if sel == "fn" else App(t.fn, c)
    if isinstance(t, OpCall):
        return OpCall(t.op, c)
    if isinstance(t, Handle):
        if sel == "subject":
            return Handle(c, t.handler, t.body, t.effect, t.name)
        if sel == "body":
            return Handle(t.subject, t.handler, c, t.effect, t.name)
        op = sel.split(":", 1)[1]
        cl = tuple(Clause(x.op, c, x.x_name, x.k_name) if x.op == op else x for x in t.handler.clauses)
        return Handle(t.subject, Handler(cl), t.body, t.effect, t.name)
    if isinstance(t, Case):
        if sel == "scrutinee":
            return Case(c, t.branches, t.names)
        i = int(sel.split(":")[1]) - 1
        return Case(t.scrutinee, t.branches[:i] + (c,) + t.branches[i + 1:], t.names)
    if isinstance(t, Lam):
        return Lam(t.arg, t.effect, c, t.name)
    if isinstance(t, Tuple):
        i = int(sel.split(":")[1]) - 1
        return Tuple(t.items[:i] + (c,) + t.items[i + 1:])
    if isinstance(t, Proj):
        return Proj(t.index, c)
    if isinstance(t, Inj):
        return Inj(t.index, t.arity, c, t.type)
    if isinstance(t, PrimApp):
        i = int(sel.split(":")[1]) - 1
        return PrimApp(t.name, t.args[:i] + (c,) + t.args[i + 1:])
    raise TypeError(t)


def comp_positions(ctx, m, eff, checker=None, path=()):
    """Yield (path, subterm, ctx, effect) for every computation subterm of m."""
    ch = checker or Checker("effE", "skip")
    yield path, m, ctx, eff
    if isinstance(m, Let):
        _, a = ch.comp(ctx, m.bound, eff, None)
        yield from comp_positions(ctx, m.bound, eff, ch, path + ("bound",))
        yield from comp_positions(ctx.extend(m.name, a), m.body, eff, ch, path + ("body",))
    elif isinstance(m, Handle):
        _, a = ch.comp(ctx, m.subject, m.effect, None)
        _, r = ch.comp(ctx.extend(m.name, a), m.body, eff, None)
        c = CompType(r, eff)
        yield from comp_positions(ctx, m.subject, m.effect, ch, path + ("subject",))
        for cl in m.handler.clauses:
            ot = m.effect.sig.lookup(cl.op)
            inner = ctx.extend(cl.x_name, ot.arg).extend(cl.k_name, Arrow(ot.result, c))
            yield from comp_positions(inner, cl.body, eff, ch, path + ("clause:" + cl.op,))
        yield from comp_positions(ctx.extend(m.name, a), m.body, eff, ch, path + ("body",))
    elif isinstance(m, Case):
        _, t = ch.synth_value(ctx, m.scrutinee)
        for i, b in enumerate(m.branches):
            yield from comp_positions(ctx.extend(m.name_of(i), t.items[i]), b, eff, ch,
                                      path + (f"branch:{i + 1}",))
    for sel, v in _children(m):
        if isinstance(v, Value):
            yield from _value_positions(ctx, v, ch, path + (sel,))


def _value_positions(ctx, v, ch, path):
    if isinstance(v, Lam):
        yield from comp_positions(ctx.extend(v.name, v.arg), v.body, v.effect, ch, path + ("body",))
    else:
        for sel, x in _children(v):
            yield from _value_positions(ctx, x, ch, path + (sel,))


# ---------------------------------------------------------------- eta comparison

class _Eq:
    def __init__(self):
        self.ch = Checker("effE", "skip")

    def vtype(self, ctx, v):
        return self.ch.synth_value(ctx, v)[1]

    def ctype(self, ctx, m, eff):
        return self.ch.comp(ctx, m, eff, None)[1]

    def value(self, ctx, a, b, ty) -> bool:
        if a == b:
            return True
        if isinstance(ty, Prod):
            if not ty.items:
                return True
            return all(self.value(ctx, _component(a, i), _component(b, i), t)
                       for i, t in enumerate(ty.items))
        if isinstance(ty, Arrow):
            return self.comp(ctx.extend("x", ty.arg), _apply_body(a), _apply_body(b), ty.result.effect)
        if isinstance(ty, Sum):
            if isinstance(a, Inj) and isinstance(b, Inj):
                return a.index == b.index and self.value(ctx, a.value, b.value, ty.items[a.index - 1])
            if isinstance(a, Inj) or isinstance(b, Inj):
                return False
        return self.neutral(ctx, a, b)

    def neutral(self, ctx, a, b) -> bool:
        if a == b:
            return True
        if isinstance(a, Proj) and isinstance(b, Proj):
            return a.index == b.index and self.neutral(ctx, a.value, b.value)
        if isinstance(a, PrimApp) and isinstance(b, PrimApp):
            if a.name != b.name or len(a.args) != len(b.args):
                return False
            params, _ = prims.prim_type(a.name)
            return all(self.value(ctx, x, y, t) for x, y, t in zip(a.args, b.args, params))
        return False

    def comp(self, ctx, a, b, eff) -> bool:
        if a == b:
            return True
        if type(a) is not type(b):
            return False
        if isinstance(a, Return):
            return self.value(ctx, a.value, b.value, self.vtype(ctx, a.value))
        if isinstance(a, App):
            ft = self.vtype(ctx, a.fn)
            return (ft == self.vtype(ctx, b.fn) and self.neutral_head(ctx, a.fn, b.fn)
                    and self.value(ctx, a.arg, b.arg, ft.arg))
        if isinstance(a, OpCall):
            return a.op == b.op and self.value(ctx, a.arg, b.arg, eff.sig.lookup(a.op).arg)
        if isinstance(a, Let):
            ta = self.ctype(ctx, a.bound, eff)
            if ta != self.ctype(ctx, b.bound, eff):
                return False
            return self.comp(ctx, a.bound, b.bound, eff) and \
                self.comp(ctx.extend("x", ta), a.body, b.body, eff)
        if isinstance(a, Handle):
            if a.effect != b.effect or a.handler.ops() != b.handler.ops():
                return False
            ta = self.ctype(ctx, a.subject, a.effect)
            if ta != self.ctype(ctx, b.subject, b.effect):
                return False
            if not self.comp(ctx, a.subject, b.subject, a.effect):
                return False
            inner = ctx.extend("x", ta)
            ret = self.ctype(inner, a.body, eff)
            if not self.comp(inner, a.body, b.body, eff):
                return False
            c = CompType(ret, eff)
            for ca, cb in zip(a.handler.clauses, b.handler.clauses):
                ot = a.effect.sig.lookup(ca.op)
                cctx = ctx.extend("x", ot.arg).extend("k", Arrow(ot.result, c))
                if not self.comp(cctx, ca.body, cb.body, eff):
                    return False
            return True
        if isinstance(a, Case):
            if a.arity != b.arity:
                return False
            t = self.vtype(ctx, a.scrutinee)
            if t != self.vtype(ctx, b.scrutinee) or not self.neutral_head(ctx, a.scrutinee, b.scrutinee):
                return False
            return all(self.comp(ctx.extend("x", t.items[i]), x, y, eff)
                       for i, (x, y) in enumerate(zip(a.branches, b.branches)))
        return False

    def neutral_head(self, ctx, a, b):
        if isinstance(a, (Lam, Inj, Tuple)) or isinstance(b, (Lam, Inj, Tuple)):
            return self.value(ctx, a, b, self.vtype(ctx, a))
        return self.neutral(ctx, a, b)


def _component(v, i):
    if isinstance(v, Tuple):
        return v.items[i]
    return Proj(i + 1, v)


def _apply_body(v):
    if isinstance(v, Lam):
        return v.body
    return App(shift(v, 1), Var(0))


def eta_equal(ctx, a, b, ty) -> bool:
    """Compare two terms up to alpha and type-directed eta (no rewriting)."""
    e = _Eq()
    if isinstance(ty, CompType):
        return e.comp(ctx, a, b, ty.effect)
    return e.value(ctx, a, b, ty)


# ---------------------------------------------------------------- axioms

def instantiate_axiom(ax: Axiom, sigma, ctx: Optional[Context] = None):
    """Both sides of an axiom under sigma (values for its context, first variable first)."""
    sigma = list(sigma)
    if len(sigma) != len(ax.ctx_types):
        raise TypeCheckError("Mismatch", f"axiom {ax.name} needs {len(ax.ctx_types)} values, got {len(sigma)}")
    ch = Checker("effE", "skip")
    ctx = ctx or Context()
    for v, t in zip(sigma, ax.ctx_types):
        got = ch.synth_value(ctx, v)[1]
        if got != t:
            raise TypeCheckError("Mismatch", f"axiom {ax.name}: substitution value has the wrong type")
    vals = list(reversed(sigma))
    return instantiate(ax.lhs, vals), instantiate(ax.rhs, vals)


def _match(p, s, b, sigma):
    """Match pattern p (axiom scope + b local binders) against s; extend sigma."""
    if isinstance(p, Var):
        if p.index < b:
            return isinstance(s, Var) and s.index == p.index
        if any(i < b for i in free_vars(s)):
            return False
        j = p.index - b
        val = shift(s, -b) if b else s
        if j in sigma:
            return sigma[j] == val
        sigma[j] = val
        return True
    if type(p) is not type(s):
        return False
    if isinstance(p, Return):
        return _match(p.value, s.value, b, sigma)
    if isinstance(p, Let):
        return _match(p.bound, s.bound, b, sigma) and _match(p.body, s.body, b + 1, sigma)
    if isinstance(p, OpCall):
        return p.op == s.op and _match(p.arg, s.arg, b, sigma)
    if isinstance(p, Case):
        return p.arity == s.arity and _match(p.scrutinee, s.scrutinee, b, sigma) and all(
            _match(x, y, b + 1, sigma) for x, y in zip(p.branches, s.branches))
    if isinstance(p, Tuple):
        return len(p.items) == len(s.items) and all(_match(x, y, b, sigma) for x, y in zip(p.items, s.items))
    if isinstance(p, Proj):
        return p.index == s.index and _match(p.value, s.value, b, sigma)
    if isinstance(p, Inj):
        return p.index == s.index and p.type == s.type and _match(p.value, s.value, b, sigma)
    return p == s


def _axiom_rewrites(ctx, m, eff, theory: EffectTheory, ch):
    for path, sub, pctx, peff in comp_positions(ctx, m, eff, ch):
        if peff.sig != theory.sig or (peff.axioms and peff.theory.name != theory.name):
            continue
        for ax in theory.axioms:
            for direction, pat, other in (("lr", ax.lhs, ax.rhs), ("rl", ax.rhs, ax.lhs)):
                sigma = {}
                if not _match(pat, sub, 0, sigma):
                    continue
                n = len(ax.ctx_types)
                if any(j not in sigma for j in free_vars(other)):
                    continue
                # context order: index j is variable n-1-j
                vals = [sigma.get(j) for j in range(n)]
                ok = True
                for j, v in enumerate(vals):
                    if v is not None and ch.synth_value(pctx, v)[1] != ax.ctx_types[n - 1 - j]:
                        ok = False
                if not ok or ch.comp(pctx, sub, peff, None)[1] != ax.result:
                    continue
                filled = [v if v is not None else Tuple(()) for v in vals]
                new = instantiate(other, filled)
                inst = AxiomInstance(ax.name, direction, tuple(reversed([v for v in vals])))
                yield Step(path, inst, sub, new), replace(m, path, new)


def _search(ctx, nl, nr, eff, theory, budget, eq):
    ch = Checker("effE", "skip")
    left = {nl: ()}
    right = {nr: ()}
    frontier = [(nl, "l"), (nr, "r")]
    instances = 0
    for _ in range(AXIOM_DEPTH):
        nxt = []
        for t, side in frontier:
            book = left if side == "l" else right
            for st, t2 in _axiom_rewrites(ctx, t, eff, theory, ch):
                instances += 1
                if instances > AXIOM_INSTANCES:
                    return _meet(ctx, left, right, eff, eq)
                nf, tr = normalize(ctx, t2, budget, eff)
                if nf in book:
                    continue
                book[nf] = book[t] + (st,) + tr.lhs_steps
                nxt.append((nf, side))
            hit = _meet(ctx, left, right, eff, eq)
            if hit is not None:
                return hit
        if not nxt:
            break
        frontier = nxt
    return _meet(ctx, left, right, eff, eq)


def _meet(ctx, left, right, eff, eq):
    for a, sa in left.items():
        if a in right:
            return sa, right[a], a
    for a, sa in left.items():
        for b, sb in right.items():
            if eq.comp(ctx, a, b, eff):
                return sa, sb, a
    return None


# ---------------------------------------------------------------- public entry

def check_derivable_eq(ctx, lhs, rhs, ty, theory: Optional[EffectTheory] = None,
                       budget=DEFAULT_BUDGET, record=True):
    """Proved(trace) if lhs = rhs is derivable by the implemented rules, else Unknown."""
    ctx = ctx or Context()
    eff = ty.effect if isinstance(ty, CompType) else None
    try:
        nl, tl = normalize(ctx, lhs, budget, eff, record)
        nr, tr = normalize(ctx, rhs, budget, eff, record)
    except BudgetExhausted as e:
        return Unknown(f"budget exhausted: {e}")
    eq = _Eq()
    if isinstance(ty, CompType):
        same = eq.comp(ctx, nl, nr, eff)
    else:
        same = eq.value(ctx, nl, nr, ty)
    if same:
        return Proved(ProofTrace(tl.lhs_steps, tr.lhs_steps), nl)
    if theory is not None and isinstance(ty, CompType) and theory.axioms:
        try:
            hit = _search(ctx, nl, nr, eff, theory, budget, eq)
        except BudgetExhausted as e:
            return Unknown(f"budget exhausted: {e}", nl, nr)
        if hit is not None:
            sa, sb, nf = hit
            return Proved(ProofTrace(tl.lhs_steps + sa, tr.lhs_steps + sb), nf)
    return Unknown("normal forms differ", nl, nr)
