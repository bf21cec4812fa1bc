"""The free-monad model over finite carriers.

Every base type has a finite carrier, so values denote finite data:
tuples, injections and total function tables.  Computations denote
finite trees of operation nodes with one branch per element of the
operation's result carrier.  `let` grafts trees, `handle` folds them.
"""

from __future__ import annotations

import hashlib
import itertools
import weakref
from dataclasses import dataclass
from typing import Callable, Optional

from . import mutation, prims
from .syntax import (
    App, Arrow, Base, Case, CompType, Context, Effect, Handle, Inj, Lam, Let,
    OpCall, PrimApp, Prod, Proj, Return, Sum, Tuple, ValueType, Var,
)
from .typecheck import AxiomVerdict, RespectsVerdict

CARRIER_LIMIT = 4096


class NotFinitelyDenotable(Exception):
    pass


# ---------------------------------------------------------------- semantic values

class _Hashed:
    __slots__ = ("_h",)

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        if self is other:
            return True
        return type(other) is type(self) and self._h == other._h and self._key() == other._key()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return show(self)


class BaseElem(_Hashed):
    __slots__ = ("base", "index")

    def __init__(self, base, index):
        self.base, self.index = base, index
        self._h = hash(("B", base, index))

    def _key(self):
        return self.base, self.index


class TupleV(_Hashed):
    __slots__ = ("items",)

    def __init__(self, items):
        self.items = tuple(items)
        self._h = hash(("T", self.items))

    def _key(self):
        return self.items


class InjV(_Hashed):
    __slots__ = ("tag", "arity", "value")

    def __init__(self, tag, arity, value):
        self.tag, self.arity, self.value = tag, arity, value
        self._h = hash(("I", tag, arity, value))

    def _key(self):
        return self.tag, self.arity, self.value


class FunTable(_Hashed):
    """A total function; entries follow the canonical order of the domain carrier."""
    __slots__ = ("domain", "entries")

    def __init__(self, domain, entries):
        self.domain, self.entries = domain, tuple(entries)
        self._h = hash(("F", domain, self.entries))

    def _key(self):
        return self.domain, self.entries

    def __call__(self, arg):
        return self.entries[carrier_index(self.domain, arg)]


_TREES = weakref.WeakValueDictionary()


class Leaf(_Hashed):
    """Trees are hash-consed: structurally equal trees are the same object."""
    __slots__ = ("value", "__weakref__")

    def __new__(cls, value):
        key = ("L", value)
        hit = _TREES.get(key)
        if hit is not None:
            return hit
        self = object.__new__(cls)
        self.value = value
        self._h = hash(key)
        _TREES[key] = self
        return self

    def _key(self):
        return self.value


class Node(_Hashed):
    """An operation node; branches follow the canonical order of the result carrier."""
    __slots__ = ("op", "arg", "branches", "__weakref__")

    def __new__(cls, op, arg, branches):
        branches = tuple(branches)
        key = ("N", op, arg, branches)
        hit = _TREES.get(key)
        if hit is not None:
            return hit
        self = object.__new__(cls)
        self.op, self.arg, self.branches = op, arg, branches
        self._h = hash(key)
        _TREES[key] = self
        return self

    def _key(self):
        return self.op, self.arg, self.branches


SemVal = (BaseElem, TupleV, InjV, FunTable)
FreeTree = (Leaf, Node)
UNIT_V = TupleV(())


# ---------------------------------------------------------------- carriers

_carrier_cache = {}


def enum_carrier(a: ValueType) -> tuple:
    """Every inhabitant of a, in canonical order."""
    hit = _carrier_cache.get(a)
    if hit is not None:
        return hit
    out = tuple(_enum(a))
    _carrier_cache[a] = out
    return out


def carrier_size(a: ValueType) -> int:
    if isinstance(a, Base):
        if a.name not in prims.CARRIERS:
            raise NotFinitelyDenotable(f"base type {a.name} has no finite carrier")
        return len(prims.CARRIERS[a.name])
    if isinstance(a, Prod):
        n = 1
        for t in a.items:
            n *= carrier_size(t)
        return n
    if isinstance(a, Sum):
        return sum(carrier_size(t) for t in a.items)
    if isinstance(a, Arrow):
        if len(a.result.effect.sig):
            raise NotFinitelyDenotable("functions with a nonempty effect have infinitely many denotations")
        return carrier_size(a.result.ret) ** carrier_size(a.arg)
    raise TypeError(a)


def _bounded_size(a, cap):
    """carrier_size(a), or cap + 1 when it is larger; never builds huge integers."""
    if isinstance(a, Arrow):
        if len(a.result.effect.sig):
            raise NotFinitelyDenotable("functions with a nonempty effect have infinitely many denotations")
        base, n = _bounded_size(a.result.ret, cap), _bounded_size(a.arg, cap)
        if base <= 1:
            return base
        out = 1
        for _ in range(n):
            out *= base
            if out > cap:
                return cap + 1
        return out
    if isinstance(a, Prod):
        out = 1
        for t in a.items:
            out = min(out * _bounded_size(t, cap), cap + 1)
        return out
    if isinstance(a, Sum):
        return min(sum(_bounded_size(t, cap) for t in a.items), cap + 1)
    return carrier_size(a)


def _enum(a):
    if _bounded_size(a, CARRIER_LIMIT) > CARRIER_LIMIT:
        raise NotFinitelyDenotable(f"carrier has more than {CARRIER_LIMIT} elements")
    if isinstance(a, Base):
        return [BaseElem(a.name, i) for i in range(len(prims.CARRIERS[a.name]))]
    if isinstance(a, Prod):
        return [TupleV(xs) for xs in itertools.product(*(enum_carrier(t) for t in a.items))]
    if isinstance(a, Sum):
        n = len(a.items)
        return [InjV(i + 1, n, v) for i, t in enumerate(a.items) for v in enum_carrier(t)]
    dom = len(enum_carrier(a.arg))
    leaves = [Leaf(v) for v in enum_carrier(a.result.ret)]
    return [FunTable(a.arg, es) for es in itertools.product(leaves, repeat=dom)]


def carrier_index(a: ValueType, v) -> int:
    """Position of v in enum_carrier(a), by mixed-radix arithmetic."""
    if isinstance(a, Base):
        return v.index
    if isinstance(a, Prod):
        i = 0
        for t, x in zip(a.items, v.items):
            i = i * carrier_size(t) + carrier_index(t, x)
        return i
    if isinstance(a, Sum):
        return sum(carrier_size(t) for t in a.items[:v.tag - 1]) + carrier_index(a.items[v.tag - 1], v.value)
    return enum_carrier(a).index(v)


# ---------------------------------------------------------------- monad structure

def postorder(root):
    """Distinct subtrees of root, children before parents (no recursion)."""
    seen = set()
    out = []
    stack = [(root, False)]
    while stack:
        t, done = stack.pop()
        if done:
            out.append(t)
            continue
        if t in seen:
            continue
        seen.add(t)
        stack.append((t, True))
        if isinstance(t, Node):
            stack.extend((b, False) for b in reversed(t.branches) if b not in seen)
    return out


def tree_depth(t) -> int:
    d = {}
    for n in postorder(t):
        d[n] = 1 + max((d[b] for b in n.branches), default=0) if isinstance(n, Node) else 0
    return d[t]


def graft(t, f: Callable):
    """Substitute f(v) for every leaf v (the monad's bind)."""
    flip = mutation.active("let-graft")
    memo = {}
    for n in postorder(t):
        if isinstance(n, Leaf):
            memo[n] = f(n.value)
        else:
            bs = tuple(memo[b] for b in n.branches)
            memo[n] = Node(n.op, n.arg, bs[::-1] if flip else bs)
    return memo[t]


def generic(op, arg, result_type):
    """The tree performing op once and returning its result."""
    return Node(op, arg, tuple(Leaf(b) for b in enum_carrier(result_type)))


@dataclass
class HandlerAlgebra:
    """Clause semantics: ops maps an operation to f(arg, continuation table) -> tree."""
    ops: dict
    sig: object  # the handled Signature
    ret: Optional[Callable] = None


def handle_fold(alg: HandlerAlgebra, tree, ret: Optional[Callable] = None):
    """Fold a tree through the clauses; leaves go through the return clause."""
    ret = ret or alg.ret or Leaf
    memo = {}
    for n in postorder(tree):
        if isinstance(n, Leaf):
            memo[n] = ret(n.value)
        else:
            ot = alg.sig.lookup(n.op)
            k = FunTable(ot.result, tuple(memo[b] for b in n.branches))
            memo[n] = alg.ops[n.op](n.arg, k)
    return memo[tree]


# ---------------------------------------------------------------- interpretation

def denote_value(env, v):
    """env is a tuple of SemVals; env[0] is de Bruijn index 0."""
    if isinstance(v, Var):
        return env[v.index]
    if isinstance(v, Lam):
        body, eff = v.body, v.effect
        return FunTable(v.arg, tuple(denote_comp((a,) + env, body, eff) for a in enum_carrier(v.arg)))
    if isinstance(v, Tuple):
        return TupleV(denote_value(env, x) for x in v.items)
    if isinstance(v, Proj):
        return denote_value(env, v.value).items[v.index - 1]
    if isinstance(v, Inj):
        return InjV(v.index, v.arity, denote_value(env, v.value))
    if isinstance(v, PrimApp):
        if not v.args:
            base = prims.const_base(v.name)
            return BaseElem(base, prims.const_index(v.name))
        idx = [denote_value(env, a).index for a in v.args]
        return denote_value((), prims.evaluate(v.name, idx))
    raise TypeError(f"not a value: {v!r}")


def denote_comp(env, m, effect: Effect):
    """The tree of m; effect is its ambient effect (for operation result carriers)."""
    if isinstance(m, Return):
        return Leaf(denote_value(env, m.value))
    if isinstance(m, OpCall):
        ot = effect.sig.lookup(m.op)
        return generic(m.op, denote_value(env, m.arg), ot.result)
    if isinstance(m, Let):
        t = denote_comp(env, m.bound, effect)
        body = m.body
        return graft(t, lambda x: denote_comp((x,) + env, body, effect))
    if isinstance(m, App):
        f = denote_value(env, m.fn)
        return f(denote_value(env, m.arg))
    if isinstance(m, Case):
        s = denote_value(env, m.scrutinee)
        return denote_comp((s.value,) + env, m.branches[s.tag - 1], effect)
    if isinstance(m, Handle):
        t = denote_comp(env, m.subject, m.effect)
        alg = handler_algebra(env, m.handler, m.effect.sig, effect)
        body = m.body
        return handle_fold(alg, t, lambda x: denote_comp((x,) + env, body, effect))
    raise TypeError(f"not a computation: {m!r}")


def handler_algebra(env, handler, sig, out_effect) -> HandlerAlgebra:
    ops = {}
    for op in sig.names():
        cl = handler.clause(op)
        ops[op] = _clause_sem(env, cl.body, out_effect)
    return HandlerAlgebra(ops, sig)


def _clause_sem(env, body, eff):
    return lambda a, k: denote_comp((k, a) + env, body, eff)


def denote(ctx: Context, env_values, t, effect: Optional[Effect] = None):
    """Denote t under values for ctx (listed first variable first)."""
    env = tuple(reversed(tuple(env_values)))
    if len(env) != len(ctx):
        raise ValueError("environment does not match the context")
    if isinstance(t, (Return, OpCall, Let, App, Case, Handle)):
        return denote_comp(env, t, effect)
    return denote_value(env, t)


def envs(ctx: Context):
    """Every environment for ctx, as tuples indexed by de Bruijn index."""
    carriers = [enum_carrier(t) for t in reversed(ctx.types())]
    return [tuple(e) for e in itertools.product(*carriers)]


def sem_eq(a, b) -> bool:
    if isinstance(a, FreeTree) != isinstance(b, FreeTree):
        raise TypeError("comparing a tree with a value")
    return a == b


def digest(sem) -> str:
    """A stable content hash; trees are hashed as DAGs, so deep trees are cheap."""
    memo = {}

    def val(v):
        if isinstance(v, FunTable):
            return "{" + ",".join(tree(e) if isinstance(e, FreeTree) else val(e) for e in v.entries) + "}"
        if isinstance(v, TupleV):
            return "<" + ",".join(val(x) for x in v.items) + ">"
        if isinstance(v, InjV):
            return f"in{v.tag}/{v.arity}({val(v.value)})"
        return show(v)

    def tree(t):
        for n in postorder(t):
            if n in memo:
                continue
            if isinstance(n, Leaf):
                txt = "L" + val(n.value)
            else:
                txt = f"N{n.op}({val(n.arg)})[" + ",".join(memo[b] for b in n.branches) + "]"
            memo[n] = hashlib.sha256(txt.encode()).hexdigest()[:16]
        return memo[t]

    if isinstance(sem, FreeTree):
        return tree(sem)
    return hashlib.sha256(val(sem).encode()).hexdigest()[:16]


# ---------------------------------------------------------------- effect theories

def alg_int(mhat, alg: HandlerAlgebra, delta, k: FunTable):
    """Interpret an effect-theory term over a handler algebra at (delta, k).

    delta is the axiom environment (index-ordered tuple); k the continuation table.
    """
    if isinstance(mhat, Return):
        return k(denote_value(delta, mhat.value))
    if isinstance(mhat, Let):
        op = mhat.bound.op
        a = denote_value(delta, mhat.bound.arg)
        ot = alg.sig.lookup(op)
        kont = FunTable(ot.result, tuple(alg_int(mhat.body, alg, (b,) + delta, k)
                                         for b in enum_carrier(ot.result)))
        return alg.ops[op](a, kont)
    if isinstance(mhat, Case):
        s = denote_value(delta, mhat.scrutinee)
        return alg_int(mhat.branches[s.tag - 1], alg, (s.value,) + delta, k)
    raise TypeError("not an effect-theory term")


def alg_int_table(mhat, ax_ctx: Context, result: ValueType, alg: HandlerAlgebra, carrier: CompType):
    """The full table (delta, k) -> element of the carrier."""
    ks = enum_carrier(Arrow(result, carrier))
    return {(d, k): alg_int(mhat, alg, d, k) for d in envs(ax_ctx) for k in ks}


def axiom_context(ax) -> Context:
    names = ax.ctx_names or ("x",) * len(ax.ctx_types)
    return Context(tuple(zip(names, ax.ctx_types)))


def respects_semantic(ctx: Context, handler, theory, c: CompType):
    """Per-axiom Holds/Fails by enumerating environments and continuations."""
    if len(c.effect.sig):
        raise NotFinitelyDenotable("continuations into a nonempty effect have no finite carrier")
    gammas = envs(ctx)
    out = []
    for ax in theory.axioms:
        actx = axiom_context(ax)
        ks = enum_carrier(Arrow(ax.result, c))
        deltas = envs(actx)
        witness = None
        for g in gammas:
            alg = handler_algebra(g, handler, theory.sig, c.effect)
            for d in deltas:
                for k in ks:
                    lv = alg_int(ax.lhs, alg, d, k)
                    rv = alg_int(ax.rhs, alg, d, k)
                    if lv != rv:
                        witness = _witness(ctx, g, actx, d, k, lv, rv)
                        break
                if witness:
                    break
            if witness:
                break
        out.append(AxiomVerdict(ax.name, "Fails" if witness else "Holds", witness))
    return out


def _witness(ctx, g, actx, d, k, lv, rv):
    parts = []
    for names, env in ((ctx.names(), g), (actx.names(), d)):
        for name, val in zip(names, reversed(env)):
            parts.append(f"{name} = {show(val)}")
    parts.append(f"k = {show(k)}")
    return ", ".join(parts) + f"; lhs gives {show(lv)}, rhs gives {show(rv)}"


def check_ops_satisfy_axioms(theory) -> RespectsVerdict:
    """Compare the raw trees of both sides of every axiom (no quotient)."""
    eff = Effect(theory.sig)
    out = []
    for ax in theory.axioms:
        actx = axiom_context(ax)
        witness = None
        for d in envs(actx):
            lt, rt = denote_comp(d, ax.lhs, eff), denote_comp(d, ax.rhs, eff)
            if lt != rt:
                witness = ", ".join(f"{n} = {show(v)}" for n, v in zip(actx.names(), reversed(d)))
                witness = (witness + "; " if witness else "") + f"trees {show(lt, theory.sig)} and {show(rt, theory.sig)} differ"
                break
        out.append(AxiomVerdict(ax.name, "Fails" if witness else "Holds", witness))
    return RespectsVerdict("semantic", tuple(out))


def canonical_algebra(sig) -> HandlerAlgebra:
    """op(a, k) = graft(generic op a, k): the operations of the free monad itself."""
    ops = {}
    for op, ot in sig.ops:
        ops[op] = (lambda o, t: lambda a, k: graft(generic(o, a, t.result), k))(op, ot)
    return HandlerAlgebra(ops, sig)


def trees_up_to_height(sig, ret: ValueType, height: int) -> tuple:
    """All trees over sig with leaves in ret and at most `height` nested nodes."""
    level = [Leaf(v) for v in enum_carrier(ret)]
    for _ in range(height):
        nxt = list(level)
        for op, ot in sig.ops:
            n = len(enum_carrier(ot.result))
            for a in enum_carrier(ot.arg):
                for bs in itertools.product(level, repeat=n):
                    nxt.append(Node(op, a, bs))
        level = list(dict.fromkeys(nxt))
    return tuple(level)


def two_interpretations_agree(theory, carrier: ValueType, height: int = 1):
    """Check algInt over the canonical algebra against grafting the direct denotation.

    Continuations range over every map into trees of bounded height; returns
    a list of (axiom, side, ok, checked count).
    """
    eff = Effect(theory.sig)
    alg = canonical_algebra(theory.sig)
    xs = trees_up_to_height(theory.sig, carrier, height)
    out = []
    for ax in theory.axioms:
        actx = axiom_context(ax)
        dom = enum_carrier(ax.result)
        ks = [FunTable(ax.result, es) for es in itertools.product(xs, repeat=len(dom))]
        for side, mhat in (("lhs", ax.lhs), ("rhs", ax.rhs)):
            ok, count = True, 0
            for d in envs(actx):
                direct = denote_comp(d, mhat, eff)
                for k in ks:
                    count += 1
                    if alg_int(mhat, alg, d, k) != graft(direct, k):
                        ok = False
            out.append((ax.name, side, ok, count))
    return out


# ---------------------------------------------------------------- printing

def show(s, sig=None) -> str:
    if isinstance(s, BaseElem):
        return prims.CARRIERS[s.base][s.index]
    if isinstance(s, TupleV):
        return "<" + ", ".join(show(x, sig) for x in s.items) + ">"
    if isinstance(s, InjV):
        tag = {1: "inl", 2: "inr"}[s.tag] if s.arity == 2 else f"in#{s.tag}/{s.arity}"
        return f"{tag} {_atom(s.value, sig)}"
    if isinstance(s, FunTable):
        keys = enum_carrier(s.domain)
        return "{" + ", ".join(f"{show(a)} -> {show(r, sig)}" for a, r in zip(keys, s.entries)) + "}"
    if isinstance(s, Leaf):
        return show(s.value, sig)
    if isinstance(s, Node):
        if sig is not None and s.op in sig:
            keys = [show(b) for b in enum_carrier(sig.lookup(s.op).result)]
        else:
            keys = [f"#{i + 1}" for i in range(len(s.branches))]
        inner = " ; ".join(f"{k} -> {show(b, sig)}" for k, b in zip(keys, s.branches))
        return f"{s.op}({show(s.arg, sig)}) {{ {inner} }}"
    raise TypeError(s)


def _atom(s, sig):
    txt = show(s, sig)
    return f"({txt})" if isinstance(s, InjV) else txt


def to_json(s):
    if isinstance(s, BaseElem):
        return {"base": s.base, "value": prims.CARRIERS[s.base][s.index]}
    if isinstance(s, TupleV):
        return {"tuple": [to_json(x) for x in s.items]}
    if isinstance(s, InjV):
        return {"inj": s.tag, "arity": s.arity, "value": to_json(s.value)}
    if isinstance(s, FunTable):
        return {"table": [to_json(e) for e in s.entries]}
    if isinstance(s, Leaf):
        return {"leaf": to_json(s.value)}
    return {"op": s.op, "arg": to_json(s.arg), "branches": [to_json(b) for b in s.branches]}
