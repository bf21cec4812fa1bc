"""Typed CPS translation into System F, with a checker and an NbE normalizer.

A computation of type A ! S becomes a polymorphic function taking a return
continuation and a record with one clause per operation of S (in sorted
order).  Base types and sums have no target counterpart, so they are
Church encoded; primitives become decision trees over their arguments.

Target terms use de Bruijn indices for both term and type variables, so
alpha-equivalence is structural equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from . import mutation, prims
from .syntax import (
    App, Arrow, Base, Case, CompType, Context, Handle, Inj, Lam, Let, OpCall,
    PrimApp, Prod, Proj, Return, Sum, Tuple, Var,
)


class TargetTypeError(Exception):
    pass


# ---------------------------------------------------------------- target syntax

# `bound` is one more than the largest free type variable (0 when closed),
# so shifting and substitution can return closed subtrees as they are

@dataclass(frozen=True, slots=True)
class TyVar:
    index: int
    bound: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("negative type variable index")
        object.__setattr__(self, "bound", self.index + 1)


@dataclass(frozen=True, slots=True)
class Forall:
    body: object
    bound: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "bound", max(self.body.bound - 1, 0))


@dataclass(frozen=True, slots=True)
class TArrow:
    arg: object
    result: object
    bound: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "bound", max(self.arg.bound, self.result.bound))


@dataclass(frozen=True, slots=True)
class TProd:
    items: tuple = ()
    bound: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "bound", max((x.bound for x in self.items), default=0))


@dataclass(frozen=True, slots=True)
class TmVar:
    index: int


@dataclass(frozen=True, slots=True)
class TmLam:
    annot: object
    body: object


@dataclass(frozen=True, slots=True)
class TmApp:
    fn: object
    arg: object


@dataclass(frozen=True, slots=True)
class TyLam:
    body: object


@dataclass(frozen=True, slots=True)
class TyApp:
    term: object
    type: object


@dataclass(frozen=True, slots=True)
class TmTuple:
    items: tuple = ()


@dataclass(frozen=True, slots=True)
class TmProj:
    index: int  # 1-based
    term: object


def apps(f, *args):
    for a in args:
        f = TmApp(f, a)
    return f


# ---------------------------------------------------------------- type operations

def ty_shift(t, d, cutoff=0):
    if t.bound <= cutoff or not d:
        return t
    if isinstance(t, TyVar):
        return TyVar(t.index + d) if t.index >= cutoff else t
    if isinstance(t, Forall):
        return Forall(ty_shift(t.body, d, cutoff + 1))
    if isinstance(t, TArrow):
        return TArrow(ty_shift(t.arg, d, cutoff), ty_shift(t.result, d, cutoff))
    return TProd(tuple(ty_shift(x, d, cutoff) for x in t.items))


def ty_subst(t, s, j=0):
    """Replace variable j by s in t and lower the variables above it."""
    if t.bound <= j:
        return t
    if isinstance(t, TyVar):
        if t.index == j:
            return ty_shift(s, j)
        return TyVar(t.index - 1) if t.index > j else t
    if isinstance(t, Forall):
        return Forall(ty_subst(t.body, s, j + 1))
    if isinstance(t, TArrow):
        return TArrow(ty_subst(t.arg, s, j), ty_subst(t.result, s, j))
    return TProd(tuple(ty_subst(x, s, j) for x in t.items))


def ty_wf(t, depth) -> bool:
    return isinstance(t, (TyVar, Forall, TArrow, TProd)) and t.bound <= depth


# ---------------------------------------------------------------- type translation

_X = TyVar(0)


def _church(n):
    t = _X
    for _ in range(n):
        t = TArrow(_X, t)
    return Forall(t)


@lru_cache(maxsize=None)
def cps_type(a):
    """Target type of a source value type or computation type."""
    if isinstance(a, CompType):
        return Forall(TArrow(TArrow(cps_type(a.ret), _X), TArrow(handler_type(a.effect.sig, _X), _X)))
    if isinstance(a, Base):
        return _church(len(prims.CARRIERS[a.name]))
    if isinstance(a, Prod):
        return TProd(tuple(cps_type(x) for x in a.items))
    if isinstance(a, Sum):
        t = _X
        for x in reversed(a.items):
            t = TArrow(TArrow(cps_type(x), _X), t)
        return Forall(t)
    if isinstance(a, Arrow):
        return TArrow(cps_type(a.arg), cps_type(a.result))
    raise TypeError(a)


@lru_cache(maxsize=None)
def handler_type(sig, answer):
    """The record of clause types, one per operation in sorted order.

    A record with a single clause is the clause itself.
    """
    items = tuple(
        TArrow(TProd((cps_type(ot.arg), TArrow(cps_type(ot.result), answer))), answer)
        for _, ot in sig.ops)
    return items[0] if len(items) == 1 else TProd(items)


def record(items):
    return items[0] if len(items) == 1 else TmTuple(tuple(items))


def select(sig, op, h):
    return h if len(sig) == 1 else TmProj(sig.index(op) + 1, h)


# ---------------------------------------------------------------- term translation

@lru_cache(maxsize=None)
def _prim_fun(name):
    """A closed target function: a decision tree over its Church-encoded arguments."""
    params, result = prims.prim_type(name)
    rt = cps_type(result)
    n = len(params)
    consts = _Translate(Context())

    def tree(j, chosen):
        if j == n:
            return consts.value(prims.evaluate(name, chosen), [], [], n)[0]
        size = len(prims.CARRIERS[params[j].name])
        return apps(TyApp(TmVar(n - 1 - j), rt), *(tree(j + 1, chosen + [c]) for c in range(size)))

    f = tree(0, [])
    for p in reversed(params):
        f = TmLam(cps_type(p), f)
    return f


class _Translate:
    """Source variables map to target levels (or a projection of one)."""

    def __init__(self, ctx: Context):
        self.ctx_types = list(reversed(ctx.types()))  # index order

    def ref(self, entry, depth):
        kind, level = entry[0], entry[-1]
        v = TmVar(depth - 1 - level)
        return TmProj(entry[1], v) if kind == "proj" else v

    # types are synthesized alongside; tys is index-ordered
    def value(self, v, env, tys, depth):
        if isinstance(v, Var):
            return self.ref(env[v.index], depth), tys[v.index]
        if isinstance(v, Lam):
            body, ret = self.comp(v.body, [("var", depth)] + env, [v.arg] + tys, depth + 1, v.effect, None)
            return TmLam(cps_type(v.arg), body), Arrow(v.arg, CompType(ret, v.effect))
        if isinstance(v, Tuple):
            parts = [self.value(x, env, tys, depth) for x in v.items]
            return TmTuple(tuple(p[0] for p in parts)), Prod(tuple(p[1] for p in parts))
        if isinstance(v, Proj):
            t, ty = self.value(v.value, env, tys, depth)
            return TmProj(v.index, t), ty.items[v.index - 1]
        if isinstance(v, Inj):
            sum_t = v.type
            n = len(sum_t.items)
            inner, _ = self.value(v.value, env, tys, depth + n)
            t = apps(TmVar(n - v.index), inner)
            for x in reversed(sum_t.items):
                t = TmLam(TArrow(cps_type(x), _X), t)
            return TyLam(t), sum_t
        if isinstance(v, PrimApp):
            return self.prim(v, env, tys, depth)
        raise TypeError(f"not a value: {v!r}")

    def prim(self, v, env, tys, depth):
        params, result = prims.prim_type(v.name)
        if not v.args:
            n = len(prims.CARRIERS[result.name])
            i = prims.const_index(v.name)
            t = TmVar(n - 1 - i)
            for _ in range(n):
                t = TmLam(_X, t)
            return TyLam(t), result
        args = [self.value(a, env, tys, depth)[0] for a in v.args]
        return apps(_prim_fun(v.name), *args), result

    def comp(self, m, env, tys, depth, eff, expected):
        """(target, return type) of m at effect eff; expected is the return type if known."""
        if isinstance(m, App):
            f, ft = self.value(m.fn, env, tys, depth)
            a, _ = self.value(m.arg, env, tys, depth)
            return TmApp(f, a), ft.result.ret
        if isinstance(m, Return):
            v, ty = self.value(m.value, env, tys, depth + 2)
            k = TArrow(cps_type(ty), _X)
            return TyLam(TmLam(k, TmLam(handler_type(eff.sig, _X), TmApp(TmVar(1), v)))), ty
        if isinstance(m, Let):
            bound, a = self.comp(m.bound, env, tys, depth + 2, eff, None)
            body, b = self.comp(m.body, [("var", depth + 2)] + env, [a] + tys, depth + 3, eff, expected)
            k = TArrow(cps_type(b), _X)
            # depth: k = depth, h = depth+1, x = depth+2
            inner = apps(TyApp(body, _X), TmVar(2), TmVar(1))
            t = apps(TyApp(bound, _X), TmLam(cps_type(a), inner), TmVar(0))
            return TyLam(TmLam(k, TmLam(handler_type(eff.sig, _X), t))), b
        if isinstance(m, OpCall):
            ot = eff.sig.lookup(m.op)
            v, _ = self.value(m.arg, env, tys, depth + 2)
            clause = select(eff.sig, m.op, TmVar(0))
            kont = TmVar(1)
            if mutation.active("cps-op"):
                again = select(eff.sig, m.op, TmVar(1))
                kont = TmLam(cps_type(ot.result), TmApp(again, TmTuple((v_shift(v), TmVar(2)))))
            body = TmApp(clause, TmTuple((v, kont)))
            k = TArrow(cps_type(ot.result), _X)
            return TyLam(TmLam(k, TmLam(handler_type(eff.sig, _X), body))), ot.result
        if isinstance(m, Handle):
            subj, a = self.comp(m.subject, env, tys, depth, m.effect, None)
            body, b = self.comp(m.body, [("var", depth)] + env, [a] + tys, depth + 1, eff, expected)
            c = CompType(b, eff)
            cc = cps_type(c)
            by_op = {cl.op: cl for cl in m.handler.clauses}
            clauses = []
            for op, ot in m.effect.sig.ops:
                cl = by_op[op]
                penv = [("proj", 2, depth), ("proj", 1, depth)] + env
                ptys = [Arrow(ot.result, c), ot.arg] + tys
                cb, _ = self.comp(cl.body, penv, ptys, depth + 1, eff, b)
                clauses.append(TmLam(TProd((cps_type(ot.arg), TArrow(cps_type(ot.result), cc))), cb))
            return apps(TyApp(subj, cc), TmLam(cps_type(a), body), record(clauses)), b
        if isinstance(m, Case):
            s, st = self.value(m.scrutinee, env, tys, depth)
            branches = []
            ret = expected
            for i, br in enumerate(m.branches):
                bt, r = self.comp(br, [("var", depth)] + env, [st.items[i]] + tys, depth + 1, eff, ret)
                ret = r
                branches.append(TmLam(cps_type(st.items[i]), bt))
            if ret is None:
                raise TypeError("cannot translate an empty case whose type is not determined")
            return apps(TyApp(s, cps_type(CompType(ret, eff))), *branches), ret
        raise TypeError(f"not a computation: {m!r}")


def v_shift(t, d=1, cutoff=0):
    """Shift free term variables of a target term."""
    if isinstance(t, TmVar):
        return TmVar(t.index + d) if t.index >= cutoff else t
    if isinstance(t, TmLam):
        return TmLam(t.annot, v_shift(t.body, d, cutoff + 1))
    if isinstance(t, TmApp):
        return TmApp(v_shift(t.fn, d, cutoff), v_shift(t.arg, d, cutoff))
    if isinstance(t, TyLam):
        return TyLam(v_shift(t.body, d, cutoff))
    if isinstance(t, TyApp):
        return TyApp(v_shift(t.term, d, cutoff), t.type)
    if isinstance(t, TmTuple):
        return TmTuple(tuple(v_shift(x, d, cutoff) for x in t.items))
    return TmProj(t.index, v_shift(t.term, d, cutoff))


def cps_term(ctx: Context, t, effect=None, expected=None):
    """Translate a value, or a computation at the given effect."""
    tr = _Translate(ctx)
    n = len(ctx)
    env = [("var", n - 1 - i) for i in range(n)]
    tys = tr.ctx_types
    if isinstance(t, (Return, Let, App, OpCall, Handle, Case)):
        if effect is None:
            raise ValueError("translating a computation needs its effect")
        return tr.comp(t, env, tys, n, effect, expected)[0]
    return tr.value(t, env, tys, n)[0]


def cps_context(ctx: Context) -> tuple:
    """Target types of ctx, index-ordered."""
    return tuple(cps_type(a) for a in reversed(ctx.types()))


# ---------------------------------------------------------------- target typechecking

def target_typecheck(ty_depth, ctx, t):
    """The type of t; ctx lists term variable types, index 0 first."""
    env = None
    for a in reversed(tuple(ctx)):
        env = ((a, ty_depth), env)
    return _check(ty_depth, env, t)


def _check(depth, env, t):
    # env is a cons list of (type, depth at binding); types are shifted on lookup
    if isinstance(t, TmVar):
        cell, i = env, t.index
        while cell is not None and i:
            cell, i = cell[1], i - 1
        if cell is None or i < 0:
            raise TargetTypeError(f"unbound variable {t.index}")
        a, bound = cell[0]
        return ty_shift(a, depth - bound) if depth != bound else a
    if isinstance(t, TmLam):
        if not ty_wf(t.annot, depth):
            raise TargetTypeError("ill-scoped annotation")
        return TArrow(t.annot, _check(depth, ((t.annot, depth), env), t.body))
    if isinstance(t, TmApp):
        ft = _check(depth, env, t.fn)
        at = _check(depth, env, t.arg)
        if not isinstance(ft, TArrow):
            raise TargetTypeError("application of a non-function")
        if ft.arg != at:
            raise TargetTypeError("argument type mismatch")
        return ft.result
    if isinstance(t, TyLam):
        return Forall(_check(depth + 1, env, t.body))
    if isinstance(t, TyApp):
        ft = _check(depth, env, t.term)
        if not isinstance(ft, Forall):
            raise TargetTypeError("type application of a non-polymorphic term")
        if not ty_wf(t.type, depth):
            raise TargetTypeError("ill-scoped type argument")
        return ty_subst(ft.body, t.type)
    if isinstance(t, TmTuple):
        return TProd(tuple(_check(depth, env, x) for x in t.items))
    if isinstance(t, TmProj):
        pt = _check(depth, env, t.term)
        if not isinstance(pt, TProd) or not 1 <= t.index <= len(pt.items):
            raise TargetTypeError("bad projection")
        return pt.items[t.index - 1]
    raise TargetTypeError(f"not a target term: {t!r}")


# ---------------------------------------------------------------- normalization by evaluation
# Semantic types use levels for type variables; Forall keeps its syntactic
# body with an environment.

@dataclass(frozen=True)
class SVar:
    level: int


@dataclass(frozen=True)
class SArrow:
    arg: object
    result: object


@dataclass(frozen=True)
class SProd:
    items: tuple


@dataclass(frozen=True)
class SForall:
    body: object
    env: tuple


def eval_type(t, tenv):
    if isinstance(t, TyVar):
        return tenv[t.index]
    if isinstance(t, TArrow):
        return SArrow(eval_type(t.arg, tenv), eval_type(t.result, tenv))
    if isinstance(t, TProd):
        return SProd(tuple(eval_type(x, tenv) for x in t.items))
    return SForall(t.body, tenv)


def inst(s: SForall, arg):
    return eval_type(s.body, (arg,) + s.env)


def quote_type(s, tdepth):
    if isinstance(s, SVar):
        return TyVar(tdepth - 1 - s.level)
    if isinstance(s, SArrow):
        return TArrow(quote_type(s.arg, tdepth), quote_type(s.result, tdepth))
    if isinstance(s, SProd):
        return TProd(tuple(quote_type(x, tdepth) for x in s.items))
    return Forall(quote_type(inst(s, SVar(tdepth)), tdepth + 1))


@dataclass(slots=True)
class VLam:
    body: object
    env: tuple
    tenv: tuple


@dataclass(slots=True)
class VTyLam:
    body: object
    env: tuple
    tenv: tuple


@dataclass(slots=True)
class VTuple:
    items: tuple


@dataclass(slots=True)
class VNe:
    ne: object


@dataclass(slots=True)
class NVar:
    level: int


@dataclass(slots=True)
class NApp:
    fn: object
    arg: object


@dataclass(slots=True)
class NTyApp:
    fn: object
    type: object


@dataclass(slots=True)
class NProj:
    index: int
    ne: object


def _lookup(env, i):
    # environments are cons cells (value, rest), innermost first
    while i:
        env = env[1]
        i -= 1
    return env[0]


def _eval(t, env, tenv):
    if isinstance(t, TmVar):
        return _lookup(env, t.index)
    if isinstance(t, TmLam):
        return VLam(t.body, env, tenv)
    if isinstance(t, TmApp):
        return _apply(_eval(t.fn, env, tenv), _eval(t.arg, env, tenv))
    if isinstance(t, TyLam):
        return VTyLam(t.body, env, tenv)
    if isinstance(t, TyApp):
        return _tyapply(_eval(t.term, env, tenv), eval_type(t.type, tenv))
    if isinstance(t, TmTuple):
        return VTuple(tuple(_eval(x, env, tenv) for x in t.items))
    return _proj(_eval(t.term, env, tenv), t.index)


def _apply(f, a):
    if isinstance(f, VLam):
        return _eval(f.body, (a, f.env), f.tenv)
    return VNe(NApp(f.ne, a))


def _tyapply(f, s):
    if isinstance(f, VTyLam):
        return _eval(f.body, f.env, (s,) + f.tenv)
    return VNe(NTyApp(f.ne, s))


def _proj(v, i):
    if isinstance(v, VTuple):
        return v.items[i - 1]
    return VNe(NProj(i, v.ne))


class _Quote:
    def __init__(self, var_types, tdepth):
        self.var_types = list(var_types)  # level-ordered semantic types
        self.tdepth = tdepth

    def value(self, s, v):
        if isinstance(s, SArrow):
            lvl = len(self.var_types)
            self.var_types.append(s.arg)
            try:
                body = self.value(s.result, _apply(v, VNe(NVar(lvl))))
            finally:
                self.var_types.pop()
            return TmLam(quote_type(s.arg, self.tdepth), body)
        if isinstance(s, SProd):
            return TmTuple(tuple(self.value(x, _proj(v, i + 1)) for i, x in enumerate(s.items)))
        if isinstance(s, SForall):
            a = SVar(self.tdepth)
            self.tdepth += 1
            try:
                body = self.value(inst(s, a), _tyapply(v, a))
            finally:
                self.tdepth -= 1
            return TyLam(body)
        if not isinstance(v, VNe):
            raise TargetTypeError("value does not match its type during readback")
        return self.neutral(v.ne)[0]

    def neutral(self, n):
        if isinstance(n, NVar):
            return TmVar(len(self.var_types) - 1 - n.level), self.var_types[n.level]
        if isinstance(n, NApp):
            f, s = self.neutral(n.fn)
            return TmApp(f, self.value(s.arg, n.arg)), s.result
        if isinstance(n, NTyApp):
            f, s = self.neutral(n.fn)
            return TyApp(f, quote_type(n.type, self.tdepth)), inst(s, n.type)
        f, s = self.neutral(n.ne)
        return TmProj(n.index, f), s.items[n.index - 1]


def target_normalize(t, ctx=(), ty=None):
    """Beta-normal eta-long form of t; ctx lists free variable types (index 0 first, closed)."""
    ctx = tuple(ctx)
    if ty is None:
        ty = target_typecheck(0, ctx, t)
    n = len(ctx)
    env = None
    for i in reversed(range(n)):
        env = (VNe(NVar(n - 1 - i)), env)
    var_types = [eval_type(ctx[n - 1 - l], ()) for l in range(n)]
    return _Quote(var_types, 0).value(eval_type(ty, ()), _eval(t, env, ()))


def target_eq(t1, t2, ctx=()) -> bool:
    ctx = tuple(ctx)
    a = target_typecheck(0, ctx, t1)
    b = target_typecheck(0, ctx, t2)
    if a != b:
        raise TargetTypeError("comparing terms of different types")
    return target_normalize(t1, ctx, a) == target_normalize(t2, ctx, b)


def size(t) -> int:
    if isinstance(t, TmVar):
        return 1
    if isinstance(t, (TmLam, TyLam)):
        return 1 + size(t.body)
    if isinstance(t, TmApp):
        return 1 + size(t.fn) + size(t.arg)
    if isinstance(t, TyApp):
        return 1 + size(t.term)
    if isinstance(t, TmTuple):
        return 1 + sum(size(x) for x in t.items)
    return 1 + size(t.term)


# ---------------------------------------------------------------- printing

def print_type(t, names=()):
    return _ptype(t, list(names), 0)


def _tvname(i):
    return f"X{i}"


def _ptype(t, names, prec):
    if isinstance(t, TyVar):
        return names[t.index] if t.index < len(names) else f"?{t.index}"
    if isinstance(t, TProd):
        if not t.items:
            return "1"
        if len(t.items) == 1:
            return f"prod({_ptype(t.items[0], names, 0)})"
        s = " * ".join(_ptype(x, names, 2) for x in t.items)
        return f"({s})" if prec >= 2 else s
    if isinstance(t, TArrow):
        s = f"{_ptype(t.arg, names, 1)} -> {_ptype(t.result, names, 0)}"
        return f"({s})" if prec >= 1 else s
    v = _tvname(len(names))
    s = f"forall {v}. {_ptype(t.body, [v] + names, 0)}"
    return f"({s})" if prec >= 1 else s


def print_term(t, names=(), tnames=()):
    """Named rendering with a deterministic fresh-name supply (x0, x1, ..., X0, ...)."""
    return _pterm(t, list(names), list(tnames), 0)


def _pterm(t, names, tnames, prec):
    if isinstance(t, TmVar):
        return names[t.index] if t.index < len(names) else f"?{t.index}"
    if isinstance(t, TmLam):
        v = f"x{len(names)}"
        s = f"\\{v} : {_ptype(t.annot, tnames, 0)}. {_pterm(t.body, [v] + names, tnames, 0)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, TyLam):
        v = _tvname(len(tnames))
        s = f"/\\{v}. {_pterm(t.body, names, [v] + tnames, 0)}"
        return f"({s})" if prec > 0 else s
    if isinstance(t, TmApp):
        s = f"{_pterm(t.fn, names, tnames, 1)} {_pterm(t.arg, names, tnames, 2)}"
        return f"({s})" if prec > 1 else s
    if isinstance(t, TyApp):
        s = f"{_pterm(t.term, names, tnames, 1)} [{_ptype(t.type, tnames, 0)}]"
        return f"({s})" if prec > 1 else s
    if isinstance(t, TmTuple):
        return "<" + ", ".join(_pterm(x, names, tnames, 0) for x in t.items) + ">"
    s = f"pi{t.index} {_pterm(t.term, names, tnames, 2)}"
    return f"({s})" if prec > 1 else s


def type_to_json(t):
    if isinstance(t, TyVar):
        return {"tyvar": t.index}
    if isinstance(t, Forall):
        return {"forall": type_to_json(t.body)}
    if isinstance(t, TArrow):
        return {"arrow": [type_to_json(t.arg), type_to_json(t.result)]}
    return {"prod": [type_to_json(x) for x in t.items]}


def term_to_json(t):
    if isinstance(t, TmVar):
        return {"var": t.index}
    if isinstance(t, TmLam):
        return {"lam": type_to_json(t.annot), "body": term_to_json(t.body)}
    if isinstance(t, TmApp):
        return {"app": [term_to_json(t.fn), term_to_json(t.arg)]}
    if isinstance(t, TyLam):
        return {"tylam": term_to_json(t.body)}
    if isinstance(t, TyApp):
        return {"tyapp": term_to_json(t.term), "type": type_to_json(t.type)}
    if isinstance(t, TmTuple):
        return {"tuple": [term_to_json(x) for x in t.items]}
    return {"proj": t.index, "term": term_to_json(t.term)}
