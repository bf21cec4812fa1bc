"""Abstract syntax for the handler calculus.

Variables are de Bruijn indices (0 is the innermost binder).  Binder and
variable names are printing hints only: they are excluded from equality and
hashing, so two terms compare equal exactly when they are alpha-equivalent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

__all__ = [
    "Span", "ValueType", "Base", "Arrow", "Prod", "Sum", "UNIT", "VOID",
    "OpType", "Signature", "EMPTY_SIG", "Axiom", "EffectTheory", "Effect",
    "PURE", "CompType", "Term", "Value", "Comp", "Var", "Lam", "Tuple",
    "Proj", "Inj", "PrimApp", "App", "Return", "Let", "OpCall", "Clause",
    "Handler", "Handle", "Case", "Context", "shift", "instantiate",
    "subst_value", "free_vars", "alpha_eq", "size", "is_ground",
]


@dataclass(frozen=True, slots=True)
class Span:
    start: int
    end: int
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


# ---------------------------------------------------------------- types

class ValueType:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Base(ValueType):
    name: str


@dataclass(frozen=True, slots=True)
class Arrow(ValueType):
    arg: ValueType
    result: "CompType"


@dataclass(frozen=True, slots=True)
class Prod(ValueType):
    items: tuple

    @property
    def is_unit(self):
        return not self.items


@dataclass(frozen=True, slots=True)
class Sum(ValueType):
    items: tuple


UNIT = Prod(())
# The empty sum.  It only exists so the generator can report an
# uninhabited goal; no value ever has this type.
VOID = Sum(())


@dataclass(frozen=True, slots=True)
class OpType:
    arg: ValueType
    result: ValueType


@dataclass(frozen=True, slots=True)
class Signature:
    """Operation symbols with their types, kept sorted by name."""

    ops: tuple
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        ops = tuple(sorted(self.ops, key=lambda kv: kv[0]))
        for (a, _), (b, _) in zip(ops, ops[1:]):
            if a == b:
                raise ValueError(f"duplicate operation {a!r} in signature")
        object.__setattr__(self, "ops", ops)

    @staticmethod
    def of(mapping, name=None) -> "Signature":
        return Signature(tuple((k, v) for k, v in dict(mapping).items()), name)

    def names(self):
        return tuple(k for k, _ in self.ops)

    def lookup(self, op) -> Optional[OpType]:
        for k, t in self.ops:
            if k == op:
                return t
        return None

    def __contains__(self, op):
        return self.lookup(op) is not None

    def __len__(self):
        return len(self.ops)

    def index(self, op):
        return self.names().index(op)

    def is_ground(self):
        return all(is_ground(t.arg) and is_ground(t.result) for _, t in self.ops)


EMPTY_SIG = Signature(())


@dataclass(frozen=True, slots=True)
class Axiom:
    """A ground equation: ctx |- lhs ~ rhs : result ! sig."""

    name: str = field(compare=False)
    ctx_types: tuple
    lhs: "Comp"
    rhs: "Comp"
    result: ValueType
    ctx_names: tuple = field(default=(), compare=False)


@dataclass(frozen=True, slots=True)
class EffectTheory:
    name: str
    sig: Signature
    axioms: tuple = ()


@dataclass(frozen=True, slots=True, eq=False)
class Effect:
    """The effect part of a computation type: a signature, optionally with a theory.

    Theories are nominal: two effects are equal when their signatures agree
    and they name the same theory (an axiom-free theory counts as none).
    """

    sig: Signature
    theory: Optional[EffectTheory] = None

    def _key(self):
        th = self.theory
        return (self.sig, th.name if th is not None and th.axioms else None)

    def __eq__(self, other):
        return isinstance(other, Effect) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def axioms(self):
        return self.theory.axioms if self.theory is not None else ()


PURE = Effect(EMPTY_SIG)


@dataclass(frozen=True, slots=True)
class CompType:
    ret: ValueType
    effect: Effect

    @property
    def sig(self):
        return self.effect.sig

    @property
    def theory(self):
        return self.effect.theory


def is_ground(t: ValueType) -> bool:
    if isinstance(t, Base):
        return True
    if isinstance(t, (Prod, Sum)):
        return all(is_ground(x) for x in t.items)
    return False


# ---------------------------------------------------------------- terms
#
# Every node implements
#   _map(f, c)   rebuild, calling f(var, c) on each variable with index >= c
#   _fv(c, acc)  add free indices (relative to the term's own scope) to acc
#   _size()      node count


def _map_all(ts, f, c):
    # the same tuple back when no element changed, so untouched subterms stay shared
    out = tuple(t._map(f, c) for t in ts)
    return ts if all(a is b for a, b in zip(out, ts)) else out


class Term:
    __slots__ = ()


class Value(Term):
    __slots__ = ()


class Comp(Term):
    __slots__ = ()


def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Var(Value):
    index: int
    name: str = field(default="x", compare=False)
    span: Optional[Span] = _span()

    def _map(self, f, c):
        return f(self, c) if self.index >= c else self

    def _fv(self, c, acc):
        if self.index >= c:
            acc.add(self.index - c)

    def _size(self):
        return 1


@dataclass(frozen=True, slots=True)
class Lam(Value):
    arg: ValueType
    effect: Optional[Effect]
    body: Comp
    name: str = field(default="x", compare=False)
    span: Optional[Span] = _span()

    def _map(self, f, c):
        b = self.body._map(f, c + 1)
        return self if b is self.body else Lam(self.arg, self.effect, b, self.name, self.span)

    def _fv(self, c, acc):
        self.body._fv(c + 1, acc)

    def _size(self):
        return 1 + self.body._size()


@dataclass(frozen=True, slots=True)
class Tuple(Value):
    items: tuple
    span: Optional[Span] = _span()

    def _map(self, f, c):
        items = _map_all(self.items, f, c)
        return self if items is self.items else Tuple(items, self.span)

    def _fv(self, c, acc):
        for v in self.items:
            v._fv(c, acc)

    def _size(self):
        return 1 + sum(v._size() for v in self.items)


@dataclass(frozen=True, slots=True)
class Proj(Value):
    index: int  # 1-based
    value: Value
    span: Optional[Span] = _span()

    def _map(self, f, c):
        v = self.value._map(f, c)
        return self if v is self.value else Proj(self.index, v, self.span)

    def _fv(self, c, acc):
        self.value._fv(c, acc)

    def _size(self):
        return 1 + self.value._size()


@dataclass(frozen=True, slots=True)
class Inj(Value):
    index: int  # 1-based
    arity: int
    value: Value
    type: Optional[Sum] = None
    span: Optional[Span] = _span()

    def _map(self, f, c):
        v = self.value._map(f, c)
        return self if v is self.value else Inj(self.index, self.arity, v, self.type, self.span)

    def _fv(self, c, acc):
        self.value._fv(c, acc)

    def _size(self):
        return 1 + self.value._size()


@dataclass(frozen=True, slots=True)
class PrimApp(Value):
    name: str
    args: tuple = ()
    span: Optional[Span] = _span()

    def _map(self, f, c):
        if not self.args:
            return self
        args = _map_all(self.args, f, c)
        return self if args is self.args else PrimApp(self.name, args, self.span)

    def _fv(self, c, acc):
        for v in self.args:
            v._fv(c, acc)

    def _size(self):
        return 1 + sum(v._size() for v in self.args)


@dataclass(frozen=True, slots=True)
class App(Comp):
    fn: Value
    arg: Value
    span: Optional[Span] = _span()

    def _map(self, f, c):
        fn, arg = self.fn._map(f, c), self.arg._map(f, c)
        return self if fn is self.fn and arg is self.arg else App(fn, arg, self.span)

    def _fv(self, c, acc):
        self.fn._fv(c, acc)
        self.arg._fv(c, acc)

    def _size(self):
        return 1 + self.fn._size() + self.arg._size()


@dataclass(frozen=True, slots=True)
class Return(Comp):
    value: Value
    span: Optional[Span] = _span()

    def _map(self, f, c):
        v = self.value._map(f, c)
        return self if v is self.value else Return(v, self.span)

    def _fv(self, c, acc):
        self.value._fv(c, acc)

    def _size(self):
        return 1 + self.value._size()


@dataclass(frozen=True, slots=True)
class Let(Comp):
    bound: Comp
    body: Comp
    name: str = field(default="x", compare=False)
    span: Optional[Span] = _span()

    def _map(self, f, c):
        b, n = self.bound._map(f, c), self.body._map(f, c + 1)
        return self if b is self.bound and n is self.body else Let(b, n, self.name, self.span)

    def _fv(self, c, acc):
        self.bound._fv(c, acc)
        self.body._fv(c + 1, acc)

    def _size(self):
        return 1 + self.bound._size() + self.body._size()


@dataclass(frozen=True, slots=True)
class OpCall(Comp):
    op: str
    arg: Value
    span: Optional[Span] = _span()

    def _map(self, f, c):
        a = self.arg._map(f, c)
        return self if a is self.arg else OpCall(self.op, a, self.span)

    def _fv(self, c, acc):
        self.arg._fv(c, acc)

    def _size(self):
        return 1 + self.arg._size()


@dataclass(frozen=True, slots=True)
class Clause:
    """op(x, k) -> body; inside body k is index 0 and x is index 1."""

    op: str
    body: Comp
    x_name: str = field(default="x", compare=False)
    k_name: str = field(default="k", compare=False)
    span: Optional[Span] = _span()

    def _map(self, f, c):
        b = self.body._map(f, c + 2)
        return self if b is self.body else Clause(self.op, b, self.x_name, self.k_name, self.span)


@dataclass(frozen=True, slots=True)
class Handler:
    clauses: tuple = ()
    span: Optional[Span] = _span()

    def __post_init__(self):
        cl = tuple(sorted(self.clauses, key=lambda c: c.op))
        for a, b in zip(cl, cl[1:]):
            if a.op == b.op:
                raise ValueError(f"duplicate handler clause for {a.op!r}")
        object.__setattr__(self, "clauses", cl)

    def ops(self):
        return tuple(c.op for c in self.clauses)

    def clause(self, op) -> Optional[Clause]:
        from . import mutation
        if mutation.active("handle-op-lookup") and self.clauses:
            return self.clauses[-1]
        for c in self.clauses:
            if c.op == op:
                return c
        return None

    def _map(self, f, c):
        cls = _map_all(self.clauses, f, c)
        return self if cls is self.clauses else Handler(cls, self.span)

    def _fv(self, c, acc):
        for cl in self.clauses:
            cl.body._fv(c + 2, acc)

    def _size(self):
        return 1 + sum(cl.body._size() for cl in self.clauses)


@dataclass(frozen=True, slots=True)
class Handle(Comp):
    """handle subject with handler to name. body -- the subject runs under `effect`."""

    subject: Comp
    handler: Handler
    body: Comp
    effect: Effect
    name: str = field(default="x", compare=False)
    span: Optional[Span] = _span()

    def _map(self, f, c):
        s, h, n = self.subject._map(f, c), self.handler._map(f, c), self.body._map(f, c + 1)
        if s is self.subject and h is self.handler and n is self.body:
            return self
        return Handle(s, h, n, self.effect, self.name, self.span)

    def _fv(self, c, acc):
        self.subject._fv(c, acc)
        self.handler._fv(c, acc)
        self.body._fv(c + 1, acc)

    def _size(self):
        return 1 + self.subject._size() + self.handler._size() + self.body._size()


@dataclass(frozen=True, slots=True)
class Case(Comp):
    scrutinee: Value
    branches: tuple
    names: tuple = field(default=(), compare=False)
    span: Optional[Span] = _span()

    @property
    def arity(self):
        return len(self.branches)

    def _map(self, f, c):
        v = self.scrutinee._map(f, c)
        bs = _map_all(self.branches, f, c + 1)
        if v is self.scrutinee and bs is self.branches:
            return self
        return Case(v, bs, self.names, self.span)

    def _fv(self, c, acc):
        self.scrutinee._fv(c, acc)
        for b in self.branches:
            b._fv(c + 1, acc)

    def _size(self):
        return 1 + self.scrutinee._size() + sum(b._size() for b in self.branches)

    def name_of(self, i):
        return self.names[i] if i < len(self.names) else "x"


# ---------------------------------------------------------------- contexts

@dataclass(frozen=True, slots=True)
class Context:
    """Typing context; the last binding is de Bruijn index 0."""

    bindings: tuple = ()

    @staticmethod
    def of(*pairs) -> "Context":
        return Context(tuple(pairs))

    def extend(self, name, ty) -> "Context":
        return Context(self.bindings + ((name, ty),))

    def extend_many(self, pairs) -> "Context":
        return Context(self.bindings + tuple(pairs))

    def lookup(self, index) -> Optional[ValueType]:
        if 0 <= index < len(self.bindings):
            return self.bindings[-1 - index][1]
        return None

    def name(self, index):
        return self.bindings[-1 - index][0]

    def names(self):
        return [n for n, _ in self.bindings]

    def types(self):
        return [t for _, t in self.bindings]

    def index_of(self, name) -> Optional[int]:
        for i in range(len(self.bindings) - 1, -1, -1):
            if self.bindings[i][0] == name:
                return len(self.bindings) - 1 - i
        return None

    def __len__(self):
        return len(self.bindings)


# ---------------------------------------------------------------- substitution

def shift(t, d, cutoff=0):
    """Add d to every variable index >= cutoff."""
    if d == 0:
        return t
    return t._map(lambda v, c: Var(v.index + d, v.name, v.span), cutoff)


def instantiate(body, values):
    """Replace indices 0..n-1 of body by values[0..n-1]; lower the rest by n.

    The values live in the scope that surrounds the n binders being removed.
    """
    n = len(values)
    if n == 0:
        return body
    cache = {}

    def f(v, c):
        j = v.index - c
        if j < n:
            key = (j, c)
            r = cache.get(key)
            if r is None:
                r = cache[key] = shift(values[j], c)
            return r
        return Var(v.index - n, v.name, v.span)

    return body._map(f, 0)


def subst_value(t, sigma):
    """Simultaneous capture-avoiding substitution {index: Value} at the top scope."""
    if not sigma:
        return t

    def f(v, c):
        j = v.index - c
        if j in sigma:
            return shift(sigma[j], c)
        return v

    return t._map(f, 0)


def free_vars(t) -> frozenset:
    acc = set()
    t._fv(0, acc)
    return frozenset(acc)


def alpha_eq(a, b) -> bool:
    return a == b


def size(t) -> int:
    return t._size()

