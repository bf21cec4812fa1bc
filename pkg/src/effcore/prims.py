"""Base types and primitive functions.

Every base type has a finite carrier.  A base element is written as a
nullary primitive application (``true``, ``3``); primitives compute only
when all their arguments are such constants.
"""

from dataclasses import dataclass
from typing import Callable, Optional

from .syntax import UNIT, Base, Inj, PrimApp, Sum, Tuple, Value, ValueType

BOOL = Base("bool")
INT = Base("int4")

# canonical carrier order per base type
CARRIERS = {
    "bool": ("false", "true"),
    "int4": ("0", "1", "2", "3"),
}

BASES = {name: Base(name) for name in CARRIERS}

_CONST_TYPE = {c: name for name, cs in CARRIERS.items() for c in cs}

BOOL_SUM = Sum((UNIT, UNIT))


@dataclass(frozen=True)
class Primitive:
    name: str
    params: tuple
    result: ValueType
    impl: Callable  # tuple of carrier indices -> closed ground Value


def const(base: str, i: int) -> PrimApp:
    return PrimApp(CARRIERS[base][i])


def _b(x):
    return const("bool", int(bool(x)))


def _n(x):
    return const("int4", x % 4)


PRIMITIVES = {
    p.name: p for p in [
        Primitive("not", (BOOL,), BOOL, lambda a: _b(not a[0])),
        Primitive("and", (BOOL, BOOL), BOOL, lambda a: _b(a[0] and a[1])),
        Primitive("or", (BOOL, BOOL), BOOL, lambda a: _b(a[0] or a[1])),
        Primitive("add", (INT, INT), INT, lambda a: _n(a[0] + a[1])),
        Primitive("eq", (INT, INT), BOOL, lambda a: _b(a[0] == a[1])),
        Primitive("test", (BOOL,), BOOL_SUM,
                  lambda a: Inj(1 if a[0] else 2, 2, Tuple(()), BOOL_SUM)),
    ]
}


def is_const(v) -> bool:
    return isinstance(v, PrimApp) and not v.args and v.name in _CONST_TYPE


def const_base(name) -> Optional[str]:
    return _CONST_TYPE.get(name)


def const_index(name) -> int:
    return CARRIERS[_CONST_TYPE[name]].index(name)


def is_prim_name(name) -> bool:
    return name in PRIMITIVES or name in _CONST_TYPE


def prim_type(name):
    """(param types, result type) of a primitive or constant name."""
    if name in _CONST_TYPE:
        return (), BASES[_CONST_TYPE[name]]
    p = PRIMITIVES[name]
    return p.params, p.result


def delta(v: PrimApp) -> Optional[Value]:
    """One delta step, or None if some argument is not yet a constant."""
    if not v.args:
        return None
    if not all(is_const(a) for a in v.args):
        return None
    return PRIMITIVES[v.name].impl(tuple(const_index(a.name) for a in v.args))


def evaluate(name, indices):
    """The primitive on carrier indices."""
    return PRIMITIVES[name].impl(tuple(indices))
