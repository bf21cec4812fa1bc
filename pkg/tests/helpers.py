"""Small generators shared by the test modules."""

import random

from effcore.freemodel import (
    FunTable, HandlerAlgebra, Leaf, Node, UNIT_V, enum_carrier, generic, graft, handle_fold,
)
from effcore.generate import CH, TICK, UU, GenConfig, gen_well_typed
from effcore.prims import BOOL, INT
from effcore.syntax import UNIT, CompType, Context, Effect, OpType, Prod, Signature

CTX = Context.of(("a", BOOL), ("b", UNIT), ("c", UU), ("d", INT))
GOALS = (
    CompType(BOOL, Effect(CH)),
    CompType(INT, Effect(TICK)),
    CompType(Prod((BOOL, UU)), Effect(CH)),
)


def term_in(seed, ctx=CTX, depth=4, goal=None):
    """(goal type, well-typed computation in ctx)."""
    rng = random.Random(seed)
    goal = goal or GOALS[rng.randrange(len(GOALS))]
    cfg = GenConfig(seed=seed, max_depth=depth, thunk_density=0.0)
    return goal, gen_well_typed(cfg, goal, ctx, rng)


def value_in(seed, ty, ctx=CTX, depth=2):
    cfg = GenConfig(seed=seed, max_depth=depth, thunk_density=0.0)
    return gen_well_typed(cfg, ty, ctx, random.Random(seed))


def closing_subst(seed, ctx=CTX, target=Context()):
    """Index-keyed values for every variable of ctx, well-typed in target."""
    return {i: value_in(seed + 31 * i, ctx.lookup(i), target) for i in range(len(ctx))}


# ---------------------------------------------------------------- free-model trees

HANDLED = Signature.of({"choice": OpType(UNIT, UU), "tick": OpType(UNIT, UNIT)}, "ChTick")
OUTER = Signature.of({"out": OpType(UNIT, UNIT)}, "Out")
LEAVES = enum_carrier(BOOL)


def random_tree(rng, depth, sig=HANDLED, leaves=LEAVES):
    if depth <= 0 or rng.random() < 0.3:
        return Leaf(rng.choice(leaves))
    op, ot = rng.choice(sig.ops)
    arg = rng.choice(enum_carrier(ot.arg))
    return Node(op, arg, [random_tree(rng, depth - 1, sig, leaves) for _ in enum_carrier(ot.result)])


def random_kleisli(rng, depth, sig=HANDLED, domain=LEAVES):
    """A map from domain values to trees, given by a lookup table."""
    table = {v: random_tree(rng, depth, sig) for v in domain}
    return table.__getitem__


def random_clause(rng, ot):
    """Clause semantics (arg, continuation table) -> tree over OUTER."""
    dom = enum_carrier(ot.result)
    first, last = dom[0], dom[-1]
    c = rng.randrange(5)
    if c == 0:
        return lambda a, k: k(first)
    if c == 1:
        return lambda a, k: k(last)
    if c == 2:
        return lambda a, k: graft(k(first), lambda _: k(last))
    if c == 3:
        return lambda a, k: Node("out", UNIT_V, (k(last),))
    b = rng.choice(LEAVES)
    return lambda a, k: Leaf(b)


def random_algebra(rng):
    return HandlerAlgebra({op: random_clause(rng, ot) for op, ot in HANDLED.ops}, HANDLED)


def random_return_clause(rng):
    return random_kleisli(rng, 2, OUTER)


def free_model_laws(seed):
    """Monad and handler laws on one random instance; returns failed law names."""
    rng = random.Random(seed)
    t = random_tree(rng, 4)
    f, g = random_kleisli(rng, 3), random_kleisli(rng, 3)
    v = rng.choice(LEAVES)
    alg, ret = random_algebra(rng), random_return_clause(rng)
    bad = []
    if graft(Leaf(v), f) != f(v):
        bad.append("left-unit")
    if graft(t, Leaf) != t:
        bad.append("right-unit")
    if graft(graft(t, f), g) != graft(t, lambda x: graft(f(x), g)):
        bad.append("associativity")
    if handle_fold(alg, Leaf(v), ret) != ret(v):
        bad.append("handle-unit")
    # folding a grafted tree = folding the outer tree with folded leaves
    if handle_fold(alg, graft(t, f), ret) != handle_fold(alg, t, lambda x: handle_fold(alg, f(x), ret)):
        bad.append("handle-mult")
    op, ot = rng.choice(HANDLED.ops)
    a = rng.choice(enum_carrier(ot.arg))
    k = random_kleisli(rng, 2, domain=enum_carrier(ot.result))
    lhs = handle_fold(alg, graft(generic(op, a, ot.result), k), ret)
    table = FunTable(ot.result, [handle_fold(alg, k(b), ret) for b in enum_carrier(ot.result)])
    if lhs != alg.ops[op](a, table):
        bad.append("handle-op")
    return bad
