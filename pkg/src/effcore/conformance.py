"""Cross-checking the semantics against each other.

Every program is run with the small-step evaluator.  Along the trace the
runner checks that types are preserved, that the final term has a normal-form
shape, that each step is a provable equation, that the free-model denotation
never changes, and that the CPS image keeps the same beta-eta normal form.
The report is plain JSON with no timings, so equal inputs give equal bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import replace as dc_replace
from importlib import resources

from . import cps, equations, freemodel, operational, surface
from .generate import BOOL, INT, UU, GenConfig, _Gen, gen_program
from .syntax import (
    PURE, UNIT, Case, CompType, Context, Effect, Handle, Lam, Let, OpCall,
    Return, Sum, Var, instantiate, shift,
)
from .typecheck import TypeCheckError, check_term

SCHEMA = "effcore-report/1"
FUEL = 10_000
FLAGS = ("preservation", "classification", "equational", "semantic", "cps")

_SHAPES = {
    operational.NormalReturn: "return",
    operational.NormalOp: "op",
    operational.NormalStuckProj: "stuck-proj",
}


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _distinct(xs):
    out = []
    for x in xs:
        if not out or out[-1] != x:
            out.append(x)
    return out


def check_program(pid, m, ty: CompType, value_reduction=False, fuel=FUEL, mode="eff+"):
    """One report record for the closed computation m of type ty."""
    errors = []
    outcome, trace = operational.eval_fuel(m, fuel, value_reduction, ty.effect)
    kind = "fuel-exhausted" if isinstance(outcome, operational.FuelExhausted) else _SHAPES[type(outcome)]

    preserved = True
    for i, t in enumerate(trace):
        try:
            check_term(Context(), t, ty, mode, "skip")
        except TypeCheckError as e:
            preserved = False
            errors.append(f"step {i}: type not preserved: {e}")
            break

    classified = all(operational.classify(t, value_reduction) is None for t in trace[:-1])
    if kind != "fuel-exhausted":
        classified = classified and operational.classify(trace[-1], value_reduction) == kind
    if not classified:
        errors.append("normal-form classification disagrees with the evaluator")

    proved = 0
    for i in range(len(trace) - 1):
        res = equations.check_derivable_eq(Context(), trace[i], trace[i + 1], ty, record=False)
        if isinstance(res, equations.Proved):
            proved += 1
        elif len(errors) < 8:
            errors.append(f"step {i}: not provable ({res.reason})")

    sem = []
    denotable = True
    result_ok = True
    try:
        sems = [freemodel.denote_comp((), t, ty.effect) for t in trace]
        sem = _distinct([freemodel.digest(s) for s in sems])
        if isinstance(outcome, operational.NormalReturn):
            # the returned value, denoted on its own, is the program's meaning
            result_ok = sems[0] == freemodel.Leaf(freemodel.denote_value((), outcome.value))
    except freemodel.NotFinitelyDenotable:
        denotable = False

    cps_typed = False
    nfs = []
    try:
        images = [cps.cps_term(Context(), t, ty.effect, ty.ret) for t in trace]
        want = cps.cps_type(ty)
        cps_typed = cps.target_typecheck(0, (), images[0]) == want
        nfs = _distinct([_sha(cps.print_term(cps.target_normalize(im, (), want))) for im in images])
    except cps.TargetTypeError as e:
        errors.append(f"cps image ill-typed: {e}")

    flags = {
        "preservation": preserved,
        "classification": classified,
        "equational": proved == len(trace) - 1,
        "semantic": (len(sem) == 1 and result_ok) if denotable else True,
        "cps": cps_typed and len(nfs) == 1,
    }
    if denotable and not flags["semantic"]:
        errors.append("denotation changes along the trace")
    if not flags["cps"] and cps_typed:
        errors.append("cps normal form changes along the trace")
    return {
        "id": pid,
        "type": surface.print_type(ty),
        "value_reduction": value_reduction,
        "steps": len(trace) - 1,
        "outcome": kind,
        "proved_steps": proved,
        "denotable": denotable,
        "denotation_digests": sem,
        "cps_typed": cps_typed,
        "cps_digests": nfs,
        "flags": flags,
        "errors": errors,
    }


def _failed(pid, ty, value_reduction, err):
    return {
        "id": pid,
        "type": surface.print_type(ty) if ty is not None else "?",
        "value_reduction": value_reduction,
        "steps": 0,
        "outcome": "error",
        "proved_steps": 0,
        "denotable": False,
        "denotation_digests": [],
        "cps_typed": False,
        "cps_digests": [],
        "flags": {f: False for f in FLAGS},
        "errors": [f"{type(err).__name__}: {err}"],
    }


def safe_check(pid, m, ty, value_reduction=False, fuel=FUEL, mode="eff+"):
    """check_program, with a crash in any semantics turned into a failing record."""
    try:
        return check_program(pid, m, ty, value_reduction, fuel, mode)
    except Exception as e:  # a broken semantics may fail in any way on ill-typed terms
        return _failed(pid, ty, value_reduction, e)


def summarize(records):
    s = {
        "programs": len(records),
        "steps": sum(r["steps"] for r in records),
        "fuel_exhausted": sum(r["outcome"] == "fuel-exhausted" for r in records),
        "denotable": sum(r["denotable"] for r in records),
        "disagreements": sum(not all(r["flags"].values()) for r in records),
    }
    for f in FLAGS:
        s[f"{f}_failures"] = sum(not r["flags"][f] for r in records)
    return s


def report(records, **meta):
    records = sorted(records, key=lambda r: r["id"])
    return {"schema": SCHEMA, **meta, "records": records, "summary": summarize(records)}


def run_conformance(cfg: GenConfig, n: int, fuel=FUEL):
    """Check n generated programs, seeds cfg.seed .. cfg.seed + n - 1.

    Even seeds run with value reduction switched on, odd seeds without.
    """
    records = []
    for seed in range(cfg.seed, cfg.seed + n):
        c = dc_replace(cfg, seed=seed)
        ty, m = gen_program(c)
        records.append(safe_check(f"gen-{seed:06d}", m, ty, seed % 2 == 0, fuel, cfg.mode))
    return report(records, source="generated", first_seed=cfg.seed, n=n, max_depth=cfg.max_depth)


def to_json(rep) -> str:
    return json.dumps(rep, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- bundled corpus

def corpus_source() -> str:
    return resources.files("effcore").joinpath("corpus/corpus.effh").read_text()


def load_corpus():
    return surface.parse(corpus_source())


def corpus_programs(f=None):
    """(name, elaborated term, type) for every closed computation in the corpus."""
    f = f or load_corpus()
    out = []
    for d in f.defs():
        if isinstance(d.type, CompType) and not len(d.ctx):
            out.append((d.name, check_term(Context(), d.term, d.type, "effE", "skip"), d.type))
    return out


def run_corpus(fuel=FUEL):
    """Check every corpus program with and without value reduction."""
    records = []
    f = load_corpus()
    for d in f.defs():
        if not isinstance(d.type, CompType) or len(d.ctx):
            continue
        for vr in (False, True):
            pid = f"{d.name}{'+vr' if vr else ''}"
            try:
                m = check_term(Context(), d.term, d.type, "effE", "skip")
            except TypeCheckError as e:
                records.append(_failed(pid, d.type, vr, e))
                continue
            records.append(safe_check(pid, m, d.type, vr, fuel, "effE"))
    return report(records, source="corpus")


# ---------------------------------------------------------------- law instances

LAWS = ("handle-ret", "handle-let", "handle-op", "case-handle")

_GROUND = (BOOL, UNIT, UU, INT)
_RETS = (BOOL, UNIT, INT)


def gen_law_instance(law: str, seed: int, max_depth=4, cfg=None):
    """(ctx, lhs, rhs, type) for a random instance of a handler law.

    The context holds a few variables of ground type; for the case law its
    last entry is the scrutinee, so the instance is not decided by a redex.
    """
    cfg = cfg or GenConfig(seed=seed, max_depth=max_depth, thunk_density=0.0)
    g = _Gen(cfg)
    rng = g.rng
    ctx = Context()
    for i in range(rng.randrange(3)):
        ctx = ctx.extend(f"g{i}", g.pick(_GROUND))
    if law == "case-handle":
        ctx = ctx.extend("s", g.pick([UU, Sum((BOOL, UNIT)), Sum((UNIT, UNIT, UNIT))]))
    sig = g.pick(g.sigs)
    hdl = Effect(sig)
    ret = g.pick(_RETS)
    out = Effect(g.pick(g.sigs)) if rng.random() < 0.3 else PURE
    ty = CompType(ret, out)
    d = max_depth
    h = g.handler(ctx, sig, ret, out, d - 1)
    a = g.pick(g.types[:4])
    x = g.fresh(ctx)
    if law == "handle-ret":
        v = g.value(ctx, a, d - 1)
        n = g.comp(ctx.extend(x, a), ret, out, d - 1)
        return ctx, Handle(Return(v), h, n, hdl, x), instantiate(n, [v]), ty
    if law == "handle-let":
        b = g.pick(g.types[:4])
        first = g.comp(ctx, a, hdl, d - 1)
        second = g.comp(ctx.extend(x, a), b, hdl, d - 1)
        n = g.comp(ctx.extend("y", b), ret, out, d - 1)
        lhs = Handle(Let(first, second, x), h, n, hdl, "y")
        rhs = Handle(first, h, Handle(second, shift(h, 1), shift(n, 1, 1), hdl, "y"), hdl, x)
        return ctx, lhs, rhs, ty
    if law == "handle-op":
        op, ot = g.pick(sig.ops)
        v = g.value(ctx, ot.arg, d - 1)
        n = g.comp(ctx.extend(x, ot.result), ret, out, d - 1)
        body = next(c.body for c in h.clauses if c.op == op)
        rhs = instantiate(body, [Lam(ot.result, out, n, x), v])
        return ctx, Handle(OpCall(op, v), h, n, hdl, x), rhs, ty
    if law == "case-handle":
        s = ctx.lookup(0)
        scrut = g.value(ctx, s, 1) if rng.random() < 0.2 else Var(0, "s")
        branches = tuple(g.comp(ctx.extend(f"z{i}", t), a, hdl, d - 1) for i, t in enumerate(s.items))
        n = g.comp(ctx.extend("y", a), ret, out, d - 1)
        lhs = Handle(Case(scrut, branches, tuple(f"z{i}" for i in range(len(branches)))), h, n, hdl, "y")
        rhs = Case(scrut, tuple(Handle(b, shift(h, 1), shift(n, 1, 1), hdl, "y") for b in branches),
                   tuple(f"z{i}" for i in range(len(branches))))
        return ctx, lhs, rhs, ty
    raise ValueError(f"unknown law {law!r}")


def law_agreement(ctx, lhs, rhs, ty, cps_check=True):
    """Per-semantics verdicts for one law instance; None means not applicable."""
    out = {}
    for side in (lhs, rhs):
        check_term(ctx, side, ty, "eff+", "skip")
    res = equations.check_derivable_eq(ctx, lhs, rhs, ty, record=False)
    out["equational"] = isinstance(res, equations.Proved)
    try:
        out["semantic"] = all(
            freemodel.denote_comp(env, lhs, ty.effect) == freemodel.denote_comp(env, rhs, ty.effect)
            for env in freemodel.envs(ctx))
    except freemodel.NotFinitelyDenotable:
        out["semantic"] = None
    if cps_check:
        tctx = cps.cps_context(ctx)
        out["cps"] = cps.target_eq(cps.cps_term(ctx, lhs, ty.effect, ty.ret),
                                   cps.cps_term(ctx, rhs, ty.effect, ty.ret), tctx)
    return out
