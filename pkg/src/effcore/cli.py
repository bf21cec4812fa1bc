"""The `effcore` command line."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import astjson, conformance, cps, equations, freemodel, mutation, operational, surface
from .generate import GenConfig
from .syntax import CompType, Context, Handle
from .typecheck import TypeCheckError, check_respects, check_term
from .deep import deep

OK, VIOLATION, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _out(args, text=None, data=None):
    if args.emit == "json" and data is not None:
        sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
    elif text is not None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load(args):
    try:
        src = Path(args.file).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {args.file}: {e.strerror}")
    return surface.parse(src)


def _decl(f, name, kind):
    try:
        d = f.lookup(name)
    except KeyError:
        raise UsageError(f"no declaration named {name!r}")
    if not isinstance(d, kind):
        raise UsageError(f"{name!r} is not a {kind.__name__}")
    return d


def _elaborated(args, f, name):
    d = _decl(f, name, surface.TermDecl)
    return d, check_term(d.ctx, d.term, d.type, args.mode, "skip")


def _closed_comp(d):
    if not isinstance(d.type, CompType) or len(d.ctx):
        raise UsageError(f"{d.name!r} is not a closed computation")


# ---------------------------------------------------------------- subcommands

def cmd_parse(args):
    f = _load(args)
    _out(args, surface.print_file(f), astjson.file_json(f))
    return OK


def cmd_typecheck(args):
    f = _load(args)
    results = []
    for d in f.decls:
        if not isinstance(d, (surface.TermDecl, surface.EqGoal)):
            continue
        try:
            if isinstance(d, surface.TermDecl):
                check_term(d.ctx, d.term, d.type, args.mode, args.respects)
            else:
                check_term(d.ctx, d.lhs, d.type, args.mode, args.respects)
                check_term(d.ctx, d.rhs, d.type, args.mode, args.respects)
            results.append({"name": d.name, "ok": True})
        except TypeCheckError as e:
            results.append({"name": d.name, "ok": False, "error": e.to_json()})
    lines = [f"{r['name']}: ok" if r["ok"] else f"{r['name']}: {r['error']['kind']}: {r['error']['message']}"
             for r in results]
    _out(args, "\n".join(lines) or "nothing to check", {"version": astjson.VERSION, "results": results})
    return OK if all(r["ok"] for r in results) else VIOLATION


def cmd_run(args):
    f = _load(args)
    d, m = _elaborated(args, f, args.defn)
    _closed_comp(d)
    outcome, trace = operational.eval_fuel(m, args.fuel, args.value_reduction, d.type.effect)
    rules = []
    for t in trace[:-1]:
        rules.append(operational.step(t, args.value_reduction, d.type.effect).rule)
    kind = type(outcome).__name__
    final = surface.print_term(trace[-1])
    data = {"version": astjson.VERSION, "outcome": kind, "steps": len(trace) - 1,
            "result": astjson.term_json(trace[-1])}
    lines = []
    if args.trace:
        data["trace"] = [{"rule": r, "term": surface.print_term(t)} for r, t in zip([None] + rules, trace)]
        lines.append(f"   {surface.print_term(trace[0])}")
        lines += [f"-> [{r}] {surface.print_term(t)}" for r, t in zip(rules, trace[1:])]
    lines.append(f"{kind} after {len(trace) - 1} steps: {final}")
    _out(args, "\n".join(lines), data)
    return VIOLATION if isinstance(outcome, operational.FuelExhausted) else OK


def cmd_denote(args):
    f = _load(args)
    d, t = _elaborated(args, f, args.defn)
    eff = d.type.effect if isinstance(d.type, CompType) else None
    sig = eff.sig if eff is not None else None
    try:
        rows = [(env, freemodel.denote(d.ctx, env, t, eff))
                for env in [tuple(reversed(e)) for e in freemodel.envs(d.ctx)]]
    except freemodel.NotFinitelyDenotable as e:
        sys.stderr.write(f"not finitely denotable: {e}\n")
        return VIOLATION
    if not len(d.ctx):
        sem = rows[0][1]
        _out(args, freemodel.show(sem, sig), {"digest": freemodel.digest(sem), "value": freemodel.to_json(sem)})
        return OK
    names = d.ctx.names()
    lines = []
    for env, sem in rows:
        binding = ", ".join(f"{n} = {freemodel.show(v)}" for n, v in zip(names, env))
        lines.append(f"{binding} |-> {freemodel.show(sem, sig)}")
    _out(args, "\n".join(lines), {"rows": [{"env": [freemodel.to_json(v) for v in env],
                                             "value": freemodel.to_json(sem)} for env, sem in rows]})
    return OK


def cmd_cps(args):
    f = _load(args)
    d, t = _elaborated(args, f, args.defn)
    eff = d.type.effect if isinstance(d.type, CompType) else None
    ret = d.type.ret if isinstance(d.type, CompType) else None
    img = cps.cps_term(d.ctx, t, eff, ret)
    tctx = cps.cps_context(d.ctx)
    want = cps.cps_type(d.type)
    status = OK
    notes = []
    if args.check_typed:
        try:
            got = cps.target_typecheck(0, tctx, img)
            typed = got == want
        except cps.TargetTypeError as e:
            typed, got = False, None
            notes.append(f"ill-typed: {e}")
        notes.append(f"typed at {cps.print_type(want)}: {'yes' if typed else 'no'}")
        status = OK if typed else VIOLATION
    if args.normalize:
        img = cps.target_normalize(img, tctx, want)
    names = tuple(f"{n}" for n in d.ctx.names())[::-1]
    text = cps.print_term(img, names)
    _out(args, "\n".join([text] + notes),
         {"term": cps.term_to_json(img), "type": cps.type_to_json(want), "notes": notes})
    return status


def cmd_prove_eq(args):
    f = _load(args)
    g = _decl(f, args.goal, surface.EqGoal)
    lhs = check_term(g.ctx, g.lhs, g.type, args.mode, "skip")
    rhs = check_term(g.ctx, g.rhs, g.type, args.mode, "skip")
    theory = None
    if args.theory:
        theory = f.env().get(args.theory)
        if not hasattr(theory, "axioms"):
            raise UsageError(f"{args.theory!r} is not a theory")
    elif isinstance(g.type, CompType) and g.type.effect.axioms:
        theory = g.type.effect.theory
    res = equations.check_derivable_eq(g.ctx, lhs, rhs, g.type, theory, args.budget)
    proved = isinstance(res, equations.Proved)
    data = {"goal": g.name, "verdict": "Proved" if proved else "Unknown"}
    lines = [f"{g.name}: {data['verdict']}"]
    if not proved:
        data["reason"] = res.reason
        lines[0] += f" ({res.reason})"
    elif args.trace:
        steps = []
        for side, seq in (("lhs", res.trace.lhs_steps), ("rhs", res.trace.rhs_steps)):
            for s in seq:
                rule = s.rule.value if isinstance(s.rule, equations.Rule) else f"axiom {s.rule.axiom} ({s.rule.direction})"
                where = "/".join(s.position) or "."
                steps.append({"side": side, "rule": rule, "position": where,
                              "after": surface.print_term(s.after, g.ctx)})
                lines.append(f"  {side} {where}: {rule}")
        data["trace"] = steps
        lines.append(f"  normal form: {surface.print_term(res.normal_form, g.ctx)}")
    _out(args, "\n".join(lines), data)
    return OK if proved else VIOLATION


def cmd_check_respects(args):
    f = _load(args)
    d = _decl(f, args.defn, surface.TermDecl)
    if not isinstance(d.term, Handle) or not isinstance(d.type, CompType):
        raise UsageError(f"{d.name!r} must be a handle-with computation")
    m = check_term(d.ctx, d.term, d.type, args.mode, "skip")
    theory = f.env().get(args.theory)
    if not hasattr(theory, "axioms"):
        raise UsageError(f"{args.theory!r} is not a theory")
    try:
        rv = check_respects(d.ctx, m.handler, theory, d.type, args.respects)
    except TypeCheckError as e:
        sys.stderr.write(f"{e.kind}: {e}\n")
        return VIOLATION
    lines = [f"{v.axiom}: {v.status}" + (f"\n    counterexample: {v.witness}" if v.witness else "")
             for v in rv.verdicts]
    lines.append(f"overall: {rv.status}")
    if rv.syntactic_unknown:
        lines.append(f"not provable by rewriting: {', '.join(rv.syntactic_unknown)}")
    data = {"mode": rv.mode, "status": rv.status,
            "verdicts": [{"axiom": v.axiom, "status": v.status, "witness": v.witness} for v in rv.verdicts],
            "syntactic_unknown": list(rv.syntactic_unknown)}
    _out(args, "\n".join(lines), data)
    return OK if rv.status in ("Holds", "Proved") else VIOLATION


def cmd_conformance(args):
    def go():
        if args.corpus:
            return conformance.run_corpus(args.fuel)
        cfg = GenConfig(seed=args.seed, max_depth=args.max_depth, mode=args.mode if args.mode != "effE" else "eff+")
        return conformance.run_conformance(cfg, args.n, args.fuel)

    if args.mutate:
        with mutation.mutate(args.mutate):
            rep = go()
    else:
        rep = go()
    text = conformance.to_json(rep)
    if args.out:
        Path(args.out).write_text(text)
    s = rep["summary"]
    if args.emit == "json" and not args.out:
        sys.stdout.write(text)
    else:
        sys.stdout.write(" ".join(f"{k}={v}" for k, v in sorted(s.items())) + "\n")
    return OK if s["disagreements"] == 0 else VIOLATION


# ---------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=["eff", "eff+", "effE"], default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--emit", choices=["json", "text", "tree", "sysf"], default=argparse.SUPPRESS)
    common.add_argument("--fuel", type=int, default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="effcore", parents=[common],
                                description="Parse, check, run and compare semantics of effect-handler programs.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, file=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if file:
            sp.add_argument("file")
        sp.set_defaults(fn=fn)
        return sp

    add("parse", cmd_parse, "parse and pretty-print a file")
    sp = add("typecheck", cmd_typecheck, "typecheck every definition and goal")
    sp.add_argument("--respects", choices=["syntactic", "semantic", "skip"], default="semantic")
    sp = add("run", cmd_run, "evaluate a definition")
    sp.add_argument("--def", dest="defn", required=True)
    sp.add_argument("--value-reduction", action="store_true")
    sp.add_argument("--trace", action="store_true")
    sp = add("denote", cmd_denote, "the free-model denotation of a definition")
    sp.add_argument("--def", dest="defn", required=True)
    sp = add("cps", cmd_cps, "translate a definition to the polymorphic target")
    sp.add_argument("--def", dest="defn", required=True)
    sp.add_argument("--check-typed", action="store_true")
    sp.add_argument("--normalize", action="store_true")
    sp = add("prove-eq", cmd_prove_eq, "try to derive an equation goal")
    sp.add_argument("--goal", required=True)
    sp.add_argument("--theory")
    sp.add_argument("--budget", type=int, default=equations.DEFAULT_BUDGET)
    sp.add_argument("--trace", action="store_true")
    sp = add("check-respects", cmd_check_respects, "does a handler respect an effect theory")
    sp.add_argument("--def", dest="defn", required=True)
    sp.add_argument("--theory", required=True)
    sp.add_argument("--respects", choices=["syntactic", "semantic"], default="semantic")
    sp = add("conformance", cmd_conformance, "cross-check all semantics", file=False)
    sp.add_argument("-n", type=int, default=100)
    sp.add_argument("--max-depth", type=int, default=8)
    sp.add_argument("--corpus", action="store_true", help="check the bundled corpus instead")
    sp.add_argument("--out")
    sp.add_argument("--mutate", choices=mutation.KNOWN, help=argparse.SUPPRESS)
    return p


def main(argv=None):
    p = build_parser()
    args = p.parse_args(argv)
    for k, v in (("mode", "effE"), ("seed", 1), ("emit", "text"), ("fuel", conformance.FUEL)):
        if not hasattr(args, k):
            setattr(args, k, v)
    try:
        return deep(args.fn, args)
    except UsageError as e:
        sys.stderr.write(f"effcore: {e}\n")
        return USAGE
    except surface.ParseError as e:
        sys.stderr.write(f"{args.file}:{e}\n")
        return VIOLATION
    except TypeCheckError as e:
        sys.stderr.write(f"{e.kind}: {e}\n")
        return VIOLATION


if __name__ == "__main__":
    sys.exit(main())
