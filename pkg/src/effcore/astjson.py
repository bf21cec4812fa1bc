"""JSON form of types, terms and source files.

Every node is an object with a "sort" (type, value, comp, handler) and a
"tag" naming the constructor.  Binding nodes list the names they bind under
"binders"; variables carry both the de Bruijn index and the printing name.
"""

from __future__ import annotations

from .syntax import (
    App, Arrow, Base, Case, CompType, Context, Effect, Handle, Handler, Inj,
    Lam, Let, OpCall, PrimApp, Prod, Proj, Return, Signature, Span, Sum,
    Tuple, Var,
)

VERSION = "effcore-ast/1"


def span_json(s: Span):
    if s is None:
        return None
    return {"start": s.start, "end": s.end, "line": s.line, "column": s.column}


def type_json(t):
    if isinstance(t, CompType):
        return {"sort": "type", "tag": "Comp", "ret": type_json(t.ret), "effect": effect_json(t.effect)}
    if isinstance(t, Base):
        return {"sort": "type", "tag": "Base", "name": t.name}
    if isinstance(t, Arrow):
        return {"sort": "type", "tag": "Arrow", "arg": type_json(t.arg), "result": type_json(t.result)}
    if isinstance(t, Prod):
        return {"sort": "type", "tag": "Prod", "items": [type_json(x) for x in t.items]}
    if isinstance(t, Sum):
        return {"sort": "type", "tag": "Sum", "items": [type_json(x) for x in t.items]}
    raise TypeError(f"not a type: {t!r}")


def sig_json(s: Signature):
    return {"name": s.name, "ops": [{"op": op, "arg": type_json(ot.arg), "result": type_json(ot.result)}
                                    for op, ot in s.ops]}


def effect_json(e: Effect):
    th = e.theory
    return {"sig": sig_json(e.sig), "theory": th.name if th is not None else None}


def term_json(t):
    def node(sort, tag, **kw):
        return {"sort": sort, "tag": tag, **kw, "span": span_json(getattr(t, "span", None))}

    if isinstance(t, Var):
        return node("value", "Var", index=t.index, name=t.name)
    if isinstance(t, Lam):
        effect = effect_json(t.effect) if t.effect is not None else None
        return node("value", "Lam", binders=[t.name], arg=type_json(t.arg), effect=effect,
                    body=term_json(t.body))
    if isinstance(t, Tuple):
        return node("value", "Tuple", items=[term_json(x) for x in t.items])
    if isinstance(t, Proj):
        return node("value", "Proj", index=t.index, value=term_json(t.value))
    if isinstance(t, Inj):
        ann = type_json(t.type) if t.type is not None else None
        return node("value", "Inj", index=t.index, arity=t.arity, type=ann, value=term_json(t.value))
    if isinstance(t, PrimApp):
        return node("value", "Prim", name=t.name, args=[term_json(a) for a in t.args])
    if isinstance(t, Return):
        return node("comp", "Return", value=term_json(t.value))
    if isinstance(t, App):
        return node("comp", "App", fn=term_json(t.fn), arg=term_json(t.arg))
    if isinstance(t, Let):
        return node("comp", "Let", binders=[t.name], bound=term_json(t.bound), body=term_json(t.body))
    if isinstance(t, OpCall):
        return node("comp", "Op", op=t.op, arg=term_json(t.arg))
    if isinstance(t, Handle):
        return node("comp", "Handle", binders=[t.name], effect=effect_json(t.effect),
                    subject=term_json(t.subject), handler=term_json(t.handler), body=term_json(t.body))
    if isinstance(t, Handler):
        clauses = [{"op": c.op, "binders": [c.x_name, c.k_name], "body": term_json(c.body),
                    "span": span_json(c.span)} for c in t.clauses]
        return node("handler", "Handler", clauses=clauses)
    if isinstance(t, Case):
        return node("comp", "Case", binders=list(t.names), scrutinee=term_json(t.scrutinee),
                    branches=[term_json(b) for b in t.branches])
    raise TypeError(f"not a term: {t!r}")


def context_json(ctx: Context):
    return [{"name": n, "type": type_json(a)} for n, a in ctx.bindings]


def file_json(f):
    from .surface import EqGoal, SigDecl, TermDecl, TheoryDecl
    decls = []
    for d in f.decls:
        if isinstance(d, SigDecl):
            decls.append({"decl": "sig", "name": d.name, "sig": sig_json(d.sig)})
        elif isinstance(d, TheoryDecl):
            axioms = [{"name": ax.name,
                       "context": [{"name": n, "type": type_json(a)}
                                   for n, a in zip(ax.ctx_names, ax.ctx_types)],
                       "result": type_json(ax.result), "lhs": term_json(ax.lhs), "rhs": term_json(ax.rhs)}
                      for ax in d.theory.axioms]
            decls.append({"decl": "theory", "name": d.name, "sig": sig_json(d.theory.sig), "axioms": axioms})
        elif isinstance(d, TermDecl):
            decls.append({"decl": "def", "name": d.name, "context": context_json(d.ctx),
                          "type": type_json(d.type), "term": term_json(d.term)})
        elif isinstance(d, EqGoal):
            decls.append({"decl": "goal", "name": d.name, "context": context_json(d.ctx),
                          "type": type_json(d.type), "lhs": term_json(d.lhs), "rhs": term_json(d.rhs)})
        decls[-1]["span"] = span_json(d.span)
    return {"version": VERSION, "decls": decls}


def document(payload_key, payload):
    return {"version": VERSION, payload_key: payload}
