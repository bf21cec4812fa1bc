"""Concrete syntax: lexer, parser and printer for ``.effh`` files.

The grammar is published in ``docs/grammar.ebnf``.  Parsing resolves names
to de Bruijn indices, so the printer has to invent binder names; it keeps the
recorded hints where they do not clash.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import prims
from .syntax import (
    UNIT, VOID, App, Arrow, Axiom, Base, Case, Clause, Comp, CompType, Context,
    Effect, EffectTheory, Handle, Handler, Inj, Lam, Let, OpCall, OpType,
    PrimApp, Prod, Proj, Return, Signature, Span, Sum, Tuple, Value, ValueType,
    Var,
)

KEYWORDS = {
    "sig", "theory", "over", "axiom", "def", "goal", "return", "let", "in",
    "handle", "with", "to", "case", "of", "fun", "pi", "inl", "inr", "unit",
    "void", "prod", "sum",
}


class ParseError(Exception):
    def __init__(self, message, span, expected=()):
        self.message = message
        self.span = span
        self.expected = frozenset(expected)
        where = f"{span.line}:{span.column}" if span else "?"
        exp = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{where}: {message}{exp}")


# ---------------------------------------------------------------- declarations

@dataclass(frozen=True)
class SigDecl:
    name: str
    sig: Signature
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TheoryDecl:
    name: str
    theory: EffectTheory
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class TermDecl:
    name: str
    ctx: Context
    term: object
    type: object  # ValueType or CompType
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class EqGoal:
    name: str
    ctx: Context
    lhs: object
    rhs: object
    type: object
    span: Optional[Span] = field(default=None, compare=False)


@dataclass(frozen=True)
class SourceFile:
    decls: tuple

    def lookup(self, name):
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)

    def env(self):
        """Signature and theory declarations by name."""
        out = {}
        for d in self.decls:
            if isinstance(d, SigDecl):
                out[d.name] = d.sig
            elif isinstance(d, TheoryDecl):
                out[d.name] = d.theory
        return out

    def defs(self):
        return [d for d in self.decls if isinstance(d, TermDecl)]

    def goals(self):
        return [d for d in self.decls if isinstance(d, EqGoal)]


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<injn>in\#(?P<ii>[0-9]+)/(?P<in>[0-9]+))
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>==|~>|->|[(){}\[\]<>,;:.=~!*+])
""", re.VERBOSE)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # ident, kw, int, injn, sym, eof
    text: str
    span: Span
    extra: tuple = ()


def tokenize(src: str):
    toks = []
    pos, line, col = 0, 1, 1
    n = len(src)
    while pos < n:
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", Span(pos, pos + 1, line, col))
        text = m.group(0)
        kind = m.lastgroup
        if kind in ("ii", "in"):
            kind = "injn"
        span = Span(pos, m.end(), line, col)
        if kind == "injn":
            toks.append(Token("injn", text, span, (int(m.group("ii")), int(m.group("in")))))
        elif kind == "ident":
            toks.append(Token("kw" if text in KEYWORDS else "ident", text, span))
        elif kind in ("int", "sym"):
            toks.append(Token(kind, text, span))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Token("eof", "", Span(n, n, line, col)))
    return toks


# ---------------------------------------------------------------- parser

class _Parser:
    def __init__(self, src, env=None):
        self.toks = tokenize(src)
        self.i = 0
        self.env = dict(env or {})

    # token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def is_sym(self, text, tok=None):
        t = tok or self.tok
        return t.kind == "sym" and t.text == text

    def is_kw(self, text, tok=None):
        t = tok or self.tok
        return t.kind == "kw" and t.text == text

    def fail(self, msg, expected=()):
        raise ParseError(msg, self.tok.span, expected)

    def expect_sym(self, text):
        if not self.is_sym(text):
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}", {text})
        t = self.tok
        self.i += 1
        return t

    def expect_kw(self, text):
        if not self.is_kw(text):
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}", {text})
        t = self.tok
        self.i += 1
        return t

    def ident(self):
        t = self.tok
        if t.kind != "ident":
            self.fail(f"expected identifier, found {t.text or 'end of input'!r}", {"identifier"})
        self.i += 1
        return t.text

    def integer(self):
        t = self.tok
        if t.kind != "int":
            self.fail(f"expected integer, found {t.text or 'end of input'!r}", {"integer"})
        self.i += 1
        return int(t.text)

    def span_from(self, start: Span):
        prev = self.toks[self.i - 1].span if self.i > 0 else start
        return Span(start.start, max(prev.end, start.start), start.line, start.column)

    # ------------------------------------------------------------ file

    def file(self):
        decls = []
        names = set()
        while self.tok.kind != "eof":
            d = self.decl()
            if d.name in names:
                raise ParseError(f"duplicate declaration {d.name!r}", d.span)
            names.add(d.name)
            decls.append(d)
        return SourceFile(tuple(decls))

    def decl(self):
        start = self.tok.span
        if self.is_kw("sig"):
            self.i += 1
            name = self.ident()
            self.expect_sym("=")
            sig = self.sig_body(name)
            self.env[name] = sig
            return SigDecl(name, sig, self.span_from(start))
        if self.is_kw("theory"):
            self.i += 1
            name = self.ident()
            self.expect_kw("over")
            base = self.effect()
            self.expect_sym("{")
            axioms = []
            while self.is_kw("axiom"):
                axioms.append(self.axiom(base.sig))
            self.expect_sym("}")
            seen = set()
            for ax in axioms:
                if ax.name in seen:
                    raise ParseError(f"duplicate axiom {ax.name!r}", start)
                seen.add(ax.name)
            from .typecheck import elaborate_theory
            theory = elaborate_theory(EffectTheory(name, base.sig, tuple(axioms)))
            self.env[name] = theory
            return TheoryDecl(name, theory, self.span_from(start))
        if self.is_kw("def") or self.is_kw("goal"):
            goal = self.is_kw("goal")
            self.i += 1
            name = self.ident()
            ctx = self.params()
            self.expect_sym(":")
            ty = self.any_type()
            self.expect_sym("=")
            scope = ctx.names()
            parse = self.comp if isinstance(ty, CompType) else self.value
            lhs = parse(scope)
            if not goal:
                return TermDecl(name, ctx, lhs, ty, self.span_from(start))
            self.expect_sym("==")
            rhs = parse(scope)
            return EqGoal(name, ctx, lhs, rhs, ty, self.span_from(start))
        self.fail("expected a declaration", {"sig", "theory", "def", "goal"})

    def params(self):
        pairs = []
        if self.is_sym("("):
            self.i += 1
            while True:
                n = self.ident()
                self.expect_sym(":")
                pairs.append((n, self.vtype()))
                if self.is_sym(","):
                    self.i += 1
                    continue
                break
            self.expect_sym(")")
        return Context(tuple(pairs))

    def axiom(self, sig):
        self.expect_kw("axiom")
        name = self.ident()
        ctx = self.params()
        self.expect_sym(":")
        res = self.vtype()
        self.expect_sym("=")
        scope = ctx.names()
        lhs = self.comp(scope)
        self.expect_sym("~")
        rhs = self.comp(scope)
        return Axiom(name, tuple(ctx.types()), lhs, rhs, res, tuple(ctx.names()))

    def sig_body(self, name=None):
        self.expect_sym("{")
        ops = []
        seen = set()
        if not self.is_sym("}"):
            while True:
                sp = self.tok.span
                op = self.ident()
                if op in seen:
                    raise ParseError(f"duplicate operation {op!r}", sp)
                seen.add(op)
                self.expect_sym(":")
                a = self.vtype()
                self.expect_sym("~>")
                b = self.vtype()
                ops.append((op, OpType(a, b)))
                if self.is_sym(","):
                    self.i += 1
                    continue
                break
        self.expect_sym("}")
        return Signature(tuple(ops), name)

    # ------------------------------------------------------------ types

    def any_type(self):
        t = self.sum_type()
        if self.is_sym("->"):
            self.i += 1
            return Arrow(t, self.comp_type())
        if self.is_sym("!"):
            self.i += 1
            return CompType(t, self.effect())
        return t

    def vtype(self):
        t = self.sum_type()
        if self.is_sym("->"):
            self.i += 1
            return Arrow(t, self.comp_type())
        return t

    def comp_type(self):
        t = self.sum_type()
        self.expect_sym("!")
        return CompType(t, self.effect())

    def sum_type(self):
        items = [self.prod_type()]
        while self.is_sym("+"):
            self.i += 1
            items.append(self.prod_type())
        return items[0] if len(items) == 1 else Sum(tuple(items))

    def prod_type(self):
        items = [self.atom_type()]
        while self.is_sym("*"):
            self.i += 1
            items.append(self.atom_type())
        return items[0] if len(items) == 1 else Prod(tuple(items))

    def atom_type(self):
        t = self.tok
        if self.is_kw("unit"):
            self.i += 1
            return UNIT
        if self.is_kw("void"):
            self.i += 1
            return VOID
        if self.is_kw("prod") or self.is_kw("sum"):
            self.i += 1
            self.expect_sym("(")
            inner = self.vtype()
            self.expect_sym(")")
            return Prod((inner,)) if t.text == "prod" else Sum((inner,))
        if self.is_sym("("):
            self.i += 1
            inner = self.vtype()
            self.expect_sym(")")
            return inner
        if t.kind == "ident":
            if t.text in prims.BASES:
                self.i += 1
                return prims.BASES[t.text]
            self.fail(f"unknown type {t.text!r}", set(prims.BASES) | {"unit"})
        self.fail("expected a type", {"unit", "(", "identifier"})

    def effect(self):
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            d = self.env.get(t.text)
            if isinstance(d, Signature):
                return Effect(d)
            if isinstance(d, EffectTheory):
                return Effect(d.sig, d)
            raise ParseError(f"unknown signature or theory {t.text!r}", t.span)
        if self.is_sym("{"):
            return Effect(self.sig_body())
        self.fail("expected a signature", {"identifier", "{"})

    # ------------------------------------------------------------ values

    def resolve(self, scope, name):
        for j in range(len(scope) - 1, -1, -1):
            if scope[j] == name:
                return len(scope) - 1 - j
        return None

    def value(self, scope):
        start = self.tok.span
        if self.is_kw("fun"):
            self.i += 1
            self.expect_sym("(")
            x = self.binder()
            self.expect_sym(":")
            a = self.vtype()
            self.expect_sym(")")
            eff = None
            if self.is_sym("!"):
                self.i += 1
                eff = self.effect()
            self.expect_sym("->")
            body = self.comp(scope + [x])
            return Lam(a, eff, body, x, self.span_from(start))
        return self.value_arg(scope)

    def value_arg(self, scope):
        t = self.tok
        start = t.span
        if self.is_kw("pi"):
            self.i += 1
            i = self.integer()
            v = self.value_arg(scope)
            if i < 1:
                raise ParseError("projection index starts at 1", start)
            return Proj(i, v, self.span_from(start))
        if self.is_kw("inl") or self.is_kw("inr") or t.kind == "injn":
            self.i += 1
            if t.kind == "injn":
                i, n = t.extra
            else:
                i, n = (1 if t.text == "inl" else 2), 2
            if not 1 <= i <= n:
                raise ParseError(f"injection {i} out of range for arity {n}", start)
            ann = None
            if self.is_sym("["):
                self.i += 1
                ann = self.vtype()
                self.expect_sym("]")
                if not isinstance(ann, Sum) or len(ann.items) != n:
                    raise ParseError(f"injection annotation must be a {n}-ary sum", start)
            v = self.value_arg(scope)
            return Inj(i, n, v, ann, self.span_from(start))
        return self.atom(scope)

    def atom(self, scope):
        t = self.tok
        start = t.span
        if t.kind == "int":
            self.i += 1
            if t.text not in prims.CARRIERS["int4"]:
                raise ParseError(f"integer literal {t.text} out of range 0..3", start)
            return PrimApp(t.text, (), start)
        if self.is_sym("<"):
            self.i += 1
            items = []
            if not self.is_sym(">"):
                while True:
                    items.append(self.value(scope))
                    if self.is_sym(","):
                        self.i += 1
                        continue
                    break
            self.expect_sym(">")
            return Tuple(tuple(items), self.span_from(start))
        if self.is_sym("("):
            self.i += 1
            v = self.value(scope)
            self.expect_sym(")")
            return v
        if t.kind == "ident":
            name = t.text
            idx = self.resolve(scope, name) if name != "_" else None
            if idx is not None:
                self.i += 1
                return Var(idx, name, start)
            if prims.const_base(name) is not None:
                self.i += 1
                return PrimApp(name, (), start)
            if name in prims.PRIMITIVES:
                self.i += 1
                self.expect_sym("(")
                args = []
                if not self.is_sym(")"):
                    while True:
                        args.append(self.value(scope))
                        if self.is_sym(","):
                            self.i += 1
                            continue
                        break
                self.expect_sym(")")
                return PrimApp(name, tuple(args), self.span_from(start))
            raise ParseError(f"unbound variable {name!r}", start, {"variable"})
        self.fail("expected a value", {"identifier", "<", "(", "fun", "pi", "inl", "inr"})

    def binder(self):
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            return t.text
        self.fail("expected a binder", {"identifier", "_"})

    # ------------------------------------------------------------ computations

    def comp(self, scope):
        t = self.tok
        start = t.span
        if self.is_kw("return"):
            self.i += 1
            return Return(self.value(scope), self.span_from(start))
        if self.is_kw("let"):
            self.i += 1
            x = self.binder()
            self.expect_sym("=")
            m = self.comp(scope)
            self.expect_kw("in")
            n = self.comp(scope + [x])
            return Let(m, n, x, self.span_from(start))
        if self.is_kw("handle"):
            return self.handle(scope)
        if self.is_kw("case"):
            return self.case(scope)
        if t.kind == "ident" and self.is_sym("(", self.peek()) and t.text != "_" \
                and self.resolve(scope, t.text) is None and not prims.is_prim_name(t.text):
            self.i += 2
            arg = self.value(scope)
            self.expect_sym(")")
            return OpCall(t.text, arg, self.span_from(start))
        if self.is_sym("("):
            save = self.i
            try:
                return self.application(scope, start)
            except ParseError:
                self.i = save
            self.i += 1
            m = self.comp(scope)
            self.expect_sym(")")
            return m
        return self.application(scope, start)

    def application(self, scope, start):
        f = self.value_arg(scope)
        a = self.value_arg(scope)
        return App(f, a, self.span_from(start))

    def handle(self, scope):
        start = self.tok.span
        self.expect_kw("handle")
        subject = self.comp(scope)
        self.expect_kw("with")
        eff = None
        if self.tok.kind == "ident":
            eff = self.effect()
        elif self.is_sym("{") and (
                (self.peek().kind == "ident" and self.is_sym(":", self.peek(2)))
                or (self.is_sym("}", self.peek()) and self.is_sym("{", self.peek(2)))):
            eff = self.effect()
        hstart = self.tok.span
        self.expect_sym("{")
        clauses = []
        seen = set()
        if not self.is_sym("}"):
            while True:
                cs = self.tok.span
                op = self.ident()
                if op in seen:
                    raise ParseError(f"duplicate clause for operation {op!r}", cs)
                seen.add(op)
                self.expect_sym("(")
                x = self.binder()
                self.expect_sym(",")
                k = self.binder()
                self.expect_sym(")")
                self.expect_sym("->")
                body = self.comp(scope + [x, k])
                clauses.append(Clause(op, body, x, k, self.span_from(cs)))
                if self.is_sym(";"):
                    self.i += 1
                    continue
                break
        self.expect_sym("}")
        handler = Handler(tuple(clauses), self.span_from(hstart))
        self.expect_kw("to")
        x = self.binder()
        self.expect_sym(".")
        body = self.comp(scope + [x])
        if eff is None:
            eff = self.infer_handled(handler, start)
        return Handle(subject, handler, body, eff, x, self.span_from(start))

    def infer_handled(self, handler, span):
        ops = set(handler.ops())
        if not ops:
            return Effect(Signature(()))
        found = [s for s in self.env.values() if isinstance(s, Signature) and set(s.names()) == ops]
        if len(found) == 1:
            return Effect(found[0])
        why = "no declared signature" if not found else "several declared signatures"
        raise ParseError(f"{why} with operations {sorted(ops)}; write `with Sig {{...}}`", span)

    def case(self, scope):
        start = self.tok.span
        self.expect_kw("case")
        v = self.value(scope)
        self.expect_kw("of")
        braced = self.is_sym("{")
        if braced:
            self.i += 1
        arms = []
        while True:
            t = self.tok
            if self.is_kw("inl") or self.is_kw("inr"):
                i, n = (1 if t.text == "inl" else 2), 2
            elif t.kind == "injn":
                i, n = t.extra
            else:
                self.fail("expected a case branch", {"inl", "inr", "in#i/n"})
            self.i += 1
            x = self.binder()
            self.expect_sym("->")
            body = self.comp(scope + [x])
            arms.append((i, n, x, body, t.span))
            nxt = self.peek()
            if self.is_sym(";") and (nxt.kind == "injn" or self.is_kw("inl", nxt) or self.is_kw("inr", nxt)):
                self.i += 1
                continue
            break
        if braced:
            self.expect_sym("}")
        n = arms[0][1]
        idx = sorted(a[0] for a in arms)
        if any(a[1] != n for a in arms) or idx != list(range(1, n + 1)):
            raise ParseError(f"case branches must cover in#1..in#{n} exactly once", start)
        arms.sort(key=lambda a: a[0])
        return Case(v, tuple(a[3] for a in arms), tuple(a[2] for a in arms), self.span_from(start))


def parse(source: str, env=None) -> SourceFile:
    return _Parser(source, env).file()


def _finish(p):
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.tok.text!r} after end of term", {"end of input"})


def parse_comp(text, env=None, ctx: Optional[Context] = None) -> Comp:
    p = _Parser(text, env)
    m = p.comp(ctx.names() if ctx else [])
    _finish(p)
    return m


def parse_value(text, env=None, ctx: Optional[Context] = None) -> Value:
    p = _Parser(text, env)
    v = p.value(ctx.names() if ctx else [])
    _finish(p)
    return v


def parse_type(text, env=None):
    p = _Parser(text, env)
    t = p.any_type()
    _finish(p)
    return t


# ---------------------------------------------------------------- printer

_IDENT_OK = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


class _Printer:
    def __init__(self, named=True, reserved=()):
        self.named = named
        self.reserved = set(reserved)

    # types
    def vtype(self, t):
        if isinstance(t, Arrow):
            return f"{self.sum_level(t.arg)} -> {self.ctype(t.result)}"
        return self.sum_level(t)

    def ctype(self, c):
        return f"{self.sum_level(c.ret)} ! {self.effect(c.effect)}"

    def sum_level(self, t):
        if isinstance(t, Arrow):
            return f"({self.vtype(t)})"
        if isinstance(t, Sum) and len(t.items) >= 2:
            return " + ".join(self.prod_level(x) for x in t.items)
        return self.prod_level(t)

    def prod_level(self, t):
        if isinstance(t, Prod) and len(t.items) >= 2:
            return " * ".join(self.atom_type(x) for x in t.items)
        return self.atom_type(t)

    def atom_type(self, t):
        if isinstance(t, Base):
            return t.name
        if isinstance(t, Prod):
            if not t.items:
                return "unit"
            if len(t.items) == 1:
                return f"prod({self.vtype(t.items[0])})"
        if isinstance(t, Sum):
            if not t.items:
                return "void"
            if len(t.items) == 1:
                return f"sum({self.vtype(t.items[0])})"
        return f"({self.vtype(t)})"

    def sig(self, s):
        ops = ", ".join(f"{op} : {self.vtype(ot.arg)} ~> {self.vtype(ot.result)}" for op, ot in s.ops)
        return "{" + ops + "}" if ops else "{}"

    def effect(self, e):
        if e.theory is not None and e.theory.axioms:
            return e.theory.name
        if self.named and e.sig.name:
            return e.sig.name
        return self.sig(e.sig)

    # names
    def bad_name(self, name):
        return name in KEYWORDS or prims.is_prim_name(name) or name in self.reserved

    def fresh(self, hint, scope, used=True):
        if hint == "_" and not used:
            return "_"
        base = hint if hint and hint != "_" and _IDENT_OK.match(hint) else "x"
        if self.bad_name(base):
            base = "x"
        name, n = base, 1
        while name in scope or self.bad_name(name):
            name = f"{base}{n}"
            n += 1
        return name

    @staticmethod
    def _uses0(t, extra=0):
        from .syntax import free_vars
        return extra in free_vars(t)

    # values
    def value(self, v, scope):
        if isinstance(v, Lam):
            x = self.fresh(v.name, scope, self._uses0(v.body))
            eff = f" ! {self.effect(v.effect)}" if v.effect is not None else ""
            return f"fun ({x} : {self.vtype(v.arg)}){eff} -> {self.comp(v.body, scope + [x])}"
        return self.value_arg(v, scope)

    def value_arg(self, v, scope):
        if isinstance(v, Proj):
            return f"pi {v.index} {self.value_arg(v.value, scope)}"
        if isinstance(v, Inj):
            if v.arity == 2 and v.index in (1, 2):
                head = "inl" if v.index == 1 else "inr"
            else:
                head = f"in#{v.index}/{v.arity}"
            ann = f"[{self.vtype(v.type)}]" if v.type is not None else ""
            return f"{head}{ann} {self.value_arg(v.value, scope)}"
        return self.atom(v, scope)

    def atom(self, v, scope):
        if isinstance(v, Var):
            if v.index < len(scope):
                return scope[-1 - v.index]
            return f"?{v.index - len(scope)}"
        if isinstance(v, Tuple):
            return "<" + ", ".join(self.value(x, scope) for x in v.items) + ">"
        if isinstance(v, PrimApp):
            if not v.args:
                return v.name
            return f"{v.name}(" + ", ".join(self.value(x, scope) for x in v.args) + ")"
        return f"({self.value(v, scope)})"

    # computations
    def comp(self, m, scope):
        if isinstance(m, Return):
            return f"return {self.value(m.value, scope)}"
        if isinstance(m, Let):
            x = self.fresh(m.name, scope, self._uses0(m.body))
            return f"let {x} = {self.comp(m.bound, scope)} in {self.comp(m.body, scope + [x])}"
        if isinstance(m, OpCall):
            return f"{m.op}({self.value(m.arg, scope)})"
        if isinstance(m, App):
            return f"{self.value_arg(m.fn, scope)} {self.value_arg(m.arg, scope)}"
        if isinstance(m, Handle):
            clauses = []
            for c in m.handler.clauses:
                from .syntax import free_vars
                fv = free_vars(c.body)
                x = self.fresh(c.x_name, scope, 1 in fv)
                k = self.fresh(c.k_name, scope + [x], 0 in fv)
                clauses.append(f"{c.op}({x}, {k}) -> {self.comp(c.body, scope + [x, k])}")
            y = self.fresh(m.name, scope, self._uses0(m.body))
            hbody = " ; ".join(clauses)
            hbody = "{ " + hbody + " }" if hbody else "{}"
            return (f"handle {self.comp(m.subject, scope)} with {self.effect(m.effect)} {hbody} "
                    f"to {y}. {self.comp(m.body, scope + [y])}")
        if isinstance(m, Case):
            arms = []
            n = m.arity
            for i, b in enumerate(m.branches, 1):
                head = ("inl" if i == 1 else "inr") if n == 2 else f"in#{i}/{n}"
                x = self.fresh(m.name_of(i - 1), scope, self._uses0(b))
                arms.append(f"{head} {x} -> {self.comp(b, scope + [x])}")
            return f"case {self.value(m.scrutinee, scope)} of {{ " + " ; ".join(arms) + " }"
        raise TypeError(f"not a computation: {m!r}")


def _op_names(t, acc):
    if isinstance(t, OpCall):
        acc.add(t.op)
    for name in getattr(t, "__slots__", ()):
        child = getattr(t, name, None)
        if isinstance(child, (Value, Comp, Handler, Clause)):
            _op_names(child, acc)
        elif isinstance(child, tuple):
            for c in child:
                if isinstance(c, (Value, Comp, Handler, Clause)):
                    _op_names(c, acc)
    if isinstance(t, Handler):
        for c in t.clauses:
            acc.add(c.op)
    return acc


def print_type(t, named=True) -> str:
    p = _Printer(named)
    if isinstance(t, CompType):
        return p.ctype(t)
    return p.vtype(t)


def print_sig(s: Signature) -> str:
    return _Printer().sig(s)


def print_term(t, ctx: Optional[Context] = None, named=True) -> str:
    ops = _op_names(t, set())
    p = _Printer(named, ops)
    scope = ctx.names() if ctx else []
    if isinstance(t, Comp):
        return p.comp(t, scope)
    return p.value(t, scope)


def print_file(f: SourceFile) -> str:
    out = []
    for d in f.decls:
        if isinstance(d, SigDecl):
            out.append(f"sig {d.name} = {print_sig(d.sig)}")
        elif isinstance(d, TheoryDecl):
            th = d.theory
            p = _Printer(True)
            base = th.sig.name if th.sig.name else p.sig(th.sig)
            lines = [f"theory {d.name} over {base} {{"]
            for ax in th.axioms:
                ctx = Context(tuple(zip(ax.ctx_names, ax.ctx_types)))
                params = _params(ctx)
                lines.append(f"  axiom {ax.name}{params} : {p.vtype(ax.result)} =")
                lines.append(f"    {print_term(ax.lhs, ctx)}")
                lines.append(f"    ~ {print_term(ax.rhs, ctx)}")
            lines.append("}")
            out.append("\n".join(lines))
        else:
            p = _Printer(True)
            head = "def" if isinstance(d, TermDecl) else "goal"
            ty = print_type(d.type)
            if isinstance(d, TermDecl):
                out.append(f"{head} {d.name}{_params(d.ctx)} : {ty} =\n  {print_term(d.term, d.ctx)}")
            else:
                out.append(f"{head} {d.name}{_params(d.ctx)} : {ty} =\n  {print_term(d.lhs, d.ctx)}"
                           f"\n  == {print_term(d.rhs, d.ctx)}")
    return "\n\n".join(out) + "\n"


def _params(ctx: Context):
    if not len(ctx):
        return ""
    return "(" + ", ".join(f"{n} : {print_type(t)}" for n, t in ctx.bindings) + ")"
