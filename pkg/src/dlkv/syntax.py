"""Concrete syntax: lexer, recursive-descent parser and printer.

Formulas::

    ~ phi    phi & psi    phi | psi    phi -> psi    phi <-> psi
    K{a,b} phi    K{a|theta} phi    K{a} x    K{a} (x, y)
    C{{a},{b,d}|theta} phi    C{a,b} phi    C{a,b} (x, y)
    [e] phi    <e> phi    <K{a}> phi    <C{a,b}> phi
    top    bot    P(x, y)    p    x = y    x != y    x < y    x <= y

Terms::

    x@a    c    0    undef    f(x, y)    x + y    desc(x, {a}, phi)
    after(e, x)    if phi then x else y    ?(phi)

Events::

    !()    !(a:d, b:{d,e}, v@a := t, phi)    event{pre phi; access a:{a,d}; set v@a := t}

The sugar ``v@a := t`` inside ``!( )`` also adds the required precondition
``K{a} t``; the ``event{...}`` form is taken literally.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .core import (
    EQ,
    TOP,
    BOT,
    UNDEF,
    After,
    And,
    App,
    Box,
    Common,
    Const,
    Desc,
    Event,
    Expr,
    Formula,
    Ite,
    Know,
    Not,
    Pred,
    Term,
    Var,
    Vocabulary,
    VocabularyError,
    bool_term,
    common_values,
    conj,
    dia_common,
    dia_event,
    diamond,
    disj,
    eq,
    iff,
    implies,
    know_cond,
    know_value,
    know_values,
    make_event,
    match_implies,
    neq,
    singletons,
    sorted_group,
    sorted_supergroup,
)


class ParseError(ValueError):
    def __init__(self, message: str, src: str, offset: int, expected: Iterable[str] = ()):
        self.message = message
        self.src = src
        self.offset = max(0, min(offset, len(src)))
        self.expected = sorted(set(expected))
        self.line = src.count("\n", 0, self.offset) + 1
        self.column = self.offset - (src.rfind("\n", 0, self.offset) + 1) + 1
        super().__init__(str(self))

    def __str__(self) -> str:
        text = f"{self.line}:{self.column}: {self.message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        return text


KEYWORDS = {"top", "bot", "undef", "if", "then", "else", "desc", "after", "K", "C", "event", "pre", "access", "set"}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<op><->|->|<=|>=|!=|:=|\.\.|[~&|<>=!@{}()\[\],:;+?/]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "kw", "op", "eof"
    text: str
    offset: int


def tokenize(src: str) -> list[Token]:
    toks = []
    pos = 0
    n = len(src)
    while True:
        while pos < n and src[pos].isspace():
            pos += 1
        if pos < n and src[pos] == "#":
            while pos < n and src[pos] != "\n":
                pos += 1
            continue
        if pos >= n:
            break
        m = _TOKEN_RE.match(src, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {src[pos]!r}", src, pos)
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        if kind == "ident" and text in KEYWORDS:
            kind = "kw"
        toks.append(Token(kind, text, start))
        pos = m.end()
    toks.append(Token("eof", "", n))
    return toks


# Parser-internal wrappers for identifiers whose kind is fixed by context,
# and for term tuples.
@dataclass(frozen=True)
class _Ambiguous:
    name: str
    args: tuple

    def as_term(self) -> Term:
        return App(self.name, self.args) if self.args is not None else Const(self.name)

    def as_formula(self) -> Formula:
        return Pred(self.name, self.args or ())


@dataclass(frozen=True)
class _Tuple:
    items: tuple


_RELOPS = {"=": EQ, "!=": "!=", "<": "lt", "<=": "leq", ">": "gt", ">=": "geq"}


class Parser:
    def __init__(self, src: str, voc: Vocabulary | None = None):
        self.src = src
        self.voc = voc
        self.toks = tokenize(src)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, message: str, expected: Iterable[str] = ()) -> ParseError:
        return ParseError(message, self.src, self.tok.offset, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", [repr(text)])
        return self.advance()

    def ident(self, what: str = "identifier") -> str:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", [what])
        return self.advance().text

    def end(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after a complete expression", ["end of input"])

    # -- coercions
    def formula(self, node, offset: int | None = None) -> Formula:
        if isinstance(node, Formula):
            return node
        if isinstance(node, _Ambiguous):
            return node.as_formula()
        where = self.tok.offset if offset is None else offset
        raise ParseError("expected a formula, found a term", self.src, where, ["formula"])

    def term(self, node, offset: int | None = None) -> Term:
        if isinstance(node, Term):
            return node
        if isinstance(node, _Ambiguous):
            return node.as_term()
        where = self.tok.offset if offset is None else offset
        raise ParseError("expected a term, found a formula", self.src, where, ["term"])

    # -- formulas (mixed: may yield a term until context decides)
    def parse_formula(self) -> Formula:
        start = self.tok.offset
        return self.formula(self.mixed(), start)

    def mixed(self):
        left = self.implication()
        while self.at("<->"):
            start = self.tok.offset
            self.advance()
            left = iff(self.formula(left, start), self.formula(self.implication()))
        return left

    def implication(self):
        left = self.disjunction()
        if self.at("->"):
            start = self.tok.offset
            self.advance()
            return implies(self.formula(left, start), self.formula(self.implication()))
        return left

    def disjunction(self):
        left = self.conjunction()
        while self.at("|"):
            start = self.tok.offset
            self.advance()
            left = disj(self.formula(left, start), self.formula(self.conjunction()))
        return left

    def conjunction(self):
        left = self.unary()
        while self.at("&"):
            start = self.tok.offset
            self.advance()
            left = And(self.formula(left, start), self.formula(self.unary()))
        return left

    def unary(self):
        t = self.tok
        if self.at("~"):
            self.advance()
            return Not(self.formula(self.unary()))
        if self.at("K") and self.peek().text == "{":
            self.advance()
            A, theta = self.group_with_cond()
            return self.know_operand(A, theta)
        if self.at("C") and self.peek().text == "{":
            self.advance()
            sg, theta = self.supergroup_with_cond()
            return self.common_operand(sg, theta)
        if self.at("["):
            self.advance()
            e = self.parse_event()
            self.expect("]")
            return Box(e, self.formula(self.unary()))
        if self.at("<"):
            self.advance()
            if self.at("K") and self.peek().text == "{":
                self.advance()
                A, theta = self.group_with_cond()
                self.expect(">")
                body = self.formula(self.unary())
                return Not(know_cond(A, theta, Not(body)) if theta != TOP else Know(A, Not(body)))
            if self.at("C") and self.peek().text == "{":
                self.advance()
                sg, theta = self.supergroup_with_cond()
                self.expect(">")
                return dia_common(sg, theta, self.formula(self.unary()))
            e = self.parse_event()
            self.expect(">")
            return dia_event(e, self.formula(self.unary()))
        if self.at("top"):
            self.advance()
            return TOP
        if self.at("bot"):
            self.advance()
            return BOT
        node = self.additive()
        if isinstance(node, _Tuple):
            return node
        if self.tok.kind == "op" and self.tok.text in _RELOPS:
            if isinstance(node, Formula):
                raise self.error("a relation needs terms on both sides", ["term"])
            op = _RELOPS[self.advance().text]
            rstart = self.tok.offset
            right = self.term(self.additive(), rstart)
            left = self.term(node, t.offset)
            if op == "!=":
                return neq(left, right)
            return Pred(op, (left, right))
        return node

    def know_operand(self, A: frozenset, theta: Formula):
        start = self.tok.offset
        node = self.unary()
        if isinstance(node, _Tuple):
            return know_values(A, node.items, theta)
        if isinstance(node, _Ambiguous) and self.resolves_to_term(node):
            node = node.as_term()
        if isinstance(node, Term):
            return know_value(A, node, theta)
        body = self.formula(node, start)
        return know_cond(A, theta, body) if theta != TOP else Know(A, body)

    def common_operand(self, sg: frozenset, theta: Formula):
        start = self.tok.offset
        node = self.unary()
        if isinstance(node, _Ambiguous) and self.resolves_to_term(node):
            node = node.as_term()
        if isinstance(node, (_Tuple, Term)):
            xs = node.items if isinstance(node, _Tuple) else (node,)
            c = common_values(sg, xs)
            return Common(sg, theta, c.body)
        return Common(sg, theta, self.formula(node, start))

    def resolves_to_term(self, node: _Ambiguous) -> bool:
        if self.voc is None:
            return False
        if node.args is None:
            return node.name in self.voc.constants or node.name.isdigit()
        return node.name in self.voc.functions

    # -- groups
    def agent_list(self) -> list[str]:
        names = [self.ident("agent")]
        while self.at(","):
            self.advance()
            names.append(self.ident("agent"))
        return names

    def group(self) -> frozenset:
        self.expect("{")
        names = self.agent_list()
        self.expect("}")
        return frozenset(names)

    def group_with_cond(self) -> tuple[frozenset, Formula]:
        self.expect("{")
        names = self.agent_list()
        theta = TOP
        if self.at("|"):
            self.advance()
            theta = self.parse_formula()
        self.expect("}")
        return frozenset(names), theta

    def supergroup_with_cond(self) -> tuple[frozenset, Formula]:
        self.expect("{")
        if self.at("{"):
            groups = [self.group()]
            while self.at(","):
                self.advance()
                groups.append(self.group())
            sg = frozenset(groups)
        else:
            sg = singletons(self.agent_list())
        theta = TOP
        if self.at("|"):
            self.advance()
            theta = self.parse_formula()
        self.expect("}")
        return sg, theta

    # -- terms
    def parse_term(self) -> Term:
        start = self.tok.offset
        return self.term(self.additive(), start)

    def additive(self):
        start = self.tok.offset
        node = self.primary()
        while self.at("+"):
            self.advance()
            rstart = self.tok.offset
            right = self.term(self.primary(), rstart)
            node = App("plus", (self.term(node, start), right))
        return node

    def term_args(self) -> tuple:
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.parse_term())
            while self.at(","):
                self.advance()
                args.append(self.parse_term())
        self.expect(")")
        return tuple(args)

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(t.text)
        if self.at("undef"):
            self.advance()
            return UNDEF
        if self.at("("):
            self.advance()
            inner = self.mixed()
            if self.at(","):
                items = [self.term(inner, t.offset)]
                while self.at(","):
                    self.advance()
                    if self.at(")"):
                        break
                    items.append(self.parse_term())
                self.expect(")")
                return _Tuple(tuple(items))
            self.expect(")")
            return inner
        if self.at("desc"):
            self.advance()
            self.expect("(")
            base = self.parse_term()
            self.expect(",")
            A = self.group()
            self.expect(",")
            cond = self.parse_formula()
            self.expect(")")
            return Desc(base, A, cond)
        if self.at("after"):
            self.advance()
            self.expect("(")
            e = self.parse_event()
            self.expect(",")
            base = self.parse_term()
            self.expect(")")
            return After(e, base)
        if self.at("if"):
            self.advance()
            cond = self.parse_formula()
            self.expect("then")
            x = self.parse_term()
            self.expect("else")
            y = self.parse_term()
            return Ite(x, cond, y)
        if self.at("?"):
            self.advance()
            self.expect("(")
            cond = self.parse_formula()
            self.expect(")")
            return bool_term(cond)
        if t.kind == "ident":
            self.advance()
            if self.at("@"):
                self.advance()
                owner = self.ident("agent")
                return Var(t.text, owner)
            args = self.term_args() if self.at("(") else None
            return self.resolve_ident(t, args)
        found = t.text or "end of input"
        raise self.error(f"unexpected {found!r}", ["term", "formula"])

    def resolve_ident(self, t: Token, args):
        voc = self.voc
        if voc is None:
            return _Ambiguous(t.text, args)
        if args is None:
            if t.text in voc.predicates and voc.predicates[t.text] == 0:
                return Pred(t.text, ())
            if t.text in voc.constants:
                return Const(t.text)
            found = [v for v in voc.variables if v.name == t.text]
            if len(found) == 1:
                return found[0]
            raise ParseError(f"unknown identifier {t.text!r}", self.src, t.offset)
        if t.text in voc.predicates:
            return Pred(t.text, args)
        if t.text in voc.functions:
            return App(t.text, args)
        raise ParseError(f"unknown predicate or function {t.text!r}", self.src, t.offset)

    # -- events
    def parse_event(self) -> Event:
        if self.at("!"):
            self.advance()
            self.expect("(")
            pre, access, post = [], {}, {}
            if not self.at(")"):
                self.event_item(pre, access, post)
                while self.at(","):
                    self.advance()
                    self.event_item(pre, access, post)
            self.expect(")")
            for v, x in post.items():
                pre.append(know_value(frozenset([v.owner]), x))
            return make_event(pre, access, post)
        if self.at("event"):
            self.advance()
            self.expect("{")
            pre, access, post = [], {}, {}
            while not self.at("}"):
                if self.at("pre"):
                    self.advance()
                    pre.append(self.parse_formula())
                elif self.at("access"):
                    self.advance()
                    a = self.ident("agent")
                    self.expect(":")
                    access[a] = self.group()
                elif self.at("set"):
                    self.advance()
                    v = self.var()
                    self.expect(":=")
                    post[v] = self.parse_term()
                else:
                    raise self.error(f"unexpected {self.tok.text!r}", ["pre", "access", "set", "}"])
                if self.at(";"):
                    self.advance()
                elif not self.at("}"):
                    raise self.error(f"unexpected {self.tok.text!r}", ["';'", "'}'"])
            self.expect("}")
            return make_event(pre, access, post)
        raise self.error(f"unexpected {self.tok.text or 'end of input'!r}", ["'!'", "event"])

    def var(self) -> Var:
        name = self.ident("variable")
        self.expect("@")
        return Var(name, self.ident("agent"))

    def event_item(self, pre: list, access: dict, post: dict) -> None:
        t, nxt = self.tok, self.peek()
        if t.kind == "ident" and nxt.text == ":" and nxt.kind == "op":
            a = self.advance().text
            self.advance()
            srcs = self.group() if self.at("{") else frozenset([self.ident("agent")])
            access[a] = access.get(a, frozenset([a])) | srcs | {a}
            return
        if t.kind == "ident" and nxt.text == "@" and self.peek(3).text == ":=":
            v = self.var()
            self.expect(":=")
            post[v] = self.parse_term()
            return
        pre.append(self.parse_formula())


def _check(expr: Expr, voc: Vocabulary | None):
    if voc is not None:
        voc.check(expr)
    return expr


def parse_formula(src: str, voc: Vocabulary | None = None) -> Formula:
    p = Parser(src, voc)
    phi = p.parse_formula()
    p.end()
    return _check(phi, voc)


def parse_term(src: str, voc: Vocabulary | None = None) -> Term:
    p = Parser(src, voc)
    x = p.parse_term()
    p.end()
    return _check(x, voc)


def parse_event(src: str, voc: Vocabulary | None = None) -> Event:
    p = Parser(src, voc)
    e = p.parse_event()
    p.end()
    return _check(e, voc)


def parse_expr(src: str, voc: Vocabulary | None = None) -> Formula | Term:
    """A formula if the text reads as one, otherwise a term."""
    p = Parser(src, voc)
    start = p.tok.offset
    node = p.mixed()
    p.end()
    if isinstance(node, _Tuple):
        raise ParseError("a bare tuple is not an expression", src, start)
    if isinstance(node, _Ambiguous):
        node = node.as_term() if p.resolves_to_term(node) else node.as_formula()
    return _check(node, voc)


# --------------------------------------------------------------------------
# Printing

_IFF, _IMP, _OR, _AND, _UNARY = 1, 2, 3, 4, 5


def print_expr(x: Expr) -> str:
    if isinstance(x, Formula):
        return _fmt(x, 0)
    if isinstance(x, Term):
        return _term(x)
    if isinstance(x, Event):
        return print_event(x)
    raise TypeError(f"cannot print {type(x).__name__}")


def _group(g: Iterable[str]) -> str:
    return "{" + ",".join(sorted_group(g)) + "}"


def _supergroup(sg: frozenset, theta: Formula) -> str:
    if all(len(g) == 1 for g in sg):
        inner = ",".join(sorted(next(iter(g)) for g in sg))
    else:
        inner = ",".join(_group(g) for g in sorted_supergroup(sg))
    if theta != TOP:
        inner += "|" + _fmt(theta, 0)
    return "{" + inner + "}"


def _paren(s: str, level: int, need: int) -> str:
    return f"({s})" if level < need else s


def _iff_parts(phi: Formula):
    if isinstance(phi, And):
        l, r = match_implies(phi.left), match_implies(phi.right)
        if l and r and l[0] == r[1] and l[1] == r[0]:
            return l
    return None


def _know_value_term(A: frozenset, body: Formula):
    m = match_implies(body)
    if not m:
        return None
    theta, atom = m
    if isinstance(atom, Pred) and atom.name == EQ:
        x, d = atom.args
        if isinstance(d, Desc) and d.base == x and d.group == A and d.cond == theta:
            return theta, x
    return None


def _value_operand(x: Term) -> str:
    # bare constants and applications would reread as predicates
    if isinstance(x, (Const, App)):
        return f"({_term(x)},)"
    return _term(x)


def _flatten_and(phi: Formula) -> list[Formula]:
    out, stack = [], [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, And):
            stack.append(f.right)
            stack.append(f.left)
        else:
            out.append(f)
    return out


def _common_values_terms(sg: frozenset, body: Formula):
    first = sorted_supergroup(sg)[0]
    xs = []
    for k in _flatten_and(body):
        if not isinstance(k, Know):
            return None
        kv = _know_value_term(k.group, k.body)
        if kv is None or kv[0] != TOP:
            return None
        if k.group == first:
            xs.append(kv[1])
    if xs and common_values(sg, xs).body == body:
        return xs
    return None


def _fmt(phi: Formula, need: int) -> str:
    if phi == TOP:
        return "top"
    if phi == BOT:
        return "bot"
    if isinstance(phi, Pred):
        if phi.name == EQ:
            s = f"{_term(phi.args[0])} = {_term(phi.args[1])}"
            return _paren(s, _UNARY - 1, need)
        if not phi.args:
            return phi.name
        return f"{phi.name}({', '.join(_term(a) for a in phi.args)})"
    if isinstance(phi, Not):
        a = phi.arg
        if isinstance(a, Pred) and a.name == EQ:
            s = f"{_term(a.args[0])} != {_term(a.args[1])}"
            return _paren(s, _UNARY - 1, need)
        if isinstance(a, And) and isinstance(a.right, Not):
            if isinstance(a.left, Not):
                s = f"{_fmt(a.left.arg, _OR)} | {_fmt(a.right.arg, _AND)}"
                return _paren(s, _OR, need)
            s = f"{_fmt(a.left, _OR)} -> {_fmt(a.right.arg, _IMP)}"
            return _paren(s, _IMP, need)
        if isinstance(a, Know) and isinstance(a.body, Not):
            return f"<K{_group(a.group)}> {_fmt(a.body.arg, _UNARY)}"
        if isinstance(a, Box) and isinstance(a.body, Not):
            return f"<{print_event(a.event)}> {_fmt(a.body.arg, _UNARY)}"
        if isinstance(a, Common) and isinstance(a.body, Not):
            return f"<C{_supergroup(a.supergroup, a.cond)}> {_fmt(a.body.arg, _UNARY)}"
        return f"~{_fmt(a, _UNARY)}"
    if isinstance(phi, And):
        parts = _iff_parts(phi)
        if parts:
            s = f"{_fmt(parts[0], _IFF)} <-> {_fmt(parts[1], _IMP)}"
            return _paren(s, _IFF, need)
        s = f"{_fmt(phi.left, _AND)} & {_fmt(phi.right, _UNARY)}"
        return _paren(s, _AND, need)
    if isinstance(phi, Know):
        kv = _know_value_term(phi.group, phi.body)
        if kv:
            theta, x = kv
            g = sorted_group(phi.group)
            head = "{" + ",".join(g) + ("" if theta == TOP else "|" + _fmt(theta, 0)) + "}"
            return f"K{head} {_value_operand(x)}"
        return f"K{_group(phi.group)} {_fmt(phi.body, _UNARY)}"
    if isinstance(phi, Common):
        xs = _common_values_terms(phi.supergroup, phi.body)
        head = f"C{_supergroup(phi.supergroup, phi.cond)}"
        if xs is not None:
            if len(xs) == 1:
                return f"{head} {_value_operand(xs[0])}"
            return f"{head} ({', '.join(_term(x) for x in xs)})"
        return f"{head} {_fmt(phi.body, _UNARY)}"
    if isinstance(phi, Box):
        return f"[{print_event(phi.event)}] {_fmt(phi.body, _UNARY)}"
    raise TypeError(f"not a formula: {phi!r}")


def _term(x: Term) -> str:
    if isinstance(x, Const):
        return x.name
    if isinstance(x, Var):
        return f"{x.name}@{x.owner}"
    if isinstance(x, App):
        return f"{x.fun}({', '.join(_term(a) for a in x.args)})"
    if isinstance(x, Ite):
        return f"(if {_fmt(x.cond, 0)} then {_term(x.then)} else {_term(x.other)})"
    if isinstance(x, Desc):
        return f"desc({_term(x.base)}, {_group(x.group)}, {_fmt(x.cond, 0)})"
    if isinstance(x, After):
        return f"after({print_event(x.event)}, {_term(x.base)})"
    raise TypeError(f"not a term: {x!r}")


def print_event(e: Event) -> str:
    pres = set(e.pre)
    auto = {know_value(frozenset([v.owner]), t) for v, t in e.post}
    sugar = all(a in g for a, g in e.access) and auto <= pres
    if not sugar:
        parts = [f"pre {_fmt(p, 0)}" for p in e.pre]
        parts += [f"access {a}:{_group(g)}" for a, g in e.access]
        parts += [f"set {v.name}@{v.owner} := {_term(t)}" for v, t in e.post]
        return "event{" + "; ".join(parts) + "}"
    items = []
    for a, g in e.access:
        rest = sorted(g - {a})
        items.append(f"{a}:{rest[0]}" if len(rest) == 1 else f"{a}:{_group(rest)}")
    items += [f"{v.name}@{v.owner} := {_term(t)}" for v, t in e.post]
    items += [_fmt(p, 0) for p in e.pre if p not in auto]
    return "!(" + ", ".join(items) + ")"


# --------------------------------------------------------------------------
# Model files

from .model import (  # noqa: E402  (model imports core only)
    EpistemicModel,
    FirstOrderModel,
    ModelError,
    build_numbers_game,
    builtin_order,
    saturating_add,
)


def _value(tok: Token, src: str):
    if tok.kind == "num":
        return int(tok.text)
    if tok.kind == "ident":
        return tok.text
    raise ParseError(f"expected a domain value, found {tok.text!r}", src, tok.offset, ["value"])


class _LineParser(Parser):
    def value(self):
        return _value(self.advance(), self.src)

    def values_in_parens(self) -> tuple:
        self.expect("(")
        vals = []
        if not self.at(")"):
            vals.append(self.value())
            while self.at(","):
                self.advance()
                vals.append(self.value())
        self.expect(")")
        return tuple(vals)

    def brace_list(self, item):
        self.expect("{")
        out = []
        if not self.at("}"):
            out.append(item())
            while self.at(","):
                self.advance()
                out.append(item())
        self.expect("}")
        return out


def _logical_lines(src: str):
    """Yield (offset, text) per non-empty line, joining brace continuations."""
    offset = 0
    buf, buf_off, depth = [], 0, 0
    for raw in src.splitlines(keepends=True):
        line = raw.split("#", 1)[0]
        if not buf:
            buf_off = offset
        buf.append(line)
        depth += line.count("{") - line.count("}")
        offset += len(raw)
        if depth <= 0:
            text = "".join(buf)
            if text.strip():
                yield buf_off, text
            buf, depth = [], 0
    if buf and "".join(buf).strip():
        yield buf_off, "".join(buf)


@dataclass
class _ModelDraft:
    agents: list = field(default_factory=list)
    domain: list | None = None
    range_domain: bool = False
    undef: object = None
    consts: dict = field(default_factory=dict)
    variables: list = field(default_factory=list)
    funs: dict = field(default_factory=dict)
    preds: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict)
    rels: dict = field(default_factory=dict)


def parse_model(src: str) -> EpistemicModel:
    d = _ModelDraft()
    for off, text in _logical_lines(src):
        try:
            _model_line(d, text)
        except ParseError as err:
            raise ParseError(err.message, src, off + err.offset, err.expected) from None
        except (ModelError, VocabularyError) as err:
            raise ParseError(str(err), src, off) from None
    try:
        return _finish_model(d)
    except (ModelError, VocabularyError) as err:
        raise ParseError(str(err), src, len(src)) from None


def _model_line(d: _ModelDraft, text: str) -> None:
    # same length, so offsets stay valid
    p = _LineParser(text.replace("saturating-add", "saturating_add"))
    head = p.tok
    if head.kind not in ("ident", "kw"):
        raise p.error(f"unexpected {head.text!r}", ["declaration"])
    key = p.advance().text
    if key == "agents":
        p.expect(":")
        d.agents.extend(p.agent_list())
    elif key == "domain":
        p.expect(":")
        if p.tok.kind == "num" and p.peek().text == "..":
            lo = int(p.advance().text)
            p.advance()
            if p.tok.kind != "num":
                raise p.error("expected an upper bound", ["number"])
            hi = int(p.advance().text)
            d.domain = list(range(lo, hi + 1))
            d.range_domain = True
        else:
            d.domain = p.brace_list(p.value)
    elif key == "undef":
        p.expect(":")
        d.undef = p.value()
    elif key == "const":
        name = p.advance().text
        p.expect("=")
        d.consts[name] = p.value()
    elif key == "var":
        d.variables.append(p.var())
    elif key in ("fun", "pred"):
        name = p.ident("symbol name")
        p.expect("/")
        if p.tok.kind != "num":
            raise p.error("expected an arity", ["number"])
        arity = int(p.advance().text)
        p.expect("=")
        if key == "fun":
            d.funs[name] = (arity, _fun_body(p))
        else:
            d.preds[name] = (arity, _pred_body(p))
    elif key == "state":
        name = p.ident("state name")
        row = p.brace_list(lambda: _assignment(p))
        if name in d.states:
            raise ParseError(f"state {name} declared twice", text, head.offset)
        d.states[name] = row
    elif key == "rel":
        agent = p.ident("agent")
        p.expect(":")
        kind = p.ident("partition, universal or identity")
        if kind == "partition":
            d.rels[agent] = p.brace_list(lambda: p.brace_list(lambda: p.ident("state")))
        elif kind in ("universal", "identity"):
            d.rels[agent] = kind
        else:
            raise ParseError(f"unknown relation kind {kind!r}", text, p.toks[p.i - 1].offset)
    else:
        raise ParseError(f"unknown declaration {key!r}", text, head.offset,
                         ["agents", "domain", "undef", "const", "var", "fun", "pred", "state", "rel"])
    p.end()


def _fun_body(p: _LineParser):
    if p.tok.text == "saturating_add":
        p.advance()
        return "saturating-add"
    if p.tok.text != "table":
        raise p.error(f"unexpected {p.tok.text!r}", ["saturating-add", "table"])
    p.advance()

    def entry():
        args = p.values_in_parens()
        p.expect("->")
        return args, p.value()

    return dict(p.brace_list(entry))


def _pred_body(p: _LineParser):
    if p.tok.text == "builtin":
        p.advance()
        return "builtin"
    if p.tok.text != "table":
        raise p.error(f"unexpected {p.tok.text!r}", ["builtin", "table"])
    p.advance()
    return frozenset(p.brace_list(p.values_in_parens))


def _assignment(p: _LineParser):
    name = p.ident("variable")
    owner = None
    if p.at("@"):
        p.advance()
        owner = p.ident("agent")
    p.expect("=")
    return name, owner, p.value()


def _finish_model(d: _ModelDraft) -> EpistemicModel:
    if d.domain is None:
        raise ModelError("missing domain declaration")
    domain = list(d.domain)
    undef = d.undef
    if undef is None:
        if d.range_domain:
            undef = "U"
        elif "U" in domain:
            undef = "U"
        else:
            raise ModelError("no undefined value: declare 'undef: <value>' or include U")
    if undef not in domain:
        domain.append(undef)
    funs = {}
    for name, (arity, body) in d.funs.items():
        if body == "saturating-add":
            if arity != 2:
                raise ModelError("saturating-add is binary")
            body = saturating_add(domain, undef)
        funs[name] = (arity, body)
    preds = {}
    for name, (arity, body) in d.preds.items():
        if body == "builtin":
            if arity != 2:
                raise ModelError(f"builtin {name} is binary")
            body = builtin_order(name, domain, undef)
        preds[name] = (arity, body)
    fom = FirstOrderModel(tuple(domain), undef, d.consts, funs, preds)
    variables = list(d.variables)
    for v in variables:
        if v.owner not in d.agents:
            raise ModelError(f"owner {v.owner} of {v.name} is not declared in agents")
    states = list(d.states)
    valuation = {}
    for s, row in d.states.items():
        vals = {}
        for name, owner, value in row:
            cands = [v for v in variables if v.name == name and (owner is None or v.owner == owner)]
            if len(cands) != 1:
                raise ModelError(f"state {s}: unknown or ambiguous variable {name}")
            vals[cands[0]] = value
        valuation[s] = vals
    partitions = {}
    for a in d.agents:
        rel = d.rels.get(a)
        if rel is None:
            raise ModelError(f"missing relation for agent {a}")
        if rel == "universal":
            partitions[a] = [states]
        elif rel == "identity":
            partitions[a] = [[s] for s in states]
        else:
            partitions[a] = rel
    for a in d.rels:
        if a not in d.agents:
            raise ModelError(f"relation for undeclared agent {a}")
    return EpistemicModel(fom, states, partitions, valuation)


def print_model(M: EpistemicModel) -> str:
    fom = M.fom
    lines = [f"agents: {', '.join(M.agents)}"]
    dom = list(fom.domain)
    proper = [v for v in dom if v != fom.undef]
    if proper and all(isinstance(v, int) for v in proper) and proper == list(range(proper[0], proper[-1] + 1)) \
            and fom.undef == "U":
        lines.append(f"domain: {proper[0]}..{proper[-1]}")
    else:
        lines.append("domain: {" + ", ".join(str(v) for v in dom) + "}")
        lines.append(f"undef: {fom.undef}")
    for name, v in sorted(fom.constants.items()):
        if name in ("undef",) or (name.isdigit() and v == int(name)):
            continue
        lines.append(f"const {name} = {v}")
    for v in M.variables:
        lines.append(f"var {v.name}@{v.owner}")
    for name, (arity, table) in sorted(fom.functions.items()):
        if arity == 2 and all(isinstance(x, int) for x in proper) and proper \
                and dict(table) == saturating_add(dom, fom.undef):
            lines.append(f"fun {name}/{arity} = saturating-add")
            continue
        entries = ", ".join(f"({', '.join(map(str, k))})->{table[k]}" for k in sorted(table, key=str))
        lines.append(f"fun {name}/{arity} = table {{{entries}}}")
    for name, (arity, rel) in sorted(fom.predicates.items()):
        try:
            if arity == 2 and rel == builtin_order(name, dom, fom.undef):
                lines.append(f"pred {name}/{arity} = builtin")
                continue
        except (ModelError, TypeError):
            pass
        entries = ", ".join(f"({', '.join(map(str, t))})" for t in sorted(rel, key=str))
        lines.append(f"pred {name}/{arity} = table {{{entries}}}")
    for i, s in enumerate(M.states):
        vals = ", ".join(f"{v.name}@{v.owner}={M.values[v][i]}" for v in M.variables)
        lines.append(f"state {s} {{{vals}}}")
    for a in M.agents:
        blocks = M.partition(a)
        if len(blocks) == 1 and len(M.states) > 1:
            lines.append(f"rel {a}: universal")
            continue
        order = {s: i for i, s in enumerate(M.states)}
        parts = ", ".join("{" + ", ".join(sorted(b, key=order.get)) + "}" for b in blocks)
        lines.append(f"rel {a}: partition {{{parts}}}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Scenario scripts


@dataclass(frozen=True)
class ScenarioStep:
    kind: str  # "apply" or "assert"
    text: str
    line: int
    event: Event | None = None
    formula: Formula | None = None
    states: tuple | None = None  # None means all states


@dataclass(frozen=True)
class ScenarioScript:
    model: EpistemicModel
    model_ref: str
    steps: tuple


_NG_REF = re.compile(r"numbers_game\(\s*(\d+)\s*\)$")


def load_model_ref(ref: str, base: Path | None = None) -> EpistemicModel:
    m = _NG_REF.match(ref.strip())
    if m:
        return build_numbers_game(int(m.group(1)))
    path = Path(ref.strip())
    if base is not None and not path.is_absolute():
        path = base / path
    return parse_model(path.read_text())


def parse_scenario(src: str, base: Path | None = None) -> ScenarioScript:
    model = ref = None
    steps = []
    offset = 0
    for lineno, raw in enumerate(src.splitlines(keepends=True), 1):
        line_off = offset
        offset += len(raw)
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        col = raw.index(text[0])
        keyword, _, rest = text.partition(" ")
        rest_off = line_off + col + len(keyword) + 1
        try:
            if keyword == "model:":
                ref = rest.strip()
                model = load_model_ref(ref, base)
            elif model is None:
                raise ParseError("the script must start with a 'model:' line", src, line_off + col, ["model:"])
            elif keyword == "apply":
                e = parse_event(rest, _scenario_voc(model))
                steps.append(ScenarioStep("apply", rest.strip(), lineno, event=e))
            elif keyword == "assert":
                body, at, where = rest.rpartition(" at ")
                if not at:
                    raise ParseError("assert needs 'at <state|all>'", src, line_off + col + len(text), ["at"])
                phi = parse_formula(body, _scenario_voc(model))
                where = where.strip()
                states = None if where == "all" else tuple(s.strip() for s in where.split(","))
                steps.append(ScenarioStep("assert", body.strip(), lineno, formula=phi, states=states))
            else:
                raise ParseError(f"unknown step {keyword!r}", src, line_off + col, ["apply", "assert", "model:"])
        except ParseError as err:
            if err.src is src:
                raise
            raise ParseError(err.message, src, rest_off + err.offset, err.expected) from None
        except (OSError, ModelError) as err:
            raise ParseError(str(err), src, line_off + col) from None
    if model is None:
        raise ParseError("missing 'model:' line", src, 0, ["model:"])
    return ScenarioScript(model, ref, tuple(steps))


def _scenario_voc(M: EpistemicModel) -> Vocabulary:
    return M.vocabulary()
