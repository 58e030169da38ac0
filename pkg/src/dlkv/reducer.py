"""Rewrite dynamic expressions into the static fragment.

Reduction is innermost first: an event is reduced before it is applied, and
the body under ``[e]`` or ``e( )`` is made static before the event is pushed
through it.  Each push is one rewrite step that leaves residual ``[e]`` /
``e( )`` applications on strictly smaller static bodies, which are then
pushed in turn.  ``rho`` is the reduced precondition of the event.

Step shapes::

    [e]P(x..)       ~>  rho -> P(e(x)..)
    [e]~phi         ~>  rho -> ~[e]phi
    [e](phi & psi)  ~>  [e]phi & [e]psi
    [e]K_A phi      ~>  rho -> K_e(A) [e]phi
    [e]C^th phi     ~>  rho -> C_e[sg]^(rho & [e]th) [e]phi
    e(c)            ~>  c |_rho undef
    e(v)            ~>  post(v) |_rho undef
    e(y |_phi z)    ~>  (e(y) |_(rho & [e]phi) e(z)) |_rho undef
    e(F(x..))       ~>  F(e(x)..) |_rho undef
    e(y_A^phi)      ~>  e(y)_e(A)^(rho & [e]phi) |_rho undef
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .core import (
    BOT,
    EQ,
    TOP,
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
    children,
    extend_access,
    extend_access_super,
    implies,
    is_static,
    make_event,
)


@dataclass(frozen=True)
class Step:
    rule: str
    path: str
    before: Expr
    after: Expr

    def __str__(self) -> str:
        from .syntax import print_expr

        return f"{self.rule} @ {self.path or 'root'} : {print_expr(self.before)} ==> {print_expr(self.after)}"


@dataclass
class Reduction:
    """A reduced expression together with the rewrite steps that produced it."""

    result: Expr
    steps: list[Step] = field(default_factory=list)

    @property
    def static(self) -> bool:
        return is_static(self.result)

    def log(self) -> str:
        return "\n".join(str(s) for s in self.steps)


def parse_step(line: str) -> Step:
    """Read back one line of a step log."""
    from .syntax import parse_event, parse_expr

    rule, sep, rest = line.partition(" @ ")
    path, sep2, rest = rest.partition(" : ")
    before, sep3, after = rest.partition(" ==> ")
    if not (sep and sep2 and sep3):
        raise ValueError(f"not a step line: {line!r}")

    def read(text: str) -> Expr:
        text = text.strip()
        if text.startswith(("!(", "event{")):
            return parse_event(text)
        return parse_expr(text)

    return Step(rule.strip(), "" if path == "root" else path, read(before), read(after))


def _sub(path: str, i: int) -> str:
    return f"{path}.{i}" if path else str(i)


def _guard(x: Term, rho: Formula) -> Term:
    return Ite(x, rho, UNDEF)


class Reducer:
    def __init__(self, log: bool = True):
        self.log = log
        self.steps: list[Step] = []
        self._memo: dict = {}

    def record(self, rule: str, path: str, before: Expr, after: Expr) -> None:
        if self.log:
            self.steps.append(Step(rule, path, before, after))

    # -- generic descent through static constructors
    def expr(self, x: Expr, path: str = "") -> Expr:
        key = ("x", x)
        if not self.log and key in self._memo:
            return self._memo[key]
        out = self._expr(x, path)
        if not self.log:
            self._memo[key] = out
        return out

    def _expr(self, x: Expr, path: str) -> Expr:
        if isinstance(x, (Const, Var)):
            return x
        if isinstance(x, Ite):
            return Ite(self.expr(x.then, _sub(path, 0)), self.expr(x.cond, _sub(path, 1)),
                       self.expr(x.other, _sub(path, 2)))
        if isinstance(x, App):
            return App(x.fun, tuple(self.expr(a, _sub(path, i)) for i, a in enumerate(x.args)))
        if isinstance(x, Pred):
            return Pred(x.name, tuple(self.expr(a, _sub(path, i)) for i, a in enumerate(x.args)))
        if isinstance(x, Desc):
            return Desc(self.expr(x.base, _sub(path, 0)), x.group, self.expr(x.cond, _sub(path, 1)))
        if isinstance(x, Not):
            return Not(self.expr(x.arg, _sub(path, 0)))
        if isinstance(x, And):
            return And(self.expr(x.left, _sub(path, 0)), self.expr(x.right, _sub(path, 1)))
        if isinstance(x, Know):
            return Know(x.group, self.expr(x.body, _sub(path, 0)))
        if isinstance(x, Common):
            return Common(x.supergroup, self.expr(x.cond, _sub(path, 0)), self.expr(x.body, _sub(path, 1)))
        if isinstance(x, Event):
            return self.event(x, path)
        if isinstance(x, Box):
            e = self.event(x.event, _sub(path, 0))
            body = self.expr(x.body, _sub(path, 1))
            return self.box(e, body, path)
        if isinstance(x, After):
            e = self.event(x.event, _sub(path, 0))
            base = self.expr(x.base, _sub(path, 1))
            return self.after(e, base, path)
        raise TypeError(f"not an expression: {x!r}")

    def event(self, e: Event, path: str = "") -> Event:
        if is_static(e):
            return e
        pre = [self.expr(p, _sub(path, i)) for i, p in enumerate(e.pre)]
        k = len(e.pre)
        post = [(v, self.expr(t, _sub(path, k + i))) for i, (v, t) in enumerate(e.post)]
        return make_event(pre, e.access, post)

    # -- one-step pushes of a static event through a static body
    def box(self, e: Event, phi: Formula, path: str) -> Formula:
        key = ("b", e, phi)
        hit = self._memo.get(key)
        if hit is not None and not self.log:
            return hit
        rule, shape = box_step(e, phi)
        self.record(rule, path, Box(e, phi), shape)
        out = self.residual(shape, path)
        self._memo[key] = out
        return out

    def after(self, e: Event, x: Term, path: str) -> Term:
        key = ("a", e, x)
        hit = self._memo.get(key)
        if hit is not None and not self.log:
            return hit
        rule, shape = after_step(e, x)
        self.record(rule, path, After(e, x), shape)
        out = self.residual(shape, path)
        self._memo[key] = out
        return out

    def residual(self, x: Expr, path: str) -> Expr:
        """Push the residual applications left in a step's output."""
        if isinstance(x, Box) and is_static(x.body) and is_static(x.event):
            return self.box(x.event, x.body, path)
        if isinstance(x, After) and is_static(x.base) and is_static(x.event):
            return self.after(x.event, x.base, path)
        if is_static(x):
            return x
        kids = children(x)
        new = [self.residual(k, _sub(path, i)) for i, k in enumerate(kids)]
        return _rebuild(x, new)


def _rebuild(x: Expr, kids: list) -> Expr:
    if isinstance(x, Ite):
        return Ite(*kids)
    if isinstance(x, App):
        return App(x.fun, tuple(kids))
    if isinstance(x, Pred):
        return Pred(x.name, tuple(kids))
    if isinstance(x, Desc):
        return Desc(kids[0], x.group, kids[1])
    if isinstance(x, Not):
        return Not(kids[0])
    if isinstance(x, And):
        return And(kids[0], kids[1])
    if isinstance(x, Know):
        return Know(x.group, kids[0])
    if isinstance(x, Common):
        return Common(x.supergroup, kids[0], kids[1])
    raise TypeError(f"cannot rebuild {type(x).__name__}")


def box_step(e: Event, phi: Formula) -> tuple[str, Formula]:
    rho = e.precondition
    if isinstance(phi, Pred):
        return "atomic-change", implies(rho, Pred(phi.name, tuple(After(e, a) for a in phi.args)))
    if isinstance(phi, Not):
        return "partial-functionality", implies(rho, Not(Box(e, phi.arg)))
    if isinstance(phi, And):
        return "box-conjunction", And(Box(e, phi.left), Box(e, phi.right))
    if isinstance(phi, Know):
        return "knowledge-update", implies(rho, Know(extend_access(e, phi.group), Box(e, phi.body)))
    if isinstance(phi, Common):
        sg = extend_access_super(e, phi.supergroup)
        return "common-update", implies(rho, Common(sg, And(rho, Box(e, phi.cond)), Box(e, phi.body)))
    raise TypeError(f"box over a non-static formula: {phi!r}")


def after_step(e: Event, x: Term) -> tuple[str, Term]:
    rho = e.precondition
    if isinstance(x, Const):
        return "preservation-of-constants", _guard(x, rho)
    if isinstance(x, Var):
        return "change-of-basic-values", _guard(e.post_of(x), rho)
    if isinstance(x, Ite):
        inner = Ite(After(e, x.then), And(rho, Box(e, x.cond)), After(e, x.other))
        return "change-of-disjunctive-terms", _guard(inner, rho)
    if isinstance(x, App):
        return "change-of-functional-terms", _guard(App(x.fun, tuple(After(e, a) for a in x.args)), rho)
    if isinstance(x, Desc):
        inner = Desc(After(e, x.base), extend_access(e, x.group), And(rho, Box(e, x.cond)))
        return "change-of-hypothetical-values", _guard(inner, rho)
    raise TypeError(f"event applied to a non-static term: {x!r}")


def _run(x: Expr, simplify: bool, log: bool) -> Reduction:
    r = Reducer(log=log)
    out = r.expr(x)
    if simplify:
        out = simplify_expr(out)
    red = Reduction(out, r.steps)
    assert red.static, "reduction left a dynamic operator"
    return red


def reduce_formula(phi: Formula, simplify: bool = False, log: bool = True) -> Reduction:
    return _run(phi, simplify, log)


def reduce_term(x: Term, simplify: bool = False, log: bool = True) -> Reduction:
    return _run(x, simplify, log)


def reduce_event(e: Event, simplify: bool = False, log: bool = True) -> Reduction:
    return _run(e, simplify, log)


def static_form(x: Expr) -> Expr:
    """Reduced form without a step log (memoized across shared subterms)."""
    return _run(x, False, False).result


# --------------------------------------------------------------------------
# Optional cosmetic pass


def simplify_expr(x: Expr) -> Expr:
    """Top/bottom propagation, double negation and trivial guards."""
    memo: dict = {}

    def go(y: Expr) -> Expr:
        hit = memo.get(y)
        if hit is None:
            hit = _simp(y, go)
            memo[y] = hit
        return hit

    return go(x)


def _simp(x: Expr, go) -> Expr:
    if isinstance(x, (Const, Var)):
        return x
    if isinstance(x, Pred):
        args = tuple(go(a) for a in x.args)
        if x.name == EQ and args[0] == args[1]:
            return TOP
        return Pred(x.name, args)
    if isinstance(x, App):
        return App(x.fun, tuple(go(a) for a in x.args))
    if isinstance(x, Ite):
        then, cond, other = go(x.then), go(x.cond), go(x.other)
        if cond == TOP or then == other:
            return then
        if cond == BOT:
            return other
        return Ite(then, cond, other)
    if isinstance(x, Desc):
        return Desc(go(x.base), x.group, go(x.cond))
    if isinstance(x, Not):
        a = go(x.arg)
        if isinstance(a, Not):
            return a.arg
        return Not(a)
    if isinstance(x, And):
        left, right = go(x.left), go(x.right)
        if left == TOP:
            return right
        if right == TOP:
            return left
        if BOT in (left, right):
            return BOT
        return And(left, right)
    if isinstance(x, Know):
        body = go(x.body)
        return TOP if body == TOP else Know(x.group, body)
    if isinstance(x, Common):
        body = go(x.body)
        return TOP if body == TOP else Common(x.supergroup, go(x.cond), body)
    if isinstance(x, Event):
        return make_event([go(p) for p in x.pre], x.access, [(v, go(t)) for v, t in x.post])
    if isinstance(x, Box):
        return Box(go(x.event), go(x.body))
    if isinstance(x, After):
        return After(go(x.event), go(x.base))
    raise TypeError(f"not an expression: {x!r}")


def dynamic_sizes(x: Expr) -> Iterator[int]:
    """Sizes of the bodies under every residual dynamic operator."""
    from .core import size, walk

    for n in walk(x):
        if isinstance(n, Box):
            yield size(n.body)
        elif isinstance(n, After):
            yield size(n.base)
