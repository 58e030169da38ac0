"""Abstract syntax for terms, formulas and semi-public events.

All nodes are immutable and hash-cached; structural equality is formula
identity everywhere in the package.  Derived forms (implication, knowing a
value, diamonds, ...) are plain functions that build primitive nodes, so no
AST ever contains sugar.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from itertools import chain
from typing import Iterable, Iterator, Mapping, Union

UNDEF_NAME = "undef"
ZERO_NAME = "0"
ONE_NAME = "1"
EQ = "="


class VocabularyError(ValueError):
    pass


class UnsupportedExpression(ValueError):
    pass


Group = frozenset  # frozenset[str], non-empty
Supergroup = frozenset  # frozenset[frozenset[str]], non-empty


def group(*agents: str) -> frozenset:
    if len(agents) == 1 and not isinstance(agents[0], str):
        agents = tuple(agents[0])
    if not agents:
        raise VocabularyError("a group must be non-empty")
    return frozenset(agents)


def supergroup(*groups: Iterable[str]) -> frozenset:
    if not groups:
        raise VocabularyError("a supergroup must be non-empty")
    return frozenset(group(*g) if not isinstance(g, frozenset) else g for g in groups)


def singletons(agents: Iterable[str]) -> frozenset:
    return frozenset(frozenset([a]) for a in agents)


def sorted_group(g: Iterable[str]) -> list[str]:
    return sorted(g)


def sorted_supergroup(sg: Iterable[frozenset]) -> list[frozenset]:
    return sorted(sg, key=lambda g: (len(g), sorted(g)))


_FIELD_NAMES: dict[type, tuple[str, ...]] = {}


def _field_names(cls: type) -> tuple[str, ...]:
    names = _FIELD_NAMES.get(cls)
    if names is None:
        names = tuple(f.name for f in fields(cls) if f.name != "_hash")
        _FIELD_NAMES[cls] = names
    return names


class Expr:
    """Shared equality/hash machinery for every AST node."""

    __slots__ = ()

    def __post_init__(self) -> None:
        values = tuple(getattr(self, n) for n in _field_names(type(self)))
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_hash", hash((type(self).__name__,) + values))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._values == other._values

    def __ne__(self, other: object) -> bool:
        return not self == other

    def __repr__(self) -> str:
        from .syntax import print_expr

        return f"<{type(self).__name__} {print_expr(self)}>"


def _node(cls):
    cls = dataclass(frozen=True, eq=False, repr=False)(cls)
    return cls


# --------------------------------------------------------------------------
# Terms


class Term(Expr):
    __slots__ = ()


@_node
class Const(Term):
    name: str
    _hash: int = field(default=0, init=False, compare=False)


@_node
class Var(Term):
    """A basic variable ``name@owner``."""

    name: str
    owner: str
    _hash: int = field(default=0, init=False, compare=False)


@_node
class Ite(Term):
    """``then|_cond else``: the value of ``then`` where ``cond`` holds, else ``other``."""

    then: Term
    cond: "Formula"
    other: Term
    _hash: int = field(default=0, init=False, compare=False)


@_node
class App(Term):
    fun: str
    args: tuple
    _hash: int = field(default=0, init=False, compare=False)


@_node
class Desc(Term):
    """Hypothetical value of ``base`` according to ``group`` given ``cond``."""

    base: Term
    group: frozenset
    cond: "Formula"
    _hash: int = field(default=0, init=False, compare=False)


@_node
class After(Term):
    event: "Event"
    base: Term
    _hash: int = field(default=0, init=False, compare=False)


# --------------------------------------------------------------------------
# Formulas


class Formula(Expr):
    __slots__ = ()


@_node
class Pred(Formula):
    name: str
    args: tuple
    _hash: int = field(default=0, init=False, compare=False)


@_node
class Not(Formula):
    arg: Formula
    _hash: int = field(default=0, init=False, compare=False)


@_node
class And(Formula):
    left: Formula
    right: Formula
    _hash: int = field(default=0, init=False, compare=False)


@_node
class Know(Formula):
    group: frozenset
    body: Formula
    _hash: int = field(default=0, init=False, compare=False)


@_node
class Common(Formula):
    """Conditional common distributed knowledge ``C_sg^cond body``."""

    supergroup: frozenset
    cond: Formula
    body: Formula
    _hash: int = field(default=0, init=False, compare=False)


@_node
class Box(Formula):
    event: "Event"
    body: Formula
    _hash: int = field(default=0, init=False, compare=False)


# --------------------------------------------------------------------------
# Events


@_node
class Event(Expr):
    """Semi-public event ``!Phi/sigma``.

    Only non-trivial components are stored: ``access`` omits agents whose
    access set is just themselves, ``post`` omits variables mapped to
    themselves.  Both are sorted tuples so that equal events compare equal.
    """

    pre: tuple = ()
    access: tuple = ()
    post: tuple = ()
    _hash: int = field(default=0, init=False, compare=False)

    def access_of(self, agent: str) -> frozenset:
        for a, g in self.access:
            if a == agent:
                return g
        return frozenset([agent])

    def post_of(self, var: Var) -> Term:
        for v, t in self.post:
            if v == var:
                return t
        return var

    @property
    def precondition(self) -> Formula:
        return conj(self.pre)

    def is_trivial(self) -> bool:
        return not self.pre and not self.access and not self.post


def make_event(
    pre: Iterable[Formula] = (),
    access: Mapping[str, Iterable[str]] | Iterable[tuple[str, Iterable[str]]] = (),
    post: Mapping[Var, Term] | Iterable[tuple[Var, Term]] = (),
) -> Event:
    """Canonical constructor; drops trivial components and sorts the rest."""
    from .syntax import print_expr

    pres = {p for p in pre}
    pre_t = tuple(sorted(pres, key=print_expr))
    acc = dict(access.items() if isinstance(access, Mapping) else access)
    acc_t = tuple(sorted((a, frozenset(g)) for a, g in acc.items() if frozenset(g) != frozenset([a])))
    pst = dict(post.items() if isinstance(post, Mapping) else post)
    post_t = tuple(sorted(((v, t) for v, t in pst.items() if t != v), key=lambda vt: (vt[0].owner, vt[0].name)))
    return Event(pre_t, acc_t, post_t)


def share(reader: str, *sources: str) -> Event:
    """``!(a:b)``: ``reader`` gains access to the listed sources."""
    return make_event(access={reader: {reader, *sources}})


def announce(*formulas: Formula) -> Event:
    return make_event(pre=formulas)


TRIVIAL_EVENT = Event()

# --------------------------------------------------------------------------
# Distinguished constants and derived forms

UNDEF = Const(UNDEF_NAME)
ZERO = Const(ZERO_NAME)
ONE = Const(ONE_NAME)


def eq(x: Term, y: Term) -> Formula:
    return Pred(EQ, (x, y))


TOP = eq(UNDEF, UNDEF)
BOT = Not(TOP)


def neg(phi: Formula) -> Formula:
    return Not(phi)


def single_neg(phi: Formula) -> Formula:
    return phi.arg if isinstance(phi, Not) else Not(phi)


def conj(phis: Iterable[Formula]) -> Formula:
    out = None
    for p in phis:
        out = p if out is None else And(out, p)
    return TOP if out is None else out


def implies(phi: Formula, psi: Formula) -> Formula:
    return Not(And(phi, Not(psi)))


def disj(phi: Formula, psi: Formula) -> Formula:
    return Not(And(Not(phi), Not(psi)))


def iff(phi: Formula, psi: Formula) -> Formula:
    return And(implies(phi, psi), implies(psi, phi))


def neq(x: Term, y: Term) -> Formula:
    return Not(eq(x, y))


def undefined(x: Term) -> Formula:
    return eq(x, UNDEF)


def defined(x: Term) -> Formula:
    return Not(eq(x, UNDEF))


def all_defined(xs: Iterable[Term]) -> Formula:
    return conj(defined(x) for x in xs)


def bool_term(phi: Formula) -> Term:
    """``?_phi``: 1 where phi holds, 0 elsewhere."""
    return Ite(ONE, phi, ZERO)


def know_cond(A: frozenset, theta: Formula, phi: Formula) -> Formula:
    return Know(A, implies(theta, phi))


def know_value(A: frozenset, x: Term, theta: Formula = TOP) -> Formula:
    return know_cond(A, theta, eq(x, Desc(x, A, theta)))


def know_values(A: frozenset, xs: Iterable[Term], theta: Formula = TOP) -> Formula:
    return conj(know_value(A, x, theta) for x in xs)


def diamond(A: frozenset, phi: Formula) -> Formula:
    return Not(Know(A, Not(phi)))


def diamond_cond(A: frozenset, theta: Formula, phi: Formula) -> Formula:
    return Not(know_cond(A, theta, Not(phi)))


def common(sg: frozenset, phi: Formula, theta: Formula = TOP) -> Formula:
    return Common(sg, theta, phi)


def common_agents(agents: Iterable[str], phi: Formula, theta: Formula = TOP) -> Formula:
    return Common(singletons(agents), theta, phi)


def common_values(sg: frozenset, xs: Iterable[Term]) -> Formula:
    xs = list(xs)
    return Common(sg, TOP, conj(know_values(A, xs) for A in sorted_supergroup(sg)))


def dia_common(sg: frozenset, theta: Formula, phi: Formula) -> Formula:
    return Not(Common(sg, theta, Not(phi)))


def dia_event(e: Event, phi: Formula) -> Formula:
    return Not(Box(e, Not(phi)))


def match_implies(phi: Formula):
    """Return (antecedent, consequent) if phi is the canonical implication shape."""
    if isinstance(phi, Not) and isinstance(phi.arg, And) and isinstance(phi.arg.right, Not):
        return phi.arg.left, phi.arg.right.arg
    return None


# --------------------------------------------------------------------------
# Vocabulary


@dataclass(frozen=True)
class Vocabulary:
    agents: tuple[str, ...]
    constants: frozenset = frozenset({ZERO_NAME, ONE_NAME, UNDEF_NAME})
    variables: frozenset = frozenset()  # of Var
    predicates: Mapping[str, int] = field(default_factory=lambda: {EQ: 2})
    functions: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        consts = frozenset(self.constants) | {ZERO_NAME, ONE_NAME, UNDEF_NAME}
        object.__setattr__(self, "constants", consts)
        preds = dict(self.predicates)
        if preds.setdefault(EQ, 2) != 2:
            raise VocabularyError("equality must be binary")
        object.__setattr__(self, "predicates", preds)
        object.__setattr__(self, "functions", dict(self.functions))
        object.__setattr__(self, "agents", tuple(self.agents))
        for v in self.variables:
            if v.owner not in self.agents:
                raise VocabularyError(f"owner {v.owner!r} of {v.name}@{v.owner} is not an agent")

    def var(self, name: str) -> Var:
        found = [v for v in self.variables if v.name == name]
        if len(found) != 1:
            raise VocabularyError(f"unknown or ambiguous variable {name!r}")
        return found[0]

    def merge(self, other: "Vocabulary") -> "Vocabulary":
        agents = list(self.agents) + [a for a in other.agents if a not in self.agents]
        preds = dict(self.predicates)
        for k, n in other.predicates.items():
            if preds.setdefault(k, n) != n:
                raise VocabularyError(f"arity clash for predicate {k}")
        funs = dict(self.functions)
        for k, n in other.functions.items():
            if funs.setdefault(k, n) != n:
                raise VocabularyError(f"arity clash for function {k}")
        return Vocabulary(tuple(agents), self.constants | other.constants,
                          self.variables | other.variables, preds, funs)

    @classmethod
    def infer(cls, *exprs: Expr) -> "Vocabulary":
        """Smallest vocabulary containing every symbol used by ``exprs``."""
        agents: list[str] = []
        consts, variables = set(), set()
        preds: dict[str, int] = {EQ: 2}
        funs: dict[str, int] = {}

        def add_agents(names):
            for a in sorted(names):
                if a not in agents:
                    agents.append(a)

        for node in chain.from_iterable(walk(e) for e in exprs):
            if isinstance(node, Const):
                consts.add(node.name)
            elif isinstance(node, Var):
                variables.add(node)
                add_agents([node.owner])
            elif isinstance(node, Pred):
                if preds.setdefault(node.name, len(node.args)) != len(node.args):
                    raise VocabularyError(f"predicate {node.name} used with two arities")
            elif isinstance(node, App):
                if funs.setdefault(node.fun, len(node.args)) != len(node.args):
                    raise VocabularyError(f"function {node.fun} used with two arities")
            elif isinstance(node, (Know, Desc)):
                add_agents(node.group)
            elif isinstance(node, Common):
                add_agents(set().union(*node.supergroup))
            elif isinstance(node, Event):
                for a, g in node.access:
                    add_agents({a} | g)
        return cls(tuple(agents), frozenset(consts), frozenset(variables), preds, funs)

    def check(self, expr: Expr) -> None:
        """Raise VocabularyError on unknown symbols, arity mismatch or bad groups."""
        for node in walk(expr):
            if isinstance(node, Const) and node.name not in self.constants and not node.name.isdigit():
                raise VocabularyError(f"unknown constant {node.name!r}")
            elif isinstance(node, Var) and node not in self.variables:
                raise VocabularyError(f"unknown variable {node.name}@{node.owner}")
            elif isinstance(node, Pred):
                if self.predicates.get(node.name) != len(node.args):
                    raise VocabularyError(f"unknown predicate {node.name}/{len(node.args)}")
            elif isinstance(node, App):
                if self.functions.get(node.fun) != len(node.args):
                    raise VocabularyError(f"unknown function {node.fun}/{len(node.args)}")
            elif isinstance(node, (Know, Desc)):
                self._check_group(node.group)
            elif isinstance(node, Common):
                if not node.supergroup:
                    raise VocabularyError("empty supergroup")
                for g in node.supergroup:
                    self._check_group(g)
            elif isinstance(node, Event):
                for a, g in node.access:
                    self._check_group(g | {a})

    def _check_group(self, g: frozenset) -> None:
        if not g:
            raise VocabularyError("empty group")
        bad = sorted(set(g) - set(self.agents))
        if bad:
            raise VocabularyError(f"unknown agent(s) {', '.join(bad)}")


# --------------------------------------------------------------------------
# Traversal


def children(node: Expr) -> tuple:
    if isinstance(node, (Const, Var)):
        return ()
    if isinstance(node, Ite):
        return (node.then, node.cond, node.other)
    if isinstance(node, (App, Pred)):
        return node.args
    if isinstance(node, Desc):
        return (node.base, node.cond)
    if isinstance(node, After):
        return (node.event, node.base)
    if isinstance(node, Not):
        return (node.arg,)
    if isinstance(node, And):
        return (node.left, node.right)
    if isinstance(node, Know):
        return (node.body,)
    if isinstance(node, Common):
        return (node.cond, node.body)
    if isinstance(node, Box):
        return (node.event, node.body)
    if isinstance(node, Event):
        return tuple(node.pre) + tuple(t for _, t in node.post)
    raise TypeError(f"not an expression: {node!r}")


def walk(node: Expr) -> Iterator[Expr]:
    """Pre-order traversal over distinct node occurrences (events included)."""
    stack = [node]
    seen = set()
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        yield n
        if isinstance(n, Event):
            stack.extend(v for v, _ in n.post)
        stack.extend(reversed(children(n)))


def size(node: Expr) -> int:
    return 1 + sum(size(c) for c in children(node))


def is_static(node: Expr) -> bool:
    return not any(isinstance(n, (Box, After)) for n in walk(node))


def normalize(expr: Expr, voc: Vocabulary | None = None) -> Expr:
    """Return the primitive form of ``expr``.

    Sugar never survives construction, so this only re-canonicalizes events
    and checks symbols against ``voc``.  Idempotent.
    """
    if voc is not None:
        voc.check(expr)
    return _renorm(expr)


def _renorm(x):
    if isinstance(x, (Const, Var)):
        return x
    if isinstance(x, Ite):
        return Ite(_renorm(x.then), _renorm(x.cond), _renorm(x.other))
    if isinstance(x, App):
        return App(x.fun, tuple(_renorm(a) for a in x.args))
    if isinstance(x, Pred):
        return Pred(x.name, tuple(_renorm(a) for a in x.args))
    if isinstance(x, Desc):
        return Desc(_renorm(x.base), frozenset(x.group), _renorm(x.cond))
    if isinstance(x, After):
        return After(_renorm(x.event), _renorm(x.base))
    if isinstance(x, Not):
        return Not(_renorm(x.arg))
    if isinstance(x, And):
        return And(_renorm(x.left), _renorm(x.right))
    if isinstance(x, Know):
        return Know(frozenset(x.group), _renorm(x.body))
    if isinstance(x, Common):
        return Common(frozenset(frozenset(g) for g in x.supergroup), _renorm(x.cond), _renorm(x.body))
    if isinstance(x, Box):
        return Box(_renorm(x.event), _renorm(x.body))
    if isinstance(x, Event):
        return make_event([_renorm(p) for p in x.pre], x.access, [(v, _renorm(t)) for v, t in x.post])
    raise TypeError(f"not an expression: {x!r}")


# --------------------------------------------------------------------------
# Extended location


def agents_of(expr: Expr) -> frozenset:
    """The agents whose data determine the (truth) value of a static expression.

    Conditional terms include their condition's agents and common knowledge
    includes its body's agents besides the groups; both keep value
    preservation under ``~_A`` sound.
    """
    if isinstance(expr, Const):
        return frozenset()
    if isinstance(expr, Var):
        return frozenset([expr.owner])
    if isinstance(expr, (Desc, Know)):
        return frozenset(expr.group)
    if isinstance(expr, (App, Pred)):
        return frozenset().union(*(agents_of(a) for a in expr.args))
    if isinstance(expr, Ite):
        return agents_of(expr.then) | agents_of(expr.cond) | agents_of(expr.other)
    if isinstance(expr, Not):
        return agents_of(expr.arg)
    if isinstance(expr, And):
        return agents_of(expr.left) | agents_of(expr.right)
    if isinstance(expr, Common):
        return frozenset().union(*expr.supergroup) | agents_of(expr.body)
    if isinstance(expr, (Box, After, Event)):
        raise UnsupportedExpression("extended location is only defined for static expressions")
    raise TypeError(f"not an expression: {expr!r}")


# --------------------------------------------------------------------------
# Events: access extension and well-formedness


def extend_access(e: Event, A: Iterable[str], voc: Vocabulary | None = None) -> frozenset:
    A = frozenset(A)
    if voc is not None:
        bad = A - set(voc.agents)
        if bad:
            raise VocabularyError(f"unknown agent(s) {', '.join(sorted(bad))}")
    return frozenset().union(*(e.access_of(a) for a in A))


def extend_access_super(e: Event, sg: Iterable[frozenset], voc: Vocabulary | None = None) -> frozenset:
    return frozenset(extend_access(e, A, voc) for A in sg)


def validate_event(e: Event, voc: Vocabulary) -> list[str]:
    """List violated event constraints; an empty list means the event is well-formed."""
    problems = []
    for a, g in e.access:
        if a not in voc.agents:
            problems.append(f"access entry for unknown agent {a}")
        if a not in g:
            problems.append(f"{a} ∉ σ({a})")
    pres = set(e.pre)
    for v, t in e.post:
        if v.owner not in voc.agents:
            problems.append(f"post for variable {v.name}@{v.owner} with unknown owner")
        A = frozenset([v.owner])
        plain = Know(A, eq(t, Desc(t, A, TOP)))
        if know_value(A, t) not in pres and plain not in pres:
            problems.append(f"K_{v.owner} σ({v.name}@{v.owner}) ∉ Φ")
    return problems


def event_agents(e: Event) -> frozenset:
    return frozenset(chain.from_iterable({a} | g for a, g in e.access))


Expression = Union[Term, Formula, Event]
