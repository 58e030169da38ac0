"""Seeded generators: random models, expressions and events; axiom instances; exhaustive model search.

Everything here is driven by an explicit ``random.Random`` so that property
suites are reproducible from a single seed.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterator, Sequence

from .core import (
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
    Formula,
    Ite,
    Know,
    Not,
    Pred,
    Term,
    Var,
    Vocabulary,
    agents_of,
    all_defined,
    conj,
    defined,
    diamond,
    disj,
    eq,
    extend_access,
    extend_access_super,
    iff,
    implies,
    know_cond,
    know_value,
    know_values,
    make_event,
    neq,
    undefined,
)
from .model import EpistemicModel, FirstOrderModel

UNDEF_VALUE = "U"


# --------------------------------------------------------------------------
# Fixed small vocabulary used by the property suites


@dataclass(frozen=True)
class Signature:
    agents: tuple[str, ...]
    variables: tuple[Var, ...]
    constants: tuple[str, ...]  # besides undef
    predicates: dict  # name -> arity, equality excluded
    functions: dict

    def vocabulary(self) -> Vocabulary:
        return Vocabulary(self.agents, frozenset(self.constants), frozenset(self.variables),
                          dict(self.predicates), dict(self.functions))

    def groups(self) -> list[frozenset]:
        ags = self.agents
        return [frozenset(a for a, bit in zip(ags, bits) if bit)
                for bits in product((0, 1), repeat=len(ags)) if any(bits)]


X, Y = Var("x", "a"), Var("y", "b")
# two agents, two variables, three constants
SIG = Signature(("a", "b"), (X, Y), ("0", "1", "c"), {"P": 1, "q": 0}, {"f": 1})


def _labels(rng: random.Random, n: int) -> list[int]:
    return [rng.randrange(n) for _ in range(n)]


def random_model(rng: random.Random, sig: Signature = SIG, max_states: int = 4, max_domain: int = 3) -> EpistemicModel:
    """A random model over ``sig``; the domain has at most ``max_domain`` proper values plus undef."""
    n = rng.randint(1, max_states)
    proper = list(range(rng.randint(1, max_domain)))
    domain = tuple(proper) + (UNDEF_VALUE,)
    consts = {c: rng.choice(domain) for c in sig.constants if not c.isdigit()}
    funs = {f: (k, {args: rng.choice(domain) for args in product(domain, repeat=k)})
            for f, k in sig.functions.items()}
    preds = {p: (k, frozenset(t for t in product(domain, repeat=k) if rng.random() < 0.5))
             for p, k in sig.predicates.items()}
    fom = FirstOrderModel(domain, UNDEF_VALUE, consts, funs, preds)
    labels = {a: _labels(rng, n) for a in sig.agents}
    values = {}
    for v in sig.variables:
        per_block = {}
        values[v] = [per_block.setdefault(lab, rng.choice(domain)) for lab in labels[v.owner]]
    return EpistemicModel(fom, [f"s{i}" for i in range(n)], labels=labels, values=values)


def _partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Canonical block labellings of n states (restricted growth strings)."""
    def go(prefix: list[int], top: int):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(top + 2):
            yield from go(prefix + [b], max(top, b))

    if n == 0:
        yield ()
    else:
        yield from go([0], 0)


def all_models(sig: Signature, max_states: int = 3, domain_size: int = 2) -> Iterator[EpistemicModel]:
    """Every model over ``sig`` with up to ``max_states`` states and ``domain_size`` proper values.

    Constant, function and predicate interpretations range over all choices
    too, so keep ``sig`` tiny.
    """
    domain = tuple(range(domain_size)) + (UNDEF_VALUE,)
    named = [c for c in sig.constants if not c.isdigit()]
    fun_spaces = []
    for f, k in sig.functions.items():
        keys = list(product(domain, repeat=k))
        fun_spaces.append([(f, k, dict(zip(keys, vals))) for vals in product(domain, repeat=len(keys))])
    pred_spaces = []
    for p, k in sig.predicates.items():
        keys = list(product(domain, repeat=k))
        pred_spaces.append([(p, k, frozenset(t for t, bit in zip(keys, bits) if bit))
                            for bits in product((0, 1), repeat=len(keys))])
    for cvals in product(domain, repeat=len(named)):
        for fs in product(*fun_spaces):
            for ps in product(*pred_spaces):
                fom = FirstOrderModel(domain, UNDEF_VALUE, dict(zip(named, cvals)),
                                      {f: (k, t) for f, k, t in fs}, {p: (k, r) for p, k, r in ps})
                for n in range(1, max_states + 1):
                    names = [f"s{i}" for i in range(n)]
                    for labs in product(list(_partitions(n)), repeat=len(sig.agents)):
                        labels = dict(zip(sig.agents, labs))
                        spaces = []
                        for v in sig.variables:
                            blocks = max(labels[v.owner]) + 1
                            spaces.append(list(product(domain, repeat=blocks)))
                        for choice in product(*spaces):
                            values = {v: [ch[b] for b in labels[v.owner]]
                                      for v, ch in zip(sig.variables, choice)}
                            yield EpistemicModel(fom, names, labels=labels, values=values)


# --------------------------------------------------------------------------
# Random expressions


class ExprGen:
    """Random terms, formulas and events over a signature.

    ``dynamic`` enables event modalities and ``e(x)`` terms; posts always come
    with the owner-knows-the-new-value precondition so that events are valid.
    """

    def __init__(self, rng: random.Random, sig: Signature = SIG, dynamic: bool = False,
                 max_depth: int = 3):
        self.rng = rng
        self.sig = sig
        self.dynamic = dynamic
        self.max_depth = max_depth
        self.groups = sig.groups()

    def group(self) -> frozenset:
        return self.rng.choice(self.groups)

    def supergroup(self) -> frozenset:
        k = self.rng.randint(1, 2)
        return frozenset(self.rng.choice(self.groups) for _ in range(k))

    def leaf_term(self) -> Term:
        r = self.rng.random()
        if r < 0.55:
            return self.rng.choice(self.sig.variables)
        if r < 0.9:
            return Const(self.rng.choice(self.sig.constants))
        return UNDEF

    def term(self, depth: int | None = None) -> Term:
        depth = self.max_depth if depth is None else depth
        if depth <= 0 or self.rng.random() < 0.35:
            return self.leaf_term()
        kinds = ["app", "ite", "desc"] + (["after"] if self.dynamic else [])
        k = self.rng.choice(kinds)
        d = depth - 1
        if k == "app":
            f, n = self.rng.choice(list(self.sig.functions.items()))
            return App(f, tuple(self.term(d) for _ in range(n)))
        if k == "ite":
            return Ite(self.term(d), self.formula(d), self.term(d))
        if k == "desc":
            return Desc(self.term(d), self.group(), self.formula(d))
        return After(self.event(d), self.term(d))

    def atom(self, depth: int) -> Formula:
        r = self.rng.random()
        preds = list(self.sig.predicates.items())
        if r < 0.5 or not preds:
            return eq(self.term(depth), self.term(depth))
        p, n = self.rng.choice(preds)
        return Pred(p, tuple(self.term(depth) for _ in range(n)))

    def formula(self, depth: int | None = None) -> Formula:
        depth = self.max_depth if depth is None else depth
        if depth <= 0 or self.rng.random() < 0.3:
            return self.atom(0)
        kinds = ["atom", "not", "and", "know", "common"] + (["box", "box"] if self.dynamic else [])
        k = self.rng.choice(kinds)
        d = depth - 1
        if k == "atom":
            return self.atom(d)
        if k == "not":
            return Not(self.formula(d))
        if k == "and":
            return And(self.formula(d), self.formula(d))
        if k == "know":
            return Know(self.group(), self.formula(d))
        if k == "common":
            theta = TOP if self.rng.random() < 0.5 else self.formula(d)
            return Common(self.supergroup(), theta, self.formula(d))
        return Box(self.event(d), self.formula(d))

    def event(self, depth: int = 1) -> Event:
        rng = self.rng
        pre = [self.formula(min(depth, 1))] if rng.random() < 0.6 else []
        access = {}
        for a in self.sig.agents:
            if rng.random() < 0.4:
                access[a] = {a} | {b for b in self.sig.agents if rng.random() < 0.5}
        post = {}
        for v in self.sig.variables:
            if rng.random() < 0.3:
                t = self.term(min(depth, 1))
                post[v] = t
                pre.append(know_value(frozenset([v.owner]), t))
        return make_event(pre, access, post)


def random_static_formula(rng: random.Random, depth: int = 3, sig: Signature = SIG) -> Formula:
    return ExprGen(rng, sig, False, depth).formula()


def random_dynamic_formula(rng: random.Random, depth: int = 3, sig: Signature = SIG) -> Formula:
    return ExprGen(rng, sig, True, depth).formula()


# --------------------------------------------------------------------------
# Axiom and theorem instances


@dataclass(frozen=True)
class Instance:
    group: str
    name: str
    formula: Formula


A, B, AB = frozenset("a"), frozenset("b"), frozenset("ab")
p, q = Pred("q", ()), eq(X, Const("0"))
r = Pred("P", (Y,))
c = Const("c")


def _k(G, phi):
    return Know(G, phi)


def static_instances() -> list[Instance]:
    """Instances of every static axiom schema and derived theorem, three or more each."""
    out: list[Instance] = []

    def add(group: str, name: str, fs: Sequence[Formula]) -> None:
        out.extend(Instance(group, name, f) for f in fs)

    phis = [p, q, And(p, Not(r))]
    psis = [r, p, eq(X, Y)]
    thetas = [TOP, p, neq(Y, c)]
    groups = [A, B, AB]
    terms = [X, Y, c]

    # propositional tautologies
    add("I", "Propositional (K)", [implies(f, implies(g, f)) for f, g in zip(phis, psis)])
    add("I", "Propositional (S)", [implies(implies(f, implies(g, h)), implies(implies(f, g), implies(f, h)))
                                   for f, g, h in zip(phis, psis, [q, r, p])])
    add("I", "Propositional (contraposition)", [implies(implies(Not(f), Not(g)), implies(g, f))
                                                for f, g in zip(phis, psis)])

    # equality
    add("II", "Reflexivity", [eq(t, t) for t in (X, App("f", (Y,)), Desc(X, B, p))])
    add("II", "Indiscernability", [
        implies(eq(X, Y), iff(Pred("P", (X,)), Pred("P", (Y,)))),
        implies(eq(c, X), iff(Pred("P", (c,)), Pred("P", (X,)))),
        implies(eq(Y, UNDEF), iff(Pred("P", (Y,)), Pred("P", (UNDEF,)))),
    ])
    add("II", "Functionality", [
        implies(eq(X, Y), eq(App("f", (X,)), App("f", (Y,)))),
        implies(eq(c, Y), eq(App("f", (c,)), App("f", (Y,)))),
        implies(eq(X, App("f", (Y,))), eq(App("f", (X,)), App("f", (App("f", (Y,)),)))),
    ])
    add("II", "Definition by Cases", [
        And(implies(f, eq(Ite(s, f, t), s)), implies(Not(f), eq(Ite(s, f, t), t)))
        for f, s, t in [(p, X, Y), (r, c, X), (eq(X, Y), Y, UNDEF)]
    ])

    # distributed knowledge
    add("III", "Necessitation", [_k(G, f) for G, f in
                                  [(A, eq(X, X)), (B, implies(p, p)), (AB, disj(r, Not(r)))]])
    add("III", "Distribution", [implies(_k(G, implies(f, g)), implies(_k(G, f), _k(G, g)))
                                for G, f, g in zip(groups, phis, psis)])
    add("III", "Veracity", [implies(_k(G, f), f) for G, f in zip(groups, [q, r, p])])
    add("III", "Positive Introspection", [implies(_k(G, f), _k(G, _k(G, f))) for G, f in zip(groups, [r, q, p])])
    add("III", "Negative Introspection", [implies(Not(_k(G, f)), _k(G, Not(_k(G, f))))
                                          for G, f in zip(groups, [r, q, p])])
    add("III", "Group-Monotonicity", [implies(_k(G, f), _k(H, f)) for G, H, f in
                                      [(A, AB, r), (B, AB, q), (A, A, p)]])

    # conditional common distributed knowledge
    sgs = [frozenset([A, B]), frozenset([AB]), frozenset([A])]
    add("IV", "C-Necessitation", [Common(sg, th, f) for sg, th, f in
                                   zip(sgs, thetas, [eq(X, X), implies(p, p), disj(r, Not(r))])])
    add("IV", "C-Distribution", [implies(Common(sg, th, implies(f, g)), implies(Common(sg, th, f), Common(sg, th, g)))
                                 for sg, th, f, g in zip(sgs, thetas, phis, psis)])
    add("IV", "Fixed Point", [
        implies(Common(sg, th, f), And(f, conj(know_cond(G, th, Common(sg, th, f)) for G in sorted(sg, key=sorted))))
        for sg, th, f in zip(sgs, thetas, [q, r, p])])
    add("IV", "Induction", [
        implies(Common(sg, th, implies(f, conj(know_cond(G, th, f) for G in sorted(sg, key=sorted)))),
                implies(f, Common(sg, th, f)))
        for sg, th, f in zip(sgs, thetas, [q, r, p])])

    # knowledge of values
    add("V", "Non-vacuous Knowledge of Values", [
        implies(defined(Desc(x, G, f)), And(know_value(G, x, f), diamond(G, f)))
        for x, G, f in [(X, B, p), (Y, A, TOP), (c, A, q)]])
    add("V", "Knowledge of Constants & Local Variables", [
        And(know_value(A, Const(k)), know_value(frozenset([v.owner]), v))
        for k, v in [("0", X), ("c", Y), ("1", X)]])
    add("V", "Knowledge of Hypothetical Values", [know_value(G, Desc(x, G, f)) for x, G, f in
                                                  [(Y, A, TOP), (X, B, p), (App("f", (Y,)), A, q)]])
    add("V", "Knowledge of Predicates", [
        implies(know_values(G, args), implies(Pred(P, args), _k(G, Pred(P, args))))
        for G, P, args in [(A, "P", (Y,)), (B, "P", (X,)), (AB, "q", ())]])
    add("V", "Knowledge of Functions", [
        implies(know_value(G, x, f), know_value(G, App("f", (x,)), f))
        for G, x, f in [(A, Y, TOP), (B, X, p), (A, c, q)]])
    add("V", "Known Equality", [
        implies(know_cond(G, th, eq(x, y)), implies(know_value(G, x, th), know_value(G, y, th)))
        for G, th, x, y in [(A, TOP, Y, c), (B, p, X, Y), (A, q, Y, X)]])
    add("V", "Anti-Monotonicity", [
        implies(_k(G, implies(f, th)), implies(know_value(G, x, th), know_value(G, x, f)))
        for G, f, th, x in [(A, q, p, Y), (B, p, TOP, X), (A, And(p, q), q, Y)]])

    # derived theorems
    add("P", "Strong Introspection", [implies(f, _k(G, f)) for f, G in
                                      [(eq(X, Const("0")), A), (Pred("P", (Y,)), B), (eq(X, Y), AB)]])
    add("P", "Term Introspection", [know_value(G, x) for x, G in [(X, A), (App("f", (Y,)), B), (Ite(X, p, Y), AB)]])
    add("P", "Explicit Value Introspection", [implies(diamond(G, f), eq(Desc(x, G, f), x)) for x, G, f in
                                              [(X, A, p), (Y, B, q), (c, AB, r)]])
    add("P", "Conditional Knowledge", [iff(know_cond(G, f, g), _k(G, implies(f, g))) for G, f, g in
                                       zip(groups, phis, psis)])
    add("P", "Non-Vacuous Knowledge", [
        implies(diamond(G, f), iff(know_value(G, x, f), defined(Desc(x, G, f))))
        for x, G, f in [(Y, A, p), (X, B, TOP), (Y, A, q)]])
    add("P", "True Conditional Value", [implies(And(defined(Desc(x, G, f)), f), eq(Desc(x, G, f), x))
                                        for x, G, f in [(Y, A, p), (X, B, TOP), (Y, A, q)]])
    add("P", "Hypothetical Equality", [
        implies(_k(G, implies(f, eq(x, y))), eq(Desc(x, G, f), Desc(y, G, f)))
        for x, y, G, f in [(Y, c, A, TOP), (X, Y, B, p), (Y, X, A, q)]])
    add("P", "Definedness from Known Equality", [
        implies(conj([_k(G, implies(f, eq(x, y))), f, defined(x)]), defined(Desc(x, G, f)))
        for x, y, G, f in [(Y, X, A, TOP), (X, Y, B, p), (Y, c, A, q)]])
    return out


@dataclass(frozen=True)
class DynamicInstance:
    """A reduction axiom instance.

    For formula axioms ``lhs`` and ``rhs`` are formulas and the axiom is
    ``lhs <-> rhs``; for term axioms they are terms and the axiom is
    ``pre_e -> lhs = rhs`` (``guard``).
    """

    group: str
    name: str
    lhs: object
    rhs: object
    guard: Formula = TOP

    @property
    def formula(self) -> Formula:
        if isinstance(self.lhs, Formula):
            return iff(self.lhs, self.rhs)
        return implies(self.guard, eq(self.lhs, self.rhs))


def sample_events() -> list[Event]:
    Ka = frozenset("a")
    return [
        make_event(pre=[p]),
        make_event(access={"a": {"a", "b"}}),
        make_event(pre=[know_value(Ka, App("f", (X,)))], post={X: App("f", (X,))}),
        make_event(pre=[Not(r), know_value(frozenset("b"), X)], access={"b": {"a", "b"}}, post={Y: X}),
    ]


def _ebox(e: Event, phi: Formula) -> Formula:
    return Box(e, phi)


def _dia(e: Event, phi: Formula) -> Formula:
    return And(e.precondition, Box(e, phi))


def dynamic_instances() -> list[DynamicInstance]:
    out: list[DynamicInstance] = []
    evs = sample_events()

    def add(group: str, name: str, items) -> None:
        out.extend(DynamicInstance(group, name, *it) for it in items)

    def e_of(e: Event, t: Term) -> Term:
        return After(e, t)

    add("VI", "[e]-Necessitation", [(Box(e, f), TOP) for e, f in
                                     zip(evs, [eq(X, X), implies(p, p), disj(r, Not(r)), TOP])])
    add("VI", "[e]-Distribution", [(implies(Box(e, implies(f, g)), implies(Box(e, f), Box(e, g))), TOP)
                                   for e, f, g in zip(evs, [p, q, r, q], [r, p, q, eq(X, Y)])])
    add("VI", "Atomic Change", [
        (Box(e, Pred(P, args)), implies(e.precondition, Pred(P, tuple(e_of(e, t) for t in args))))
        for e, P, args in [(evs[0], "P", (X,)), (evs[2], "=", (X, Y)), (evs[3], "P", (Y,)), (evs[1], "q", ())]])
    add("VI", "Partial Functionality", [
        (Box(e, Not(f)), implies(e.precondition, Not(Box(e, f)))) for e, f in zip(evs, [p, q, r, eq(X, Y)])])
    add("VI", "Knowledge Update", [
        (Box(e, Know(G, f)), implies(e.precondition, Know(extend_access(e, G), Box(e, f))))
        for e, G, f in zip(evs, [A, A, B, AB], [eq(Y, c), q, eq(Y, X), r])])
    add("VI", "C-Update", [
        (Box(e, Common(sg, th, f)),
         implies(e.precondition, Common(extend_access_super(e, sg), _dia(e, th), Box(e, f))))
        for e, sg, th, f in zip(evs, [frozenset([A, B]), frozenset([A]), frozenset([B]), frozenset([A, B])],
                                [TOP, p, TOP, q], [eq(Y, c), q, eq(X, Y), r])])

    # term axioms: (lhs, rhs, guard)
    add("VII", "Survival of Value", [
        (implies(defined(e_of(e, x)), e.precondition), TOP) for e, x in zip(evs, [X, Y, c, App("f", (Y,))])])
    add("VII", "Preservation of Constants", [(e_of(e, k), k, e.precondition) for e, k in
                                             zip(evs, [c, Const("0"), UNDEF, c])])
    add("VII", "Change of Basic Values", [(e_of(e, v), e.post_of(v), e.precondition) for e, v in
                                          [(evs[0], X), (evs[2], X), (evs[3], Y), (evs[3], X)]])
    add("VII", "Change of Disjunctive Terms", [
        (e_of(e, Ite(s, f, t)), Ite(e_of(e, s), _dia(e, f), e_of(e, t)), e.precondition)
        for e, s, f, t in zip(evs, [X, Y, c, X], [q, p, eq(X, Y), r], [Y, c, X, Y])])
    add("VII", "Change of Functional Terms", [
        (e_of(e, App("f", (t,))), App("f", (e_of(e, t),)), e.precondition) for e, t in zip(evs, [X, Y, X, c])])
    add("VII", "Change of Hypothetical Values", [
        (e_of(e, Desc(x, G, f)), Desc(e_of(e, x), extend_access(e, G), _dia(e, f)), e.precondition)
        for e, x, G, f in zip(evs, [Y, Y, X, Y], [A, A, B, AB], [TOP, q, p, eq(X, c)])])
    return out


def preservation_case(rng: random.Random, M: EpistemicModel, gen: ExprGen):
    """A random (A, s, w, phi, x) with s ~_A w and the agents of phi and x inside A."""
    phi, x = gen.formula(), gen.term()
    need = agents_of(phi) | agents_of(x)
    supersets = [G for G in gen.groups if need <= G]
    G = rng.choice(supersets)
    rel = M.group_rel(G)
    s = rng.randrange(len(M))
    w = rng.choice(rel.block_of(s))
    return G, s, w, phi, x


def seeded(seed: int | None, default: int = 0) -> random.Random:
    return random.Random(default if seed is None else seed)
