"""Closure of a static formula and its restricted terms."""
from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations, product

from ..core import (
    EQ,
    UNDEF,
    And,
    App,
    Common,
    Const,
    Desc,
    Formula,
    Ite,
    Know,
    Not,
    Pred,
    Term,
    Var,
    all_defined,
    eq,
    implies,
    is_static,
    match_implies,
    single_neg,
    size,
)

DEFAULT_CAP = 4096


def default_cap() -> int:
    raw = os.environ.get("DLKV_CLOSURE_CAP")
    return int(raw) if raw else DEFAULT_CAP


class ClosureCapExceeded(RuntimeError):
    def __init__(self, cap: int, counts: Counter):
        self.cap = cap
        self.counts = counts
        top, n = counts.most_common(1)[0] if counts else ("none", 0)
        super().__init__(f"closure exceeded {cap} formulas; most frequent rule: {top} ({n} additions)")


@dataclass
class Closure:
    root: Formula
    formulas: tuple
    terms: tuple
    agents: tuple
    predicates: dict
    functions: dict
    rule_counts: Counter = field(default_factory=Counter)

    def __post_init__(self) -> None:
        self.index = {f: i for i, f in enumerate(self.formulas)}
        self.term_index = {t: i for i, t in enumerate(self.terms)}
        self.atoms = tuple(f for f in self.formulas if isinstance(f, (Pred, Know, Common)))
        self.atom_index = {a: i for i, a in enumerate(self.atoms)}

    def __contains__(self, f) -> bool:
        return f in self.index

    def __len__(self) -> int:
        return len(self.formulas)

    @property
    def descs(self) -> list[Desc]:
        return [t for t in self.terms if isinstance(t, Desc)]

    def groups(self) -> list[frozenset]:
        """Every non-empty subset of the closure's agents."""
        ags = sorted(self.agents)
        return [frozenset(c) for k in range(1, len(ags) + 1) for c in combinations(ags, k)]


def _subterms(t: Term):
    if isinstance(t, App):
        return t.args
    if isinstance(t, Ite):
        return (t.then, t.other)
    if isinstance(t, Desc):
        return (t.base,)
    return ()


def build_closure(phi0: Formula, cap: int | None = None) -> Closure:
    """Least set containing phi0 and closed under the closure rules."""
    if not is_static(phi0):
        raise ValueError("the closure is defined for static formulas only; reduce first")
    cap = default_cap() if cap is None else cap
    sigma: dict = {}
    terms: dict = {}
    agents: set = set()
    preds: dict = {EQ: 2}
    funs: dict = {}
    k_bodies: dict = {}
    counts: Counter = Counter()
    queue: list = []
    tqueue: list = []

    def add(f: Formula, rule: str) -> None:
        if f in sigma:
            return
        sigma[f] = None
        counts[rule] += 1
        queue.append(f)
        if len(sigma) > cap:
            raise ClosureCapExceeded(cap, counts)

    def add_term(t: Term) -> None:
        if t not in terms:
            terms[t] = None
            tqueue.append(t)

    add(phi0, "root")
    add_term(UNDEF)
    while True:
        while queue or tqueue:
            while tqueue:
                t = tqueue.pop()
                for s in _subterms(t):
                    add_term(s)
                if isinstance(t, Var):
                    agents.add(t.owner)
                elif isinstance(t, App):
                    funs.setdefault(t.fun, len(t.args))
                elif isinstance(t, Ite):
                    add(t.cond, "case-condition")
                elif isinstance(t, Desc):
                    agents.update(t.group)
                    add(Know(t.group, Not(t.cond)), "hypothetical-diamond")
            if not queue:
                break
            f = queue.pop()
            add(single_neg(f), "single-negation")
            if isinstance(f, Not):
                add(f.arg, "subformula")
            elif isinstance(f, And):
                add(f.left, "subformula")
                add(f.right, "subformula")
            elif isinstance(f, Pred):
                preds.setdefault(f.name, len(f.args))
                for t in f.args:
                    add_term(t)
            elif isinstance(f, Know):
                agents.update(f.group)
                add(f.body, "subformula")
                k_bodies[f.body] = None
                m = match_implies(f.body)
                if m:
                    add(Know(f.group, m[0]), "knowledge-antecedent")
            elif isinstance(f, Common):
                for g in f.supergroup:
                    agents.update(g)
                add(f.cond, "subformula")
                add(f.body, "subformula")
                for g in f.supergroup:
                    add(Know(g, implies(f.cond, f)), "common-unfolding")
        # rules quantifying over the current terms, agents and predicates
        before = len(sigma)
        groups = [frozenset(c) for k in range(1, len(agents) + 1) for c in combinations(sorted(agents), k)]
        for body in list(k_bodies):
            for B in groups:
                add(Know(B, body), "group-monotonicity")
        tlist = list(terms)
        for d in [t for t in tlist if isinstance(t, Desc)]:
            for y, z in product(tlist, repeat=2):
                add(Know(d.group, implies(d.cond, eq(y, z))), "hypothetical-values")
        for name, arity in list(preds.items()):
            for tup in product(tlist, repeat=arity):
                add(Pred(name, tup), "predicate-tuples")
                add(all_defined(tup), "definedness")
        if len(sigma) == before and not queue and not tqueue:
            break
    pos = {f: i for i, f in enumerate(sigma)}
    order = sorted(sigma, key=lambda f: (size(f), pos[f]))
    return Closure(phi0, tuple(order), tuple(terms), tuple(sorted(agents)), preds, funs, counts)
