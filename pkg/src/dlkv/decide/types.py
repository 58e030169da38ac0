"""Types over a closure: local conditions, enumeration and the accessibility relation.

A type is determined by the atoms it contains (predicate, knowledge and
common-knowledge formulas); membership of negations and conjunctions is then
forced by the first two conditions.  A type is therefore stored as a bitmask
over ``closure.atoms`` and every other condition is a Boolean formula whose
leaves are atoms of the closure.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator

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
    agents_of,
    conj,
    defined,
    diamond,
    disj,
    eq,
    implies,
    know_value,
    match_implies,
    single_neg,
)
from ..syntax import print_expr
from .closure import Closure


@dataclass(frozen=True)
class Condition:
    number: int
    formula: Formula  # over atoms of the closure
    note: str = ""


def leaves(phi: Formula):
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, Not):
            stack.append(f.arg)
        elif isinstance(f, And):
            stack.append(f.left)
            stack.append(f.right)
        else:
            yield f


def type_conditions(cl: Closure) -> tuple[list[Condition], list[Condition]]:
    """Instances of conditions 3 to 14; returns (usable, skipped).

    An instance is skipped when one of its formulas lies outside the closure,
    which only happens for conditions whose trigger cannot occur.
    """
    out: list[Condition] = []
    V = cl.terms
    sigma = cl.index

    def need(n: int, f: Formula, note: str = "") -> None:
        out.append(Condition(n, f, note))

    for x in V:
        need(3, eq(x, x))
    for f in cl.atoms:
        if isinstance(f, Pred):
            for i, xi in enumerate(f.args):
                for y in V:
                    if y == xi:
                        continue
                    args = f.args[:i] + (y,) + f.args[i + 1:]
                    need(4, implies(And(eq(xi, y), f), Pred(f.name, args)))
    apps = [t for t in V if isinstance(t, App)]
    for s, t in product(apps, repeat=2):
        if s != t and s.fun == t.fun and len(s.args) == len(t.args):
            need(5, implies(conj(eq(a, b) for a, b in zip(s.args, t.args)), eq(s, t)))
    for t in V:
        if isinstance(t, Ite):
            need(6, implies(t.cond, eq(t, t.then)))
            need(6, implies(Not(t.cond), eq(t, t.other)))
    for f in cl.atoms:
        if isinstance(f, Know):
            need(7, implies(f, f.body))
    for d in V:
        if not isinstance(d, Desc):
            continue
        A, x, phi = d.group, d.base, d.cond
        need(8, implies(defined(d), And(know_value(A, x, phi), diamond(A, phi))))
        need(9, implies(And(phi, defined(d)), eq(x, d)))
        if isinstance(x, Const):
            need(11, disj(eq(d, x), eq(d, UNDEF)))
        for y in V:
            if agents_of(y) <= A:
                witness = Not(Know(A, implies(phi, eq(x, y))))
                need(12, implies(conj([eq(d, UNDEF), phi, defined(x)]), witness))
    # 14 (added): knowledge of functions across related types.  If every
    # argument equals some A-local term on the A-accessible phi-worlds, the
    # application is fixed there too.
    for d in V:
        if not (isinstance(d, Desc) and isinstance(d.base, App)):
            continue
        A, phi, app = d.group, d.cond, d.base
        local = [z for z in V if agents_of(z) <= A]
        for zs in product(local, repeat=len(app.args)):
            prem = conj(Know(A, implies(phi, eq(x, z))) for x, z in zip(app.args, zs))
            need(14, implies(prem, Know(A, implies(phi, eq(app, d)))))
    for f in cl.atoms:
        if isinstance(f, Know):
            m = match_implies(f.body)
            if m and isinstance(m[1], Pred) and m[1].name == EQ:
                phi, (x, y) = m[0], m[1].args
                dx, dy = Desc(x, f.group, phi), Desc(y, f.group, phi)
                if dx in cl.term_index and dy in cl.term_index:
                    need(10, implies(f, eq(dx, dy)))
        elif isinstance(f, Common):
            for A in f.supergroup:
                need(13, implies(f, And(f.body, Know(A, implies(f.cond, f)))))
    usable, skipped = [], []
    for c in out:
        (usable if all(l in sigma for l in leaves(c.formula)) else skipped).append(c)
    return usable, skipped


# --------------------------------------------------------------------------
# Explicit evaluation of membership


def member(cl: Closure, bits: int, phi: Formula) -> bool:
    """Membership of a Boolean combination of atoms in the type ``bits``."""
    if isinstance(phi, Not):
        return not member(cl, bits, phi.arg)
    if isinstance(phi, And):
        return member(cl, bits, phi.left) and member(cl, bits, phi.right)
    return bool(bits >> cl.atom_index[phi] & 1)


def type_formulas(cl: Closure, bits: int) -> frozenset:
    """The full subset of the closure described by an atom assignment."""
    return frozenset(f for f in cl.formulas if member(cl, bits, f))


def check_type_conditions(cl: Closure, delta: frozenset | set) -> list[str]:
    """Violated conditions of an arbitrary subset of the closure, as messages.

    Works on the subset itself, so conditions 1 and 2 are checked literally.
    """
    problems = []
    delta = set(delta)
    for f in cl.formulas:
        neg = single_neg(f)
        if neg in cl.index and ((neg in delta) == (f in delta)):
            problems.append(f"1: exactly one of a formula and its single negation: {f!r}")
        if isinstance(f, And) and (f in delta) != (f.left in delta and f.right in delta):
            problems.append(f"2: conjunction {f!r}")
    if problems:
        return problems
    bits = 0
    for i, a in enumerate(cl.atoms):
        if a in delta:
            bits |= 1 << i
    usable, _ = type_conditions(cl)
    for c in usable:
        if not member(cl, bits, c.formula):
            problems.append(f"{c.number}: {c.formula!r}")
    return problems


def local_mask(cl: Closure, A: frozenset) -> int:
    """Atoms whose agents all lie in A."""
    m = 0
    for i, a in enumerate(cl.atoms):
        if agents_of(a) <= A:
            m |= 1 << i
    return m


def type_rel(cl: Closure, d1: int, d2: int, A: frozenset) -> bool:
    m = local_mask(cl, frozenset(A))
    return (d1 & m) == (d2 & m)


def enumerate_types(cl: Closure, conditions: list[Condition] | None = None) -> Iterator[int]:
    """All types, by backtracking over atoms in closure order.

    Each condition is checked as soon as its last atom is assigned.
    """
    if conditions is None:
        conditions, _ = type_conditions(cl)
    n = len(cl.atoms)
    due: list[list[Condition]] = [[] for _ in range(n + 1)]
    for c in conditions:
        last = max((cl.atom_index[l] for l in leaves(c.formula)), default=-1)
        due[last + 1].append(c)
    for c in due[0]:
        if not member(cl, 0, c.formula):
            return

    def go(i: int, bits: int):
        if i == n:
            yield bits
            return
        for v in (0, 1):
            b = bits | (v << i)
            if all(member(cl, b, c.formula) for c in due[i + 1]):
                yield from go(i + 1, b)

    yield from go(0, 0)


# --------------------------------------------------------------------------
# Requirements of a quasi-model


@dataclass(frozen=True)
class Requirement:
    """A knowledge or common-knowledge atom whose absence needs a witness."""

    atom: Formula
    kind: str  # "K" or "C"


def requirements(cl: Closure) -> list[Requirement]:
    return [Requirement(a, "K" if isinstance(a, Know) else "C")
            for a in cl.atoms if isinstance(a, (Know, Common))]


def quasi_fixpoint(cl: Closure, types: list[int], order_seed: int | None = None) -> tuple[list[int], list[str]]:
    """Greatest set of types in which every missing K or C atom is witnessed."""
    import random

    reqs = requirements(cl)
    rng = random.Random(order_seed) if order_seed is not None else None
    masks = {}
    for r in reqs:
        groups = [r.atom.group] if r.kind == "K" else list(r.atom.supergroup)
        for A in groups:
            if A not in masks:
                masks[A] = local_mask(cl, A)
    alive = set(types)
    log = []
    rnd = 0
    while True:
        rnd += 1
        order = list(reqs)
        if rng is not None:
            rng.shuffle(order)
        removed_round = 0
        for r in order:
            bad = _unwitnessed(cl, alive, r, masks)
            if bad:
                alive -= bad
                removed_round += len(bad)
                log.append(f"round {rnd}: {len(bad)} type(s) lack a witness for ~{print_expr(r.atom)}")
        if not removed_round:
            break
    return sorted(alive), log


def _unwitnessed(cl: Closure, alive: set, r: Requirement, masks: dict) -> set:
    atom = r.atom
    if r.kind == "K":
        m = masks[atom.group]
        witnessed = {t & m for t in alive if not member(cl, t, atom.body)}
        return {t for t in alive if not member(cl, t, atom) and (t & m) not in witnessed}
    # C: least set of types reaching a body-failing type along theta-steps
    reach = {t for t in alive if not member(cl, t, atom.body)}
    theta_types = [t for t in alive if member(cl, t, atom.cond)]
    groups = [masks[A] for A in atom.supergroup]
    while True:
        keys = [{t & m for t in theta_types if t in reach} for m in groups]
        new = {t for t in alive if t not in reach and any((t & m) in k for m, k in zip(groups, keys))}
        if not new:
            break
        reach |= new
    return {t for t in alive if not member(cl, t, atom) and t not in reach}
