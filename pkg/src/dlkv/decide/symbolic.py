"""The type set and the quasi-model fixpoint as binary decision diagrams.

One BDD variable per atom of the closure; a BDD over them is a set of types.
The A-relation on types is agreement on A-local atoms, so "some related type
in X" is existential quantification of the other atoms out of X.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from dd import cudd

from ..core import And, Common, Formula, Know, Not, agents_of
from ..syntax import print_expr
from .closure import Closure
from .types import Condition, Requirement, leaves, requirements, type_conditions


@dataclass
class FixpointResult:
    survivors: object  # BDD node
    rounds: int
    log: list = field(default_factory=list)


class SymbolicTypes:
    def __init__(self, cl: Closure, conditions: list[Condition] | None = None):
        self.cl = cl
        self.bdd = cudd.BDD()
        self.bdd.configure(reordering=False)
        self.names = [f"p{i}" for i in range(len(cl.atoms))]
        if self.names:
            self.bdd.declare(*self.names)
        self._mem: dict = {}
        self._nonlocal: dict = {}
        if conditions is None:
            conditions, _ = type_conditions(cl)
        self.conditions = conditions
        # conjoin in variable order: intermediate products stay prefix-shaped
        last = lambda c: max((cl.atom_index[l] for l in leaves(c.formula)), default=-1)
        T = self.bdd.true
        for c in sorted(conditions, key=last):
            T &= self.mem(c.formula)
        self.types = T
        self.reqs = requirements(cl)

    def mem(self, phi: Formula):
        hit = self._mem.get(phi)
        if hit is not None:
            return hit
        if isinstance(phi, Not):
            out = ~self.mem(phi.arg)
        elif isinstance(phi, And):
            out = self.mem(phi.left) & self.mem(phi.right)
        else:
            out = self.bdd.var(self.names[self.cl.atom_index[phi]])
        self._mem[phi] = out
        return out

    def _conjoin(self, nodes: list):
        if not nodes:
            return self.bdd.true
        while len(nodes) > 1:
            nodes = [nodes[i] & nodes[i + 1] if i + 1 < len(nodes) else nodes[i]
                     for i in range(0, len(nodes), 2)]
        return nodes[0]

    def nonlocal_vars(self, A: frozenset) -> list[str]:
        hit = self._nonlocal.get(A)
        if hit is None:
            hit = [n for n, a in zip(self.names, self.cl.atoms) if not agents_of(a) <= A]
            self._nonlocal[A] = hit
        return hit

    def related(self, A: frozenset, X, Y=None):
        """Types with an A-related type in X (intersected with Y when given)."""
        if Y is None:
            return self.bdd.exist(self.nonlocal_vars(A), X)
        return self.bdd.exist(self.nonlocal_vars(A), X & Y)

    def witnessed(self, r: Requirement, S):
        """Types of S meeting the requirement of atom ``r.atom`` given survivors S."""
        atom = r.atom
        if r.kind == "K":
            if agents_of(atom.body) <= atom.group:
                # the type itself is the only candidate that matters
                return self.mem(atom) | ~self.mem(atom.body)
            return self.mem(atom) | self.related(atom.group, S, ~self.mem(atom.body))
        reach = S & ~self.mem(atom.body)
        theta = self.mem(atom.cond)
        while True:
            step = self.bdd.false
            for A in atom.supergroup:
                step = step | self.related(A, S & theta & reach)
            new = reach | (S & step)
            if new == reach:
                break
            reach = new
        return self.mem(atom) | reach

    def fixpoint(self, order_seed: int | None = None, trace: bool = False) -> FixpointResult:
        """Greatest subset of the types closed under the witness requirements.

        With ``order_seed`` requirements are applied one at a time in a
        shuffled order; otherwise each round applies all of them at once.
        """
        S = self.types
        log = []
        rnd = 0
        rng = random.Random(order_seed) if order_seed is not None else None
        while True:
            rnd += 1
            before = S
            if rng is None:
                parts = [self.witnessed(r, S) for r in self.reqs]
                new = S
                for part in parts:
                    new &= part
                if trace or new != S:
                    for r, p in zip(self.reqs, parts):
                        if (S & ~p) != self.bdd.false:
                            log.append(f"round {rnd}: {self.count(S & ~p)} type(s) lack a witness for ~{print_expr(r.atom)}")
                S = new
            else:
                order = list(self.reqs)
                rng.shuffle(order)
                for r in order:
                    S = S & self.witnessed(r, S)
            if S == before:
                break
        return FixpointResult(S, rnd, log)

    def count(self, u) -> int:
        return int(self.bdd.count(u, nvars=len(self.names))) if self.names else int(u == self.bdd.true)

    def pick(self, u) -> int | None:
        """One type in u, as an atom bitmask."""
        if u == self.bdd.false:
            return None
        assignment = self.bdd.pick(u, care_vars=set(self.names))
        bits = 0
        for i, n in enumerate(self.names):
            if assignment.get(n):
                bits |= 1 << i
        return bits

    def from_bits(self, bits: int):
        u = self.bdd.true
        for i, n in enumerate(self.names):
            v = self.bdd.var(n)
            u &= v if bits >> i & 1 else ~v
        return u
