"""Finite first-order data models and epistemic data models."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Any, Iterable, Mapping, Sequence

from .core import EQ, ONE_NAME, UNDEF_NAME, ZERO_NAME, Var, Vocabulary, VocabularyError

Value = Any


class ModelError(ValueError):
    pass


def _is_numeral(name: str) -> bool:
    return name.isdigit()


@dataclass(frozen=True, eq=False)
class FirstOrderModel:
    """Domain plus interpretation.

    ``functions`` maps a name to a total table ``{args-tuple: value}``;
    ``predicates`` maps a name to a frozenset of argument tuples.  Equality is
    never stored: it is always the identity relation.
    """

    domain: tuple
    undef: Value
    constants: Mapping[str, Value] = field(default_factory=dict)
    functions: Mapping[str, tuple[int, Mapping[tuple, Value]]] = field(default_factory=dict)
    predicates: Mapping[str, tuple[int, frozenset]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.undef not in self.domain:
            raise ModelError("the undefined value must belong to the domain")
        if len(set(self.domain)) != len(self.domain):
            raise ModelError("duplicate domain values")
        consts = dict(self.constants)
        if consts.setdefault(UNDEF_NAME, self.undef) != self.undef:
            raise ModelError("undef must denote the undefined value")
        for name, v in consts.items():
            if v not in self.domain:
                raise ModelError(f"constant {name} denotes {v!r}, outside the domain")
        object.__setattr__(self, "constants", consts)
        for name, (arity, table) in self.functions.items():
            for args in product(self.domain, repeat=arity):
                if table.get(args, _MISSING) not in self.domain:
                    raise ModelError(f"function {name} is not total on the domain (at {args!r})")
        if EQ in self.predicates:
            raise ModelError("equality is interpreted as identity and cannot be redefined")
        for name, (arity, rel) in self.predicates.items():
            for tup in rel:
                if len(tup) != arity or any(v not in self.domain for v in tup):
                    raise ModelError(f"predicate {name} has a bad tuple {tup!r}")

    def const(self, name: str) -> Value:
        v = self.constants.get(name, _MISSING)
        if v is not _MISSING:
            return v
        if _is_numeral(name):
            n = int(name)
            if n in self.domain and n != self.undef:
                return n
            return self.undef
        raise VocabularyError(f"constant {name!r} is not interpreted")

    def apply(self, fun: str, args: tuple) -> Value:
        try:
            return self.functions[fun][1][args]
        except KeyError:
            raise VocabularyError(f"function {fun}/{len(args)} is not interpreted") from None

    def holds(self, pred: str, args: tuple) -> bool:
        if pred == EQ:
            return args[0] == args[1]
        try:
            arity, rel = self.predicates[pred]
        except KeyError:
            raise VocabularyError(f"predicate {pred} is not interpreted") from None
        return args in rel

    @property
    def proper_values(self) -> tuple:
        return tuple(v for v in self.domain if v != self.undef)


_MISSING = object()


def saturating_add(domain: Sequence[Value], undef: Value) -> dict:
    """Addition capped at the largest proper value; undefined is absorbing."""
    proper = [v for v in domain if v != undef]
    top = max(proper)
    table = {}
    for a, b in product(domain, repeat=2):
        table[(a, b)] = undef if undef in (a, b) else min(a + b, top)
    return table


BUILTIN_ORDERS = {
    "leq": lambda a, b: a <= b,
    "lt": lambda a, b: a < b,
    "geq": lambda a, b: a >= b,
    "gt": lambda a, b: a > b,
}


def builtin_order(name: str, domain: Sequence[Value], undef: Value) -> frozenset:
    if name not in BUILTIN_ORDERS:
        raise ModelError(f"no builtin predicate named {name}")
    op = BUILTIN_ORDERS[name]
    proper = [v for v in domain if v != undef]
    return frozenset((a, b) for a in proper for b in proper if op(a, b))


class EpistemicModel:
    """States, one partition per agent, and a basic-variable valuation.

    Partitions are stored as a block label per state (``labels[agent][i]``),
    so every relation is an equivalence by construction.  Instances are
    immutable and compared by identity.
    """

    def __init__(
        self,
        fom: FirstOrderModel,
        states: Sequence[str],
        partitions: Mapping[str, Iterable[Iterable[str]]] | None = None,
        valuation: Mapping[str, Mapping[Var, Value]] | None = None,
        *,
        labels: Mapping[str, Sequence[int]] | None = None,
        values: Mapping[Var, Sequence[Value]] | None = None,
    ) -> None:
        self.fom = fom
        self.states = tuple(states)
        if len(set(self.states)) != len(self.states):
            raise ModelError("duplicate state names")
        self.index = {s: i for i, s in enumerate(self.states)}
        n = len(self.states)
        if labels is None:
            labels = {}
            for agent, blocks in (partitions or {}).items():
                lab = [-1] * n
                for b, block in enumerate(blocks):
                    for s in block:
                        if s not in self.index:
                            raise ModelError(f"partition of {agent} mentions unknown state {s}")
                        if lab[self.index[s]] != -1:
                            raise ModelError(f"state {s} occurs twice in the partition of {agent}")
                        lab[self.index[s]] = b
                if -1 in lab:
                    missing = self.states[lab.index(-1)]
                    raise ModelError(f"partition of {agent} does not cover state {missing}")
                labels[agent] = lab
        self.labels = {a: _canonical_labels(lab) for a, lab in labels.items()}
        for a, lab in self.labels.items():
            if len(lab) != n:
                raise ModelError(f"partition of {a} has the wrong size")
        if values is None:
            vals: dict[Var, list] = {}
            for s, row in (valuation or {}).items():
                if s not in self.index:
                    raise ModelError(f"valuation for unknown state {s}")
                for v, d in row.items():
                    vals.setdefault(v, [_MISSING] * n)[self.index[s]] = d
            values = vals
        self.values = {v: tuple(col) for v, col in values.items()}
        for v, col in self.values.items():
            if len(col) != n or any(d is _MISSING for d in col):
                raise ModelError(f"variable {v.name}@{v.owner} is not valued at every state")
            if any(d not in fom.domain for d in col):
                raise ModelError(f"variable {v.name}@{v.owner} takes a value outside the domain")
        self._group_cache: dict[frozenset, GroupRelation] = {}
        self._eval_cache: dict = {}
        self._update_cache: dict = {}

    @property
    def agents(self) -> tuple[str, ...]:
        return tuple(self.labels)

    @property
    def variables(self) -> tuple[Var, ...]:
        return tuple(self.values)

    def __len__(self) -> int:
        return len(self.states)

    def value(self, state: str | int, v: Var) -> Value:
        i = state if isinstance(state, int) else self.index[state]
        try:
            return self.values[v][i]
        except KeyError:
            raise VocabularyError(f"variable {v.name}@{v.owner} is not valued in this model") from None

    def partition(self, agent: str) -> list[frozenset[str]]:
        return self.group_rel([agent]).named_blocks(self)

    def group_rel(self, A: Iterable[str]) -> "GroupRelation":
        return group_rel(self, A)

    def vocabulary(self) -> Vocabulary:
        fom = self.fom
        return Vocabulary(
            self.agents,
            frozenset(fom.constants) | {ZERO_NAME, ONE_NAME},
            frozenset(self.values),
            {**{k: a for k, (a, _) in fom.predicates.items()}, EQ: 2},
            {k: a for k, (a, _) in fom.functions.items()},
        )

    def restrict(self, keep: Sequence[int]) -> "EpistemicModel":
        """Submodel on the given state indices (order preserved)."""
        keep = list(keep)
        return EpistemicModel(
            self.fom,
            [self.states[i] for i in keep],
            labels={a: [lab[i] for i in keep] for a, lab in self.labels.items()},
            values={v: [col[i] for i in keep] for v, col in self.values.items()},
        )

    def __repr__(self) -> str:
        return f"<EpistemicModel {len(self.states)} states, agents {','.join(self.agents)}>"


def _canonical_labels(lab: Sequence) -> tuple[int, ...]:
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(x, len(seen)) for x in lab)


@dataclass(frozen=True, eq=False)
class GroupRelation:
    """``~_A`` as a partition: ``labels[i]`` is the block of state ``i``."""

    group: frozenset
    labels: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]

    def related(self, i: int, j: int) -> bool:
        return self.labels[i] == self.labels[j]

    def block_of(self, i: int) -> tuple[int, ...]:
        return self.blocks[self.labels[i]]

    def named_blocks(self, M: EpistemicModel) -> list[frozenset[str]]:
        return [frozenset(M.states[i] for i in b) for b in self.blocks]

    @cached_property
    def masks(self) -> tuple[int, ...]:
        """Bitmask of each block over state indices."""
        out = []
        for b in self.blocks:
            m = 0
            for i in b:
                m |= 1 << i
            out.append(m)
        return tuple(out)

    def refines(self, other: "GroupRelation") -> bool:
        """Every block of self lies inside a block of other."""
        return all(len({other.labels[i] for i in b}) == 1 for b in self.blocks)


def group_rel(M: EpistemicModel, A: Iterable[str]) -> GroupRelation:
    """Intersection of the member agents' partitions."""
    A = frozenset(A)
    cached = M._group_cache.get(A)
    if cached is not None:
        return cached
    if not A:
        raise VocabularyError("empty group")
    missing = sorted(A - set(M.labels))
    if missing:
        raise VocabularyError(f"unknown agent(s) {', '.join(missing)}")
    members = sorted(A)
    keys = list(zip(*(M.labels[a] for a in members)))
    labels = _canonical_labels(keys)
    blocks: list[list[int]] = [[] for _ in range(max(labels, default=-1) + 1)]
    for i, b in enumerate(labels):
        blocks[b].append(i)
    rel = GroupRelation(A, tuple(labels), tuple(tuple(b) for b in blocks))
    M._group_cache[A] = rel
    return rel


def validate_model(M: EpistemicModel) -> list[str]:
    """Own-data violations ``(agent, variable, s, w)`` rendered as messages."""
    problems = []
    for v, col in M.values.items():
        if v.owner not in M.labels:
            problems.append(f"variable {v.name}@{v.owner}: owner has no partition")
            continue
        for block in group_rel(M, [v.owner]).blocks:
            first = block[0]
            for j in block[1:]:
                if col[j] != col[first]:
                    problems.append(
                        f"agent {v.owner} cannot distinguish {M.states[first]} and {M.states[j]} "
                        f"but {v.name}@{v.owner} differs ({col[first]!r} vs {col[j]!r})"
                    )
    return problems


# --------------------------------------------------------------------------
# The Numbers' Game


NG_AGENTS = ("a", "b", "d", "e")
NG_VARS = {"a": Var("na", "a"), "b": Var("nb", "b"), "d": Var("nd", "d")}
NG_UNDEF = "U"


def numbers_game_fom(max_value: int) -> FirstOrderModel:
    domain = tuple(range(max_value + 1)) + (NG_UNDEF,)
    return FirstOrderModel(
        domain,
        NG_UNDEF,
        {ZERO_NAME: 0, ONE_NAME: 1},
        {"plus": (2, saturating_add(domain, NG_UNDEF))},
        {name: (2, builtin_order(name, domain, NG_UNDEF)) for name in ("leq", "lt")},
    )


def numbers_game_triples(max_value: int) -> list[tuple[int, int, int]]:
    rng = range(max_value + 1)
    return [(a, b, d) for a in rng for b in rng for d in rng if a == b + d or b == a + d]


def build_numbers_game(max_value: int) -> EpistemicModel:
    """Initial model: triples (n_a, n_b, n_d) in [0, max] with one the sum of the others.

    Alex, Bob and Daniela each see their own number; Eve sees nothing.
    """
    if max_value < 2:
        raise ModelError("the numbers game needs max >= 2")
    triples = numbers_game_triples(max_value)
    names = [f"s{a}_{b}_{d}" for a, b, d in triples]
    labels = {
        "a": [t[0] for t in triples],
        "b": [t[1] for t in triples],
        "d": [t[2] for t in triples],
        "e": [0] * len(triples),
    }
    values = {NG_VARS[k]: [t[i] for t in triples] for i, k in enumerate("abd")}
    return EpistemicModel(numbers_game_fom(max_value), names, labels=labels, values=values)


def state_triple(M: EpistemicModel, i: int) -> tuple:
    return tuple(M.values[NG_VARS[k]][i] for k in "abd")
