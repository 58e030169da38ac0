"""Model checking: truth sets, term values and event update.

Formulas are evaluated globally: the extension of a formula is a bitmask over
the state indices of a model, and the value of a term is a tuple with one
domain value per state.  Both are memoized on the model, and so are updates,
so nested dynamic operators revisit each updated model once.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .core import (
    EQ,
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
    VocabularyError,
    validate_event,
)
from .model import EpistemicModel, group_rel, validate_model

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class EventError(ValueError):
    """The event violates the semi-public event constraints."""


@dataclass(frozen=True)
class UpdateTrace:
    surviving: tuple[str, ...]
    partitions: dict
    valuation: dict
    back: tuple[int, ...]  # new index -> parent index


def _full(M: EpistemicModel) -> int:
    return (1 << len(M.states)) - 1


def _state_index(M: EpistemicModel, s: str | int) -> int:
    if isinstance(s, int):
        if not 0 <= s < len(M.states):
            raise IndexError(f"no state with index {s}")
        return s
    try:
        return M.index[s]
    except KeyError:
        raise KeyError(f"unknown state {s!r}") from None


def extension(M: EpistemicModel, phi: Formula) -> int:
    """Bitmask of the states where ``phi`` holds."""
    cache = M._eval_cache
    hit = cache.get(phi)
    if hit is not None:
        return hit
    out = _extension(M, phi)
    cache[phi] = out
    return out


def values(M: EpistemicModel, x: Term) -> tuple:
    """Value of ``x`` at every state, in state order."""
    cache = M._eval_cache
    hit = cache.get(x)
    if hit is not None:
        return hit
    out = _values(M, x)
    cache[x] = out
    return out


def _extension(M: EpistemicModel, phi: Formula) -> int:
    n = len(M.states)
    if isinstance(phi, Pred):
        cols = [values(M, a) for a in phi.args]
        fom = M.fom
        if phi.name == EQ:
            a, b = cols
            bits = [a[i] == b[i] for i in range(n)]
        else:
            if phi.name not in fom.predicates:
                raise VocabularyError(f"predicate {phi.name} is not interpreted")
            arity, rel = fom.predicates[phi.name]
            if arity != len(cols):
                raise VocabularyError(f"predicate {phi.name} has arity {arity}")
            bits = [tuple(c[i] for c in cols) in rel for i in range(n)]
        out = 0
        for i, b in enumerate(bits):
            if b:
                out |= 1 << i
        return out
    if isinstance(phi, Not):
        return _full(M) & ~extension(M, phi.arg)
    if isinstance(phi, And):
        left = extension(M, phi.left)
        return left & extension(M, phi.right) if left else 0
    if isinstance(phi, Know):
        body = extension(M, phi.body)
        out = 0
        for m in group_rel(M, phi.group).masks:
            if m & ~body == 0:
                out |= m
        return out
    if isinstance(phi, Common):
        return _common(M, phi)
    if isinstance(phi, Box):
        pre = extension(M, phi.event.precondition)
        if not pre:
            return _full(M)
        N, trace = update(M, phi.event)
        inner = extension(N, phi.body)
        out = _full(M) & ~pre
        for j, i in enumerate(trace.back):
            if inner >> j & 1:
                out |= 1 << i
        return out
    raise TypeError(f"not a formula: {phi!r}")


def _common(M: EpistemicModel, phi: Common) -> int:
    """States where every theta-chain along the groups stays inside the body.

    Theta-states linked through a shared block of some group form
    components; a component is bad when it contains a state failing the
    body.  A state fails C when it fails the body itself or one of its
    blocks holds a theta-state of a bad component.
    """
    n = len(M.states)
    theta = extension(M, phi.cond)
    body = extension(M, phi.body)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    rels = [group_rel(M, A) for A in phi.supergroup]
    for rel in rels:
        for block in rel.blocks:
            first = -1
            for i in block:
                if theta >> i & 1:
                    if first < 0:
                        first = i
                    else:
                        ri, rf = find(i), find(first)
                        if ri != rf:
                            parent[ri] = rf
    bad = set()
    for i in range(n):
        if theta >> i & 1 and not body >> i & 1:
            bad.add(find(i))
    failing = _full(M) & ~body
    if bad:
        for rel in rels:
            for block, m in zip(rel.blocks, rel.masks):
                if any(theta >> i & 1 and find(i) in bad for i in block):
                    failing |= m
    return _full(M) & ~failing


def _values(M: EpistemicModel, x: Term) -> tuple:
    n = len(M.states)
    fom = M.fom
    if isinstance(x, Const):
        return (fom.const(x.name),) * n
    if isinstance(x, Var):
        col = M.values.get(x)
        if col is None:
            raise VocabularyError(f"variable {x.name}@{x.owner} is not valued in this model")
        return col
    if isinstance(x, Ite):
        cond = extension(M, x.cond)
        a, b = values(M, x.then), values(M, x.other)
        return tuple(a[i] if cond >> i & 1 else b[i] for i in range(n))
    if isinstance(x, App):
        cols = [values(M, a) for a in x.args]
        if x.fun not in fom.functions or fom.functions[x.fun][0] != len(cols):
            raise VocabularyError(f"function {x.fun}/{len(cols)} is not interpreted")
        table = fom.functions[x.fun][1]
        return tuple(table[tuple(c[i] for c in cols)] for i in range(n))
    if isinstance(x, Desc):
        base = values(M, x.base)
        cond = extension(M, x.cond)
        out = [fom.undef] * n
        for block in group_rel(M, x.group).blocks:
            seen = {base[i] for i in block if cond >> i & 1}
            if len(seen) == 1:
                d = seen.pop()
                for i in block:
                    out[i] = d
        return tuple(out)
    if isinstance(x, After):
        pre = extension(M, x.event.precondition)
        out = [fom.undef] * n
        if pre:
            N, trace = update(M, x.event)
            inner = values(N, x.base)
            for j, i in enumerate(trace.back):
                out[i] = inner[j]
        return tuple(out)
    raise TypeError(f"not a term: {x!r}")


def check_formula(M: EpistemicModel, s: str | int, phi: Formula) -> bool:
    return bool(extension(M, phi) >> _state_index(M, s) & 1)


def eval_term(M: EpistemicModel, s: str | int, x: Term) -> Any:
    return values(M, x)[_state_index(M, s)]


def check_everywhere(M: EpistemicModel, phi: Formula) -> list[str]:
    """States satisfying ``phi`` in model order."""
    ext = extension(M, phi)
    return [s for i, s in enumerate(M.states) if ext >> i & 1]


def holds_everywhere(M: EpistemicModel, phi: Formula) -> bool:
    return extension(M, phi) == _full(M)


def update(M: EpistemicModel, e: Event, *, validate: bool = True) -> tuple[EpistemicModel, UpdateTrace]:
    """The updated model ``e(M)`` and how it maps back to ``M``."""
    hit = M._update_cache.get(e)
    if hit is not None:
        return hit
    if validate:
        problems = validate_event(e, M.vocabulary())
        if problems:
            raise EventError("; ".join(problems))
    pre = extension(M, e.precondition)
    keep = [i for i in range(len(M.states)) if pre >> i & 1]
    labels = {}
    for a in M.agents:
        rel = group_rel(M, e.access_of(a))
        labels[a] = [rel.labels[i] for i in keep]
    new_values = {}
    for v in M.variables:
        col = values(M, e.post_of(v))
        new_values[v] = [col[i] for i in keep]
    N = EpistemicModel(M.fom, [M.states[i] for i in keep], labels=labels, values=new_values)
    problems = validate_model(N)
    assert not problems, problems
    trace = UpdateTrace(
        N.states,
        {a: N.partition(a) for a in N.agents},
        {s: {v: N.values[v][j] for v in N.variables} for j, s in enumerate(N.states)},
        tuple(keep),
    )
    M._update_cache[e] = (N, trace)
    return N, trace


def apply_events(M: EpistemicModel, events: Iterable[Event]) -> EpistemicModel:
    for e in events:
        M, _ = update(M, e)
    return M


def truth_table(M: EpistemicModel, phi: Formula) -> list[bool]:
    ext = extension(M, phi)
    return [bool(ext >> i & 1) for i in range(len(M.states))]


def states_named(M: EpistemicModel, names: Sequence[str]) -> list[int]:
    return [_state_index(M, s) for s in names]
