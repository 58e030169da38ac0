"""Satisfiability and validity for the static fragment, and via reduction for all formulas."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..core import Formula, Not, is_static
from ..reducer import static_form
from .closure import ClosureCapExceeded, Closure, build_closure, default_cap
from .types import (
    Condition,
    check_type_conditions,
    enumerate_types,
    member,
    quasi_fixpoint,
    type_conditions,
    type_formulas,
    type_rel,
)

__all__ = [
    "Closure", "ClosureCapExceeded", "Condition", "Verdict", "build_closure", "check_type_conditions",
    "decide_sat", "decide_valid", "enumerate_types", "quasi_fixpoint", "type_conditions", "type_rel",
]


@dataclass
class Verdict:
    sat: bool
    formula: Formula  # the static formula that was decided
    witness: frozenset | None = None  # a surviving type containing the formula
    log: list = field(default_factory=list)
    closure_size: int = 0
    atoms: int = 0
    types: int = 0
    survivors: int = 0

    @property
    def valid(self) -> bool:
        """For verdicts produced by decide_valid: the negation is unsatisfiable."""
        return not self.sat


def decide_sat(phi: Formula, cap: int | None = None, engine: str = "symbolic",
               trace: bool = False, order_seed: int | None = None) -> Verdict:
    static = phi if is_static(phi) else static_form(phi)
    cl = build_closure(static, default_cap() if cap is None else cap)
    conditions, skipped = type_conditions(cl)
    log = [f"closure: {len(cl)} formulas, {len(cl.atoms)} atoms, {len(cl.terms)} terms"]
    if skipped:
        log.append(f"{len(skipped)} condition instance(s) mention formulas outside the closure")
    if engine == "explicit":
        types = list(enumerate_types(cl, conditions))
        alive, elim = quasi_fixpoint(cl, types, order_seed)
        log += elim
        hits = [t for t in alive if member(cl, t, static)]
        witness = type_formulas(cl, hits[0]) if hits else None
        return Verdict(bool(hits), static, witness, log, len(cl), len(cl.atoms), len(types), len(alive))
    if engine != "symbolic":
        raise ValueError(f"unknown engine {engine!r}")
    from .symbolic import SymbolicTypes

    st = SymbolicTypes(cl, conditions)
    res = st.fixpoint(order_seed=order_seed, trace=trace)
    log += res.log
    log.append(f"fixpoint after {res.rounds} round(s)")
    hit = res.survivors & st.mem(static)
    bits = st.pick(hit)
    witness = None
    if bits is not None:
        witness = type_formulas(cl, bits)
        problems = check_type_conditions(cl, witness)
        assert not problems, problems
    return Verdict(bits is not None, static, witness, log, len(cl), len(cl.atoms),
                   st.count(st.types), st.count(res.survivors))


def decide_valid(phi: Formula, **kw) -> Verdict:
    """Valid iff the negation is unsatisfiable; read the answer from ``.valid``."""
    return decide_sat(Not(phi), **kw)
