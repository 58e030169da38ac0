"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 resource limit, 3 assertion failure.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .checker import EventError, eval_term, truth_table, update
from .core import Formula, Term, UnsupportedExpression, VocabularyError, is_static
from .model import EpistemicModel, ModelError, build_numbers_game
from .syntax import (
    ParseError,
    load_model_ref,
    parse_event,
    parse_expr,
    parse_formula,
    parse_model,
    parse_scenario,
    print_event,
    print_expr,
    print_model,
)

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE, EXIT_ASSERT = 0, 1, 2, 3


class Output:
    """Plain text or ``key=value`` records, one record per line."""

    def __init__(self, fmt: str, stream=None):
        self.fmt = fmt
        self.stream = stream or sys.stdout

    def record(self, text: str, /, **kv) -> None:
        if self.fmt == "kv":
            print(" ".join(f"{k}={_kv(v)}" for k, v in kv.items()), file=self.stream)
        else:
            print(text, file=self.stream)


def _kv(v) -> str:
    s = str(v)
    if not s or any(ch.isspace() or ch in '"=' for ch in s):
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return s


def _fmt_value(v) -> str:
    return "undef" if v == "U" else str(v)


def _load_model(ref: str) -> EpistemicModel:
    return load_model_ref(ref, Path.cwd())


def _states(M: EpistemicModel, which: str | None) -> list[int]:
    if not which or which == "all":
        return list(range(len(M.states)))
    out = []
    for name in which.split(","):
        name = name.strip()
        if name not in M.index:
            raise ParseError(f"unknown state {name!r}", which, which.find(name))
        out.append(M.index[name])
    return out


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get("DLKV_SEED")
    return int(raw) if raw else 0


# --------------------------------------------------------------------------
# verbs


def cmd_parse(args, out: Output) -> int:
    if args.kind == "model":
        M = parse_model(Path(args.expr).read_text())
        print(print_model(M), end="")
        return EXIT_OK
    if args.kind == "event":
        out.record(print_event(parse_event(args.expr)), event=print_event(parse_event(args.expr)))
        return EXIT_OK
    x = parse_expr(args.expr)
    kind = "formula" if isinstance(x, Formula) else "term"
    out.record(print_expr(x), kind=kind, expr=print_expr(x), static=is_static(x))
    return EXIT_OK


def cmd_eval(args, out: Output) -> int:
    M = _load_model(args.model)
    voc = M.vocabulary()
    x = parse_expr(args.expr, voc)
    for i in _states(M, args.state):
        s = M.states[i]
        if isinstance(x, Term):
            v = _fmt_value(eval_term(M, i, x))
            out.record(f"{s}: {v}", state=s, value=v)
        else:
            t = truth_table(M, x)[i]
            out.record(f"{s}: {str(t).lower()}", state=s, value=str(t).lower())
    return EXIT_OK


def cmd_check(args, out: Output) -> int:
    M = _load_model(args.model)
    phi = parse_formula(args.formula, M.vocabulary())
    table = truth_table(M, phi)
    idx = _states(M, args.state)
    for i in idx:
        out.record(f"{M.states[i]}: {str(table[i]).lower()}", state=M.states[i], value=str(table[i]).lower())
    ok = all(table[i] for i in idx)
    out.record(f"holds at {sum(table[i] for i in idx)}/{len(idx)} state(s)",
               summary="check", true=sum(table[i] for i in idx), total=len(idx))
    return EXIT_ASSERT if args.expect_true and not ok else EXIT_OK


def cmd_update(args, out: Output) -> int:
    M = _load_model(args.model)
    N = M
    for src in args.event:
        N, _ = update(N, parse_event(src, M.vocabulary()))
    text = print_model(N)
    if args.output:
        Path(args.output).write_text(text)
        out.record(f"{len(N)} state(s) written to {args.output}", states=len(N), output=args.output)
    else:
        print(text, end="")
    return EXIT_OK


@dataclass
class StepReport:
    line: int
    kind: str
    text: str
    states: int  # after the step
    ok: bool = True
    failing: tuple = ()
    seconds: float = 0.0


@dataclass
class RunReport:
    model_ref: str
    initial_states: int
    steps: list = field(default_factory=list)
    final_states: tuple = ()

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.steps)

    def emit(self, out: Output, timing: bool = False) -> None:
        out.record(f"model {self.model_ref}: {self.initial_states} state(s)",
                   record="model", ref=self.model_ref, states=self.initial_states)
        for n, s in enumerate(self.steps, 1):
            extra = f" ({s.seconds:.3f}s)" if timing else ""
            if s.kind == "apply":
                out.record(f"step {n} line {s.line}: apply {s.text} -> {s.states} state(s){extra}",
                           record="step", n=n, line=s.line, kind="apply", states=s.states, text=s.text)
            else:
                verdict = "ok" if s.ok else "FAILED at " + ",".join(s.failing)
                out.record(f"step {n} line {s.line}: assert {s.text} -> {verdict}{extra}",
                           record="step", n=n, line=s.line, kind="assert", ok=str(s.ok).lower(),
                           failing=",".join(s.failing) or "-", text=s.text)
        out.record(f"final: {len(self.final_states)} state(s): {' '.join(self.final_states)}",
                   record="final", states=len(self.final_states), names=",".join(self.final_states) or "-")
        out.record(f"result: {'ok' if self.ok else 'assertion failure'}", record="result",
                   ok=str(self.ok).lower())


def run_scenario(src: str, base: Path | None = None) -> RunReport:
    script = parse_scenario(src, base)
    M = script.model
    report = RunReport(script.model_ref, len(M))
    for step in script.steps:
        t0 = time.perf_counter()
        if step.kind == "apply":
            M, _ = update(M, step.event)
            rep = StepReport(step.line, "apply", step.text, len(M))
        else:
            idx = _states(M, ",".join(step.states) if step.states else None)
            table = truth_table(M, step.formula)
            failing = tuple(M.states[i] for i in idx if not table[i])
            rep = StepReport(step.line, "assert", step.text, len(M), not failing, failing)
        rep.seconds = time.perf_counter() - t0
        report.steps.append(rep)
    report.final_states = M.states
    return report


def cmd_scenario(args, out: Output) -> int:
    path = Path(args.script)
    report = run_scenario(path.read_text(), path.parent)
    report.emit(out, args.timing)
    return EXIT_OK if report.ok else EXIT_ASSERT


def cmd_reduce(args, out: Output) -> int:
    from .reducer import reduce_formula, reduce_term

    x = parse_expr(args.expr)
    red = (reduce_formula if isinstance(x, Formula) else reduce_term)(x, simplify=args.simplify)
    if args.trace:
        for step in red.steps:
            print(str(step), file=sys.stderr if args.format == "kv" else sys.stdout)
    out.record(print_expr(red.result), result=print_expr(red.result), steps=len(red.steps))
    return EXIT_OK


def _decide(args, out: Output, valid: bool) -> int:
    from .decide import decide_sat, decide_valid

    phi = parse_formula(args.formula)
    run = decide_valid if valid else decide_sat
    v = run(phi, cap=args.closure_cap, engine=args.engine, trace=args.trace)
    word = ("valid" if v.valid else "invalid") if valid else ("sat" if v.sat else "unsat")
    out.record(f"{word} (closure {v.closure_size} formulas, {v.atoms} atoms, {v.survivors} surviving types)",
               verdict=word, closure=v.closure_size, atoms=v.atoms, types=v.types, survivors=v.survivors)
    if v.witness is not None:
        head = "counter-witness type" if valid else "witness type"
        out.record(f"{head}:", record="witness")
        for f in sorted(map(print_expr, v.witness)):
            out.record(f"  {f}", member=f)
    if v.witness is None or args.trace:
        for line in v.log:
            out.record(line, log=line)
    return EXIT_OK


def cmd_sat(args, out: Output) -> int:
    return _decide(args, out, False)


def cmd_valid(args, out: Output) -> int:
    return _decide(args, out, True)


def cmd_gen(args, out: Output) -> int:
    if args.what == "numbers-game":
        text = print_model(build_numbers_game(args.n))
    else:
        from .generate import ExprGen, random_model, seeded

        seed = _seed(args)
        rng = seeded(seed)
        if args.what == "model":
            text = f"# seed {seed}\n" + print_model(random_model(rng))
        else:
            gen = ExprGen(rng, dynamic=args.what == "dynamic", max_depth=args.n or 3)
            text = f"# seed {seed}\n{print_expr(gen.formula())}\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        print(text, end="")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dlkv", description="Knowledge of hypothetical values: check, update, reduce, decide.")
    p.add_argument("--format", choices=("text", "kv"), default="text", help="report format")
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("parse", help="parse and pretty-print an expression, event or model file")
    s.add_argument("expr")
    s.add_argument("--kind", choices=("expr", "event", "model"), default="expr")
    s.set_defaults(run=cmd_parse)

    s = sub.add_parser("eval", help="value of a term (or truth of a formula) at states of a model")
    s.add_argument("model", help="model file or numbers_game(N)")
    s.add_argument("expr")
    s.add_argument("--state", help="comma-separated state names (default all)")
    s.set_defaults(run=cmd_eval)

    s = sub.add_parser("check", help="truth of a formula at states of a model")
    s.add_argument("model")
    s.add_argument("formula")
    s.add_argument("--state")
    s.add_argument("--expect-true", action="store_true", help="exit 3 unless the formula holds at every listed state")
    s.set_defaults(run=cmd_check)

    s = sub.add_parser("update", help="apply events and print the updated model")
    s.add_argument("model")
    s.add_argument("event", nargs="+")
    s.add_argument("-o", "--output")
    s.set_defaults(run=cmd_update)

    s = sub.add_parser("scenario", help="run a scenario script")
    s.add_argument("script")
    s.add_argument("--timing", action="store_true", help="show per-step timings (makes output non-deterministic)")
    s.set_defaults(run=cmd_scenario)

    s = sub.add_parser("reduce", help="rewrite a dynamic formula or term into the static fragment")
    s.add_argument("expr")
    s.add_argument("--simplify", action="store_true")
    s.add_argument("--trace", action="store_true", help="print one line per rewrite step")
    s.set_defaults(run=cmd_reduce)

    for verb, fn in (("sat", cmd_sat), ("valid", cmd_valid)):
        s = sub.add_parser(verb, help=f"decide {'satisfiability' if verb == 'sat' else 'validity'}")
        s.add_argument("formula")
        s.add_argument("--closure-cap", type=int, default=None, help="default: DLKV_CLOSURE_CAP or 4096")
        s.add_argument("--engine", choices=("symbolic", "explicit"), default="symbolic")
        s.add_argument("--trace", action="store_true", help="print the elimination log")
        s.set_defaults(run=fn)

    s = sub.add_parser("gen", help="generate a numbers-game model, or a random model or formula")
    s.add_argument("what", choices=("numbers-game", "model", "formula", "dynamic"))
    s.add_argument("n", type=int, nargs="?", default=0, help="max value for numbers-game, depth for formulas")
    s.add_argument("--seed", type=int, default=None, help="default: DLKV_SEED or 0")
    s.add_argument("-o", "--output")
    s.set_defaults(run=cmd_gen)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Output(args.format)
    try:
        return args.run(args, out)
    except (ParseError, VocabularyError, ModelError, EventError, UnsupportedExpression, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (RecursionError, MemoryError) as err:
        print(f"resource limit: {type(err).__name__}", file=sys.stderr)
        return EXIT_RESOURCE
    except Exception as err:
        from .decide.closure import ClosureCapExceeded

        if isinstance(err, ClosureCapExceeded):
            print(f"resource limit: {err}", file=sys.stderr)
            return EXIT_RESOURCE
        raise


if __name__ == "__main__":
    sys.exit(main())
