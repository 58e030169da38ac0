import pytest

from dlkv import (
    TOP, UNDEF, After, Box, Common, Const, Desc, Ite, Know, Pred, Var, announce, group, implies,
    is_static, make_event, parse_event, parse_formula, parse_term, share, supergroup,
)
from dlkv.checker import truth_table, values
from dlkv.generate import ExprGen, random_model
from dlkv.model import build_numbers_game
from dlkv.reducer import parse_step, reduce_event, reduce_formula, reduce_term, simplify_expr

p, q = Pred("p", ()), Pred("q", ())
XA = Var("x", "a")


def test_static_event_unchanged():
    e = parse_event("!(K{a} x@a = 0)")
    r = reduce_event(e)
    assert r.result == e and r.steps == []


def test_event_with_box_precondition():
    e = make_event(pre=[Box(announce(q), p)])
    assert reduce_event(e).result == make_event(pre=[implies(q, p)])


def test_event_with_dynamic_post():
    t = After(announce(q), XA)
    e = make_event(pre=[Know(group("a"), parse_formula("x@a = x@a"))], post={XA: t})
    r = reduce_event(e)
    assert r.result.post_of(XA) == Ite(XA, q, UNDEF)
    assert r.static


def test_constant_after_announcement():
    c = Const("c")
    assert reduce_term(After(announce(q), c)).result == Ite(c, q, UNDEF)


def test_static_term_unchanged():
    x = parse_term("desc(x@a, {b}, p)")
    r = reduce_term(x)
    assert r.result == x and r.steps == []


def test_hypothetical_value_after_sharing():
    x = Var("nb", "b")
    red = reduce_term(After(share("a", "d"), Desc(x, group("a"), p))).result
    assert isinstance(red, Ite) and isinstance(red.then, Desc)
    assert red.then.group == {"a", "d"}
    # checked by value on the numbers game
    d = parse_term("after(!(a:d), desc(nb@b, {a}, nd@d <= na@a))")
    M = build_numbers_game(4)
    assert values(M, d) == values(M, reduce_term(d).result)


def test_knowledge_update_example():
    r = reduce_formula(Box(announce(q), Know(group("a"), p)))
    assert r.result == implies(q, Know(group("a"), implies(q, p)))
    assert [s.rule for s in r.steps] == ["knowledge-update", "atomic-change"]


def test_static_formula_unchanged():
    phi = parse_formula("K{a} p & C{a,b} q")
    assert reduce_formula(phi).result == phi


def test_common_update_example(rng):
    phi = Box(share("a", "d"), Common(supergroup({"a"}, {"b"}), TOP, q))
    red = reduce_formula(phi).result
    assert reduce_formula(phi, simplify=True).result == Common(supergroup({"a", "d"}, {"b"}), TOP, q)
    for _ in range(100):
        M = random_model(rng, max_states=4)
        M = _with_agent_d(M)
        assert truth_table(M, phi) == truth_table(M, red)


def _with_agent_d(M):
    from dlkv.model import EpistemicModel
    labels = dict(M.labels)
    labels["d"] = list(range(len(M.states)))
    return EpistemicModel(M.fom, M.states, labels=labels, values=M.values)


def test_step_log_round_trip(rng):
    gen = ExprGen(rng, dynamic=True, max_depth=3)
    lines = 0
    for _ in range(100):
        r = reduce_formula(gen.formula())
        for step in r.steps:
            back = parse_step(str(step))
            assert back == step
            lines += 1
    assert lines > 0


def test_steps_make_progress(rng):
    gen = ExprGen(rng, dynamic=True, max_depth=3)
    for _ in range(100):
        r = reduce_formula(gen.formula())
        assert r.static and is_static(r.result)
        for step in r.steps:
            # every rewrite removes the outermost dynamic operator at its redex
            assert isinstance(step.before, (Box, After))


def test_soundness_random(rng):
    gen = ExprGen(rng, dynamic=True, max_depth=3)
    for _ in range(150):
        M = random_model(rng, max_states=5)
        phi, x = gen.formula(), gen.term()
        assert truth_table(M, phi) == truth_table(M, reduce_formula(phi, log=False).result)
        assert values(M, x) == values(M, reduce_term(x, log=False).result)


def test_simplify_preserves_meaning(rng):
    gen = ExprGen(rng, dynamic=True, max_depth=3)
    for _ in range(150):
        M = random_model(rng)
        phi = reduce_formula(gen.formula(), log=False).result
        assert truth_table(M, phi) == truth_table(M, simplify_expr(phi))


@pytest.mark.parametrize("src, expected", [
    ("~~p", "p"),
    ("top & p", "p"),
    ("p & bot", "bot"),
    ("K{a} top", "top"),
    ("(if top then x@a else 0) = x@a", "top"),
])
def test_simplify_examples(src, expected):
    assert simplify_expr(parse_formula(src)) == parse_formula(expected)
