import random

import pytest

from dlkv import (
    TOP, UNDEF, After, And, App, Box, Common, Const, Desc, Event, Ite, Know, Not, Pred, UnsupportedExpression, Var,
    Vocabulary, VocabularyError, agents_of, announce, eq, extend_access, extend_access_super,
    group, is_static, know_value, make_event, normalize, parse_formula, share, supergroup,
    validate_event, walk,
)
from dlkv.checker import truth_table
from dlkv.generate import ExprGen, random_model

X = Var("x", "a")
P = Pred("p", ())
VOC = Vocabulary(("a", "b", "d"), frozenset(), frozenset({X, Var("nb", "b"), Var("nd", "d")}),
                 {"p": 0, "q": 0}, {"f": 1})


def test_top_is_undef_equals_undef():
    assert TOP == Pred("=", (UNDEF, UNDEF))


def test_normalize_is_idempotent():
    phi = Know(group("a"), eq(X, Var("y", "b")))
    assert normalize(normalize(phi)) == normalize(phi)


def test_conditional_knowledge_of_value_expands():
    expected = Know(group("a"), Not(And(P, Not(eq(X, Desc(X, group("a"), P))))))
    assert know_value(group("a"), X, P) == expected


def test_conditional_knowledge_of_value_semantics(rng):
    # the expansion is the same formula as the surface sugar, checked on models
    sugar = parse_formula("K{a|q} x@a")
    spelled = parse_formula("K{a} ~(q & ~(x@a = desc(x@a, {a}, q)))")
    assert sugar == spelled
    for _ in range(50):
        M = random_model(rng, max_states=3)
        assert truth_table(M, sugar) == truth_table(M, spelled)


def test_normalize_output_has_no_sugar(rng):
    gen = ExprGen(rng, dynamic=True)
    primitive = (Const, Var, Ite, App, Desc, After, Pred, Not, And, Know, Common, Box, Event)
    for _ in range(100):
        phi = gen.formula()
        assert normalize(phi) == phi
        assert all(type(node) in primitive for node in walk(normalize(phi)))


def test_normalize_rejects_unknown_symbols():
    with pytest.raises(VocabularyError):
        normalize(Pred("r", (X,)), VOC)
    with pytest.raises(VocabularyError):
        normalize(Pred("p", (X,)), VOC)  # arity
    with pytest.raises(VocabularyError):
        normalize(Know(group("z"), P), VOC)


@pytest.mark.parametrize("expr, expected", [
    (Var("nd", "d"), {"d"}),
    (Const("0"), set()),
    (Desc(X, group("a", "b"), P), {"a", "b"}),
    (Desc(Var("nd", "d"), group("a", "b"), eq(Var("nd", "d"), X)), {"a", "b"}),
    (Know(group("b"), eq(X, X)), {"b"}),
])
def test_agents_of(expr, expected):
    assert agents_of(expr) == expected


def test_agents_of_conditional_includes_condition():
    t = parse_formula("(if nd@d = 0 then x@a else 1) = 0")
    assert agents_of(t) == {"a", "d"}


def test_agents_of_rejects_dynamic():
    with pytest.raises(UnsupportedExpression):
        agents_of(parse_formula("[!(q)] p"))


def test_agents_of_monotone_in_arguments(rng):
    gen = ExprGen(rng)
    for _ in range(100):
        phi = gen.formula()
        for node in walk(phi):
            if isinstance(node, Pred):
                for arg in node.args:
                    assert agents_of(arg) <= agents_of(node)


def test_validate_event_sharing_ok():
    assert validate_event(share("a", "d"), VOC) == []


def test_validate_event_access_without_self():
    bad = make_event(access={"a": {"d"}})
    problems = validate_event(bad, VOC)
    assert any("a ∉ σ(a)" in p for p in problems)


def test_validate_event_post_without_knowledge():
    bad = make_event(post={X: Var("nb", "b")})
    assert any("K_a σ(x@a)" in p for p in validate_event(bad, VOC))
    good = make_event(pre=[know_value(group("a"), Var("nb", "b"))], post={X: Var("nb", "b")})
    assert validate_event(good, VOC) == []


def test_extend_access_examples():
    e = share("a", "d")
    assert extend_access(e, {"a", "b"}) == {"a", "b", "d"}
    assert extend_access(announce(P), {"a", "b"}) == {"a", "b"}
    assert extend_access_super(e, supergroup({"a"}, {"b"})) == supergroup({"a", "d"}, {"b"})


def test_extend_access_unknown_agent():
    with pytest.raises(VocabularyError):
        extend_access(share("a", "d"), {"z"}, VOC)


def test_extend_access_union_and_self(rng):
    agents = ["a", "b", "d"]
    for _ in range(100):
        e = make_event(access={a: {a, *rng.sample(agents, rng.randint(0, 3))} for a in agents})
        A = frozenset(rng.sample(agents, rng.randint(1, 3)))
        B = frozenset(rng.sample(agents, rng.randint(1, 3)))
        assert extend_access(e, A | B) == extend_access(e, A) | extend_access(e, B)
        for a in agents:
            assert a in extend_access(e, {a})


def test_is_static():
    assert is_static(parse_formula("K{a} p"))
    assert not is_static(parse_formula("[!(q)] p"))
    assert not is_static(parse_formula("after(!(q), x@a) = 0"))
