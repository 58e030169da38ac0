import pytest
from hypothesis import given, settings, strategies as st

from dlkv import (
    TOP, UNDEF, After, And, App, Box, Common, Const, Desc, Ite, Know, Not, ParseError, Pred, Var,
    announce, eq, group, make_event, neg, parse_event, parse_formula, parse_term, print_expr,
    share, supergroup, Vocabulary, VocabularyError, know_value,
)
from dlkv.syntax import print_event

NB, ND, NA = Var("nb", "b"), Var("nd", "d"), Var("na", "a")
AGENTS = ["a", "b", "d"]

groups = st.frozensets(st.sampled_from(AGENTS), min_size=1)
supergroups = st.frozensets(groups, min_size=1, max_size=3)
leaf_terms = st.one_of(
    st.sampled_from([NA, NB, ND]),
    st.sampled_from(["0", "1", "undef", "c"]).map(Const),
)


def _terms(formulas):
    return st.recursive(
        leaf_terms,
        lambda t: st.one_of(
            st.builds(lambda x: App("f", (x,)), t),
            st.builds(lambda x, y: App("g", (x, y)), t, t),
            st.builds(Ite, t, formulas, t),
            st.builds(Desc, t, groups, formulas),
            st.builds(After, events, t),
        ),
        max_leaves=4,
    )


atoms = st.one_of(
    st.just(Pred("p", ())),
    st.builds(lambda x, y: eq(x, y), leaf_terms, leaf_terms),
    st.builds(lambda x: Pred("P", (x,)), leaf_terms),
)
formulas = st.deferred(lambda: st.recursive(
    st.one_of(atoms, st.builds(lambda x, y: eq(x, y), terms, terms)),
    lambda f: st.one_of(
        st.builds(Not, f),
        st.builds(And, f, f),
        st.builds(Know, groups, f),
        st.builds(Common, supergroups, st.one_of(st.just(TOP), f), f),
        st.builds(Box, events, f),
    ),
    max_leaves=5,
))
terms = st.deferred(lambda: _terms(atoms))
events = st.deferred(lambda: st.builds(
    lambda pre, acc, post: make_event(
        list(pre) + [know_value(group(v.owner), t) for v, t in post.items()], acc, post),
    st.lists(atoms, max_size=2),
    st.dictionaries(st.sampled_from(AGENTS), groups).map(
        lambda m: {a: g | {a} for a, g in m.items()}),
    st.dictionaries(st.sampled_from([NA, NB]), leaf_terms, max_size=1),
))


@settings(max_examples=300, deadline=None)
@given(formulas)
def test_formula_round_trip(phi):
    assert parse_formula(print_expr(phi)) == phi


@settings(max_examples=200, deadline=None)
@given(terms)
def test_term_round_trip(x):
    assert parse_term(print_expr(x)) == x


@settings(max_examples=200, deadline=None)
@given(events)
def test_event_round_trip(e):
    assert parse_event(print_event(e)) == e


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="K{}()ab@=~&|-><!x0 ", max_size=15))
def test_parse_is_total(src):
    # every input is either an AST or a positioned diagnostic
    try:
        phi = parse_formula(src)
    except ParseError as err:
        assert 0 <= err.offset <= len(src)
        assert err.line >= 1 and err.column >= 1
    else:
        assert parse_formula(src) == phi


def test_knowledge_of_equality():
    assert parse_formula("K{a} (nb@b = 2)") == Know(group("a"), eq(NB, Const("2")))


def test_conditional_common_knowledge():
    phi = parse_formula("C{{a},{b}|theta} phi")
    assert phi == Common(supergroup({"a"}, {"b"}), Pred("theta", ()), Pred("phi", ()))


def test_flat_group_is_singletons():
    assert parse_formula("C{a,b} p") == parse_formula("C{{a},{b}} p")


def test_event_diamond():
    e = announce(Pred("q", ()))
    assert parse_formula("<!(q)> p") == Not(Box(e, Not(Pred("p", ()))))


def test_term_examples():
    assert parse_term("desc(nb@b, {a,d}, top)") == Desc(NB, group("a", "d"), TOP)
    phi = Pred("phi", ())
    assert parse_term("if phi then x@a else y@b") == Ite(Var("x", "a"), phi, Var("y", "b"))
    E1 = announce(Pred("q", ()))
    assert parse_term("after(!(q), nb@b)") == After(E1, NB)


def test_event_examples():
    assert parse_event("!(a:d)") == make_event(access={"a": {"a", "d"}})
    assert parse_event("!( ~K{a} nb@b )") == announce(neg(know_value(group("a"), NB)))
    assert parse_event("!()") == make_event()
    assert parse_event("!()").is_trivial()


def test_print_examples():
    phi = parse_formula("K{a} (x@a = 0)")
    assert parse_formula(print_expr(phi)) == phi
    assert print_event(share("a", "d")) == "!(a:d)"
    assert "|" not in print_expr(parse_formula("C{{a},{b}} p"))
    assert print_expr(parse_formula("C{{a},{b}|q} p")).count("|") == 1


@pytest.mark.parametrize("src, col", [
    ("K{a} (x@a = ", 13),
    ("x@a = = 0", 7),
    ("K{} p", 3),
    ("p & ", 5),
])
def test_parse_errors_have_positions(src, col):
    with pytest.raises(ParseError) as info:
        parse_formula(src)
    assert info.value.line == 1
    assert info.value.column == col


def test_unknown_identifier_with_vocabulary():
    voc = Vocabulary(("a",), frozenset(), frozenset({Var("x", "a")}), {"p": 0}, {})
    assert parse_formula("p & x@a = 0", voc)
    with pytest.raises((ParseError, VocabularyError)):
        parse_formula("q", voc)
    with pytest.raises((ParseError, VocabularyError)):
        parse_formula("y@a = 0", voc)


def test_precedence():
    p, q, r = (Pred(n, ()) for n in "pqr")
    assert parse_formula("~p & q") == And(Not(p), q)
    assert parse_formula("p & q -> r") == parse_formula("(p & q) -> r")
    assert parse_formula("p -> q <-> r") == parse_formula("(p -> q) <-> r")
    assert parse_formula("K{a} p & q") == And(Know(group("a"), p), q)
    assert parse_formula("p | q & r") == parse_formula("p | (q & r)")
