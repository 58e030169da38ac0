from itertools import product

from dlkv import (
    BOT, TOP, UNDEF, And, Box, Common, Desc, Know, Not, Var, announce, conj, eq, know_value,
    parse_event, parse_formula, parse_term, share,
)
from dlkv.checker import (
    check_everywhere, check_formula, eval_term, truth_table, update, values,
)
from dlkv.generate import SIG, ExprGen, random_model
from dlkv.model import build_numbers_game, group_rel, state_triple, validate_model

X = Var("x", "b")


def brute_desc(M, s, x, A, phi):
    """Unique value of x over A-accessible phi-worlds, by trying every candidate."""
    rel = group_rel(M, A)
    worlds = [w for w in range(len(M.states)) if rel.related(s, w) and check_formula(M, w, phi)]
    winners = [d for d in M.fom.domain if worlds and all(eval_term(M, w, x) == d for w in worlds)]
    return winners[0] if len(winners) == 1 else M.fom.undef


def test_m2_desc(m2):
    assert eval_term(m2, "t0", Desc(X, frozenset("a"), TOP)) == "U"
    assert eval_term(m2, "t0", parse_term("desc(x@b, {a}, x@b = 1)")) == 1
    for s, phi in product(("t0", "t1"), (TOP, BOT, eq(X, parse_term("1")), eq(X, parse_term("0")))):
        for A in ({"a"}, {"b"}, {"a", "b"}):
            d = Desc(X, frozenset(A), phi)
            assert eval_term(m2, s, d) == brute_desc(m2, m2.index[s], X, A, phi)


def test_m2_conditional_term(m2):
    assert eval_term(m2, "t0", parse_term("if x@b = 1 then x@b else 0")) == 0
    assert eval_term(m2, "t1", parse_term("if x@b = 1 then x@b else 0")) == 1


def test_m2_knowledge(m2):
    assert not check_formula(m2, "t0", parse_formula("K{a} x@b = 0"))
    assert check_formula(m2, "t0", parse_formula("K{b} x@b = 0"))


def test_undef_constant(rng):
    for _ in range(20):
        M = random_model(rng)
        assert set(values(M, UNDEF)) == {M.fom.undef}


def test_desc_matches_brute_force(rng):
    gen = ExprGen(rng, max_depth=2)
    for _ in range(300):
        M = random_model(rng, max_states=4)
        x, phi, A = gen.term(1), gen.formula(1), gen.group()
        s = rng.randrange(len(M.states))
        assert eval_term(M, s, Desc(x, A, phi)) == brute_desc(M, s, x, A, phi)


def brute_common(M, s, sg, theta, phi):
    seen, todo = {s}, [s]
    while todo:
        u = todo.pop()
        for A in sg:
            rel = group_rel(M, A)
            for w in range(len(M.states)):
                if w not in seen and rel.related(u, w) and check_formula(M, w, theta):
                    seen.add(w)
                    todo.append(w)
    return all(check_formula(M, w, phi) for w in seen)


def test_common_matches_chain_search(rng):
    gen = ExprGen(rng, max_depth=2)
    for _ in range(300):
        M = random_model(rng, max_states=4)
        sg, theta, phi = gen.supergroup(), gen.formula(1), gen.formula(1)
        s = rng.randrange(len(M.states))
        assert check_formula(M, s, Common(sg, theta, phi)) == brute_common(M, s, sg, theta, phi)


def test_equality_reflexive(rng):
    gen = ExprGen(rng)
    for _ in range(100):
        M = random_model(rng)
        assert all(truth_table(M, eq(t := gen.term(), t)))


def test_check_everywhere_top_bot(m2):
    assert check_everywhere(m2, TOP) == ["t0", "t1"]
    assert check_everywhere(m2, BOT) == []


def test_sharing_update_intersects():
    M0 = build_numbers_game(5)
    M1, trace = update(M0, share("a", "d"))
    assert M1.states == M0.states
    assert group_rel(M1, {"a"}).labels == group_rel(M0, {"a", "d"}).labels
    assert group_rel(M1, {"b"}).labels == group_rel(M0, {"b"}).labels


def test_trivial_update_is_identity(rng):
    for _ in range(20):
        M = random_model(rng)
        N, _ = update(M, parse_event("!()"))
        assert N.states == M.states
        assert N.labels == M.labels
        assert N.values == M.values


def test_known_nb_when_nd_zero():
    M1, _ = update(build_numbers_game(6), share("a", "d"))
    phi = know_value(frozenset("a"), Var("nb", "b"))
    for i in range(len(M1.states)):
        na, nb, nd = state_triple(M1, i)
        if nd == 0:
            assert check_formula(M1, i, phi)


def test_ignorance_announcement_keeps():
    n = 6
    M1, _ = update(build_numbers_game(n), share("a", "d"))
    M2, trace = update(M1, parse_event("!(~K{a} nb@b)"))
    kept = {state_triple(M2, i) for i in range(len(M2.states))}
    # by hand: Alex knows nb unless both na+nd and na-nd are possible values
    expected = {(a, b, d) for a, b, d in (state_triple(M1, i) for i in range(len(M1.states)))
                if 0 < d <= a and a + d <= n}
    assert kept == expected
    assert len(trace.back) == len(kept)


def test_update_result_validates(rng):
    gen = ExprGen(rng, dynamic=False, max_depth=2)
    for _ in range(100):
        M = random_model(rng)
        e = gen.event(1)
        N, _ = update(M, e)
        assert validate_model(N) == []


def test_empty_update():
    M = build_numbers_game(3)
    N, trace = update(M, announce(BOT))
    assert N.states == () and trace.surviving == ()
    assert all(truth_table(M, Box(announce(BOT), BOT)))


def test_new_values_from_parent():
    src = """agents: a, b
domain: {0, 1, U}
var x@a
var y@b
state s { x=0, y=1 }
rel a: universal
rel b: universal
"""
    from dlkv import parse_model
    M = parse_model(src)
    e = parse_event("event { pre K{a} y@b; pre K{b} x@a; set x@a := y@b; set y@b := x@a }")
    N, _ = update(M, e)
    assert (N.values[Var("x", "a")][0], N.values[Var("y", "b")][0]) == (1, 0)


def test_diamond_event_is_pre_and_box(rng):
    gen = ExprGen(rng, dynamic=True, max_depth=2)
    for _ in range(200):
        M = random_model(rng)
        e, theta = gen.event(1), gen.formula(1)
        dia = Not(Box(e, Not(theta)))
        assert truth_table(M, dia) == truth_table(M, And(e.precondition, Box(e, theta)))


def test_desc_non_vacuity(rng):
    gen = ExprGen(rng, max_depth=2)
    for _ in range(300):
        M = random_model(rng)
        x, phi, A = gen.term(1), gen.formula(1), gen.group()
        rel = group_rel(M, A)
        for s in range(len(M.states)):
            if eval_term(M, s, Desc(x, A, phi)) != M.fom.undef:
                assert any(check_formula(M, w, phi) for w in rel.block_of(s))
                assert check_formula(M, s, know_value(A, x, phi))


def test_preservation_small(rng):
    from dlkv.generate import preservation_case
    gen = ExprGen(rng, max_depth=2)
    for _ in range(100):
        M = random_model(rng)
        G, s, w, phi, x = preservation_case(rng, M, gen)
        assert check_formula(M, s, phi) == check_formula(M, w, phi)
        assert eval_term(M, s, x) == eval_term(M, w, x)
