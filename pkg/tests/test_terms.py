"""Unit tests for the term layer: normalization, equality, substitution."""

from random import Random

import pytest

from slim.terms import (
    App,
    Arrow,
    Bound,
    Const,
    Eigen,
    FreshNames,
    Lam,
    LogicVar,
    Prim,
    Signature,
    SlimError,
    Substitution,
    apply_subst,
    arrow,
    beta_normalize,
    compose,
    free_eigens,
    free_logic_vars,
    has_loose_bounds,
    head_of,
    is_beta_normal,
    is_flexible,
    make_app,
    mentions_formula_type,
    occurs_rigidly,
    order,
    split_type,
    strip_app,
    term_eq,
    typeof,
)

I = Prim("i")


def lam(body):
    return Lam(I, body)


def test_order_of_types():
    assert order(I) == 0
    assert order(Arrow(I, I)) == 1
    assert order(Arrow(Arrow(I, I), I)) == 2
    assert order(arrow([I, I], I)) == 1


def test_split_type_roundtrip():
    ty = arrow([I, Arrow(I, I)], I)
    args, target = split_type(ty)
    assert args == [I, Arrow(I, I)]
    assert target == I


def test_mentions_formula_type():
    o = Prim("o")
    assert mentions_formula_type(o)
    assert mentions_formula_type(Arrow(I, o))
    assert mentions_formula_type(Arrow(o, I))
    assert not mentions_formula_type(Arrow(I, I))


def test_beta_normalize_redex():
    t = App(lam(Bound(0)), Const("a"))
    assert beta_normalize(t) == Const("a")


def test_beta_normalize_under_binder():
    t = lam(App(lam(Bound(0)), Bound(0)))
    assert beta_normalize(t) == lam(Bound(0))


def test_beta_normalize_nested_redexes():
    # (\w1. \w2. w1) a b --> a
    t = App(App(Lam(I, Lam(I, Bound(1))), Const("a")), Const("b"))
    assert beta_normalize(t) == Const("a")


def test_beta_normalize_is_idempotent_and_flagged():
    t = App(lam(App(Const("f"), Bound(0))), LogicVar("X"))
    n = beta_normalize(t)
    assert is_beta_normal(n)
    assert beta_normalize(n) == n
    assert not is_beta_normal(t)


def test_term_eq_eta():
    # f and \w. f w are equal up to eta, in either orientation
    assert term_eq(Const("f"), lam(App(Const("f"), Bound(0))))
    assert term_eq(lam(App(Const("f"), Bound(0))), Const("f"))
    assert not term_eq(Const("f"), lam(App(Const("f"), Const("a"))))
    assert not term_eq(Const("f"), lam(Bound(0)))


def test_term_eq_structure():
    assert term_eq(Eigen("u"), Eigen("u"))
    assert not term_eq(Eigen("u"), Const("u"))
    assert not term_eq(LogicVar("X"), Eigen("X"))
    a = App(Const("g"), Const("a"))
    assert term_eq(a, App(Const("g"), Const("a")))
    assert not term_eq(a, App(Const("g"), Const("b")))


def test_strip_and_make_app():
    t = make_app(Const("g"), [Const("a"), Eigen("u")])
    head, args = strip_app(t)
    assert head == Const("g")
    assert args == [Const("a"), Eigen("u")]
    assert head_of(t) == Const("g")


def test_flexible_and_rigid_heads():
    assert is_flexible(App(LogicVar("X"), Const("a")))
    assert not is_flexible(App(Const("f"), LogicVar("X")))
    assert not is_flexible(Eigen("u"))


def test_occurs_rigidly():
    # X heads a rigid subterm when it sits under constant heads only
    assert occurs_rigidly("X", App(Const("f"), LogicVar("X")))
    assert occurs_rigidly("X", App(Const("f"), App(Const("f"), LogicVar("X"))))
    assert not occurs_rigidly("X", App(LogicVar("H"), LogicVar("X")))
    # a bare occurrence is the whole term, not a rigid subterm of it
    assert not occurs_rigidly("X", LogicVar("X"))
    assert not occurs_rigidly("X", Const("a"))


def test_free_name_collectors():
    t = App(App(Const("g"), LogicVar("X")), App(Const("f"), Eigen("u")))
    assert free_logic_vars(t) == {"X"}
    assert free_eigens(t) == {"u"}
    assert not has_loose_bounds(lam(Bound(0)))
    assert has_loose_bounds(Bound(0))


def test_apply_subst_under_binder():
    # binding ranges are closed, so replacement under a binder is safe
    sub = Substitution({"X": App(Const("f"), Const("a"))}, {"X": I})
    t = lam(App(Const("g"), LogicVar("X")))
    assert apply_subst(sub, t) == lam(App(Const("g"), App(Const("f"), Const("a"))))


def test_apply_subst_renormalizes():
    sub = Substitution({"X": lam(Bound(0))}, {"X": Arrow(I, I)})
    t = App(LogicVar("X"), Const("a"))
    assert apply_subst(sub, t) == Const("a")


def test_substitution_helpers():
    sub = Substitution({"X": Const("a")}, {"X": I})
    assert sub.lookup("X") == Const("a")
    assert sub.lookup("Y") is None
    assert sub.domain() == {"X"}
    assert Substitution.identity().is_identity()
    reduced = Substitution({"X": Const("a"), "Y": Const("b")}, {"X": I, "Y": I}).restrict({"Y"})
    assert reduced.domain() == {"Y"}


def test_compose_application_order():
    rho = Substitution({"X": App(Const("f"), LogicVar("Y"))}, {"X": I})
    theta = Substitution({"Y": Const("a")}, {"Y": I})
    both = compose(rho, theta)
    assert term_eq(both.lookup("X"), App(Const("f"), Const("a")))
    assert term_eq(both.lookup("Y"), Const("a"))


def test_compose_matches_sequential_application():
    rng = Random(7)
    consts = [Const("a"), Const("b")]

    def rand_term(depth):
        roll = rng.random()
        if depth == 0 or roll < 0.4:
            return rng.choice(consts + [LogicVar("X"), LogicVar("Y"), LogicVar("Z")])
        if roll < 0.7:
            return App(Const("f"), rand_term(depth - 1))
        return lam(App(Const("g"), rand_term(depth - 1)))

    for _ in range(200):
        rho = Substitution({"X": rand_term(2)}, {"X": I})
        theta = Substitution({"Y": rand_term(2)}, {"Y": I})
        t = rand_term(3)
        lhs = beta_normalize(apply_subst(compose(rho, theta), t))
        rhs = beta_normalize(apply_subst(theta, apply_subst(rho, t)))
        assert term_eq(lhs, rhs)


def test_typeof_basics():
    sig = Signature()
    sig.declare_prim("i")
    i = sig.prims["i"]
    sig.declare_const("a", i)
    sig.declare_const("f", Arrow(i, i))
    sig.declare_eigen("u", i)
    assert typeof(sig, {}, App(Const("f"), Const("a"))) == i
    assert typeof(sig, {}, Lam(i, Bound(0))) == Arrow(i, i)
    assert typeof(sig, {"X": i}, LogicVar("X")) == i
    assert typeof(sig, {}, Eigen("u")) == i
    with pytest.raises(SlimError):
        typeof(sig, {}, App(Const("a"), Const("a")))
    with pytest.raises(SlimError):
        typeof(sig, {}, Const("missing"))


def test_signature_declarations():
    sig = Signature()
    sig.declare_prim("i")
    i = sig.prims["i"]
    sig.declare_const("a", i)
    with pytest.raises(SlimError):
        sig.declare_const("a", i)
    # re-declaring a kind is idempotent, clashing across namespaces is not
    assert sig.declare_prim("i") is i
    with pytest.raises(SlimError):
        sig.declare_prim("a")
    with pytest.raises(SlimError):
        sig.declare_eigen("a", i)


def test_signature_copy_is_independent():
    sig = Signature()
    sig.declare_prim("i")
    i = sig.prims["i"]
    sig.declare_const("a", i)
    dup = sig.copy()
    dup.declare_const("b", i)
    assert "b" in dup.consts
    assert "b" not in sig.consts


def test_fresh_names_avoid_reserved():
    fresh = FreshNames(reserved={"h1", "h2"})
    names = {fresh.fresh("h") for _ in range(5)}
    assert names.isdisjoint({"h1", "h2"})
    assert len(names) == 5
    fresh.reserve("h9")
    assert "h9" not in {fresh.fresh("h") for _ in range(20)}
