"""State-formula tests: normalization, raising, guard reduction, classify."""

from random import Random

import pytest

from oracles import GoalGen, property_signature
from slim.formulas import GEq
from slim.states import (
    NormalizationError,
    TAtom,
    TEq,
    TFalse,
    canonical_key,
    classify,
    conjunct_goal,
    normalize,
    reduce,
    reduce_measure,
    reduce_step,
    render_state,
    state_alpha_eq,
    target_kind,
)
from slim.syntax import parse_goal, render_goal
from slim.terms import Arrow, Const, FreshNames, Signature, free_logic_vars


def small_sig() -> Signature:
    sig = Signature()
    sig.declare_prim("i")
    i = sig.prims["i"]
    sig.declare_const("a", i)
    sig.declare_const("b", i)
    sig.declare_const("f", Arrow(i, i))
    sig.declare_const("g", Arrow(i, Arrow(i, i)))
    return sig


def norm(sig, text):
    return normalize(parse_goal(text, sig))


def reduced(sig, text):
    st, _ = norm(sig, text)
    red, steps = reduce(st, sig)
    return red, steps


# ---------------------------------------------------------------------------
# Normalization and raising


def test_normalize_flat_existential():
    sig = small_sig()
    st, raising = norm(sig, "sigma x\\ x = a")
    assert len(st.existentials) == 1
    assert len(st.conjuncts) == 1
    assert raising.entries["x"].spine == ()


def test_normalize_raises_under_universals():
    sig = small_sig()
    st, raising = norm(sig, "pi u\\ pi v\\ sigma x\\ x = u")
    (name, ty), = st.existentials
    i = sig.prims["i"]
    assert ty == Arrow(i, Arrow(i, i))
    rv = raising.entries["x"]
    assert [n for n, _ in rv.spine] == ["u", "v"]
    assert rv.raised == name


def test_normalize_conjunction_splits():
    sig = small_sig()
    st, _ = norm(sig, "a = a , b = b , ff")
    assert len(st.conjuncts) == 3
    assert isinstance(st.conjuncts[2].target, TFalse)


def test_normalize_true_is_empty():
    sig = small_sig()
    st, _ = norm(sig, "tt")
    assert st.conjuncts == ()
    assert classify(st) == "success"


def test_normalize_guards_accumulate():
    sig = small_sig()
    st, _ = norm(sig, "pi u\\ (u = a => u = b => f u = b)")
    (c,) = st.conjuncts
    assert len(c.guards) == 2
    assert [n for n, _ in c.universals] == ["u"]


def test_normalize_functional_equation_expands():
    sig = small_sig()
    st, _ = norm(sig, "sigma x\\ x = f")
    (c,) = st.conjuncts
    # the arrow-typed equation picks up one expansion universal
    assert len(c.universals) == 1
    assert isinstance(c.target, TEq)
    assert c.target.ty == sig.prims["i"]


def test_normalize_rejects_formula_equality():
    # the parser refuses this too, so poke normalize with a raw AST
    sig = small_sig()
    o = sig.prims["o"]
    bad = GEq(Const("p"), Const("p"), Arrow(sig.prims["i"], o))
    with pytest.raises(NormalizationError):
        normalize(bad)


def test_normalize_ex_one_shape():
    sig = small_sig()
    st, _ = norm(
        sig, "pi u\\ pi v\\ sigma x\\ ((u = a => v = b => x = a) , (u = b => x = u))"
    )
    assert render_state(st) == (
        "sigma h1 . (pi u\\ pi v\\ (u = a) => (v = b) => h1 u v = a)"
        " , (pi u\\ pi v\\ (u = b) => h1 u v = u)"
    )


# ---------------------------------------------------------------------------
# Guard reduction rules


def test_reduce_drops_trivial_guard():
    sig = small_sig()
    red, steps = reduced(sig, "sigma x\\ (a = a => x = b)")
    (c,) = red.conjuncts
    assert c.guards == ()
    assert "delete" in [s.rule for s in steps]


def test_reduce_clashing_constants_guard_deletes_conjunct():
    sig = small_sig()
    red, steps = reduced(sig, "sigma x\\ (a = b => x = b)")
    assert red.conjuncts == ()
    assert [s.rule for s in steps] == ["clash"]


def test_reduce_ground_unequal_guard_deletes_conjunct():
    # same rigid head, so not a clash; decided as one ground comparison
    sig = small_sig()
    red, steps = reduced(sig, "sigma x\\ (f a = f b => x = b)")
    assert red.conjuncts == ()
    assert [s.rule for s in steps] == ["ground"]


def test_reduce_eliminates_universal():
    sig = small_sig()
    red, steps = reduced(sig, "pi u\\ sigma x\\ (u = a => x = u)")
    assert "eliminate" in [s.rule for s in steps]
    assert render_state(red) == "sigma h1 . (h1 a = a)"


def test_reduce_occurs_guard_is_vacuous():
    sig = small_sig()
    red, steps = reduced(sig, "pi y\\ (y = f y => ff)")
    assert red.conjuncts == ()
    assert [s.rule for s in steps] == ["occurs"]


def test_reduce_clash_guard_is_vacuous():
    sig = small_sig()
    red, steps = reduced(sig, "pi y\\ (f y = a => ff)")
    assert red.conjuncts == ()
    assert [s.rule for s in steps] == ["clash"]


def test_reduce_loose_guard_is_vacuous():
    sig = small_sig()
    red, steps = reduced(sig, "pi u\\ ((w\\ u) = (w\\ w) => ff)")
    assert red.conjuncts == ()
    assert [s.rule for s in steps] == ["loose"]


def test_reduce_decomposes_same_head_guard():
    sig = small_sig()
    red, steps = reduced(sig, "sigma x\\ (f x = f a => ff)")
    assert "decompose" in [s.rule for s in steps]
    (c,) = red.conjuncts
    (guard,) = c.guards
    assert render_state(red) == "sigma h1 . ((h1 = a) => ff)"
    assert free_logic_vars(guard.lhs) | free_logic_vars(guard.rhs) == {"h1"}


def test_reduce_flexible_guard_kept():
    sig = small_sig()
    # y only occurs beneath the flexible head, so nothing applies
    red, steps = reduced(sig, "sigma x\\ ((pi y\\ (y = f (x y) => ff)) , x a = a)")
    assert steps == []
    assert len(red.conjuncts) == 2


def test_reduce_example_pipeline():
    sig = small_sig()
    red, _ = reduced(
        sig, "pi u\\ pi v\\ sigma x\\ ((u = a => v = b => x = a) , (u = b => x = u))"
    )
    assert render_state(red) == "sigma h1 . (h1 a b = a) , (pi v\\ h1 b v = b)"


def test_reduced_guards_mention_logic_variables():
    # after reduction every surviving guard is flexible somewhere
    sig = property_signature()
    gen = GoalGen(Random(23), sig)
    for _ in range(150):
        st, _ = normalize(gen.goal())
        red, _ = reduce(st, sig)
        for c in red.conjuncts:
            for guard in c.guards:
                assert free_logic_vars(guard.lhs) | free_logic_vars(guard.rhs)


def test_reduce_measure_strictly_decreases():
    sig = property_signature()
    gen = GoalGen(Random(29), sig)
    for _ in range(100):
        st, _ = normalize(gen.goal())
        seen = 0
        while True:
            step = reduce_step(st, sig)
            if step is None:
                break
            nxt, _ = step
            assert reduce_measure(nxt) < reduce_measure(st)
            st = nxt
            seen += 1
            assert seen < 500


# ---------------------------------------------------------------------------
# Classification


def test_classify_success_failure():
    sig = small_sig()
    st, _ = norm(sig, "tt")
    assert classify(st) == "success"
    st, _ = norm(sig, "ff")
    assert classify(st) == "failure"


def test_classify_failure_beats_active():
    sig = small_sig()
    st, _ = norm(sig, "sigma x\\ (x = a , ff)")
    assert classify(st) == "failure"


def test_classify_active_kinds():
    sig = small_sig()
    st, _ = norm(sig, "sigma x\\ x = a")
    assert classify(st) == "active"
    assert target_kind(st.conjuncts[0]) == "flex_rigid"
    st, _ = norm(sig, "f a = f b")
    assert target_kind(st.conjuncts[0]) == "rigid_rigid"
    st, _ = norm(sig, "a = a")
    assert target_kind(st.conjuncts[0]) == "identical"


def test_classify_eigens_are_rigid_targets():
    sig = small_sig()
    st, _ = norm(sig, "pi u\\ sigma x\\ x = u")
    red, _ = reduce(st, sig)
    assert target_kind(red.conjuncts[0]) == "flex_rigid"


def test_classify_suspended_flex_flex():
    sig = small_sig()
    st, _ = norm(sig, "sigma x\\ sigma y\\ x = y")
    red, _ = reduce(st, sig)
    assert classify(red) == "suspended"


def test_classify_guarded_false_is_suspended():
    sig = small_sig()
    red, _ = reduced(sig, "sigma x\\ (a = x => ff)")
    assert classify(red) == "suspended"


# ---------------------------------------------------------------------------
# Structural helpers


def test_state_alpha_eq_across_fresh_names():
    sig = small_sig()
    g = parse_goal("pi u\\ sigma x\\ (u = a => x = u)", sig)
    a, _ = normalize(g)
    b, _ = normalize(g, FreshNames(reserved={"h1"}))
    assert render_state(a) != render_state(b)
    assert state_alpha_eq(a, b)
    assert canonical_key(a) == canonical_key(b)


def test_state_alpha_eq_discriminates():
    sig = small_sig()
    a, _ = norm(sig, "sigma x\\ x = a")
    b, _ = norm(sig, "sigma x\\ x = b")
    assert not state_alpha_eq(a, b)
    assert canonical_key(a) != canonical_key(b)


def test_conjunct_goal_reading():
    sig = small_sig()
    st, _ = norm(sig, "pi u\\ (u = a => f u = b)")
    (c,) = st.conjuncts
    assert render_goal(conjunct_goal(c)) == "pi u\\ (u = a) => f u = b"


def test_atom_targets():
    sig = small_sig()
    sig.declare_const("p", Arrow(sig.prims["i"], sig.prims["o"]))
    st, _ = norm(sig, "p a")
    (c,) = st.conjuncts
    assert isinstance(c.target, TAtom)
    assert target_kind(c) == "atom"
    assert classify(st) == "active"
