"""Shared brute-force machinery for the property suites.

The engine is judged against answers recomputed the slow way: candidate
substitutions are enumerated exhaustively up to a depth bound and each
one is accepted or rejected by the ground decision procedure.  Nothing
in here consults the transition system, so agreement between the two is
meaningful evidence.
"""

import itertools
import re
from random import Random

from slim.engine import decide_existential_free
from slim.formulas import (
    GAnd,
    GEq,
    GExists,
    GFalse,
    GForall,
    GGuard,
    GTrue,
    Goal,
    subst_goal_lvs,
)
from slim.states import State, conjunct_goal
from slim.terms import (
    App,
    Arrow,
    Bound,
    Const,
    Eigen,
    Lam,
    LogicVar,
    Prim,
    Signature,
    Term,
    Type,
    make_app,
    mentions_formula_type,
    split_type,
    term_eq,
)

PLACEHOLDER = re.compile(r"_\d+")


def property_signature() -> Signature:
    """Three object constants over one primitive type: a, b and f."""
    sig = Signature()
    sig.declare_prim("i")
    i = sig.prims["i"]
    sig.declare_const("a", i)
    sig.declare_const("b", i)
    sig.declare_const("f", Arrow(i, i))
    return sig


def enumerate_terms(pool: list[tuple[str, Type]], ty: Type, depth: int,
                    bound: tuple[Type, ...] = ()) -> list[Term]:
    """All beta-normal terms of the given type, application depth <= depth.

    ``pool`` lists the constants available; ``bound`` carries the types of
    enclosing lambda binders, innermost last.  Arrow types produce fully
    abstracted lambdas, so eta-short variants only show up via term_eq.
    """
    if isinstance(ty, Arrow):
        return [Lam(ty.dom, body)
                for body in enumerate_terms(pool, ty.cod, depth, bound + (ty.dom,))]
    out: list[Term] = []
    heads: list[tuple[Term, Type]] = []
    for idx, bty in enumerate(reversed(bound)):
        heads.append((Bound(idx), bty))
    for name, cty in pool:
        heads.append((Const(name), cty))
    for head, hty in heads:
        arg_tys, target = split_type(hty)
        if target != ty:
            continue
        if not arg_tys:
            out.append(head)
        elif depth > 0:
            columns = [enumerate_terms(pool, aty, depth - 1, bound) for aty in arg_tys]
            for combo in itertools.product(*columns):
                out.append(make_app(head, list(combo)))
    return out


def term_pool(sig: Signature) -> list[tuple[str, Type]]:
    """The object-level constants of a signature (predicates excluded)."""
    return [(name, ty) for name, ty in sig.consts.items()
            if not mentions_formula_type(ty)]


def strip_exists(goal: Goal) -> tuple[list[tuple[str, Type]], Goal]:
    binders: list[tuple[str, Type]] = []
    while isinstance(goal, GExists):
        binders.append((goal.name, goal.ty))
        goal = goal.body
    return binders, goal


def brute_solutions(goal: Goal, sig: Signature, depth: int = 3) -> list[dict[str, Term]]:
    """Closed instantiations of the outermost existential block that the
    decision procedure accepts.  The goal must be atom-free with all its
    existentials up front."""
    binders, body = strip_exists(goal)
    pool = term_pool(sig)
    columns = [enumerate_terms(pool, ty, depth) for _, ty in binders]
    found: list[dict[str, Term]] = []
    for combo in itertools.product(*columns):
        bindings = {name: val for (name, _), val in zip(binders, combo)}
        inst = subst_goal_lvs(body, bindings)
        if decide_existential_free(inst, sig):
            found.append(bindings)
    return found


def brute_state_solutions(state: State, sig: Signature, depth: int = 3) -> list[dict[str, Term]]:
    """Same idea lifted to state formulas: every conjunct, read back as a
    goal, must pass the decision procedure under the instantiation."""
    pool = term_pool(sig)
    columns = [enumerate_terms(pool, ty, depth) for _, ty in state.existentials]
    found: list[dict[str, Term]] = []
    for combo in itertools.product(*columns):
        bindings = {name: val for (name, _), val in zip(state.existentials, combo)}
        for c in state.conjuncts:
            inst = subst_goal_lvs(conjunct_goal(c), bindings)
            if not decide_existential_free(inst, sig):
                break
        else:
            found.append(bindings)
    return found


def is_placeholder(t: Term) -> bool:
    return isinstance(t, Const) and PLACEHOLDER.fullmatch(t.name) is not None


def bindings_eq(a: dict[str, Term], b: dict[str, Term]) -> bool:
    return a.keys() == b.keys() and all(term_eq(a[k], b[k]) for k in a)


def bindings_cover(sol: dict[str, Term], cand: dict[str, Term]) -> bool:
    """Does an emitted solution cover a brute-force candidate?  Placeholder
    constants stand for variables the search never needed to bind, so they
    match any candidate value."""
    for name, cval in cand.items():
        sval = sol.get(name)
        if sval is None or is_placeholder(sval):
            continue
        if not term_eq(sval, cval):
            return False
    return True


def solution_sets_equal(xs: list[dict[str, Term]], ys: list[dict[str, Term]]) -> bool:
    return (all(any(bindings_eq(x, y) for y in ys) for x in xs)
            and all(any(bindings_eq(y, x) for x in xs) for y in ys))


class GoalGen:
    """Seeded generator for the randomized atom-free goal class: at most
    two outermost existentials of order <= 1, equations between terms of
    depth <= 3 over the three-constant signature."""

    def __init__(self, rng: Random, sig: Signature):
        self.rng = rng
        self.sig = sig
        self.i = sig.prims["i"]
        self.counter = 0

    def goal(self) -> Goal:
        self.counter = 0
        n = self.rng.randint(0, 2)
        evars: dict[str, Type] = {}
        for k in range(n):
            name = f"x{k + 1}"
            evars[name] = self.rng.choice([self.i, Arrow(self.i, self.i)])
        body = self.body(self.rng.randint(1, 3), [], evars)
        for name in reversed(list(evars)):
            body = GExists(name, evars[name], body)
        return body

    def body(self, size: int, scope: list[str], evars: dict[str, Type]) -> Goal:
        roll = self.rng.random()
        if size <= 0 or roll < 0.40:
            if roll < 0.04:
                return GTrue()
            if roll < 0.08:
                return GFalse()
            return GEq(self.term(2, scope, evars), self.term(2, scope, evars), self.i)
        if roll < 0.60:
            return GAnd(self.body(size - 1, scope, evars),
                        self.body(size - 1, scope, evars))
        if roll < 0.80:
            return GGuard(self.term(2, scope, evars), self.term(2, scope, evars),
                          self.i, self.body(size - 1, scope, evars))
        self.counter += 1
        name = f"u{self.counter}"
        return GForall(name, self.i, self.body(size - 1, scope + [name], evars))

    def term(self, depth: int, scope: list[str], evars: dict[str, Type]) -> Term:
        atoms: list[Term] = [Const("a"), Const("b")]
        atoms.extend(Eigen(u) for u in scope)
        atoms.extend(LogicVar(x) for x, ty in evars.items() if ty == self.i)
        apps = depth > 0
        if apps and self.rng.random() < 0.5:
            arrows = [x for x, ty in evars.items() if isinstance(ty, Arrow)]
            if arrows and self.rng.random() < 0.5:
                return App(LogicVar(self.rng.choice(arrows)),
                           self.term(depth - 1, scope, evars))
            return App(Const("f"), self.term(depth - 1, scope, evars))
        return self.rng.choice(atoms)
