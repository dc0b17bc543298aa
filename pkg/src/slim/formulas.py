"""Goal formulas, definite clauses and programs.

The goal grammar restricts where quantifiers and equalities may appear:
universal quantification only over primitive types, existential
quantification over types of order at most one, equalities over types
that do not mention the formula type ``o``, and implication only with an
equality antecedent.  ``check_goal``/``check_clause`` report violations
as data so callers can surface them all at once.

Quantified formula variables are represented by named leaves inside the
terms: ``Eigen`` for universals and ``LogicVar`` for existentials and
clause variables.  Parsed formulas have pairwise distinct binder names.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .terms import (
    Eigen,
    FreshNames,
    LogicVar,
    Prim,
    Signature,
    SlimError,
    Term,
    Type,
    free_names,
    mentions_formula_type,
    order,
    split_type,
    subst_eigens,
    beta_normalize,
    _replace_lvs,
)


class ScopeError(SlimError):
    pass


# ---------------------------------------------------------------------------
# Goal formulas


@dataclass(frozen=True)
class GTrue:
    pass


@dataclass(frozen=True)
class GFalse:
    pass


@dataclass(frozen=True)
class GAtom:
    pred: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class GAnd:
    left: "Goal"
    right: "Goal"


@dataclass(frozen=True)
class GEq:
    lhs: Term
    rhs: Term
    ty: Type


@dataclass(frozen=True)
class GGuard:
    """``lhs = rhs => body``: an implication guarded by an equality."""

    lhs: Term
    rhs: Term
    ty: Type
    body: "Goal"


@dataclass(frozen=True)
class GForall:
    name: str
    ty: Prim
    body: "Goal"


@dataclass(frozen=True)
class GExists:
    name: str
    ty: Type
    body: "Goal"


Goal = Union[GTrue, GFalse, GAtom, GAnd, GEq, GGuard, GForall, GExists]


@dataclass(frozen=True)
class DefiniteClause:
    """``forall universals. body => head`` with the head an atom."""

    universals: tuple[tuple[str, Type], ...]
    head: GAtom
    body: Goal


@dataclass
class Program:
    signature: Signature
    clauses: list[DefiniteClause] = field(default_factory=list)
    named_goals: dict[str, Goal] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Traversals


def subgoals(g: Goal) -> Iterator[Goal]:
    yield g
    match g:
        case GAnd(l, r):
            yield from subgoals(l)
            yield from subgoals(r)
        case GGuard(_, _, _, body) | GForall(_, _, body) | GExists(_, _, body):
            yield from subgoals(body)


def goal_terms(g: Goal) -> Iterator[Term]:
    for sub in subgoals(g):
        match sub:
            case GAtom(_, args):
                yield from args
            case GEq(l, r, _) | GGuard(l, r, _, _):
                yield l
                yield r


def goal_names(g: Goal) -> set[str]:
    """All names occurring in ``g``: binders and leaves of its terms."""
    names: set[str] = set()
    for sub in subgoals(g):
        match sub:
            case GForall(name, _, _) | GExists(name, _, _):
                names.add(name)
            case GAtom(pred, _):
                names.add(pred)
    for t in goal_terms(g):
        names.update(n for _, n in free_names(t))
    return names


def free_goal_vars(g: Goal) -> tuple[set[str], set[str]]:
    """Free (eigen, logic) variable names of a goal formula."""
    eigs: set[str] = set()
    lvs: set[str] = set()

    def walk(sub: Goal, be: frozenset[str], bv: frozenset[str]) -> None:
        match sub:
            case GAnd(l, r):
                walk(l, be, bv)
                walk(r, be, bv)
            case GGuard(l, r, _, body):
                _collect(l, be, bv)
                _collect(r, be, bv)
                walk(body, be, bv)
            case GForall(name, _, body):
                walk(body, be | {name}, bv)
            case GExists(name, _, body):
                walk(body, be, bv | {name})
            case GAtom(_, args):
                for t in args:
                    _collect(t, be, bv)
            case GEq(l, r, _):
                _collect(l, be, bv)
                _collect(r, be, bv)

    def _collect(t: Term, be: frozenset[str], bv: frozenset[str]) -> None:
        for kind, name in free_names(t):
            if kind == "e" and name not in be:
                eigs.add(name)
            elif kind == "v" and name not in bv:
                lvs.add(name)

    walk(g, frozenset(), frozenset())
    return eigs, lvs


def subst_goal_eigens(g: Goal, mapping: dict[str, Term]) -> Goal:
    def on_term(t: Term) -> Term:
        return beta_normalize(subst_eigens(t, mapping))

    return _map_terms(g, on_term)


def subst_goal_lvs(g: Goal, mapping: dict[str, Term]) -> Goal:
    def on_term(t: Term) -> Term:
        return beta_normalize(_replace_lvs(t, mapping))

    return _map_terms(g, on_term)


def _map_terms(g: Goal, f) -> Goal:
    match g:
        case GAnd(l, r):
            return GAnd(_map_terms(l, f), _map_terms(r, f))
        case GGuard(l, r, ty, body):
            return GGuard(f(l), f(r), ty, _map_terms(body, f))
        case GForall(name, ty, body):
            return GForall(name, ty, _map_terms(body, f))
        case GExists(name, ty, body):
            return GExists(name, ty, _map_terms(body, f))
        case GAtom(pred, args):
            return GAtom(pred, tuple(f(t) for t in args))
        case GEq(l, r, ty):
            return GEq(f(l), f(r), ty)
        case _:
            return g


def instantiate_goal(g: Goal, bindings: dict[str, Term]) -> Goal:
    """Remove each ``GExists`` node whose variable has a binding and
    substitute the binding for its occurrences."""
    match g:
        case GExists(name, _, body) if name in bindings:
            return instantiate_goal(subst_goal_lvs(body, {name: bindings[name]}), bindings)
        case GExists(name, ty, body):
            return GExists(name, ty, instantiate_goal(body, bindings))
        case GAnd(l, r):
            return GAnd(instantiate_goal(l, bindings), instantiate_goal(r, bindings))
        case GGuard(l, r, ty, body):
            return GGuard(l, r, ty, instantiate_goal(body, bindings))
        case GForall(name, ty, body):
            return GForall(name, ty, instantiate_goal(body, bindings))
        case _:
            return g


def exists_scopes(g: Goal) -> dict[str, tuple[Type, tuple[tuple[str, Prim], ...]]]:
    """For each existential binder: its type and the universals enclosing it."""
    out: dict[str, tuple[Type, tuple[tuple[str, Prim], ...]]] = {}

    def walk(sub: Goal, ys: tuple[tuple[str, Prim], ...]) -> None:
        match sub:
            case GAnd(l, r):
                walk(l, ys)
                walk(r, ys)
            case GGuard(_, _, _, body):
                walk(body, ys)
            case GForall(name, ty, body):
                walk(body, ys + ((name, ty),))
            case GExists(name, ty, body):
                out[name] = (ty, ys)
                walk(body, ys)

    walk(g, ())
    return out


def goal_is_atom_free(g: Goal) -> bool:
    return not any(isinstance(s, GAtom) for s in subgoals(g))


def goal_has_exists(g: Goal) -> bool:
    return any(isinstance(s, GExists) for s in subgoals(g))


# ---------------------------------------------------------------------------
# Well-formedness


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def _check_eq_type(ty: Type, where: str, out: list[Violation]) -> None:
    if mentions_formula_type(ty):
        out.append(
            Violation(
                "eq-type",
                f"{where}: equality at type {ty!r} mentions the formula type",
            )
        )


def check_goal(sig: Signature, g: Goal) -> list[Violation]:
    """Grammar and scoping violations of a goal formula, as data."""
    out: list[Violation] = []
    for sub in subgoals(g):
        match sub:
            case GForall(name, ty, _):
                if not isinstance(ty, Prim) or mentions_formula_type(ty):
                    out.append(
                        Violation(
                            "forall-type",
                            f"universal {name} must have a primitive non-formula type, got {ty!r}",
                        )
                    )
            case GExists(name, ty, _):
                if order(ty) > 1 or mentions_formula_type(ty):
                    out.append(
                        Violation(
                            "exists-type",
                            f"existential {name} must have order <= 1 and avoid the formula type, got {ty!r}",
                        )
                    )
            case GEq(_, _, ty):
                _check_eq_type(ty, "target equality", out)
            case GGuard(_, _, ty, _):
                _check_eq_type(ty, "guard equality", out)
            case GAtom(pred, _):
                ty = sig.consts.get(pred)
                if ty is None:
                    out.append(Violation("atom-pred", f"undeclared predicate: {pred}"))
                else:
                    _, target = split_type(ty)
                    if target.name != "o":
                        out.append(
                            Violation(
                                "atom-pred",
                                f"atom head {pred} does not target the formula type",
                            )
                        )
    return out


def check_clause(sig: Signature, d: DefiniteClause) -> list[Violation]:
    out: list[Violation] = []
    for name, ty in d.universals:
        if order(ty) > 1 or mentions_formula_type(ty):
            out.append(
                Violation(
                    "clause-universal",
                    f"clause variable {name} must have order <= 1 and avoid the formula type, got {ty!r}",
                )
            )
    out.extend(check_goal(sig, d.head))
    out.extend(check_goal(sig, d.body))
    bound = {name for name, _ in d.universals}
    for g in (d.body, d.head):
        _, lvs = free_goal_vars(g)
        for name in sorted(lvs - bound):
            out.append(Violation("clause-free", f"unbound clause variable: {name}"))
    return out


def rename_clause(d: DefiniteClause, fresh: FreshNames) -> DefiniteClause:
    """Copy of ``d`` whose universals carry fresh logic-variable names."""
    mapping = {name: LogicVar(fresh.fresh(name)) for name, _ in d.universals}
    universals = tuple(
        (mapping[name].name, ty) for name, ty in d.universals
    )
    head = subst_goal_lvs(d.head, mapping)
    assert isinstance(head, GAtom)
    return DefiniteClause(universals, head, subst_goal_lvs(d.body, mapping))
