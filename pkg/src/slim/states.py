"""Reduced state formulas: normalization, guard reduction, classification.

A state formula is a prefix of existential variables followed by a
conjunction of guarded goals.  Each conjunct carries its own block of
universally bound variables (all of primitive type), a list of equality
guards, and a target which is an equality, an atom, or falsehood:

    sigma h1 .. hk . /\\ ( pi y1 .. yn . (t1 = s1) => .. => target )

Goals are brought into this shape by ``normalize``:

* conjunctions split the surrounding context,
* guards accumulate on the way down,
* ``tt`` conjuncts are dropped,
* each existential is raised over the universals in scope: a fresh
  variable ``h`` replaces ``x`` with the application ``h y1 .. yn``, so
  that the prefix can sit in front of everything else,
* a target equality at arrow type is eta-expanded by appending fresh
  universals to the conjunct; guard equalities at arrow type are kept
  as they are, because pulling a binder out of an implication's
  antecedent changes its meaning.

``reduce`` simplifies guards until no rule applies.  The rules, in
priority order for a given guard:

  occurs      a universal equated with a term containing it rigidly;
              no instance satisfies the guard, the conjunct is dropped
  clash       distinct rigid heads on both sides; conjunct dropped
  ground      both sides closed and distinct; conjunct dropped
  eliminate   a universal equated with a term not containing it is
              substituted away and removed from the prefix
  loose       a universal equated with a term that must keep one of the
              guard's own lambda binders; conjunct dropped
  delete      identical sides; the guard is dropped
  decompose   equal rigid heads; the guard splits into one guard per
              argument (under lambda prefixes this re-abstracts, it
              never moves a binder out of the guard)

Rules compare the sides through their eta-views under the guard type's
lambda prefix, so a guard at arrow type reduces without its binders
ever escaping.

The scan is leftmost conjunct first, leftmost workable guard within it.
Reduction terminates: eliminate shrinks the total universal count, and
every other rule shrinks the total guard size counted without lambda
nodes while leaving the universal count alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Union

from .formulas import (
    GAnd,
    GAtom,
    GEq,
    GFalse,
    GForall,
    GGuard,
    GExists,
    GTrue,
    Goal,
    goal_names,
    subst_goal_lvs,
)
from .terms import (
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
    Term,
    Type,
    arrow,
    beta_normalize,
    free_eigens,
    free_logic_vars,
    has_loose_bounds,
    head_of,
    make_app,
    rigid_subterm,
    shift,
    split_type,
    strip_app,
    subst_eigens,
    term_eq,
    apply_subst,
)
from .syntax import render_goal, render_type


class NormalizationError(SlimError):
    pass


# ---------------------------------------------------------------------------
# State formulas


@dataclass(frozen=True)
class TEq:
    lhs: Term
    rhs: Term
    ty: Prim


@dataclass(frozen=True)
class TAtom:
    pred: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class TFalse:
    pass


Target = Union[TEq, TAtom, TFalse]


@dataclass(frozen=True)
class Guard:
    lhs: Term
    rhs: Term
    ty: Type


@dataclass(frozen=True)
class Conjunct:
    universals: tuple[tuple[str, Prim], ...]
    guards: tuple[Guard, ...]
    target: Target

    def universal_names(self) -> set[str]:
        return {name for name, _ in self.universals}

    def terms(self) -> Iterator[Term]:
        for g in self.guards:
            yield g.lhs
            yield g.rhs
        match self.target:
            case TEq(l, r, _):
                yield l
                yield r
            case TAtom(_, args):
                yield from args


@dataclass(frozen=True)
class State:
    existentials: tuple[tuple[str, Type], ...]
    conjuncts: tuple[Conjunct, ...]

    def existential_names(self) -> set[str]:
        return {name for name, _ in self.existentials}

    def flex_vars(self) -> set[str]:
        out: set[str] = set()
        for c in self.conjuncts:
            for t in c.terms():
                out |= free_logic_vars(t)
        return out


def prune_conjunct(c: Conjunct) -> Conjunct:
    """Drop universals that no longer occur in the conjunct."""
    used: set[str] = set()
    for t in c.terms():
        used |= free_eigens(t)
    kept = tuple((n, ty) for n, ty in c.universals if n in used)
    if len(kept) == len(c.universals):
        return c
    return Conjunct(kept, c.guards, c.target)


def eq_conjunct(
    universals: tuple[tuple[str, Prim], ...],
    guards: tuple[Guard, ...],
    lhs: Term,
    rhs: Term,
    ty: Type,
    fresh: FreshNames,
) -> Conjunct:
    """Build a conjunct for a target equality, eta-expanding arrow types.

    ``t = s`` at type ``a -> b`` becomes ``pi w. t w = s w``; the fresh
    universals join the conjunct's own block.  Argument types must be
    primitive, the state shape has nowhere to bind a function variable.
    """
    args, core = split_type(ty)
    if core.name == "o":
        raise NormalizationError("equality at the formula type is not allowed")
    if not args:
        assert isinstance(ty, Prim)
        return prune_conjunct(Conjunct(universals, guards, TEq(lhs, rhs, ty)))
    ws: list[tuple[str, Prim]] = []
    for a in args:
        if not isinstance(a, Prim) or a.name == "o":
            raise NormalizationError(
                "cannot expand an equality whose argument type is not primitive"
            )
        ws.append((fresh.fresh("w"), a))
    spine = [Eigen(n) for n, _ in ws]
    l = beta_normalize(make_app(lhs, spine))
    r = beta_normalize(make_app(rhs, spine))
    return prune_conjunct(
        Conjunct(universals + tuple(ws), guards, TEq(l, r, core))
    )


# ---------------------------------------------------------------------------
# Normalization


@dataclass(frozen=True)
class RaisedVar:
    original: str
    raised: str
    spine: tuple[tuple[str, Prim], ...]
    ty: Type

    def raised_type(self) -> Type:
        return arrow([t for _, t in self.spine], self.ty)

    def spine_term(self) -> Term:
        return make_app(LogicVar(self.raised), [Eigen(n) for n, _ in self.spine])


@dataclass
class Raising:
    """Records how each source existential was raised over its universals."""

    entries: dict[str, RaisedVar] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)

    def add(self, rv: RaisedVar) -> None:
        if rv.original in self.entries:
            raise NormalizationError(f"duplicate existential name: {rv.original}")
        self.entries[rv.original] = rv
        self.order.append(rv.original)


def normalize_into(
    g: Goal,
    fresh: FreshNames,
    universals: tuple[tuple[str, Prim], ...] = (),
    guards: tuple[Guard, ...] = (),
) -> tuple[list[Conjunct], list[tuple[str, Type]], Raising]:
    """Normalize ``g`` under an ambient universal/guard context.

    Returns the conjuncts, the raised existentials in binder order, and
    the raising record.  Binder names in ``g`` must be globally unique;
    the parser guarantees this for parsed goals.
    """
    conjuncts: list[Conjunct] = []
    raising = Raising()

    def walk(sub: Goal, ys: tuple[tuple[str, Prim], ...], gs: tuple[Guard, ...]) -> None:
        match sub:
            case GTrue():
                return
            case GFalse():
                conjuncts.append(prune_conjunct(Conjunct(ys, gs, TFalse())))
            case GAtom(pred, args):
                conjuncts.append(prune_conjunct(Conjunct(ys, gs, TAtom(pred, args))))
            case GEq(l, r, ty):
                conjuncts.append(eq_conjunct(ys, gs, l, r, ty, fresh))
            case GGuard(l, r, ty, body):
                walk(body, ys, gs + (Guard(l, r, ty),))
            case GAnd(l, r):
                walk(l, ys, gs)
                walk(r, ys, gs)
            case GForall(name, ty, body):
                walk(body, ys + ((name, ty),), gs)
            case GExists(name, ty, body):
                h = fresh.fresh("h")
                rv = RaisedVar(name, h, ys, ty)
                raising.add(rv)
                walk(subst_goal_lvs(body, {name: rv.spine_term()}), ys, gs)
            case _:
                raise AssertionError(f"unreachable: {sub!r}")

    walk(g, universals, guards)
    existentials = [
        (raising.entries[n].raised, raising.entries[n].raised_type())
        for n in raising.order
    ]
    return conjuncts, existentials, raising


def normalize(g: Goal, fresh: Optional[FreshNames] = None) -> tuple[State, Raising]:
    if fresh is None:
        fresh = FreshNames(goal_names(g))
    conjuncts, existentials, raising = normalize_into(g, fresh)
    return State(tuple(existentials), tuple(conjuncts)), raising


# ---------------------------------------------------------------------------
# Guard reduction


def _eta_views(g: Guard) -> tuple[Term, Term, list[Type]]:
    """Views of both sides under the guard type's lambda prefix."""
    args, _ = split_type(g.ty)
    k = len(args)
    if k == 0:
        return g.lhs, g.rhs, []
    spine = [Bound(j) for j in range(k - 1, -1, -1)]
    l = beta_normalize(make_app(shift(g.lhs, k), spine))
    r = beta_normalize(make_app(shift(g.rhs, k), spine))
    return l, r, args


def _head_class(t: Term, ynames: set[str]) -> str:
    head = head_of(t)
    match head:
        case LogicVar(_):
            return "flex"
        case Eigen(name):
            return "universal" if name in ynames else "rigid"
        case Const(_) | Bound(_):
            return "rigid"
        case Lam(_, _, _):
            return "lam"
    raise AssertionError(f"unreachable: {head!r}")


def _same_head(a: Term, b: Term) -> bool:
    return head_of(a) == head_of(b)


def _ground(t: Term, ynames: set[str]) -> bool:
    return not free_logic_vars(t) and not (free_eigens(t) & ynames)


@dataclass(frozen=True)
class ReduceStep:
    rule: str
    conjunct: int
    guard: int


def _eliminate_choice(c: Conjunct, lv: Term, rv: Term) -> Optional[tuple[str, Term]]:
    """A universal one view presents bare, equated with a term it does not
    occur in.  The value must not mention the view's lambda binders: the
    universal lives outside them."""
    ynames = c.universal_names()
    for a, b in ((lv, rv), (rv, lv)):
        if (
            isinstance(a, Eigen)
            and a.name in ynames
            and a.name not in free_eigens(b)
            and not has_loose_bounds(b)
        ):
            return a.name, b
    return None


def _guard_rule(c: Conjunct, g: Guard) -> Optional[str]:
    """The highest-priority reduction rule applicable to one guard.

    Rules work on the views of both sides under the guard type's full
    lambda prefix; a rule never moves a binder out of the guard.
    """
    ynames = c.universal_names()
    lv, rv, _ = _eta_views(g)
    for a, b in ((lv, rv), (rv, lv)):
        if isinstance(a, Eigen) and a.name in ynames and rigid_subterm(b, a):
            return "occurs"
    lc, rc = _head_class(lv, ynames), _head_class(rv, ynames)
    if lc == "rigid" and rc == "rigid" and not _same_head(lv, rv):
        return "clash"
    if _ground(g.lhs, ynames) and _ground(g.rhs, ynames) and not term_eq(g.lhs, g.rhs):
        return "ground"
    if _eliminate_choice(c, lv, rv) is not None:
        return "eliminate"
    for a, b in ((lv, rv), (rv, lv)):
        # Bare universal against a term that uses a view binder: no
        # instance makes the two sides the same term, unless a flexible
        # part of the other side could still drop that binder.
        if (
            isinstance(a, Eigen)
            and a.name in ynames
            and a.name not in free_eigens(b)
            and has_loose_bounds(b)
            and not free_logic_vars(b)
        ):
            return "loose"
    if term_eq(g.lhs, g.rhs):
        return "delete"
    if lc == rc == "rigid" and _same_head(lv, rv):
        return "decompose"
    return None


def _apply_guard_rule(
    c: Conjunct, gi: int, rule: str, sig: Signature
) -> Optional[Conjunct]:
    """Apply ``rule`` to guard ``gi``; ``None`` means the conjunct became true."""
    g = c.guards[gi]
    rest = c.guards[:gi] + c.guards[gi + 1 :]
    match rule:
        case "occurs" | "clash" | "ground" | "loose":
            return None
        case "delete":
            return prune_conjunct(Conjunct(c.universals, rest, c.target))
        case "eliminate":
            lv, rv, _ = _eta_views(g)
            choice = _eliminate_choice(c, lv, rv)
            assert choice is not None
            y, value = choice
            mapping = {y: value}

            def sub(t: Term) -> Term:
                return beta_normalize(subst_eigens(t, mapping))

            universals = tuple((n, ty) for n, ty in c.universals if n != y)
            guards = tuple(Guard(sub(x.lhs), sub(x.rhs), x.ty) for x in rest)
            target = _map_target(c.target, sub)
            return prune_conjunct(Conjunct(universals, guards, target))
        case "decompose":
            lv, rv, arg_tys = _eta_views(g)
            _, largs = strip_app(lv)
            _, rargs = strip_app(rv)
            assert largs and len(largs) == len(rargs)
            head = head_of(lv)
            sub_tys = _spine_arg_types(head, len(largs), arg_tys, sig)
            new: list[Guard] = []
            for a, b, ty in zip(largs, rargs, sub_tys):
                new.append(Guard(_abstract(a, arg_tys), _abstract(b, arg_tys), arrow(list(arg_tys), ty)))
            return prune_conjunct(
                Conjunct(c.universals, c.guards[:gi] + tuple(new) + c.guards[gi + 1 :], c.target)
            )
    raise AssertionError(f"unreachable rule: {rule}")


def _map_target(t: Target, f: Callable[[Term], Term]) -> Target:
    match t:
        case TEq(l, r, ty):
            return TEq(f(l), f(r), ty)
        case TAtom(pred, args):
            return TAtom(pred, tuple(f(a) for a in args))
        case TFalse():
            return t
    raise AssertionError(f"unreachable: {t!r}")


def _abstract(t: Term, arg_tys: list[Type]) -> Term:
    for ty in reversed(arg_tys):
        t = Lam(ty, t, "w")
    return t


def _spine_arg_types(head: Term, n: int, binder_tys: list[Type], sig: Signature) -> list[Type]:
    match head:
        case Const(name):
            head_ty = sig.const_type(name)
        case Eigen(_):
            return []  # primitive, never applied
        case Bound(i):
            head_ty = binder_tys[len(binder_tys) - 1 - i]
        case _:
            raise AssertionError(f"not a rigid head: {head!r}")
    args, _ = split_type(head_ty)
    assert len(args) >= n
    return args[:n]


def reduce_step(state: State, sig: Signature) -> Optional[tuple[State, ReduceStep]]:
    for ci, c in enumerate(state.conjuncts):
        for gi, g in enumerate(c.guards):
            rule = _guard_rule(c, g)
            if rule is None:
                continue
            new_c = _apply_guard_rule(c, gi, rule, sig)
            before = state.conjuncts[:ci]
            after = state.conjuncts[ci + 1 :]
            if new_c is None:
                conjuncts = before + after
            else:
                conjuncts = before + (new_c,) + after
            return State(state.existentials, conjuncts), ReduceStep(rule, ci, gi)
    return None


def reduce(state: State, sig: Signature) -> tuple[State, list[ReduceStep]]:
    steps: list[ReduceStep] = []
    while True:
        nxt = reduce_step(state, sig)
        if nxt is None:
            return state, steps
        state, step = nxt
        steps.append(step)


def reduce_measure(state: State) -> tuple[int, int]:
    """Strictly decreases at every reduction step, proving termination."""
    universals = sum(len(c.universals) for c in state.conjuncts)
    weight = 0
    for c in state.conjuncts:
        for g in c.guards:
            weight += _nonlam_size(g.lhs) + _nonlam_size(g.rhs)
    return universals, weight


def _nonlam_size(t: Term) -> int:
    match t:
        case App(fn, arg):
            return 1 + _nonlam_size(fn) + _nonlam_size(arg)
        case Lam(_, body, _):
            return _nonlam_size(body)
        case _:
            return 1


# ---------------------------------------------------------------------------
# Classification


def target_kind(c: Conjunct) -> str:
    """How the transition system can act on a conjunct's target."""
    ynames = c.universal_names()
    match c.target:
        case TFalse():
            return "false"
        case TAtom(_, _):
            return "atom"
        case TEq(l, r, _):
            if term_eq(l, r):
                return "identical"
            # For targets a universal head counts as rigid: the equality
            # must hold for every instance, so only syntactic agreement
            # can close it.
            lflex = _head_class(l, set()) == "flex"
            rflex = _head_class(r, set()) == "flex"
            if lflex and rflex:
                return "flex_flex"
            if lflex or rflex:
                return "flex_rigid"
            return "rigid_rigid"
    raise AssertionError(f"unreachable: {c.target!r}")


def classify(state: State) -> str:
    """'success', 'failure', 'active' or 'suspended' for a reduced state.

    Targets are workable even under pending guards: decomposing or
    clashing an equality target, and backchaining on an atom, all
    distribute over the guarded context.  A conjunct whose target is a
    flex-flex equality, or falsehood still protected by a guard, only
    waits; if every conjunct waits the state is suspended.
    """
    if not state.conjuncts:
        return "success"
    for c in state.conjuncts:
        if isinstance(c.target, TFalse) and not c.guards:
            return "failure"
    for c in state.conjuncts:
        if target_kind(c) in ("atom", "identical", "rigid_rigid", "flex_rigid"):
            return "active"
    return "suspended"


# ---------------------------------------------------------------------------
# Substitution over states


def apply_subst_conjunct(subst: Substitution, c: Conjunct) -> Conjunct:
    def f(t: Term) -> Term:
        return apply_subst(subst, t)

    guards = tuple(Guard(f(g.lhs), f(g.rhs), g.ty) for g in c.guards)
    return prune_conjunct(Conjunct(c.universals, guards, _map_target(c.target, f)))


def apply_subst_conjuncts(
    subst: Substitution, conjuncts: tuple[Conjunct, ...]
) -> tuple[Conjunct, ...]:
    return tuple(apply_subst_conjunct(subst, c) for c in conjuncts)


# ---------------------------------------------------------------------------
# Canonical keys (used to deduplicate suspended states)


def _ser_type(ty: Type) -> str:
    return render_type(ty)


def _ser_term(t: Term, umap: dict[str, str], lv: Callable[[str], str]):
    match t:
        case Const(name):
            return ("c", name)
        case Eigen(name):
            return ("u", umap[name]) if name in umap else ("e", name)
        case LogicVar(name):
            return ("v", lv(name))
        case Bound(i):
            return ("b", i)
        case App(fn, arg):
            return ("a", _ser_term(fn, umap, lv), _ser_term(arg, umap, lv))
        case Lam(ty, body, _):
            return ("l", _ser_type(ty), _ser_term(body, umap, lv))
    raise AssertionError(f"unreachable: {t!r}")


def _ser_conjunct(c: Conjunct, lv: Callable[[str], str]):
    umap = {name: f"y{i}" for i, (name, _) in enumerate(c.universals)}
    tys = tuple(_ser_type(ty) for _, ty in c.universals)
    guards = tuple(
        (_ser_term(g.lhs, umap, lv), _ser_term(g.rhs, umap, lv), _ser_type(g.ty))
        for g in c.guards
    )
    match c.target:
        case TEq(l, r, ty):
            tgt = ("eq", _ser_term(l, umap, lv), _ser_term(r, umap, lv), _ser_type(ty))
        case TAtom(pred, args):
            tgt = ("atom", pred, tuple(_ser_term(a, umap, lv) for a in args))
        case TFalse():
            tgt = ("false",)
    return (tys, guards, tgt)


def canonical_key(state: State):
    """A hashable key, stable under renaming of bound variables.

    Conjunct order and the order in which existentials happen to be
    numbered do not affect the key.  Two states with equal keys are the
    same formula up to renaming; unequal keys may still be logically
    equivalent, which is fine for deduplication.
    """
    keyed = sorted(_ser_conjunct(c, lambda n: n) for c in state.conjuncts)
    emap: dict[str, str] = {}

    def walk(obj) -> None:
        if isinstance(obj, tuple):
            if len(obj) == 2 and obj[0] == "v" and isinstance(obj[1], str):
                emap.setdefault(obj[1], f"h{len(emap)}")
            else:
                for x in obj:
                    walk(x)

    for k in keyed:
        walk(k)

    final = sorted(_ser_conjunct(c, lambda n: emap.get(n, n)) for c in state.conjuncts)
    etypes = {name: _ser_type(ty) for name, ty in state.existentials}
    prefix = tuple(sorted((emap.get(n, n), etypes[n]) for n in etypes))
    return (prefix, tuple(final))


def state_alpha_eq(a: State, b: State) -> bool:
    return canonical_key(a) == canonical_key(b)


# ---------------------------------------------------------------------------
# Rendering


def conjunct_goal(c: Conjunct) -> Goal:
    g: Goal
    match c.target:
        case TEq(l, r, ty):
            g = GEq(l, r, ty)
        case TAtom(pred, args):
            g = GAtom(pred, args)
        case TFalse():
            g = GFalse()
    for guard in reversed(c.guards):
        g = GGuard(guard.lhs, guard.rhs, guard.ty, g)
    for name, ty in reversed(c.universals):
        g = GForall(name, ty, g)
    return g


def render_state(state: State) -> str:
    prefix = " ".join(name for name, _ in state.existentials)
    if prefix:
        prefix = f"sigma {prefix} . "
    else:
        prefix = "sigma . "
    if not state.conjuncts:
        return prefix + "tt"
    parts = [f"({render_goal(conjunct_goal(c))})" for c in state.conjuncts]
    return prefix + " , ".join(parts)
