"""Simply typed lambda terms, signatures and substitutions.

Terms are kept in beta-normal form throughout; eta is handled lazily by
``term_eq`` instead of storing eta-long forms.  Lambda binders use de
Bruijn indices (``Bound``), so alpha-equivalence is plain structural
equality; the ``hint`` field on ``Lam`` only influences printing.

Named leaves come in three flavours that the solver treats differently:
``Const`` (signature constants), ``Eigen`` (universally scoped
parameters: signature eigenvariables and the per-conjunct universals of
state formulas) and ``LogicVar`` (existentially scoped unknowns that
substitutions may instantiate).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


class SlimError(Exception):
    """Base class for all errors raised by this package."""


class UnknownNameError(SlimError):
    pass


class TypeCheckError(SlimError):
    pass


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class Prim:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Arrow:
    dom: "Type"
    cod: "Type"

    def __repr__(self) -> str:
        d = f"({self.dom!r})" if isinstance(self.dom, Arrow) else repr(self.dom)
        return f"{d} -> {self.cod!r}"


Type = Union[Prim, Arrow]

FORMULA = Prim("o")


def order(ty: Type) -> int:
    """Order of a type: 0 for primitives, else max(order(dom)+1, order(cod))."""
    if isinstance(ty, Prim):
        return 0
    return max(order(ty.dom) + 1, order(ty.cod))


def split_type(ty: Type) -> tuple[list[Type], Prim]:
    """Split ``s1 -> ... -> sn -> p`` into ([s1..sn], p)."""
    args: list[Type] = []
    while isinstance(ty, Arrow):
        args.append(ty.dom)
        ty = ty.cod
    return args, ty


def arrow(args: list[Type], target: Type) -> Type:
    ty = target
    for a in reversed(args):
        ty = Arrow(a, ty)
    return ty


def mentions_formula_type(ty: Type) -> bool:
    if isinstance(ty, Prim):
        return ty.name == FORMULA.name
    return mentions_formula_type(ty.dom) or mentions_formula_type(ty.cod)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Eigen:
    name: str


@dataclass(frozen=True)
class LogicVar:
    name: str


@dataclass(frozen=True)
class Bound:
    index: int


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Lam:
    ty: Type
    body: "Term"
    hint: str = field(default="w", compare=False)


Term = Union[Const, Eigen, LogicVar, Bound, App, Lam]


def make_app(head: Term, args: list[Term]) -> Term:
    t = head
    for a in args:
        t = App(t, a)
    return t


def strip_app(t: Term) -> tuple[Term, list[Term]]:
    """Decompose an application spine into (head, [args])."""
    args: list[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def head_of(t: Term) -> Term:
    while isinstance(t, App):
        t = t.fn
    return t


def is_flexible(t: Term) -> bool:
    """A term whose application spine is headed by a logic variable."""
    return isinstance(head_of(t), LogicVar)


# ---------------------------------------------------------------------------
# Signature


class Signature:
    """Declared primitive types, constants and eigenvariables.

    Eigenvariables always have primitive types; constants may have any
    type, including higher-order ones like ``(tm -> fm) -> fm``.
    """

    def __init__(self) -> None:
        self.prims: dict[str, Prim] = {FORMULA.name: FORMULA}
        self.consts: dict[str, Type] = {}
        self.eigens: dict[str, Prim] = {}

    def declare_prim(self, name: str) -> Prim:
        if name in self.consts or name in self.eigens:
            raise SlimError(f"name already declared: {name}")
        p = self.prims.get(name)
        if p is None:
            p = Prim(name)
            self.prims[name] = p
        return p

    def declare_const(self, name: str, ty: Type) -> None:
        if name in self.consts or name in self.eigens or name in self.prims:
            raise SlimError(f"name already declared: {name}")
        self.consts[name] = ty

    def declare_eigen(self, name: str, ty: Prim) -> None:
        if name in self.consts or name in self.eigens or name in self.prims:
            raise SlimError(f"name already declared: {name}")
        if not isinstance(ty, Prim):
            raise SlimError(f"eigenvariable {name} must have a primitive type")
        self.eigens[name] = ty

    def const_type(self, name: str) -> Type:
        try:
            return self.consts[name]
        except KeyError:
            raise UnknownNameError(f"undeclared constant: {name}") from None

    def copy(self) -> "Signature":
        dup = Signature()
        dup.prims = dict(self.prims)
        dup.consts = dict(self.consts)
        dup.eigens = dict(self.eigens)
        return dup


def typeof(
    sig: Signature,
    lv_types: dict[str, Type],
    t: Term,
    bound: tuple[Type, ...] = (),
) -> Type:
    """Type of ``t`` under the signature and a typing of its logic variables.

    ``lv_types`` also supplies types for eigenvariables that are not in
    the signature (the per-conjunct universals of state formulas).
    """
    match t:
        case Const(name):
            return sig.const_type(name)
        case Eigen(name):
            if name in sig.eigens:
                return sig.eigens[name]
            if name in lv_types:
                return lv_types[name]
            raise UnknownNameError(f"undeclared eigenvariable: {name}")
        case LogicVar(name):
            if name in lv_types:
                return lv_types[name]
            raise UnknownNameError(f"untyped logic variable: {name}")
        case Bound(i):
            if i >= len(bound):
                raise TypeCheckError(f"loose bound index {i}")
            return bound[i]
        case App(fn, arg):
            fty = typeof(sig, lv_types, fn, bound)
            if not isinstance(fty, Arrow):
                raise TypeCheckError(f"term of type {fty!r} applied to an argument")
            aty = typeof(sig, lv_types, arg, bound)
            if aty != fty.dom:
                raise TypeCheckError(
                    f"argument type {aty!r} does not match expected {fty.dom!r}"
                )
            return fty.cod
        case Lam(ty, body, _):
            return Arrow(ty, typeof(sig, lv_types, body, (ty,) + bound))
    raise TypeCheckError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Beta normalization

def shift(t: Term, d: int, cutoff: int = 0) -> Term:
    if d == 0:
        return t
    match t:
        case Bound(i):
            return Bound(i + d) if i >= cutoff else t
        case App(fn, arg):
            return App(shift(fn, d, cutoff), shift(arg, d, cutoff))
        case Lam(ty, body, hint):
            return Lam(ty, shift(body, d, cutoff + 1), hint)
        case _:
            return t


def _bsubst(t: Term, j: int, s: Term) -> Term:
    """Substitute ``s`` for index ``j`` in ``t`` (indices above j drop by one)."""
    match t:
        case Bound(i):
            if i == j:
                return shift(s, j)
            return Bound(i - 1) if i > j else t
        case App(fn, arg):
            return App(_bsubst(fn, j, s), _bsubst(arg, j, s))
        case Lam(ty, body, hint):
            return Lam(ty, _bsubst(body, j + 1, s), hint)
        case _:
            return t


def beta_normalize(t: Term) -> Term:
    """Beta-normal form; total because terms are simply typed."""
    match t:
        case App(fn, arg):
            fn = beta_normalize(fn)
            arg = beta_normalize(arg)
            if isinstance(fn, Lam):
                return beta_normalize(_bsubst(fn.body, 0, arg))
            return App(fn, arg)
        case Lam(ty, body, hint):
            return Lam(ty, beta_normalize(body), hint)
        case _:
            return t


def is_beta_normal(t: Term) -> bool:
    match t:
        case App(fn, arg):
            return not isinstance(fn, Lam) and is_beta_normal(fn) and is_beta_normal(arg)
        case Lam(_, body, _):
            return is_beta_normal(body)
        case _:
            return True


# ---------------------------------------------------------------------------
# Alpha-beta-eta equality

def term_eq(a: Term, b: Term) -> bool:
    """Equality of beta-normal terms modulo alpha and eta."""
    if a == b:
        return True
    match a, b:
        case Lam(ty1, b1, _), Lam(ty2, b2, _):
            return ty1 == ty2 and term_eq(b1, b2)
        case Lam(_, b1, _), _:
            return term_eq(b1, App(shift(b, 1), Bound(0)))
        case _, Lam(_, b2, _):
            return term_eq(App(shift(a, 1), Bound(0)), b2)
        case App(f1, a1), App(f2, a2):
            return term_eq(f1, f2) and term_eq(a1, a2)
        case _:
            return False


# ---------------------------------------------------------------------------
# Free names and named-leaf substitution

def free_names(t: Term) -> Iterator[tuple[str, str]]:
    """Yield (kind, name) for every named leaf occurrence; kinds 'c'/'e'/'v'."""
    match t:
        case Const(name):
            yield ("c", name)
        case Eigen(name):
            yield ("e", name)
        case LogicVar(name):
            yield ("v", name)
        case App(fn, arg):
            yield from free_names(fn)
            yield from free_names(arg)
        case Lam(_, body, _):
            yield from free_names(body)


def free_logic_vars(t: Term) -> set[str]:
    return {n for k, n in free_names(t) if k == "v"}


def free_eigens(t: Term) -> set[str]:
    return {n for k, n in free_names(t) if k == "e"}


def subst_eigens(t: Term, mapping: dict[str, Term]) -> Term:
    """Replace eigenvariables by terms.  Ranges must not contain loose
    bound indices, so no shifting is needed under binders."""
    match t:
        case Eigen(name) if name in mapping:
            return mapping[name]
        case App(fn, arg):
            return App(subst_eigens(fn, mapping), subst_eigens(arg, mapping))
        case Lam(ty, body, hint):
            return Lam(ty, subst_eigens(body, mapping), hint)
        case _:
            return t


# ---------------------------------------------------------------------------
# Substitutions


@dataclass(frozen=True)
class Substitution:
    """An idempotent mapping from logic variable names to beta-normal terms."""

    bindings: dict[str, Term] = field(default_factory=dict)
    types: dict[str, Type] = field(default_factory=dict)

    @staticmethod
    def identity() -> "Substitution":
        return Substitution({}, {})

    @staticmethod
    def of(bindings: dict[str, Term], types: dict[str, Type]) -> "Substitution":
        return Substitution(dict(bindings), dict(types))

    def is_identity(self) -> bool:
        return not self.bindings

    def lookup(self, name: str) -> Optional[Term]:
        return self.bindings.get(name)

    def apply(self, t: Term) -> Term:
        return apply_subst(self, t)

    def restrict(self, names: set[str]) -> "Substitution":
        return Substitution(
            {n: t for n, t in self.bindings.items() if n in names},
            {n: ty for n, ty in self.types.items() if n in names},
        )

    def domain(self) -> set[str]:
        return set(self.bindings)


def _replace_lvs(t: Term, bindings: dict[str, Term]) -> Term:
    match t:
        case LogicVar(name) if name in bindings:
            return bindings[name]
        case App(fn, arg):
            return App(_replace_lvs(fn, bindings), _replace_lvs(arg, bindings))
        case Lam(ty, body, hint):
            return Lam(ty, _replace_lvs(body, bindings), hint)
        case _:
            return t


def apply_subst(subst: Substitution, t: Term) -> Term:
    """Instantiate logic variables and renormalize.

    Binding ranges never contain loose de Bruijn indices, so replacing a
    leaf under a binder cannot capture; beta-normalizing afterwards
    restores the representation invariant.
    """
    if not subst.bindings:
        return t
    return beta_normalize(_replace_lvs(t, subst.bindings))


def compose(rho: Substitution, theta: Substitution) -> Substitution:
    """Composition with ``apply(compose(rho, theta), t) = apply(theta, apply(rho, t))``."""
    bindings: dict[str, Term] = {}
    types: dict[str, Type] = {}
    for name, t in rho.bindings.items():
        bindings[name] = apply_subst(theta, t)
        types[name] = rho.types.get(name, theta.types.get(name))  # type: ignore[arg-type]
    for name, t in theta.bindings.items():
        if name not in rho.bindings:
            bindings[name] = t
            if name in theta.types:
                types[name] = theta.types[name]
    return Substitution(bindings, types)


def has_loose_bounds(t: Term, depth: int = 0) -> bool:
    """Does ``t`` reference a lambda binder outside itself?"""
    match t:
        case Bound(i):
            return i >= depth
        case App(fn, arg):
            return has_loose_bounds(fn, depth) or has_loose_bounds(arg, depth)
        case Lam(_, body, _):
            return has_loose_bounds(body, depth + 1)
        case _:
            return False


# ---------------------------------------------------------------------------
# Rigid subterms

def _immediate_rigid_subterms(t: Term) -> Iterator[Term]:
    """Positions that survive any instantiation of logic variables:
    arguments of a constant- or bound-variable-headed spine, and lambda
    bodies.  Arguments under a flexible head do not count, substitution
    for the head can erase them."""
    if isinstance(t, Lam):
        yield t.body
        return
    head, args = strip_app(t)
    if isinstance(head, (Const, Bound)) and args:
        yield from args


def rigid_subterm(t: Term, s: Term) -> bool:
    """True when ``s`` sits strictly below ``t`` along rigid positions
    (the transitive closure of one immediate step).  ``s`` must not
    contain loose bound indices."""
    for arg in _immediate_rigid_subterms(t):
        if term_eq(arg, s) or rigid_subterm(arg, s):
            return True
    return False


def occurs_rigidly(name: str, t: Term) -> bool:
    """Does logic variable ``name`` head a rigid subterm of ``t``?"""
    for arg in _immediate_rigid_subterms(t):
        h = head_of(arg)
        if isinstance(h, LogicVar) and h.name == name:
            return True
        if occurs_rigidly(name, arg):
            return True
    return False


# ---------------------------------------------------------------------------
# Fresh names


class FreshNames:
    """Monotone fresh-name supply for one solver run."""

    def __init__(self, reserved: Optional[set[str]] = None) -> None:
        self._counter = 0
        self._used: set[str] = set(reserved or ())

    def reserve(self, name: str) -> None:
        self._used.add(name)

    def fresh(self, base: str) -> str:
        base = base.rstrip("0123456789") or "x"
        while True:
            self._counter += 1
            name = f"{base}{self._counter}"
            if name not in self._used:
                self._used.add(name)
                return name
