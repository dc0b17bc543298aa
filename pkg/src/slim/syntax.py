"""Concrete syntax: lexer, parser, type inference and printers.

The surface language is a small lambda-Prolog dialect:

* ``kind nat type.`` declares primitive types, ``type s nat -> nat.``
  declares constants.  ``o`` and ``oo`` both name the formula type.
* Clauses are ``head.`` or ``head :- body.``; capitalized identifiers
  (and ``_``) are implicitly universally quantified clause variables.
* Goals use ``,`` for conjunction, ``t = s`` for equality,
  ``t = s => G`` for guarded goals, ``pi x\\ G`` and ``sigma x\\ G`` for
  quantifiers, ``tt``/``ff`` for the units.  ``=`` binds tighter than
  ``=>``, which binds tighter than ``,``; binder bodies extend as far
  right as possible; ``::`` is right-associative and tighter than ``=``.
* ``goal name G.`` attaches a named goal to a source file.

Binder types are inferred.  A binder whose type is unconstrained
defaults to the first declared primitive type other than ``o``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .formulas import (
    DefiniteClause,
    GAnd,
    GAtom,
    GEq,
    GFalse,
    GForall,
    GGuard,
    GExists,
    GTrue,
    Goal,
    Program,
    subst_goal_eigens,
    subst_goal_lvs,
)
from .terms import (
    App,
    Arrow,
    Bound,
    Const,
    Eigen,
    FORMULA,
    Lam,
    LogicVar,
    Prim,
    Signature,
    SlimError,
    Substitution,
    Term,
    Type,
    apply_subst,
    beta_normalize,
    order,
    split_type,
    strip_app,
    mentions_formula_type,
)


class ParseError(SlimError):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class UndeclaredConstantError(ParseError):
    pass


class ReservedNameError(ParseError):
    pass


class OpenGoalError(ParseError):
    """A goal mentioned a free (capitalized) variable; goals must be closed."""


RESERVED = {"pi", "sigma", "tt", "ff", "o", "oo", "type", "kind", "goal"}
BINDER_RESERVED = {"pi", "sigma", "tt", "ff"}


# ---------------------------------------------------------------------------
# Lexer


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' or the symbol itself
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>%[^\n]*)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
      | (?P<sym>:-|=>|::|:=|->|[()\\.,=])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        lexeme = m.group(0)
        if m.lastgroup == "ident":
            tokens.append(Token("ident", lexeme, line, col))
        elif m.lastgroup == "sym":
            tokens.append(Token(lexeme, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Raw syntax trees (name resolution and typing happen afterwards)


@dataclass(frozen=True)
class RId:
    name: str
    line: int
    col: int


@dataclass(frozen=True)
class RApp:
    fn: "RTerm"
    arg: "RTerm"


@dataclass(frozen=True)
class RLam:
    name: str
    body: "RTerm"
    line: int
    col: int


@dataclass(frozen=True)
class RCons:
    head: "RTerm"
    tail: "RTerm"
    line: int
    col: int


RTerm = Union[RId, RApp, RLam, RCons]


@dataclass(frozen=True)
class RTrue:
    pass


@dataclass(frozen=True)
class RFalse:
    pass


@dataclass(frozen=True)
class RTermGoal:
    term: RTerm


@dataclass(frozen=True)
class REq:
    lhs: RTerm
    rhs: RTerm
    line: int
    col: int


@dataclass(frozen=True)
class RConj:
    left: "RGoal"
    right: "RGoal"


@dataclass(frozen=True)
class RImpl:
    guard: REq
    body: "RGoal"


@dataclass(frozen=True)
class RBinder:
    quant: str  # 'pi' or 'sigma'
    name: str
    body: "RGoal"
    line: int
    col: int


RGoal = Union[RTrue, RFalse, RTermGoal, REq, RConj, RImpl, RBinder]


class _RawParser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return self.next()

    def at_end(self) -> bool:
        return self.peek().kind == "eof"

    # -- types --------------------------------------------------------------

    def parse_type(self, sig: Signature) -> Type:
        left = self.parse_type_atom(sig)
        if self.peek().kind == "->":
            self.next()
            return Arrow(left, self.parse_type(sig))
        return left

    def parse_type_atom(self, sig: Signature) -> Type:
        tok = self.peek()
        if tok.kind == "(":
            self.next()
            ty = self.parse_type(sig)
            self.expect(")")
            return ty
        if tok.kind != "ident":
            raise ParseError(f"expected a type, found {tok.text!r}", tok.line, tok.col)
        self.next()
        if tok.text in ("o", "oo"):
            return FORMULA
        prim = sig.prims.get(tok.text)
        if prim is None:
            raise UndeclaredConstantError(f"undeclared primitive type: {tok.text}", tok.line, tok.col)
        return prim

    # -- terms --------------------------------------------------------------

    _TERM_START = ("ident", "(")

    def parse_term(self) -> RTerm:
        tok = self.peek()
        if tok.kind == "ident" and self.peek(1).kind == "\\":
            self.next()
            self.next()
            return RLam(tok.text, self.parse_term(), tok.line, tok.col)
        return self.parse_cons()

    def parse_cons(self) -> RTerm:
        left = self.parse_app()
        tok = self.peek()
        if tok.kind == "::":
            self.next()
            return RCons(left, self.parse_cons(), tok.line, tok.col)
        return left

    def parse_app(self) -> RTerm:
        t = self.parse_term_atom()
        while self.peek().kind in self._TERM_START:
            if self.peek().kind == "ident" and self.peek(1).kind == "\\":
                tok = self.next()
                self.next()
                t = RApp(t, RLam(tok.text, self.parse_term(), tok.line, tok.col))
                break
            t = RApp(t, self.parse_term_atom())
        return t

    def parse_term_atom(self) -> RTerm:
        tok = self.peek()
        if tok.kind == "ident":
            self.next()
            return RId(tok.text, tok.line, tok.col)
        if tok.kind == "(":
            self.next()
            t = self.parse_term()
            self.expect(")")
            return t
        raise ParseError(f"expected a term, found {tok.text or 'end of input'!r}", tok.line, tok.col)

    # -- goals ----------------------------------------------------------------

    def parse_goal(self) -> RGoal:
        left = self.parse_guarded()
        if self.peek().kind == ",":
            self.next()
            return RConj(left, self.parse_goal())
        return left

    def parse_guarded(self) -> RGoal:
        tok = self.peek()
        if tok.kind == "ident" and tok.text in ("pi", "sigma"):
            self.next()
            name = self.expect("ident")
            if name.text in BINDER_RESERVED:
                raise ReservedNameError(f"reserved name cannot be bound: {name.text}", name.line, name.col)
            self.expect("\\")
            return RBinder(tok.text, name.text, self.parse_goal(), name.line, name.col)
        left = self.parse_primary()
        tok = self.peek()
        if tok.kind == "=>":
            if not isinstance(left, REq):
                raise ParseError("the antecedent of => must be an equality", tok.line, tok.col)
            self.next()
            return RImpl(left, self.parse_guarded())
        return left

    def parse_primary(self) -> RGoal:
        tok = self.peek()
        if tok.kind == "ident" and tok.text == "tt":
            self.next()
            return RTrue()
        if tok.kind == "ident" and tok.text == "ff":
            self.next()
            return RFalse()
        if tok.kind == "(":
            # A parenthesis here may open a goal or just group a term.
            self.next()
            inner = self.parse_goal()
            self.expect(")")
            if isinstance(inner, RTermGoal) and self.peek().kind in ("ident", "(", "::", "="):
                return self.continue_term_goal(inner.term)
            return inner
        return self.continue_term_goal(None)

    def continue_term_goal(self, head: Optional[RTerm]) -> RGoal:
        if head is None:
            lhs = self.parse_term()
        else:
            t = head
            while self.peek().kind in self._TERM_START:
                t = RApp(t, self.parse_term_atom())
            if self.peek().kind == "::":
                tok = self.next()
                t = RCons(t, self.parse_cons(), tok.line, tok.col)
            lhs = t
        tok = self.peek()
        if tok.kind == "=":
            self.next()
            return REq(lhs, self.parse_term(), tok.line, tok.col)
        return RTermGoal(lhs)


# ---------------------------------------------------------------------------
# Type inference


class TMeta:
    _count = 0

    __slots__ = ("id", "ref")

    def __init__(self) -> None:
        TMeta._count += 1
        self.id = TMeta._count
        self.ref: Optional[object] = None


InfType = Union[Prim, Arrow, TMeta]


def _resolve(ty: InfType) -> InfType:
    while isinstance(ty, TMeta) and ty.ref is not None:
        ty = ty.ref  # type: ignore[assignment]
    return ty


def _occurs(m: TMeta, ty: InfType) -> bool:
    ty = _resolve(ty)
    if ty is m:
        return True
    if isinstance(ty, Arrow):
        return _occurs(m, ty.dom) or _occurs(m, ty.cod)
    return False


def _unify_types(a: InfType, b: InfType, where: str, line: int, col: int) -> None:
    a, b = _resolve(a), _resolve(b)
    if a is b:
        return
    if isinstance(a, TMeta):
        if _occurs(a, b):
            raise ParseError(f"{where}: circular type constraint", line, col)
        a.ref = b
        return
    if isinstance(b, TMeta):
        _unify_types(b, a, where, line, col)
        return
    if isinstance(a, Prim) and isinstance(b, Prim) and a.name == b.name:
        return
    if isinstance(a, Arrow) and isinstance(b, Arrow):
        _unify_types(a.dom, b.dom, where, line, col)
        _unify_types(a.cod, b.cod, where, line, col)
        return
    raise ParseError(f"{where}: type mismatch ({_render_inf(a)} vs {_render_inf(b)})", line, col)


def _render_inf(ty: InfType) -> str:
    ty = _resolve(ty)
    if isinstance(ty, TMeta):
        return f"?{ty.id}"
    return render_type(_shallow_zonk(ty))


def _shallow_zonk(ty: InfType) -> Type:
    ty = _resolve(ty)
    if isinstance(ty, TMeta):
        return Prim("_")
    if isinstance(ty, Arrow):
        return Arrow(_shallow_zonk(ty.dom), _shallow_zonk(ty.cod))
    return ty


class _Elaborator:
    """Resolve names, infer binder types and build the checked syntax tree.

    Elaboration runs in two phases.  The first phase resolves names and
    collects type constraints; the tree it builds may still carry type
    metavariables.  Once the whole clause or goal has been constrained,
    ``finish_goal`` replaces metavariables (defaulting the unconstrained
    ones) and runs the checks that need concrete types.
    """

    def __init__(self, sig: Signature, clause_mode: bool, used_names: set[str]) -> None:
        self.sig = sig
        self.clause_mode = clause_mode
        self.clause_vars: dict[str, InfType] = {}
        self.clause_var_order: list[str] = []
        self.used_names = used_names
        self._anon = 0
        self.positions: dict[int, tuple[int, int]] = {}
        self.default_prim: Optional[Prim] = next(
            (p for n, p in sig.prims.items() if n != "o"), None
        )

    def pos_of(self, node: object) -> tuple[int, int]:
        return self.positions.get(id(node), (1, 1))

    # name introduction ------------------------------------------------------

    def fresh_variant(self, base: str) -> str:
        if base not in self.used_names:
            self.used_names.add(base)
            return base
        n = 1
        while f"{base}{n}" in self.used_names:
            n += 1
        name = f"{base}{n}"
        self.used_names.add(name)
        return name

    def anon_var(self) -> str:
        self._anon += 1
        return self.fresh_variant(f"_{self._anon}")

    # terms -------------------------------------------------------------------

    def elab_term(
        self,
        raw: RTerm,
        env: dict[str, tuple[str, InfType]],
        lams: list[tuple[str, InfType]],
    ) -> tuple[Term, InfType]:
        match raw:
            case RId(name, line, col):
                for depth, (lname, lty) in enumerate(reversed(lams)):
                    if lname == name:
                        return Bound(depth), lty
                if name in env:
                    kind, ty = env[name]
                    leaf = Eigen(name) if kind == "eigen" else LogicVar(name)
                    return leaf, ty
                if name == "_" or name[0].isupper() or name.startswith("_"):
                    if not self.clause_mode:
                        raise OpenGoalError(
                            f"goals must be closed; free variable: {name}", line, col
                        )
                    if name == "_":
                        name = self.anon_var()
                    if name not in self.clause_vars:
                        self.clause_vars[name] = TMeta()
                        self.clause_var_order.append(name)
                    return LogicVar(name), self.clause_vars[name]
                if name in self.sig.consts:
                    return Const(name), self.sig.const_type(name)
                if name in self.sig.eigens:
                    return Eigen(name), self.sig.eigens[name]
                raise UndeclaredConstantError(f"undeclared constant: {name}", line, col)
            case RApp(fn, arg):
                f, fty = self.elab_term(fn, env, lams)
                a, aty = self.elab_term(arg, env, lams)
                res = TMeta()
                line, col = _raw_pos(arg)
                _unify_types(fty, Arrow(aty, res), "application", line, col)
                return App(f, a), res
            case RLam(name, body, line, col):
                if name in BINDER_RESERVED:
                    raise ReservedNameError(f"reserved name cannot be bound: {name}", line, col)
                ty = TMeta()
                b, bty = self.elab_term(body, env, lams + [(name, ty)])
                return Lam(ty, b, name), Arrow(ty, bty)  # type: ignore[arg-type]
            case RCons(head, tail, line, col):
                if "::" not in self.sig.consts:
                    raise UndeclaredConstantError("undeclared constant: ::", line, col)
                h, hty = self.elab_term(head, env, lams)
                t, tty = self.elab_term(tail, env, lams)
                res = TMeta()
                _unify_types(
                    self.sig.const_type("::"), Arrow(hty, Arrow(tty, res)), "::", line, col
                )
                return App(App(Const("::"), h), t), res
        raise AssertionError(f"unreachable: {raw!r}")

    # goals ---------------------------------------------------------------------

    def elab_goal(self, raw: RGoal, env: dict[str, tuple[str, InfType]]) -> Goal:
        match raw:
            case RTrue():
                return GTrue()
            case RFalse():
                return GFalse()
            case RConj(left, right):
                return GAnd(self.elab_goal(left, env), self.elab_goal(right, env))
            case RImpl(guard, body):
                l, r, ty = self.elab_eq(guard, env)
                g = GGuard(l, r, ty, self.elab_goal(body, env))  # type: ignore[arg-type]
                self.positions[id(g)] = (guard.line, guard.col)
                return g
            case REq():
                l, r, ty = self.elab_eq(raw, env)
                g = GEq(l, r, ty)  # type: ignore[arg-type]
                self.positions[id(g)] = (raw.line, raw.col)
                return g
            case RBinder(quant, name, body, line, col):
                unique = self.fresh_variant(name)
                ty = TMeta()
                kind = "eigen" if quant == "pi" else "lv"
                inner = dict(env)
                inner[name] = (kind, ty)
                g = self.elab_goal(body, inner)
                if unique != name:
                    g = _rename_leaf(g, kind, name, unique)
                node_cls = GForall if quant == "pi" else GExists
                node = node_cls(unique, ty, g)  # type: ignore[arg-type]
                self.positions[id(node)] = (line, col)
                return node
            case RTermGoal(term):
                t, ty = self.elab_term(term, env, [])
                line, col = _raw_pos(term)
                _unify_types(ty, FORMULA, "atom", line, col)
                head, args = strip_app(t)
                if not isinstance(head, Const):
                    raise ParseError("an atomic goal must be headed by a declared predicate", line, col)
                _, target = split_type(self.sig.const_type(head.name))
                if target.name != "o":
                    raise ParseError(
                        f"{head.name} does not target the formula type", line, col
                    )
                node = GAtom(head.name, tuple(args))
                self.positions[id(node)] = (line, col)
                return node
        raise AssertionError(f"unreachable: {raw!r}")

    def elab_eq(
        self, raw: REq, env: dict[str, tuple[str, InfType]]
    ) -> tuple[Term, Term, InfType]:
        l, lty = self.elab_term(raw.lhs, env, [])
        r, rty = self.elab_term(raw.rhs, env, [])
        _unify_types(lty, rty, "equality", raw.line, raw.col)
        return l, r, lty

    def finish_goal(self, g: Goal) -> Goal:
        """Default leftover metavariables, then check and rebuild the goal."""
        line, col = self.pos_of(g)
        match g:
            case GTrue() | GFalse():
                return g
            case GAnd(left, right):
                return GAnd(self.finish_goal(left), self.finish_goal(right))
            case GAtom(pred, args):
                return GAtom(pred, tuple(self.zonk_term(a, line, col) for a in args))
            case GEq(l, r, ty):
                fin = self.finalize_type(ty, line, col, "equality")
                self._check_eq_ty(fin, line, col)
                return GEq(self.zonk_term(l, line, col), self.zonk_term(r, line, col), fin)
            case GGuard(l, r, ty, body):
                fin = self.finalize_type(ty, line, col, "equality")
                self._check_eq_ty(fin, line, col)
                return GGuard(
                    self.zonk_term(l, line, col),
                    self.zonk_term(r, line, col),
                    fin,
                    self.finish_goal(body),
                )
            case GForall(name, ty, body):
                fin = self.finalize_type(ty, line, col, f"binder {name}")
                if not isinstance(fin, Prim) or fin.name == "o":
                    raise ParseError(
                        f"pi binds only primitive non-formula types; {name} has type {render_type(fin)}",
                        line,
                        col,
                    )
                return GForall(name, fin, self.finish_goal(body))
            case GExists(name, ty, body):
                fin = self.finalize_type(ty, line, col, f"binder {name}")
                if order(fin) > 1 or mentions_formula_type(fin):
                    raise ParseError(
                        f"sigma binds types of order <= 1 without o; {name} has type {render_type(fin)}",
                        line,
                        col,
                    )
                return GExists(name, fin, self.finish_goal(body))
        raise AssertionError(f"unreachable: {g!r}")

    def _check_eq_ty(self, ty: Type, line: int, col: int) -> None:
        if mentions_formula_type(ty):
            raise ParseError(
                f"equality at type {render_type(ty)} mentions the formula type",
                line,
                col,
            )

    # finishing -----------------------------------------------------------------

    def finalize_type(self, ty: InfType, line: int, col: int, what: str) -> Type:
        ty = _resolve(ty)
        if isinstance(ty, TMeta):
            if self.default_prim is None:
                raise ParseError(
                    f"cannot infer a type for {what} and no primitive type is declared",
                    line,
                    col,
                )
            ty.ref = self.default_prim
            return self.default_prim
        if isinstance(ty, Arrow):
            return Arrow(
                self.finalize_type(ty.dom, line, col, what),
                self.finalize_type(ty.cod, line, col, what),
            )
        return ty

    def zonk_term(self, t: Term, line: int, col: int) -> Term:
        match t:
            case App(fn, arg):
                return App(self.zonk_term(fn, line, col), self.zonk_term(arg, line, col))
            case Lam(ty, body, hint):
                return Lam(
                    self.finalize_type(ty, line, col, f"binder {hint}"),
                    self.zonk_term(body, line, col),
                    hint,
                )
            case _:
                return t


def _raw_pos(raw: RTerm) -> tuple[int, int]:
    match raw:
        case RId(_, line, col) | RLam(_, _, line, col) | RCons(_, _, line, col):
            return line, col
        case RApp(fn, _):
            return _raw_pos(fn)
    return 0, 0


def _rename_leaf(g: Goal, kind: str, old: str, new: str) -> Goal:
    if kind == "eigen":
        return subst_goal_eigens(g, {old: Eigen(new)})
    return subst_goal_lvs(g, {old: LogicVar(new)})


# ---------------------------------------------------------------------------
# Source files


@dataclass(frozen=True)
class KindDecl:
    names: tuple[str, ...]
    line: int


@dataclass(frozen=True)
class TypeDecl:
    names: tuple[str, ...]
    ty: Type
    line: int


@dataclass
class SourceFile:
    signature: Signature
    items: list[object] = field(default_factory=list)
    clauses: list[DefiniteClause] = field(default_factory=list)
    named_goals: dict[str, Goal] = field(default_factory=dict)

    def program(self) -> Program:
        return Program(self.signature, list(self.clauses), dict(self.named_goals))


def _decl_names(p: _RawParser) -> list[Token]:
    names = []
    while True:
        tok = p.peek()
        if tok.kind in ("ident", "::"):
            names.append(p.next())
        else:
            raise ParseError(f"expected a name, found {tok.text!r}", tok.line, tok.col)
        if p.peek().kind == ",":
            p.next()
            continue
        return names


def parse_file(text: str) -> SourceFile:
    """Parse a program file: declarations, clauses and named goals."""
    p = _RawParser(tokenize(text))
    sf = SourceFile(Signature())
    sig = sf.signature
    while not p.at_end():
        tok = p.peek()
        if tok.kind == "ident" and tok.text == "kind":
            p.next()
            names = _decl_names(p)
            kw = p.expect("ident")
            if kw.text != "type":
                raise ParseError(f"expected 'type', found {kw.text!r}", kw.line, kw.col)
            p.expect(".")
            for n in names:
                if n.text in RESERVED:
                    raise ReservedNameError(f"reserved name: {n.text}", n.line, n.col)
                sig.declare_prim(n.text)
            sf.items.append(KindDecl(tuple(n.text for n in names), tok.line))
        elif tok.kind == "ident" and tok.text == "type":
            p.next()
            names = _decl_names(p)
            ty = p.parse_type(sig)
            p.expect(".")
            args, target = split_type(ty)
            if any(mentions_formula_type(a) for a in args):
                raise ParseError(
                    "argument types may not mention the formula type", tok.line, tok.col
                )
            for n in names:
                if n.text in RESERVED - {"tt", "ff"}:
                    raise ReservedNameError(f"reserved name: {n.text}", n.line, n.col)
                if n.text in ("tt", "ff") and target.name == "o":
                    raise ReservedNameError(
                        f"{n.text} cannot be declared as a predicate", n.line, n.col
                    )
                sig.declare_const(n.text, ty)
            sf.items.append(TypeDecl(tuple(n.text for n in names), ty, tok.line))
        elif tok.kind == "ident" and tok.text == "goal":
            p.next()
            name = p.expect("ident")
            if name.text in RESERVED:
                raise ReservedNameError(f"reserved name: {name.text}", name.line, name.col)
            raw = p.parse_goal()
            p.expect(".")
            g = _elab_closed_goal(raw, sig)
            if name.text in sf.named_goals:
                raise ParseError(f"duplicate goal name: {name.text}", name.line, name.col)
            sf.named_goals[name.text] = g
            sf.items.append(("goal", name.text))
        else:
            clause = _parse_clause(p, sig)
            sf.clauses.append(clause)
            sf.items.append(clause)
    return sf


def _parse_clause(p: _RawParser, sig: Signature) -> DefiniteClause:
    tok = p.peek()
    raw_head = p.parse_guarded()
    if not isinstance(raw_head, RTermGoal):
        raise ParseError("a clause head must be an atom", tok.line, tok.col)
    raw_body: RGoal = RTrue()
    if p.peek().kind == ":-":
        p.next()
        raw_body = p.parse_goal()
    p.expect(".")
    el = _Elaborator(sig, clause_mode=True, used_names=set(sig.consts) | set(sig.prims))
    head = el.elab_goal(raw_head, {})
    body = el.elab_goal(raw_body, {})
    head = el.finish_goal(head)
    body = el.finish_goal(body)
    assert isinstance(head, GAtom)
    universals = tuple(
        (name, el.finalize_type(el.clause_vars[name], tok.line, tok.col, name))
        for name in el.clause_var_order
    )
    for name, ty in universals:
        if order(ty) > 1 or mentions_formula_type(ty):
            raise ParseError(
                f"clause variable {name} must have order <= 1 without o, got {render_type(ty)}",
                tok.line,
                tok.col,
            )
    return DefiniteClause(universals, head, body)


def _elab_closed_goal(raw: RGoal, sig: Signature) -> Goal:
    used = set(sig.consts) | set(sig.prims) | set(sig.eigens)
    el = _Elaborator(sig, clause_mode=False, used_names=used)
    env = {name: ("eigen", ty) for name, ty in sig.eigens.items()}
    return el.finish_goal(el.elab_goal(raw, env))  # type: ignore[arg-type]


def parse_goal(text: str, sig: Signature) -> Goal:
    """Parse a closed goal against an existing signature."""
    p = _RawParser(tokenize(text))
    raw = p.parse_goal()
    if p.peek().kind == ".":
        p.next()
    if not p.at_end():
        tok = p.peek()
        raise ParseError(f"unexpected input after goal: {tok.text!r}", tok.line, tok.col)
    return _elab_closed_goal(raw, sig)


def parse_term(
    text: str,
    sig: Signature,
    scope: dict[str, Prim],
    expected: Optional[Type] = None,
    placeholders: bool = False,
) -> Term:
    """Parse a term whose free names come from ``scope`` (eigenvariables).

    With ``placeholders`` enabled, capitalized identifiers are accepted
    and elaborated as logic variables standing for arbitrary values.
    """
    p = _RawParser(tokenize(text))
    raw = p.parse_term()
    if not p.at_end():
        tok = p.peek()
        raise ParseError(f"unexpected input after term: {tok.text!r}", tok.line, tok.col)
    used = set(sig.consts) | set(sig.prims) | set(scope)
    el = _Elaborator(sig, clause_mode=placeholders, used_names=used)
    env = {name: ("eigen", ty) for name, ty in scope.items()}
    line, col = _raw_pos(raw)
    t, ty = el.elab_term(raw, env, [])  # type: ignore[arg-type]
    if expected is not None:
        _unify_types(ty, expected, "term", line, col)
    el.finalize_type(ty, line, col, "term")
    return beta_normalize(el.zonk_term(t, line, col))


def parse_substitution(
    text: str,
    sig: Signature,
    scopes: dict[str, tuple[Type, dict[str, Prim]]],
    placeholders: bool = True,
) -> tuple[Substitution, dict[str, Type]]:
    """Parse ``x := t, y := s`` where each variable has a known type and scope.

    With ``placeholders`` enabled, capitalized or underscore-led names such
    as ``_1`` or ``X`` stand for arbitrary terms (the form solver output
    takes for don't-care positions).  They come back as constants, and the
    second result maps each new constant to its type so the caller can
    declare them before running any check.  A placeholder used twice names
    the same constant both times.
    """
    used = set(sig.consts) | set(sig.prims) | set(sig.eigens)
    for _, scope in scopes.values():
        used |= set(scope)
    el = _Elaborator(sig, clause_mode=placeholders, used_names=used)
    pending: list[tuple[str, Term, InfType, Type, int, int]] = []
    seen: set[str] = set()
    p = _RawParser(tokenize(text))
    while True:
        name = p.expect("ident")
        if name.text not in scopes:
            raise ParseError(f"unknown existential variable: {name.text}", name.line, name.col)
        if name.text in seen:
            raise ParseError(f"duplicate binding for {name.text}", name.line, name.col)
        seen.add(name.text)
        p.expect(":=")
        start = p.pos
        depth = 0
        while True:
            tok = p.peek()
            if tok.kind == "eof" or (tok.kind == "," and depth == 0):
                break
            if tok.kind == "(":
                depth += 1
            elif tok.kind == ")":
                depth -= 1
            p.next()
        chunk_tokens = p.tokens[start : p.pos] + [p.tokens[-1]]
        sub = _RawParser(chunk_tokens)
        raw = sub.parse_term()
        if not sub.at_end():
            tok = sub.peek()
            raise ParseError(f"unexpected input in binding: {tok.text!r}", tok.line, tok.col)
        expected, scope = scopes[name.text]
        env = {n: ("eigen", ty) for n, ty in scope.items()}
        line, col = _raw_pos(raw)
        t, ty = el.elab_term(raw, env, [])  # type: ignore[arg-type]
        _unify_types(ty, expected, f"binding for {name.text}", line, col)
        pending.append((name.text, t, ty, expected, line, col))
        if p.peek().kind == ",":
            p.next()
            continue
        break
    if not p.at_end():
        tok = p.peek()
        raise ParseError(f"unexpected input after bindings: {tok.text!r}", tok.line, tok.col)

    # Types of placeholder variables may be constrained by any binding, so
    # settle them only after every chunk has been elaborated.
    ground: dict[str, Term] = {}
    ground_types: dict[str, Type] = {}
    new_consts: dict[str, Type] = {}
    taken = used | set(scopes)
    for v in el.clause_var_order:
        vty = el.finalize_type(el.clause_vars[v], 1, 1, v)
        cname = v
        n = 1
        while cname in taken:
            cname = f"{v}{n}"
            n += 1
        taken.add(cname)
        ground[v] = Const(cname)
        ground_types[v] = vty
        new_consts[cname] = vty
    grounding = Substitution.of(ground, ground_types)
    parts: dict[str, Term] = {}
    types: dict[str, Type] = {}
    for bname, t, ty, expected, line, col in pending:
        el.finalize_type(ty, line, col, bname)
        value = beta_normalize(el.zonk_term(t, line, col))
        parts[bname] = apply_subst(grounding, value)
        types[bname] = expected
    return Substitution.of(parts, types), new_consts


# ---------------------------------------------------------------------------
# Printers


def render_type(ty: Type) -> str:
    if isinstance(ty, Prim):
        return ty.name
    dom = render_type(ty.dom)
    if isinstance(ty.dom, Arrow):
        dom = f"({dom})"
    return f"{dom} -> {render_type(ty.cod)}"


_PREC_LAM = 0
_PREC_CONS = 1
_PREC_APP = 2
_PREC_ATOM = 3


def render_term(t: Term, bound: tuple[str, ...] = (), prec: int = _PREC_LAM) -> str:
    match t:
        case Const(name) | Eigen(name) | LogicVar(name):
            return name
        case Bound(i):
            return bound[i] if i < len(bound) else f"#{i}"
        case Lam(_, _, _):
            name = _binder_name(t, bound)
            body = render_term(t.body, (name,) + bound, _PREC_LAM)
            s = f"{name}\\ {body}"
            return f"({s})" if prec > _PREC_LAM else s
        case App(_, _):
            head, args = strip_app(t)
            if isinstance(head, Const) and head.name == "::" and len(args) == 2:
                lhs = render_term(args[0], bound, _PREC_APP)
                rhs = render_term(args[1], bound, _PREC_CONS)
                s = f"{lhs} :: {rhs}"
                return f"({s})" if prec > _PREC_CONS else s
            parts = [render_term(head, bound, _PREC_ATOM)]
            parts.extend(render_term(a, bound, _PREC_ATOM) for a in args)
            s = " ".join(parts)
            return f"({s})" if prec > _PREC_APP else s
    raise AssertionError(f"unreachable: {t!r}")


def _binder_name(lam: Lam, bound: tuple[str, ...]) -> str:
    from .terms import free_names

    taken = set(bound) | {n for _, n in free_names(lam.body)}
    base = lam.hint or "w"
    if base not in taken:
        return base
    n = 1
    while f"{base}{n}" in taken:
        n += 1
    return f"{base}{n}"


def render_goal(g: Goal, prec: int = 0) -> str:
    # prec 0: conjunction allowed; 1: guarded level; 2: primary only.
    match g:
        case GTrue():
            return "tt"
        case GFalse():
            return "ff"
        case GAtom(pred, args):
            if not args:
                return pred
            parts = [pred] + [render_term(a, (), _PREC_ATOM) for a in args]
            return " ".join(parts)
        case GEq(l, r, _):
            return f"{render_term(l, (), _PREC_CONS)} = {render_term(r, (), _PREC_CONS)}"
        case GAnd(l, r):
            s = f"{render_goal(l, 1)} , {render_goal(r, 0)}"
            return f"({s})" if prec > 0 else s
        case GGuard(l, r, _, body):
            eq = f"{render_term(l, (), _PREC_CONS)} = {render_term(r, (), _PREC_CONS)}"
            s = f"({eq}) => {render_goal(body, 1)}"
            return f"({s})" if prec > 1 else s
        case GForall(name, _, body):
            s = f"pi {name}\\ {render_goal(body, 0)}"
            return f"({s})" if prec > 0 else s
        case GExists(name, _, body):
            s = f"sigma {name}\\ {render_goal(body, 0)}"
            return f"({s})" if prec > 0 else s
    raise AssertionError(f"unreachable: {g!r}")


def render_clause(d: DefiniteClause) -> str:
    head = render_goal(d.head)
    if isinstance(d.body, GTrue):
        return f"{head}."
    return f"{head} :- {render_goal(d.body)}."


def render_subst(subst: Substitution, names: Optional[list[str]] = None) -> str:
    if names is None:
        names = sorted(subst.bindings)
    parts = [f"{n} := {render_term(subst.bindings[n])}" for n in names if n in subst.bindings]
    return ", ".join(parts)
