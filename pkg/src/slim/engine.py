"""Bounded proof search over reduced state formulas.

The search works on states produced by :func:`slim.states.normalize`.
Between transitions, guard reduction runs to a fixed point, so every
node the search touches is a reduced state.  The moves are:

* dropping an identical target equality,
* decomposing a target equality whose sides share a rigid head,
* turning a rigid head clash into falsehood (the guards stay: they may
  still turn out unsatisfiable, which makes the conjunct vacuous),
* instantiating the flexible head of a flex-rigid target equality,
  trying every projection before the single imitation,
* backchaining an atom target against each program clause, replacing
  the atom with the clause's matching equations followed by its body,
  normalized under the conjunct's universals and guards.

The first three are deterministic and applied eagerly, leftmost first.
Otherwise the leftmost flex-rigid conjunct is expanded if there is one,
else the leftmost atom conjunct.  A state with no conjuncts is a
success; a conjunct reading falsehood with no guards left is a dead
branch; a state offering no move at all is suspended when some target
is a flex-flex equality or hides behind unresolved guards, and simply
dead otherwise.

One refinement keeps clause bodies from being explored pointlessly: a
conjunct reading falsehood under guards whose variables occur in no
target anywhere in the state can never be discharged, because the
substitutions transitions produce only bind variables with target
occurrences.  Such a state can never reach success, so it is reported
as suspended immediately instead of being expanded further.  Without
this, backchaining a clause whose head cannot match still leaves the
clause body active behind the permanently guarded falsehood, and the
body keeps offering fresh backchains forever.

Exploration is depth-first with a per-path transition budget, restarted
with doubling budgets up to the configured maximum.  If a whole pass
finishes without hitting its budget the space is exhausted and deeper
passes are pointless.  Solutions are read off the accumulated
substitution through the raising record and deduplicated; existentials
the search never had to bind are reported with placeholder names.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

from .formulas import (
    GAnd,
    GAtom,
    GEq,
    GExists,
    GGuard,
    GTrue,
    Goal,
    Program,
    ScopeError,
    check_goal,
    exists_scopes,
    goal_is_atom_free,
    goal_has_exists,
    goal_names,
    goal_terms,
    instantiate_goal,
    rename_clause,
    subgoals,
)
from .states import (
    Conjunct,
    Raising,
    State,
    TAtom,
    TEq,
    TFalse,
    apply_subst_conjuncts,
    canonical_key,
    classify,
    eq_conjunct,
    normalize_into,
    prune_conjunct,
    reduce,
    render_state,
    target_kind,
)
from .syntax import render_term
from .terms import (
    App,
    Arrow,
    Bound,
    Const,
    Eigen,
    FreshNames,
    Lam,
    LogicVar,
    Signature,
    SlimError,
    Substitution,
    Term,
    Type,
    apply_subst,
    arrow,
    compose,
    free_eigens,
    free_logic_vars,
    head_of,
    make_app,
    occurs_rigidly,
    order,
    split_type,
    strip_app,
    term_eq,
    typeof,
)


class PreconditionViolated(SlimError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    max_transitions: int = 500
    max_backchain: Optional[int] = None
    max_imitation_depth: Optional[int] = None
    occurs_check: bool = True
    max_solutions: int = 1
    trace: bool = False


@dataclass(frozen=True)
class Solution:
    bindings: dict[str, Term]
    transitions: int
    subst: Substitution

    def __eq__(self, other: object) -> bool:  # structural, for tests
        return isinstance(other, Solution) and same_bindings(self.bindings, other.bindings)

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.bindings)))


def same_bindings(a: dict[str, Term], b: dict[str, Term]) -> bool:
    return a.keys() == b.keys() and all(term_eq(a[k], b[k]) for k in a)


@dataclass(frozen=True)
class Suspended:
    state: State
    bindings: dict[str, Term]


@dataclass
class SearchStats:
    passes: int = 0
    nodes: int = 0
    transitions: int = 0


@dataclass(frozen=True)
class TraceEvent:
    pass_index: int
    depth: int
    kind: str
    conjunct: int
    detail: str
    state_hash: str


@dataclass
class SearchResult:
    solutions: list[Solution]
    suspended: list[Suspended]
    exhausted: bool
    initial: State
    raising: Raising
    stats: SearchStats
    trace: list[TraceEvent] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return bool(self.solutions)


@dataclass(frozen=True)
class Transition:
    kind: str  # drop | decompose | clash | project | imitate | backchain
    conjunct: int
    state: State  # not yet reduced
    label: Optional[Substitution]
    backchain: bool
    detail: str


def state_hash(state: State) -> str:
    return hashlib.md5(render_state(state).encode()).hexdigest()[:10]


class _Search:
    def __init__(self, program: Program, goal: Goal, config: SearchConfig) -> None:
        self.program = program
        self.sig = program.signature
        self.config = config
        violations = check_goal(self.sig, goal)
        if violations:
            raise SlimError("invalid goal: " + "; ".join(v.message for v in violations))
        reserved = set(self.sig.consts) | set(self.sig.prims) | set(self.sig.eigens)
        reserved |= goal_names(goal)
        for cl in program.clauses:
            reserved |= {n for n, _ in cl.universals}
            reserved |= goal_names(cl.head) | goal_names(cl.body)
        self.fresh = FreshNames(reserved)
        conjs, exists, self.raising = normalize_into(goal, self.fresh)
        self.initial, _ = reduce(State(tuple(exists), tuple(conjs)), self.sig)

    # -- transition enumeration ------------------------------------------------

    def transitions(self, state: State) -> list[Transition]:
        """Successors of the leftmost workable conjunct.

        A flex-rigid conjunct whose complete set of candidate bindings
        is empty, or an atom with no clause for its predicate, has an
        unsatisfiable target; it degrades to falsehood under its guards
        rather than killing the branch, since refuting a guard can still
        discharge it.  A conjunct is skipped as stuck when finishing it
        would need an existential outside the order-1 fragment; an empty
        return then means suspension, not refutation.
        """
        for i, c in enumerate(state.conjuncts):
            kind = target_kind(c)
            if kind == "identical":
                conjs = state.conjuncts[:i] + state.conjuncts[i + 1 :]
                return [Transition("drop", i, State(state.existentials, conjs), None, False, "")]
            if kind == "rigid_rigid":
                return [self._rigid_rigid(state, i, c)]
        for i, c in enumerate(state.conjuncts):
            if target_kind(c) == "flex_rigid":
                out, blocked = self._flex_rigid(state, i, c)
                if blocked:
                    continue
                if out:
                    return out
                return [self._refute_target(state, i, c)]
        for i, c in enumerate(state.conjuncts):
            if target_kind(c) == "atom":
                out = self._backchains(state, i, c)
                if out:
                    return out
                return [self._refute_target(state, i, c)]
        return []

    def _replace(self, state: State, i: int, parts: tuple[Conjunct, ...]) -> tuple[Conjunct, ...]:
        return state.conjuncts[:i] + parts + state.conjuncts[i + 1 :]

    def _rigid_rigid(self, state: State, i: int, c: Conjunct) -> Transition:
        assert isinstance(c.target, TEq)
        l, r = c.target.lhs, c.target.rhs
        lh, largs = strip_app(l)
        rh, rargs = strip_app(r)
        if lh == rh:
            assert isinstance(lh, Const) and largs and len(largs) == len(rargs)
            arg_tys = split_type(self.sig.const_type(lh.name))[0][: len(largs)]
            parts = tuple(
                eq_conjunct(c.universals, c.guards, a, b, ty, self.fresh)
                for a, b, ty in zip(largs, rargs, arg_tys)
            )
            return Transition(
                "decompose", i, State(state.existentials, self._replace(state, i, parts)),
                None, False, lh.name,
            )
        return self._refute_target(state, i, c)

    def _refute_target(self, state: State, i: int, c: Conjunct) -> Transition:
        """The target can never hold; only refuting the guards remains."""
        bottom = prune_conjunct(Conjunct(c.universals, c.guards, TFalse()))
        return Transition(
            "clash", i, State(state.existentials, self._replace(state, i, (bottom,))),
            None, False, "",
        )

    def _flex_rigid(self, state: State, i: int, c: Conjunct) -> tuple[list[Transition], bool]:
        assert isinstance(c.target, TEq)
        l, r = c.target.lhs, c.target.rhs
        if isinstance(head_of(l), LogicVar):
            flex, rigid = l, r
        else:
            flex, rigid = r, l
        h = head_of(flex)
        assert isinstance(h, LogicVar)
        hargs = strip_app(flex)[1]
        etypes = dict(state.existentials)
        hty = etypes[h.name]
        arg_tys, core = split_type(hty)
        assert len(hargs) == len(arg_tys), "existential appears partially applied"
        out: list[Transition] = []
        for idx, aty in enumerate(arg_tys):
            if aty == core:
                value = _lam_chain(arg_tys, Bound(len(arg_tys) - 1 - idx))
                out.append(self._bind(state, i, h.name, hty, value, (), "project"))
        rh = head_of(rigid)
        match rh:
            case Eigen(name):
                if name not in c.universal_names():
                    value = _lam_chain(arg_tys, Eigen(name))
                    out.append(self._bind(state, i, h.name, hty, value, (), "imitate"))
            case Const(name):
                if self.config.occurs_check and not hargs and occurs_rigidly(h.name, rigid):
                    return out, False
                f_tys = split_type(self.sig.const_type(name))[0]
                fresh_vars = [
                    (self.fresh.fresh("x"), arrow(list(arg_tys), fty)) for fty in f_tys
                ]
                if any(order(ty) > 1 for _, ty in fresh_vars):
                    return out, True
                spine = [Bound(j) for j in range(len(arg_tys) - 1, -1, -1)]
                body = make_app(
                    Const(name),
                    [make_app(LogicVar(n), list(spine)) for n, _ in fresh_vars],
                )
                value = _lam_chain(arg_tys, body)
                out.append(
                    self._bind(state, i, h.name, hty, value, tuple(fresh_vars), "imitate")
                )
            case _:
                pass  # flex-flex and lambda heads never reach here
        return out, False

    def _bind(
        self,
        state: State,
        i: int,
        name: str,
        ty: Type,
        value: Term,
        new_vars: tuple[tuple[str, Type], ...],
        kind: str,
    ) -> Transition:
        rho = Substitution.of({name: value}, {name: ty})
        exists: list[tuple[str, Type]] = []
        for n, t in state.existentials:
            if n == name:
                exists.extend(new_vars)
            else:
                exists.append((n, t))
        conjs = apply_subst_conjuncts(rho, state.conjuncts)
        return Transition(
            kind, i, State(tuple(exists), conjs), rho, False,
            f"{name} := {render_term(value)}",
        )

    def _backchains(self, state: State, i: int, c: Conjunct) -> list[Transition]:
        assert isinstance(c.target, TAtom)
        atom = c.target
        arg_tys = split_type(self.sig.const_type(atom.pred))[0]
        out: list[Transition] = []
        for ci, clause in enumerate(self.program.clauses):
            if clause.head.pred != atom.pred:
                continue
            renamed = rename_clause(clause, self.fresh)
            goal: Goal = renamed.body
            for a, b, ty in reversed(list(zip(atom.args, renamed.head.args, arg_tys))):
                eq = GEq(a, b, ty)
                goal = eq if isinstance(goal, GTrue) else GAnd(eq, goal)
            for n, ty in reversed(renamed.universals):
                goal = GExists(n, ty, goal)
            parts, new_exists, _ = normalize_into(goal, self.fresh, c.universals, c.guards)
            st = State(
                state.existentials + tuple(new_exists),
                self._replace(state, i, tuple(parts)),
            )
            out.append(Transition("backchain", i, st, None, True, f"clause {ci}"))
        return out

    # -- the search ----------------------------------------------------------

    def run(self) -> SearchResult:
        cfg = self.config
        stats = SearchStats()
        trace: list[TraceEvent] = []
        solutions: list[Solution] = []
        suspended: dict[object, Suspended] = {}
        exhausted = False

        def assemble() -> SearchResult:
            return SearchResult(
                solutions, list(suspended.values()), exhausted,
                self.initial, self.raising, stats, trace,
            )

        for pass_index, limit in enumerate(_limits(cfg.max_transitions)):
            stats.passes = pass_index + 1
            bound_hit = False
            stack: list[tuple[State, Substitution, int, int, dict[str, int]]] = [
                (self.initial, Substitution.identity(), 0, 0, {})
            ]
            while stack:
                state, theta, used, backs, depths = stack.pop()
                stats.nodes += 1
                cls = classify(state)
                if cls == "active" and _undischargeable(state):
                    cls = "suspended"
                match cls:
                    case "success":
                        sol = Solution(self.extract(theta), used, theta)
                        if not any(same_bindings(sol.bindings, s.bindings) for s in solutions):
                            solutions.append(sol)
                            if cfg.max_solutions and len(solutions) >= cfg.max_solutions:
                                exhausted = bound_hit
                                return assemble()
                        continue
                    case "failure":
                        continue
                    case "suspended":
                        key = canonical_key(state)
                        if key not in suspended:
                            suspended[key] = Suspended(state, self.extract(theta, placeholders=False))
                        continue
                trans = self.transitions(state)
                if not trans:
                    # an active state with no successors has every workable
                    # conjunct stuck outside the order-1 fragment: hedge
                    key = canonical_key(state)
                    if key not in suspended:
                        suspended[key] = Suspended(state, self.extract(theta, placeholders=False))
                    continue
                children = []
                for t in trans:
                    if used + 1 > limit:
                        bound_hit = True
                        continue
                    if t.backchain and cfg.max_backchain is not None and backs + 1 > cfg.max_backchain:
                        bound_hit = True
                        continue
                    child_depths = depths
                    if t.kind == "imitate" and t.label is not None:
                        # each imitation of a variable deepens the chain its
                        # fresh variables belong to
                        bound_var = next(iter(t.label.bindings))
                        chain = depths.get(bound_var, 0) + 1
                        if (cfg.max_imitation_depth is not None
                                and chain > cfg.max_imitation_depth):
                            bound_hit = True
                            continue
                        introduced = free_logic_vars(t.label.bindings[bound_var])
                        if introduced:
                            child_depths = {**depths, **{n: chain for n in introduced}}
                    red, _ = reduce(t.state, self.sig)
                    stats.transitions += 1
                    if cfg.trace:
                        trace.append(
                            TraceEvent(pass_index, used + 1, t.kind, t.conjunct, t.detail, state_hash(red))
                        )
                    theta2 = compose(theta, t.label) if t.label is not None else theta
                    children.append((red, theta2, used + 1, backs + (1 if t.backchain else 0), child_depths))
                stack.extend(reversed(children))
            exhausted = bound_hit
            if not bound_hit:
                break
        return assemble()

    def extract(self, theta: Substitution, placeholders: bool = True) -> dict[str, Term]:
        """Bindings for the goal's own existentials, in binder order."""
        out: dict[str, Term] = {}
        ph: dict[str, Term] = {}
        for orig in self.raising.order:
            rv = self.raising.entries[orig]
            value = apply_subst(theta, rv.spine_term())
            if placeholders:
                value = _placeholderize(value, ph)
            out[orig] = value
        return out


def _undischargeable(state: State) -> bool:
    """True when some falsehood target is trapped behind frozen guards.

    Transition substitutions only bind variables that occur in some
    target, so guards built purely from guard-only variables never
    change again.  A conjunct reading falsehood under such guards can
    neither be discharged (its guards will never become refutable) nor
    dropped, so the state can never become a success.
    """
    stuck = [c for c in state.conjuncts if isinstance(c.target, TFalse) and c.guards]
    if not stuck:
        return False
    target_vars: set[str] = set()
    for c in state.conjuncts:
        match c.target:
            case TEq(lhs, rhs, _):
                target_vars |= free_logic_vars(lhs) | free_logic_vars(rhs)
            case TAtom(_, args):
                for a in args:
                    target_vars |= free_logic_vars(a)
            case _:
                pass
    for c in stuck:
        guard_vars: set[str] = set()
        for g in c.guards:
            guard_vars |= free_logic_vars(g.lhs) | free_logic_vars(g.rhs)
        if not guard_vars & target_vars:
            return True
    return False


def _placeholderize(t: Term, ph: dict[str, Term]) -> Term:
    match t:
        case LogicVar(name):
            if name not in ph:
                ph[name] = Const(f"_{len(ph) + 1}")
            return ph[name]
        case App(fn, arg):
            return App(_placeholderize(fn, ph), _placeholderize(arg, ph))
        case Lam(ty, body, hint):
            return Lam(ty, _placeholderize(body, ph), hint)
        case _:
            return t


def _lam_chain(arg_tys: list[Type], body: Term) -> Term:
    for ty in reversed(arg_tys):
        body = Lam(ty, body, "w")
    return body


def _limits(maximum: int) -> list[int]:
    if maximum <= 16:
        return [maximum]
    out = []
    step = 16
    while step < maximum:
        out.append(step)
        step *= 2
    out.append(maximum)
    return out


def search(program: Program, goal: Goal, config: SearchConfig = SearchConfig()) -> SearchResult:
    return _Search(program, goal, config).run()


# ---------------------------------------------------------------------------
# The decidable fragment


def decide_existential_free(goal: Goal, sig: Signature) -> bool:
    """Decide a goal with no atoms, no existentials and primitive-type
    equalities.  Raises :class:`PreconditionViolated` outside that set."""
    for sub in subgoals(goal):
        match sub:
            case GExists(name, _, _):
                raise PreconditionViolated(f"existential quantifier on {name}")
            case GAtom(pred, _):
                raise PreconditionViolated(f"atom {pred} needs a program")
            case GEq(_, _, ty) | GGuard(_, _, ty, _):
                if isinstance(ty, Arrow):
                    raise PreconditionViolated("equality at a non-primitive type")
    for t in goal_terms(goal):
        if free_logic_vars(t):
            raise PreconditionViolated("goal contains free logic variables")
    fresh = FreshNames(goal_names(goal))
    conjs, exists, _ = normalize_into(goal, fresh)
    assert not exists
    state, _ = reduce(State((), tuple(conjs)), sig)
    for c in state.conjuncts:
        assert not c.guards, "variable-free guards always reduce away"
        match c.target:
            case TFalse():
                return False
            case TEq(l, r, _):
                if not term_eq(l, r):
                    return False
            case TAtom(_, _):
                raise AssertionError("unreachable")
    return True


# ---------------------------------------------------------------------------
# Solution checking


def check_solution(
    program: Program,
    goal: Goal,
    subst: Substitution,
    config: SearchConfig = SearchConfig(),
) -> str:
    """'verified', 'refuted' or 'unverifiable' for proposed bindings.

    Bindings are scope-checked against the goal's binder structure and
    type-checked first; bad input raises rather than refutes.
    """
    sig = program.signature
    scopes = exists_scopes(goal)
    for name in subst.bindings:
        if name not in scopes:
            raise ScopeError(f"no existential named {name} in the goal")
    for name, t in subst.bindings.items():
        ty, unis = scopes[name]
        if free_logic_vars(t):
            raise ScopeError(f"binding for {name} contains a logic variable")
        allowed = {n for n, _ in unis}
        stray = free_eigens(t) - allowed - set(sig.eigens)
        if stray:
            raise ScopeError(
                f"binding for {name} mentions {sorted(stray)} outside its scope"
            )
        env: dict[str, Type] = {n: uty for n, uty in unis}
        actual = typeof(sig, env, t)
        if actual != ty:
            raise ScopeError(f"binding for {name} has type {actual!r}, expected {ty!r}")
    instantiated = instantiate_goal(goal, subst.bindings)
    if goal_is_atom_free(instantiated) and not goal_has_exists(instantiated):
        try:
            return "verified" if decide_existential_free(instantiated, sig) else "refuted"
        except PreconditionViolated:
            pass
    result = search(program, instantiated, config)
    if result.found:
        return "verified"
    if not result.exhausted and not result.suspended:
        return "refuted"
    return "unverifiable"
