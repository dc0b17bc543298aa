"""Proof search for logic programs over simply typed lambda terms.

The pieces, bottom up:

``slim.terms``
    Types, beta-normal terms, signatures, substitutions.
``slim.formulas``
    Goals, definite clauses, programs, well-formedness checks.
``slim.syntax``
    Concrete syntax: parser, elaborator with type inference, printers.
``slim.states``
    Reduced state formulas, goal normalization, guard reduction.
``slim.engine``
    The transition-system search, the decision procedure for the
    quantifier-restricted fragment, and solution checking.
``slim.cli``
    The ``slim`` command.
"""

from .engine import (
    PreconditionViolated,
    SearchConfig,
    SearchResult,
    Solution,
    Suspended,
    check_solution,
    decide_existential_free,
    search,
)
from .formulas import (
    DefiniteClause,
    GAnd,
    GAtom,
    GEq,
    GExists,
    GFalse,
    GForall,
    GGuard,
    GTrue,
    Goal,
    Program,
    ScopeError,
    check_clause,
    check_goal,
    instantiate_goal,
)
from .states import (
    Conjunct,
    NormalizationError,
    State,
    classify,
    normalize,
    reduce,
    render_state,
)
from .syntax import (
    OpenGoalError,
    ParseError,
    ReservedNameError,
    SourceFile,
    UndeclaredConstantError,
    parse_file,
    parse_goal,
    parse_substitution,
    parse_term,
    render_clause,
    render_goal,
    render_subst,
    render_term,
    render_type,
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
    TypeCheckError,
    UnknownNameError,
    apply_subst,
    beta_normalize,
    compose,
    order,
    term_eq,
    typeof,
)

__version__ = "0.1.0"

__all__ = [
    "App",
    "Arrow",
    "Bound",
    "Conjunct",
    "Const",
    "DefiniteClause",
    "Eigen",
    "FORMULA",
    "GAnd",
    "GAtom",
    "GEq",
    "GExists",
    "GFalse",
    "GForall",
    "GGuard",
    "GTrue",
    "Goal",
    "Lam",
    "LogicVar",
    "NormalizationError",
    "OpenGoalError",
    "ParseError",
    "PreconditionViolated",
    "Prim",
    "Program",
    "ReservedNameError",
    "ScopeError",
    "SearchConfig",
    "SearchResult",
    "Signature",
    "SlimError",
    "Solution",
    "SourceFile",
    "State",
    "Substitution",
    "Suspended",
    "Term",
    "Type",
    "TypeCheckError",
    "UndeclaredConstantError",
    "UnknownNameError",
    "apply_subst",
    "beta_normalize",
    "check_clause",
    "check_goal",
    "check_solution",
    "classify",
    "compose",
    "decide_existential_free",
    "instantiate_goal",
    "normalize",
    "order",
    "parse_file",
    "parse_goal",
    "parse_substitution",
    "parse_term",
    "reduce",
    "render_clause",
    "render_goal",
    "render_state",
    "render_subst",
    "render_term",
    "render_type",
    "search",
    "term_eq",
    "typeof",
]
