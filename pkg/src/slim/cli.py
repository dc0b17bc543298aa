"""Command line front end.

Three subcommands operate on a program file and a goal:

``solve``
    Search for substitutions that prove the goal.  Exit status 0 when at
    least one solution is found, 2 when the search only reached suspended
    states (equations between unconstrained variables), 3 when the goal
    failed or the search gave up at its limits, and 1 on bad input.

``check``
    Verify a proposed substitution (``--subst 'x := s z, y := _1'``).
    Placeholders such as ``_1`` stand for arbitrary values and are checked
    as fresh constants.  Exit status 0 for verified, 2 for unverifiable
    within the limits, 3 for refuted, 1 on bad input.

``decide``
    Decide a goal with no atoms and no existential quantifiers.  Exit
    status 0 for true, 3 for false, 1 on bad input or a goal outside the
    decidable fragment.

The goal comes from ``--goal`` (literal text), ``--goal-file``, or
``--named`` (a goal declared in the program file).  ``--format records``
switches to tab-separated one-record-per-line output for scripting.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .engine import (
    SearchConfig,
    SearchResult,
    check_solution,
    decide_existential_free,
    search,
)
from .formulas import Goal, Program, exists_scopes
from .states import render_state
from .syntax import parse_file, parse_goal, parse_substitution, render_term
from .terms import SlimError, Term


def _load_program(path: str) -> Program:
    text = Path(path).read_text(encoding="utf-8")
    return parse_file(text).program()


def _resolve_goal(args: argparse.Namespace, program: Program) -> Goal:
    if args.named is not None:
        if args.named not in program.named_goals:
            known = ", ".join(sorted(program.named_goals)) or "none"
            raise SlimError(f"no goal named {args.named!r} in {args.program} (declared: {known})")
        return program.named_goals[args.named]
    if args.goal_file is not None:
        text = Path(args.goal_file).read_text(encoding="utf-8")
    else:
        text = args.goal
    return parse_goal(text, program.signature)


def _bindings_str(bindings: dict[str, Term]) -> str:
    return ", ".join(f"{name} := {render_term(t)}" for name, t in bindings.items())


def _search_config(args: argparse.Namespace) -> SearchConfig:
    return SearchConfig(
        max_transitions=args.max_transitions,
        max_backchain=args.max_backchain,
        occurs_check=args.occurs_check == "on",
        max_solutions=getattr(args, "max_solutions", 1),
        trace=getattr(args, "trace", False),
    )


def _print_solve_text(res: SearchResult) -> None:
    for ev in res.trace:
        detail = f" {ev.detail}" if ev.detail else ""
        print(
            f"trace: pass {ev.pass_index} depth {ev.depth} {ev.kind}"
            f" conjunct {ev.conjunct}{detail} [{ev.state_hash}]"
        )
    for i, sol in enumerate(res.solutions, 1):
        body = _bindings_str(sol.bindings) or "yes"
        print(f"solution {i}: {body}")
    for i, susp in enumerate(res.suspended, 1):
        line = f"suspended {i}: {render_state(susp.state)}"
        pending = _bindings_str(susp.bindings)
        if pending:
            line += f" where {pending}"
        print(line)
    if not res.solutions and not res.suspended:
        print("no solutions")
    if res.exhausted:
        print("search limit reached; the answer set may be incomplete")
    st = res.stats
    print(f"stats: passes={st.passes} nodes={st.nodes} transitions={st.transitions}")


def _print_solve_records(res: SearchResult) -> None:
    for ev in res.trace:
        print(
            "\t".join(
                [
                    "trace",
                    f"pass={ev.pass_index}",
                    f"depth={ev.depth}",
                    f"kind={ev.kind}",
                    f"conjunct={ev.conjunct}",
                    f"detail={ev.detail}",
                    f"state={ev.state_hash}",
                ]
            )
        )
    for sol in res.solutions:
        print(f"solution\t{_bindings_str(sol.bindings)}")
    for susp in res.suspended:
        print(f"suspended\t{render_state(susp.state)}\t{_bindings_str(susp.bindings)}")
    print(f"exhausted\t{'true' if res.exhausted else 'false'}")
    st = res.stats
    print(f"stats\tpasses={st.passes}\tnodes={st.nodes}\ttransitions={st.transitions}")


def _run_solve(args: argparse.Namespace) -> int:
    program = _load_program(args.program)
    goal = _resolve_goal(args, program)
    res = search(program, goal, _search_config(args))
    if args.format == "records":
        _print_solve_records(res)
    else:
        _print_solve_text(res)
    if res.solutions:
        return 0
    if res.suspended:
        return 2
    return 3


def _run_check(args: argparse.Namespace) -> int:
    program = _load_program(args.program)
    goal = _resolve_goal(args, program)
    scopes = {
        name: (ty, dict(unis)) for name, (ty, unis) in exists_scopes(goal).items()
    }
    subst, new_consts = parse_substitution(args.subst, program.signature, scopes)
    if new_consts:
        sig = program.signature.copy()
        for name, ty in new_consts.items():
            sig.declare_const(name, ty)
        program = Program(sig, program.clauses, program.named_goals)
    verdict = check_solution(program, goal, subst, _search_config(args))
    if args.format == "records":
        print(f"verdict\t{verdict}")
    else:
        print(verdict)
    return {"verified": 0, "unverifiable": 2, "refuted": 3}[verdict]


def _run_decide(args: argparse.Namespace) -> int:
    program = _load_program(args.program)
    goal = _resolve_goal(args, program)
    value = decide_existential_free(goal, program.signature)
    if args.format == "records":
        print(f"decision\t{'true' if value else 'false'}")
    else:
        print("true" if value else "false")
    return 0 if value else 3


def _add_goal_source(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("program", help="program file with declarations and clauses")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--goal", help="goal text, e.g. 'sigma x\\\\ p x'")
    group.add_argument("--goal-file", help="file containing one goal")
    group.add_argument("--named", help="name of a goal declared in the program file")


def _add_limits(sp: argparse.ArgumentParser) -> None:
    sp.add_argument(
        "--max-transitions",
        type=int,
        default=500,
        metavar="N",
        help="give up on any path after N transitions (default: 500)",
    )
    sp.add_argument(
        "--max-backchain",
        type=int,
        default=None,
        metavar="N",
        help="give up on any path after N clause selections (default: no limit)",
    )
    sp.add_argument(
        "--occurs-check",
        choices=["on", "off"],
        default="on",
        help="prune variable-inside-itself equations (default: on)",
    )


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="slim",
        description="Proof search for logic programs over simply typed lambda terms.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="search for substitutions proving a goal")
    _add_goal_source(sp)
    _add_limits(sp)
    sp.add_argument(
        "--max-solutions",
        type=int,
        default=1,
        metavar="N",
        help="stop after N solutions; 0 means enumerate all (default: 1)",
    )
    sp.add_argument("--trace", action="store_true", help="print one line per transition")
    sp.add_argument("--format", choices=["text", "records"], default="text")
    sp.set_defaults(run=_run_solve)

    sp = sub.add_parser("check", help="verify a proposed substitution")
    _add_goal_source(sp)
    _add_limits(sp)
    sp.add_argument(
        "--subst",
        required=True,
        metavar="BINDINGS",
        help="bindings like 'x := s z, y := _1' (placeholders allowed)",
    )
    sp.add_argument("--format", choices=["text", "records"], default="text")
    sp.set_defaults(run=_run_check)

    sp = sub.add_parser("decide", help="decide an atom-free, existential-free goal")
    _add_goal_source(sp)
    sp.add_argument("--format", choices=["text", "records"], default="text")
    sp.set_defaults(run=_run_decide)

    args = ap.parse_args(argv)
    try:
        return args.run(args)
    except (SlimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
