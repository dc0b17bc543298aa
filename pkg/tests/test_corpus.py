"""Every shipped corpus goal file must reproduce its recorded outcome.

Goal files carry their own harness directives in comment lines:

    % program: <path relative to the goal file>
    % config:  key=value pairs (max-transitions, max-solutions, ...)
    % expect:  classification | solutions | solution | suspended | exhausted

The rest of the file is the goal text itself, so the same files also work
directly with ``slim solve --goal-file``.
"""

from dataclasses import dataclass
from pathlib import Path

import pytest

from slim.engine import SearchConfig, search
from slim.syntax import parse_file, parse_goal, render_term

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
GOAL_FILES = sorted((CORPUS / "paper-examples").glob("*.slim"))


@dataclass
class Directives:
    program: Path
    config: SearchConfig
    expects: list[tuple[str, str]]
    goal_text: str


def parse_directives(path: Path) -> Directives:
    program_rel = None
    cfg: dict[str, str] = {}
    expects: list[tuple[str, str]] = []
    goal_lines: list[str] = []
    for line in path.read_text().splitlines():
        s = line.strip()
        if s.startswith("% program:"):
            program_rel = s.split(":", 1)[1].strip()
        elif s.startswith("% config:"):
            for tok in s.split(":", 1)[1].split():
                k, v = tok.split("=")
                cfg[k] = v
        elif s.startswith("% expect:"):
            kind, _, rest = s.split(":", 1)[1].strip().partition(" ")
            expects.append((kind, rest.strip()))
        elif s.startswith("%"):
            continue
        else:
            goal_lines.append(line)
    assert program_rel, f"{path.name}: missing % program: directive"
    assert expects, f"{path.name}: missing % expect: directives"
    config = SearchConfig(
        max_transitions=int(cfg.get("max-transitions", 500)),
        max_solutions=int(cfg.get("max-solutions", 1)),
        occurs_check=cfg.get("occurs-check", "on") != "off",
        max_backchain=int(cfg["max-backchain"]) if "max-backchain" in cfg else None,
    )
    return Directives(
        (path.parent / program_rel).resolve(), config, expects,
        "\n".join(goal_lines),
    )


def classification_of(result) -> str:
    if result.solutions:
        return "solved"
    if result.suspended:
        return "suspended"
    if result.exhausted:
        return "exhausted"
    return "failed"


@pytest.mark.parametrize("path", GOAL_FILES, ids=lambda p: p.stem)
def test_corpus_goal_file(path):
    d = parse_directives(path)
    program = parse_file(d.program.read_text()).program()
    goal = parse_goal(d.goal_text, program.signature)
    res = search(program, goal, d.config)
    rendered = [
        ", ".join(f"{n} := {render_term(t)}" for n, t in sol.bindings.items()) or "yes"
        for sol in res.solutions
    ]
    want_solutions = [rest for kind, rest in d.expects if kind == "solution"]
    if want_solutions:
        assert rendered == want_solutions
    for kind, rest in d.expects:
        if kind == "classification":
            assert classification_of(res) == rest
        elif kind == "solutions":
            assert len(res.solutions) == int(rest)
        elif kind == "suspended":
            assert len(res.suspended) == int(rest)
        elif kind == "exhausted":
            assert str(res.exhausted).lower() == rest
        elif kind != "solution":
            pytest.fail(f"unknown expect directive {kind!r} in {path.name}")


def test_goal_file_inventory():
    assert len(GOAL_FILES) == 12


def test_peano_program_shape():
    program = parse_file((CORPUS / "peano.slim").read_text()).program()
    assert len(program.clauses) == 2
    assert set(program.named_goals) >= {"injective"}


def test_eqlj_program_shape():
    program = parse_file((CORPUS / "eqlj1.slim").read_text()).program()
    assert len(program.clauses) == 19
    assert "seq" in program.signature.consts


def test_mall_program_shape():
    program = parse_file((CORPUS / "mall.slim").read_text()).program()
    assert len(program.clauses) == 18
    assert "par" in program.signature.consts


def test_empty_program_shape():
    program = parse_file((CORPUS / "empty.slim").read_text()).program()
    assert program.clauses == []
    for name in ("a", "b", "f", "g", "k"):
        assert name in program.signature.consts
