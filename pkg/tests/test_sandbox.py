from __future__ import annotations

import pytest

from clauselab.engine import Limits, Workspace, solve
from clauselab.errors import EngineError
from clauselab.sandbox import (check_directive, default_whitelist, safe_goal)
from clauselab.writer import write_term

from _util import goal_of, load

LIST_SRC = """
double(X, Y) :- Y is X * 2.
len([], 0).
len([_|T], N) :- len(T, M), N is M + 1.
odd(X) :- X mod 2 =:= 1.
chain(X) :- double(X, Y), len([Y], _).
looper :- looper.
"""

# (goal text, expected verdict status) -- program context is LIST_SRC
GOAL_CASES = [
    # plain whitelisted builtins and compositions
    ("maplist(plus(1), [1, 2, 3], L)", "safe"),
    ("append(X, Y, [a, b, c])", "safe"),
    ("member(X, [1, 2]), X > 1", "safe"),
    ("findall(X, member(X, [a]), L)", "safe"),
    ("aggregate_all(count, member(_, [a, b]), N)", "safe"),
    ("( integer(3) -> true ; fail )", "safe"),
    ("\\+ member(z, [a])", "safe"),
    ("atom_codes(A, [104, 105])", "safe"),
    ("between(1, 10, X), X mod 2 =:= 0", "safe"),
    ("write(hello), nl", "safe"),
    # meta-calls with bound targets
    ("call(member, X, [a, b])", "safe"),
    ("call(append([1]), Y, Z)", "safe"),
    ("forall(member(X, [1, 2]), X > 0)", "safe"),
    ("distinct(X, member(X, [a, a]))", "safe"),
    ("limit(2, between(1, inf, X))", "safe"),
    ("order_by([asc(X)], member(X, [2, 1]))", "safe"),
    ("time(member(X, [a]))", "safe"),
    # unfolding through user clauses, including recursion
    ("double(3, Z)", "safe"),
    ("len([a, b], N)", "safe"),
    ("chain(2)", "safe"),
    ("looper", "safe"),
    # unknown predicates run into a clean existence error at runtime
    ("missing_predicate(3)", "safe"),
    # plain database updates stay inside the workspace
    ("assertz(fact(1))", "safe"),
    # statically invisible bindings are rejected, not guessed
    ("read(X), call(X)", "instantiation_error"),
    ("X = hello, call(X)", "instantiation_error"),
    ("maplist(G, [1])", "instantiation_error"),
    # reaching outside the workspace
    ("other : spy(X)", "permission_error"),
    ("call(M : foo)", "permission_error"),
    ("maplist(other : plus(1), [1], L)", "permission_error"),
    ("assert(other : evil)", "permission_error"),
]


@pytest.mark.parametrize("text,expected", GOAL_CASES,
                         ids=[c[0][:40] for c in GOAL_CASES])
def test_goal_corpus(text, expected):
    ws = load(LIST_SRC)
    verdict = safe_goal(goal_of(text, ws), ws)
    assert verdict.status == expected
    assert verdict.ok == (expected == "safe")
    if expected != "safe":
        assert verdict.trace, "unsafe verdicts carry a witness trace"


def test_accepted_maplist_actually_runs():
    ws = load("")
    goal = goal_of("maplist(plus(1), [1, 2, 3], L)")
    assert safe_goal(goal, ws).ok
    it = solve(ws, goal, Limits())
    ans = it.next()
    assert write_term(ans.bindings["L"]) == "[2,3,4]"
    it.close()


def test_read_call_trace_ends_at_call():
    ws = load("")
    verdict = safe_goal(goal_of("read(X), call(X)"), ws)
    assert verdict.status == "instantiation_error"
    assert write_term(verdict.trace[-1]) == "call(X)"
    assert write_term(verdict.culprit) == "call(X)"


def test_qualified_call_is_permission_error():
    ws = load("")
    verdict = safe_goal(goal_of("other : spy(X)"), ws)
    assert verdict.status == "permission_error"
    assert write_term(verdict.trace[-1]) == "other:spy(X)"


def test_trace_spells_out_the_call_chain():
    src = "a :- b.\nb :- c.\nc :- evil : d.\n"
    ws = load(src)
    verdict = safe_goal(goal_of("a", ws), ws)
    assert verdict.status == "permission_error"
    assert [write_term(t) for t in verdict.trace] == \
        ["a", "b", "c", "evil:d"]


def test_asserting_a_clause_for_another_workspace_is_rejected():
    ws = load("")
    verdict = safe_goal(goal_of("assert((other : evil :- true))"), ws)
    assert verdict.status == "permission_error"


def test_asserting_a_local_rule_is_fine():
    ws = load("")
    assert safe_goal(goal_of("assert((p :- q))"), ws).ok


def test_non_callable_goals_are_rejected():
    ws = load("")
    assert safe_goal(goal_of("call(7)"), ws).status == "permission_error"
    assert safe_goal(goal_of("maplist(3, [1])"), ws).status == \
        "permission_error"


def test_recursion_does_not_loop_the_checker():
    ws = load("p :- p, q.\nq :- p.\n")
    assert safe_goal(goal_of("p", ws), ws).ok


def test_custom_whitelist_restricts():
    ws = load("")
    tiny = {("true", 0), ("member", 2)}
    assert safe_goal(goal_of("member(X, [a])"), ws, whitelist=tiny).ok
    verdict = safe_goal(goal_of("append(X, Y, [a])"), ws, whitelist=tiny)
    assert verdict.status == "permission_error"


def test_default_whitelist_covers_registered_builtins():
    wl = default_whitelist()
    for key in [("member", 2), ("append", 3), ("is", 2), ("findall", 3),
                ("call", 2), ("call", 8)]:
        assert key in wl


def test_safe_goals_never_raise_permission_at_runtime():
    # soundness spot check: everything the checker passes either runs
    # cleanly or fails with an error that is not a permission error
    ws = load(LIST_SRC)
    for text, expected in GOAL_CASES:
        if expected != "safe" or text == "looper":
            continue
        goal = goal_of(text, ws)
        it = solve(ws, goal, Limits(max_steps=20_000))
        for _ in range(5):
            step = it.next()
            if step is None:
                break
            if isinstance(step, EngineError):
                kind = getattr(step.term.args[0], "name", "")
                assert kind != "permission_error", text
                break
        it.close()


# -- directives ---------------------------------------------------------------

DIRECTIVE_CASES = [
    ("op(700, xfx, ===)", "safe"),
    ("op(200, xfy, [&, @])", "safe"),
    ("set_prolog_flag(double_quotes, codes)", "safe"),
    ("set_prolog_flag(double_quotes, sideways)", "permission_error"),
    ("set_prolog_flag(random_seed, 42)", "permission_error"),
    ("use_rendering(table)", "safe"),
    ("dynamic(counter/1)", "safe"),
    ("dynamic(foo)", "permission_error"),
    ("include('lib.pl')", "safe"),
    ("shell('rm -rf /')", "permission_error"),
    ("initialization(main)", "permission_error"),
]


@pytest.mark.parametrize("text,expected", DIRECTIVE_CASES,
                         ids=[c[0][:40] for c in DIRECTIVE_CASES])
def test_directive_corpus(text, expected):
    assert check_directive(goal_of(text)) == expected


def test_corpus_is_at_least_thirty_cases():
    assert len(GOAL_CASES) + len(DIRECTIVE_CASES) >= 30
