"""Static safety analysis for goals and directives.

``safe_goal`` unfolds a goal through the loaded program down to builtin
calls before anything runs. Every reachable leaf must be a whitelisted
builtin; meta-calls (call/N, findall, maplist, ...) are followed into
their goal arguments. The result is a verdict:

  safe                 every reachable call is whitelisted
  instantiation_error  a goal position is unbound, so the call graph
                       cannot be determined statically
  permission_error     a non-whitelisted or module-qualified call is
                       reachable

Unsafe verdicts carry the chain of calls that leads to the culprit.
Recursion is handled by assuming a predicate already under analysis is
safe (its other call sites are still checked).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .terms import Atom, Integer, String, Struct, Term, Var
from .unify import unify, walk

_CONTROL = {(",", 2), (";", 2), ("->", 2), ("*->", 2), ("\\+", 1),
            ("forall", 2), ("!", 0), ("true", 0), ("fail", 0),
            ("false", 0)}

# meta-arguments: builtin -> [(arg index, extra args applied to it)]
_META = {("call", n): [(0, n - 1)] for n in range(1, 9)}
_META.update({
    ("findall", 3): [(1, 0)],
    ("aggregate_all", 3): [(1, 0)],
    ("distinct", 2): [(1, 0)],
    ("limit", 2): [(1, 0)],
    ("order_by", 2): [(1, 0)],
    ("time", 1): [(0, 0)],
    ("maplist", 2): [(0, 1)],
    ("maplist", 3): [(0, 2)],
    ("maplist", 4): [(0, 3)],
})

_DB_UPDATES = {("assert", 1), ("asserta", 1), ("assertz", 1),
               ("retract", 1)}

_MAX_EXPANSIONS = 10_000


@dataclass
class Verdict:
    status: str  # 'safe' | 'instantiation_error' | 'permission_error'
    culprit: Optional[Term] = None
    trace: list = field(default_factory=list)  # call chain, outermost first

    @property
    def ok(self) -> bool:
        return self.status == "safe"


def default_whitelist() -> set:
    from . import builtins as _registered  # noqa: F401
    from .engine import BUILTINS
    # call/N is interpreted by the machine itself, not registered
    return set(BUILTINS) | {("call", n) for n in range(1, 9)}


def safe_goal(goal: Term, ws, whitelist: Optional[set] = None) -> Verdict:
    wl = default_whitelist() if whitelist is None else whitelist
    state = _State(ws, wl)
    bad = _check(goal, state, {}, frozenset(), ())
    return bad if bad is not None else Verdict("safe")


class _State:
    __slots__ = ("ws", "whitelist", "budget")

    def __init__(self, ws, whitelist):
        self.ws = ws
        self.whitelist = whitelist
        self.budget = _MAX_EXPANSIONS


def _fail(status: str, goal: Term, chain: tuple) -> Verdict:
    return Verdict(status, goal, list(chain) + [goal])


def _check(goal: Term, st: _State, bindings: dict, visited: frozenset,
           chain: tuple) -> Optional[Verdict]:
    goal = walk(goal, bindings)
    if isinstance(goal, Var):
        return _fail("instantiation_error", goal, chain)
    if isinstance(goal, (Integer, String)) or \
            not isinstance(goal, (Atom, Struct)):
        return _fail("permission_error", goal, chain)
    if isinstance(goal, Atom):
        name, args = goal.name, ()
    else:
        name, args = goal.name, goal.args
    key = (name, len(args))

    if name == ":" and args:
        # qualified calls reach outside this workspace, whatever the arity
        # a meta-wrapper gave the term
        return _fail("permission_error", goal, chain)
    if key in _CONTROL:
        for arg in args:
            bad = _check(arg, st, bindings, visited, chain)
            if bad is not None:
                return bad
        return None
    if key in _META and key in st.whitelist:
        for idx, extra in _META[key]:
            target = walk(args[idx], bindings)
            if isinstance(target, Var):
                # can't see through an unbound meta-call; blame the call
                return _fail("instantiation_error", goal, chain)
            if extra == 0:
                built = target
            elif isinstance(target, Atom):
                built = Struct(target.name,
                               tuple(Var() for _ in range(extra)))
            elif isinstance(target, Struct):
                built = Struct(target.name, target.args +
                               tuple(Var() for _ in range(extra)))
            else:
                return _fail("permission_error", goal, chain)
            bad = _check(built, st, bindings, visited, chain + (goal,))
            if bad is not None:
                return bad
        return None
    if key in _DB_UPDATES and key in st.whitelist:
        clause = walk(args[0], bindings)
        if isinstance(clause, Struct) and clause.name == ":-" \
                and len(clause.args) == 2:
            clause = walk(clause.args[0], bindings)
        if isinstance(clause, Struct) and clause.name == ":" \
                and len(clause.args) == 2:
            return _fail("permission_error", goal, chain)
        return None
    if key in st.whitelist:
        return None

    clauses = st.ws.clauses(key) if st.ws is not None else None
    if clauses is None:
        from .engine import BUILTINS
        if key in BUILTINS or key[0] == "call":
            # the machine would run this despite the restricted whitelist
            return _fail("permission_error", goal, chain)
        # unknown predicate: runs into a clean existence error at runtime
        return None
    if key in visited:
        return None
    visited = visited | {key}
    for cl in list(clauses):
        if st.budget <= 0:
            return _fail("permission_error", goal, chain)
        st.budget -= 1
        from .terms import rename_term
        renamed = rename_term(Struct(":-", (cl.head, cl.body)))
        head, body = renamed.args
        sub = dict(bindings)
        if not unify(goal, head, sub, []):
            continue
        bad = _check(body, st, sub, visited, chain + (goal,))
        if bad is not None:
            return bad
    return None


# ---------------------------------------------------------------------------
# directives

_OP_TYPES = {"xfx", "xfy", "yfx", "fy", "fx", "xf", "yf"}

ALLOWED_FLAGS = {
    "double_quotes": {"codes", "chars", "atom", "string"},
}


def _atom_list(term: Term) -> bool:
    if isinstance(term, Atom):
        return True
    while isinstance(term, Struct) and term.name in (".", ",") \
            and len(term.args) == 2:
        if not isinstance(term.args[0], Atom):
            return False
        term = term.args[1]
    return isinstance(term, Atom) and term.name == "[]"


def _indicator_tree(term: Term) -> bool:
    if isinstance(term, Struct) and term.name in (",", ".") \
            and len(term.args) == 2:
        return _indicator_tree(term.args[0]) and _indicator_tree(term.args[1])
    if isinstance(term, Atom) and term.name == "[]":
        return True
    return (isinstance(term, Struct) and term.name == "/"
            and len(term.args) == 2
            and isinstance(term.args[0], Atom)
            and isinstance(term.args[1], Integer))


def check_directive(d: Term, ws=None) -> str:
    """'safe' when the directive is in the allowed set, else
    'permission_error'. Value errors surface when the directive runs."""
    if not isinstance(d, Struct):
        return "permission_error"
    key = (d.name, len(d.args))
    if key == ("op", 3):
        pri, typ, names = d.args
        if isinstance(pri, Integer) and isinstance(typ, Atom) and \
                typ.name in _OP_TYPES and _atom_list(names):
            return "safe"
        return "permission_error"
    if key == ("set_prolog_flag", 2):
        flag, value = d.args
        if isinstance(flag, Atom) and isinstance(value, Atom) and \
                value.name in ALLOWED_FLAGS.get(flag.name, ()):
            return "safe"
        return "permission_error"
    if key in (("use_rendering", 1), ("use_rendering", 2)):
        return "safe" if isinstance(d.args[0], Atom) else "permission_error"
    if key == ("dynamic", 1):
        return "safe" if _indicator_tree(d.args[0]) else "permission_error"
    if key == ("include", 1):
        return "safe" if isinstance(d.args[0], (Atom, String)) \
            else "permission_error"
    return "permission_error"
