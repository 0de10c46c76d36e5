"""Unification over a mutable binding store with trail-based undo.

Bindings map ``Var.id`` to terms. ``unify`` records each new binding on
the trail so callers can roll back to a mark on failure or backtracking.
The occurs check is on by default: no variable is ever bound to a term
containing itself, keeping every substitution idempotent.
"""

from __future__ import annotations

from typing import Optional

from .terms import Atom, Float, Integer, String, Struct, Term, Var

Bindings = dict  # Var.id -> Term
Trail = list  # Var.id in binding order


def walk(term: Term, bindings: Bindings) -> Term:
    """Follow bindings until an unbound variable or non-variable."""
    while isinstance(term, Var):
        bound = bindings.get(term.id)
        if bound is None:
            return term
        term = bound
    return term


def resolve(term: Term, bindings: Bindings) -> Term:
    """Deep-substitute bindings, leaving unbound variables in place.

    Iterative postorder: answers can contain lists far deeper than the
    Python recursion limit."""
    term = walk(term, bindings)
    if not isinstance(term, Struct):
        return term
    instr = [(False, term)]
    values: list = []
    while instr:
        build, node = instr.pop()
        if build:
            n = len(node.args)
            args = tuple(values[len(values) - n:])
            del values[len(values) - n:]
            values.append(node if args == node.args
                          else Struct(node.name, args))
            continue
        node = walk(node, bindings)
        if isinstance(node, Struct):
            instr.append((True, node))
            for arg in reversed(node.args):
                instr.append((False, arg))
        else:
            values.append(node)
    return values[0]


def occurs(var: Var, term: Term, bindings: Bindings) -> bool:
    stack = [term]
    while stack:
        t = walk(stack.pop(), bindings)
        if isinstance(t, Var):
            if t.id == var.id:
                return True
        elif isinstance(t, Struct):
            stack.extend(t.args)
    return False


def bind(var: Var, term: Term, bindings: Bindings, trail: Trail):
    bindings[var.id] = term
    trail.append(var.id)


def undo_to(mark: int, bindings: Bindings, trail: Trail):
    while len(trail) > mark:
        del bindings[trail.pop()]


def unify(a: Term, b: Term, bindings: Bindings, trail: Trail,
          occurs_check: bool = True) -> bool:
    """Unify in place; on failure the caller undoes via its trail mark."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = walk(x, bindings)
        y = walk(y, bindings)
        if x is y:
            continue
        if isinstance(x, Var):
            if isinstance(y, Var) and y.id == x.id:
                continue
            if occurs_check and occurs(x, y, bindings):
                return False
            bind(x, y, bindings, trail)
        elif isinstance(y, Var):
            if occurs_check and occurs(y, x, bindings):
                return False
            bind(y, x, bindings, trail)
        elif isinstance(x, Atom) and isinstance(y, Atom):
            if x.name != y.name:
                return False
        elif isinstance(x, Integer) and isinstance(y, Integer):
            if x.value != y.value:
                return False
        elif isinstance(x, Float) and isinstance(y, Float):
            if x.value != y.value:
                return False
        elif isinstance(x, String) and isinstance(y, String):
            if x.value != y.value:
                return False
        elif isinstance(x, Struct) and isinstance(y, Struct):
            if x.name != y.name or len(x.args) != len(y.args):
                return False
            stack.extend(zip(x.args, y.args))
        else:
            return False
    return True


def unify_terms(a: Term, b: Term,
                bindings: Optional[Bindings] = None,
                occurs_check: bool = True) -> Optional[Bindings]:
    """Pure variant: returns an extended copy of ``bindings`` or None."""
    work = dict(bindings) if bindings else {}
    trail: Trail = []
    if unify(a, b, work, trail, occurs_check):
        return work
    return None
