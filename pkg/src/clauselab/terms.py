"""Term representation shared by every other module.

Terms are immutable values: atoms, variables, integers, floats, strings and
compounds. Variables carry the name they were read with; identity (used by
unification) is a hidden serial number, so two variables named ``X`` in
different clauses never alias.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

_var_counter = itertools.count(1)


@dataclass(frozen=True)
class Atom:
    name: str

    def __post_init__(self):
        if not isinstance(self.name, str):
            raise TypeError("atom name must be a string")

    def __repr__(self):
        return f"Atom({self.name!r})"


@dataclass(frozen=True, eq=False)
class Var:
    name: str = "_"
    id: int = field(default_factory=lambda: next(_var_counter))

    def __eq__(self, other):
        return isinstance(other, Var) and other.id == self.id

    def __hash__(self):
        return hash(self.id)

    def __repr__(self):
        return f"Var({self.name}_{self.id})"


@dataclass(frozen=True)
class Integer:
    value: int

    def __repr__(self):
        return f"Integer({self.value})"


@dataclass(frozen=True)
class Float:
    value: float

    def __repr__(self):
        return f"Float({self.value})"


@dataclass(frozen=True)
class String:
    value: str

    def __repr__(self):
        return f"String({self.value!r})"


@dataclass(frozen=True)
class Struct:
    name: str
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError("compound terms need at least one argument; use Atom")
        if not self.name:
            raise ValueError("compound functor name must be non-empty")

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def indicator(self) -> tuple:
        return (self.name, len(self.args))

    def __repr__(self):
        return f"Struct({self.name!r}, {list(self.args)!r})"


Term = Union[Atom, Var, Integer, Float, String, Struct]

NIL = Atom("[]")
EMPTY_BLOCK = Atom("{}")
TRUE = Atom("true")
LIST_FUNCTOR = "."


def mk_struct(name: str, args) -> Term:
    """Build a compound, collapsing arity 0 to an atom."""
    args = tuple(args)
    if not args:
        return Atom(name)
    return Struct(name, args)


def mk_list(items, tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = Struct(LIST_FUNCTOR, (item, out))
    return out


def list_parts(t: Term) -> tuple[list, Term]:
    """Split a list skeleton into (elements, tail). Tail is NIL for proper lists."""
    items = []
    while isinstance(t, Struct) and t.name == LIST_FUNCTOR and t.arity == 2:
        items.append(t.args[0])
        t = t.args[1]
    return items, t


def proper_list(t: Term) -> Optional[list]:
    items, tail = list_parts(t)
    if tail == NIL:
        return items
    return None


def indicator(t: Term) -> Optional[tuple]:
    """(name, arity) of an atom or compound; None for anything else."""
    if isinstance(t, Atom):
        return (t.name, 0)
    if isinstance(t, Struct):
        return t.indicator
    return None


def subterms(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        x = stack.pop()
        yield x
        if isinstance(x, Struct):
            stack.extend(reversed(x.args))


def term_variables(t: Term) -> list[Var]:
    """Free variables in first-occurrence order."""
    seen = set()
    out = []
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            if x.id not in seen:
                seen.add(x.id)
                out.append(x)
        elif isinstance(x, Struct):
            stack.extend(reversed(x.args))
    return out


def term_depth(t: Term) -> int:
    depth = 0
    stack = [(t, 1)]
    while stack:
        x, d = stack.pop()
        depth = max(depth, d)
        if isinstance(x, Struct):
            stack.extend((a, d + 1) for a in x.args)
    return depth


def struct_eq(a: Term, b: Term) -> bool:
    """Structural equality: same variant, name/value, pairwise-equal arguments.

    Variables compare by their source name, so ``parse(write(t))`` can be
    checked without sharing Var identities.
    """
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if isinstance(x, Var) and isinstance(y, Var):
            if x.name != y.name:
                return False
        elif isinstance(x, Struct) and isinstance(y, Struct):
            if x.name != y.name or x.arity != y.arity:
                return False
            stack.extend(zip(x.args, y.args))
        elif type(x) is not type(y) or x != y:
            return False
    return True


def variant(a: Term, b: Term) -> bool:
    """True when a and b are equal up to a bijective renaming of variables."""
    fwd: dict[int, int] = {}
    bwd: dict[int, int] = {}
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if isinstance(x, Var) and isinstance(y, Var):
            if fwd.setdefault(x.id, y.id) != y.id:
                return False
            if bwd.setdefault(y.id, x.id) != x.id:
                return False
        elif isinstance(x, Struct) and isinstance(y, Struct):
            if x.name != y.name or x.arity != y.arity:
                return False
            stack.extend(zip(x.args, y.args))
        elif type(x) is not type(y) or x != y:
            return False
    return True


def rename_term(t: Term, mapping: Optional[dict] = None) -> Term:
    """Copy t with fresh variables (copy_term)."""
    if mapping is None:
        mapping = {}

    def cp(x):
        if isinstance(x, Var):
            got = mapping.get(x.id)
            if got is None:
                got = Var(x.name)
                mapping[x.id] = got
            return got
        if isinstance(x, Struct):
            return Struct(x.name, tuple(cp(a) for a in x.args))
        return x

    return cp(t)


def canonical_key(t: Term):
    """Hashable key identifying t up to variable renaming (variant key)."""
    numbering: dict[int, int] = {}
    out = []
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            n = numbering.setdefault(x.id, len(numbering))
            out.append(("v", n))
        elif isinstance(x, Atom):
            out.append(("a", x.name))
        elif isinstance(x, Integer):
            out.append(("i", x.value))
        elif isinstance(x, Float):
            out.append(("f", x.value))
        elif isinstance(x, String):
            out.append(("s", x.value))
        else:
            out.append(("c", x.name, x.arity))
            stack.extend(reversed(x.args))
    return tuple(out)


_ORDER = {Var: 0, Float: 1, Integer: 1, Atom: 2, String: 3, Struct: 4}


def compare_terms(a: Term, b: Term) -> int:
    """Standard order of terms: Var < Number < Atom < String < Compound."""
    oa, ob = _ORDER[type(a)], _ORDER[type(b)]
    if oa != ob:
        return -1 if oa < ob else 1
    if isinstance(a, Var):
        return (a.id > b.id) - (a.id < b.id)
    if isinstance(a, (Integer, Float)):
        va, vb = a.value, b.value
        if va != vb:
            return -1 if va < vb else 1
        # equal value: Float sorts before Integer
        fa, fb = isinstance(a, Float), isinstance(b, Float)
        if fa == fb:
            return 0
        return -1 if fa else 1
    if isinstance(a, (Atom, String)):
        ka, kb = (a.name, b.name) if isinstance(a, Atom) else (a.value, b.value)
        if ka == kb:
            return 0
        return -1 if ka < kb else 1
    # compounds: arity, then name, then arguments left to right
    if a.arity != b.arity:
        return -1 if a.arity < b.arity else 1
    if a.name != b.name:
        return -1 if a.name < b.name else 1
    for x, y in zip(a.args, b.args):
        c = compare_terms(x, y)
        if c:
            return c
    return 0
