"""Builtin predicates.

Registration kinds:
  det   plain function -> bool
  gen   generator yielding SOL per solution (machine keeps a choicepoint)
  sub   generator running sub-queries; passes machine events through and
        returns bool
  macro function -> replacement goal Term (or None to fail)

Nondeterministic builtins bind via m.unify before each SOL and undo their
own marks when moving to the next alternative; the machine undoes
continuation bindings between solutions.
"""

from __future__ import annotations

import functools
import math
import time as _time

from .engine import BUILTINS, SOL, Clause, Machine, Prompt, builtin
from .errors import (EngineError, evaluation_error, instantiation_error,
                     permission_error, type_error)
from .terms import (NIL, Atom, Float, Integer, String, Struct, Term, Var,
                    canonical_key, compare_terms, mk_list, list_parts,
                    rename_term)
from .unify import walk
from .writer import write_term


def _cons(h: Term, t: Term) -> Struct:
    return Struct(".", (h, t))


def _proper_list(m: Machine, term: Term):
    """Resolved elements of a proper list, or None."""
    items = []
    node = walk(term, m.bindings)
    while isinstance(node, Struct) and node.name == "." \
            and len(node.args) == 2:
        items.append(node.args[0])
        node = walk(node.args[1], m.bindings)
    if isinstance(node, Atom) and node.name == "[]":
        return items
    return None


# ---------------------------------------------------------------------------
# arithmetic

_CONSTS = {"pi": math.pi, "e": math.e, "inf": math.inf,
           "infinite": math.inf, "nan": math.nan, "epsilon": 2.0 ** -52,
           "max_tagged_integer": (1 << 60) - 1, "random": None}


def _eval(m: Machine, term: Term):
    t = walk(term, m.bindings)
    if isinstance(t, Var):
        raise instantiation_error("is/2")
    if isinstance(t, Integer):
        return t.value
    if isinstance(t, Float):
        return t.value
    if isinstance(t, Atom):
        if t.name in _CONSTS and _CONSTS[t.name] is not None:
            return _CONSTS[t.name]
        raise type_error("evaluable", Struct("/", (t, Integer(0))), "is/2")
    if isinstance(t, Struct):
        name, args = t.name, t.args
        if len(args) == 1:
            return _eval1(m, name, _eval(m, args[0]), t)
        if len(args) == 2:
            return _eval2(m, name, _eval(m, args[0]), _eval(m, args[1]), t)
    raise type_error("evaluable", t, "is/2")


def _int2(name, a, b, t):
    if not (isinstance(a, int) and isinstance(b, int)):
        raise type_error("integer", t, name)
    return a, b


def _eval1(m, name, a, t):
    try:
        if name == "-":
            return -a
        if name == "+":
            return a
        if name == "abs":
            return abs(a)
        if name == "sign":
            return (a > 0) - (a < 0) if isinstance(a, int) \
                else math.copysign(1.0, a) * (a != 0)
        if name == "min":
            raise type_error("evaluable", t, "is/2")
        if name == "sqrt":
            return math.sqrt(a)
        if name in ("sin", "cos", "tan", "asin", "acos", "atan", "exp"):
            return getattr(math, name)(a)
        if name == "log":
            if a <= 0:
                raise evaluation_error("undefined")
            return math.log(a)
        if name == "log2":
            return math.log2(a)
        if name == "floor":
            return math.floor(a)
        if name == "ceiling":
            return math.ceil(a)
        if name == "round":
            return math.floor(a + 0.5) if not isinstance(a, int) else a
        if name == "truncate":
            return math.trunc(a)
        if name == "integer":
            return round(a) if not isinstance(a, int) else a
        if name == "float":
            return float(a)
        if name == "float_integer_part":
            return float(math.trunc(a))
        if name == "float_fractional_part":
            return a - math.trunc(a)
        if name == "\\":
            if not isinstance(a, int):
                raise type_error("integer", t, name)
            return ~a
        if name == "msb":
            if not isinstance(a, int) or a <= 0:
                raise type_error("integer", t, name)
            return a.bit_length() - 1
        if name == "succ":
            raise type_error("evaluable", t, "is/2")
    except ValueError:
        raise evaluation_error("undefined") from None
    except OverflowError:
        raise evaluation_error("float_overflow") from None
    raise type_error("evaluable",
                     Struct("/", (Atom(name), Integer(1))), "is/2")


def _eval2(m, name, a, b, t):
    try:
        if name == "+":
            return a + b
        if name == "-":
            return a - b
        if name == "*":
            return a * b
        if name == "/":
            if b == 0:
                raise evaluation_error("zero_divisor")
            if isinstance(a, int) and isinstance(b, int) and a % b == 0:
                return a // b
            return a / b
        if name == "//":
            a, b = _int2(name, a, b, t)
            if b == 0:
                raise evaluation_error("zero_divisor")
            q = abs(a) // abs(b)  # truncating division
            return q if (a >= 0) == (b >= 0) else -q
        if name == "div":
            a, b = _int2(name, a, b, t)
            if b == 0:
                raise evaluation_error("zero_divisor")
            return a // b
        if name == "mod":
            a, b = _int2(name, a, b, t)
            if b == 0:
                raise evaluation_error("zero_divisor")
            return a % b
        if name == "rem":
            a, b = _int2(name, a, b, t)
            if b == 0:
                raise evaluation_error("zero_divisor")
            return a - (abs(a) // abs(b)) * (b if (a >= 0) == (b >= 0)
                                             else -b)
        if name in ("**", "^"):
            if isinstance(a, int) and isinstance(b, int):
                if b >= 0:
                    return a ** b
                if a in (1, -1):
                    return a ** b
                return float(a) ** b
            return float(a) ** float(b)
        if name == "min":
            return min(a, b)
        if name == "max":
            return max(a, b)
        if name == ">>":
            a, b = _int2(name, a, b, t)
            return a >> b
        if name == "<<":
            a, b = _int2(name, a, b, t)
            return a << b
        if name == "/\\":
            a, b = _int2(name, a, b, t)
            return a & b
        if name == "\\/":
            a, b = _int2(name, a, b, t)
            return a | b
        if name == "xor":
            a, b = _int2(name, a, b, t)
            return a ^ b
        if name == "gcd":
            a, b = _int2(name, a, b, t)
            return math.gcd(a, b)
        if name == "atan2" or name == "atan":
            return math.atan2(a, b)
        if name == "copysign":
            return math.copysign(a, b)
    except ZeroDivisionError:
        raise evaluation_error("zero_divisor") from None
    except OverflowError:
        raise evaluation_error("float_overflow") from None
    raise type_error("evaluable",
                     Struct("/", (Atom(name), Integer(2))), "is/2")


def _num_term(value) -> Term:
    if isinstance(value, bool):
        raise AssertionError("bool leaked from arithmetic")
    if isinstance(value, int):
        return Integer(value)
    return Float(value)


@builtin("is", 2, "det")
def bi_is(m, args, depth):
    return m.unify(args[0], _num_term(_eval(m, args[1])))


def _arith_cmp(op):
    def fn(m, args, depth):
        a, b = _eval(m, args[0]), _eval(m, args[1])
        return op(a, b)
    return fn


for _name, _op in [("=:=", lambda a, b: a == b), ("=\\=", lambda a, b: a != b),
                   ("<", lambda a, b: a < b), (">", lambda a, b: a > b),
                   ("=<", lambda a, b: a <= b), (">=", lambda a, b: a >= b)]:
    BUILTINS[(_name, 2)] = ("det", _arith_cmp(_op))


# ---------------------------------------------------------------------------
# unification and comparison

@builtin("=", 2, "det")
def bi_unify(m, args, depth):
    return m.unify(args[0], args[1])


@builtin("\\=", 2, "det")
def bi_not_unify(m, args, depth):
    mark = m.mark()
    ok = m.unify(args[0], args[1])
    m.undo(mark)
    return not ok


@builtin("unify_with_occurs_check", 2, "det")
def bi_unify_oc(m, args, depth):
    return m.unify(args[0], args[1])


def _term_cmp(op):
    def fn(m, args, depth):
        c = compare_terms(m.resolve(args[0]), m.resolve(args[1]))
        return op(c)
    return fn


for _name, _op in [("==", lambda c: c == 0), ("\\==", lambda c: c != 0),
                   ("@<", lambda c: c < 0), ("@>", lambda c: c > 0),
                   ("@=<", lambda c: c <= 0), ("@>=", lambda c: c >= 0)]:
    BUILTINS[(_name, 2)] = ("det", _term_cmp(_op))


@builtin("compare", 3, "det")
def bi_compare(m, args, depth):
    c = compare_terms(m.resolve(args[1]), m.resolve(args[2]))
    order = Atom("<" if c < 0 else ">" if c > 0 else "=")
    return m.unify(args[0], order)


# ---------------------------------------------------------------------------
# type tests

_TYPE_TESTS = {
    "var": lambda t: isinstance(t, Var),
    "nonvar": lambda t: not isinstance(t, Var),
    "atom": lambda t: isinstance(t, Atom),
    "number": lambda t: isinstance(t, (Integer, Float)),
    "integer": lambda t: isinstance(t, Integer),
    "float": lambda t: isinstance(t, Float),
    "atomic": lambda t: isinstance(t, (Atom, Integer, Float, String)),
    "compound": lambda t: isinstance(t, Struct),
    "callable": lambda t: isinstance(t, (Atom, Struct)),
    "string": lambda t: isinstance(t, String),
}


def _type_test(check):
    def fn(m, args, depth):
        return check(walk(args[0], m.bindings))
    return fn


for _name, _check in _TYPE_TESTS.items():
    BUILTINS[(_name, 1)] = ("det", _type_test(_check))


@builtin("is_list", 1, "det")
def bi_is_list(m, args, depth):
    return _proper_list(m, args[0]) is not None


@builtin("ground", 1, "det")
def bi_ground(m, args, depth):
    from .terms import term_variables
    return not term_variables(m.resolve(args[0]))


# ---------------------------------------------------------------------------
# term construction and inspection

@builtin("functor", 3, "det")
def bi_functor(m, args, depth):
    t = walk(args[0], m.bindings)
    if not isinstance(t, Var):
        if isinstance(t, Struct):
            return m.unify(args[1], Atom(t.name)) and \
                m.unify(args[2], Integer(len(t.args)))
        return m.unify(args[1], t) and m.unify(args[2], Integer(0))
    name = walk(args[1], m.bindings)
    arity = walk(args[2], m.bindings)
    if isinstance(name, Var) or isinstance(arity, Var):
        raise instantiation_error("functor/3")
    if not isinstance(arity, Integer) or arity.value < 0:
        raise type_error("natural", arity, "functor/3")
    if arity.value == 0:
        return m.unify(t, name)
    if not isinstance(name, Atom):
        raise type_error("atom", name, "functor/3")
    return m.unify(t, Struct(name.name, tuple(Var() for _ in
                                              range(arity.value))))


@builtin("arg", 3, "gen")
def bi_arg(m, args, depth):
    n = walk(args[0], m.bindings)
    t = walk(args[1], m.bindings)
    if not isinstance(t, Struct):
        raise type_error("compound", t, "arg/3")
    if isinstance(n, Integer):
        if 1 <= n.value <= len(t.args):
            if m.unify(args[2], t.args[n.value - 1]):
                yield SOL
        return
    if not isinstance(n, Var):
        raise type_error("integer", n, "arg/3")
    for i, a in enumerate(t.args, start=1):
        mark = m.mark()
        if m.unify(n, Integer(i)) and m.unify(args[2], a):
            yield SOL
        m.undo(mark)


@builtin("=..", 2, "det")
def bi_univ(m, args, depth):
    t = walk(args[0], m.bindings)
    if not isinstance(t, Var):
        if isinstance(t, Struct):
            parts = [Atom(t.name), *t.args]
        else:
            parts = [t]
        return m.unify(args[1], mk_list(parts))
    items = _proper_list(m, args[1])
    if items is None:
        raise instantiation_error("=../2")
    if not items:
        raise type_error("list", args[1], "=../2")
    head = walk(items[0], m.bindings)
    if len(items) == 1:
        if isinstance(head, (Atom, Integer, Float, String)):
            return m.unify(t, head)
        raise type_error("atomic", head, "=../2")
    if not isinstance(head, Atom):
        raise type_error("atom", head, "=../2")
    return m.unify(t, Struct(head.name, tuple(items[1:])))


@builtin("copy_term", 2, "det")
def bi_copy_term(m, args, depth):
    # fresh variables are anonymous so they never display under the
    # original name alongside the original variable
    mapping: dict = {}

    def cp(x):
        if isinstance(x, Var):
            got = mapping.get(x.id)
            if got is None:
                got = Var("_")
                mapping[x.id] = got
            return got
        if isinstance(x, Struct):
            return Struct(x.name, tuple(cp(a) for a in x.args))
        return x

    return m.unify(args[1], cp(m.resolve(args[0])))


# ---------------------------------------------------------------------------
# atoms and strings

def _text_of(term: Term, context: str) -> str:
    if isinstance(term, Atom):
        return term.name
    if isinstance(term, String):
        return term.value
    if isinstance(term, Integer):
        return str(term.value)
    if isinstance(term, Float):
        return repr(term.value)
    raise type_error("atom", term, context)


@builtin("atom_length", 2, "det")
def bi_atom_length(m, args, depth):
    t = walk(args[0], m.bindings)
    if isinstance(t, Var):
        raise instantiation_error("atom_length/2")
    return m.unify(args[1], Integer(len(_text_of(t, "atom_length/2"))))


@builtin("atom_codes", 2, "det")
def bi_atom_codes(m, args, depth):
    t = walk(args[0], m.bindings)
    if not isinstance(t, Var):
        codes = [Integer(ord(c)) for c in _text_of(t, "atom_codes/2")]
        return m.unify(args[1], mk_list(codes))
    items = _proper_list(m, args[1])
    if items is None:
        raise instantiation_error("atom_codes/2")
    chars = []
    for item in items:
        item = walk(item, m.bindings)
        if not isinstance(item, Integer):
            raise type_error("integer", item, "atom_codes/2")
        chars.append(chr(item.value))
    return m.unify(t, Atom("".join(chars)))


def _parse_number(text: str, context: str) -> Term:
    text = text.strip()
    body = text[1:] if text.startswith("-") else text
    sign = -1 if text.startswith("-") else 1
    try:
        if body[:2].lower() in ("0x", "0o", "0b"):
            return Integer(sign * int(body, 0))
        return Integer(sign * int(body, 10))
    except ValueError:
        pass
    try:
        return Float(sign * float(body))
    except ValueError:
        raise type_error("number", Atom(text), context) from None


@builtin("number_codes", 2, "det")
def bi_number_codes(m, args, depth):
    t = walk(args[0], m.bindings)
    if isinstance(t, (Integer, Float)):
        codes = [Integer(ord(c)) for c in write_term(t)]
        return m.unify(args[1], mk_list(codes))
    if not isinstance(t, Var):
        raise type_error("number", t, "number_codes/2")
    items = _proper_list(m, args[1])
    if items is None:
        raise instantiation_error("number_codes/2")
    chars = []
    for item in items:
        item = walk(item, m.bindings)
        if not isinstance(item, Integer):
            raise type_error("integer", item, "number_codes/2")
        chars.append(chr(item.value))
    return m.unify(t, _parse_number("".join(chars), "number_codes/2"))


@builtin("number_chars", 2, "det")
def bi_number_chars(m, args, depth):
    t = walk(args[0], m.bindings)
    if isinstance(t, (Integer, Float)):
        chars = [Atom(c) for c in write_term(t)]
        return m.unify(args[1], mk_list(chars))
    if not isinstance(t, Var):
        raise type_error("number", t, "number_chars/2")
    items = _proper_list(m, args[1])
    if items is None:
        raise instantiation_error("number_chars/2")
    out = []
    for item in items:
        item = walk(item, m.bindings)
        if not isinstance(item, Atom):
            raise type_error("atom", item, "number_chars/2")
        out.append(item.name)
    return m.unify(t, _parse_number("".join(out), "number_chars/2"))


@builtin("atom_number", 2, "det")
def bi_atom_number(m, args, depth):
    t = walk(args[0], m.bindings)
    if isinstance(t, Var):
        n = walk(args[1], m.bindings)
        if not isinstance(n, (Integer, Float)):
            raise instantiation_error("atom_number/2")
        return m.unify(t, Atom(write_term(n)))
    text = _text_of(t, "atom_number/2")
    try:
        return m.unify(args[1], _parse_number(text, "atom_number/2"))
    except EngineError:
        return False  # non-numeric atoms simply fail


@builtin("char_code", 2, "det")
def bi_char_code(m, args, depth):
    t = walk(args[0], m.bindings)
    if isinstance(t, Atom) and len(t.name) == 1:
        return m.unify(args[1], Integer(ord(t.name)))
    if isinstance(t, Var):
        code = walk(args[1], m.bindings)
        if not isinstance(code, Integer):
            raise instantiation_error("char_code/2")
        return m.unify(t, Atom(chr(code.value)))
    raise type_error("character", t, "char_code/2")


@builtin("atom_chars", 2, "det")
def bi_atom_chars(m, args, depth):
    t = walk(args[0], m.bindings)
    if not isinstance(t, Var):
        chars = [Atom(c) for c in _text_of(t, "atom_chars/2")]
        return m.unify(args[1], mk_list(chars))
    items = _proper_list(m, args[1])
    if items is None:
        raise instantiation_error("atom_chars/2")
    out = []
    for item in items:
        item = walk(item, m.bindings)
        if not isinstance(item, Atom):
            raise type_error("atom", item, "atom_chars/2")
        out.append(item.name)
    return m.unify(t, Atom("".join(out)))


# ---------------------------------------------------------------------------
# lists

@builtin("between", 3, "gen")
def bi_between(m, args, depth):
    low = walk(args[0], m.bindings)
    high = walk(args[1], m.bindings)
    x = walk(args[2], m.bindings)
    if isinstance(low, Var) or isinstance(high, Var):
        raise instantiation_error("between/3")
    if not isinstance(low, Integer):
        raise type_error("integer", low, "between/3")
    unbounded = isinstance(high, Atom) and high.name in ("inf", "infinite")
    if not unbounded and not isinstance(high, Integer):
        raise type_error("integer", high, "between/3")
    if isinstance(x, Integer):
        if x.value >= low.value and (unbounded or x.value <= high.value):
            yield SOL
        return
    i = low.value
    while unbounded or i <= high.value:
        mark = m.mark()
        if m.unify(x, Integer(i)):
            yield SOL
        m.undo(mark)
        i += 1


@builtin("length", 2, "gen")
def bi_length(m, args, depth):
    node = walk(args[0], m.bindings)
    count = 0
    while isinstance(node, Struct) and node.name == "." \
            and len(node.args) == 2:
        count += 1
        node = walk(node.args[1], m.bindings)
    if isinstance(node, Atom) and node.name == "[]":
        if m.unify(args[1], Integer(count)):
            yield SOL
        return
    if not isinstance(node, Var):
        raise type_error("list", args[0], "length/2")
    n = walk(args[1], m.bindings)
    if isinstance(n, Integer):
        extra = n.value - count
        if extra >= 0 and m.unify(node, mk_list([Var() for _ in
                                                 range(extra)])):
            yield SOL
        return
    if not isinstance(n, Var):
        raise type_error("integer", n, "length/2")
    extra = 0
    while True:  # enumerate longer and longer lists; budget bounds this
        mark = m.mark()
        if m.unify(node, mk_list([Var() for _ in range(extra)])) and \
                m.unify(n, Integer(count + extra)):
            yield SOL
        m.undo(mark)
        extra += 1


@builtin("member", 2, "gen")
def bi_member(m, args, depth):
    x, node = args
    while True:
        node = walk(node, m.bindings)
        head, tail = Var(), Var()
        mark = m.mark()
        if not m.unify(node, _cons(head, tail)):
            m.undo(mark)
            return
        inner = m.mark()
        if m.unify(x, head):
            yield SOL
        m.undo(inner)
        node = tail


@builtin("memberchk", 2, "det")
def bi_memberchk(m, args, depth):
    x = args[0]
    items = _proper_list(m, args[1])
    if items is None:
        raise type_error("list", args[1], "memberchk/2")
    for item in items:
        if m.unify(x, item):
            return True
    return False


@builtin("append", 3, "gen")
def bi_append(m, args, depth):
    a, b, c = args
    while True:
        mark = m.mark()
        if m.unify(a, NIL) and m.unify(b, c):
            yield SOL
        m.undo(mark)
        head, ta, tc = Var(), Var(), Var()
        if not (m.unify(a, _cons(head, ta)) and m.unify(c, _cons(head, tc))):
            return
        a, c = ta, tc


@builtin("reverse", 2, "det")
def bi_reverse(m, args, depth):
    items = _proper_list(m, args[0])
    if items is None:
        back = _proper_list(m, args[1])
        if back is None:
            raise instantiation_error("reverse/2")
        return m.unify(args[0], mk_list(list(reversed(back))))
    return m.unify(args[1], mk_list(list(reversed(items))))


@builtin("nth0", 3, "gen")
def bi_nth0(m, args, depth):
    yield from _nth(m, args, 0)


@builtin("nth1", 3, "gen")
def bi_nth1(m, args, depth):
    yield from _nth(m, args, 1)


def _nth(m, args, base):
    n = walk(args[0], m.bindings)
    items = _proper_list(m, args[1])
    if items is None:
        raise instantiation_error("nth/3")
    if isinstance(n, Integer):
        idx = n.value - base
        if 0 <= idx < len(items) and m.unify(args[2], items[idx]):
            yield SOL
        return
    for i, item in enumerate(items):
        mark = m.mark()
        if m.unify(n, Integer(i + base)) and m.unify(args[2], item):
            yield SOL
        m.undo(mark)


@builtin("last", 2, "det")
def bi_last(m, args, depth):
    items = _proper_list(m, args[0])
    if not items:
        return False
    return m.unify(args[1], items[-1])


@builtin("msort", 2, "det")
def bi_msort(m, args, depth):
    items = _proper_list(m, args[0])
    if items is None:
        raise instantiation_error("msort/2")
    ordered = sorted((m.resolve(i) for i in items),
                     key=functools.cmp_to_key(compare_terms))
    return m.unify(args[1], mk_list(ordered))


@builtin("sort", 2, "det")
def bi_sort(m, args, depth):
    items = _proper_list(m, args[0])
    if items is None:
        raise instantiation_error("sort/2")
    ordered = sorted((m.resolve(i) for i in items),
                     key=functools.cmp_to_key(compare_terms))
    unique = [t for i, t in enumerate(ordered)
              if i == 0 or compare_terms(t, ordered[i - 1]) != 0]
    return m.unify(args[1], mk_list(unique))


@builtin("keysort", 2, "det")
def bi_keysort(m, args, depth):
    items = _proper_list(m, args[0])
    if items is None:
        raise instantiation_error("keysort/2")
    pairs = []
    for item in items:
        item = walk(item, m.bindings)
        if not (isinstance(item, Struct) and item.name == "-"
                and len(item.args) == 2):
            raise type_error("pair", item, "keysort/2")
        pairs.append(item)
    ordered = sorted(pairs, key=functools.cmp_to_key(
        lambda p, q: compare_terms(m.resolve(p.args[0]),
                                   m.resolve(q.args[0]))))
    return m.unify(args[1], mk_list(ordered))


@builtin("numlist", 3, "det")
def bi_numlist(m, args, depth):
    low = walk(args[0], m.bindings)
    high = walk(args[1], m.bindings)
    if not (isinstance(low, Integer) and isinstance(high, Integer)):
        raise instantiation_error("numlist/3")
    if low.value > high.value:
        return False
    return m.unify(args[2], mk_list([Integer(i) for i in
                                     range(low.value, high.value + 1)]))


@builtin("plus", 3, "det")
def bi_plus(m, args, depth):
    a, b, c = (walk(x, m.bindings) for x in args)
    known = [isinstance(t, Integer) for t in (a, b, c)]
    if known.count(True) < 2:
        raise instantiation_error("plus/3")
    if known[0] and known[1]:
        return m.unify(c, Integer(a.value + b.value))
    if known[0] and known[2]:
        return m.unify(b, Integer(c.value - a.value))
    return m.unify(a, Integer(c.value - b.value))


@builtin("succ", 2, "det")
def bi_succ(m, args, depth):
    a, b = (walk(x, m.bindings) for x in args)
    if isinstance(a, Integer):
        if a.value < 0:
            raise type_error("not_less_than_zero", a, "succ/2")
        return m.unify(b, Integer(a.value + 1))
    if isinstance(b, Integer):
        if b.value <= 0:
            return False
        return m.unify(a, Integer(b.value - 1))
    raise instantiation_error("succ/2")


# ---------------------------------------------------------------------------
# all-solutions and search wrappers

def _pump(m: Machine, goal: Term, depth: int, on_answer):
    """Run goal in a child machine; call on_answer() at each solution.
    on_answer returns True to stop the enumeration early."""
    sub = m.child()
    sub.push_call(goal, depth + 1)
    gen = sub.run()
    send = None
    while True:
        try:
            event = gen.send(send)
        except StopIteration:
            return
        if event[0] == "answer":
            send = "stop" if on_answer() else "more"
        else:
            send = yield event


@builtin("findall", 3, "sub")
def bi_findall(m, args, depth):
    template, goal, result = args
    mark = m.mark()
    acc = []

    def collect():
        acc.append(rename_term(m.resolve(template)))
        return False

    yield from _pump(m, goal, depth, collect)
    m.undo(mark)
    return m.unify(result, mk_list(acc))


@builtin("aggregate_all", 3, "sub")
def bi_aggregate_all(m, args, depth):
    spec, goal, result = args
    spec = walk(spec, m.bindings)
    mark = m.mark()
    if isinstance(spec, Atom) and spec.name == "count":
        n = 0

        def count():
            nonlocal n
            n += 1
            return False

        yield from _pump(m, goal, depth, count)
        m.undo(mark)
        return m.unify(result, Integer(n))
    if isinstance(spec, Struct) and len(spec.args) == 1 and \
            spec.name in ("count", "bag", "set", "sum", "max", "min"):
        template = spec.args[0]
        acc = []

        def collect():
            acc.append(rename_term(m.resolve(template)))
            return False

        yield from _pump(m, goal, depth, collect)
        m.undo(mark)
        if spec.name == "count":
            return m.unify(result, Integer(len(acc)))
        if spec.name == "bag":
            return m.unify(result, mk_list(acc))
        if spec.name == "set":
            ordered = sorted(acc, key=functools.cmp_to_key(compare_terms))
            unique = [t for i, t in enumerate(ordered)
                      if i == 0 or compare_terms(t, ordered[i - 1]) != 0]
            return m.unify(result, mk_list(unique))
        values = []
        for t in acc:
            if isinstance(t, Integer) or isinstance(t, Float):
                values.append(t.value)
            else:
                raise type_error("number", t, "aggregate_all/3")
        if spec.name == "sum":
            return m.unify(result, _num_term(sum(values) if values else 0))
        if not values:
            return False
        picked = max(values) if spec.name == "max" else min(values)
        return m.unify(result, _num_term(picked))
    raise type_error("aggregate_spec", spec, "aggregate_all/3")


@builtin("limit", 2, "gen")
def bi_limit(m, args, depth):
    n = walk(args[0], m.bindings)
    if not isinstance(n, Integer):
        raise type_error("integer", n, "limit/2")
    if n.value <= 0:
        return
    remaining = n.value
    sub = m.child()
    sub.push_call(args[1], depth + 1)
    gen = sub.run()
    send = None
    while remaining > 0:
        try:
            event = gen.send(send)
        except StopIteration:
            return
        if event[0] == "answer":
            remaining -= 1
            yield SOL
            send = "more" if remaining > 0 else "stop"
        else:
            send = yield event


@builtin("distinct", 2, "gen")
def bi_distinct(m, args, depth):
    witness, goal = args
    seen = set()
    sub = m.child()
    sub.push_call(goal, depth + 1)
    gen = sub.run()
    send = None
    while True:
        try:
            event = gen.send(send)
        except StopIteration:
            return
        if event[0] == "answer":
            key = canonical_key(m.resolve(witness))
            if key in seen:
                send = "more"
                continue
            seen.add(key)
            yield SOL
            send = "more"
        else:
            send = yield event


@builtin("order_by", 2, "gen")
def bi_order_by(m, args, depth):
    spec, goal = args
    items = _proper_list(m, spec)
    if items is None or not items:
        raise type_error("order_specification", spec, "order_by/2")
    directions = []
    keys = []
    for item in items:
        item = walk(item, m.bindings)
        if isinstance(item, Struct) and len(item.args) == 1 and \
                item.name in ("asc", "desc"):
            directions.append(1 if item.name == "asc" else -1)
            keys.append(item.args[0])
        else:
            directions.append(1)
            keys.append(item)
    pattern = Struct("row", (mk_list(keys), goal))
    mark = m.mark()
    rows = []

    def collect():
        rows.append(rename_term(m.resolve(pattern)))
        return False

    yield from _pump(m, goal, depth, collect)
    m.undo(mark)

    def compare_rows(p, q):
        pk = _proper_list(m, p.args[0]) or []
        qk = _proper_list(m, q.args[0]) or []
        for d, (x, y) in zip(directions, zip(pk, qk)):
            c = compare_terms(x, y)
            if c:
                return c * d
        return 0

    rows.sort(key=functools.cmp_to_key(compare_rows))
    for row in rows:
        mark = m.mark()
        if m.unify(pattern, row):
            yield SOL
        m.undo(mark)


@builtin("time", 1, "gen")
def bi_time(m, args, depth):
    started = _time.monotonic()
    steps0 = m.budget.steps
    sub = m.child()
    sub.push_call(args[0], depth + 1)
    gen = sub.run()
    send = None
    reported = False

    def report():
        nonlocal reported
        if not reported:
            reported = True
            secs = _time.monotonic() - started
            n = m.budget.steps - steps0
            m.output(f"% {n:,} inferences, {secs:.3f} seconds\n")

    while True:
        try:
            event = gen.send(send)
        except StopIteration:
            report()
            return
        if event[0] == "answer":
            report()
            yield SOL
            send = "more"
        else:
            send = yield event


@builtin("maplist", 2, "macro")
def bi_maplist2(m, args, depth):
    return _maplist(m, args[0], args[1:])


@builtin("maplist", 3, "macro")
def bi_maplist3(m, args, depth):
    return _maplist(m, args[0], args[1:])


@builtin("maplist", 4, "macro")
def bi_maplist4(m, args, depth):
    return _maplist(m, args[0], args[1:])


def _maplist(m: Machine, closure: Term, lists):
    length = None
    for lst in lists:
        items = _proper_list(m, lst)
        if items is not None:
            length = len(items)
            break
    if length is None:
        raise instantiation_error("maplist")
    columns = []
    for lst in lists:
        fresh = [Var() for _ in range(length)]
        if not m.unify(lst, mk_list(fresh)):
            return None
        columns.append(fresh)
    goal: Term = Atom("true")
    for row in reversed(list(zip(*columns))) if columns else []:
        call = Struct("call", (closure, *row))
        goal = call if (isinstance(goal, Atom) and goal.name == "true") \
            else Struct(",", (call, goal))
    return goal


# ---------------------------------------------------------------------------
# output, input

def _format_text(m, spec: Term) -> str:
    spec = walk(spec, m.bindings)
    if isinstance(spec, (Atom, String)):
        return _text_of(spec, "format/2")
    items = _proper_list(m, spec)
    if items is not None:
        return "".join(chr(walk(i, m.bindings).value) for i in items)
    raise type_error("text", spec, "format/2")


def _format(m, text: str, fmt_args: list) -> str:
    out = []
    it = iter(fmt_args)
    i = 0
    while i < len(text):
        c = text[i]
        if c != "~":
            out.append(c)
            i += 1
            continue
        i += 1
        if i >= len(text):
            break
        num = ""
        while i < len(text) and text[i].isdigit():
            num += text[i]
            i += 1
        d = text[i]
        i += 1
        if d == "~":
            out.append("~")
        elif d == "n":
            out.append("\n" * (int(num) if num else 1))
        elif d in "wp":
            out.append(write_term(m.resolve(next(it)), ops=m.ws.ops))
        elif d == "q":
            out.append(write_term(m.resolve(next(it)), quoted=True,
                                  ops=m.ws.ops))
        elif d == "a":
            out.append(_text_of(walk(next(it), m.bindings), "format/2"))
        elif d == "d":
            v = walk(next(it), m.bindings)
            if not isinstance(v, Integer):
                raise type_error("integer", v, "format/2")
            out.append(str(v.value))
        elif d in "feg":
            v = walk(next(it), m.bindings)
            if not isinstance(v, (Integer, Float)):
                raise type_error("number", v, "format/2")
            digits = int(num) if num else 6
            out.append(f"{v.value:.{digits}{d}}")
        elif d == "s":
            v = next(it)
            items = _proper_list(m, v)
            if items is None:
                raise type_error("text", v, "format/2")
            out.append("".join(chr(walk(x, m.bindings).value)
                               for x in items))
        elif d in "t|+":
            pass  # column control: accepted, not implemented
        else:
            raise type_error("format_directive", Atom(d), "format/2")
    return "".join(out)


@builtin("format", 1, "det")
def bi_format1(m, args, depth):
    m.output(_format(m, _format_text(m, args[0]), []))
    return True


@builtin("format", 2, "det")
def bi_format2(m, args, depth):
    fmt_args = _proper_list(m, args[1])
    if fmt_args is None:
        fmt_args = [args[1]]
    m.output(_format(m, _format_text(m, args[0]), fmt_args))
    return True


@builtin("write", 1, "det")
def bi_write(m, args, depth):
    m.output(write_term(m.resolve(args[0]), ops=m.ws.ops))
    return True


@builtin("print", 1, "det")
def bi_print(m, args, depth):
    m.output(write_term(m.resolve(args[0]), quoted=True, ops=m.ws.ops))
    return True


@builtin("writeln", 1, "det")
def bi_writeln(m, args, depth):
    m.output(write_term(m.resolve(args[0]), ops=m.ws.ops) + "\n")
    return True


@builtin("writeq", 1, "det")
def bi_writeq(m, args, depth):
    m.output(write_term(m.resolve(args[0]), quoted=True, ops=m.ws.ops))
    return True


@builtin("write_canonical", 1, "det")
def bi_write_canonical(m, args, depth):
    m.output(write_term(m.resolve(args[0]), quoted=True))
    return True


@builtin("nl", 0, "det")
def bi_nl(m, args, depth):
    m.output("\n")
    return True


@builtin("tab", 1, "det")
def bi_tab(m, args, depth):
    n = _eval(m, args[0])
    if not isinstance(n, int) or n < 0:
        raise type_error("natural", args[0], "tab/1")
    m.output(" " * n)
    return True


@builtin("read", 1, "sub")
def bi_read(m, args, depth):
    reply = yield ("prompt", Prompt(m.resolve(args[0])))
    return m.unify(args[0], reply)


# ---------------------------------------------------------------------------
# clause database updates (always the engine's own workspace)

def _clause_pair(m, term: Term, context: str):
    t = m.resolve(term)
    if isinstance(t, Struct) and t.name == ":-" and len(t.args) == 2:
        head, body = t.args
    else:
        head, body = t, Atom("true")
    if isinstance(head, Struct) and head.name == ":" and len(head.args) == 2:
        raise permission_error("modify", "module_clause", head, context)
    if isinstance(head, Var):
        raise instantiation_error(context)
    if not isinstance(head, (Atom, Struct)):
        raise type_error("callable", head, context)
    return head, body


def _assert(m, args, front: bool):
    head, body = _clause_pair(m, args[0], "assert/1")
    renamed = rename_term(Struct(":-", (head, body)))
    clause = Clause(renamed.args[0], renamed.args[1])
    key = m.ws.add_clause(clause, front=front)
    m.ws.dynamic.add(key)
    return True


@builtin("assert", 1, "det")
def bi_assert(m, args, depth):
    return _assert(m, args, front=False)


@builtin("assertz", 1, "det")
def bi_assertz(m, args, depth):
    return _assert(m, args, front=False)


@builtin("asserta", 1, "det")
def bi_asserta(m, args, depth):
    return _assert(m, args, front=True)


@builtin("retract", 1, "gen")
def bi_retract(m, args, depth):
    head, body = _clause_pair(m, args[0], "retract/1")
    if isinstance(head, Atom):
        key = (head.name, 0)
    else:
        key = (head.name, len(head.args))
    bucket = m.ws.preds.get(key, [])
    for clause in list(bucket):
        mark = m.mark()
        renamed = rename_term(Struct(":-", (clause.head, clause.body)))
        if m.unify(head, renamed.args[0]) and \
                m.unify(body, renamed.args[1]):
            if clause in bucket:
                bucket.remove(clause)
                m.ws.clause_count -= 1
            yield SOL
        m.undo(mark)
