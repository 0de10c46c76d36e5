"""Term output.

``write_term`` prints a term using operator notation with minimal
parentheses. With ``quoted=True`` the output re-reads as an equal term
(variables compare by name): atoms are quoted when their spelling needs
it, and adjacent fragments that would fuse into one token get a
separating space.
"""

from __future__ import annotations

import re
from typing import Optional

from .terms import (LIST_FUNCTOR, Atom, Float, Integer, String, Struct, Term,
                    Var)
from .tokens import SYMBOL_CHARS
from .syntax import DEFAULT_OPS, OperatorTable

_PLAIN_ATOM = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")
_BARE = {"[]", "{}", "!", ";"}

_ESCAPE_NAMES = {
    # \0 needs its closing backslash or it would fuse with a following escape
    "\\": "\\\\", "\a": "\\a", "\b": "\\b", "\f": "\\f", "\n": "\\n",
    "\r": "\\r", "\t": "\\t", "\v": "\\v", "\0": "\\0\\",
}


def atom_needs_quotes(name: str) -> bool:
    if name in _BARE:
        return False
    if not name or name == ".":
        return True
    if _PLAIN_ATOM.match(name):
        return False
    if all(c in SYMBOL_CHARS for c in name):
        return False
    return True


def quote_atom(name: str) -> str:
    return "'" + _escape_body(name, "'") + "'"


def _escape_body(text: str, quote: str) -> str:
    out = []
    for c in text:
        if c == quote:
            out.append("\\" + quote)
        elif c in _ESCAPE_NAMES:
            out.append(_ESCAPE_NAMES[c])
        elif c.isprintable() or c == " ":
            out.append(c)
        else:
            out.append(f"\\x{ord(c):x}\\")
    return "".join(out)


def atom_text(name: str, quoted: bool) -> str:
    if quoted and atom_needs_quotes(name):
        return quote_atom(name)
    return name


def _ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


class _Buf:
    """Joins fragments, spacing them apart whenever they would re-tokenize
    as one token (symbol runs, identifiers, name+'(' functor fusion)."""

    def __init__(self):
        self.parts: list[str] = []
        self.last = ""

    def add(self, text: str):
        if not text:
            return
        first = text[0]
        if self.last:
            fuse = (
                (self.last in SYMBOL_CHARS and first in SYMBOL_CHARS)
                or (_ident_char(self.last) and _ident_char(first))
                # ';', '!' and a closing quote also fuse with '(' into a
                # functor token
                or (first == "(" and (self.last in SYMBOL_CHARS
                                      or _ident_char(self.last)
                                      or self.last in ";!'"))
                or (first == "'" and self.last.isdigit())
            )
            if fuse:
                self.parts.append(" ")
        self.parts.append(text)
        self.last = text[-1]

    def add_functor(self, name_text: str):
        # name and '(' must stay glued so it re-reads as a compound
        self.add(name_text + "(")

    def __str__(self):
        return "".join(self.parts)


class _Writer:
    def __init__(self, quoted: bool, ops: OperatorTable,
                 max_depth: Optional[int]):
        self.quoted = quoted
        self.ops = ops
        self.max_depth = max_depth
        self.buf = _Buf()

    def write(self, term: Term, maxp: int, depth: int):
        if isinstance(term, Var):
            self.buf.add(term.name if term.name != "_" else f"_G{term.id}")
        elif isinstance(term, Integer):
            self.buf.add(str(term.value))
        elif isinstance(term, Float):
            self.buf.add(self._float_text(term.value))
        elif isinstance(term, String):
            if self.quoted:
                self.buf.add('"' + _escape_body(term.value, '"') + '"')
            else:
                self.buf.add(term.value)
        elif isinstance(term, Atom):
            self.buf.add(atom_text(term.name, self.quoted))
        else:
            self._compound(term, maxp, depth)

    @staticmethod
    def _float_text(value: float) -> str:
        text = repr(value)
        if text.endswith(".0"):
            return text
        if "e" in text or "E" in text or "." in text or text in ("inf", "nan", "-inf"):
            return text
        return text + ".0"

    def _too_deep(self, depth: int) -> bool:
        return self.max_depth is not None and depth >= self.max_depth

    def _compound(self, term: Struct, maxp: int, depth: int):
        if self._too_deep(depth):
            self.buf.add("...")
            return
        name, arity = term.name, len(term.args)
        if name == LIST_FUNCTOR and arity == 2:
            self._list(term, depth)
            return
        if name == "{}" and arity == 1:
            self.buf.add("{")
            self.write(term.args[0], 1200, depth + 1)
            self.buf.add("}")
            return
        text = atom_text(name, self.quoted)
        # operator notation needs the bare spelling; ',' is punctuation and
        # always legal in operator position
        clean = text == name or name == ","
        optext = "," if name == "," else text
        if clean and arity == 2:
            entry = self.ops.infix(name)
            if entry:
                pri, typ = entry
                lmax = pri if typ == "yfx" else pri - 1
                rmax = pri if typ == "xfy" else pri - 1
                open_paren = pri > maxp
                if open_paren:
                    self.buf.add("(")
                self._operand(term.args[0], lmax, depth + 1)
                self.buf.add(optext)
                self._operand(term.args[1], rmax, depth + 1)
                if open_paren:
                    self.buf.add(")")
                return
        if clean and arity == 1:
            entry = self.ops.prefix(name)
            if entry and not (name == "-" and self._nonneg_number(term.args[0])):
                pri, typ = entry
                amax = pri if typ == "fy" else pri - 1
                open_paren = pri > maxp
                if open_paren:
                    self.buf.add("(")
                self.buf.add(optext)
                self._operand(term.args[0], amax, depth + 1)
                if open_paren:
                    self.buf.add(")")
                return
            entry = self.ops.postfix(name)
            if entry:
                pri, typ = entry
                amax = pri if typ == "yf" else pri - 1
                open_paren = pri > maxp
                if open_paren:
                    self.buf.add("(")
                self._operand(term.args[0], amax, depth + 1)
                self.buf.add(optext)
                if open_paren:
                    self.buf.add(")")
                return
        self.buf.add_functor(text)
        for i, arg in enumerate(term.args):
            if i:
                self.buf.add(",")
            self.write(arg, 999, depth + 1)
        self.buf.add(")")

    def _operand(self, term: Term, maxp: int, depth: int):
        # a bare operator atom as operand would be read as an operator
        if isinstance(term, Atom) and self.ops.is_operator(term.name) \
                and not atom_needs_quotes(term.name):
            self.buf.add("(")
            self.buf.add(term.name)
            self.buf.add(")")
            return
        self.write(term, maxp, depth)

    @staticmethod
    def _nonneg_number(term: Term) -> bool:
        # -(1) must not print as -1, which would re-read as a literal
        return (isinstance(term, Integer) and term.value >= 0) or \
            (isinstance(term, Float) and term.value >= 0)

    def _list(self, term: Struct, depth: int):
        self.buf.add("[")
        first = True
        node: Term = term
        d = depth
        while isinstance(node, Struct) and node.name == LIST_FUNCTOR \
                and len(node.args) == 2:
            if not first:
                self.buf.add(",")
            if self._too_deep(d):
                self.buf.add("...")
                self.buf.add("]")
                return
            self.write(node.args[0], 999, d + 1)
            first = False
            node = node.args[1]
            d += 1
        if not (isinstance(node, Atom) and node.name == "[]"):
            self.buf.add("|")
            self.write(node, 999, d + 1)
        self.buf.add("]")


def write_term(term: Term, quoted: bool = False,
               ops: Optional[OperatorTable] = None,
               max_depth: Optional[int] = None) -> str:
    writer = _Writer(quoted, ops or DEFAULT_OPS, max_depth)
    writer.write(term, 1200, 0)
    return str(writer.buf)


def writeq(term: Term, ops: Optional[OperatorTable] = None) -> str:
    return write_term(term, quoted=True, ops=ops)
