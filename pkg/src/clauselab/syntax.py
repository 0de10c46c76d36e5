"""Operator table and term reader.

``parse_term`` turns source text into a term, a map of source variable
names, and a layout tree holding a span for every subterm. Errors carry a
span and message. The reader is driven by an operator table that programs
may extend locally through ``:- op/3``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .terms import (LIST_FUNCTOR, NIL, Atom, Float, Integer, String, Struct,
                    Term, Var, mk_list, mk_struct)
from .tokens import LexToken, SourceSpan, tokenize

PREFIX_TYPES = ("fy", "fx")
INFIX_TYPES = ("xfx", "xfy", "yfx")
POSTFIX_TYPES = ("xf", "yf")
OP_TYPES = PREFIX_TYPES + INFIX_TYPES + POSTFIX_TYPES

# names whose syntax is structural, not an operator definition
PROTECTED_OP_NAMES = {",", "|", "[]", "{}"}


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self):
        return f"{self.message} at {self.span.line}:{self.span.column}"


class OperatorTable:
    """Priorities 1..1200; at most one prefix, infix, postfix entry per name."""

    def __init__(self, entries: Optional[dict] = None):
        # name -> {"prefix"|"infix"|"postfix": (priority, type)}
        self._entries: dict[str, dict] = {}
        if entries:
            for name, slots in entries.items():
                self._entries[name] = dict(slots)

    @staticmethod
    def fixity_of(op_type: str) -> str:
        if op_type in PREFIX_TYPES:
            return "prefix"
        if op_type in INFIX_TYPES:
            return "infix"
        if op_type in POSTFIX_TYPES:
            return "postfix"
        raise ValueError(f"unknown operator type {op_type!r}")

    def copy(self) -> "OperatorTable":
        return OperatorTable(self._entries)

    def add(self, priority: int, op_type: str, name: str):
        fixity = self.fixity_of(op_type)
        if name in PROTECTED_OP_NAMES:
            raise ValueError(f"cannot redefine operator {name!r}")
        if not 0 <= priority <= 1200:
            raise ValueError("operator priority must be in 0..1200")
        slots = self._entries.setdefault(name, {})
        if priority == 0:
            slots.pop(fixity, None)
            if not slots:
                self._entries.pop(name, None)
        else:
            slots[fixity] = (priority, op_type)

    def prefix(self, name: str):
        return self._entries.get(name, {}).get("prefix")

    def infix(self, name: str):
        return self._entries.get(name, {}).get("infix")

    def postfix(self, name: str):
        return self._entries.get(name, {}).get("postfix")

    def is_operator(self, name: str) -> bool:
        return name in self._entries

    def entries(self):
        for name, slots in sorted(self._entries.items()):
            for fixity, (pri, typ) in sorted(slots.items()):
                yield (name, pri, typ, fixity)


_STANDARD = [
    (1200, "xfx", [":-", "-->"]),
    (1200, "fx", [":-", "?-"]),
    (1150, "fx", ["dynamic", "discontiguous", "initialization", "multifile",
                  "public", "table"]),
    (1100, "xfy", [";"]),
    (1050, "xfy", ["->", "*->"]),
    (1000, "xfy", [","]),
    (900, "fy", ["\\+"]),
    (700, "xfx", ["=", "\\=", "==", "\\==", "@<", "@>", "@=<", "@>=", "=..",
                  "is", "=:=", "=\\=", "<", ">", "=<", ">="]),
    (500, "yfx", ["+", "-", "/\\", "\\/", "xor"]),
    (400, "yfx", ["*", "/", "//", "rem", "mod", "div", "<<", ">>"]),
    (200, "xfx", ["**"]),
    (200, "xfy", ["^", ":"]),
    (200, "fy", ["-", "+", "\\"]),
]


def standard_operators() -> OperatorTable:
    table = OperatorTable()
    for pri, typ, names in _STANDARD:
        for name in names:
            slots = table._entries.setdefault(name, {})
            slots[table.fixity_of(typ)] = (pri, typ)
    return table


DEFAULT_OPS = standard_operators()

_NAMED_ESCAPES = {
    "a": "\a", "b": "\b", "f": "\f", "n": "\n", "r": "\r", "t": "\t",
    "v": "\v", "e": "\x1b", "0": "\0", "\\": "\\", "'": "'", '"': '"',
    "`": "`",
}


def unescape_quoted(body: str, quote: str, span: SourceSpan) -> str:
    """Decode the body (without surrounding quotes) of a quoted atom/string."""
    out = []
    i = 0
    n = len(body)
    while i < n:
        c = body[i]
        if c == quote and i + 1 < n and body[i + 1] == quote:
            out.append(quote)
            i += 2
            continue
        if c != "\\":
            out.append(c)
            i += 1
            continue
        i += 1
        if i >= n:
            raise ParseError("unterminated escape sequence", span)
        e = body[i]
        if e == "\n":  # line continuation
            i += 1
            continue
        if e == "x":
            j = i + 1
            while j < n and body[j] in "0123456789abcdefABCDEF":
                j += 1
            if j == i + 1 or j >= n or body[j] != "\\":
                raise ParseError("invalid \\x escape (expected \\xHEX\\)", span)
            out.append(chr(int(body[i + 1:j], 16)))
            i = j + 1
            continue
        if e.isdigit():
            j = i
            while j < n and body[j] in "01234567":
                j += 1
            if j < n and body[j] == "\\" and j > i:
                out.append(chr(int(body[i:j], 8)))
                i = j + 1
                continue
            if e == "0" and (j == n or body[j] != "\\"):
                # plain \0 without terminator, accepted as NUL
                out.append("\0")
                i += 1
                continue
            raise ParseError("invalid octal escape (expected \\OCTAL\\)", span)
        if e in _NAMED_ESCAPES:
            out.append(_NAMED_ESCAPES[e])
            i += 1
            continue
        raise ParseError(f"unsupported escape sequence \\{e}", span)
    return "".join(out)


def atom_name(tok: LexToken) -> str:
    """Decode an atom/functor token's text to the atom's name."""
    if tok.text.startswith("'"):
        return unescape_quoted(tok.text[1:-1], "'", tok.span)
    return tok.text


def number_value(tok: LexToken):
    text = tok.text
    span = tok.span
    try:
        if text.startswith("0'"):
            body = text[2:]
            if body in ("''", "'''"):
                return Integer(ord("'"))
            if body.startswith("\\"):
                decoded = unescape_quoted(body, "'", span)
                if len(decoded) != 1:
                    raise ParseError("invalid character code", span)
                return Integer(ord(decoded))
            if len(body) != 1:
                raise ParseError("invalid character code", span)
            return Integer(ord(body))
        if len(text) > 1 and text[0] == "0" and text[1] in "xXoObB":
            return Integer(int(text, 0))
        if "." in text or "e" in text or "E" in text:
            return Float(float(text))
        return Integer(int(text))
    except ParseError:
        raise
    except ValueError:
        raise ParseError(f"malformed number {text!r}", span) from None


@dataclass
class Layout:
    """Span tree mirroring term structure; children follow argument order."""
    span: SourceSpan
    children: list = field(default_factory=list)


@dataclass
class ParseResult:
    term: Term
    var_names: dict  # source name -> Var (anonymous _ excluded)
    var_counts: dict  # source name -> occurrence count
    layout: Layout
    end: int  # offset just past the fullstop


def _join_spans(a: SourceSpan, b: SourceSpan) -> SourceSpan:
    first = a if a.start <= b.start else b
    return SourceSpan(min(a.start, b.start), max(a.end, b.end),
                      first.line, first.column)


class _Parser:
    def __init__(self, tokens: list[LexToken], ops: OperatorTable,
                 double_quotes: str = "string", text_len: int = 0):
        self.tokens = [t for t in tokens if t.kind != "comment"]
        self.pos = 0
        self.ops = ops
        self.double_quotes = double_quotes
        self.text_len = text_len
        self.var_names: dict[str, Var] = {}
        self.var_counts: dict[str, int] = {}

    # -- token access -----------------------------------------------------
    def peek(self, offset: int = 0) -> Optional[LexToken]:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self) -> LexToken:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self._eof_span())
        self.pos += 1
        return tok

    def _eof_span(self) -> SourceSpan:
        if self.tokens:
            last = self.tokens[-1].span
            return SourceSpan(last.end, last.end, last.line, last.column)
        return SourceSpan(self.text_len, self.text_len, 1, 1)

    def expect_punct(self, text: str) -> LexToken:
        tok = self.peek()
        if tok is None or tok.kind != "punct" or tok.text != text:
            span = tok.span if tok else self._eof_span()
            got = f"{tok.text!r}" if tok else "end of input"
            raise ParseError(f"expected {text!r}, got {got}", span)
        return self.next()

    # -- entry points ------------------------------------------------------
    def parse_clause(self) -> tuple:
        tok = self.peek()
        if tok is None:
            raise ParseError("no term found", self._eof_span())
        if tok.kind == "error":
            raise ParseError(f"unlexable input {tok.text!r}", tok.span)
        if tok.kind == "fullstop":
            raise ParseError("unexpected end of clause", tok.span)
        term, layout, _ = self.parse(1200)
        end = self.peek()
        if end is None:
            raise ParseError("missing fullstop", self._eof_span())
        if end.kind != "fullstop":
            if end.kind == "atom" and self.ops.is_operator(atom_name(end)):
                raise ParseError(
                    f"operator priority clash at {end.text!r}", end.span)
            raise ParseError(f"operator expected before {end.text!r}", end.span)
        self.next()
        return term, layout, end.span.end

    # -- grammar -----------------------------------------------------------
    def parse(self, maxp: int, delim: bool = False) -> tuple:
        """Parse one term of priority <= maxp.

        With ``delim`` set (inside argument lists and list elements) the
        ``,`` and ``|`` punctuation always separate, while atom-spelled
        operators may still exceed the usual 999 argument bound.
        """
        left, llay, lpri = self.primary(maxp, delim)
        while True:
            tok = self.peek()
            if tok is None:
                break
            opname = None
            if tok.kind == "atom":
                opname = atom_name(tok)
            elif tok.kind == "punct" and tok.text in (",", "|"):
                if delim:
                    break
                opname = tok.text
            if opname is None:
                break
            table_name = ";" if opname == "|" else opname
            infix = self.ops.infix(table_name) if opname != "|" else (1100, "xfy")
            postfix = self.ops.postfix(table_name)
            moved = False
            if infix:
                pri, typ = infix
                lmax = pri if typ == "yfx" else pri - 1
                rmax = pri if typ == "xfy" else pri - 1
                if pri <= maxp and lpri <= lmax:
                    self.next()
                    right, rlay, _ = self.parse(rmax, delim)
                    left = Struct(table_name, (left, right))
                    llay = Layout(_join_spans(llay.span, rlay.span), [llay, rlay])
                    lpri = pri
                    moved = True
            if not moved and postfix:
                pri, typ = postfix
                lmax = pri if typ == "yf" else pri - 1
                if pri <= maxp and lpri <= lmax:
                    tok = self.next()
                    left = Struct(table_name, (left,))
                    llay = Layout(_join_spans(llay.span, tok.span), [llay])
                    lpri = pri
                    moved = True
            if not moved:
                break
        return left, llay, lpri

    def primary(self, maxp: int, delim: bool = False) -> tuple:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self._eof_span())
        if tok.kind == "error":
            raise ParseError(f"unlexable input {tok.text!r}", tok.span)
        if tok.kind == "fullstop":
            raise ParseError("unexpected end of clause", tok.span)

        if tok.kind == "number":
            self.next()
            return number_value(tok), Layout(tok.span), 0

        if tok.kind == "var":
            self.next()
            return self._var(tok), Layout(tok.span), 0

        if tok.kind == "string":
            self.next()
            value = unescape_quoted(tok.text[1:-1], '"', tok.span)
            return self._string_term(value), Layout(tok.span), 0

        if tok.kind == "functor":
            return self._compound()

        if tok.kind == "punct":
            if tok.text == "(":
                self.next()
                term, lay, _ = self.parse(1200)
                close = self.expect_punct(")")
                return term, Layout(_join_spans(tok.span, close.span), lay.children), 0
            if tok.text == "[":
                return self._list()
            if tok.text == "{":
                return self._curly()
            raise ParseError(f"unexpected {tok.text!r}", tok.span)

        # atom: negative literal, prefix operator, or plain atom
        name = atom_name(tok)
        nxt = self.peek(1)
        if (tok.text == "-" and nxt is not None and nxt.kind == "number"
                and nxt.span.start == tok.span.end):
            # adjacent "-" folds into the literal: -1 is a number (operand
            # priority 0), - 1 stays a compound
            self.next()
            self.next()
            value = number_value(nxt)
            value = Integer(-value.value) if isinstance(value, Integer) \
                else Float(-value.value)
            return value, Layout(_join_spans(tok.span, nxt.span)), 0
        prefix = self.ops.prefix(name)
        if prefix:
            pri, typ = prefix
            if pri <= maxp and self._operand_follows():
                self.next()
                save = self.pos
                counts = dict(self.var_counts)
                try:
                    argmax = pri if typ == "fy" else pri - 1
                    arg, alay, _ = self.parse(argmax, delim)
                    lay = Layout(_join_spans(tok.span, alay.span), [alay])
                    return Struct(name, (arg,)), lay, pri
                except ParseError:
                    self.pos = save
                    self.var_counts = counts
        self.next()
        return Atom(name), Layout(tok.span), 0

    def _operand_follows(self) -> bool:
        tok = self.peek(1)
        if tok is None:
            return False
        if tok.kind in ("number", "var", "string", "functor"):
            return True
        if tok.kind == "punct":
            return tok.text in "([{"
        if tok.kind == "atom":
            name = atom_name(tok)
            slots = self.ops._entries.get(name)
            if slots and "prefix" not in slots:
                return False  # infix/postfix-only operator cannot start a term
            return True
        return False

    def _var(self, tok: LexToken) -> Var:
        name = tok.text
        if name == "_":
            return Var("_")
        self.var_counts[name] = self.var_counts.get(name, 0) + 1
        var = self.var_names.get(name)
        if var is None:
            var = Var(name)
            self.var_names[name] = var
        return var

    def _string_term(self, value: str) -> Term:
        if self.double_quotes == "codes":
            return mk_list([Integer(ord(c)) for c in value])
        if self.double_quotes == "chars":
            return mk_list([Atom(c) for c in value])
        if self.double_quotes == "atom":
            return Atom(value)
        return String(value)

    def _compound(self) -> tuple:
        tok = self.next()
        name = atom_name(tok)
        self.expect_punct("(")
        args = []
        lays = []
        while True:
            arg, lay, _ = self.parse(1200, delim=True)
            args.append(arg)
            lays.append(lay)
            nxt = self.peek()
            if nxt is not None and nxt.kind == "punct" and nxt.text == ",":
                self.next()
                continue
            break
        close = self.expect_punct(")")
        span = _join_spans(tok.span, close.span)
        return mk_struct(name, args), Layout(span, lays), 0

    def _list(self) -> tuple:
        open_tok = self.expect_punct("[")
        nxt = self.peek()
        if nxt is not None and nxt.kind == "punct" and nxt.text == "]":
            close = self.next()
            return NIL, Layout(_join_spans(open_tok.span, close.span)), 0
        elems = []
        lays = []
        while True:
            term, lay, _ = self.parse(1200, delim=True)
            elems.append(term)
            lays.append(lay)
            nxt = self.peek()
            if nxt is not None and nxt.kind == "punct" and nxt.text == ",":
                self.next()
                continue
            break
        tail = NIL
        tail_lay = None
        nxt = self.peek()
        if nxt is not None and nxt.kind == "punct" and nxt.text == "|":
            self.next()
            tail, tail_lay, _ = self.parse(999, delim=True)
        close = self.expect_punct("]")
        if tail_lay is None:
            tail_lay = Layout(SourceSpan(close.span.start, close.span.start,
                                         close.span.line, close.span.column))
        # layout mirrors the cons spine
        span = _join_spans(open_tok.span, close.span)
        lay = tail_lay
        term = tail
        for elem, elay in zip(reversed(elems), reversed(lays)):
            term = Struct(LIST_FUNCTOR, (elem, term))
            lay = Layout(_join_spans(elay.span, lay.span), [elay, lay])
        return term, Layout(span, lay.children if lay.children else [lay]), 0

    def _curly(self) -> tuple:
        open_tok = self.expect_punct("{")
        nxt = self.peek()
        if nxt is not None and nxt.kind == "punct" and nxt.text == "}":
            close = self.next()
            return Atom("{}"), Layout(_join_spans(open_tok.span, close.span)), 0
        term, lay, _ = self.parse(1200)
        close = self.expect_punct("}")
        span = _join_spans(open_tok.span, close.span)
        return Struct("{}", (term,)), Layout(span, [lay]), 0


def parse_term(text: str, ops: Optional[OperatorTable] = None,
               double_quotes: str = "string") -> ParseResult:
    """Parse one fullstop-terminated term. Raises ParseError."""
    tokens = tokenize(text)
    return parse_tokens(tokens, ops, double_quotes, text_len=len(text))


def parse_tokens(tokens: list[LexToken], ops: Optional[OperatorTable] = None,
                 double_quotes: str = "string", text_len: int = 0) -> ParseResult:
    parser = _Parser(tokens, ops or DEFAULT_OPS, double_quotes, text_len)
    term, layout, end = parser.parse_clause()
    trailing = parser.peek()
    if trailing is not None:
        raise ParseError("text after fullstop", trailing.span)
    names = {n: v for n, v in parser.var_names.items()}
    return ParseResult(term, names, dict(parser.var_counts), layout, end)


def split_clauses(tokens: list[LexToken]) -> list[list[LexToken]]:
    """Group a token stream into clause runs, each ending at a fullstop.

    Comments between clauses attach to the following run; trailing tokens
    without a fullstop form a final run.
    """
    runs: list[list[LexToken]] = []
    current: list[LexToken] = []
    for tok in tokens:
        current.append(tok)
        if tok.kind == "fullstop":
            runs.append(current)
            current = []
    if current:
        if all(t.kind == "comment" for t in current) and runs:
            runs[-1].extend(current)
        else:
            runs.append(current)
    return runs
