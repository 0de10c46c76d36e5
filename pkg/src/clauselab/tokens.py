"""Tokenizer for the workbench's Prolog-family syntax.

The tokenizer is total: any input produces a token list, with unlexable
characters wrapped in ``error`` tokens. Token texts are exact slices of the
input, so concatenating the texts plus the skipped whitespace reproduces the
input byte for byte. The same grammar is used server-side everywhere a
token stream is needed (parsing, highlighting, comment scanning).
"""

from __future__ import annotations

from dataclasses import dataclass

SYMBOL_CHARS = set("#$&*+-./:<=>?@^~\\")
SOLO_PUNCT = set("()[]{},|")

KINDS = ("atom", "functor", "var", "number", "string", "punct", "comment",
         "fullstop", "error")


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start must not exceed end")


@dataclass(frozen=True)
class LexToken:
    kind: str
    text: str
    span: SourceSpan

    def __repr__(self):
        return f"LexToken({self.kind}, {self.text!r}, {self.span.start}..{self.span.end})"


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.text[i] if i < len(self.text) else ""

    def advance(self, n: int = 1):
        for _ in range(n):
            if self.pos < len(self.text):
                if self.text[self.pos] == "\n":
                    self.line += 1
                    self.col = 1
                else:
                    self.col += 1
                self.pos += 1

    def mark(self):
        return (self.pos, self.line, self.col)


def _is_alnum(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(text: str) -> list[LexToken]:
    s = _Scanner(text)
    tokens: list[LexToken] = []

    def emit(kind: str, start_mark):
        start, line, col = start_mark
        tok = LexToken(kind, text[start:s.pos], SourceSpan(start, s.pos, line, col))
        tokens.append(tok)
        return tok

    def scan_quoted(quote: str) -> bool:
        """Consume a quoted item body after its opening quote.

        Returns False when the quote never closes (caller emits an error
        token covering everything consumed).
        """
        while True:
            c = s.peek()
            if c == "":
                return False
            if c == quote:
                if s.peek(1) == quote:  # doubled quote
                    s.advance(2)
                    continue
                s.advance()
                return True
            if c == "\\":
                # \x1f\ and \17\ style escapes end at the backslash, which
                # must not be taken as escaping the following character
                s.advance()
                _scan_escape_body(s)
                continue
            s.advance()

    while not s.eof():
        c = s.peek()
        if c in " \t\r\n\f\v":
            s.advance()
            continue

        start = s.mark()

        if c == "%":
            while not s.eof() and s.peek() != "\n":
                s.advance()
            emit("comment", start)
            continue

        if c == "/" and s.peek(1) == "*":
            s.advance(2)
            closed = False
            while not s.eof():
                if s.peek() == "*" and s.peek(1) == "/":
                    s.advance(2)
                    closed = True
                    break
                s.advance()
            emit("comment" if closed else "error", start)
            continue

        if c.isdigit():
            _scan_number(s)
            emit("number", start)
            continue

        if c == "_" or c.isalpha():
            if c == "_" or c.isupper():
                while _is_alnum(s.peek()):
                    s.advance()
                emit("var", start)
            else:
                while _is_alnum(s.peek()):
                    s.advance()
                emit("functor" if s.peek() == "(" else "atom", start)
            continue

        if c == "'":
            s.advance()
            if scan_quoted("'"):
                emit("functor" if s.peek() == "(" else "atom", start)
            else:
                emit("error", start)
            continue

        if c == '"':
            s.advance()
            if scan_quoted('"'):
                emit("string", start)
            else:
                emit("error", start)
            continue

        if c in SOLO_PUNCT:
            s.advance()
            emit("punct", start)
            continue

        if c in "!;":
            s.advance()
            emit("functor" if s.peek() == "(" else "atom", start)
            continue

        if c in SYMBOL_CHARS:
            # a lone '.' followed by layout, '%' or EOF terminates a clause
            if c == ".":
                nxt = s.peek(1)
                if nxt == "" or nxt in " \t\r\n\f\v%":
                    s.advance()
                    emit("fullstop", start)
                    continue
            while s.peek() in SYMBOL_CHARS:
                s.advance()
            emit("functor" if s.peek() == "(" else "atom", start)
            continue

        s.advance()
        emit("error", start)

    return tokens


def _scan_number(s: _Scanner):
    """Consume a number starting at a digit. Never produces a sign."""
    if s.peek() == "0":
        nxt = s.peek(1)
        if nxt == "'":
            # character code: 0'a, 0'\n, 0''' and 0'' both denote a quote
            s.advance(2)
            c = s.peek()
            if c == "\\":
                s.advance()
                _scan_escape_body(s)
            elif c == "'" and s.peek(1) == "'":
                s.advance(2)
            elif c:
                s.advance()
            return
        # peek() returns "" at EOF and "" is `in` every str, hence the sets
        if nxt in "xX":
            s.advance(2)
            while s.peek() in set("0123456789abcdefABCDEF"):
                s.advance()
            return
        if nxt in "oO":
            s.advance(2)
            while s.peek() in set("01234567"):
                s.advance()
            return
        if nxt in "bB":
            s.advance(2)
            while s.peek() in set("01"):
                s.advance()
            return
    while s.peek().isdigit():
        s.advance()
    # fraction requires a digit right after the dot
    if s.peek() == "." and s.peek(1).isdigit():
        s.advance()
        while s.peek().isdigit():
            s.advance()
    # exponent
    if s.peek() in ("e", "E"):
        sign = 1 if s.peek(1) in ("+", "-") else 0
        if s.peek(1 + sign).isdigit():
            s.advance(1 + sign)
            while s.peek().isdigit():
                s.advance()


def _scan_escape_body(s: _Scanner):
    """Consume the body of an escape after the backslash."""
    c = s.peek()
    if c == "x":
        s.advance()
        while s.peek() in set("0123456789abcdefABCDEF"):
            s.advance()
        if s.peek() == "\\":
            s.advance()
        return
    if c.isdigit():
        while s.peek() in set("01234567"):
            s.advance()
        if s.peek() == "\\":
            s.advance()
        return
    if c:
        s.advance()


def reconstruct(text: str, tokens: list[LexToken]) -> str:
    """Token texts plus skipped layout; equals the original input."""
    out = []
    pos = 0
    for tok in tokens:
        out.append(text[pos:tok.span.start])
        out.append(tok.text)
        pos = tok.span.end
    out.append(text[pos:])
    return "".join(out)
