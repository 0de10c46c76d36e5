/**
 * Client-side tokenizer for the workbench's Prolog-family syntax.
 *
 * This mirrors the server's tokenizer rule for rule so that the merge in
 * merge.ts lines client tokens up against server tokens one to one. The
 * tokenizer is total: any input produces a token list, with unlexable
 * characters wrapped in `error` tokens, and token texts are exact slices
 * of the input.
 */

import type { TokenKind } from "./wire.js";

export const SYMBOL_CHARS = "#$&*+-./:<=>?@^~\\";
export const SOLO_PUNCT = "()[]{},|";

export const KINDS: readonly TokenKind[] = [
  "atom",
  "functor",
  "var",
  "number",
  "string",
  "punct",
  "comment",
  "fullstop",
  "error",
];

export interface SourceSpan {
  start: number;
  end: number;
  line: number;
  column: number;
}

export interface LexToken {
  kind: TokenKind;
  text: string;
  span: SourceSpan;
}

const ALPHA = /\p{L}/u;
const UPPER = /[\p{Lu}\p{Lt}]/u;
const ALNUM = /[\p{L}\p{Nd}_]/u;
const DIGIT = /[0-9]/;
const HEX = /[0-9a-fA-F]/;
const OCTAL = /[0-7]/;
const BINARY = /[01]/;
const LAYOUT = " \t\r\n\f\v";

class Scanner {
  readonly text: string;
  pos = 0;
  line = 1;
  col = 1;

  constructor(text: string) {
    this.text = text;
  }

  eof(): boolean {
    return this.pos >= this.text.length;
  }

  peek(offset = 0): string {
    const i = this.pos + offset;
    return i < this.text.length ? this.text[i]! : "";
  }

  advance(n = 1): void {
    for (let k = 0; k < n; k++) {
      if (this.pos < this.text.length) {
        if (this.text[this.pos] === "\n") {
          this.line += 1;
          this.col = 1;
        } else {
          this.col += 1;
        }
        this.pos += 1;
      }
    }
  }

  mark(): [number, number, number] {
    return [this.pos, this.line, this.col];
  }
}

function isDigit(c: string): boolean {
  return c !== "" && DIGIT.test(c);
}

function isAlnum(c: string): boolean {
  return c !== "" && ALNUM.test(c);
}

export function tokenize(text: string): LexToken[] {
  const s = new Scanner(text);
  const tokens: LexToken[] = [];

  const emit = (kind: TokenKind, startMark: [number, number, number]): void => {
    const [start, line, col] = startMark;
    tokens.push({
      kind,
      text: text.slice(start, s.pos),
      span: { start, end: s.pos, line, column: col },
    });
  };

  // Consume a quoted item body after its opening quote; false when the
  // quote never closes (the caller then emits an error token).
  const scanQuoted = (quote: string): boolean => {
    for (;;) {
      const c = s.peek();
      if (c === "") {
        return false;
      }
      if (c === quote) {
        if (s.peek(1) === quote) {
          s.advance(2); // doubled quote
          continue;
        }
        s.advance();
        return true;
      }
      if (c === "\\") {
        // \x1f\ and \17\ style escapes end at the backslash, which must
        // not be taken as escaping the following character
        s.advance();
        scanEscapeBody(s);
        continue;
      }
      s.advance();
    }
  };

  while (!s.eof()) {
    const c = s.peek();
    if (LAYOUT.includes(c)) {
      s.advance();
      continue;
    }

    const start = s.mark();

    if (c === "%") {
      while (!s.eof() && s.peek() !== "\n") {
        s.advance();
      }
      emit("comment", start);
      continue;
    }

    if (c === "/" && s.peek(1) === "*") {
      s.advance(2);
      let closed = false;
      while (!s.eof()) {
        if (s.peek() === "*" && s.peek(1) === "/") {
          s.advance(2);
          closed = true;
          break;
        }
        s.advance();
      }
      emit(closed ? "comment" : "error", start);
      continue;
    }

    if (isDigit(c)) {
      scanNumber(s);
      emit("number", start);
      continue;
    }

    if (c === "_" || ALPHA.test(c)) {
      if (c === "_" || UPPER.test(c)) {
        while (isAlnum(s.peek())) {
          s.advance();
        }
        emit("var", start);
      } else {
        while (isAlnum(s.peek())) {
          s.advance();
        }
        emit(s.peek() === "(" ? "functor" : "atom", start);
      }
      continue;
    }

    if (c === "'") {
      s.advance();
      if (scanQuoted("'")) {
        emit(s.peek() === "(" ? "functor" : "atom", start);
      } else {
        emit("error", start);
      }
      continue;
    }

    if (c === '"') {
      s.advance();
      if (scanQuoted('"')) {
        emit("string", start);
      } else {
        emit("error", start);
      }
      continue;
    }

    if (SOLO_PUNCT.includes(c)) {
      s.advance();
      emit("punct", start);
      continue;
    }

    if (c === "!" || c === ";") {
      s.advance();
      emit(s.peek() === "(" ? "functor" : "atom", start);
      continue;
    }

    if (SYMBOL_CHARS.includes(c)) {
      // a lone '.' followed by layout, '%' or EOF terminates a clause
      if (c === ".") {
        const nxt = s.peek(1);
        if (nxt === "" || LAYOUT.includes(nxt) || nxt === "%") {
          s.advance();
          emit("fullstop", start);
          continue;
        }
      }
      while (s.peek() !== "" && SYMBOL_CHARS.includes(s.peek())) {
        s.advance();
      }
      emit(s.peek() === "(" ? "functor" : "atom", start);
      continue;
    }

    s.advance();
    emit("error", start);
  }

  return tokens;
}

/** Consume a number starting at a digit. Never produces a sign. */
function scanNumber(s: Scanner): void {
  if (s.peek() === "0") {
    const nxt = s.peek(1);
    if (nxt === "'") {
      // character code: 0'a, 0'\n, 0''' and 0'' both denote a quote
      s.advance(2);
      const c = s.peek();
      if (c === "\\") {
        s.advance();
        scanEscapeBody(s);
      } else if (c === "'" && s.peek(1) === "'") {
        s.advance(2);
      } else if (c !== "") {
        s.advance();
      }
      return;
    }
    if (nxt === "x" || nxt === "X") {
      s.advance(2);
      while (s.peek() !== "" && HEX.test(s.peek())) {
        s.advance();
      }
      return;
    }
    if (nxt === "o" || nxt === "O") {
      s.advance(2);
      while (s.peek() !== "" && OCTAL.test(s.peek())) {
        s.advance();
      }
      return;
    }
    if (nxt === "b" || nxt === "B") {
      s.advance(2);
      while (s.peek() !== "" && BINARY.test(s.peek())) {
        s.advance();
      }
      return;
    }
  }
  while (isDigit(s.peek())) {
    s.advance();
  }
  // fraction requires a digit right after the dot
  if (s.peek() === "." && isDigit(s.peek(1))) {
    s.advance();
    while (isDigit(s.peek())) {
      s.advance();
    }
  }
  // exponent
  if (s.peek() === "e" || s.peek() === "E") {
    const sign = s.peek(1) === "+" || s.peek(1) === "-" ? 1 : 0;
    if (isDigit(s.peek(1 + sign))) {
      s.advance(1 + sign);
      while (isDigit(s.peek())) {
        s.advance();
      }
    }
  }
}

/** Consume the body of an escape after the backslash. */
function scanEscapeBody(s: Scanner): void {
  const c = s.peek();
  if (c === "x") {
    s.advance();
    while (s.peek() !== "" && HEX.test(s.peek())) {
      s.advance();
    }
    if (s.peek() === "\\") {
      s.advance();
    }
    return;
  }
  if (isDigit(c)) {
    while (s.peek() !== "" && OCTAL.test(s.peek())) {
      s.advance();
    }
    if (s.peek() === "\\") {
      s.advance();
    }
    return;
  }
  if (c !== "") {
    s.advance();
  }
}

/** Token texts plus skipped layout; equals the original input. */
export function reconstruct(text: string, tokens: LexToken[]): string {
  const out: string[] = [];
  let pos = 0;
  for (const tok of tokens) {
    out.push(text.slice(pos, tok.span.start));
    out.push(tok.text);
    pos = tok.span.end;
  }
  out.push(text.slice(pos));
  return out.join("");
}
