import { describe, expect, it } from "vitest";

import { tokenize } from "../src/lexer.js";
import {
  COMPAT,
  DEFAULT_CLASS,
  compatible,
  lexicalStyles,
  merge,
} from "../src/merge.js";
import { APP_GROUPS, APP_SRC, GO_GROUPS, GO_SRC } from "./fixtures.js";

const GO_CLASSES = [
  "head(not_called)",
  "neck",
  "goal(undefined)",
  "punct",
  "var(singleton)",
  "punct",
  "fullstop",
];

describe("merge against captured server tokens", () => {
  it("adopts every server class when the streams agree", () => {
    const result = merge(tokenize(GO_SRC), GO_GROUPS);
    expect(result.state).toBe("in_sync");
    expect(result.offset).toBeNull();
    expect(result.styled.map((s) => s.class)).toEqual(GO_CLASSES);
    expect(result.styled.map((s) => [s.start, s.end])).toEqual(
      tokenize(GO_SRC).map((t) => [t.span.start, t.span.end]),
    );
  });

  it("styles a multi-clause program in sync", () => {
    const result = merge(tokenize(APP_SRC), APP_GROUPS);
    expect(result.state).toBe("in_sync");
    expect(result.styled).toHaveLength(10 + 26);
    const classes = result.styled.map((s) => s.class);
    expect(classes[0]).toBe("head(called)");
    expect(classes).toContain("neck");
    expect(classes).toContain("goal(recursive)");
    expect(classes.filter((c) => c === "var(normal)")).toHaveLength(10);
  });
});

describe("one-token drift repair", () => {
  it("repairs a single inserted token", () => {
    const edited = "go :- \\+ non_existing(X).";
    const result = merge(tokenize(edited), GO_GROUPS);
    expect(result.state).toBe("resynced");
    expect(result.offset).toBe(6); // where \+ was typed
    expect(result.styled.map((s) => s.class)).toEqual([
      "head(not_called)",
      "neck",
      "atom", // the insertion: lexical fallback
      "goal(undefined)",
      "punct",
      "var(singleton)",
      "punct",
      "fullstop",
    ]);
  });

  it("repairs a single deleted token", () => {
    const edited = "go :- non_existing().";
    const result = merge(tokenize(edited), GO_GROUPS);
    expect(result.state).toBe("resynced");
    expect(result.styled.map((s) => s.class)).toEqual([
      "head(not_called)",
      "neck",
      "goal(undefined)",
      "punct",
      "punct",
      "fullstop",
    ]);
  });

  it("repairs a single replaced token", () => {
    const edited = "go :- non_existing(Y).";
    const result = merge(tokenize(edited), GO_GROUPS);
    expect(result.state).toBe("resynced");
    expect(result.offset).toBe(19); // the renamed variable
    const renamed = result.styled[4]!;
    expect(renamed.class).toBe("var(normal)"); // lexical default, not singleton
    expect(result.styled[6]!.class).toBe("fullstop");
  });
});

describe("larger drift", () => {
  it("falls back to lexical styling and reports out_of_sync", () => {
    const result = merge(tokenize("totally(different, thing)."), GO_GROUPS);
    expect(result.state).toBe("out_of_sync");
    expect(result.styled.map((s) => s.class)).toEqual([
      "functor",
      "punct",
      "atom",
      "punct",
      "atom",
      "punct",
      "fullstop",
    ]);
  });

  it("recovers at the next clause boundary", () => {
    const client = "zzz(1, 2, 3).\napp([H|T], L, [H|R]) :- app(T, L, R).\n";
    const result = merge(tokenize(client), APP_GROUPS);
    expect(result.state).toBe("out_of_sync");
    const second = result.styled.slice(-26);
    expect(second[0]!.class).toBe("head(called)");
    expect(second.map((s) => s.class)).toContain("goal(recursive)");
  });

  it("tolerates trailing comments beyond the analysed text", () => {
    const result = merge(tokenize(GO_SRC + "\n% a note"), GO_GROUPS);
    expect(result.state).toBe("in_sync");
    expect(result.styled.at(-1)).toMatchObject({ class: "comment" });
  });

  it("flags trailing code beyond the analysed text", () => {
    const result = merge(tokenize(GO_SRC + "\nmore"), GO_GROUPS);
    expect(result.state).toBe("out_of_sync");
    expect(result.styled.at(-1)).toMatchObject({ class: "atom" });
  });
});

describe("compatibility rules", () => {
  const varTok = tokenize("X")[0]!;
  const atomTok = tokenize("foo")[0]!;

  it("requires kind and text to match", () => {
    expect(
      compatible(varTok, { kind: "var", class: "var(singleton)", start: 0, end: 1, text: "X" }),
    ).toBe(true);
    expect(
      compatible(varTok, { kind: "var", class: "var(singleton)", start: 0, end: 1, text: "Y" }),
    ).toBe(false);
    expect(
      compatible(varTok, { kind: "atom", class: "atom", start: 0, end: 1, text: "X" }),
    ).toBe(false);
  });

  it("rejects classes outside the published table", () => {
    expect(
      compatible(varTok, { kind: "var", class: "number", start: 0, end: 1, text: "X" }),
    ).toBe(false);
    expect(
      compatible(atomTok, { kind: "atom", class: "neck", start: 0, end: 3, text: "foo" }),
    ).toBe(true);
    expect(
      compatible(atomTok, { kind: "atom", class: "var(normal)", start: 0, end: 3, text: "foo" }),
    ).toBe(false);
  });

  it("keeps the class table aligned with the server's", () => {
    expect(Object.keys(COMPAT).sort()).toEqual([
      "atom",
      "comment",
      "error",
      "fullstop",
      "functor",
      "number",
      "punct",
      "string",
      "var",
    ]);
    expect(COMPAT.var).toEqual(["var(singleton)", "var(normal)"]);
    expect(COMPAT.functor).toContain("goal(recursive)");
    expect(COMPAT.atom).toContain("operator");
    expect(COMPAT.number).toEqual(["number"]);
  });

  it("uses one lexical default per kind", () => {
    expect(DEFAULT_CLASS).toEqual({
      atom: "atom",
      functor: "functor",
      var: "var(normal)",
      number: "number",
      string: "string",
      punct: "punct",
      fullstop: "fullstop",
      comment: "comment",
      error: "error",
    });
    const styles = lexicalStyles(tokenize(GO_SRC));
    expect(styles.map((s) => s.class)).toEqual([
      "atom",
      "atom",
      "functor",
      "punct",
      "var(normal)",
      "punct",
      "fullstop",
    ]);
  });
});
