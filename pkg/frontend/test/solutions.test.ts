import { describe, expect, it } from "vitest";

import { normalizeQuery, wrapQuery } from "../src/solutions.js";

describe("normalizeQuery", () => {
  it("strips surrounding space and one trailing fullstop", () => {
    expect(normalizeQuery("  p(X). ")).toBe("p(X)");
    expect(normalizeQuery("p(X) .")).toBe("p(X)");
    expect(normalizeQuery("p(X)")).toBe("p(X)");
  });

  it("leaves float literals alone", () => {
    expect(normalizeQuery("X = 1.5")).toBe("X = 1.5");
  });
});

describe("wrapQuery", () => {
  const q = "member(X, [c, a, b, a])";

  it("passes the query through unchanged for all answers", () => {
    expect(wrapQuery(q + ".", { mode: "all" })).toBe(q);
  });

  it("counts answers with aggregate_all", () => {
    expect(wrapQuery(q, { mode: "count" })).toBe(
      "aggregate_all(count, (member(X, [c, a, b, a])), Count)",
    );
  });

  it("wraps in time for timing", () => {
    expect(wrapQuery(q, { mode: "time" })).toBe(
      "time((member(X, [c, a, b, a])))",
    );
  });

  it("keys duplicate suppression on a variable", () => {
    expect(wrapQuery(q, { mode: "distinct", variable: "X" })).toBe(
      "distinct(X, (member(X, [c, a, b, a])))",
    );
    expect(() => wrapQuery(q, { mode: "distinct", variable: "x" })).toThrow(
      /not a variable name/,
    );
  });

  it("caps answers with limit", () => {
    expect(wrapQuery(q, { mode: "limit", n: 3 })).toBe(
      "limit(3, (member(X, [c, a, b, a])))",
    );
    for (const n of [0, -1, 2.5]) {
      expect(() => wrapQuery(q, { mode: "limit", n })).toThrow(
        /positive integer/,
      );
    }
  });

  it("orders answers by asc and desc keys", () => {
    expect(
      wrapQuery("p(X, Y)", {
        mode: "order_by",
        specs: [
          { dir: "asc", variable: "X" },
          { dir: "desc", variable: "Y" },
        ],
      }),
    ).toBe("order_by([asc(X), desc(Y)], (p(X, Y)))");
    expect(() => wrapQuery(q, { mode: "order_by", specs: [] })).toThrow(
      /at least one/,
    );
    expect(() =>
      wrapQuery(q, {
        mode: "order_by",
        specs: [{ dir: "asc", variable: "foo" }],
      }),
    ).toThrow(/not a variable name/);
  });

  it("keeps compound queries intact inside the wrapper", () => {
    expect(
      wrapQuery("between(1, 9, X), 0 is X mod 2", { mode: "count" }),
    ).toBe("aggregate_all(count, (between(1, 9, X), 0 is X mod 2), Count)");
  });

  it("rejects empty queries", () => {
    expect(() => wrapQuery("  . ", { mode: "all" })).toThrow(/empty/);
  });
});
