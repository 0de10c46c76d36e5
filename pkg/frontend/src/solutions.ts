/**
 * Query wrappers behind the solutions dropdown: aggregate all answers
 * into a count, drop duplicate bindings, cap the number of answers,
 * order them, or time the run. The wrapper is applied textually before
 * the query is sent, so the server parses the modifier and the goal as
 * one term sharing variables.
 */

export interface OrderSpec {
  dir: "asc" | "desc";
  variable: string;
}

export type SolutionsModifier =
  | { mode: "all" }
  | { mode: "count" }
  | { mode: "time" }
  | { mode: "distinct"; variable: string }
  | { mode: "limit"; n: number }
  | { mode: "order_by"; specs: OrderSpec[] };

const VAR_NAME = /^[A-Z_][A-Za-z0-9_]*$/;

/** Trim the query and drop one trailing fullstop. */
export function normalizeQuery(query: string): string {
  return query.trim().replace(/\.$/, "").trim();
}

export function wrapQuery(query: string, modifier: SolutionsModifier): string {
  const q = normalizeQuery(query);
  if (q === "") {
    throw new Error("empty query");
  }
  switch (modifier.mode) {
    case "all":
      return q;
    case "count":
      return `aggregate_all(count, (${q}), Count)`;
    case "time":
      return `time((${q}))`;
    case "distinct":
      checkVariable(modifier.variable);
      return `distinct(${modifier.variable}, (${q}))`;
    case "limit":
      if (!Number.isInteger(modifier.n) || modifier.n <= 0) {
        throw new Error(`limit must be a positive integer, got ${modifier.n}`);
      }
      return `limit(${modifier.n}, (${q}))`;
    case "order_by": {
      if (modifier.specs.length === 0) {
        throw new Error("order_by needs at least one ordering");
      }
      const specs = modifier.specs.map((spec) => {
        checkVariable(spec.variable);
        return `${spec.dir}(${spec.variable})`;
      });
      return `order_by([${specs.join(", ")}], (${q}))`;
    }
  }
}

function checkVariable(name: string): void {
  if (!VAR_NAME.test(name)) {
    throw new Error(`not a variable name: ${name}`);
  }
}
