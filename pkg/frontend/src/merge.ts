/**
 * Overlay server-enriched token classes onto locally lexed tokens.
 *
 * The server classifies tokens per clause group (heads, goals, singleton
 * variables, ...). The client keeps typing between analyses, so the two
 * streams drift. Compatible pairs take the server class; one-token
 * insert/delete/replace drift is repaired in place; anything worse falls
 * back to lexical styling for the rest of the clause and reports
 * `out_of_sync` so the caller schedules a refresh.
 */

import type { LexToken } from "./lexer.js";
import type { SemanticToken, TokenGroups, TokenKind } from "./wire.js";

export interface StyledSpan {
  start: number;
  end: number;
  kind: TokenKind;
  class: string;
}

export type MergeState = "in_sync" | "resynced" | "out_of_sync";

export interface MergeResult {
  styled: StyledSpan[];
  state: MergeState;
  /** First repaired client offset, when state is `resynced`. */
  offset: number | null;
}

/** Style used when no server class is available for a token. */
export const DEFAULT_CLASS: Record<TokenKind, string> = {
  atom: "atom",
  functor: "functor",
  var: "var(normal)",
  number: "number",
  string: "string",
  punct: "punct",
  fullstop: "fullstop",
  comment: "comment",
  error: "error",
};

/** Published table of semantic classes legal for each lexical kind. */
export const COMPAT: Record<TokenKind, readonly string[]> = {
  atom: [
    "head(called)",
    "head(not_called)",
    "neck",
    "goal(builtin)",
    "goal(local)",
    "goal(undefined)",
    "goal(recursive)",
    "atom",
    "functor",
    "operator",
    "punct",
  ],
  functor: [
    "head(called)",
    "head(not_called)",
    "goal(builtin)",
    "goal(local)",
    "goal(undefined)",
    "goal(recursive)",
    "functor",
  ],
  var: ["var(singleton)", "var(normal)"],
  number: ["number"],
  string: ["string"],
  punct: ["punct"],
  fullstop: ["fullstop"],
  comment: ["comment"],
  error: ["error"],
};

export function compatible(client: LexToken, server: SemanticToken): boolean {
  if (client.kind !== server.kind || client.text !== server.text) {
    return false;
  }
  return (COMPAT[client.kind] ?? []).includes(server.class);
}

function style(tok: LexToken, sem?: string): StyledSpan {
  return {
    start: tok.span.start,
    end: tok.span.end,
    kind: tok.kind,
    class: sem ?? DEFAULT_CLASS[tok.kind],
  };
}

export function merge(client: LexToken[], server: TokenGroups): MergeResult {
  const flat: SemanticToken[] = [];
  const ends: number[] = []; // index just past each group
  for (const group of server) {
    flat.push(...group);
    ends.push(flat.length);
  }
  const styled: StyledSpan[] = [];
  let state: MergeState = "in_sync";
  let offset: number | null = null;
  let i = 0;
  let j = 0;
  while (i < client.length) {
    const ct = client[i]!;
    if (j < flat.length && compatible(ct, flat[j]!)) {
      styled.push(style(ct, flat[j]!.class));
      i += 1;
      j += 1;
      continue;
    }
    if (j >= flat.length) {
      styled.push(style(ct));
      i += 1;
      if (state !== "out_of_sync" && ct.kind !== "comment") {
        state = "out_of_sync";
      }
      continue;
    }

    const matches = (ci: number, sj: number): boolean => {
      if (ci >= client.length || sj >= flat.length) {
        return ci >= client.length && sj >= flat.length;
      }
      return compatible(client[ci]!, flat[sj]!);
    };

    let repaired: boolean;
    if (matches(i + 1, j)) {
      // client inserted one token
      styled.push(style(ct));
      i += 1;
      repaired = true;
    } else if (matches(i, j + 1)) {
      // client deleted one token
      j += 1;
      repaired = true;
    } else if (matches(i + 1, j + 1)) {
      // one token replaced
      styled.push(style(ct));
      i += 1;
      j += 1;
      repaired = true;
    } else {
      repaired = false;
    }
    if (repaired) {
      if (state === "in_sync") {
        state = "resynced";
        offset = ct.span.start;
      }
      continue;
    }
    // skip to the next clause: style the rest of this client clause
    // lexically and drop the rest of the server group
    state = "out_of_sync";
    while (i < client.length && client[i]!.kind !== "fullstop") {
      styled.push(style(client[i]!));
      i += 1;
    }
    if (i < client.length) {
      styled.push(style(client[i]!));
      i += 1;
    }
    const jump = ends.find((e) => e > j);
    j = jump === undefined ? flat.length : jump;
  }
  return { styled, state, offset };
}

/** Lexical fallback styling, used when the token channel is off. */
export function lexicalStyles(client: LexToken[]): StyledSpan[] {
  return client.map((tok) => style(tok));
}
