/**
 * Server-produced token groups, captured from the highlight channel and
 * frozen here so the client merge is exercised against real server
 * output without a running server.
 */

import type { TokenGroups } from "../src/wire.js";

export const GO_SRC = "go :- non_existing(X).";

export const GO_GROUPS: TokenGroups = [
  [
    { kind: "atom", class: "head(not_called)", start: 0, end: 2, text: "go" },
    { kind: "atom", class: "neck", start: 3, end: 5, text: ":-" },
    {
      kind: "functor",
      class: "goal(undefined)",
      start: 6,
      end: 18,
      text: "non_existing",
    },
    { kind: "punct", class: "punct", start: 18, end: 19, text: "(" },
    { kind: "var", class: "var(singleton)", start: 19, end: 20, text: "X" },
    { kind: "punct", class: "punct", start: 20, end: 21, text: ")" },
    { kind: "fullstop", class: "fullstop", start: 21, end: 22, text: "." },
  ],
];

export const APP_SRC =
  "app([], L, L).\napp([H|T], L, [H|R]) :- app(T, L, R).\n";

export const APP_GROUPS: TokenGroups = [
  [
    { kind: "functor", class: "head(called)", start: 0, end: 3, text: "app" },
    { kind: "punct", class: "punct", start: 3, end: 4, text: "(" },
    { kind: "punct", class: "punct", start: 4, end: 5, text: "[" },
    { kind: "punct", class: "punct", start: 5, end: 6, text: "]" },
    { kind: "punct", class: "punct", start: 6, end: 7, text: "," },
    { kind: "var", class: "var(normal)", start: 8, end: 9, text: "L" },
    { kind: "punct", class: "punct", start: 9, end: 10, text: "," },
    { kind: "var", class: "var(normal)", start: 11, end: 12, text: "L" },
    { kind: "punct", class: "punct", start: 12, end: 13, text: ")" },
    { kind: "fullstop", class: "fullstop", start: 13, end: 14, text: "." },
  ],
  [
    { kind: "functor", class: "head(called)", start: 15, end: 18, text: "app" },
    { kind: "punct", class: "punct", start: 18, end: 19, text: "(" },
    { kind: "punct", class: "punct", start: 19, end: 20, text: "[" },
    { kind: "var", class: "var(normal)", start: 20, end: 21, text: "H" },
    { kind: "punct", class: "punct", start: 21, end: 22, text: "|" },
    { kind: "var", class: "var(normal)", start: 22, end: 23, text: "T" },
    { kind: "punct", class: "punct", start: 23, end: 24, text: "]" },
    { kind: "punct", class: "punct", start: 24, end: 25, text: "," },
    { kind: "var", class: "var(normal)", start: 26, end: 27, text: "L" },
    { kind: "punct", class: "punct", start: 27, end: 28, text: "," },
    { kind: "punct", class: "punct", start: 29, end: 30, text: "[" },
    { kind: "var", class: "var(normal)", start: 30, end: 31, text: "H" },
    { kind: "punct", class: "punct", start: 31, end: 32, text: "|" },
    { kind: "var", class: "var(normal)", start: 32, end: 33, text: "R" },
    { kind: "punct", class: "punct", start: 33, end: 34, text: "]" },
    { kind: "punct", class: "punct", start: 34, end: 35, text: ")" },
    { kind: "atom", class: "neck", start: 36, end: 38, text: ":-" },
    {
      kind: "functor",
      class: "goal(recursive)",
      start: 39,
      end: 42,
      text: "app",
    },
    { kind: "punct", class: "punct", start: 42, end: 43, text: "(" },
    { kind: "var", class: "var(normal)", start: 43, end: 44, text: "T" },
    { kind: "punct", class: "punct", start: 44, end: 45, text: "," },
    { kind: "var", class: "var(normal)", start: 46, end: 47, text: "L" },
    { kind: "punct", class: "punct", start: 47, end: 48, text: "," },
    { kind: "var", class: "var(normal)", start: 49, end: 50, text: "R" },
    { kind: "punct", class: "punct", start: 50, end: 51, text: ")" },
    { kind: "fullstop", class: "fullstop", start: 51, end: 52, text: "." },
  ],
];
