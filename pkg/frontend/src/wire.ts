/** JSON shapes exchanged with the clauselab server. */

export type TokenKind =
  | "atom"
  | "functor"
  | "var"
  | "number"
  | "string"
  | "punct"
  | "comment"
  | "fullstop"
  | "error";

/** One enriched token from the server's highlight channel. */
export interface SemanticToken {
  kind: TokenKind;
  class: string;
  start: number;
  end: number;
  text: string;
}

/** Tokens grouped by clause, as served by /highlight/tokens. */
export type TokenGroups = SemanticToken[][];

// ---------------------------------------------------------------------------
// display documents

export interface TextNode {
  node: "text";
  text: string;
}

export interface SpanNode {
  node: "span";
  class: string;
  children: DocNode[];
}

export interface GroupNode {
  node: "group";
  folded: boolean;
  children: DocNode[];
}

export interface TableNode {
  node: "table";
  class?: string;
  header: string[] | null;
  rows: DocNode[][];
}

export interface ImageNode {
  node: "image";
  [key: string]: unknown;
}

export interface SvgNode {
  node: "svg";
  [key: string]: unknown;
}

export type DocNode =
  | TextNode
  | SpanNode
  | GroupNode
  | TableNode
  | ImageNode
  | SvgNode;

export interface DocAlternative {
  renderer: string;
  root: DocNode;
}

export interface DisplayDoc {
  renderer: string;
  root: DocNode;
  alternatives: DocAlternative[];
  /** Plain-text form, present on answer bindings. */
  text?: string;
}

// ---------------------------------------------------------------------------
// engine events

export interface ConsultReport {
  clauses: number;
  errors: unknown[];
  warnings: unknown[];
}

export interface CreateEvent {
  event: "create";
  id: string;
  consult?: ConsultReport;
}

export interface SuccessEvent {
  event: "success";
  id: string;
  answers: Record<string, DisplayDoc>[];
  more: boolean;
  time: number;
  projection: string[];
}

export interface OutputEvent {
  event: "output";
  id: string;
  data: string;
}

export interface ErrorEvent {
  event: "error";
  id?: string;
  /** Present for protocol-level errors (syntax, sandbox, quota, ...). */
  code?: string;
  message?: string;
  /** Raw error term for runtime errors. */
  data?: string;
  verdict?: string;
  culprit?: string;
  trace?: string[];
  start?: number;
  end?: number;
  line?: number;
}

export interface PromptEvent {
  event: "prompt";
  id: string;
  data: string;
  goal?: string;
}

export interface TraceEvent {
  event: "trace";
  id: string;
  port: string;
  goal: string;
  depth: number;
  line: number;
}

export interface StopEvent {
  event: "stop";
  id: string;
}

export interface NoneEvent {
  event: "none";
  id?: string;
}

export interface DestroyedEvent {
  event: "destroyed";
  id: string;
}

export type EngineEvent =
  | CreateEvent
  | SuccessEvent
  | OutputEvent
  | ErrorEvent
  | PromptEvent
  | TraceEvent
  | StopEvent
  | NoneEvent
  | DestroyedEvent;
