/**
 * Query runner: a state machine over engine events plus the button row
 * offered in each state. A runner drives exactly one engine; the host
 * wires `RunnerAction` values to HTTP sends and feeds replies back into
 * `applyEvent`.
 */

import { docText } from "./docview.js";
import type {
  DisplayDoc,
  EngineEvent,
  ErrorEvent,
  PromptEvent,
  TraceEvent,
} from "./wire.js";

export type RunnerState =
  | "idle"
  | "running"
  | "waiting_more"
  | "prompting"
  | "tracing"
  | "done"
  | "error"
  | "dead";

export type ButtonName =
  | "run"
  | "next"
  | "next_10"
  | "next_100"
  | "next_1000"
  | "stop"
  | "abort"
  | "respond"
  | "step_into"
  | "step_over"
  | "step_out"
  | "continue"
  | "retry"
  | "close";

/** Buttons shown for each state, in display order. */
export const BUTTONS: Record<RunnerState, readonly ButtonName[]> = {
  idle: ["run"],
  running: ["abort"],
  waiting_more: ["next", "next_10", "next_100", "next_1000", "stop", "abort"],
  prompting: ["respond", "abort"],
  tracing: ["step_into", "step_over", "step_out", "continue", "retry", "abort"],
  done: ["close"],
  error: ["close"],
  dead: [],
};

export type TraceCmd =
  | "step_into"
  | "step_over"
  | "step_out"
  | "continue"
  | "retry";

/** Bodies for POST /pengine/send, minus the engine id. */
export type RunnerAction =
  | { event: "ask"; query: string; chunk: number; template?: string; trace?: boolean }
  | { event: "next"; n: number }
  | { event: "stop" }
  | { event: "abort" }
  | { event: "respond"; text: string }
  | { event: "trace_control"; cmd: TraceCmd }
  | { event: "destroy" };

const NEXT_COUNTS: Partial<Record<ButtonName, number>> = {
  next: 1,
  next_10: 10,
  next_100: 100,
  next_1000: 1000,
};

const TRACE_CMDS: readonly ButtonName[] = [
  "step_into",
  "step_over",
  "step_out",
  "continue",
  "retry",
];

export interface RunOptions {
  chunk?: number;
  template?: string;
  trace?: boolean;
}

export class RunnerWidget {
  state: RunnerState = "idle";
  engineId: string | null = null;
  query: string | null = null;
  answers: Record<string, DisplayDoc>[] = [];
  projection: string[] = [];
  output = "";
  lastError: ErrorEvent | null = null;
  prompt: PromptEvent | null = null;
  traceEvent: TraceEvent | null = null;
  displayMode: "bindings" | "table" = "bindings";

  buttons(): readonly ButtonName[] {
    return BUTTONS[this.state];
  }

  /** Throws unless `name` is offered in the current state. */
  private checkLegal(name: ButtonName): void {
    if (!this.buttons().includes(name)) {
      throw new Error(`${name} is not available in state ${this.state}`);
    }
  }

  run(query: string, options: RunOptions = {}): RunnerAction {
    this.checkLegal("run");
    this.query = query;
    this.answers = [];
    this.projection = [];
    this.output = "";
    this.lastError = null;
    this.state = "running";
    const action: RunnerAction = {
      event: "ask",
      query,
      chunk: options.chunk ?? 1,
    };
    if (options.template !== undefined) {
      action.template = options.template;
    }
    if (options.trace) {
      action.trace = true;
    }
    return action;
  }

  next(button: "next" | "next_10" | "next_100" | "next_1000"): RunnerAction {
    this.checkLegal(button);
    this.state = "running";
    return { event: "next", n: NEXT_COUNTS[button]! };
  }

  stop(): RunnerAction {
    this.checkLegal("stop");
    this.state = "running";
    return { event: "stop" };
  }

  abort(): RunnerAction {
    this.checkLegal("abort");
    // asynchronous: the engine reports the interruption as an error event
    this.state = "running";
    return { event: "abort" };
  }

  respond(text: string): RunnerAction {
    this.checkLegal("respond");
    this.prompt = null;
    this.state = "running";
    return { event: "respond", text };
  }

  traceControl(cmd: TraceCmd): RunnerAction {
    if (!TRACE_CMDS.includes(cmd)) {
      throw new Error(`unknown trace command ${cmd}`);
    }
    this.checkLegal(cmd);
    this.traceEvent = null;
    this.state = "running";
    return { event: "trace_control", cmd };
  }

  close(): RunnerAction {
    this.checkLegal("close");
    this.state = "dead";
    return { event: "destroy" };
  }

  applyEvent(event: EngineEvent): RunnerState {
    switch (event.event) {
      case "create":
        this.engineId = event.id;
        this.state = "idle";
        break;
      case "success":
        this.answers.push(...event.answers);
        if (event.projection.length > 0) {
          this.projection = event.projection;
        }
        this.state = event.more ? "waiting_more" : "done";
        break;
      case "output":
        this.output += event.data;
        break;
      case "error":
        this.lastError = event;
        this.state = "error";
        break;
      case "prompt":
        this.prompt = event;
        this.state = "prompting";
        break;
      case "trace":
        this.traceEvent = event;
        this.state = "tracing";
        break;
      case "stop":
        this.state = "done";
        break;
      case "none":
        break;
      case "destroyed":
        this.state = "dead";
        break;
    }
    return this.state;
  }

  /** One `Name = value, ...` line per answer; `true` for a bare yes. */
  bindingLines(): string[] {
    return this.answers.map((answer) => {
      const parts = this.projection
        .filter((name) => name in answer)
        .map((name) => `${name} = ${docValue(answer[name]!)}`);
      return parts.length > 0 ? parts.join(", ") : "true";
    });
  }

  /** Rows of rendered values in projection order, for the table mode. */
  tableRows(): string[][] {
    return this.answers.map((answer) =>
      this.projection.map((name) =>
        name in answer ? docValue(answer[name]!) : "",
      ),
    );
  }
}

function docValue(doc: DisplayDoc): string {
  return doc.text ?? docText(doc.root);
}
