/**
 * Browser entry point: wires the headless widgets to the DOM and the
 * server's HTTP API. One program editor with server-assisted styling,
 * one query runner with per-state buttons, one results pane.
 */

import { EditorWidget } from "./editor.js";
import { embedModel, parseEmbed, programText } from "./embed.js";
import { RunnerWidget, type ButtonName, type RunnerAction } from "./runner.js";
import type { EngineEvent, TokenGroups } from "./wire.js";

const EDITOR_NAME = "main";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

async function postJson(path: string, body: unknown): Promise<unknown> {
  const response = await fetch(path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  return response.json();
}

async function getJson(path: string): Promise<unknown> {
  const response = await fetch(path);
  return response.json();
}

class Page {
  private readonly program: HTMLTextAreaElement;
  private readonly preview: HTMLElement;
  private readonly query: HTMLInputElement;
  private readonly buttons: HTMLElement;
  private readonly results: HTMLElement;
  private readonly status: HTMLElement;
  private readonly editor: EditorWidget;
  private runner = new RunnerWidget();

  constructor() {
    this.program = el<HTMLTextAreaElement>("program");
    this.preview = el("preview");
    this.query = el<HTMLInputElement>("query");
    this.buttons = el("buttons");
    this.results = el("results");
    this.status = el("status");
    this.editor = new EditorWidget({
      sync: (text, generation) => void this.syncHighlight(text, generation),
    });
    this.program.addEventListener("input", () => {
      this.editor.setText(this.program.value);
      this.renderPreview();
    });
    this.seedFromUrl();
    this.renderButtons();
  }

  private seedFromUrl(): void {
    const model = embedModel(parseEmbed(window.location.href));
    if (model.editorText) {
      this.program.value = model.editorText;
      this.editor.setText(model.editorText);
    }
    if (model.queryText) {
      this.query.value = model.queryText;
    }
    this.backgroundText = model.backgroundText;
    this.renderPreview();
  }

  private backgroundText = "";

  private async syncHighlight(text: string, generation: number): Promise<void> {
    try {
      await postJson("/highlight/text", { session: EDITOR_NAME, text });
      const reply = (await getJson(
        `/highlight/tokens?session=${EDITOR_NAME}`,
      )) as { gen: number; tokens: TokenGroups };
      this.editor.receiveTokens(generation, reply.tokens);
      this.renderPreview();
    } catch {
      this.editor.setTokenChannel(false);
      this.renderPreview();
    }
  }

  private renderPreview(): void {
    const text = this.editor.getText();
    const spans = this.editor.styling();
    const out: string[] = [];
    let pos = 0;
    for (const span of spans) {
      out.push(escapeHtml(text.slice(pos, span.start)));
      const cls = span.class.replace(/[^a-z_]/g, "-");
      out.push(
        `<span class="tok-${cls}">${escapeHtml(text.slice(span.start, span.end))}</span>`,
      );
      pos = span.end;
    }
    out.push(escapeHtml(text.slice(pos)));
    this.preview.innerHTML = out.join("");
  }

  private renderButtons(): void {
    this.buttons.textContent = "";
    for (const name of this.runner.buttons()) {
      const button = document.createElement("button");
      button.textContent = name.replace(/_/g, " ");
      button.addEventListener("click", () => void this.press(name));
      this.buttons.appendChild(button);
    }
    this.status.textContent = this.runner.state;
  }

  private async press(name: ButtonName): Promise<void> {
    try {
      if (name === "run") {
        await this.startRun();
        return;
      }
      let action: RunnerAction;
      if (name === "next" || name === "next_10" || name === "next_100" || name === "next_1000") {
        action = this.runner.next(name);
      } else if (name === "stop") {
        action = this.runner.stop();
      } else if (name === "abort") {
        action = this.runner.abort();
      } else if (name === "respond") {
        const text = window.prompt(this.runner.prompt?.data ?? "|:") ?? "";
        action = this.runner.respond(text);
      } else if (name === "close") {
        action = this.runner.close();
      } else {
        action = this.runner.traceControl(name);
      }
      await this.dispatch(action);
    } finally {
      this.renderButtons();
      this.renderResults();
    }
  }

  private async startRun(): Promise<void> {
    const src = programText({
      editorText: this.editor.getText(),
      backgroundText: this.backgroundText,
      queryText: "",
      exampleQueries: [],
    });
    const created = (await postJson("/pengine/create", {
      src,
      chunk: 1,
    })) as EngineEvent;
    this.runner = new RunnerWidget();
    this.runner.applyEvent(created);
    if (this.runner.state !== "idle" || !this.runner.engineId) {
      return;
    }
    const action = this.runner.run(this.query.value);
    await this.dispatch(action);
  }

  private async dispatch(action: RunnerAction): Promise<void> {
    const id = this.runner.engineId;
    if (!id) {
      return;
    }
    const reply = (await postJson("/pengine/send", {
      id,
      ...action,
    })) as EngineEvent;
    this.runner.applyEvent(reply);
    await this.drainOutput();
  }

  private async drainOutput(): Promise<void> {
    const id = this.runner.engineId;
    if (!id) {
      return;
    }
    while (this.runner.state === "running") {
      const event = (await getJson(
        `/pengine/pull_response?id=${id}`,
      )) as EngineEvent;
      if (event.event === "none") {
        break;
      }
      this.runner.applyEvent(event);
    }
  }

  private renderResults(): void {
    const lines: string[] = [];
    if (this.runner.output) {
      lines.push(this.runner.output.trimEnd());
    }
    lines.push(...this.runner.bindingLines());
    if (this.runner.lastError) {
      const err = this.runner.lastError;
      lines.push(`error: ${err.message ?? err.code ?? "unknown"}`);
    }
    if (this.runner.traceEvent) {
      const t = this.runner.traceEvent;
      lines.push(`${t.port}: ${t.goal}`);
    }
    this.results.textContent = lines.join("\n");
  }
}

if (typeof document !== "undefined") {
  new Page();
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}
