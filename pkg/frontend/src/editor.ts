/**
 * Editor model: buffer text, lexical tokens, and server-assisted styling.
 *
 * The widget is headless; the host environment supplies a scheduler (for
 * debouncing) and a sync callback that ships the buffer to the server's
 * highlight channel. Server token replies carry the generation they were
 * computed for, so replies that raced a newer edit are recognised and
 * dropped instead of clobbering fresher styling.
 */

import { tokenize, type LexToken } from "./lexer.js";
import {
  lexicalStyles,
  merge,
  type MergeState,
  type StyledSpan,
} from "./merge.js";
import type { TokenGroups } from "./wire.js";

/** Schedule `fn` after `ms` milliseconds; returns a cancel function. */
export type Scheduler = (fn: () => void, ms: number) => () => void;

export interface EditorOptions {
  /** Called (debounced) with the buffer and its generation. */
  sync?: (text: string, generation: number) => void;
  schedule?: Scheduler;
  debounceMs?: number;
}

const defaultSchedule: Scheduler = (fn, ms) => {
  const id = setTimeout(fn, ms);
  return () => clearTimeout(id);
};

export class EditorWidget {
  private text = "";
  private generation = 0;
  private tokens: LexToken[] = [];
  private channelOn = true;
  private server: TokenGroups | null = null;
  private serverGeneration = -1;
  private cancelPending: (() => void) | null = null;
  private readonly sync: (text: string, generation: number) => void;
  private readonly schedule: Scheduler;
  private readonly debounceMs: number;

  constructor(options: EditorOptions = {}) {
    this.sync = options.sync ?? (() => {});
    this.schedule = options.schedule ?? defaultSchedule;
    this.debounceMs = options.debounceMs ?? 250;
  }

  getText(): string {
    return this.text;
  }

  getGeneration(): number {
    return this.generation;
  }

  lexical(): LexToken[] {
    return this.tokens;
  }

  tokenChannelOn(): boolean {
    return this.channelOn;
  }

  setText(text: string): void {
    if (text === this.text) {
      return;
    }
    this.text = text;
    this.generation += 1;
    this.tokens = tokenize(text);
    if (this.channelOn) {
      this.scheduleSync();
    }
  }

  /**
   * Accept a server token reply. Replies older than the last one applied
   * are stale (an edit raced the analysis) and are ignored.
   */
  receiveTokens(generation: number, groups: TokenGroups): boolean {
    if (!this.channelOn || generation <= this.serverGeneration) {
      return false;
    }
    this.server = groups;
    this.serverGeneration = generation;
    return true;
  }

  setTokenChannel(on: boolean): void {
    if (on === this.channelOn) {
      return;
    }
    this.channelOn = on;
    if (!on) {
      if (this.cancelPending) {
        this.cancelPending();
        this.cancelPending = null;
      }
      this.server = null;
      this.serverGeneration = -1;
    } else {
      this.scheduleSync();
    }
  }

  /**
   * Current styling: the merge of lexical tokens with the latest server
   * tokens when the channel is on, plain lexical classes otherwise.
   */
  styling(): StyledSpan[] {
    if (!this.channelOn || this.server === null) {
      return lexicalStyles(this.tokens);
    }
    return merge(this.tokens, this.server).styled;
  }

  /** `lexical` without server tokens, else the merge verdict. */
  mergeState(): MergeState | "lexical" {
    if (!this.channelOn || this.server === null) {
      return "lexical";
    }
    return merge(this.tokens, this.server).state;
  }

  /** True when the merge drifted enough to want a fresh analysis. */
  needsRefresh(): boolean {
    return this.mergeState() === "out_of_sync";
  }

  private scheduleSync(): void {
    if (this.cancelPending) {
      this.cancelPending();
    }
    const generation = this.generation;
    const text = this.text;
    this.cancelPending = this.schedule(() => {
      this.cancelPending = null;
      this.sync(text, generation);
    }, this.debounceMs);
  }
}
