/**
 * Embedded-page parameters: a workbench page can be seeded from its URL
 * with a program (`code`), a query to place in the runner (`q`), example
 * queries (`examples`, repeatable), and a hidden support program
 * (`background`) consulted alongside the visible one.
 */

export interface EmbedParams {
  code: string | null;
  q: string | null;
  examples: string[];
  background: string | null;
}

export interface EmbedModel {
  editorText: string;
  backgroundText: string;
  queryText: string;
  exampleQueries: string[];
}

export function parseEmbed(url: string): EmbedParams {
  const parsed = new URL(url, "http://embed.invalid/");
  const params = parsed.searchParams;
  return {
    code: params.get("code"),
    q: params.get("q"),
    examples: params.getAll("examples"),
    background: params.get("background"),
  };
}

/**
 * Initial page state for the parameters: the editor shows `code`, the
 * query field shows `q` (or the first example when `q` is absent), and
 * `background` stays out of the editor but is consulted with the program.
 */
export function embedModel(params: EmbedParams): EmbedModel {
  return {
    editorText: params.code ?? "",
    backgroundText: params.background ?? "",
    queryText: params.q ?? params.examples[0] ?? "",
    exampleQueries: params.examples,
  };
}

/** Program text to consult when running: background first, then editor. */
export function programText(model: EmbedModel): string {
  const parts = [model.backgroundText, model.editorText].filter(
    (t) => t !== "",
  );
  return parts.join("\n");
}
