/**
 * Display-document helpers: plain-text projection of a node tree and
 * selection among alternative renderings.
 */

import type { DisplayDoc, DocAlternative, DocNode } from "./wire.js";

/** Plain-text projection: concatenation of the text leaves. */
export function docText(node: DocNode): string {
  switch (node.node) {
    case "text":
      return node.text;
    case "span":
    case "group":
      return node.children.map(docText).join("");
    case "table":
      return node.rows
        .map((row) => row.map(docText).join("\t"))
        .join("\n");
    default:
      return "";
  }
}

/** Renderer names offered by a document, primary first. */
export function rendererNames(doc: DisplayDoc): string[] {
  return [doc.renderer, ...doc.alternatives.map((a) => a.renderer)];
}

/**
 * The rendering for `name`: the primary one, a named alternative, or
 * null when the document offers no such renderer.
 */
export function selectRendering(
  doc: DisplayDoc,
  name: string,
): DocAlternative | null {
  if (name === doc.renderer) {
    return { renderer: doc.renderer, root: doc.root };
  }
  const alt = doc.alternatives.find((a) => a.renderer === name);
  return alt ?? null;
}
