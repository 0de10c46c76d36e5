"""Answer rendering: term -> display document.

A display document is a JSON-serializable node tree:

    {"node": "text",  "text": str}
    {"node": "span",  "class": str, "children": [...]}
    {"node": "group", "folded": bool, "children": [...]}   # foldable
    {"node": "table", "header": [str] | None, "rows": [[node...]]}
    {"node": "image", "src": str, "alt": str}
    {"node": "svg",   "markup": str}

Every answer term is offered to the active special-purpose renderers in
activation order; each may produce a document or decline. The first
success is the primary view, the other successes plus the always-
succeeding generic view are kept as alternatives (the UI's hover menu).
The generic view's plain-text projection re-reads to the same term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from html import escape

from .terms import (Atom, Float, Integer, String, Struct, Term, Var,
                    list_parts)
from .writer import atom_text, write_term


def text_node(s: str) -> dict:
    return {"node": "text", "text": s}


def span(cls: str, children: list) -> dict:
    return {"node": "span", "class": cls, "children": children}


def group(children: list, folded: bool = False) -> dict:
    return {"node": "group", "folded": folded, "children": children}


@dataclass
class DisplayDoc:
    renderer: str
    root: dict
    alternatives: list = field(default_factory=list)  # [(renderer, root)]

    def as_json(self) -> dict:
        return {"renderer": self.renderer, "root": self.root,
                "alternatives": [{"renderer": n, "root": r}
                                 for n, r in self.alternatives]}


@dataclass(frozen=True)
class RendererRegistration:
    name: str
    description: str
    recognizer: Callable  # (Term, var names, options) -> root node | None
    option_keys: frozenset = frozenset()


# ---------------------------------------------------------------------------
# generic renderer: structure-preserving, text projection == writeq


def _atom_node(a: Atom) -> dict:
    return span("atom", [text_node(atom_text(a.name, quoted=True))])


def _generic_nodes(term: Term) -> dict:
    if isinstance(term, Var):
        return span("var", [text_node(write_term(term))])
    if isinstance(term, Atom):
        return _atom_node(term)
    if isinstance(term, (Integer, Float)):
        return span("number", [text_node(write_term(term))])
    if isinstance(term, String):
        return span("string", [text_node(write_term(term, quoted=True))])
    assert isinstance(term, Struct)
    items, tail = list_parts(term)
    if items:
        children = [text_node("[")]
        for i, item in enumerate(items):
            if i:
                children.append(text_node(","))
            children.append(_generic_nodes(item))
        if not (isinstance(tail, Atom) and tail.name == "[]"):
            children.append(text_node("|"))
            children.append(_generic_nodes(tail))
        children.append(text_node("]"))
        return group(children)
    if term.name == "{}" and len(term.args) == 1:
        # flatten the right spine of the comma chain: {a,b,c}
        parts = []
        node = term.args[0]
        while isinstance(node, Struct) and node.name == "," \
                and len(node.args) == 2:
            parts.append(node.args[0])
            node = node.args[1]
        parts.append(node)
        children = [text_node("{")]
        for i, part in enumerate(parts):
            if i:
                children.append(text_node(","))
            children.append(_generic_nodes(part))
        children.append(text_node("}"))
        return group(children)
    children = [span("functor",
                     [text_node(atom_text(term.name, quoted=True))]),
                text_node("(")]
    for i, arg in enumerate(term.args):
        if i:
            children.append(text_node(","))
        children.append(_generic_nodes(arg))
    children.append(text_node(")"))
    return group(children)


def generic_renderer(term: Term, names=None, options=None) -> dict:
    return _generic_nodes(term)


def doc_text(node: dict) -> str:
    """Plain-text projection: concatenation of the text leaves."""
    if node["node"] == "text":
        return node["text"]
    if node["node"] in ("span", "group"):
        return "".join(doc_text(c) for c in node["children"])
    if node["node"] == "table":
        rows = []
        for row in node["rows"]:
            rows.append("\t".join(doc_text(c) for c in row))
        return "\n".join(rows)
    return ""


# ---------------------------------------------------------------------------
# special-purpose renderers


def _int_list(term: Term) -> Optional[list]:
    items, tail = list_parts(term)
    if not (isinstance(tail, Atom) and tail.name == "[]"):
        return None
    out = []
    for item in items:
        if not isinstance(item, Integer):
            return None
        out.append(item.value)
    return out


def chess_renderer(term: Term, names=None, options=None) -> Optional[dict]:
    """N-queens boards: a permutation of 1..N, element i = column of the
    queen on row i."""
    cols = _int_list(term)
    if not cols:
        return None
    n = len(cols)
    if sorted(cols) != list(range(1, n + 1)):
        return None
    rows = []
    for r in range(n):
        row = []
        for c in range(1, n + 1):
            # top-left square is light, like a real board seen from white
            shade = "light" if (r + c) % 2 else "dark"
            piece = "♛" if cols[r] == c else ""
            row.append(span(f"square {shade}", [text_node(piece)]))
        rows.append(row)
    return {"node": "table", "class": "chess-board", "header": None,
            "rows": rows}


def table_renderer(term: Term, names=None, options=None) -> Optional[dict]:
    """Lists of same-shape rows: lists of equal length, or compounds
    with one shared functor/arity, or Key-Value pairs."""
    items, tail = list_parts(term)
    if not items or not (isinstance(tail, Atom) and tail.name == "[]"):
        return None
    rows = []
    shape = None
    for item in items:
        if isinstance(item, Struct) and item.name != "." :
            sig = (item.name, len(item.args))
            cells = item.args
        elif isinstance(item, Struct):
            cells_list, t2 = list_parts(item)
            if not (isinstance(t2, Atom) and t2.name == "[]"):
                return None
            sig = ("[]", len(cells_list))
            cells = tuple(cells_list)
        else:
            return None
        if shape is None:
            shape = sig
        elif shape != sig:
            return None
        rows.append([_generic_nodes(c) for c in cells])
    if shape is None or shape[1] == 0:
        return None
    header = None
    if options and "header" in options:
        header = [str(h) for h in options["header"]]
    return {"node": "table", "class": "answer-table", "header": header,
            "rows": rows}


_BUILTIN_RENDERERS = [
    RendererRegistration(
        "table", "tabular view of uniform lists", table_renderer,
        frozenset({"header"})),
    RendererRegistration(
        "chess", "chess board for N-queens permutations", chess_renderer),
]

REGISTRY = {r.name: r for r in _BUILTIN_RENDERERS}


# ---------------------------------------------------------------------------
# registry operations


def activate(ws, name: str, options: Optional[dict] = None) -> str:
    """Enable a renderer for a workspace, validating the option keys."""
    reg = REGISTRY.get(name)
    if reg is None:
        return "unknown_renderer"
    options = options or {}
    unknown = set(options) - set(reg.option_keys)
    if unknown:
        return "unknown_option"
    ws.renderings.append((name, options))
    return "ok"


def _options_from_term(term) -> dict:
    """use_rendering option lists arrive as terms; keep it shallow:
    key(Value) becomes {key: text}."""
    out = {}
    items, _tail = list_parts(term) if isinstance(term, Struct) \
        else ([], None)
    for item in items:
        if isinstance(item, Struct) and len(item.args) == 1:
            val = item.args[0]
            parts, t2 = list_parts(val) if isinstance(val, Struct) \
                else ([], None)
            if parts:
                out[item.name] = [write_term(p) for p in parts]
            else:
                out[item.name] = write_term(val)
    return out


def active_renderers(ws) -> list:
    """(registration, options) pairs in activation order, unknown names
    skipped."""
    out = []
    for name, opts in getattr(ws, "renderings", ()):
        reg = REGISTRY.get(name)
        if reg is None:
            continue
        options = opts if isinstance(opts, dict) else _options_from_term(opts)
        out.append((reg, options))
    return out


def render_answer(term: Term, names: Optional[dict] = None,
                  active: Optional[list] = None,
                  options: Optional[dict] = None) -> DisplayDoc:
    """First succeeding special renderer wins; everything else (plus the
    generic form) is reachable as an alternative."""
    produced = []
    for entry in active or []:
        reg, opts = entry if isinstance(entry, tuple) else (entry, {})
        if isinstance(reg, str):
            reg = REGISTRY.get(reg)
            if reg is None:
                continue
        try:
            root = reg.recognizer(term, names, opts or options)
        except Exception:
            continue  # a crashing plugin must not take the answer down
        if root is not None:
            produced.append((reg.name, root))
    generic = ("generic", generic_renderer(term, names))
    if produced:
        primary = produced[0]
        alternatives = produced[1:] + [generic]
    else:
        primary = generic
        alternatives = []
    return DisplayDoc(primary[0], primary[1], alternatives)


def table_answers(answers: list, projection: list) -> DisplayDoc:
    """One row per answer, one column per projected variable."""
    rows = []
    for binding in answers:
        rows.append([_generic_nodes(binding[name]) if name in binding
                     else text_node("") for name in projection])
    root = {"node": "table", "class": "answer-table",
            "header": list(projection), "rows": rows}
    return DisplayDoc("table", root)


def fold(doc: DisplayDoc, path: list) -> DisplayDoc:
    """Collapse the group at a child-index path to an ellipsis."""
    def rebuild(node, remaining):
        if not remaining:
            if node.get("node") == "group":
                return {**node, "folded": True}
            return node
        if node.get("node") not in ("span", "group"):
            return node
        i, rest = remaining[0], remaining[1:]
        children = list(node["children"])
        if not (0 <= i < len(children)):
            return node
        children[i] = rebuild(children[i], rest)
        return {**node, "children": children}

    return DisplayDoc(doc.renderer, rebuild(doc.root, list(path)),
                      doc.alternatives)


# ---------------------------------------------------------------------------
# reference HTML serialization (declarative; no scripts)


def to_html(node) -> str:
    if isinstance(node, DisplayDoc):
        return to_html(node.root)
    kind = node["node"]
    if kind == "text":
        return escape(node["text"])
    if kind == "span":
        inner = "".join(to_html(c) for c in node["children"])
        return f'<span class="{escape(node["class"])}">{inner}</span>'
    if kind == "group":
        if node.get("folded"):
            return '<span class="fold folded">&hellip;</span>'
        inner = "".join(to_html(c) for c in node["children"])
        return f'<span class="fold">{inner}</span>'
    if kind == "table":
        parts = [f'<table class="{escape(node.get("class", "table"))}">']
        if node.get("header"):
            cells = "".join(f"<th>{escape(h)}</th>"
                            for h in node["header"])
            parts.append(f"<thead><tr>{cells}</tr></thead>")
        parts.append("<tbody>")
        for row in node["rows"]:
            cells = "".join(f"<td>{to_html(c)}</td>" for c in row)
            parts.append(f"<tr>{cells}</tr>")
        parts.append("</tbody></table>")
        return "".join(parts)
    if kind == "image":
        return (f'<img src="{escape(node["src"])}" '
                f'alt="{escape(node.get("alt", ""))}"/>')
    if kind == "svg":
        return node["markup"]  # produced only by compiled-in renderers
    raise ValueError(f"unknown display node {kind!r}")
