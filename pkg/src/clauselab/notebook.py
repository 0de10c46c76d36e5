"""Notebook data model: ordered cells of four kinds.

A query cell runs against all *global* program cells plus the nearest
*local* program cell above it. Notebooks serialize to a plain HTML
document (one element per cell, settings as data attributes) so stored
notebooks stay human-inspectable; the store treats that document as
opaque text.
"""

from __future__ import annotations

import html
import html.parser
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .tokens import tokenize

CELL_KINDS = ("program", "query", "markdown", "html")


@dataclass(frozen=True)
class QuerySettings:
    tabled: bool = False
    run_on_load: bool = False
    initial_count: int = 1
    chunk: int = 1


@dataclass(frozen=True)
class Cell:
    kind: str
    text: str = ""
    is_global: bool = False                      # program cells only
    settings: Optional[QuerySettings] = None     # query cells only

    def __post_init__(self):
        if self.kind not in CELL_KINDS:
            raise ValueError(f"unknown cell kind {self.kind!r}")
        if self.is_global and self.kind != "program":
            raise ValueError("only program cells can be global")
        if self.settings is not None and self.kind != "query":
            raise ValueError("only query cells have settings")
        if self.kind == "query" and self.settings is None:
            object.__setattr__(self, "settings", QuerySettings())


def program(text: str, is_global: bool = False) -> Cell:
    return Cell("program", text, is_global=is_global)


def query(text: str, **settings) -> Cell:
    return Cell("query", text, settings=QuerySettings(**settings))


def markdown(text: str) -> Cell:
    return Cell("markdown", text)


def html_cell(text: str) -> Cell:
    return Cell("html", text)


@dataclass(frozen=True)
class Notebook:
    cells: tuple = ()
    name: Optional[str] = None
    stored_ref: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))


# ---------------------------------------------------------------------------
# source assembly


def assemble_sources(nb: Notebook, q: int) -> str:
    """Program text a query cell runs against: every global program
    cell in notebook order, then the nearest local program cell above."""
    if not (0 <= q < len(nb.cells)) or nb.cells[q].kind != "query":
        raise IndexError(f"cell {q} is not a query cell")
    parts = [c.text for c in nb.cells
             if c.kind == "program" and c.is_global]
    for i in range(q - 1, -1, -1):
        cell = nb.cells[i]
        if cell.kind == "program" and not cell.is_global:
            parts.append(cell.text)
            break
    return "\n".join(p for p in parts if p)


# ---------------------------------------------------------------------------
# edits (value semantics)


def insert(nb: Notebook, i: int, cell: Cell) -> Notebook:
    cells = list(nb.cells)
    if not (0 <= i <= len(cells)):
        raise IndexError(f"insert position {i} out of range")
    cells.insert(i, cell)
    return replace(nb, cells=tuple(cells))


def delete(nb: Notebook, i: int) -> Notebook:
    cells = list(nb.cells)
    del cells[i]
    return replace(nb, cells=tuple(cells))


def move(nb: Notebook, i: int, j: int) -> Notebook:
    cells = list(nb.cells)
    if not (0 <= i < len(cells) and 0 <= j < len(cells)):
        raise IndexError(f"move {i} -> {j} out of range")
    cell = cells.pop(i)
    cells.insert(j, cell)
    return replace(nb, cells=tuple(cells))


def update(nb: Notebook, i: int, text: str) -> Notebook:
    cells = list(nb.cells)
    cells[i] = replace(cells[i], text=text)
    return replace(nb, cells=tuple(cells))


# ---------------------------------------------------------------------------
# serialization: HTML with one element per cell


def serialize(nb: Notebook) -> str:
    out = ['<!DOCTYPE html>\n<html><head><meta charset="utf-8"/>']
    title = html.escape(nb.name or "notebook")
    out.append(f"<title>{title}</title></head>\n")
    name_attr = f' data-name="{html.escape(nb.name, quote=True)}"' \
        if nb.name else ""
    out.append(f'<body class="notebook"{name_attr}>\n')
    for cell in nb.cells:
        attrs = [f'class="nb-cell {cell.kind}"']
        if cell.kind == "program":
            attrs.append(f'data-global="{str(cell.is_global).lower()}"')
        elif cell.kind == "query":
            s = cell.settings
            attrs.append(f'data-tabled="{str(s.tabled).lower()}"')
            attrs.append(
                f'data-run-on-load="{str(s.run_on_load).lower()}"')
            attrs.append(f'data-initial-count="{s.initial_count}"')
            attrs.append(f'data-chunk="{s.chunk}"')
        out.append(f'<div {" ".join(attrs)}>{html.escape(cell.text)}'
                   f'</div>\n')
    out.append("</body></html>\n")
    return "".join(out)


class _CellParser(html.parser.HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.cells: list = []
        self.name: Optional[str] = None
        self._current: Optional[dict] = None
        self._depth = 0
        self._chunks: list = []

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        if self._current is not None:
            self._depth += 1
            return
        if tag == "body":
            self.name = attrs.get("data-name")
            return
        classes = (attrs.get("class") or "").split()
        if tag == "div" and "nb-cell" in classes:
            kind = next((c for c in classes if c in CELL_KINDS), None)
            if kind is None:
                return
            self._current = {"kind": kind, "attrs": attrs}
            self._depth = 0
            self._chunks = []

    def handle_endtag(self, tag):
        if self._current is None:
            return
        if self._depth > 0:
            self._depth -= 1
            return
        if tag != "div":
            return
        info = self._current
        self._current = None
        text = "".join(self._chunks)
        attrs = info["attrs"]
        kind = info["kind"]
        if kind == "program":
            cell = Cell("program", text,
                        is_global=attrs.get("data-global") == "true")
        elif kind == "query":
            cell = Cell("query", text, settings=QuerySettings(
                tabled=attrs.get("data-tabled") == "true",
                run_on_load=attrs.get("data-run-on-load") == "true",
                initial_count=int(attrs.get("data-initial-count", 1)),
                chunk=int(attrs.get("data-chunk", 1))))
        else:
            cell = Cell(kind, text)
        self.cells.append(cell)

    def handle_data(self, data):
        if self._current is not None:
            self._chunks.append(data)


def deserialize(text: str) -> Notebook:
    parser = _CellParser()
    parser.feed(text)
    parser.close()
    return Notebook(tuple(parser.cells), name=parser.name)


def is_notebook_document(text: str) -> bool:
    head = text.lstrip()[:200].lower()
    return head.startswith("<!doctype html") and 'class="notebook"' \
        in text[:500]


# ---------------------------------------------------------------------------
# example queries from structured comments


_EXAMPLES_OPEN = re.compile(r"/\*\*\s*<examples>")


def extract_examples(program_text: str) -> list:
    """Queries listed in /** <examples> ... */ comment blocks: each
    "?- Goal." (possibly spanning lines) in order of appearance."""
    out = []
    for tok in tokenize(program_text):
        if tok.kind != "comment" or not _EXAMPLES_OPEN.match(tok.text):
            continue
        body = tok.text
        body = _EXAMPLES_OPEN.sub("", body, count=1)
        if body.endswith("*/"):
            body = body[:-2]
        pending: Optional[list] = None
        for line in body.splitlines():
            line = line.strip()
            if pending is None:
                if line.startswith("?-"):
                    pending = [line[2:].strip()]
            else:
                pending.append(line)
            if pending is not None:
                joined = " ".join(p for p in pending if p)
                if joined.endswith("."):
                    out.append(joined)
                    pending = None
    return out


# ---------------------------------------------------------------------------
# profiles: skeleton documents for the "new document" menu


def load_profiles(directory) -> list:
    """Entries {name, title, type, text} from a profiles directory with
    an index.json of {name, title, type} records."""
    root = Path(directory)
    index = root / "index.json"
    if not index.exists():
        return []
    entries = json.loads(index.read_text("utf-8"))
    out = []
    for entry in entries:
        path = root / entry["name"]
        if path.exists():
            out.append({**entry, "text": path.read_text("utf-8")})
    return out
