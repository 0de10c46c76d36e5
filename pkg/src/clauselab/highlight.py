"""Server-assisted semantic highlighting.

The server keeps a mirror of each editor buffer, updated by character
deltas. A cross-reference pass over the mirror classifies every token:
clause heads (called or not), goals (builtin / local / undefined /
recursive), singleton variables, and so on. The client merges these
enriched tokens with its own lexical tokens, falling back to lexical
styling wherever the streams have drifted apart.

Token classes are constrained by a published compatibility table
(data/compat.json) mapping each lexical kind to its legal semantic
classes; the merge rejects any pair outside the table.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json
import threading
from dataclasses import dataclass, field
from typing import Optional

from .syntax import ParseError, parse_tokens, split_clauses, \
    standard_operators
from .terms import Atom, Float, Integer, String, Struct, Term, Var
from .tokens import LexToken, SourceSpan, tokenize

_CONTROL = {(",", 2), (";", 2), ("->", 2), ("*->", 2), ("\\+", 1),
            ("forall", 2)}

# goal positions inside meta-calling builtins (same shape as the sandbox's)
_META_GOAL_ARGS = {("call", n): [0] for n in range(1, 9)}
_META_GOAL_ARGS.update({
    ("findall", 3): [1], ("aggregate_all", 3): [1],
    ("distinct", 2): [1], ("limit", 2): [1], ("order_by", 2): [1],
    ("time", 1): [0],
    ("maplist", 2): [0], ("maplist", 3): [0], ("maplist", 4): [0],
})

_DEFAULT_CLASS = {
    "atom": "atom", "functor": "functor", "var": "var(normal)",
    "number": "number", "string": "string", "punct": "punct",
    "fullstop": "fullstop", "comment": "comment", "error": "error",
}


def compatibility_table() -> dict:
    data = importlib.resources.files("clauselab.data").joinpath(
        "compat.json").read_text("utf-8")
    return json.loads(data)


_COMPAT = None


def _compat() -> dict:
    global _COMPAT
    if _COMPAT is None:
        _COMPAT = {k: set(v) for k, v in compatibility_table().items()}
    return _COMPAT


@dataclass(frozen=True)
class SemanticToken:
    kind: str  # lexical kind
    sem: str   # semantic class, compatible with kind
    span: SourceSpan
    text: str  # lexeme, so clients can spot drifted tokens

    def as_json(self) -> dict:
        return {"kind": self.kind, "class": self.sem,
                "start": self.span.start, "end": self.span.end,
                "text": self.text}


@dataclass
class TokenGroups:
    groups: list  # list of per-clause SemanticToken lists
    generation: int = 0

    def as_json(self) -> list:
        return [[t.as_json() for t in g] for g in self.groups]


class HighlightError(Exception):
    def __init__(self, code: str, message: str = ""):
        super().__init__(message or code)
        self.code = code  # 'unknown_session' | 'stale_span'
        self.message = message or code


# ---------------------------------------------------------------------------
# cross-reference enrichment


def _builtin_keys() -> set:
    from .sandbox import default_whitelist
    return default_whitelist() | _CONTROL | {
        ("true", 0), ("fail", 0), ("false", 0), ("!", 0),
        # directive forms, so ':- dynamic(f/1).' reads as builtin usage
        ("dynamic", 1), ("op", 3), ("set_prolog_flag", 2),
        ("use_rendering", 1), ("use_rendering", 2), ("include", 1)}


def _indicator(term: Term):
    if isinstance(term, Atom):
        return (term.name, 0)
    if isinstance(term, Struct):
        return (term.name, len(term.args))
    return None


class _Xref:
    """Document-wide facts the classifier needs: which predicates are
    defined here and which are called from any body."""

    def __init__(self):
        self.defined: set = set()
        self.called: set = set()
        self.clause_count: dict = {}

    def scan(self, term: Term):
        if isinstance(term, Struct) and term.name == ":-":
            if len(term.args) == 1:
                self._scan_body(term.args[0])
                return
            if len(term.args) == 2:
                self._add_head(term.args[0])
                self._scan_body(term.args[1])
                return
        self._add_head(term)

    def _add_head(self, head: Term):
        key = _indicator(head)
        if key is not None:
            self.defined.add(key)
            self.clause_count[key] = self.clause_count.get(key, 0) + 1

    def _scan_body(self, body: Term):
        key = _indicator(body)
        if key is None:
            return
        if key in _CONTROL:
            for arg in body.args:
                self._scan_body(arg)
            return
        self.called.add(key)
        if key in _META_GOAL_ARGS:
            for i in _META_GOAL_ARGS[key]:
                self._scan_body(body.args[i])
        if key == ("dynamic", 1):
            self._scan_dynamic(body.args[0])

    def _scan_dynamic(self, spec: Term):
        if isinstance(spec, Struct) and spec.name in (",", ".") \
                and len(spec.args) == 2:
            self._scan_dynamic(spec.args[0])
            self._scan_dynamic(spec.args[1])
        elif isinstance(spec, Struct) and spec.name == "/" \
                and len(spec.args) == 2 \
                and isinstance(spec.args[0], Atom) \
                and isinstance(spec.args[1], Integer):
            self.defined.add((spec.args[0].name, spec.args[1].value))


class _Classifier:
    def __init__(self, run, res, xref: _Xref, builtins: set):
        self.tokens = [t for t in run if t.kind != "comment"]
        self.res = res
        self.xref = xref
        self.builtins = builtins
        self.classes: dict = {}  # token start offset -> semantic class
        self.info: dict = {}     # token start offset -> (name, arity)
        self.head_key = None

    def _var_class(self, name: str) -> str:
        if name.startswith("_"):
            # anonymous and _-prefixed names opt out of singleton marking
            return "var(normal)"
        count = self.res.var_counts.get(name, 0)
        return "var(singleton)" if count == 1 else "var(normal)"

    def _goal_class(self, key) -> str:
        if key == self.head_key:
            return "goal(recursive)"
        if key in self.builtins:
            return "goal(builtin)"
        if key in self.xref.defined:
            return "goal(local)"
        return "goal(undefined)"

    def _head_class(self, key) -> str:
        return "head(called)" if key in self.xref.called \
            else "head(not_called)"

    def _token_at(self, start: int) -> Optional[LexToken]:
        for t in self.tokens:
            if t.span.start == start:
                return t
            if t.span.start > start:
                return None
        return None

    def _op_token(self, lay, name: str) -> Optional[LexToken]:
        """The operator's own token: inside the layout span but outside
        every child span."""
        holes = [(c.span.start, c.span.end) for c in lay.children]
        for t in self.tokens:
            if t.span.start < lay.span.start:
                continue
            if t.span.start >= lay.span.end:
                return None
            if any(s <= t.span.start < e for s, e in holes):
                continue
            if t.kind in ("atom", "functor") and _token_atom_name(t) == name:
                return t
        return None

    def classify(self):
        term = self.res.term
        lay = self.res.layout
        if isinstance(term, Struct) and term.name == ":-" \
                and len(term.args) == 2 and len(lay.children) == 2:
            self.head_key = _indicator(term.args[0])
            neck = self._op_token(lay, ":-")
            if neck:
                self.classes[neck.span.start] = "neck"
            self._walk(term.args[0], lay.children[0], "head")
            self._walk(term.args[1], lay.children[1], "goal")
        elif isinstance(term, Struct) and term.name in (":-", "?-") \
                and len(term.args) == 1 and len(lay.children) == 1:
            neck = self._op_token(lay, term.name)
            if neck:
                self.classes[neck.span.start] = "neck"
            self._walk(term.args[0], lay.children[0], "goal")
        else:
            self.head_key = _indicator(term)
            self._walk(term, lay, "head")

    def _walk(self, term: Term, lay, role: str):
        if isinstance(term, Var):
            self.classes[lay.span.start] = self._var_class(term.name)
            return
        if isinstance(term, Atom):
            key = (term.name, 0)
            if role == "head":
                self.classes[lay.span.start] = self._head_class(key)
                self.info[lay.span.start] = key
            elif role == "goal":
                self.classes[lay.span.start] = self._goal_class(key)
                self.info[lay.span.start] = key
            return
        if isinstance(term, (Integer, Float, String)):
            return
        assert isinstance(term, Struct)
        key = (term.name, len(term.args))
        if len(lay.children) != len(term.args):
            return  # layout lost arg structure (parenthesized); bail out
        if key == (".", 2) or key == ("{}", 1):
            for arg, child in zip(term.args, lay.children):
                self._walk(arg, child, "arg" if role != "goal" or
                           key == (".", 2) else "goal")
            return
        if role == "goal" and key in _CONTROL:
            op = self._op_token(lay, term.name)
            if op:
                self.classes[op.span.start] = \
                    "punct" if term.name == "," else "operator"
            for arg, child in zip(term.args, lay.children):
                self._walk(arg, child, "goal")
            return
        functor = self._token_at(lay.span.start)
        if functor is not None and functor.kind == "functor":
            cls = {"head": self._head_class(key),
                   "goal": self._goal_class(key)}.get(role, "functor")
            self.classes[functor.span.start] = cls
            if role in ("head", "goal"):
                self.info[functor.span.start] = key
        else:
            op = self._op_token(lay, term.name)
            if op is not None:
                if role == "goal":
                    self.classes[op.span.start] = self._goal_class(key)
                    self.info[op.span.start] = key
                elif role == "head":
                    self.classes[op.span.start] = self._head_class(key)
                    self.info[op.span.start] = key
                else:
                    self.classes[op.span.start] = "operator"
        goal_args = _META_GOAL_ARGS.get(key, ()) if role == "goal" else ()
        for i, (arg, child) in enumerate(zip(term.args, lay.children)):
            self._walk(arg, child, "goal" if i in goal_args else "arg")


def _token_atom_name(tok: LexToken) -> str:
    if tok.text.startswith("'") and tok.text.endswith("'"):
        return tok.text[1:-1].replace("''", "'")
    return tok.text


def enrich_text(text: str, ops=None, double_quotes: str = "string") \
        -> list:
    """Classified token groups, one group per clause, source order."""
    ops = ops or standard_operators()
    runs = split_clauses(tokenize(text))
    xref = _Xref()
    parsed = []
    for run in runs:
        if all(t.kind == "comment" for t in run):
            parsed.append((run, None))
            continue
        try:
            res = parse_tokens(run, ops, double_quotes, text_len=len(text))
        except ParseError:
            parsed.append((run, None))
            continue
        parsed.append((run, res))
        xref.scan(res.term)
    builtins = _builtin_keys()
    groups = []
    for run, res in parsed:
        classes: dict = {}
        if res is not None:
            c = _Classifier(run, res, xref, builtins)
            c.classify()
            classes = c.classes
        group = [SemanticToken(t.kind,
                               classes.get(t.span.start,
                                           _DEFAULT_CLASS[t.kind]),
                               t.span, t.text)
                 for t in run]
        if group:
            groups.append(group)
    return groups


# ---------------------------------------------------------------------------
# editor mirrors


@dataclass
class EditorMirror:
    session: str
    text: str = ""
    generation: int = 0
    dirty: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock,
                                 repr=False)

    def checksum(self) -> str:
        return hashlib.sha1(self.text.encode("utf-8")).hexdigest()


class Mirrors:
    """All live editor mirrors, keyed by session id."""

    def __init__(self):
        self._mirrors: dict = {}
        self._lock = threading.Lock()

    def create(self, session: str, text: str = "") -> EditorMirror:
        with self._lock:
            mirror = EditorMirror(session, text)
            self._mirrors[session] = mirror
            return mirror

    def get(self, session: str) -> EditorMirror:
        with self._lock:
            mirror = self._mirrors.get(session)
        if mirror is None:
            raise HighlightError("unknown_session",
                                 f"no mirror for session {session!r}")
        return mirror

    def drop(self, session: str):
        with self._lock:
            self._mirrors.pop(session, None)

    def apply_delta(self, session: str, start: int, end: int,
                    replacement: str) -> int:
        mirror = self.get(session)
        with mirror.lock:
            if not (0 <= start <= end <= len(mirror.text)):
                raise HighlightError(
                    "stale_span",
                    f"span {start}..{end} outside mirror of length "
                    f"{len(mirror.text)}")
            mirror.text = mirror.text[:start] + replacement \
                + mirror.text[end:]
            mirror.generation += 1
            mirror.dirty = True
            return mirror.generation

    def set_text(self, session: str, text: str) -> int:
        mirror = self.get(session)
        with mirror.lock:
            mirror.text = text
            mirror.generation += 1
            mirror.dirty = False
            return mirror.generation

    def enrich(self, session: str, ops=None,
               double_quotes: str = "string") -> TokenGroups:
        mirror = self.get(session)
        with mirror.lock:
            text = mirror.text
            generation = mirror.generation
        groups = enrich_text(text, ops, double_quotes)
        with mirror.lock:
            if mirror.generation != generation:
                # a delta landed mid-analysis; the reply is already stale
                return TokenGroups(groups, generation)
            mirror.dirty = False
        return TokenGroups(groups, generation)


# ---------------------------------------------------------------------------
# client-side merge (reference implementation, also used headless)


@dataclass
class MergeResult:
    styled: list  # dicts {start, end, kind, class}
    state: str    # 'in_sync' | 'resynced' | 'out_of_sync'
    offset: Optional[int] = None  # first repaired client offset


def _compatible(client: LexToken, server: SemanticToken) -> bool:
    if client.kind != server.kind or client.text != server.text:
        return False
    return server.sem in _compat().get(client.kind, ())


def _style(tok: LexToken, sem: Optional[str] = None) -> dict:
    return {"start": tok.span.start, "end": tok.span.end,
            "kind": tok.kind,
            "class": sem if sem is not None else _DEFAULT_CLASS[tok.kind]}


def merge(client: list, server: TokenGroups) -> MergeResult:
    """Overlay server classes onto the client's lexical tokens.

    Compatible pairs take the server class. One-token insert, delete, or
    replace drift is repaired in place ('resynced'); anything worse skips
    to the next clause group and reports 'out_of_sync' so the client
    schedules a refresh."""
    flat = []
    ends = []  # index just past each group
    for group in server.groups:
        flat.extend(group)
        ends.append(len(flat))
    styled = []
    state = "in_sync"
    offset = None
    i = j = 0
    while i < len(client):
        ct = client[i]
        if j < len(flat) and _compatible(ct, flat[j]):
            styled.append(_style(ct, flat[j].sem))
            i += 1
            j += 1
            continue
        if j >= len(flat):
            styled.append(_style(ct))
            i += 1
            if state != "out_of_sync":
                state = "out_of_sync" if ct.kind != "comment" else state
            continue

        def matches(ci, sj):
            if ci >= len(client) or sj >= len(flat):
                return ci >= len(client) and sj >= len(flat)
            return _compatible(client[ci], flat[sj])

        if matches(i + 1, j):          # client inserted one token
            styled.append(_style(ct))
            i += 1
            repaired = True
        elif matches(i, j + 1):        # client deleted one token
            j += 1
            repaired = True
        elif matches(i + 1, j + 1):    # one token replaced
            styled.append(_style(ct))
            i += 1
            j += 1
            repaired = True
        else:
            repaired = False
        if repaired:
            if state == "in_sync":
                state = "resynced"
                offset = ct.span.start
            continue
        # skip to the next clause: style the rest of this client clause
        # lexically and d rop the rest of the server group
        state = "out_of_sync"
        while i < len(client) and client[i].kind != "fullstop":
            styled.append(_style(client[i]))
            i += 1
        if i < len(client):
            styled.append(_style(client[i]))
            i += 1
        j = next((e for e in ends if e > j), len(flat))
    return MergeResult(styled, state, offset)


# ---------------------------------------------------------------------------
# hover documentation and completion templates

_PREDICATE_DOCS = {
    ("atom_length", 2): ("builtin", "atom_length(+Atom, -Length)",
                         "Length is the number of characters in Atom."),
    ("append", 3): ("library", "append(?List1, ?List2, ?List1AndList2)",
                    "List1AndList2 is the concatenation of List1 and "
                    "List2."),
    ("member", 2): ("library", "member(?Elem, ?List)",
                    "True if Elem is a member of List."),
    ("reverse", 2): ("library", "reverse(?List, ?Reversed)",
                     "Reversed has the same elements as List in reverse "
                     "order."),
    ("length", 2): ("builtin", "length(?List, ?Length)",
                    "True if Length is the number of elements of List."),
    ("between", 3): ("builtin", "between(+Low, +High, ?X)",
                     "Low =< X =< High; enumerates X when unbound."),
    ("findall", 3): ("builtin", "findall(+Template, :Goal, -Bag)",
                     "Bag holds one Template instance per solution of "
                     "Goal."),
    ("msort", 2): ("builtin", "msort(+List, -Sorted)",
                   "Sorted is List sorted by the standard order of "
                   "terms; duplicates retained."),
    ("keysort", 2): ("builtin", "keysort(+Pairs, -Sorted)",
                     "Stable sort of Key-Value pairs by Key."),
    ("is", 2): ("builtin", "-Number is +Expr",
                "Number is the value of arithmetic expression Expr."),
    ("format", 2): ("builtin", "format(+Format, :Args)",
                    "Emit Format, substituting ~w, ~q, ~a, ~d and friends "
                    "from Args."),
    ("maplist", 3): ("library", "maplist(:Goal, ?List1, ?List2)",
                     "True if Goal applies pairwise to List1 and List2."),
}


def _generic_template(name: str, arity: int) -> str:
    if arity == 0:
        return name
    args = ", ".join(f"?A{i}" for i in range(1, arity + 1))
    return f"{name}({args})"


def templates() -> list:
    """Completion templates for every available builtin."""
    from .sandbox import default_whitelist
    out = []
    for name, arity in sorted(default_whitelist()):
        doc = _PREDICATE_DOCS.get((name, arity))
        template = doc[1] if doc else _generic_template(name, arity)
        out.append({"name": name, "arity": arity, "template": template})
    return out


def hover_info(mirrors: Mirrors, session: str, offset: int,
               ops=None) -> Optional[dict]:
    mirror = mirrors.get(session)
    with mirror.lock:
        text = mirror.text
    ops = ops or standard_operators()
    runs = split_clauses(tokenize(text))
    xref = _Xref()
    hits = []
    parsed = []
    for run in runs:
        if all(t.kind == "comment" for t in run):
            continue
        try:
            res = parse_tokens(run, ops, "string", text_len=len(text))
        except ParseError:
            continue
        parsed.append((run, res))
        xref.scan(res.term)
    builtins = _builtin_keys()
    for run, res in parsed:
        c = _Classifier(run, res, xref, builtins)
        c.classify()
        for start, key in c.info.items():
            tok = c._token_at(start)
            if tok and tok.span.start <= offset < tok.span.end:
                hits.append((key, c.classes.get(start, "")))
    if not hits:
        return None
    key, sem = hits[0]
    doc = _PREDICATE_DOCS.get(key)
    if key in xref.defined:
        n = xref.clause_count.get(key, 0)
        return {"source": "local",
                "summary": f"{key[0]}/{key[1]}: defined in this program "
                           f"({n} clause{'s' if n != 1 else ''})"}
    if doc:
        return {"source": doc[0], "summary": f"{doc[1]} — {doc[2]}"}
    if key in builtins:
        return {"source": "builtin",
                "summary": _generic_template(key[0], key[1])}
    return None
