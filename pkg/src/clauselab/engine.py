"""Per-workspace clause store and depth-first resolution engine.

The machine keeps an explicit goal stack (persistent cons list) and a
choicepoint stack, with trail-based undo. It runs as a generator so
callers can suspend it at answers, trace ports, and input prompts:

    yields ('answer',)            -> send 'more' or 'stop'
    yields ('trace', event, box)  -> send a trace command
    yields ('prompt', prompt)     -> send the reply term

Trace ports form properly nested call/exit/fail boxes; redo re-enters a
box. Resource limits are enforced on every inference step.
"""

from __future__ import annotations

import itertools
import time as _time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import (EngineError, ProtocolError, aborted_error,
                     existence_error, instantiation_error, permission_error,
                     resource_error, type_error)
from .syntax import (Layout, OperatorTable, ParseError, parse_tokens,
                     standard_operators, split_clauses)
from .terms import (Atom, Float, Integer, String, Struct, Term, Var,
                    term_variables, rename_term)
from .tokens import tokenize
from .unify import resolve, undo_to, unify, walk

SOL = object()  # nondeterministic builtins yield SOL once per solution

# registered by the builtins module: (name, arity) -> (kind, fn)
# kind 'det':   fn(m, args, depth) -> bool
# kind 'gen':   fn(m, args, depth) -> generator yielding SOL / machine events
# kind 'sub':   fn(m, args, depth) -> generator yielding machine events,
#               returning bool
# kind 'macro': fn(m, args, depth) -> replacement goal Term or None
BUILTINS: dict = {}


def builtin(name: str, arity: int, kind: str):
    def register(fn):
        BUILTINS[(name, arity)] = (kind, fn)
        return fn
    return register


@dataclass
class Limits:
    max_steps: int = 10_000_000
    max_chunk: int = 1_000
    timeout_ms: int = 60_000
    max_clauses: int = 100_000
    max_depth: int = 10_000_000

    def validate(self):
        for name, value in self.__dict__.items():
            if value <= 0:
                raise ValueError(f"limit {name} must be positive")


@dataclass
class Clause:
    head: Term
    body: Term
    line: int = 0
    end_line: int = 0
    goal_lines: dict = field(default_factory=dict)  # body path -> line


@dataclass
class LoadMessage:
    kind: str  # 'warning' | 'error'
    message: str
    line: int
    start: int = 0
    end: int = 0


@dataclass
class LoadReport:
    clauses: int = 0
    warnings: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


_ws_ids = itertools.count(1)


class Workspace:
    """One isolated program: clauses, local operators, flags."""

    def __init__(self, ident: Optional[str] = None,
                 max_clauses: int = 100_000):
        self.id = ident or f"ws{next(_ws_ids)}"
        self.preds: dict = {}  # (name, arity) -> list[Clause]
        self.ops: OperatorTable = standard_operators().copy()
        self.flags: dict = {"double_quotes": "string"}
        self.dynamic: set = set()
        self.renderings: list = []  # (name, options term) in directive order
        self.breakpoints: set = set()
        self.bp_preds: set = set()  # predicates whose clauses carry a breakpoint
        self.max_clauses = max_clauses
        self.clause_count = 0

    def clauses(self, key) -> Optional[list]:
        got = self.preds.get(key)
        if got is not None:
            return got
        if key in self.dynamic:
            return []
        return None

    def add_clause(self, clause: Clause, front: bool = False):
        if self.clause_count >= self.max_clauses:
            raise resource_error("clauses", self.id)
        head = clause.head
        if isinstance(head, Atom):
            key = (head.name, 0)
        elif isinstance(head, Struct):
            key = (head.name, len(head.args))
        else:
            raise type_error("callable", head, "clause head")
        bucket = self.preds.setdefault(key, [])
        if front:
            bucket.insert(0, clause)
        else:
            bucket.append(clause)
        self.clause_count += 1
        return key

    def destroy(self):
        self.preds.clear()
        self.clause_count = 0


# ---------------------------------------------------------------------------
# consult


def _clause_parts(term: Term):
    if isinstance(term, Struct) and term.name == ":-" and len(term.args) == 2:
        return term.args[0], term.args[1]
    return term, Atom("true")


_CONTROL_SHAPES = {(",", 2), (";", 2), ("->", 2), ("*->", 2), ("\\+", 1)}


def _collect_goal_lines(body: Term, lay: Layout, path: tuple, out: dict):
    out[path] = lay.span.line
    if isinstance(body, Struct) and \
            (body.name, len(body.args)) in _CONTROL_SHAPES and \
            len(lay.children) == len(body.args):
        for i, (arg, sub) in enumerate(zip(body.args, lay.children)):
            _collect_goal_lines(arg, sub, path + (i + 1,), out)


def consult(ws: Workspace, program: str,
            include_resolver: Optional[Callable] = None,
            _depth: int = 0) -> LoadReport:
    """Load clauses and directives; errors are reported per clause and do
    not abort the rest of the program."""
    report = LoadReport()
    runs = split_clauses(tokenize(program))
    for run in runs:
        if all(t.kind == "comment" for t in run):
            continue
        first = next(t for t in run if t.kind != "comment")
        try:
            res = parse_tokens(run, ws.ops, ws.flags["double_quotes"],
                               text_len=len(program))
        except ParseError as exc:
            report.errors.append(LoadMessage(
                "error", exc.message, exc.span.line,
                exc.span.start, exc.span.end))
            continue
        term = res.term
        if isinstance(term, Struct) and term.name == ":-" \
                and len(term.args) == 1:
            _run_directive(ws, term.args[0], res.layout.span.line, report,
                           include_resolver, _depth)
            continue
        head, body = _clause_parts(term)
        if not isinstance(head, (Atom, Struct)):
            report.errors.append(LoadMessage(
                "error", "clause head must be callable",
                first.span.line, first.span.start, first.span.end))
            continue
        singles = sorted(n for n, c in res.var_counts.items()
                         if c == 1 and not n.startswith("_"))
        if singles:
            report.warnings.append(LoadMessage(
                "warning",
                "singleton variables: " + ", ".join(singles),
                first.span.line, first.span.start, first.span.end))
        span = res.layout.span
        end_line = span.line + program[span.start:span.end].count("\n")
        goal_lines: dict = {}
        if isinstance(term, Struct) and term.name == ":-" \
                and len(term.args) == 2 and len(res.layout.children) == 2:
            _collect_goal_lines(body, res.layout.children[1], (), goal_lines)
        try:
            ws.add_clause(Clause(head, body, span.line, end_line, goal_lines))
            report.clauses += 1
        except EngineError as exc:
            report.errors.append(LoadMessage(
                "error", exc.message, span.line, span.start, span.end))
    return report


def _run_directive(ws: Workspace, body: Term, line: int, report: LoadReport,
                   include_resolver, depth: int):
    from .sandbox import check_directive  # cycle: sandbox reads Workspace
    verdict = check_directive(body, ws)
    if verdict != "safe":
        report.errors.append(LoadMessage(
            "error", f"directive not permitted: {_shape(body)}", line))
        return
    assert isinstance(body, Struct)
    name, args = body.name, body.args
    try:
        if name == "op":
            pri, typ, names = args
            for n in _op_targets(names):
                ws.ops.add(pri.value, typ.name, n.name)
        elif name == "set_prolog_flag":
            ws.flags[args[0].name] = args[1].name
        elif name == "use_rendering":
            opts = args[1] if len(args) == 2 else Atom("[]")
            ws.renderings.append((args[0].name, opts))
        elif name == "dynamic":
            for pi in _iter_pred_indicators(args[0]):
                ws.dynamic.add(pi)
        elif name == "include":
            if include_resolver is None:
                report.errors.append(LoadMessage(
                    "error", "include/1 is not available here", line))
                return
            if depth >= 8:
                report.errors.append(LoadMessage(
                    "error", "include nesting too deep", line))
                return
            text = include_resolver(args[0])
            sub = consult(ws, text, include_resolver, depth + 1)
            report.clauses += sub.clauses
            report.warnings.extend(sub.warnings)
            report.errors.extend(sub.errors)
    except (EngineError, ValueError, AttributeError) as exc:
        report.errors.append(LoadMessage("error", str(exc), line))


def _shape(term: Term) -> str:
    if isinstance(term, Struct):
        return f"{term.name}/{len(term.args)}"
    if isinstance(term, Atom):
        return f"{term.name}/0"
    return type(term).__name__.lower()


def _op_targets(term: Term):
    # op/3 accepts one atom, a list of atoms, or a ','-tree of atoms
    if isinstance(term, Struct) and term.name in (",", ".") \
            and len(term.args) == 2:
        yield from _op_targets(term.args[0])
        yield from _op_targets(term.args[1])
    elif isinstance(term, Atom) and term.name == "[]":
        return
    else:
        yield term


def _iter_pred_indicators(term: Term):
    if isinstance(term, Struct) and term.name == "," and len(term.args) == 2:
        yield from _iter_pred_indicators(term.args[0])
        yield from _iter_pred_indicators(term.args[1])
    elif isinstance(term, Struct) and term.name == "." and len(term.args) == 2:
        yield from _iter_pred_indicators(term.args[0])
        yield from _iter_pred_indicators(term.args[1])
    elif isinstance(term, Atom) and term.name == "[]":
        return
    elif isinstance(term, Struct) and term.name == "/" and len(term.args) == 2:
        name, arity = term.args
        if isinstance(name, Atom) and isinstance(arity, Integer):
            yield (name.name, arity.value)
        else:
            raise type_error("predicate_indicator", term)
    else:
        raise type_error("predicate_indicator", term)


# ---------------------------------------------------------------------------
# machine


class Budget:
    """Shared step/time accounting; also carries the async abort flag."""

    def __init__(self, limits: Limits):
        self.limits = limits
        self.steps = 0
        self.deadline = _time.monotonic() + limits.timeout_ms / 1000.0
        self.aborted = False

    def tick(self):
        if self.aborted:
            raise aborted_error()
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise resource_error("steps")
        if self.steps % 256 == 0 and _time.monotonic() > self.deadline:
            raise resource_error("time")


@dataclass
class TraceEvent:
    port: str  # call | exit | fail | redo
    goal: Term
    depth: int
    line: int = 0


@dataclass
class Prompt:
    goal: Term
    message: str = "|:"


@dataclass
class Answer:
    bindings: dict  # source variable name -> resolved term


_box_ids = itertools.count(1)


class Box:
    """One traced goal invocation with its call-time snapshot for retry."""

    __slots__ = ("id", "goal", "depth", "line", "frames", "cp_height", "mark")

    def __init__(self, goal, depth, line, frames, cp_height, mark):
        self.id = next(_box_ids)
        self.goal = goal
        self.depth = depth
        self.line = line
        self.frames = frames
        self.cp_height = cp_height
        self.mark = mark


class Tracer:
    def __init__(self, interactive: bool):
        self.interactive = interactive
        self.show_max: Optional[int] = None  # None: all; -1: breakpoints only


class _CPAlt:
    __slots__ = ("frames", "mark", "dead")

    def __init__(self, frames, mark):
        self.frames = frames
        self.mark = mark
        self.dead = False  # soft-cut commit disables without truncating


class _CPBox:
    __slots__ = ("box",)

    def __init__(self, box):
        self.box = box


class _CPClauses:
    __slots__ = ("box", "goal", "clauses", "cont", "mark", "depth")

    def __init__(self, box, goal, clauses, cont, mark, depth):
        self.box = box
        self.goal = goal
        self.clauses = clauses
        self.cont = cont
        self.mark = mark
        self.depth = depth


class _CPBuiltin:
    __slots__ = ("box", "gen", "cont", "mark")

    def __init__(self, box, gen, cont, mark):
        self.box = box
        self.gen = gen
        self.cont = cont
        self.mark = mark


class Machine:
    """The resolution core. One Machine per query; sub-queries (findall
    and friends) run child machines sharing bindings, trail and budget."""

    def __init__(self, ws: Workspace, limits: Limits,
                 bindings: Optional[dict] = None,
                 trail: Optional[list] = None,
                 budget: Optional[Budget] = None,
                 tracer: Optional[Tracer] = None,
                 output: Optional[Callable] = None):
        from . import builtins as _register  # noqa: F401  fills BUILTINS
        self.ws = ws
        self.limits = limits
        self.bindings = bindings if bindings is not None else {}
        self.trail = trail if trail is not None else []
        self.budget = budget or Budget(limits)
        self.tracer = tracer
        self.output = output or (lambda text: None)
        self.frames = None  # cons: (frame, rest)
        self.cps: list = []

    # -- small helpers ------------------------------------------------------
    def child(self) -> "Machine":
        return Machine(self.ws, self.limits, self.bindings, self.trail,
                       self.budget, self.tracer, self.output)

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int):
        undo_to(mark, self.bindings, self.trail)

    def unify(self, a: Term, b: Term) -> bool:
        return unify(a, b, self.bindings, self.trail)

    def resolve(self, term: Term) -> Term:
        return resolve(term, self.bindings)

    def push_call(self, goal: Term, depth: int):
        self.frames = (("goal", goal, depth, len(self.cps), None), self.frames)

    def _cut(self, height: int):
        del self.cps[height:]

    # -- trace plumbing -----------------------------------------------------
    def _hit_breakpoint(self, line: int, key) -> None:
        # a breakpoint makes the next port visible and re-enables stepping
        if self.tracer is None or not self.ws.breakpoints:
            return
        if line in self.ws.breakpoints or key in self.ws.bp_preds:
            self.tracer.show_max = None
            self.tracer.interactive = True

    def _visible(self, depth: int) -> bool:
        t = self.tracer
        if t is None or not t.interactive:
            return False
        if t.show_max is None:
            return True
        return depth <= t.show_max

    def _trace_port(self, port: str, box: Box):
        """Generator: emits the port if visible, handles commands.
        Returns 'go' or 'restart' (retry reset the machine)."""
        if not self._visible(box.depth):
            return "go"
        event = TraceEvent(port, self.resolve(box.goal), box.depth, box.line)
        cmd = yield ("trace", event, box)
        t = self.tracer
        if cmd == "abort":
            raise aborted_error()
        if cmd == "retry":
            self.frames = box.frames
            del self.cps[box.cp_height:]
            self.undo(box.mark)
            return "restart"
        if cmd in ("step_into", "creep", None):
            t.show_max = None
        elif cmd == "step_over":
            t.show_max = box.depth if port == "call" else box.depth - 1
        elif cmd == "step_out":
            t.show_max = box.depth - 1
        elif cmd == "continue":
            t.show_max = -1
        else:
            raise ProtocolError(f"unknown trace command {cmd!r}")
        return "go"

    # -- builtin driving ----------------------------------------------------
    def _drive(self, gen):
        """Generator: drive a nondet builtin until SOL (True) or
        exhaustion (False), passing other events through."""
        send = None
        while True:
            try:
                val = gen.send(send)
            except StopIteration:
                return False
            if val is SOL:
                return True
            send = yield val

    # -- the interpreter loop ----------------------------------------------
    def run(self):
        while True:
            if self.frames is None:
                cmd = yield ("answer",)
                if cmd == "stop":
                    return
                status = yield from self._backtrack()
                if status == "fail":
                    return
                continue
            frame, self.frames = self.frames
            kind = frame[0]
            if kind == "cut_to":
                self._cut(frame[1])
                continue
            if kind == "soft_commit":
                frame[1].dead = True
                continue
            if kind == "exit":
                box = frame[1]
                status = yield from self._trace_port("exit", box)
                continue  # on retry, frames already reset
            # ('goal', term, depth, cutlv, src)
            _, goal, depth, cutlv, src = frame
            self.budget.tick()
            if depth > self.limits.max_depth:
                raise resource_error("depth")
            status = yield from self._call(goal, depth, cutlv, src, frame)
            if status == "fail":
                status = yield from self._backtrack()
                if status == "fail":
                    return

    def _call(self, goal, depth, cutlv, src, frame):
        """Generator handling one goal frame. Returns 'ok'|'fail'|'restart'."""
        goal = walk(goal, self.bindings)
        if isinstance(goal, Var):
            raise instantiation_error("call")
        if isinstance(goal, (Integer, Float, String)):
            raise type_error("callable", goal, "call")
        if isinstance(goal, Atom):
            name, args = goal.name, ()
        else:
            name, args = goal.name, goal.args
        key = (name, len(args))

        # control constructs
        if key == ("true", 0):
            return "go"
        if key in (("fail", 0), ("false", 0)):
            return "fail"
        if key == ("!", 0):
            self._cut(cutlv)
            return "go"
        if key == (",", 2):
            rest = (self._goal_frame(args[1], depth, cutlv, src, 2),
                    self.frames)
            self.frames = (self._goal_frame(args[0], depth, cutlv, src, 1),
                           rest)
            return "go"
        if key == (";", 2):
            left = walk(args[0], self.bindings)
            if isinstance(left, Struct) and len(left.args) == 2 and \
                    left.name in ("->", "*->"):
                return self._ite(left.name, left.args[0], left.args[1],
                                 args[1], depth, cutlv, src)
            alt = (self._goal_frame(args[1], depth, cutlv, src, 2),
                   self.frames)
            self.cps.append(_CPAlt(alt, self.mark()))
            self.frames = (self._goal_frame(args[0], depth, cutlv, src, 1),
                           self.frames)
            return "go"
        if key == ("->", 2):
            return self._ite("->", args[0], args[1], Atom("fail"),
                             depth, cutlv, src)
        if key == ("\\+", 1):
            return self._ite("->", args[0], Atom("fail"), Atom("true"),
                             depth, cutlv, src)
        if key == ("forall", 2):
            inner = Struct("\\+", (Struct(",", (args[0],
                            Struct("\\+", (args[1],)))),))
            self.frames = (("goal", inner, depth, cutlv, None), self.frames)
            return "go"
        if name == "call" and 1 <= len(args) <= 8:
            target = walk(args[0], self.bindings)
            extra = args[1:]
            if isinstance(target, Var):
                raise instantiation_error("call")
            if isinstance(target, Atom):
                built = Struct(target.name, extra) if extra else target
            elif isinstance(target, Struct):
                built = Struct(target.name, target.args + extra)
            else:
                raise type_error("callable", target, "call")
            # call/N is opaque to cut: its own barrier
            self.frames = (("goal", built, depth, len(self.cps), None),
                           self.frames)
            return "go"
        if key == (":", 2):
            raise permission_error("call", "module_procedure",
                                   self.resolve(goal))

        entry = BUILTINS.get(key)
        if entry is not None:
            return (yield from self._call_builtin(entry, goal, args, depth,
                                                  src, frame))
        return (yield from self._call_user(key, goal, depth, src, frame))

    def _goal_frame(self, term, depth, cutlv, src, child: int):
        child_src = (src[0], src[1] + (child,)) if src else None
        return ("goal", term, depth, cutlv, child_src)

    def _src_line(self, src) -> int:
        if src is None:
            return 0
        clause, path = src
        return clause.goal_lines.get(path, clause.line)

    def _ite(self, op, cond, then, els, depth, cutlv, src):
        alt_cp = _CPAlt((self._goal_frame(els, depth, cutlv, None, 2),
                         self.frames), self.mark())
        self.cps.append(alt_cp)
        h = len(self.cps)
        rest = (self._goal_frame(then, depth, cutlv, None, 1), self.frames)
        if op == "->":  # commit to the first condition solution
            rest = (("cut_to", h - 1), rest)
        else:  # '*->': drop the alternative, keep the condition's CPs
            rest = (("soft_commit", alt_cp), rest)
        self.frames = (("goal", cond, depth, h, None), rest)
        return "go"

    def _make_box(self, goal, depth, line, frame) -> Optional[Box]:
        if self.tracer is None:
            return None
        return Box(goal, depth, line, (frame, self.frames),
                   len(self.cps), self.mark())

    def _call_builtin(self, entry, goal, args, depth, src, frame):
        kind, fn = entry
        line = self._src_line(src)
        self._hit_breakpoint(line, None)
        box = self._make_box(goal, depth, line, frame)
        if box:
            status = yield from self._trace_port("call", box)
            if status == "restart":
                return "restart"
        try:
            if kind == "macro":
                replacement = fn(self, args, depth)
                if replacement is not None:
                    cont = self.frames
                    if box:
                        cont = (("exit", box), cont)
                    # expansion runs behind its own cut barrier
                    self.frames = (("goal", replacement, depth + 1,
                                    len(self.cps), None), cont)
                    return "go"
                ok = False
            elif kind == "det":
                ok = fn(self, args, depth)
            elif kind == "sub":
                ok = yield from fn(self, args, depth)
            else:  # 'gen'
                gen = fn(self, args, depth)
                if box:
                    self.cps.append(_CPBox(box))
                cp = _CPBuiltin(box, gen, self.frames, self.mark())
                ok = yield from self._drive(gen)
                if ok:
                    cp.mark = self.mark()
                    self.cps.append(cp)
                    if box:
                        self.frames = (("exit", box), self.frames)
                    return "go"
                if box:
                    self.cps.pop()  # the box; emit its fail now
                    status = yield from self._trace_port("fail", box)
                    if status == "restart":
                        return "restart"
                return "fail"
        except EngineError:
            raise
        if ok:
            if box:
                self.frames = (("exit", box), self.frames)
            return "go"
        if box:
            status = yield from self._trace_port("fail", box)
            if status == "restart":
                return "restart"
        return "fail"

    def _call_user(self, key, goal, depth, src, frame):
        clauses = self.ws.clauses(key)
        if clauses is None:
            raise existence_error(key[0], key[1], self.ws.id)
        line = self._src_line(src)
        self._hit_breakpoint(line, key)
        box = self._make_box(goal, depth, line, frame)
        if box:
            status = yield from self._trace_port("call", box)
            if status == "restart":
                return "restart"
            self.cps.append(_CPBox(box))
        cp = _CPClauses(box, goal, list(clauses), self.frames,
                        self.mark(), depth)
        status = yield from self._next_clause(cp, emit_redo=False)
        if status == "exhausted":
            if box:
                self.cps.pop()
                st = yield from self._trace_port("fail", box)
                if st == "restart":
                    return "restart"
            return "fail"
        return status  # 'ok' | 'restart'

    def _next_clause(self, cp: _CPClauses, emit_redo: bool):
        """Try remaining clauses of a predicate choicepoint.
        Returns 'ok', 'restart', or 'exhausted'."""
        if emit_redo and cp.box and cp.clauses:
            self.undo(cp.mark)
            status = yield from self._trace_port("redo", cp.box)
            if status == "restart":
                return "restart"
        while cp.clauses:
            self.budget.tick()
            clause = cp.clauses.pop(0)
            self.undo(cp.mark)
            renamed = rename_term(Struct(":-", (clause.head, clause.body)))
            head, body = renamed.args
            if not self.unify(cp.goal, head):
                continue
            # cut prunes the remaining clauses but keeps the trace box
            cutlv = len(self.cps)
            if cp.clauses:
                self.cps.append(cp)
            cont = cp.cont
            if cp.box:
                cont = (("exit", cp.box), cont)
            if not (isinstance(body, Atom) and body.name == "true"):
                cont = (("goal", body, cp.depth + 1, cutlv, (clause, ())),
                        cont)
            self.frames = cont
            return "ok"
        self.undo(cp.mark)
        return "exhausted"

    def _backtrack(self):
        """Pop choicepoints until one resumes. Returns 'ok'|'restart'|'fail'."""
        while True:
            if not self.cps:
                return "fail"
            self.budget.tick()
            cp = self.cps.pop()
            if isinstance(cp, _CPAlt):
                if cp.dead:
                    continue
                self.undo(cp.mark)
                self.frames = cp.frames
                return "ok"
            if isinstance(cp, _CPBox):
                self.undo(cp.box.mark)  # fail port shows call-time bindings
                status = yield from self._trace_port("fail", cp.box)
                if status == "restart":
                    return "restart"
                continue
            if isinstance(cp, _CPClauses):
                status = yield from self._next_clause(cp, emit_redo=True)
                if status == "exhausted":
                    continue
                return status
            if isinstance(cp, _CPBuiltin):
                self.undo(cp.mark)
                if cp.box:
                    status = yield from self._trace_port("redo", cp.box)
                    if status == "restart":
                        return "restart"
                ok = yield from self._drive(cp.gen)
                if ok:
                    cp.mark = self.mark()
                    self.cps.append(cp)
                    self.frames = cp.cont
                    if cp.box:
                        self.frames = (("exit", cp.box), self.frames)
                    return "ok"
                if cp.box:
                    # its box CP is right beneath; pop and emit fail
                    top = self.cps.pop()
                    assert isinstance(top, _CPBox)
                    status = yield from self._trace_port("fail", cp.box)
                    if status == "restart":
                        return "restart"
                continue
            raise AssertionError(f"unknown choicepoint {cp!r}")


# ---------------------------------------------------------------------------
# public query API


class AnswerIterator:
    """Single-owner cursor over the solutions of one query.

    ``next()`` returns an Answer, a TraceEvent (when tracing), a Prompt,
    an EngineError (state becomes 'error'), or None when exhausted.
    """

    def __init__(self, machine: Machine, var_names: dict,
                 trace: bool = False):
        if trace or machine.ws.breakpoints:
            machine.tracer = Tracer(interactive=trace)
        self.machine = machine
        self.var_names = dict(var_names)
        self.state = "ready"
        self.error: Optional[EngineError] = None
        self.pending = None  # last suspension event
        self._gen = machine.run()
        self._started = False

    # -- driving ------------------------------------------------------------
    def next(self):
        if self.state != "ready":
            raise ProtocolError(f"next() in state {self.state}")
        return self._advance("more" if self._started else None)

    def trace_control(self, cmd: str):
        if self.state != "running" or self.pending is None:
            raise ProtocolError("no trace event pending")
        if cmd == "abort":
            return self._fail_with(aborted_error())
        return self._advance(cmd)

    def respond(self, text: str):
        if self.state != "prompting":
            raise ProtocolError("no prompt pending")
        try:
            stripped = text.strip()
            if not stripped.endswith("."):
                stripped += " ."
            res = parse_tokens(tokenize(stripped), self.machine.ws.ops,
                               self.machine.ws.flags["double_quotes"],
                               len(stripped))
            term = res.term
        except ParseError:
            return self.pending  # syntax error: same prompt again
        return self._advance(term)

    def abort(self):
        self.machine.budget.aborted = True
        if self.state in ("ready", "prompting"):
            return self._fail_with(aborted_error())
        return None

    def close(self):
        if self.state in ("done", "error"):
            return
        self._gen.close()
        self.state = "done"

    def _fail_with(self, err: EngineError):
        self._gen.close()
        self.state = "error"
        self.error = err
        self.pending = None
        return err

    def _advance(self, send):
        self.state = "running"
        self.pending = None
        try:
            if not self._started:
                self._started = True
                event = next(self._gen)
            else:
                event = self._gen.send(send)
        except StopIteration:
            self.state = "done"
            return None
        except EngineError as exc:
            self.state = "error"
            self.error = exc
            return exc
        tag = event[0]
        if tag == "answer":
            answer = Answer({name: self.machine.resolve(var)
                             for name, var in self.var_names.items()})
            self.state = "ready"
            return answer
        if tag == "trace":
            self.pending = event[1]
            self.state = "running"
            return event[1]
        if tag == "prompt":
            self.pending = event[1]
            self.state = "prompting"
            return event[1]
        raise AssertionError(f"unexpected machine event {tag}")


def solve(ws: Workspace, goal: Term, limits: Optional[Limits] = None,
          var_names: Optional[dict] = None, trace: bool = False,
          output: Optional[Callable] = None) -> AnswerIterator:
    limits = limits or Limits()
    limits.validate()
    machine = Machine(ws, limits, output=output)
    machine.push_call(goal, 0)
    names = var_names if var_names is not None else \
        {v.name: v for v in term_variables(goal) if v.name != "_"}
    return AnswerIterator(machine, names, trace=trace)


def wrap_solutions(goal: Term, modifier: Term) -> Term:
    """Build the meta-goal for one Solutions-menu modifier."""
    if isinstance(modifier, Atom):
        if modifier.name == "count":
            return Struct("aggregate_all",
                          (Atom("count"), goal, Var("Count")))
        if modifier.name == "time":
            return Struct("time", (goal,))
        raise type_error("solution_modifier", modifier)
    if isinstance(modifier, Struct) and len(modifier.args) == 1:
        arg = modifier.args[0]
        if modifier.name == "limit":
            if not isinstance(arg, Integer) or arg.value <= 0:
                raise type_error("positive_integer", arg, "limit")
            return Struct("limit", (arg, goal))
        if modifier.name == "distinct":
            return Struct("distinct", (arg, goal))
        if modifier.name == "order_by":
            _check_order_spec(arg)
            return Struct("order_by", (arg, goal))
    raise type_error("solution_modifier", modifier)


def _check_order_spec(spec: Term):
    node = spec
    saw = 0
    while isinstance(node, Struct) and node.name == "." \
            and len(node.args) == 2:
        item = node.args[0]
        ok = isinstance(item, Var) or (
            isinstance(item, Struct) and len(item.args) == 1
            and item.name in ("asc", "desc"))
        if not ok:
            raise type_error("order_criterion", item, "order_by")
        saw += 1
        node = node.args[1]
    if saw == 0 or not (isinstance(node, Atom) and node.name == "[]"):
        raise type_error("order_specification", spec, "order_by")


def set_breakpoint(ws: Workspace, line: int) -> str:
    for key, bucket in ws.preds.items():
        for clause in bucket:
            if clause.line <= line <= max(clause.end_line, clause.line):
                ws.breakpoints.add(line)
                if clause.line == line:
                    ws.bp_preds.add(key)
                return "ok"
    return "no_clause_at_line"


def clear_breakpoints(ws: Workspace):
    ws.breakpoints.clear()
    ws.bp_preds.clear()
