"""Engine lifecycle service: create/ask/next/stop/abort/respond/destroy.

Each engine owns an isolated workspace and is driven through a small
state machine:

    idle -> running -> waiting_more -> running ... -> idle
                    -> prompting -> running (respond)
    any state -> dead (destroy); dead accepts only destroy

Operations append protocol events to the engine's queue ({event:
create|success|failure|error|prompt|output|trace|stop, ...}); the
caller gets the first event immediately and drains the rest through
pull_response. Answers are delivered in chunks with an eager one-answer
lookahead so every chunk carries an exact ``more`` flag.

Per-session engine quota (default 3) and idle reaping protect a shared
server.
"""

from __future__ import annotations

import csv
import io
import json
import secrets
import threading
import time
import urllib.request
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .engine import (Answer, AnswerIterator, Limits, Prompt, TraceEvent,
                     Workspace, consult, solve)
from .errors import EngineError
from .render import render_answer
from .sandbox import safe_goal
from .syntax import ParseError, parse_term
from .terms import Term, Var
from .writer import write_term

DEFAULT_QUOTA = 3
IDLE_TIMEOUT = 600.0  # seconds


class ServiceError(Exception):
    def __init__(self, code: str, message: str = "", **data):
        super().__init__(message or code)
        self.code = code
        self.message = message or code
        self.data = data


class EngineHandle:
    def __init__(self, session: str, ws: Workspace, chunk: int,
                 limits: Limits):
        self.id = secrets.token_hex(16)
        self.session = session
        self.ws = ws
        self.chunk = chunk
        self.limits = limits
        self.state = "idle"
        self.iterator: Optional[AnswerIterator] = None
        self.projection: list = []
        self.template: Optional[Term] = None
        self.lookahead: Optional[dict] = None
        self.pending_error: Optional[EngineError] = None
        self.started = 0.0
        self.last_used = time.monotonic()
        self.queue: deque = deque()
        self.lock = threading.RLock()

    def touch(self):
        self.last_used = time.monotonic()

    def emit(self, event: dict):
        event.setdefault("id", self.id)
        self.queue.append(event)

    def pop_event(self) -> Optional[dict]:
        return self.queue.popleft() if self.queue else None


def _error_event(handle_id: str, exc: EngineError) -> dict:
    return {"event": "error", "id": handle_id,
            "data": write_term(exc.term, quoted=True),
            "message": exc.message}


class Service:
    def __init__(self, limits: Optional[Limits] = None,
                 quota_max: int = DEFAULT_QUOTA,
                 idle_timeout: float = IDLE_TIMEOUT):
        self.limits = limits or Limits()
        self.quota_max = quota_max
        self.idle_timeout = idle_timeout
        self.engines: dict = {}
        self.quota: dict = {}  # session -> live engine count
        self.lock = threading.Lock()

    # -- lifecycle -----------------------------------------------------------
    def create(self, session: str, src: str = "", chunk: int = 1,
               include_resolver: Optional[Callable] = None) -> dict:
        self.reap()
        with self.lock:
            live = self.quota.get(session, 0)
            if live >= self.quota_max:
                raise ServiceError("quota_exceeded",
                                   f"session already has {live} engines",
                                   max=self.quota_max)
            self.quota[session] = live + 1
        ws = Workspace(max_clauses=self.limits.max_clauses)
        handle = EngineHandle(session, ws, max(1, int(chunk)), self.limits)
        with self.lock:
            self.engines[handle.id] = handle
        report = consult(ws, src, include_resolver) if src else None
        data = {"event": "create", "id": handle.id}
        if report is not None:
            data["consult"] = {
                "clauses": report.clauses,
                "errors": [vars(e) for e in report.errors],
                "warnings": [vars(w) for w in report.warnings],
            }
        handle.emit(data)
        return handle.pop_event()

    def _get(self, engine_id: str) -> EngineHandle:
        with self.lock:
            handle = self.engines.get(engine_id)
        if handle is None:
            raise ServiceError("no_such_engine", f"unknown id {engine_id}")
        return handle

    def destroy(self, engine_id: str) -> dict:
        with self.lock:
            handle = self.engines.pop(engine_id, None)
        if handle is None:
            return {"event": "destroyed", "id": engine_id}
        with handle.lock:
            if handle.iterator is not None:
                handle.iterator.close()
            handle.state = "dead"
            handle.ws.destroy()
        with self.lock:
            count = self.quota.get(handle.session, 1)
            self.quota[handle.session] = max(0, count - 1)
        return {"event": "destroyed", "id": engine_id}

    def reap(self, now: Optional[float] = None):
        now = now if now is not None else time.monotonic()
        with self.lock:
            stale = [h.id for h in self.engines.values()
                     if h.state in ("idle", "waiting_more")
                     and now - h.last_used > self.idle_timeout]
        for engine_id in stale:
            self.destroy(engine_id)

    def live_engines(self, session: Optional[str] = None) -> int:
        with self.lock:
            if session is None:
                return sum(1 for h in self.engines.values()
                           if h.state != "dead")
            return self.quota.get(session, 0)

    # -- query driving -------------------------------------------------------
    def ask(self, engine_id: str, query: str,
            template: Optional[str] = None, chunk: Optional[int] = None,
            authorized: bool = False, trace: bool = False) -> dict:
        handle = self._get(engine_id)
        with handle.lock:
            handle.touch()
            if handle.state == "dead":
                raise ServiceError("engine_dead", "engine was destroyed")
            if handle.state not in ("idle",):
                raise ServiceError("protocol",
                                   f"ask in state {handle.state}")
            if chunk:
                handle.chunk = max(1, int(chunk))
            text = query.strip()
            if not text.endswith("."):
                text += " ."
            try:
                res = parse_term(text, handle.ws.ops,
                                 handle.ws.flags["double_quotes"])
            except ParseError as exc:
                handle.emit({"event": "error", "code": "syntax",
                             "message": exc.message,
                             "start": exc.span.start,
                             "end": exc.span.end,
                             "line": exc.span.line})
                return handle.pop_event()
            goal = res.term
            if not authorized:
                verdict = safe_goal(goal, handle.ws)
                if not verdict.ok:
                    handle.emit({
                        "event": "error", "code": "sandbox",
                        "verdict": verdict.status,
                        "culprit": write_term(verdict.culprit, quoted=True,
                                              ops=handle.ws.ops),
                        "trace": [write_term(g, quoted=True,
                                             ops=handle.ws.ops)
                                  for g in verdict.trace],
                    })
                    return handle.pop_event()
            handle.projection = [n for n in res.var_names
                                 if not n.startswith("_")]
            handle.template = None
            if template:
                handle.template = self._link_template(template, res)
            handle.lookahead = None
            handle.pending_error = None
            handle.started = time.monotonic()
            handle.iterator = solve(
                handle.ws, goal, limits=self.limits,
                var_names=dict(res.var_names), trace=trace,
                output=lambda s: handle.emit({"event": "output",
                                              "data": s}))
            handle.state = "running"
            self._collect(handle)
            return handle.pop_event()

    def _link_template(self, template: str, res) -> Term:
        text = template.strip()
        if not text.endswith("."):
            text += " ."
        tres = parse_term(text)
        mapping = {v: res.var_names[n]
                   for n, v in tres.var_names.items()
                   if n in res.var_names}
        from .terms import Struct

        def sub(t: Term) -> Term:
            if isinstance(t, Var):
                return mapping.get(t, t)
            if isinstance(t, Struct):
                return Struct(t.name, tuple(sub(a) for a in t.args))
            return t

        return sub(tres.term)

    def next(self, engine_id: str, n: Optional[int] = None) -> dict:
        handle = self._get(engine_id)
        with handle.lock:
            handle.touch()
            if handle.state == "dead":
                raise ServiceError("engine_dead", "engine was destroyed")
            if handle.state != "waiting_more":
                raise ServiceError("protocol",
                                   f"next in state {handle.state}")
            if n:
                handle.chunk = max(1, int(n))
            handle.state = "running"
            self._collect(handle)
            return handle.pop_event()

    def stop(self, engine_id: str) -> dict:
        handle = self._get(engine_id)
        with handle.lock:
            handle.touch()
            if handle.state == "dead":
                raise ServiceError("engine_dead", "engine was destroyed")
            if handle.iterator is not None:
                handle.iterator.close()
                handle.iterator = None
            handle.lookahead = None
            handle.state = "idle"
            handle.emit({"event": "stop"})
            return handle.pop_event()

    def abort(self, engine_id: str) -> dict:
        """Asynchronous: flips the abort flag without taking the engine
        lock, so a running query stops at its next inference step."""
        handle = self._get(engine_id)
        if handle.state == "dead":
            raise ServiceError("engine_dead", "engine was destroyed")
        iterator = handle.iterator
        if iterator is not None:
            iterator.machine.budget.aborted = True
            if handle.state in ("waiting_more", "prompting"):
                with handle.lock:
                    iterator.close()
                    handle.iterator = None
                    handle.lookahead = None
                    handle.state = "idle"
        return {"event": "aborting", "id": engine_id}

    def respond(self, engine_id: str, text: str) -> dict:
        handle = self._get(engine_id)
        with handle.lock:
            handle.touch()
            if handle.state != "prompting":
                raise ServiceError("protocol",
                                   f"respond in state {handle.state}")
            event = handle.iterator.respond(text)
            if isinstance(event, Prompt):
                handle.emit({"event": "prompt",
                             "data": event.message,
                             "goal": write_term(event.goal,
                                                ops=handle.ws.ops)})
                return handle.pop_event()
            handle.state = "running"
            self._collect(handle, primed=event)
            return handle.pop_event()

    def trace_control(self, engine_id: str, cmd: str) -> dict:
        handle = self._get(engine_id)
        with handle.lock:
            handle.touch()
            if handle.iterator is None or handle.state != "running":
                raise ServiceError("protocol", "no trace event pending")
            event = handle.iterator.trace_control(cmd)
            self._collect(handle, primed=event)
            return handle.pop_event()

    def pull_response(self, engine_id: str) -> dict:
        handle = self._get(engine_id)
        with handle.lock:
            event = handle.pop_event()
        return event or {"event": "none", "id": engine_id}

    # -- chunk assembly ------------------------------------------------------
    def _render_answer(self, handle: EngineHandle, answer: Answer) -> dict:
        out = {}
        if handle.template is not None:
            resolved = handle.iterator.machine.resolve(handle.template)
            out["template"] = self._doc(handle, resolved)
            return out
        for name in handle.projection:
            term = answer.bindings.get(name)
            if term is None:
                continue
            out[name] = self._doc(handle, term)
        return out

    def _doc(self, handle: EngineHandle, term: Term) -> dict:
        doc = render_answer(term, active=self._active(handle))
        body = doc.as_json()
        body["text"] = write_term(term, quoted=True, ops=handle.ws.ops)
        return body

    def _active(self, handle: EngineHandle) -> list:
        from .render import active_renderers
        return active_renderers(handle.ws)

    def _finish_error(self, handle: EngineHandle, exc: EngineError):
        handle.emit(_error_event(handle.id, exc))
        handle.iterator = None
        handle.lookahead = None
        handle.state = "idle"

    def _collect(self, handle: EngineHandle, primed=None):
        """Pull the iterator until the chunk is full (plus one lookahead),
        exhausted, errored, prompting, or stopped at a trace port."""
        answers = []
        if handle.lookahead is not None:
            answers.append(handle.lookahead)
            handle.lookahead = None
        if handle.pending_error is not None:
            exc = handle.pending_error
            handle.pending_error = None
            if answers:
                self._emit_success(handle, answers, more=False)
            self._finish_error(handle, exc)
            return
        it = handle.iterator
        event = primed
        while True:
            if event is None:
                if it.state == "done":
                    self._emit_success(handle, answers, more=False)
                    handle.iterator = None
                    handle.state = "idle"
                    return
                event = it.next()
            if event is None:
                continue  # state flipped to done; loop re-checks
            if isinstance(event, Answer):
                rendered = self._render_answer(handle, event)
                if len(answers) < handle.chunk:
                    answers.append(rendered)
                    event = None
                    continue
                handle.lookahead = rendered
                self._emit_success(handle, answers, more=True)
                handle.state = "waiting_more"
                return
            if isinstance(event, TraceEvent):
                if answers:
                    # deliver what we have; the trace event follows
                    self._emit_success(handle, answers, more=True)
                    answers = []
                handle.emit({
                    "event": "trace", "port": event.port,
                    "goal": write_term(event.goal, quoted=True,
                                       ops=handle.ws.ops),
                    "depth": event.depth, "line": event.line,
                })
                # stay 'running'; the client answers with trace_control
                return
            if isinstance(event, Prompt):
                if answers:
                    # deliver what we have; the prompt event follows
                    self._emit_success(handle, answers, more=True)
                    answers = []
                handle.emit({"event": "prompt", "data": event.message,
                             "goal": write_term(event.goal,
                                                ops=handle.ws.ops)})
                handle.state = "prompting"
                return
            if isinstance(event, EngineError):
                if answers:
                    self._emit_success(handle, answers, more=False)
                self._finish_error(handle, event)
                return
            raise AssertionError(f"unexpected iterator event {event!r}")

    def _emit_success(self, handle: EngineHandle, answers: list,
                      more: bool):
        handle.emit({
            "event": "success",
            "answers": answers,
            "more": more,
            "time": round(time.monotonic() - handle.started, 6),
            "projection": (["template"] if handle.template is not None
                           else list(handle.projection)),
        })


# ---------------------------------------------------------------------------
# CSV export


def csv_export(src: str, query: str, projection: Optional[list] = None,
               limit: int = 1000, limits: Optional[Limits] = None,
               authorized: bool = False,
               include_resolver: Optional[Callable] = None) -> bytes:
    """Run a query to at most ``limit`` answers and serialize the
    projected variables as RFC 4180 CSV (UTF-8, CRLF)."""
    ws = Workspace()
    if src:
        report = consult(ws, src, include_resolver)
        if not report.ok:
            first = report.errors[0]
            raise ServiceError("consult", first.message, line=first.line)
    text = query.strip()
    if not text.endswith("."):
        text += " ."
    res = parse_term(text, ws.ops, ws.flags["double_quotes"])
    if not authorized:
        verdict = safe_goal(res.term, ws)
        if not verdict.ok:
            raise ServiceError("sandbox", verdict.status)
    names = [n for n in res.var_names if not n.startswith("_")]
    if projection:
        unknown = [p for p in projection if p not in res.var_names]
        if unknown:
            raise ServiceError("bad_projection",
                               f"unknown variables {unknown}")
        names = list(projection)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(names)
    iterator = solve(ws, res.term, limits=limits or Limits(),
                     var_names=dict(res.var_names))
    count = 0
    while count < limit:
        event = iterator.next()
        if event is None:
            break
        if isinstance(event, EngineError):
            raise ServiceError("runtime", event.message or "goal raised",
                               term=write_term(event.term, quoted=True))
        if isinstance(event, Prompt):
            raise ServiceError("prompt_in_csv",
                               "interactive input is not available in "
                               "CSV export")
        assert isinstance(event, Answer)
        writer.writerow([write_term(event.bindings[n], ops=ws.ops)
                         for n in names])
        count += 1
    iterator.close()
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# non-deterministic RPC client


@dataclass
class _RpcState:
    engine_id: str = ""
    more: bool = False
    answers: deque = field(default_factory=deque)


def rpc_client(url: str, goal: Term, src: str = "", chunk: int = 10,
               timeout: float = 30.0):
    """Generator of binding dicts {var name -> Term} for ``goal`` solved
    by a remote server, fetching further chunks on demand."""
    from .terms import term_variables

    base = url.rstrip("/")
    state = _RpcState()

    def post(path: str, payload: dict) -> dict:
        req = urllib.request.Request(
            base + path, data=json.dumps(payload).encode("utf-8"),
            headers={"Content-Type": "application/json"})
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))

    created = post("/pengine/create", {"src": src, "chunk": chunk})
    if created.get("event") != "create":
        raise ServiceError(created.get("code", "rpc"),
                           created.get("message", "create failed"))
    state.engine_id = created["id"]
    names = [v.name for v in term_variables(goal)
             if v.name and not v.name.startswith("_")]
    try:
        reply = post("/pengine/send", {
            "id": state.engine_id, "event": "ask",
            "query": write_term(goal, quoted=True),
        })
        while True:
            if reply.get("event") == "error":
                raise ServiceError(reply.get("code", "rpc"),
                                   reply.get("message",
                                             reply.get("data", "")))
            if reply.get("event") != "success":
                raise ServiceError("rpc",
                                   f"unexpected event {reply.get('event')}")
            for answer in reply.get("answers", []):
                bindings = {}
                for name in names:
                    cell = answer.get(name)
                    if cell is None:
                        continue
                    parsed = parse_term(cell["text"] + " .")
                    bindings[name] = parsed.term
                yield bindings
            if not reply.get("more"):
                return
            reply = post("/pengine/send", {
                "id": state.engine_id, "event": "next", "n": chunk})
    finally:
        try:
            post("/pengine/send", {"id": state.engine_id,
                                   "event": "destroy"})
        except Exception:
            pass
