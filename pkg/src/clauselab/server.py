"""HTTP composition root.

Routes tie together the version store, the engine service, the
highlight mirrors, and notebook pages.  Sessions are cookie-keyed; an
optional static-token auth file grants named users a sandbox-bypass
flag.  Engine-protocol endpoints always answer 200 with an in-band
``{"event": "error", ...}`` envelope (clients drive a state machine,
not HTTP status codes); store and highlight endpoints use real HTTP
statuses.
"""

from __future__ import annotations

import json
import logging
import secrets
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, unquote, urlsplit

from .config import Config
from .engine import Limits
from .highlight import HighlightError, Mirrors, hover_info, merge, templates
from .notebook import is_notebook_document, load_profiles
from .service import Service, ServiceError, csv_export
from .store import Conflict, Store, StoreError, make_include_resolver
from .textmerge import script_as_json, unified

log = logging.getLogger("clauselab.server")

SESSION_COOKIE = "clauselab_session"

_STORE_STATUS = {
    "not_found": 404,
    "conflict": 409,
    "name_taken": 409,
    "bad_name": 400,
    "bad_request": 400,
    "cycle_detected": 400,
    "not_a_commit": 404,
}


@dataclass
class Session:
    id: str
    user: Optional[str] = None
    authorised: bool = False
    created: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)


class App:
    """Shared state behind the request handlers."""

    def __init__(self, config: Config):
        self.config = config
        self.store = Store(config.store)
        limits = Limits(max_steps=config.max_steps,
                        max_clauses=config.max_clauses,
                        timeout_ms=int(config.time_limit * 1000))
        self.service = Service(limits, quota_max=config.quota_max,
                               idle_timeout=config.idle_timeout)
        self.mirrors = Mirrors()
        self.sessions: dict = {}
        self.sessions_lock = threading.Lock()
        self.tokens = self._load_tokens(config.auth_file)
        self.static_dir = self._find_static_dir()

    @staticmethod
    def _load_tokens(path: Optional[str]) -> dict:
        """Auth file: {"alice": {"token": "...", "authorised": true}}.
        Returns token -> (user name, authorised flag)."""
        if not path:
            return {}
        entries = json.loads(Path(path).read_text("utf-8"))
        return {info["token"]: (name, bool(info.get("authorised")))
                for name, info in entries.items()}

    @staticmethod
    def _find_static_dir() -> Optional[Path]:
        for candidate in (Path(__file__).resolve().parents[2]
                          / "frontend" / "dist",
                          Path("frontend") / "dist"):
            if candidate.is_dir():
                return candidate
        return None

    def session_for(self, sid: Optional[str]) -> tuple:
        """(Session, created_now). Unknown or missing ids start fresh."""
        with self.sessions_lock:
            if sid and sid in self.sessions:
                return self.sessions[sid], False
            session = Session(id=secrets.token_urlsafe(16))
            self.sessions[session.id] = session
            return session, True

    def login(self, session: Session, token: str) -> bool:
        entry = self.tokens.get(token)
        if entry is None:
            return False
        with session.lock:
            session.user, session.authorised = entry
        return True

    def health(self) -> dict:
        with self.sessions_lock:
            sessions = len(self.sessions)
        return {"engines": self.service.live_engines(),
                "sessions": sessions,
                "store_heads": len(self.store.heads())}


class Handler(BaseHTTPRequestHandler):
    server_version = "clauselab"
    protocol_version = "HTTP/1.1"

    # -- plumbing -------------------------------------------------------
    @property
    def app(self) -> App:
        return self.server.app  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def _json_body(self) -> dict:
        raw = self._read_body()
        if not raw:
            return {}
        try:
            data = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise _BadRequest(f"request body is not JSON: {exc}")
        if not isinstance(data, dict):
            raise _BadRequest("request body must be a JSON object")
        return data

    def _session(self) -> Session:
        cookies = {}
        for part in (self.headers.get("Cookie") or "").split(";"):
            if "=" in part:
                key, _, value = part.strip().partition("=")
                cookies[key] = value
        session, created = self.app.session_for(cookies.get(SESSION_COOKIE))
        self._new_session = session if created else None
        bearer = (self.headers.get("Authorization") or "")
        if bearer.startswith("Bearer "):
            self.app.login(session, bearer[len("Bearer "):].strip())
        return session

    def _respond(self, status: int, content_type: str, payload: bytes):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        if getattr(self, "_new_session", None) is not None:
            self.send_header(
                "Set-Cookie",
                f"{SESSION_COOKIE}={self._new_session.id}; Path=/; "
                f"HttpOnly; SameSite=Lax")
        self.end_headers()
        self.wfile.write(payload)

    def _json(self, obj, status: int = 200):
        self._respond(status, "application/json; charset=utf-8",
                      json.dumps(obj).encode("utf-8"))

    def _text(self, text: str, status: int = 200,
              content_type: str = "text/plain; charset=utf-8"):
        self._respond(status, content_type, text.encode("utf-8"))

    # -- dispatch -------------------------------------------------------
    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def _dispatch(self, method: str):
        url = urlsplit(self.path)
        parts = [unquote(p) for p in url.path.split("/") if p]
        query = {k: v[-1] for k, v in parse_qs(url.query).items()}
        try:
            session = self._session()
            self.route(method, parts, query, session)
        except _BadRequest as exc:
            self._json({"code": "bad_request", "message": str(exc)}, 400)
        except (BrokenPipeError, ConnectionResetError):
            pass
        except Exception as exc:           # noqa: BLE001 — last resort
            log.exception("unhandled error for %s %s", method, self.path)
            self._json({"code": "internal", "message": str(exc)}, 500)

    def route(self, method: str, parts: list, query: dict,
              session: Session):
        app = self.app
        if not parts:
            if method == "GET":
                return self._index()
            return self._json({"code": "not_found"}, 404)

        head = parts[0]
        if head == "health" and method == "GET":
            return self._json(app.health())
        if head == "login" and method == "POST":
            body = self._json_body()
            if app.login(session, str(body.get("token", ""))):
                return self._json({"user": session.user,
                                   "authorised": session.authorised})
            return self._json({"code": "bad_token",
                               "message": "unknown token"}, 403)
        if head == "session" and method == "GET":
            return self._json({"user": session.user,
                               "authorised": session.authorised,
                               "quota_max": app.config.quota_max,
                               "live": app.service.live_engines(session.id)})

        if head == "pengine":
            return self._pengine(method, parts[1:], query, session)
        if head == "csv" and method == "POST":
            return self._csv(session)
        if head == "p":
            return self._store(method, parts[1:], query, session)
        if head == "diff" and method == "GET":
            return self._diff(query)
        if head == "highlight":
            return self._highlight(method, parts[1:], query, session)
        if head == "n" and method == "GET" and len(parts) == 2:
            return self._notebook_page(parts[1])
        if head == "profiles" and method == "GET":
            directory = app.config.profiles_dir
            return self._json(load_profiles(directory) if directory else [])
        if head == "examples" and method == "GET":
            return self._examples()
        if head == "static" and method == "GET":
            return self._static(parts[1:])
        return self._json({"code": "not_found",
                           "message": "/" + "/".join(parts)}, 404)

    # -- engine protocol --------------------------------------------------
    def _pengine(self, method: str, parts: list, query: dict,
                 session: Session):
        app = self.app
        try:
            if parts == ["create"] and method == "POST":
                body = self._json_body()
                src = body.get("src", "")
                ref = body.get("src_ref")
                if ref:
                    src = self._stored_source(ref)
                reply = app.service.create(
                    session.id, src=src, chunk=int(body.get("chunk", 1)),
                    include_resolver=make_include_resolver(app.store))
                return self._json(reply)
            if parts == ["send"] and method == "POST":
                body = self._json_body()
                return self._json(self._send(body, session))
            if parts == ["pull_response"] and method == "GET":
                engine_id = query.get("id", "")
                return self._json(app.service.pull_response(engine_id))
        except ServiceError as exc:
            return self._json(_service_error(exc))
        except StoreError as exc:
            return self._json({"event": "error", "code": exc.code,
                               "message": exc.message, **exc.data})
        return self._json({"code": "not_found"}, 404)

    def _send(self, body: dict, session: Session) -> dict:
        service = self.app.service
        engine_id = str(body.get("id", ""))
        event = body.get("event")
        if event == "ask":
            return service.ask(
                engine_id, str(body.get("query", "")),
                template=body.get("template"),
                chunk=body.get("chunk"),
                authorized=session.authorised,
                trace=bool(body.get("trace")))
        if event == "next":
            n = body.get("n")
            return service.next(engine_id, int(n) if n else None)
        if event == "stop":
            return service.stop(engine_id)
        if event == "abort":
            return service.abort(engine_id)
        if event == "respond":
            return service.respond(engine_id, str(body.get("text", "")))
        if event == "trace_control":
            return service.trace_control(engine_id,
                                         str(body.get("cmd", "continue")))
        if event == "destroy":
            return service.destroy(engine_id)
        raise ServiceError("protocol", f"unknown event {event!r}")

    def _stored_source(self, ref: str) -> str:
        """Program text for a stored ref; a notebook contributes its
        global program cells."""
        content, _ = self.app.store.lookup(str(ref))
        if is_notebook_document(content):
            from .notebook import deserialize
            nb = deserialize(content)
            return "\n".join(c.text for c in nb.cells
                             if c.kind == "program" and c.is_global)
        return content

    def _csv(self, session: Session):
        app = self.app
        body = self._json_body()
        src = body.get("src", "")
        if body.get("src_ref"):
            try:
                src = self._stored_source(body["src_ref"])
            except StoreError as exc:
                return self._json({"code": exc.code,
                                   "message": exc.message}, 404)
        try:
            payload = csv_export(
                src, str(body.get("query", "")),
                projection=body.get("projection"),
                limit=int(body.get("limit", 1000)),
                limits=app.service.limits,
                authorized=session.authorised,
                include_resolver=make_include_resolver(app.store))
        except ServiceError as exc:
            return self._json(_service_error(exc), 400)
        self._respond(200, "text/csv; charset=utf-8", payload)

    # -- version store ------------------------------------------------------
    def _store(self, method: str, parts: list, query: dict,
               session: Session):
        app = self.app
        try:
            if method == "POST" and not parts:
                body = self._json_body()
                record = app.store.save(
                    str(body.get("content", "")),
                    author=str(body.get("author", "") or session.user or ""),
                    message=str(body.get("message", "")),
                    name=body.get("name"),
                    prev=body.get("prev"),
                    tags=body.get("tags"))
                return self._json(record.as_json())
            if method == "POST" and len(parts) == 2 and parts[1] == "fork":
                body = self._json_body()
                record = app.store.fork(
                    parts[0], str(body.get("name", "")),
                    author=str(body.get("author", "") or session.user or ""),
                    message=str(body.get("message", "")))
                return self._json(record.as_json())
            if method == "GET" and len(parts) == 1:
                return self._document(parts[0], query)
            if method == "GET" and len(parts) == 2 \
                    and parts[1] == "history":
                return self._json([r.as_json()
                                   for r in app.store.history(parts[0])])
        except StoreError as exc:
            status = _STORE_STATUS.get(exc.code, 400)
            body = {"code": exc.code, "message": exc.message, **exc.data}
            if isinstance(exc, Conflict):
                body["code"] = "conflict"
            return self._json(body, status)
        return self._json({"code": "not_found"}, 404)

    def _document(self, ref: str, query: dict):
        content, record = self.app.store.lookup(ref)
        if query.get("format") == "raw":
            return self._text(content)
        body = {"content": content}
        if record is not None:
            body.update(record.as_json())
        return self._json(body)

    def _diff(self, query: dict):
        a, b = query.get("a"), query.get("b")
        if not a or not b:
            return self._json({"code": "bad_request",
                               "message": "need a= and b="}, 400)
        try:
            ca, _ = self.app.store.lookup(a)
            cb, _ = self.app.store.lookup(b)
        except StoreError as exc:
            return self._json({"code": exc.code,
                               "message": exc.message}, 404)
        return self._json({"script": script_as_json(self.app.store.diff(a, b)),
                           "unified": unified(ca, cb, a, b)})

    # -- highlight channel ----------------------------------------------------
    def _highlight(self, method: str, parts: list, query: dict,
                   session: Session):
        app = self.app
        try:
            if method == "POST" and parts == ["text"]:
                body = self._json_body()
                key = self._mirror_key(session, body.get("session"))
                try:
                    gen = app.mirrors.set_text(key,
                                               str(body.get("text", "")))
                except HighlightError:
                    app.mirrors.create(key, str(body.get("text", "")))
                    gen = 0
                return self._json({"gen": gen})
            if method == "POST" and parts == ["delta"]:
                body = self._json_body()
                key = self._mirror_key(session, body.get("session"))
                gen = app.mirrors.apply_delta(
                    key, int(body.get("from", 0)), int(body.get("to", 0)),
                    str(body.get("text", "")))
                return self._json({"gen": gen})
            if method == "GET" and parts == ["tokens"]:
                key = self._mirror_key(session, query.get("session"))
                groups = app.mirrors.enrich(key)
                return self._json({"gen": groups.generation,
                                   "tokens": groups.as_json()})
            if method == "GET" and parts == ["templates"]:
                return self._json(templates())
            if method == "GET" and parts == ["hover"]:
                key = self._mirror_key(session, query.get("session"))
                info = hover_info(app.mirrors, key,
                                  int(query.get("offset", 0)))
                return self._json(info)
        except HighlightError as exc:
            status = 404 if exc.code == "unknown_session" else 409
            return self._json({"code": exc.code,
                               "message": exc.message}, status)
        return self._json({"code": "not_found"}, 404)

    @staticmethod
    def _mirror_key(session: Session, editor) -> str:
        # scoped per HTTP session so editors cannot collide across users
        return f"{session.id}/{editor or 'main'}"

    # -- pages ---------------------------------------------------------------
    def _notebook_page(self, name: str):
        try:
            content, _ = self.app.store.lookup(name)
        except StoreError as exc:
            return self._json({"code": exc.code,
                               "message": exc.message}, 404)
        if is_notebook_document(content):
            return self._text(content,
                              content_type="text/html; charset=utf-8")
        import html as _html
        page = ("<!DOCTYPE html>\n<html><body><pre>"
                f"{_html.escape(content)}</pre></body></html>\n")
        return self._text(page, content_type="text/html; charset=utf-8")

    def _examples(self):
        directory = self.app.config.examples_dir
        out = []
        if directory and Path(directory).is_dir():
            for path in sorted(Path(directory).glob("*.pl")):
                out.append({"name": path.name,
                            "text": path.read_text("utf-8")})
        return self._json(out)

    def _index(self):
        if self.app.static_dir:
            index = self.app.static_dir / "index.html"
            if index.is_file():
                return self._text(index.read_text("utf-8"),
                                  content_type="text/html; charset=utf-8")
        page = ("<!DOCTYPE html>\n<html><head><title>clauselab</title>"
                "</head><body><h1>clauselab</h1>"
                "<p>API endpoints: /pengine/create, /pengine/send, "
                "/pengine/pull_response, /csv, /p/&lt;name&gt;, /diff, "
                "/highlight/tokens, /health</p></body></html>\n")
        return self._text(page, content_type="text/html; charset=utf-8")

    _STATIC_TYPES = {
        ".html": "text/html; charset=utf-8",
        ".js": "text/javascript; charset=utf-8",
        ".mjs": "text/javascript; charset=utf-8",
        ".css": "text/css; charset=utf-8",
        ".json": "application/json; charset=utf-8",
        ".svg": "image/svg+xml",
        ".png": "image/png",
        ".map": "application/json; charset=utf-8",
    }

    def _static(self, parts: list):
        root = self.app.static_dir
        if root is None:
            return self._json({"code": "not_found"}, 404)
        target = root.joinpath(*parts).resolve()
        if not str(target).startswith(str(root.resolve())) \
                or not target.is_file():
            return self._json({"code": "not_found"}, 404)
        ctype = self._STATIC_TYPES.get(target.suffix,
                                       "application/octet-stream")
        self._respond(200, ctype, target.read_bytes())


class _BadRequest(Exception):
    pass


def _service_error(exc: ServiceError) -> dict:
    return {"event": "error", "code": exc.code, "message": exc.message,
            **exc.data}


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    # the socketserver default of 5 drops connections under bursts of
    # concurrent sessions; match a typical production accept backlog
    request_queue_size = 128


def build_server(config: Config) -> ThreadingHTTPServer:
    server = _Server((config.host, config.port), Handler)
    server.app = App(config)  # type: ignore[attr-defined]
    return server


def serve(config: Config):
    server = build_server(config)
    host, port = server.server_address[:2]
    log.info("listening on %s:%s, store at %s", host, port,
             config.store)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
