from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request
from http.cookiejar import CookieJar
from pathlib import Path

import pytest

from clauselab.config import Config
from clauselab.server import build_server


class Client:
    """Tiny cookie-keeping JSON client bound to one test server."""

    def __init__(self, base: str):
        self.base = base
        self.opener = urllib.request.build_opener(
            urllib.request.HTTPCookieProcessor(CookieJar()))

    def request(self, method: str, path: str, body=None, headers=None):
        data = json.dumps(body).encode() if body is not None else None
        req = urllib.request.Request(
            self.base + path, data=data, method=method,
            headers={"Content-Type": "application/json", **(headers or {})})
        try:
            with self.opener.open(req) as resp:
                return resp.status, resp.read(), resp.headers
        except urllib.error.HTTPError as exc:
            return exc.code, exc.read(), exc.headers

    def json(self, method: str, path: str, body=None, headers=None):
        status, payload, _ = self.request(method, path, body, headers)
        return status, json.loads(payload.decode())

    def ok(self, method: str, path: str, body=None, headers=None):
        status, out = self.json(method, path, body, headers)
        assert status == 200, out
        return out


@pytest.fixture()
def app_server(tmp_path: Path):
    auth = tmp_path / "auth.json"
    auth.write_text(json.dumps(
        {"alice": {"token": "alice-token", "authorised": True},
         "bob": {"token": "bob-token", "authorised": False}}))
    config = Config(listen="127.0.0.1:0", store=str(tmp_path / "store"),
                    auth_file=str(auth))
    server = build_server(config)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()


@pytest.fixture()
def client(app_server) -> Client:
    return Client(f"http://127.0.0.1:{app_server.server_address[1]}")
