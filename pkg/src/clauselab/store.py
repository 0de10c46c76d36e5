"""Content-addressed document store with named version heads.

Data and commit metadata are stored as git-compatible loose blob
objects: SHA-1 over ``blob <len>\\0<content>``, zlib-deflated, under
``objects/<2 hex>/<38 hex>``. A commit is a canonical-JSON record (data
hash, previous commit, author, timestamp, message, name, tags) stored
as a blob itself, so commits are content-addressed too.

Head discovery is an append-only journal: one JSON line per save with
(name, previous commit, new commit). Appends hold an advisory file
lock, so multiple processes can share one store directory; replaying
the journal from scratch reconstructs every head exactly.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import random
import re
import string
import threading
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .textmerge import diff_script, merge3

_HASH_RE = re.compile(r"\A[0-9a-f]{40}\Z")
_NAME_RE = re.compile(r"\A[A-Za-z0-9_][A-Za-z0-9_.-]{0,63}\Z")


def blob_hash(content: bytes) -> str:
    header = b"blob %d\0" % len(content)
    return hashlib.sha1(header + content).hexdigest()


class StoreError(Exception):
    def __init__(self, code: str, message: str = "", **data):
        super().__init__(message or code)
        self.code = code
        self.message = message or code
        self.data = data


class Conflict(StoreError):
    """Stale previous-version save; carries the current head."""

    def __init__(self, current_head: str):
        super().__init__("conflict", f"head moved to {current_head}",
                         current_head=current_head)
        self.current_head = current_head


@dataclass
class CommitRecord:
    commit: str               # hash of this commit object
    data: str                 # hash of the document blob
    prev: Optional[str]       # previous commit hash or None
    author: str
    time: int                 # UTC milliseconds
    message: str
    name: str
    tags: list = field(default_factory=list)

    def as_json(self) -> dict:
        return {"commit": self.commit, "data": self.data,
                "prev": self.prev, "author": self.author,
                "time": self.time, "message": self.message,
                "name": self.name, "tags": list(self.tags)}


def _canonical(record: dict) -> bytes:
    return json.dumps(record, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":")).encode("utf-8")


class Store:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.objects = self.root / "objects"
        self.journal_path = self.root / "journal"
        self.lock_path = self.root / "journal.lock"
        self.objects.mkdir(parents=True, exist_ok=True)
        self.journal_path.touch(exist_ok=True)
        self.lock_path.touch(exist_ok=True)
        self._mutex = threading.RLock()
        self._heads: dict = {}      # name -> commit hash
        self._tags: dict = {}       # tag -> set of names
        self._journal_offset = 0
        self.refresh()

    # -- object layer --------------------------------------------------------
    def _object_path(self, digest: str) -> Path:
        return self.objects / digest[:2] / digest[2:]

    def put_object(self, content: bytes) -> str:
        digest = blob_hash(content)
        path = self._object_path(digest)
        if not path.exists():
            path.parent.mkdir(exist_ok=True)
            header = b"blob %d\0" % len(content)
            tmp = path.with_name(path.name + f".tmp{os.getpid()}")
            tmp.write_bytes(zlib.compress(header + content))
            os.replace(tmp, path)  # atomic; concurrent writers converge
        return digest

    def get_object(self, digest: str) -> bytes:
        path = self._object_path(digest)
        if not path.exists():
            raise StoreError("not_found", f"no object {digest}")
        raw = zlib.decompress(path.read_bytes())
        nul = raw.index(b"\0")
        return raw[nul + 1:]

    def has_object(self, digest: str) -> bool:
        return self._object_path(digest).exists()

    # -- journal & heads -----------------------------------------------------
    def refresh(self):
        """Fold journal lines appended since the last read into the head
        map (other processes may have written)."""
        with self._mutex:
            with open(self.journal_path, "rb") as fh:
                fh.seek(self._journal_offset)
                chunk = fh.read()
                self._journal_offset = fh.tell()
            for line in chunk.splitlines():
                if not line.strip():
                    continue
                entry = json.loads(line)
                self._heads[entry["name"]] = entry["commit"]
                for tag in entry.get("tags", []):
                    self._tags.setdefault(tag, set()).add(entry["name"])

    def replay_journal(self) -> dict:
        """Head map rebuilt from the journal alone."""
        heads: dict = {}
        with open(self.journal_path, "rb") as fh:
            for line in fh:
                if line.strip():
                    entry = json.loads(line)
                    heads[entry["name"]] = entry["commit"]
        return heads

    def heads(self) -> dict:
        with self._mutex:
            self.refresh()
            return dict(self._heads)

    def names_with_tag(self, tag: str) -> list:
        with self._mutex:
            self.refresh()
            return sorted(self._tags.get(tag, ()))

    def _append_journal(self, name: str, prev: Optional[str],
                        commit: str, tags: list):
        line = json.dumps({"name": name, "prev": prev, "commit": commit,
                           "tags": tags}, sort_keys=True) + "\n"
        with open(self.journal_path, "ab") as fh:
            fh.write(line.encode("utf-8"))
            fh.flush()
            os.fsync(fh.fileno())

    # -- commits -------------------------------------------------------------
    def _write_commit(self, record: dict) -> str:
        return self.put_object(_canonical(record))

    def read_commit(self, digest: str) -> CommitRecord:
        try:
            record = json.loads(self.get_object(digest).decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            raise StoreError("not_a_commit",
                             f"object {digest} is not a commit") from None
        if not isinstance(record, dict) or "data" not in record:
            raise StoreError("not_a_commit",
                             f"object {digest} is not a commit")
        return CommitRecord(commit=digest, data=record["data"],
                            prev=record.get("prev"),
                            author=record.get("author", ""),
                            time=record.get("time", 0),
                            message=record.get("message", ""),
                            name=record.get("name", ""),
                            tags=record.get("tags", []))

    def _random_name(self) -> str:
        alphabet = string.ascii_lowercase + string.digits
        while True:
            name = "".join(random.choices(alphabet, k=8))
            if name not in self._heads:
                return name

    def save(self, content: Union[str, bytes], author: str = "",
             message: str = "", name: Optional[str] = None,
             prev: Optional[str] = None,
             tags: Optional[list] = None) -> CommitRecord:
        """One new version. Anonymous saves (no name) get a random name;
        named saves require prev to match the current head."""
        data = content.encode("utf-8") if isinstance(content, str) \
            else content
        tags = list(tags or [])
        with self._mutex:
            # the lock file serializes journal appends across processes;
            # the mutex serializes them across threads of this one
            with open(self.lock_path, "r+b") as lockfh:
                fcntl.flock(lockfh, fcntl.LOCK_EX)
                try:
                    self.refresh()
                    if name is None:
                        name = self._random_name()
                        if prev is not None:
                            raise StoreError(
                                "bad_request",
                                "anonymous saves cannot name a previous "
                                "version")
                    elif not _NAME_RE.match(name):
                        raise StoreError("bad_name",
                                         f"illegal document name {name!r}")
                    head = self._heads.get(name)
                    if head is None and prev is not None:
                        raise StoreError("not_found",
                                         f"no document named {name}")
                    if head is not None:
                        if prev is None:
                            raise StoreError(
                                "name_taken",
                                f"document {name} already exists",
                                current_head=head)
                        if prev != head:
                            raise Conflict(head)
                    data_hash = self.put_object(data)
                    record = {
                        "data": data_hash, "prev": prev, "author": author,
                        "time": int(time.time() * 1000),
                        "message": message, "name": name, "tags": tags,
                    }
                    commit = self._write_commit(record)
                    self._append_journal(name, prev, commit, tags)
                    self._heads[name] = commit
                    self._journal_offset = self.journal_path.stat().st_size
                    for tag in tags:
                        self._tags.setdefault(tag, set()).add(name)
                finally:
                    fcntl.flock(lockfh, fcntl.LOCK_UN)
        return CommitRecord(commit=commit, **record)

    # -- reads ---------------------------------------------------------------
    def lookup(self, ref: str) -> tuple:
        """(content text, CommitRecord | None). A name resolves to its
        head commit; a hash resolves to a commit or a raw blob."""
        if _HASH_RE.match(ref):
            try:
                rec = self.read_commit(ref)
                content = self.get_object(rec.data)
                return content.decode("utf-8"), rec
            except StoreError as exc:
                if exc.code != "not_a_commit":
                    raise
                return self.get_object(ref).decode("utf-8"), None
        with self._mutex:
            self.refresh()
            head = self._heads.get(ref)
        if head is None:
            raise StoreError("not_found", f"no document named {ref}")
        rec = self.read_commit(head)
        return self.get_object(rec.data).decode("utf-8"), rec

    def history(self, name: str) -> list:
        """Commits newest first, following prev links across forks."""
        with self._mutex:
            self.refresh()
            head = self._heads.get(name)
        if head is None:
            raise StoreError("not_found", f"no document named {name}")
        out = []
        cursor: Optional[str] = head
        seen = set()
        while cursor and cursor not in seen:
            seen.add(cursor)
            rec = self.read_commit(cursor)
            out.append(rec)
            cursor = rec.prev
        return out

    def diff(self, a: str, b: str) -> list:
        ca, _ = self.lookup(a)
        cb, _ = self.lookup(b)
        return diff_script(ca, cb)

    def fork(self, name: str, newname: str, author: str = "",
             message: str = "") -> CommitRecord:
        with self._mutex:
            with open(self.lock_path, "r+b") as lockfh:
                fcntl.flock(lockfh, fcntl.LOCK_EX)
                try:
                    self.refresh()
                    head = self._heads.get(name)
                    if head is None:
                        raise StoreError("not_found",
                                         f"no document named {name}")
                    if newname in self._heads:
                        raise StoreError("name_taken",
                                         f"document {newname} already "
                                         f"exists")
                    if not _NAME_RE.match(newname):
                        raise StoreError("bad_name",
                                         f"illegal document name "
                                         f"{newname!r}")
                    old = self.read_commit(head)
                    record = {
                        "data": old.data, "prev": head, "author": author,
                        "time": int(time.time() * 1000),
                        "message": message or f"forked from {name}",
                        "name": newname, "tags": [],
                    }
                    commit = self._write_commit(record)
                    self._append_journal(newname, head, commit, [])
                    self._heads[newname] = commit
                    self._journal_offset = \
                        self.journal_path.stat().st_size
                finally:
                    fcntl.flock(lockfh, fcntl.LOCK_UN)
        return CommitRecord(commit=commit, **record)

    def merge(self, name: str, base: str, ours: str,
              theirs: str) -> tuple:
        """Three-way merge of edited content against a moved head.
        base/theirs are refs; ours is raw content. Returns
        (merged text, had_conflicts)."""
        base_text, _ = self.lookup(base)
        theirs_text, _ = self.lookup(theirs)
        return merge3(base_text, ours, theirs_text,
                      labels=("yours", name))

    def resolve_include(self, ref: Union[str, "object"]) -> str:
        text, _ = self.lookup(str(ref))
        return text


def make_include_resolver(store: Store):
    """An include resolver for engine.consult: accepts file(name) or a
    plain name/hash atom. Each ref may be included once per consult —
    a repeat is reported as a cycle, which also covers true include
    loops (nested includes resolve after this call returns, so a live
    stack cannot be tracked here)."""
    seen: list = []

    def resolver(target) -> str:
        from .terms import Atom, String, Struct
        if isinstance(target, Struct) and len(target.args) == 1:
            target = target.args[0]
        if isinstance(target, Atom):
            ref = target.name
        elif isinstance(target, String):
            ref = target.value
        else:
            raise StoreError("bad_request",
                             f"cannot include {target!r}")
        if ref in seen:
            raise StoreError("cycle_detected",
                             " -> ".join(seen + [ref]))
        seen.append(ref)
        return store.resolve_include(ref)
    return resolver
