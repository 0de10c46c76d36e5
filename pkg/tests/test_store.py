from __future__ import annotations

import multiprocessing
import random
import subprocess

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clauselab.store import (Conflict, Store, StoreError, blob_hash,
                             make_include_resolver)


@pytest.fixture
def store(tmp_path):
    return Store(tmp_path / "store")


# -- blob hashing -------------------------------------------------------------

def test_empty_blob_hash_golden():
    assert blob_hash(b"") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"


def test_known_blob_hash():
    # printf 'hello\n' | git hash-object --stdin
    assert blob_hash(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_blob_hash_matches_git_on_random_content(tmp_path):
    rng = random.Random(20240817)
    blobs = [bytes(rng.randrange(256) for _ in range(rng.randrange(200)))
             for _ in range(99)]
    blobs.append(b"")
    paths = []
    for i, blob in enumerate(blobs):
        p = tmp_path / f"blob{i}"
        p.write_bytes(blob)
        paths.append(str(p))
    out = subprocess.run(
        ["git", "hash-object", "--stdin-paths"],
        input="\n".join(paths) + "\n", capture_output=True,
        text=True, check=True)
    expected = out.stdout.split()
    assert len(expected) == 100
    for blob, want in zip(blobs, expected):
        assert blob_hash(blob) == want


# -- objects ------------------------------------------------------------------

def test_object_round_trip(store):
    digest = store.put_object(b"some text")
    assert store.has_object(digest)
    assert store.get_object(digest) == b"some text"
    assert digest == blob_hash(b"some text")


def test_get_missing_object(store):
    with pytest.raises(StoreError) as exc:
        store.get_object("0" * 40)
    assert exc.value.code == "not_found"


# -- save / lookup ------------------------------------------------------------

def test_anonymous_save_gets_a_fresh_name(store):
    rec = store.save("p(1).\n", author="alice")
    assert len(rec.name) == 8 and rec.name.isalnum()
    text, rec2 = store.lookup(rec.name)
    assert text == "p(1).\n"
    assert rec2.commit == rec.commit
    assert rec2.author == "alice"
    assert rec2.prev is None


def test_named_save_and_update(store):
    r1 = store.save("v1\n", name="prog")
    r2 = store.save("v2\n", name="prog", prev=r1.commit)
    assert r2.prev == r1.commit
    text, head = store.lookup("prog")
    assert text == "v2\n" and head.commit == r2.commit


def test_save_existing_name_without_prev_is_name_taken(store):
    r1 = store.save("v1\n", name="prog")
    with pytest.raises(StoreError) as exc:
        store.save("v2\n", name="prog")
    assert exc.value.code == "name_taken"
    assert exc.value.data["current_head"] == r1.commit


def test_save_with_stale_prev_is_conflict(store):
    r1 = store.save("v1\n", name="prog")
    r2 = store.save("v2\n", name="prog", prev=r1.commit)
    with pytest.raises(Conflict) as exc:
        store.save("v3\n", name="prog", prev=r1.commit)
    assert exc.value.code == "conflict"
    assert exc.value.current_head == r2.commit


def test_save_prev_on_unknown_name(store):
    with pytest.raises(StoreError) as exc:
        store.save("x\n", name="ghost", prev="0" * 40)
    assert exc.value.code == "not_found"


def test_anonymous_save_with_prev_is_rejected(store):
    with pytest.raises(StoreError) as exc:
        store.save("x\n", prev="0" * 40)
    assert exc.value.code == "bad_request"


def test_illegal_names_are_rejected(store):
    for name in ("has space", "a/b", "", "UPPER CASE!", "x" * 200):
        with pytest.raises(StoreError) as exc:
            store.save("x\n", name=name)
        assert exc.value.code == "bad_name", name


def test_lookup_by_commit_hash_pins_the_version(store):
    r1 = store.save("v1\n", name="prog")
    store.save("v2\n", name="prog", prev=r1.commit)
    text, rec = store.lookup(r1.commit)
    assert text == "v1\n" and rec.commit == r1.commit


def test_lookup_raw_blob_hash(store):
    digest = store.put_object(b"just bytes\n")
    text, rec = store.lookup(digest)
    assert text == "just bytes\n"
    assert rec is None


def test_lookup_unknown_name(store):
    with pytest.raises(StoreError) as exc:
        store.lookup("nonesuch")
    assert exc.value.code == "not_found"


def test_unicode_content_round_trips(store):
    body = "% héllo — ünïcode\np('ω').\n"
    rec = store.save(body, name="uni")
    text, _ = store.lookup("uni")
    assert text == body
    assert store.get_object(rec.data).decode("utf-8") == body


# -- history and forks ----------------------------------------------------------

def test_history_newest_first(store):
    r1 = store.save("v1\n", name="prog", message="first")
    r2 = store.save("v2\n", name="prog", prev=r1.commit, message="second")
    r3 = store.save("v3\n", name="prog", prev=r2.commit, message="third")
    got = store.history("prog")
    assert [r.commit for r in got] == [r3.commit, r2.commit, r1.commit]
    assert [r.message for r in got] == ["third", "second", "first"]


def test_fork_shares_content_and_history(store):
    r1 = store.save("v1\n", name="orig")
    r2 = store.save("v2\n", name="orig", prev=r1.commit)
    fork = store.fork("orig", "copy", author="bob")
    assert fork.data == r2.data  # same blob, no duplication
    assert fork.prev == r2.commit
    text, _ = store.lookup("copy")
    assert text == "v2\n"
    # the fork's history continues into the original's past
    commits = [r.commit for r in store.history("copy")]
    assert commits == [fork.commit, r2.commit, r1.commit]
    # diverging afterwards does not disturb the original
    store.save("copy change\n", name="copy", prev=fork.commit)
    assert store.lookup("orig")[0] == "v2\n"


def test_fork_to_taken_name(store):
    store.save("a\n", name="one")
    store.save("b\n", name="two")
    with pytest.raises(StoreError) as exc:
        store.fork("one", "two")
    assert exc.value.code == "name_taken"


def test_fork_of_missing_document(store):
    with pytest.raises(StoreError) as exc:
        store.fork("ghost", "copy")
    assert exc.value.code == "not_found"


def test_tags_index(store):
    store.save("ex1\n", name="exa", tags=["example"])
    store.save("ex2\n", name="exb", tags=["example", "featured"])
    store.save("other\n", name="exc")
    assert sorted(store.names_with_tag("example")) == ["exa", "exb"]
    assert store.names_with_tag("featured") == ["exb"]
    assert store.names_with_tag("nope") == []


def test_store_diff_and_merge(store):
    r1 = store.save("one\ntwo\nthree\n", name="doc")
    store.save("one\nTWO\nthree\n", name="doc", prev=r1.commit)
    script = store.diff(r1.commit, "doc")
    assert any(op[0] == "+" for op in script)
    merged, conflicts = store.merge("doc", r1.commit, "one\ntwo\nTHREE\n",
                                    "doc")
    assert not conflicts
    assert merged == "one\nTWO\nTHREE\n"


# -- multi-process convergence --------------------------------------------------

def _writer(root, seed, out):
    rng = random.Random(seed)
    store = Store(root)
    mine = []
    results = {}
    for i in range(20):
        op = rng.choice(["new", "update", "fork"]) if mine else "new"
        try:
            if op == "new":
                name = f"w{seed}d{i}"
                rec = store.save(f"writer {seed} doc {i} v0\n", name=name)
                mine.append(name)
            elif op == "update":
                name = rng.choice(mine)
                head = store.heads()[name]
                rec = store.save(f"writer {seed} {name} v{i}\n",
                                 name=name, prev=head)
            else:
                src = rng.choice(mine)
                name = f"w{seed}f{i}"
                rec = store.fork(src, name)
                mine.append(name)
            results[rec.name] = rec.commit
        except StoreError:
            pass
    out.put((seed, results))


def test_journal_convergence_under_concurrent_writers(tmp_path):
    root = str(tmp_path / "shared")
    Store(root)  # create the layout first
    queue: multiprocessing.Queue = multiprocessing.Queue()
    procs = [multiprocessing.Process(target=_writer, args=(root, seed, queue))
             for seed in (1, 2, 3)]
    for p in procs:
        p.start()
    for p in procs:
        p.join(timeout=60)
        assert p.exitcode == 0
    reported = {}
    while not queue.empty():
        _seed, results = queue.get()
        reported.update(results)

    fresh = Store(root)
    live = fresh.heads()
    assert fresh.replay_journal() == live
    # every writer's last version of every document is the surviving head
    assert reported == live
    assert len(live) >= 3  # each writer created at least its first document
    for name in live:
        text, rec = fresh.lookup(name)
        assert rec.commit == live[name]
        assert fresh.get_object(rec.data).decode("utf-8") == text


def test_second_instance_sees_new_heads(tmp_path):
    root = tmp_path / "both"
    a = Store(root)
    b = Store(root)
    a.save("from a\n", name="doca")
    assert b.lookup("doca")[0] == "from a\n"
    b.save("from b\n", name="docb")
    assert a.lookup("docb")[0] == "from b\n"


def test_replay_journal_matches_heads_after_reopen(store):
    r = store.save("x\n", name="one")
    store.save("y\n", name="one", prev=r.commit)
    store.save("z\n", name="two")
    store.fork("one", "three")
    reopened = Store(store.root)
    assert reopened.replay_journal() == store.heads()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=80),
    min_size=1, max_size=6))
def test_content_round_trips_bytes_exactly(tmp_path_factory, texts):
    store = Store(tmp_path_factory.mktemp("fuzz") / "s")
    for text in texts:
        rec = store.save(text)
        got, rec2 = store.lookup(rec.name)
        assert got == text
        assert store.get_object(rec2.data) == text.encode("utf-8")


# -- include resolution -----------------------------------------------------------

def test_include_resolver_fetches_documents(store):
    store.save("p(1).\n", name="lib")
    store.save("r(2).\n", name="extra")
    resolver = make_include_resolver(store)
    from clauselab.terms import Atom, Struct
    assert resolver(Atom("lib")) == "p(1).\n"
    assert resolver(Struct("file", (Atom("extra"),))) == "r(2).\n"


def test_include_resolver_reports_cycles(store):
    store.save("q(2).\n", name="libq")
    resolver = make_include_resolver(store)
    from clauselab.terms import Atom
    assert resolver(Atom("libq")) == "q(2).\n"
    with pytest.raises(StoreError) as exc:
        resolver(Atom("libq"))
    assert exc.value.code == "cycle_detected"
    assert "libq -> libq" in exc.value.message


def test_include_resolver_rejects_odd_targets(store):
    resolver = make_include_resolver(store)
    from clauselab.terms import Integer
    with pytest.raises(StoreError) as exc:
        resolver(Integer(3))
    assert exc.value.code == "bad_request"
