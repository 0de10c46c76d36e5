from __future__ import annotations

import threading
import time

import pytest

from clauselab.engine import Limits
from clauselab.service import Service, ServiceError, csv_export


@pytest.fixture
def svc():
    return Service()


def _engine(svc, session="s", **kw):
    ev = svc.create(session, **kw)
    assert ev["event"] == "create"
    return ev["id"]


def _texts(event, name="X"):
    return [a[name]["text"] for a in event["answers"]]


def _drain(svc, eid, query, chunk=1, name="X"):
    """All answer texts for a query, walking chunks with next()."""
    ev = svc.ask(eid, query, chunk=chunk)
    out = []
    while True:
        assert ev["event"] == "success", ev
        out += _texts(ev, name)
        if not ev["more"]:
            return out
        ev = svc.next(eid)


# -- create / ask / next transcript --------------------------------------------

def test_chunked_ask_next_transcript(svc):
    eid = _engine(svc)
    first = svc.ask(eid, "member(X, [a, b, c])", chunk=1)
    assert first["event"] == "success"
    assert _texts(first) == ["a"]
    assert first["more"] is True
    assert first["projection"] == ["X"]
    assert first["time"] >= 0
    second = svc.next(eid, 10)
    assert _texts(second) == ["b", "c"]
    assert second["more"] is False
    svc.destroy(eid)


def test_exact_chunk_boundary_has_no_phantom_chunk(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "member(X, [1, 2])", chunk=2)
    assert _texts(ev) == ["1", "2"]
    assert ev["more"] is False


def test_next_keeps_last_chunk_size(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "member(X, [1,2,3,4,5,6])", chunk=2)
    sizes = [len(ev["answers"])]
    while ev["more"]:
        ev = svc.next(eid)
        sizes.append(len(ev["answers"]))
    assert sizes == [2, 2, 2]


def test_chunk_size_is_transparent(svc):
    eid = _engine(svc)
    want = _drain(svc, eid, "member(X, [q, w, e, r, t, y, u])", chunk=100)
    for chunk in (1, 2, 3, 7):
        assert _drain(svc, eid, "member(X, [q, w, e, r, t, y, u])",
                      chunk=chunk) == want


def test_failure_is_empty_success(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "member(x, [a, b])")
    assert ev["event"] == "success"
    assert ev["answers"] == []
    assert ev["more"] is False


def test_projection_skips_underscore_variables(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "member(_Pick, [a]), X = _Pick")
    assert ev["projection"] == ["X"]
    assert list(ev["answers"][0]) == ["X"]


def test_template_replaces_projection(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "member(X, [1, 2])", template="f(X, X)", chunk=5)
    assert ev["projection"] == ["template"]
    assert [a["template"]["text"] for a in ev["answers"]] == \
        ["f(1,1)", "f(2,2)"]


def test_answers_carry_rendered_documents(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "X = point(1, 2)")
    doc = ev["answers"][0]["X"]
    assert doc["text"] == "point(1,2)"
    assert doc["renderer"] == "generic"
    assert doc["root"]["node"] in ("group", "span")


# -- consult on create -----------------------------------------------------------

def test_create_consults_source(svc):
    ev = svc.create("s", src="p(1).\np(2).\n")
    assert ev["consult"]["clauses"] == 2
    assert ev["consult"]["errors"] == []
    got = _drain(svc, ev["id"], "p(X)", chunk=3)
    assert got == ["1", "2"]


def test_create_reports_consult_errors(svc):
    ev = svc.create("s", src="p(1).\nbroken(.\nq(2).\n")
    assert ev["event"] == "create"
    errors = ev["consult"]["errors"]
    assert len(errors) == 1
    assert errors[0]["line"] == 2
    # clauses around the bad one still loaded
    assert _drain(svc, ev["id"], "q(X)") == ["2"]


# -- state machine edges -----------------------------------------------------------

def test_ask_while_waiting_more_is_a_protocol_error(svc):
    eid = _engine(svc)
    svc.ask(eid, "member(X, [1, 2, 3])", chunk=1)
    with pytest.raises(ServiceError) as exc:
        svc.ask(eid, "true")
    assert exc.value.code == "protocol"


def test_next_while_idle_is_a_protocol_error(svc):
    eid = _engine(svc)
    with pytest.raises(ServiceError) as exc:
        svc.next(eid)
    assert exc.value.code == "protocol"


def test_stop_returns_engine_to_idle(svc):
    eid = _engine(svc)
    svc.ask(eid, "member(X, [1, 2, 3])", chunk=1)
    ev = svc.stop(eid)
    assert ev["event"] == "stop"
    assert _drain(svc, eid, "member(X, [ok])") == ["ok"]


def test_unknown_engine(svc):
    with pytest.raises(ServiceError) as exc:
        svc.ask("beef" * 8, "true")
    assert exc.value.code == "no_such_engine"


def test_destroy_is_idempotent_and_forgets_the_engine(svc):
    eid = _engine(svc)
    assert svc.destroy(eid)["event"] == "destroyed"
    assert svc.destroy(eid)["event"] == "destroyed"
    with pytest.raises(ServiceError) as exc:
        svc.ask(eid, "true")
    assert exc.value.code == "no_such_engine"


# -- errors as events ----------------------------------------------------------------

def test_syntax_error_event_carries_position(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "foo((")
    assert ev["event"] == "error"
    assert ev["code"] == "syntax"
    assert ev["line"] == 1
    assert ev["end"] > ev["start"] >= 0


def test_sandbox_rejection_event(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "other:spy(X)")
    assert ev["event"] == "error"
    assert ev["code"] == "sandbox"
    assert ev["verdict"] == "permission_error"
    assert ev["culprit"] == "other:spy(X)"
    assert ev["trace"] == ["other:spy(X)"]
    # rejection happens before execution; the engine stays usable
    assert _drain(svc, eid, "X = still_alive") == ["still_alive"]


def test_authorized_ask_bypasses_the_sandbox(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "read(X), call(X)", authorized=True)
    assert ev["event"] == "prompt"
    svc.respond(eid, "true.")


def test_runtime_error_ends_the_query(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "X is foo + 1")
    assert ev["event"] == "error"
    assert "type_error" in ev["data"]
    assert _drain(svc, eid, "X = recovered") == ["recovered"]


def test_answers_before_an_error_are_still_delivered(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "member(X, [1, 2]) ; X is foo + 1", chunk=10)
    assert ev["event"] == "success"
    assert _texts(ev) == ["1", "2"]
    assert ev["more"] is False
    err = svc.pull_response(eid)
    assert err["event"] == "error"
    assert "type_error" in err["data"]


# -- output and prompts ---------------------------------------------------------------

def test_output_events_precede_the_answer(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, 'format("hi ~w~n", [7])')
    assert ev == {"event": "output", "data": "hi 7\n", "id": eid}
    done = svc.pull_response(eid)
    assert done["event"] == "success" and done["answers"] == [{}]
    assert svc.pull_response(eid)["event"] == "none"


def test_prompt_respond_cycle(svc):
    eid = _engine(svc)
    ev = svc.ask(eid, "read(X), atom(X)", authorized=True)
    assert ev["event"] == "prompt"
    assert ev["data"] == "|:"
    again = svc.respond(eid, "((not a term")
    assert again["event"] == "prompt"
    done = svc.respond(eid, "hello.")
    assert done["event"] == "success"
    assert _texts(done) == ["hello"]


def test_respond_without_a_prompt_is_a_protocol_error(svc):
    eid = _engine(svc)
    with pytest.raises(ServiceError) as exc:
        svc.respond(eid, "x.")
    assert exc.value.code == "protocol"


# -- tracing through the service --------------------------------------------------------

def test_trace_events_and_answers_interleave(svc):
    eid = _engine(svc, src="t(1).\nt(2).\n")
    seen = []
    ev = svc.ask(eid, "t(X)", trace=True)
    for _ in range(20):
        seen.append(ev)
        if ev["event"] == "success" and not ev["more"]:
            break
        if ev["event"] == "trace":
            ev = svc.trace_control(eid, "creep")
        else:
            ev = svc.pull_response(eid)
    log = [(e["port"], e["goal"]) if e["event"] == "trace"
           else ("answers", tuple(_texts(e)))
           for e in seen]
    assert log == [
        ("call", "t(X)"),
        ("exit", "t(1)"),
        ("answers", ("1",)),
        ("redo", "t(X)"),
        ("exit", "t(2)"),
        ("answers", ("2",)),
        ("fail", "t(X)"),
        ("answers", ()),
    ]


def test_trace_control_without_pending_event(svc):
    eid = _engine(svc)
    with pytest.raises(ServiceError) as exc:
        svc.trace_control(eid, "creep")
    assert exc.value.code == "protocol"


# -- quota -----------------------------------------------------------------------------

def test_quota_limits_live_engines_per_session(svc):
    ids = [_engine(svc, "alice") for _ in range(3)]
    with pytest.raises(ServiceError) as exc:
        svc.create("alice")
    assert exc.value.code == "quota_exceeded"
    assert exc.value.data["max"] == 3
    _engine(svc, "bob")  # other sessions are unaffected
    svc.destroy(ids[0])
    _engine(svc, "alice")  # destroying freed a slot


def test_quota_under_concurrent_creates(svc):
    results = []
    lock = threading.Lock()

    def create_one():
        try:
            ev = svc.create("storm")
            with lock:
                results.append(("ok", ev["id"]))
        except ServiceError as exc:
            with lock:
                results.append(("err", exc.code))

    threads = [threading.Thread(target=create_one) for _ in range(20)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    oks = [r for r in results if r[0] == "ok"]
    errs = [r for r in results if r[0] == "err"]
    assert len(oks) == 3
    assert len(errs) == 17
    assert all(code == "quota_exceeded" for _, code in errs)
    assert svc.live_engines("storm") == 3


def test_custom_quota():
    svc = Service(quota_max=1)
    _engine(svc, "s")
    with pytest.raises(ServiceError):
        svc.create("s")


# -- reaping ------------------------------------------------------------------------------

def test_idle_engines_are_reaped():
    svc = Service(idle_timeout=5.0)
    eid = _engine(svc, "s")
    svc.reap(now=time.monotonic() + 6)
    assert svc.live_engines("s") == 0
    with pytest.raises(ServiceError) as exc:
        svc.ask(eid, "true")
    assert exc.value.code == "no_such_engine"
    # quota slots were released
    for _ in range(3):
        _engine(svc, "s")


def test_prompting_engines_survive_the_reaper():
    svc = Service(idle_timeout=5.0)
    eid = _engine(svc, "s")
    svc.ask(eid, "read(X)", authorized=True)
    svc.reap(now=time.monotonic() + 60)
    done = svc.respond(eid, "ok.")
    assert done["event"] == "success"


def test_fresh_engines_are_not_reaped():
    svc = Service(idle_timeout=5.0)
    eid = _engine(svc, "s")
    svc.reap()
    assert _drain(svc, eid, "X = here") == ["here"]


# -- abort ----------------------------------------------------------------------------------

def test_abort_interrupts_a_running_query():
    svc = Service(limits=Limits(timeout_ms=30_000, max_steps=500_000_000))
    eid = _engine(svc, "s")
    result = {}

    def run():
        result["ev"] = svc.ask(eid, "between(1, inf, X), X < 1")

    worker = threading.Thread(target=run)
    worker.start()
    time.sleep(0.2)
    assert svc.abort(eid)["event"] == "aborting"
    worker.join(timeout=30)
    assert not worker.is_alive()
    assert result["ev"]["event"] == "error"
    assert "abort" in result["ev"]["data"]
    assert _drain(svc, eid, "X = back") == ["back"]


def test_abort_while_waiting_more_discards_the_query(svc):
    eid = _engine(svc)
    svc.ask(eid, "member(X, [1, 2, 3])", chunk=1)
    svc.abort(eid)
    with pytest.raises(ServiceError) as exc:
        svc.next(eid)
    assert exc.value.code == "protocol"
    assert _drain(svc, eid, "X = fine") == ["fine"]


# -- CSV export -----------------------------------------------------------------------------

def test_csv_golden():
    out = csv_export("p('a,b'). p(plain). p([1,2]).", "p(X)")
    assert out == b'X\r\n"a,b"\r\nplain\r\n"[1,2]"\r\n'


def test_csv_quotes_and_unicode():
    out = csv_export("q('say \"hi\"'). q('λ').", "q(X)")
    assert out == b'X\r\n"say ""hi"""\r\n\xce\xbb\r\n'


def test_csv_multiple_columns_in_projection_order():
    src = "pair(a, 1). pair(b, 2)."
    out = csv_export(src, "pair(X, Y)")
    assert out == b"X,Y\r\na,1\r\nb,2\r\n"
    out = csv_export(src, "pair(X, Y)", projection=["Y", "X"])
    assert out == b"Y,X\r\n1,a\r\n2,b\r\n"


def test_csv_unknown_projection_variable():
    with pytest.raises(ServiceError) as exc:
        csv_export("p(1).", "p(X)", projection=["Z"])
    assert exc.value.code == "bad_projection"


def test_csv_header_only_when_no_answers():
    assert csv_export("", "member(X, [])") == b"X\r\n"


def test_csv_limit_caps_rows():
    out = csv_export("", "between(1, 100, X)", limit=2)
    assert out == b"X\r\n1\r\n2\r\n"


def test_csv_consult_error():
    with pytest.raises(ServiceError) as exc:
        csv_export("p(.", "p(X)")
    assert exc.value.code == "consult"


def test_csv_sandbox_applies():
    with pytest.raises(ServiceError) as exc:
        csv_export("", "other:spy(X)")
    assert exc.value.code == "sandbox"


def test_csv_runtime_error():
    with pytest.raises(ServiceError) as exc:
        csv_export("", "X is foo + 1")
    assert exc.value.code == "runtime"


def test_csv_rejects_interactive_queries():
    with pytest.raises(ServiceError) as exc:
        csv_export("", "read(X)", authorized=True)
    assert exc.value.code == "prompt_in_csv"
