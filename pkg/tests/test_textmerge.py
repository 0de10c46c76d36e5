from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from clauselab.textmerge import (apply_script, diff_script, merge3,
                                 script_as_json, unified)

A = "app([], L, L).\napp([H|T], L, [H|R]) :-\n    app(T, L, R).\n"
B = "app([], L, L).\napp([H|T], L, [H|R]) :-\n    app(T, L, R).\nnrev([], []).\n"


def test_equal_texts_diff_to_empty_script():
    assert diff_script("abc\n", "abc\n") == []
    assert apply_script("abc\n", []) == "abc\n"


def test_patch_round_trip_simple():
    script = diff_script(A, B)
    assert apply_script(A, script) == B


def test_script_shape():
    script = diff_script("a\nb\nc\n", "a\nX\nc\n")
    kinds = [op[0] for op in script]
    assert kinds == ["=", "-", "+", "="]
    assert script[1][1] == ["b\n"]
    assert script[2][1] == ["X\n"]


def test_script_as_json_is_plain_data():
    got = script_as_json(diff_script("a\nb\n", "a\nc\n"))
    assert got == [{"op": "=", "count": 1},
                   {"op": "-", "lines": ["b\n"]},
                   {"op": "+", "lines": ["c\n"]}]


def test_unified_output_has_headers_and_hunks():
    text = unified("a\nb\n", "a\nc\n", a_label="v1", b_label="v2")
    assert text.startswith("--- v1\n+++ v2\n")
    assert "-b" in text and "+c" in text


def test_unified_of_identical_texts_is_headers_only():
    assert unified("same\n", "same\n") == ""


_texts = st.text(alphabet="ab\n ", max_size=60)


@settings(max_examples=300, deadline=None)
@given(_texts, _texts)
def test_patch_oracle(a, b):
    assert apply_script(a, diff_script(a, b)) == b


@settings(max_examples=150, deadline=None)
@given(_texts)
def test_diff_to_self_is_empty(a):
    assert diff_script(a, a) == []


# -- three-way merge ----------------------------------------------------------

BASE = "one\ntwo\nthree\nfour\nfive\n"


def test_merge_disjoint_edits_is_clean():
    ours = BASE.replace("two", "TWO")
    theirs = BASE.replace("four", "FOUR")
    merged, conflicts = merge3(BASE, ours, theirs)
    assert not conflicts
    assert merged == "one\nTWO\nthree\nFOUR\nfive\n"


def test_merge_identical_edits_is_clean():
    both = BASE.replace("three", "drei")
    merged, conflicts = merge3(BASE, both, both)
    assert not conflicts
    assert merged == both


def test_merge_one_sided_edit_takes_it():
    ours = BASE.replace("five\n", "five\nsix\n")
    merged, conflicts = merge3(BASE, ours, BASE)
    assert not conflicts
    assert merged == ours


def test_merge_conflicting_edits_marks_both_sides():
    ours = BASE.replace("three", "ours_line")
    theirs = BASE.replace("three", "theirs_line")
    merged, conflicts = merge3(BASE, ours, theirs, labels=("alice", "bob"))
    assert conflicts
    assert "<<<<<<< alice\n" in merged
    assert "ours_line\n" in merged
    assert "=======\n" in merged
    assert "theirs_line\n" in merged
    assert ">>>>>>> bob\n" in merged
    # untouched context survives around the conflict
    assert merged.startswith("one\ntwo\n")
    assert merged.endswith("four\nfive\n")


def test_merge_same_line_edits_conflict():
    ours = BASE.replace("two", "TWO")
    theirs = BASE.replace("two\nthree", "zwei\nthree")
    merged, conflicts = merge3(BASE, ours, theirs)
    assert conflicts  # both touched line 2 differently
    assert "TWO" in merged and "zwei" in merged


def test_merge_adjacent_line_edits_combine_cleanly():
    ours = BASE.replace("two", "TWO")       # line 2
    theirs = BASE.replace("three", "DREI")  # line 3
    merged, conflicts = merge3(BASE, ours, theirs)
    assert not conflicts
    assert merged == "one\nTWO\nDREI\nfour\nfive\n"


def test_merge_insertions_at_same_point_conflict():
    ours = BASE.replace("two\n", "two\nours_extra\n")
    theirs = BASE.replace("two\n", "two\ntheirs_extra\n")
    merged, conflicts = merge3(BASE, ours, theirs)
    assert conflicts
    assert "ours_extra\n" in merged and "theirs_extra\n" in merged


@settings(max_examples=200, deadline=None)
@given(_texts, _texts)
def test_merge_with_unchanged_side_is_other_side(base, edited):
    merged, conflicts = merge3(base, base, edited)
    assert not conflicts
    assert merged == edited
    merged, conflicts = merge3(base, edited, base)
    assert not conflicts
    assert merged == edited


@settings(max_examples=200, deadline=None)
@given(_texts, _texts)
def test_merge_identical_sides_never_conflicts(base, edited):
    merged, conflicts = merge3(base, edited, edited)
    assert not conflicts
    assert merged == edited
