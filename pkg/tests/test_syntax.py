from __future__ import annotations

import pytest

from clauselab.syntax import (OperatorTable, ParseError, parse_term,
                              split_clauses, standard_operators)
from clauselab.terms import Atom, Float, Integer, String, Struct, Var
from clauselab.tokens import tokenize
from clauselab.writer import write_term


def parsed(text: str):
    return parse_term(text + " .").term


def test_atoms_and_numbers():
    assert parsed("foo") == Atom("foo")
    assert parsed("'odd atom'") == Atom("odd atom")
    assert parsed("42") == Integer(42)
    assert parsed("3.5") == Float(3.5)
    assert parsed("0xff") == Integer(255)
    assert parsed("0'a") == Integer(97)
    assert parsed("[]") == Atom("[]")
    assert parsed("{}") == Atom("{}")


def test_strings_follow_double_quotes_flag():
    assert parsed('"hi"') == String("hi")
    assert parse_term('"hi" .', double_quotes="atom").term == Atom("hi")
    codes = parse_term('"hi" .', double_quotes="codes").term
    assert codes == Struct(".", (Integer(104),
                                 Struct(".", (Integer(105), Atom("[]")))))
    chars = parse_term('"hi" .', double_quotes="chars").term
    assert chars == Struct(".", (Atom("h"),
                                 Struct(".", (Atom("i"), Atom("[]")))))


def test_compound_terms():
    t = parsed("point(1, 2)")
    assert t == Struct("point", (Integer(1), Integer(2)))
    assert parsed("f(g(h(x)))") == Struct(
        "f", (Struct("g", (Struct("h", (Atom("x"),)),)),))


def test_variables_share_by_name():
    t = parsed("f(X, Y, X)")
    assert t.args[0] is t.args[2]
    assert t.args[0] is not t.args[1]


def test_anonymous_variables_are_distinct():
    t = parsed("f(_, _)")
    assert t.args[0] is not t.args[1]


def test_lists():
    assert parsed("[a]") == Struct(".", (Atom("a"), Atom("[]")))
    assert parsed("[a, b]") == Struct(
        ".", (Atom("a"), Struct(".", (Atom("b"), Atom("[]")))))
    t = parsed("[H|T]")
    assert t.name == "." and isinstance(t.args[1], Var)


def test_curly_braces():
    t = parsed("{a, b}")
    assert t.name == "{}" and t.args[0].name == ","


def test_operator_precedence():
    assert write_term(parsed("1 + 2 * 3")) == "1+2*3"
    t = parsed("1 + 2 * 3")
    assert t.name == "+" and t.args[1].name == "*"
    t = parsed("(1 + 2) * 3")
    assert t.name == "*" and t.args[0].name == "+"


def test_left_associativity_of_minus():
    t = parsed("10 - 3 - 2")
    assert t == Struct("-", (Struct("-", (Integer(10), Integer(3))),
                             Integer(2)))


def test_right_associativity_of_comma_and_arrow():
    t = parsed("(a, b, c)")
    assert t.name == "," and t.args[1].name == ","
    t = parsed("(a -> b ; c)")
    assert t.name == ";" and t.args[0].name == "->"


def test_non_associative_operator_rejected():
    with pytest.raises(ParseError):
        parse_term("a = b = c .")


def test_prefix_minus_and_negative_literals():
    assert parsed("-5") == Integer(-5)
    assert parsed("- 5") == Struct("-", (Integer(5),))
    assert parsed("3 - -2") == Struct("-", (Integer(3), Integer(-2)))
    assert parsed("f(-1)") == Struct("f", (Integer(-1),))


def test_operator_as_plain_atom_in_arglist():
    t = parsed("f(+, -)")
    assert t == Struct("f", (Atom("+"), Atom("-")))


def test_rule_and_directive_shapes():
    t = parsed("head :- body")
    assert t.name == ":-" and len(t.args) == 2
    t = parsed(":- dynamic foo/2")
    assert t.name == ":-" and len(t.args) == 1


def test_custom_operator_table():
    ops = standard_operators()
    ops.add(700, "xfx", "===")
    t = parse_term("a === b .", ops=ops).term
    assert t == Struct("===", (Atom("a"), Atom("b")))
    with pytest.raises(ParseError):
        parse_term("a === b .")  # stock table has no ===


def test_parse_error_carries_location():
    with pytest.raises(ParseError) as err:
        parse_term("foo( .")
    assert err.value.span.line == 1
    with pytest.raises(ParseError):
        parse_term("f(a) g .")
    with pytest.raises(ParseError):
        parse_term("f(a)")  # no fullstop


def test_var_names_exposed():
    res = parse_term("f(Alpha, _Beta, _) .")
    assert "Alpha" in res.var_names
    assert res.var_names["Alpha"] is res.term.args[0]


def test_layout_spans_nest():
    res = parse_term("foo(X, bar(Y)) .")
    lay = res.layout
    assert lay.span.start == 0
    inner = lay.children[1]
    text = "foo(X, bar(Y)) ."
    assert text[inner.span.start:inner.span.end] == "bar(Y)"


def test_split_clauses():
    toks = tokenize("a(1). b :- a(X).\n% note\nc.")
    groups = split_clauses(toks)
    non_comment = [g for g in groups
                   if any(t.kind != "comment" for t in g)]
    assert len(non_comment) == 3
    assert all(g[-1].kind == "fullstop" for g in non_comment)


def test_operator_table_remove_and_lookup():
    ops = standard_operators()
    assert ops.infix("+") is not None
    assert ops.prefix("-") is not None
    assert ops.infix("nosuchop") is None
