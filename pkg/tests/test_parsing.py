"""Tests for the error-tolerant mini parser."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patmask.parsing import (
    DEFAULT_LITERAL_TYPES,
    MiniParser,
    SyntaxNode,
    get_backend,
    literal_positions,
    parse_line,
)

parser = MiniParser()


def shape(node: SyntaxNode):
    """(type, children-shapes) view of a tree, ignoring spans."""
    return (node.node_type, tuple(shape(c) for c in node.children))


def test_backend_registry():
    assert get_backend("mini").language_id == "mini"
    with pytest.raises(KeyError):
        get_backend("no-such-language")


def test_golden_assert_statement():
    line = "assert f(1) == 2"
    tree = parse_line(parser, line)
    assert tree.span == (0, len(line))
    assert shape(tree) == (
        "assert_stmt",
        (
            ("assert", ()),
            (
                "call",
                (
                    ("identifier", ()),
                    ("args", ((("(", ())), ("integer", ()), (")", ()))),
                ),
            ),
            ("==", ()),
            ("integer", ()),
        ),
    )
    assert not tree.has_errors()


def test_empty_line():
    tree = parse_line(parser, "")
    assert tree.span == (0, 0)
    assert tree.children == ()


def test_truncated_line_contains_error_node():
    tree = parse_line(parser, "assert f(1 ==")
    assert tree.has_errors()
    # the assert keyword and callee still parse cleanly
    assert tree.children[0].node_type == "assert"
    assert not tree.children[0].is_error


def test_parse_line_rejects_newlines():
    with pytest.raises(ValueError):
        parse_line(parser, "a\nb")


def test_error_isolated_from_valid_prefix():
    tree = parse_line(parser, "x = f(2) $ ` $")
    errors = [n for n in tree.walk() if n.is_error]
    assert errors
    # every error is confined to the garbage region
    assert all(n.span[0] >= 9 for n in errors)
    prefix_nodes = [n for n in tree.walk() if n.span[1] <= 8]
    assert prefix_nodes and all(not n.is_error for n in prefix_nodes)


def test_unterminated_string_is_error():
    tree = parse_line(parser, "x = 'abc")
    assert tree.has_errors()


def test_block_opener_at_line_end_is_not_error():
    for line in ["public class SolutionTest {", "int main() {", "def f():"]:
        assert not parse_line(parser, line).has_errors(), line


def test_statement_kinds():
    kinds = {
        "assert x == 1": "assert_stmt",
        "return 0;": "return_stmt",
        "def test_a():": "def_stmt",
        "x = []": "assign_stmt",
        "x += 1": "assign_stmt",
        "f(1, 2);": "expr_stmt",
        "}": "expr_stmt",
        "": "stmt",
    }
    for line, kind in kinds.items():
        assert parse_line(parser, line).node_type == kind, line


def test_literal_positions_simple_assignment():
    tree = parse_line(parser, "x = 1")
    assert literal_positions(tree, DEFAULT_LITERAL_TYPES) == {(4, 5)}


def test_literal_positions_no_literals():
    tree = parse_line(parser, "f()")
    assert literal_positions(tree, DEFAULT_LITERAL_TYPES) == set()


def test_literal_positions_call_args():
    line = "g(1, 2.5)"
    tree = parse_line(parser, line)
    spans = literal_positions(tree, DEFAULT_LITERAL_TYPES)
    assert {line[a:b] for a, b in spans} == {"1", "2.5"}


def test_literal_positions_configurable_strings():
    line = "say('hi')"
    tree = parse_line(parser, line)
    assert literal_positions(tree, DEFAULT_LITERAL_TYPES) == set()
    spans = literal_positions(tree, frozenset({"string"}))
    assert {line[a:b] for a, b in spans} == {"'hi'"}


def _check_spans(node: SyntaxNode, lo: int, hi: int):
    assert lo <= node.span[0] <= node.span[1] <= hi
    prev_end = node.span[0]
    for child in node.children:
        assert child.span[0] >= prev_end
        _check_spans(child, node.span[0], node.span[1])
        prev_end = child.span[1]


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=80))
def test_totality_and_span_soundness(text):
    line = text.replace("\n", " ")
    tree = parse_line(parser, line)
    assert tree.span == (0, len(line))
    _check_spans(tree, 0, len(line))


@settings(max_examples=200, deadline=None)
@given(
    st.text(
        alphabet="abx01._,+=()[]{}'\" <>:;#/@$",
        max_size=60,
    )
)
def test_totality_on_code_like_soup(text):
    tree = parse_line(parser, text)
    assert tree.span == (0, len(text))
    _check_spans(tree, 0, len(text))


def test_deep_nesting_stays_bounded():
    line = "(" * 500
    tree = parse_line(parser, line)
    assert tree.span == (0, 500)


def test_parse_is_deterministic():
    line = "assert solution.f([1, 2], 'x') == {3: 4}"
    assert parse_line(parser, line) == parse_line(parser, line)


def test_leaves_lex_back(tmp_path):
    """Span soundness: each node's text region contains exactly its leaves."""
    from patmask.parsing import _lex

    line = "    assert solution.run([1, 2.5]) == 'ok'  # done"
    tree = parse_line(parser, line)

    def leaves(node):
        if node.is_leaf:
            yield node
        for child in node.children:
            yield from leaves(child)

    for node in tree.walk():
        node_leaves = [line[a:b] for a, b in (leaf.span for leaf in leaves(node))]
        lexed = [t.text for t in _lex(line[node.span[0] : node.span[1]])]
        assert lexed == node_leaves
