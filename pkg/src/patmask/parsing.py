"""Error-tolerant parsing of single code lines into typed syntax trees.

Every input string parses; malformed regions are wrapped in nodes with
the reserved type label ``"ERROR"`` instead of failing. The built-in
mini-grammar covers the statement shapes that unit-test code is made of
(assignments, calls, attribute access, subscripts, list/tuple/brace
displays, operators, assert/return/def-style headers, literals and
comments) for Python-, Java- and C++-flavoured lines alike. Full-language
grammars can be plugged in through the ``ParserBackend`` contract.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol, runtime_checkable

ERROR_TYPE = "ERROR"

# Words that parse as keyword leaves typed by their own text, so that a
# keyword only ever merges with the same keyword. Type-like words (int,
# float, ...) are left as identifiers: their text would collide with the
# literal type labels.
KEYWORDS = frozenset(
    {
        "assert", "return", "def", "class", "import", "from", "raise",
        "pass", "lambda", "with", "as", "if", "elif", "else", "for",
        "while", "in", "not", "and", "or", "is", "del", "global", "yield",
        "try", "except", "finally",
        "new", "public", "private", "protected", "static", "final", "void",
    }
)

DEFAULT_LITERAL_TYPES = frozenset({"integer", "float"})

# Bracketed constructs nested deeper than this parse as flat ERROR leaves;
# keeps parse/merge/match recursion bounded on adversarial input.
_MAX_DEPTH = 80


@dataclass(frozen=True)
class SyntaxNode:
    """One node of a line-level syntax tree.

    ``span`` is a half-open character range relative to the line. Children
    are ordered, non-overlapping and contained in the parent span; leaves
    have no children. ``is_error`` marks unparseable regions and always
    comes with the reserved ``ERROR`` type label.
    """

    node_type: str
    span: tuple[int, int]
    children: tuple[SyntaxNode, ...] = ()
    is_error: bool = False

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def has_errors(self) -> bool:
        return any(node.is_error for node in self.walk())


@runtime_checkable
class ParserBackend(Protocol):
    """Contract for pluggable line parsers.

    ``parse`` must be total and deterministic: every input yields a tree
    whose root spans the whole line, with ``ERROR``-typed nodes covering
    unparseable regions.
    """

    language_id: str

    def parse(self, line_text: str) -> SyntaxNode: ...

    def literal_types(self) -> frozenset[str]: ...


_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t]+)
    | (?P<comment>\#[^\n]*|//[^\n]*)
    | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\.\d+)
    | (?P<integer>\d+)
    | (?P<name>[A-Za-z_]\w*)
    | (?P<string>"(?:\\.|[^"\\])*"|'(?:\\.|[^'\\])*')
    | (?P<unterminated>"(?:\\.|[^"\\])*|'(?:\\.|[^'\\])*)
    | (?P<op>==|!=|<=|>=|->|=>|\+=|-=|\*=|/=|%=|\*\*|&&|\|\||<<|>>|::|\+\+|--|[-+*/%<>=!&|^~?.,:;@()\[\]{}])
    | (?P<bad>.)
    """,
    re.VERBOSE,
)

_OPENERS = {"(": ")", "[": "]", "{": "}"}

_ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%="})


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    start: int
    end: int


def _lex(text: str) -> list[_Token]:
    tokens = []
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup or "bad"
        if kind == "ws":
            continue
        tokens.append(_Token(kind, match.group(), match.start(), match.end()))
    return tokens


class _LineParser:
    """Single-use recursive-descent parser over one lexed line."""

    def __init__(self, text: str, tokens: list[_Token]):
        self.text = text
        self.tokens = tokens
        self.pos = 0

    def _peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> SyntaxNode:
        items = self._parse_items(stop=frozenset(), depth=0)
        return SyntaxNode(self._stmt_kind(items), (0, len(self.text)), tuple(items))

    @staticmethod
    def _stmt_kind(items: list[SyntaxNode]) -> str:
        """Root type carries the statement kind, so that structurally
        unrelated lines (assert vs assignment vs header) never merge."""
        if not items:
            return "stmt"
        first = items[0].node_type
        if first in KEYWORDS:
            return f"{first}_stmt"
        if any(item.node_type in _ASSIGN_OPS for item in items):
            return "assign_stmt"
        return "expr_stmt"

    def _parse_items(self, stop: frozenset[str], depth: int) -> list[SyntaxNode]:
        items = []
        while (tok := self._peek()) is not None:
            if tok.kind == "op" and tok.text in stop:
                break
            items.append(self._parse_item(depth))
        return items

    def _parse_item(self, depth: int) -> SyntaxNode:
        tok = self._peek()
        assert tok is not None
        if tok.kind in ("integer", "float", "string") or (
            tok.kind == "name" and tok.text not in KEYWORDS
        ):
            return self._parse_expr(depth)
        if tok.kind == "op" and tok.text in _OPENERS:
            return self._parse_expr(depth)
        self._advance()
        span = (tok.start, tok.end)
        if tok.kind in ("bad", "unterminated"):
            return SyntaxNode(ERROR_TYPE, span, is_error=True)
        if tok.kind == "comment":
            return SyntaxNode("comment", span)
        # keyword, operator or stray punctuation: a leaf typed by its text
        return SyntaxNode(tok.text, span)

    def _parse_expr(self, depth: int) -> SyntaxNode:
        node = self._parse_primary(depth)
        while (tok := self._peek()) is not None:
            if tok.kind != "op":
                break
            if tok.text == "(":
                args = self._parse_bracket("args", depth + 1)
                node = SyntaxNode("call", (node.span[0], args.span[1]), (node, args))
            elif tok.text == "[":
                index = self._parse_bracket("index", depth + 1)
                node = SyntaxNode("subscript", (node.span[0], index.span[1]), (node, index))
            elif tok.text == ".":
                nxt = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else None
                if nxt is None or nxt.kind != "name":
                    break
                dot = self._advance()
                name = self._advance()
                children = (
                    node,
                    SyntaxNode(".", (dot.start, dot.end)),
                    SyntaxNode("identifier", (name.start, name.end)),
                )
                node = SyntaxNode("attribute", (node.span[0], name.end), children)
            else:
                break
        return node

    def _parse_primary(self, depth: int) -> SyntaxNode:
        tok = self._advance()
        span = (tok.start, tok.end)
        if tok.kind == "name":
            return SyntaxNode("identifier", span)
        if tok.kind in ("integer", "float", "string"):
            return SyntaxNode(tok.kind, span)
        # opener
        self.pos -= 1
        return self._parse_bracket(None, depth + 1)

    def _parse_bracket(self, node_type: str | None, depth: int) -> SyntaxNode:
        """Parse an opener..closer construct. ``node_type`` None means a
        display whose type is decided by the opener and contents."""
        open_tok = self._advance()
        closer = _OPENERS[open_tok.text]
        if depth > _MAX_DEPTH:
            return SyntaxNode(ERROR_TYPE, (open_tok.start, open_tok.end), is_error=True)
        children = [SyntaxNode(open_tok.text, (open_tok.start, open_tok.end))]
        children.extend(self._parse_items(stop=frozenset({closer}), depth=depth))
        tok = self._peek()
        if tok is None:
            if len(children) == 1:
                # a bare opener ending the line opens a multi-line construct
                # (Java/C++ block headers); not an error at line granularity
                return children[0]
            # truncated construct with content: the whole region is suspect
            return SyntaxNode(
                ERROR_TYPE, (open_tok.start, len(self.text)), tuple(children), is_error=True
            )
        close_tok = self._advance()
        children.append(SyntaxNode(close_tok.text, (close_tok.start, close_tok.end)))
        if node_type is None:
            node_type = self._display_type(open_tok.text, children)
        return SyntaxNode(node_type, (open_tok.start, close_tok.end), tuple(children))

    @staticmethod
    def _display_type(opener: str, children: list[SyntaxNode]) -> str:
        if opener == "[":
            return "list"
        if opener == "{":
            return "braces"
        has_comma = any(child.node_type == "," for child in children)
        return "tuple" if has_comma else "group"


@lru_cache(maxsize=8192)
def _parse_cached(text: str) -> SyntaxNode:
    return _LineParser(text, _lex(text)).parse()


class MiniParser:
    """Built-in error-tolerant parser for unit-test-style code lines."""

    language_id = "mini"

    def parse(self, line_text: str) -> SyntaxNode:
        return _parse_cached(line_text)

    def literal_types(self) -> frozenset[str]:
        return DEFAULT_LITERAL_TYPES


_BACKENDS: dict[str, ParserBackend] = {}


def register_backend(backend: ParserBackend) -> None:
    _BACKENDS[backend.language_id] = backend


def get_backend(language_id: str) -> ParserBackend:
    try:
        return _BACKENDS[language_id]
    except KeyError:
        known = ", ".join(sorted(_BACKENDS))
        raise KeyError(f"no parser backend {language_id!r} (known: {known})") from None


register_backend(MiniParser())


def parse_line(backend: ParserBackend, text: str) -> SyntaxNode:
    """Parse one physical line. Total: syntax errors come back as
    ``ERROR`` nodes, never exceptions."""
    if "\n" in text:
        raise ValueError("parse_line takes a single line without newlines")
    return backend.parse(text)


def literal_positions(node: SyntaxNode, literal_types: frozenset[str]) -> set[tuple[int, int]]:
    """Character spans of all maximal subtrees whose type is a literal type."""
    spans: set[tuple[int, int]] = set()

    def visit(n: SyntaxNode) -> None:
        if n.node_type in literal_types:
            spans.add(n.span)
            return
        for child in n.children:
            visit(child)

    visit(node)
    return spans
