"""Tree merging, pattern grouping and token matching.

Two line-level syntax trees merge into their shared structure: nodes
merge when their types agree, neither side is an error, and the type is
not a literal type; children are zipped positionally and empty child
merges are dropped. Lines whose trees merge non-empty form pattern
groups, and groups with two or more member lines license their shared
leaf tokens for early retention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from patmask.lines import LineRecord, OffsetMap
from patmask.parsing import ERROR_TYPE, SyntaxNode


@dataclass(frozen=True)
class MergedNode:
    """A node of a merged tree. ``node_type`` None is the distinguished
    empty node; non-empty nodes carry a type and only non-empty children."""

    node_type: str | None
    children: tuple[MergedNode, ...] = ()

    @property
    def empty(self) -> bool:
        return self.node_type is None

    def leaf_count(self) -> int:
        if not self.children:
            return 0 if self.empty else 1
        return sum(child.leaf_count() for child in self.children)


EMPTY = MergedNode(None)


@dataclass
class PatternGroup:
    """A merged tree plus the member lines it was merged from. Only groups
    with two or more members indicate a repetitive pattern."""

    merged: MergedNode
    members: list[LineRecord] = field(default_factory=list)

    @property
    def repetitive(self) -> bool:
        return len(self.members) > 1


def _gate_open(node_type_a: str, b: SyntaxNode, literal_types: frozenset[str]) -> bool:
    """Shared merge gate: same type, no error on either side, not a literal."""
    return (
        node_type_a == b.node_type
        and node_type_a != ERROR_TYPE
        and not b.is_error
        and node_type_a not in literal_types
    )


def merge_trees(a: SyntaxNode, b: SyntaxNode, literal_types: frozenset[str]) -> MergedNode:
    """Recursively merge two syntax trees into their shared structure."""
    if a.is_error or not _gate_open(a.node_type, b, literal_types):
        return EMPTY
    children = []
    for child_a, child_b in zip(a.children, b.children):
        merged = merge_trees(child_a, child_b, literal_types)
        if not merged.empty:
            children.append(merged)
    return MergedNode(a.node_type, tuple(children))


def _from_ast(node: SyntaxNode) -> MergedNode:
    """A fresh group's node is the line's tree itself; literal and error
    subtrees are carried along and fall out at the first real merge."""
    return MergedNode(node.node_type, tuple(_from_ast(c) for c in node.children))


def merge_step(acc: MergedNode, node: SyntaxNode, literal_types: frozenset[str]) -> MergedNode:
    """Merge a group's accumulated node (left) with a line's tree (right)."""
    if acc.empty or acc.node_type is None:
        return EMPTY
    if not _gate_open(acc.node_type, node, literal_types):
        return EMPTY
    children = []
    for child_acc, child_node in zip(acc.children, node.children):
        merged = merge_step(child_acc, child_node, literal_types)
        if not merged.empty:
            children.append(merged)
    return MergedNode(acc.node_type, tuple(children))


def _is_structural(line: LineRecord, ast: SyntaxNode) -> bool:
    """Blank and comment-only lines carry no structural signal; they stay
    in singleton groups and never license retention."""
    if not line.text.strip():
        return False
    return any(child.node_type != "comment" for child in ast.children)


def group_lines(
    lines: list[LineRecord],
    asts: list[SyntaxNode],
    literal_types: frozenset[str],
) -> list[PatternGroup]:
    """First-fit grouping: each line joins the first group whose current
    merged node merges non-empty with the line's tree, otherwise it starts
    a singleton group. Output is in group creation order."""
    if len(lines) != len(asts):
        raise ValueError("lines and asts must be parallel sequences")
    groups: list[PatternGroup] = []
    joinable: list[bool] = []
    for line, ast in zip(lines, asts):
        if not _is_structural(line, ast):
            groups.append(PatternGroup(merged=_from_ast(ast), members=[line]))
            joinable.append(False)
            continue
        for i, group in enumerate(groups):
            if not joinable[i]:
                continue
            merged = merge_step(group.merged, ast, literal_types)
            # Joining needs shared structure below the root: a childless
            # root merge would absorb unrelated same-kind lines and wash
            # the group's pattern out to nothing.
            if not merged.empty and merged.children:
                group.merged = merged
                group.members.append(line)
                break
        else:
            groups.append(PatternGroup(merged=_from_ast(ast), members=[line]))
            joinable.append(True)
    return groups


def _emit_leaf_spans(
    merged: MergedNode,
    node: SyntaxNode,
    literal_types: frozenset[str],
    out: list[tuple[int, int]],
) -> None:
    """Lockstep descent of the merged tree against one member line's tree,
    emitting the char spans of line leaves the merged structure reaches.

    Children are aligned greedily in order: each merged child pairs with
    the earliest remaining line child it merges non-empty with.
    """
    if node.is_leaf:
        out.append(node.span)
        return
    idx = 0
    for merged_child in merged.children:
        if merged_child.node_type is None:
            continue
        while idx < len(node.children):
            candidate = node.children[idx]
            idx += 1
            if _gate_open(merged_child.node_type, candidate, literal_types):
                _emit_leaf_spans(merged_child, candidate, literal_types, out)
                break


def _licensed_intervals(
    spans: list[tuple[int, int]], line_text: str
) -> list[tuple[int, int]]:
    """Union of emitted spans, each first extended left over the blanks
    that token texts carry as leading whitespace."""
    expanded = []
    for start, end in sorted(spans):
        while start > 0 and line_text[start - 1] in " \t":
            start -= 1
        expanded.append((start, end))
    merged: list[tuple[int, int]] = []
    for start, end in expanded:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def match_token_positions(
    group: PatternGroup,
    line: LineRecord,
    line_ast: SyntaxNode,
    offsets: OffsetMap,
) -> set[int]:
    """Token positions of ``line`` licensed by the group's merged tree.

    A token is licensed when every non-whitespace character of its span
    falls inside a line leaf reached by the merged structure; literal
    leaves are never reached, so their tokens are never licensed.
    """
    if not group.repetitive:
        raise ValueError("only groups with two or more members license tokens")
    if not any(member is line or member == line for member in group.members):
        raise ValueError("line is not a member of this group")

    spans: list[tuple[int, int]] = []
    if _gate_open(group.merged.node_type or "", line_ast, frozenset()):
        _emit_leaf_spans(group.merged, line_ast, frozenset(), out=spans)
    if not spans:
        return set()
    intervals = _licensed_intervals(spans, line.text)

    line_start = line.char_range[0]
    licensed: set[int] = set()
    for position in line.eligible_tokens:
        start, end = offsets[position]
        rel_start, rel_end = start - line_start, end - line_start
        if _covered(rel_start, rel_end, line.text, intervals):
            licensed.add(position)
    return licensed


def _covered(start: int, end: int, line_text: str, intervals: list[tuple[int, int]]) -> bool:
    """True when the token span holds at least one non-whitespace char and
    all its non-whitespace chars lie inside the licensed intervals."""
    if start < 0 or end > len(line_text) or start >= end:
        return False
    saw_content = False
    for i in range(start, end):
        if line_text[i] in " \t":
            continue
        saw_content = True
        if not any(a <= i < b for a, b in intervals):
            return False
    return saw_content
