"""Tests for tree merging, grouping and token matching."""

import random

import pytest

from patmask.lines import detokenize, split_lines
from patmask.parsing import DEFAULT_LITERAL_TYPES, MiniParser, literal_positions
from patmask.patterns import (
    EMPTY,
    MergedNode,
    group_lines,
    match_token_positions,
    merge_step,
    merge_trees,
)
from patmask.sim import tokenize_target
from treegen import (
    LITERALS,
    merged_to_tuple,
    oracle_merge,
    random_error_free_tree,
    random_tree,
    strip_literals,
    to_syntax_node,
)

parser = MiniParser()


def parse(line):
    return parser.parse(line)


def tree_of(line_texts):
    """LineRecords + trees + offsets for one instance built from a word
    vocabulary over the given lines."""
    text = "\n".join(line_texts)
    token_texts = tokenize_target(text)
    vocab = dict(enumerate(token_texts))
    detok, offsets = detokenize(list(range(len(token_texts))), vocab)
    assert detok == text
    records = split_lines(detok, offsets, instance_index=0)
    asts = [parse(r.text) for r in records]
    return records, asts, offsets


# ---------------------------------------------------------------- merge


def test_merge_equal_type_leaves():
    a = to_syntax_node(("identifier", False, ()))
    b = to_syntax_node(("identifier", False, ()))
    merged = merge_trees(a, b, LITERALS)
    assert not merged.empty
    assert merged.node_type == "identifier"


def test_merge_type_mismatch_is_empty():
    a = to_syntax_node(("identifier", False, ()))
    b = to_syntax_node(("integer", False, ()))
    assert merge_trees(a, b, LITERALS).empty


def test_merge_error_node_is_empty():
    a = to_syntax_node(("ERROR", True, ()))
    b = to_syntax_node(("ERROR", True, ()))
    assert merge_trees(a, b, LITERALS).empty
    c = to_syntax_node(("stmt", False, ()))
    assert merge_trees(a, c, LITERALS).empty


def test_merge_literal_excluded_and_mismatch_dropped():
    a = to_syntax_node(
        ("call", False, (("identifier", False, ()),
                         ("args", False, (("integer", False, ()), ("identifier", False, ()))))),
    )
    b = to_syntax_node(
        ("call", False, (("identifier", False, ()),
                         ("args", False, (("integer", False, ()), ("string", False, ()))))),
    )
    merged = merge_trees(a, b, LITERALS)
    assert merged_to_tuple(merged) == ("call", (("identifier", ()), ("args", ())))
    # cross-check with the independent oracle
    assert merged_to_tuple(merged) == oracle_merge(
        ("call", False, (("identifier", False, ()),
                         ("args", False, (("integer", False, ()), ("identifier", False, ()))))),
        ("call", False, (("identifier", False, ()),
                         ("args", False, (("integer", False, ()), ("string", False, ()))))),
    )


def test_merge_oracle_equivalence_sample():
    rng = random.Random(42)
    for _ in range(500):
        ta = random_tree(rng)
        tb = random_tree(rng)
        expected = oracle_merge(ta, tb)
        actual = merged_to_tuple(
            merge_trees(to_syntax_node(ta), to_syntax_node(tb), LITERALS)
        )
        assert actual == expected


def test_merge_conditional_idempotence_sample():
    rng = random.Random(7)
    for _ in range(200):
        tree = random_error_free_tree(rng)
        merged = merged_to_tuple(
            merge_trees(to_syntax_node(tree), to_syntax_node(tree), LITERALS)
        )
        assert merged == strip_literals(tree)


def test_merge_emptiness_symmetry_and_shrinking():
    rng = random.Random(21)
    for _ in range(300):
        ta, tb = random_tree(rng), random_tree(rng)
        na, nb = to_syntax_node(ta), to_syntax_node(tb)
        ab = merge_trees(na, nb, LITERALS)
        ba = merge_trees(nb, na, LITERALS)
        assert ab.empty == ba.empty
        if not ab.empty:
            def leaf_count(node):
                if not node.children:
                    return 1
                return sum(leaf_count(c) for c in node.children)
            assert ab.leaf_count() <= min(leaf_count(na), leaf_count(nb))


# ---------------------------------------------------------------- grouping


def test_group_lines_spec_shape():
    records, asts, _ = tree_of(["assert f(1) == 2", "assert f(3) == 4", "x = []"])
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    assert len(groups) == 2
    assert [len(g.members) for g in groups] == [2, 1]
    assert groups[0].merged.node_type == "assert_stmt"
    assert groups[0].repetitive and not groups[1].repetitive


def test_single_line_is_singleton():
    records, asts, _ = tree_of(["assert f(1) == 2"])
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    assert len(groups) == 1 and not groups[0].repetitive


def test_identical_lines_merge_to_tree_minus_literals():
    records, asts, _ = tree_of(["y = g()", "y = g()"])
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    assert len(groups) == 1
    merged = merged_to_tuple(groups[0].merged)
    # the common tree has no literals, so the merge keeps everything
    expected = (
        "assign_stmt",
        (("identifier", ()), ("=", ()),
         ("call", (("identifier", ()), ("args", (("(", ()), (")", ())))))),
    )
    assert merged == expected


def test_blank_and_comment_lines_stay_singletons():
    records, asts, _ = tree_of(["", "", "# a comment", "# a comment"])
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    assert [len(g.members) for g in groups] == [1, 1, 1, 1]


def test_error_lines_never_join():
    records, asts, _ = tree_of(["assert f(1 ==", "assert f(2 =="])
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    # roots merge (assert keyword survives) but the error subtrees drop
    assert len(groups) == 1
    merged = merged_to_tuple(groups[0].merged)
    assert merged is not None
    assert "ERROR" not in repr(merged)


def test_first_fit_not_best_fit():
    # line2 merges (weakly) with group 1 even though group 2 would be richer
    records, asts, _ = tree_of(
        ["assert f(1) == 2", "assert g[0] == h(2)", "assert g[1] == h(3)"]
    )
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    assert [len(g.members) for g in groups] == [3]


def test_group_accumulator_is_left_operand():
    records, asts, _ = tree_of(["f(1, g())", "f(2)", "f(3, h())"])
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    assert len(groups) == 1
    # the closer sits at child index 4 in "f(1, g())" but index 2 in
    # "f(2)", so the positional zip drops it; the third member cannot
    # resurrect it (left-fold semantics)
    merged = merged_to_tuple(groups[0].merged)
    assert merged == (
        "expr_stmt",
        (("call", (("identifier", ()), ("args", (("(", ()),)))),),
    )


def test_group_soundness():
    rng = random.Random(3)
    lines = [
        "assert solution.f([1, 2], 'a') == 3",
        "assert solution.f([4, 5], 'b') == 6",
        "x = build(1)",
        "x = build(2, extra=3)",
        "return out",
        "}",
        "}",
    ]
    rng.shuffle(lines)
    records, asts, _ = tree_of(lines)
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    by_key = {(r.instance_index, r.line_index): a for r, a in zip(records, asts)}
    for group in groups:
        for member in group.members:
            ast = by_key[(member.instance_index, member.line_index)]
            merged = merge_step(group.merged, ast, DEFAULT_LITERAL_TYPES)
            assert not merged.empty


# ---------------------------------------------------------------- matching


def licensed_texts(line_texts, member_index):
    records, asts, offsets = tree_of(line_texts)
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    group = next(g for g in groups if records[member_index] in g.members)
    positions = match_token_positions(
        group, records[member_index], asts[member_index], offsets
    )
    text = "\n".join(line_texts)
    return {text[offsets[p][0] : offsets[p][1]].strip() for p in positions}


def test_match_spec_example():
    texts = licensed_texts(["assert f(1) == 2", "assert f(3) == 4"], 0)
    assert texts == {"assert", "f", "(", ")", "=="}


def test_match_requires_repetitive_group():
    records, asts, offsets = tree_of(["assert f(1) == 2"])
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    with pytest.raises(ValueError):
        match_token_positions(groups[0], records[0], asts[0], offsets)


def test_match_rejects_foreign_line():
    records, asts, offsets = tree_of(["f(1)", "f(2)", "x = 1"])
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    with pytest.raises(ValueError):
        match_token_positions(groups[0], records[2], asts[2], offsets)


def test_match_empty_merged_children_licenses_nothing():
    group_records, asts, offsets = tree_of(["f(1)", "g(2)"])
    groups = group_lines(group_records, asts, DEFAULT_LITERAL_TYPES)
    if groups and groups[0].repetitive:
        # call/call with mismatching callees keeps the call node but the
        # merged args lose everything except the parens
        positions = match_token_positions(groups[0], group_records[0], asts[0], offsets)
        text = "f(1)\ng(2)"
        licensed = {text[offsets[p][0] : offsets[p][1]] for p in positions}
        assert "1" not in licensed


def test_match_never_returns_literal_positions():
    lines = [
        "assert solution.run([1, 2], 3.5) == [4, 5]",
        "assert solution.run([6, 7], 8.5) == [9, 10]",
    ]
    records, asts, offsets = tree_of(lines)
    groups = group_lines(records, asts, DEFAULT_LITERAL_TYPES)
    text = "\n".join(lines)
    for group in groups:
        if not group.repetitive:
            continue
        for member, ast in ((records[0], asts[0]), (records[1], asts[1])):
            positions = match_token_positions(group, member, ast, offsets)
            lits = literal_positions(ast, DEFAULT_LITERAL_TYPES)
            line_start = member.char_range[0]
            for p in positions:
                tok = (offsets[p][0] - line_start, offsets[p][1] - line_start)
                for lit in lits:
                    assert tok[1] <= lit[0] or tok[0] >= lit[1], (
                        f"licensed token {text[offsets[p][0]:offsets[p][1]]!r} "
                        f"overlaps literal span {lit}"
                    )


def test_match_excludes_token_straddling_leaf_boundary():
    # token "f(1" covers the callee, the paren and a literal char: the
    # literal char is not licensed, so the token must be excluded
    vocab = {0: "assert ", 1: "f(1", 2: ") == 2"}
    from patmask.lines import detokenize as dt

    text, offsets = dt([0, 1, 2], vocab)
    assert text == "assert f(1) == 2"
    records = split_lines(text, offsets, 0)
    ast = parse(records[0].text)
    other = parse("assert f(3) == 4")
    other_rec_text = "assert f(3) == 4"
    records2, asts2, _ = tree_of([text, other_rec_text])
    groups = group_lines(
        [records[0], records2[1]], [ast, asts2[1]], DEFAULT_LITERAL_TYPES
    )
    assert groups[0].repetitive
    positions = match_token_positions(groups[0], records[0], ast, offsets)
    assert 1 not in positions  # "f(1" straddles into the literal
    assert 0 in positions      # "assert " is fully licensed


def test_match_tolerates_leading_whitespace_tokens():
    texts = licensed_texts(
        ["    assert check(1) == 2", "    assert check(3) == 4"], 1
    )
    assert "assert" in texts and "check" in texts and "==" in texts
