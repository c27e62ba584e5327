"""Detokenization and line splitting with token<->character maps.

The full candidate text of an instance (committed tokens where available,
candidates elsewhere) is a pure concatenation of per-token texts, so the
per-token character spans are exact. Lines are delimited by "\\n" only;
"\\r" is ordinary text.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Mapping

from patmask.core import InstanceState, TokenId

# Per-token half-open (start_char, end_char) spans; in position order,
# non-overlapping, concatenating to the full text.
OffsetMap = list[tuple[int, int]]


class VocabularyError(KeyError):
    """A token id has no text in the vocabulary."""


@dataclass(frozen=True)
class LineRecord:
    """One physical line of an instance's candidate text.

    ``token_range`` holds every token position whose span touches this
    line (a trailing newline token counts as touching the line it ends).
    ``unmatchable`` is the subset that pattern matching must never
    license: tokens containing a newline, zero-width tokens, and tokens
    with no non-whitespace text.
    """

    instance_index: int
    line_index: int
    text: str
    char_range: tuple[int, int]
    token_range: frozenset[int]
    unmatchable: frozenset[int]

    @property
    def eligible_tokens(self) -> frozenset[int]:
        return self.token_range - self.unmatchable


def candidate_text(
    instance: InstanceState, vocab: Mapping[TokenId, str]
) -> tuple[str, OffsetMap]:
    """Detokenize the instance's composed token sequence.

    Committed slots contribute their committed token's text, masked slots
    the current candidate's. Raises VocabularyError on unknown ids.
    """
    return detokenize(instance.composed_tokens(), vocab)


def detokenize(tokens: list[TokenId], vocab: Mapping[TokenId, str]) -> tuple[str, OffsetMap]:
    parts: list[str] = []
    offsets: OffsetMap = []
    cursor = 0
    for token in tokens:
        try:
            text = vocab[token]
        except KeyError:
            raise VocabularyError(f"token id {token} not in vocabulary") from None
        parts.append(text)
        offsets.append((cursor, cursor + len(text)))
        cursor += len(text)
    return "".join(parts), offsets


def split_lines(text: str, offsets: OffsetMap, instance_index: int) -> list[LineRecord]:
    """Split detokenized text into LineRecords with token assignments.

    Every token lands in at least one line: a token is assigned to each
    line whose extended range (text plus its terminating newline) its span
    intersects, and zero-width tokens go to the line containing their
    position. Tokens whose text contains a newline are recorded in every
    line they touch but flagged unmatchable.
    """
    raw_lines = text.split("\n")
    # char_range per line (excluding the newline) and extended end
    starts: list[int] = []
    ranges: list[tuple[int, int]] = []
    cursor = 0
    for raw in raw_lines:
        starts.append(cursor)
        ranges.append((cursor, cursor + len(raw)))
        cursor += len(raw) + 1

    n_lines = len(raw_lines)
    token_sets: list[set[int]] = [set() for _ in range(n_lines)]
    unmatchable_sets: list[set[int]] = [set() for _ in range(n_lines)]

    def line_of(char_pos: int) -> int:
        return min(bisect_right(starts, char_pos) - 1, n_lines - 1)

    for position, (start, end) in enumerate(offsets):
        token_text = text[start:end]
        bad = start == end or "\n" in token_text or not token_text.strip()
        if start == end:
            lines_hit = [line_of(start)]
        else:
            lines_hit = list(range(line_of(start), line_of(end - 1) + 1))
        for li in lines_hit:
            token_sets[li].add(position)
            if bad:
                unmatchable_sets[li].add(position)

    return [
        LineRecord(
            instance_index=instance_index,
            line_index=i,
            text=raw_lines[i],
            char_range=ranges[i],
            token_range=frozenset(token_sets[i]),
            unmatchable=frozenset(unmatchable_sets[i]),
        )
        for i in range(n_lines)
    ]
