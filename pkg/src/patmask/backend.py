"""Decoder backend contract shared by the simulator and the wire bridge."""

from __future__ import annotations

from typing import Protocol, Sequence, runtime_checkable

from patmask.core import BatchState, TokenId
from patmask.lines import OffsetMap


class BackendError(Exception):
    """A backend failed to produce candidates or detokenization."""


@runtime_checkable
class DecoderBackend(Protocol):
    """What the decode loop needs from a model.

    ``propose`` returns, per instance, full-length candidate and
    confidence arrays; entries at committed positions are present but
    ignored. ``detokenize`` returns the concatenated text plus per-token
    character spans. ``simulated`` marks backends whose wall time is not
    worth reporting.
    """

    simulated: bool

    def propose(self, batch: BatchState) -> list[tuple[list[TokenId], list[float]]]: ...

    def detokenize(self, tokens: Sequence[TokenId]) -> tuple[str, OffsetMap]: ...
