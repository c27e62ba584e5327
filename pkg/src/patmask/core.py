"""Core data model for the decode loop.

Token slots, per-instance candidate/confidence buffers, batch state and
the scheduler configuration. All types are value-like records; the only
code that mutates them is the scheduler's step function, so they are
safe to read from multiple threads between steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

TokenId = int


class ConfigError(ValueError):
    """A scheduler configuration violates its invariants."""


@dataclass(frozen=True)
class Committed:
    """A slot that has been decoded; it never reverts to masked."""

    token: TokenId
    committed_at_step: int


# A slot is either masked (None) or committed.
Slot = Committed | None


@dataclass
class InstanceState:
    """One in-progress sequence: L slots plus the latest per-position
    candidates and confidences.

    ``candidates``/``confidences`` are refreshed in full by the backend at
    every step and are meaningless at committed positions; consumers must
    only read them at masked positions.
    """

    slots: list[Slot]
    candidates: list[TokenId]
    confidences: list[float]

    @classmethod
    def fresh(cls, length: int) -> InstanceState:
        return cls(
            slots=[None] * length,
            candidates=[0] * length,
            confidences=[0.0] * length,
        )

    @property
    def length(self) -> int:
        return len(self.slots)

    def masked_positions(self) -> list[int]:
        return [i for i, slot in enumerate(self.slots) if slot is None]

    def is_complete(self) -> bool:
        return all(slot is not None for slot in self.slots)

    def commit(self, position: int, token: TokenId, step: int) -> None:
        """Commit ``token`` at ``position``. Committed slots never revert,
        so recommitting is a bug in the caller."""
        if self.slots[position] is not None:
            raise ValueError(f"position {position} is already committed")
        self.slots[position] = Committed(token, step)

    def composed_tokens(self) -> list[TokenId]:
        """Committed token where available, current candidate elsewhere.

        This is the token sequence whose detokenization is mined for
        patterns: an intermediate response with every mask filled by its
        latest prediction.
        """
        return [
            slot.token if slot is not None else cand
            for slot, cand in zip(self.slots, self.candidates)
        ]

    def committed_tokens(self) -> list[TokenId]:
        """Tokens of committed slots, in position order (masked skipped)."""
        return [slot.token for slot in self.slots if slot is not None]


def committed_text_view(instance: InstanceState) -> list[tuple[int, Slot]]:
    """Read-only enumeration of (position, slot) in position order."""
    return list(enumerate(instance.slots))


@dataclass
class BatchState:
    """A batch of n instances decoded in lockstep for one prompt."""

    instances: list[InstanceState]
    prompt: tuple[TokenId, ...]
    step: int = 0

    @property
    def size(self) -> int:
        return len(self.instances)

    @property
    def length(self) -> int:
        return self.instances[0].length

    def is_complete(self) -> bool:
        return all(inst.is_complete() for inst in self.instances)

    def masked_total(self) -> int:
        return sum(len(inst.masked_positions()) for inst in self.instances)


@dataclass(frozen=True)
class SchedulerConfig:
    """Knobs for one decode run.

    ``retain_per_step`` is the baseline per-step retention count;
    ``threshold`` gates pattern-licensed retention; ``accel_interval``
    is how many steps apart the pattern pass runs. ``literal_types``
    empty means "use the parser backend's default set".
    """

    length: int = 128
    max_steps: int = 64
    retain_per_step: int = 2
    threshold: float = 0.02
    accel_interval: int = 2
    literal_types: frozenset[str] = frozenset()
    pad_id: TokenId = 0
    eos_id: TokenId = 1
    seed: int = 0
    flops_per_forward: float = 1.0
    accelerate: bool = True
    pad_fastforward: bool = True
    language_id: str = "mini"

    def validate(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.retain_per_step < 1:
            raise ConfigError(f"retain_per_step must be >= 1, got {self.retain_per_step}")
        if self.length < 0:
            raise ConfigError(f"length must be >= 0, got {self.length}")
        if self.max_steps < 0:
            raise ConfigError(f"max_steps must be >= 0, got {self.max_steps}")
        if self.accel_interval < 1:
            raise ConfigError(f"accel_interval must be >= 1, got {self.accel_interval}")
        if self.pad_id < 0 or self.eos_id < 0:
            raise ConfigError("special token ids must be non-negative")

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, frozenset):
                value = sorted(value)
            out[f.name] = value
        return out


def new_batch(prompt: list[TokenId] | tuple[TokenId, ...], n: int, config: SchedulerConfig) -> BatchState:
    """Create a fresh batch: n instances, every slot masked, step 0."""
    config.validate()
    if n < 1:
        raise ConfigError(f"batch size must be >= 1, got {n}")
    instances = [InstanceState.fresh(config.length) for _ in range(n)]
    return BatchState(instances=instances, prompt=tuple(prompt), step=0)
