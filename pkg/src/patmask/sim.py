"""Deterministic decoder backend for desk-scale verification.

A trace fixes the target token sequences of one batch plus a confidence
model; every backend output is a pure function of (trace, committed
state, step, seed), so runs are exactly reproducible and accelerated and
non-accelerated runs can be compared byte for byte.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from patmask.backend import BackendError
from patmask.core import BatchState, SchedulerConfig, TokenId
from patmask.lines import OffsetMap, detokenize

PAD_ID: TokenId = 0
EOS_ID: TokenId = 1
PAD_TEXT = ""
EOS_TEXT = ""

CONFIDENCE_MODELS = ("seeded-uniform", "locality-biased", "file-replay")

# Word-level trace tokenization: each token is an atom (identifier,
# number, string, multi-char operator or single punctuation char) carrying
# its leading blanks, and "\n" is always its own token. This partitions
# the text exactly, which keeps offset math trivial.
_ATOM_RE = re.compile(
    r"""[ \t]*(?:
      [A-Za-z_]\w*
    | \d+\.\d+(?:[eE][+-]?\d+)?
    | \d+
    | "[^"\n]*"
    | '[^'\n]*'
    | ==|!=|<=|>=|->|\+=|-=|\*=|/=|\*\*|&&|\|\||<<|>>|::
    | [^\w\s]
    )""",
    re.VERBOSE,
)


def tokenize_target(text: str) -> list[str]:
    """Split a target string into an exact partition of token texts."""
    tokens: list[str] = []
    i = 0
    while i < len(text):
        if text[i] == "\n":
            tokens.append("\n")
            i += 1
            continue
        match = _ATOM_RE.match(text, i)
        if match and match.end() > i:
            tokens.append(match.group())
            i = match.end()
        else:
            tokens.append(text[i])
            i += 1
    return tokens


class TraceError(ValueError):
    """A trace document is malformed."""


@dataclass
class Trace:
    """Target sequences and confidence model for one simulated batch."""

    name: str
    targets: list[str]
    length: int = 128
    language_id: str = "mini"
    confidence_model: str = "seeded-uniform"
    p_correct: float = 1.0
    seed: int = 0
    vocab_texts: list[str] = field(default_factory=list)
    target_ids: list[list[TokenId]] = field(default_factory=list)
    replay_path: str | None = None

    @property
    def size(self) -> int:
        return len(self.targets)

    def vocab(self) -> dict[TokenId, str]:
        return dict(enumerate(self.vocab_texts))

    def scheduler_config(self, **overrides) -> SchedulerConfig:
        base = dict(
            length=self.length,
            pad_id=PAD_ID,
            eos_id=EOS_ID,
            seed=self.seed,
            language_id=self.language_id,
        )
        base.update(overrides)
        return SchedulerConfig(**base)


def build_trace(
    name: str,
    targets: Sequence[str],
    length: int = 128,
    language_id: str = "mini",
    confidence_model: str = "seeded-uniform",
    p_correct: float = 1.0,
    seed: int = 0,
) -> Trace:
    """Build a trace from target strings: tokenize, derive the vocabulary,
    then terminate each target with EOS and pad out to ``length``."""
    if not targets:
        raise TraceError("a trace needs at least one target")
    if confidence_model not in CONFIDENCE_MODELS:
        raise TraceError(f"unknown confidence model {confidence_model!r}")
    if not 0.0 <= p_correct <= 1.0:
        raise TraceError(f"p_correct must be in [0, 1], got {p_correct}")

    token_lists = [tokenize_target(t) for t in targets]
    texts = sorted({text for tokens in token_lists for text in tokens})
    vocab_texts = [PAD_TEXT, EOS_TEXT, *texts]
    ids = {text: i + 2 for i, text in enumerate(texts)}

    target_ids = []
    for target, tokens in zip(targets, token_lists):
        if len(tokens) >= length:
            raise TraceError(
                f"target of {len(tokens)} tokens leaves no room for EOS at length {length}"
            )
        row = [ids[t] for t in tokens]
        row.append(EOS_ID)
        row.extend([PAD_ID] * (length - len(row)))
        target_ids.append(row)

    return Trace(
        name=name,
        targets=list(targets),
        length=length,
        language_id=language_id,
        confidence_model=confidence_model,
        p_correct=p_correct,
        seed=seed,
        vocab_texts=vocab_texts,
        target_ids=target_ids,
    )


def save_trace(trace: Trace, path: str | Path) -> Path:
    path = Path(path)
    doc = {
        "name": trace.name,
        "length": trace.length,
        "language_id": trace.language_id,
        "confidence_model": trace.confidence_model,
        "p_correct": trace.p_correct,
        "seed": trace.seed,
        "targets": trace.targets,
        "vocab": trace.vocab_texts,
        "target_ids": trace.target_ids,
        "pad_id": PAD_ID,
        "eos_id": EOS_ID,
    }
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


def load_trace(path: str | Path) -> Trace:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TraceError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise TraceError(f"cannot read trace {path}: {exc}") from exc

    required = {"name", "targets"}
    missing = required - doc.keys()
    if missing:
        raise TraceError(f"{path}: missing fields {sorted(missing)}")

    if "vocab" in doc and "target_ids" in doc:
        trace = Trace(
            name=doc["name"],
            targets=list(doc["targets"]),
            length=int(doc.get("length", 128)),
            language_id=doc.get("language_id", "mini"),
            confidence_model=doc.get("confidence_model", "seeded-uniform"),
            p_correct=float(doc.get("p_correct", 1.0)),
            seed=int(doc.get("seed", 0)),
            vocab_texts=list(doc["vocab"]),
            target_ids=[list(row) for row in doc["target_ids"]],
            replay_path=doc.get("replay_path"),
        )
        _validate_trace(trace, path)
        return trace

    trace = build_trace(
        name=doc["name"],
        targets=list(doc["targets"]),
        length=int(doc.get("length", 128)),
        language_id=doc.get("language_id", "mini"),
        confidence_model=doc.get("confidence_model", "seeded-uniform"),
        p_correct=float(doc.get("p_correct", 1.0)),
        seed=int(doc.get("seed", 0)),
    )
    trace.replay_path = doc.get("replay_path")
    return trace


def _validate_trace(trace: Trace, path: Path) -> None:
    if trace.confidence_model not in CONFIDENCE_MODELS:
        raise TraceError(f"{path}: unknown confidence model {trace.confidence_model!r}")
    if len(trace.target_ids) != len(trace.targets):
        raise TraceError(f"{path}: targets and target_ids disagree in count")
    vocab_size = len(trace.vocab_texts)
    for row in trace.target_ids:
        if len(row) != trace.length:
            raise TraceError(f"{path}: target_ids rows must have length {trace.length}")
        if any(not 0 <= t < vocab_size for t in row):
            raise TraceError(f"{path}: token id out of vocabulary range")


def _unit(*key) -> float:
    """Deterministic uniform draw in [0, 1) keyed by strings/ints."""
    return random.Random(":".join(str(k) for k in key)).random()


class SimBackend:
    """Replays a trace with a configurable confidence model."""

    simulated = True

    def __init__(self, trace: Trace, seed: int | None = None):
        self.trace = trace
        self.seed = trace.seed if seed is None else seed
        self.pad_id = PAD_ID
        self.eos_id = EOS_ID
        self._vocab = trace.vocab()
        self._replay: dict[tuple[int, int, int], tuple[int, float]] | None = None
        if trace.confidence_model == "file-replay":
            if not trace.replay_path:
                raise BackendError("file-replay trace has no replay_path")
            self._replay = _load_replay(trace.replay_path)

    def vocab_size(self) -> int:
        return len(self.trace.vocab_texts)

    def propose(self, batch: BatchState) -> list[tuple[list[TokenId], list[float]]]:
        view = [
            [slot.token if slot is not None else None for slot in inst.slots]
            for inst in batch.instances
        ]
        return self.propose_view(view, batch.step)

    def propose_view(
        self, view: list[list[TokenId | None]], step: int
    ) -> list[tuple[list[TokenId], list[float]]]:
        """Candidates and confidences for a committed-state view; pure in
        (trace, view, step, seed)."""
        if len(view) != self.trace.size:
            raise BackendError(
                f"trace has {self.trace.size} targets, got {len(view)} instances"
            )
        out = []
        for index, committed in enumerate(view):
            targets = self.trace.target_ids[index]
            if len(committed) != len(targets):
                raise BackendError(
                    f"instance {index}: length {len(committed)} != trace length {len(targets)}"
                )
            candidates: list[TokenId] = []
            confidences: list[float] = []
            for position, slot in enumerate(committed):
                if slot is not None:
                    candidates.append(slot)
                    confidences.append(0.0)
                    continue
                cand, conf = self._predict(index, position, step, committed)
                candidates.append(cand)
                confidences.append(conf)
            out.append((candidates, confidences))
        return out

    def _predict(
        self, index: int, position: int, step: int, committed: list[TokenId | None]
    ) -> tuple[TokenId, float]:
        if self._replay is not None:
            key = (step, index, position)
            if key not in self._replay:
                raise BackendError(f"replay file has no record for step={step} "
                                   f"instance={index} position={position}")
            return self._replay[key]

        target = self.trace.target_ids[index][position]
        candidate = target
        if self.trace.p_correct < 1.0:
            if _unit(self.seed, "flip", step, index, position) >= self.trace.p_correct:
                candidate = self._wrong_token(target, step, index, position)

        confidence = _unit(self.seed, "conf", index, position)
        if self.trace.confidence_model == "locality-biased":
            neighbors = 0
            if position > 0 and committed[position - 1] is not None:
                neighbors += 1
            if position + 1 < len(committed) and committed[position + 1] is not None:
                neighbors += 1
            confidence = min(1.0, confidence + 0.25 * neighbors)
        return candidate, confidence

    def _wrong_token(self, target: TokenId, step: int, index: int, position: int) -> TokenId:
        size = self.vocab_size()
        if size <= 3:
            return target
        rng = random.Random(f"{self.seed}:wrong:{step}:{index}:{position}")
        while True:
            token = rng.randrange(2, size)
            if token != target:
                return token

    def detokenize(self, tokens: Sequence[TokenId]) -> tuple[str, OffsetMap]:
        try:
            return detokenize(list(tokens), self._vocab)
        except KeyError as exc:
            raise BackendError(str(exc)) from exc


def _load_replay(path: str | Path) -> dict[tuple[int, int, int], tuple[int, float]]:
    records: dict[tuple[int, int, int], tuple[int, float]] = {}
    try:
        content = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise BackendError(f"cannot read replay file {path}: {exc}") from exc
    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            key = (int(rec["step"]), int(rec["instance"]), int(rec["position"]))
            value = (int(rec["candidate"]), float(rec["confidence"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"{path}:{lineno}: malformed replay record: {exc}") from exc
        records[key] = value
    return records


def write_replay(
    trace: Trace, steps: list[list[list[TokenId | None]]], path: str | Path
) -> Path:
    """Record the backend's outputs for the given per-step views as a
    line-delimited replay file."""
    backend = SimBackend(trace)
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for step, view in enumerate(steps):
            results = backend.propose_view(view, step)
            for index, (candidates, confidences) in enumerate(results):
                for position, slot in enumerate(view[index]):
                    if slot is not None:
                        continue
                    fh.write(
                        json.dumps(
                            {
                                "step": step,
                                "instance": index,
                                "position": position,
                                "candidate": candidates[position],
                                "confidence": confidences[position],
                            }
                        )
                        + "\n"
                    )
    return path
