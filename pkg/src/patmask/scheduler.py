"""The decode loop: baseline confidence remasking, intermittent
pattern-licensed extra retention, and pad fast-forward.

Each step queries the backend once, keeps the top-k masked positions per
instance by confidence, and on every accel_interval-th step additionally
keeps masked positions licensed by repetitive line patterns whose
confidence exceeds the threshold. Everything else stays masked. Once a
pad token commits, every later position commits as pad in the same step.
"""

from __future__ import annotations

import time

from patmask.backend import BackendError, DecoderBackend
from patmask.core import BatchState, InstanceState, SchedulerConfig, TokenId
from patmask.lines import LineRecord, OffsetMap, split_lines
from patmask.parsing import SyntaxNode, get_backend, parse_line
from patmask.patterns import PatternGroup, group_lines, match_token_positions
from patmask.report import RunReport, StepReport


class StepError(Exception):
    """A decode step failed; batch state is unchanged. ``partial`` carries
    the report of the steps completed before the failure, when raised
    from ``run``."""

    def __init__(self, message: str, partial: RunReport | None = None):
        super().__init__(message)
        self.partial = partial


class PatternContext:
    """Per-step pattern-mining context: pooled line records, their trees,
    the groups, and per-instance offset maps."""

    def __init__(
        self,
        groups: list[PatternGroup],
        line_asts: dict[tuple[int, int], SyntaxNode],
        offsets: list[OffsetMap],
    ):
        self.groups = groups
        self.line_asts = line_asts
        self.offsets = offsets


def baseline_remask(instance: InstanceState, k: int) -> set[int]:
    """The k masked positions with highest confidence (fewer if fewer
    remain); ties break toward the lower position index."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    masked = instance.masked_positions()
    masked.sort(key=lambda p: (-instance.confidences[p], p))
    return set(masked[:k])


def mine_patterns(
    batch: BatchState,
    composed: list[list[TokenId]],
    backend: DecoderBackend,
    config: SchedulerConfig,
) -> PatternContext:
    """Detokenize every instance's composed tokens, split into lines,
    parse each line, and group the pooled lines by mergeability."""
    parser = get_backend(config.language_id)
    literal_types = config.literal_types or parser.literal_types()

    all_lines: list[LineRecord] = []
    all_asts: list[SyntaxNode] = []
    line_asts: dict[tuple[int, int], SyntaxNode] = {}
    offsets: list[OffsetMap] = []
    for index, tokens in enumerate(composed):
        text, offset_map = backend.detokenize(tokens)
        offsets.append(offset_map)
        for record in split_lines(text, offset_map, index):
            ast = parse_line(parser, record.text)
            all_lines.append(record)
            all_asts.append(ast)
            line_asts[(index, record.line_index)] = ast

    groups = group_lines(all_lines, all_asts, literal_types)
    return PatternContext(groups, line_asts, offsets)


def pattern_retain(
    batch: BatchState,
    context: PatternContext,
    config: SchedulerConfig,
    exclude: list[set[int]] | None = None,
) -> list[set[int]]:
    """Extra positions licensed by repetitive groups: currently masked,
    confidence above the threshold, and not already chosen this step."""
    extra: list[set[int]] = [set() for _ in batch.instances]
    for group in context.groups:
        if not group.repetitive:
            continue
        for line in group.members:
            inst = batch.instances[line.instance_index]
            ast = context.line_asts[(line.instance_index, line.line_index)]
            positions = match_token_positions(
                group, line, ast, context.offsets[line.instance_index]
            )
            for position in positions:
                if inst.slots[position] is not None:
                    continue
                if inst.confidences[position] <= config.threshold:
                    continue
                extra[line.instance_index].add(position)
    if exclude is not None:
        for chosen, out in zip(exclude, extra):
            out -= chosen
    return extra


def pad_fastforward(instance: InstanceState, pad_id: TokenId) -> set[int]:
    """Positions after the first committed pad that are still masked; they
    are committed as pad in the same step the first pad lands."""
    first_pad = None
    for position, slot in enumerate(instance.slots):
        if slot is not None and slot.token == pad_id:
            first_pad = position
            break
    if first_pad is None:
        return set()
    return {
        position
        for position in range(first_pad + 1, instance.length)
        if instance.slots[position] is None
    }


def decode_step(batch: BatchState, backend: DecoderBackend, config: SchedulerConfig) -> StepReport:
    """Advance the batch by one step. On backend failure the batch is
    left untouched."""
    if batch.is_complete() or batch.step >= config.max_steps:
        raise ValueError("batch already terminated")

    try:
        proposals = backend.propose(batch)
    except BackendError as exc:
        raise StepError(f"backend failed at step {batch.step}: {exc}") from exc
    if len(proposals) != batch.size:
        raise StepError(f"backend returned {len(proposals)} proposals for {batch.size} instances")

    accelerating = config.accelerate and batch.step % config.accel_interval == 0
    context = None
    if accelerating:
        composed = [
            [
                slot.token if slot is not None else candidates[p]
                for p, slot in enumerate(inst.slots)
            ]
            for inst, (candidates, _) in zip(batch.instances, proposals)
        ]
        try:
            context = mine_patterns(batch, composed, backend, config)
        except BackendError as exc:
            raise StepError(f"detokenization failed at step {batch.step}: {exc}") from exc

    # All fallible work is done; from here on we mutate.
    for inst, (candidates, confidences) in zip(batch.instances, proposals):
        inst.candidates = list(candidates)
        inst.confidences = list(confidences)

    baseline = [baseline_remask(inst, config.retain_per_step) for inst in batch.instances]
    if context is not None:
        pattern = pattern_retain(batch, context, config, exclude=baseline)
    else:
        pattern = [set() for _ in batch.instances]

    pads = []
    for inst, base, extra in zip(batch.instances, baseline, pattern):
        for position in sorted(base | extra):
            inst.commit(position, inst.candidates[position], batch.step)
        if config.pad_fastforward:
            forwarded = pad_fastforward(inst, config.pad_id)
            for position in sorted(forwarded):
                inst.commit(position, config.pad_id, batch.step)
        else:
            forwarded = set()
        pads.append(forwarded)

    report = StepReport(
        step=batch.step,
        baseline_retained=[len(b) for b in baseline],
        pattern_retained=[len(p) for p in pattern],
        pad_fastforwarded=[len(f) for f in pads],
        masked_remaining=[len(inst.masked_positions()) for inst in batch.instances],
    )
    batch.step += 1
    return report


def run(
    batch: BatchState,
    backend: DecoderBackend,
    config: SchedulerConfig,
    trace_name: str | None = None,
) -> RunReport:
    """Loop decode_step until every instance completes or the step budget
    runs out. Backend failures surface as StepError with the partial
    report attached."""
    config.validate()
    per_step: list[StepReport] = []
    started = time.perf_counter()
    while not batch.is_complete() and batch.step < config.max_steps:
        try:
            per_step.append(decode_step(batch, backend, config))
        except StepError as exc:
            exc.partial = _build_report(batch, backend, config, per_step, started, trace_name)
            raise
    return _build_report(batch, backend, config, per_step, started, trace_name)


def _build_report(
    batch: BatchState,
    backend: DecoderBackend,
    config: SchedulerConfig,
    per_step: list[StepReport],
    started: float,
    trace_name: str | None,
) -> RunReport:
    wall = None if getattr(backend, "simulated", False) else time.perf_counter() - started
    specials = {config.pad_id, config.eos_id}
    tokens_generated = sum(
        1
        for inst in batch.instances
        for slot in inst.slots
        if slot is not None and slot.token not in specials
    )
    parser = get_backend(config.language_id)
    final_texts = []
    syntax_valid = []
    completed = []
    for inst in batch.instances:
        done = inst.is_complete()
        completed.append(done)
        text, _ = backend.detokenize(inst.committed_tokens())
        final_texts.append(text)
        syntax_valid.append(done and _text_is_valid(text, parser))
    return RunReport(
        steps_used=batch.step,
        per_step=per_step,
        wall_time=wall,
        tokens_generated=tokens_generated,
        flops_estimate=batch.step * config.flops_per_forward,
        final_texts=final_texts,
        syntax_valid=syntax_valid,
        completed=completed,
        config=config.as_dict(),
        trace_name=trace_name,
    )


def _text_is_valid(text: str, parser) -> bool:
    return all(not parse_line(parser, line).has_errors() for line in text.split("\n"))
