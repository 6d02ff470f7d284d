"""Probing-baseline perturbations: mask the target, keep only the target,
mask everything, or substitute a guessed target word."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .ingest import Diagnostic, ParseError, instance_from_obj, instance_to_obj, token_spans
from .types import Instance, Segment, ValidationError, VariantKind


@dataclass(frozen=True)
class MaskConfig:
    """Mask token and span markers, plus the two configurable masking styles."""

    mask_token: str = "[MASK]"
    marker_open: str = "["
    marker_close: str = "]"
    # One mask for the whole target span (default) or one per span token.
    context_mask_per_token: bool = False
    # Mask each whitespace token (default) or collapse the text to one mask.
    label_single_mask: bool = False

    def validate(self) -> None:
        if not self.mask_token:
            raise ValidationError("mask token must be non-empty")
        if self.mask_token in (self.marker_open, self.marker_close):
            raise ValidationError("markers must differ from the mask token")


@dataclass(frozen=True)
class PerturbedInstance:
    """An instance after one perturbation; id, gold and candidates are preserved."""

    instance: Instance
    variant: VariantKind
    provenance: str

    @property
    def source_id(self) -> str:
        return self.instance.id

    @property
    def segments(self) -> tuple[Segment, ...]:
        return self.instance.segments


def _replace_span(seg: Segment, replacement: str) -> Segment:
    text = seg.text[:seg.start] + replacement + seg.text[seg.end:]
    return Segment(text, seg.start, seg.start + len(replacement), replacement)


def make_context_variant(instance: Instance, cfg: MaskConfig = MaskConfig()) -> PerturbedInstance:
    """Replace each target span with the mask token; all other text is untouched."""
    cfg.validate()
    if cfg.context_mask_per_token:
        segments = []
        for seg in instance.segments:
            n_tokens = max(1, len(token_spans(seg.surface)))
            segments.append(_replace_span(seg, " ".join([cfg.mask_token] * n_tokens)))
        segments = tuple(segments)
    else:
        segments = tuple(_replace_span(seg, cfg.mask_token) for seg in instance.segments)
    return PerturbedInstance(
        instance=replace(instance, segments=segments),
        variant=VariantKind.CONTEXT,
        provenance=f"target span replaced with {cfg.mask_token!r}",
    )


def make_word_variant(instance: Instance) -> PerturbedInstance:
    """Reduce each segment to its target surface form, inflection preserved."""
    segments = tuple(
        Segment(seg.surface, 0, len(seg.surface), seg.surface) for seg in instance.segments
    )
    return PerturbedInstance(
        instance=replace(instance, segments=segments),
        variant=VariantKind.WORD,
        provenance="segments reduced to the target surface",
    )


def _mask_all_tokens(seg: Segment, cfg: MaskConfig) -> Segment:
    spans = token_spans(seg.text)
    if not spans:
        return Segment(cfg.mask_token, 0, len(cfg.mask_token), cfg.mask_token)
    # Tokens overlapping the target span carry the new span.
    overlapping = [i for i, (s, e) in enumerate(spans) if s < seg.end and e > seg.start]
    first = overlapping[0] if overlapping else 0
    last = overlapping[-1] if overlapping else len(spans) - 1
    parts: list[str] = []
    cursor = 0
    new_start = new_end = 0
    pos = 0
    for i, (s, e) in enumerate(spans):
        parts.append(seg.text[cursor:s])
        pos += len(seg.text[cursor:s])
        if i == first:
            new_start = pos
        parts.append(cfg.mask_token)
        pos += len(cfg.mask_token)
        if i == last:
            new_end = pos
        cursor = e
    parts.append(seg.text[cursor:])
    text = "".join(parts)
    return Segment(text, new_start, new_end, text[new_start:new_end])


def make_label_variant(instance: Instance, cfg: MaskConfig = MaskConfig()) -> PerturbedInstance:
    """Mask the entire input: every whitespace token becomes the mask token
    (or the whole text collapses to a single mask with ``label_single_mask``)."""
    cfg.validate()
    if cfg.label_single_mask:
        segments = tuple(
            Segment(cfg.mask_token, 0, len(cfg.mask_token), cfg.mask_token)
            for _ in instance.segments
        )
    else:
        segments = tuple(_mask_all_tokens(seg, cfg) for seg in instance.segments)
    return PerturbedInstance(
        instance=replace(instance, segments=segments),
        variant=VariantKind.LABEL,
        provenance=f"all tokens replaced with {cfg.mask_token!r}",
    )


def substitute_target(instance: Instance, replacements: Sequence[str]) -> PerturbedInstance:
    """Swap each target span for a replacement surface (one per segment)."""
    if len(replacements) != len(instance.segments):
        raise ValidationError(
            f"need {len(instance.segments)} replacement(s), got {len(replacements)}"
        )
    for r in replacements:
        if not r:
            raise ValidationError("replacements must be non-empty strings")
    segments = tuple(
        _replace_span(seg, r) for seg, r in zip(instance.segments, replacements)
    )
    return PerturbedInstance(
        instance=replace(instance, segments=segments),
        variant=VariantKind.GUESSED_WORD,
        provenance=f"target replaced with {list(replacements)!r}",
    )


def mark_targets(instance: Instance, cfg: MaskConfig = MaskConfig()) -> list[str]:
    """Render each segment with the target span wrapped in markers."""
    cfg.validate()
    return [
        seg.text[:seg.start] + cfg.marker_open + seg.surface + cfg.marker_close + seg.text[seg.end:]
        for seg in instance.segments
    ]


def analytic_label_baseline(train: Sequence[Instance], test: Sequence[Instance]) -> float:
    """Accuracy on test of the constant predictor emitting train's majority gold label.

    Closed-form stand-in for a trained everything-masked baseline; prediction
    files from an actually trained one take precedence when available.
    """
    if not train:
        raise ValidationError("empty train set")
    kinds = {inst.task_kind for inst in train} | {inst.task_kind for inst in test}
    if len(kinds) > 1:
        raise ValidationError(f"train and test mix task kinds: {sorted(k.value for k in kinds)}")
    counts = Counter(inst.gold.value for inst in train)
    top = max(counts.values())
    majority = min(v for v, c in counts.items() if c == top)
    if not test:
        raise ValidationError("empty test set")
    return sum(1 for inst in test if inst.gold.value == majority) / len(test)


# ---------------------------------------------------------------------------
# perturbed JSONL: the canonical schema plus a "variant" field


def write_perturbed(perturbed: Iterable[PerturbedInstance], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in perturbed:
            obj = instance_to_obj(p.instance)
            obj["variant"] = p.variant.value
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def parse_perturbed(path) -> list[PerturbedInstance]:
    perturbed: list[PerturbedInstance] = []
    diagnostics: list[Diagnostic] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
                variant = VariantKind(obj.pop("variant"))
                perturbed.append(PerturbedInstance(
                    instance=instance_from_obj(obj),
                    variant=variant,
                    provenance=f"loaded from {path}",
                ))
            except (json.JSONDecodeError, KeyError, ValueError, ValidationError) as exc:
                diagnostics.append(Diagnostic(lineno, str(exc)))
    if diagnostics:
        raise ParseError(path, diagnostics)
    return perturbed


def apply_variant(instance: Instance, variant: VariantKind, cfg: MaskConfig = MaskConfig(),
                  replacements: Sequence[str] | None = None) -> PerturbedInstance:
    """Dispatch to the perturbation for ``variant``; full input passes through."""
    if variant is VariantKind.FULL:
        return PerturbedInstance(instance=instance, variant=VariantKind.FULL,
                                 provenance="unperturbed full input")
    if variant is VariantKind.CONTEXT:
        return make_context_variant(instance, cfg)
    if variant is VariantKind.WORD:
        return make_word_variant(instance)
    if variant is VariantKind.LABEL:
        return make_label_variant(instance, cfg)
    if replacements is None:
        raise ValidationError("guessed_word perturbation needs replacement surfaces")
    return substitute_target(instance, replacements)
