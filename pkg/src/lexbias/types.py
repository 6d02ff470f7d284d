"""Shared domain types: instances, labels, variants, scores and reports."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

TOOLKIT_VERSION = "0.1.0"

#: Joins the two normalized surfaces of a cross-lingual pair into one word key.
WORD_KEY_JOINER = "␟"


class LexbiasError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(LexbiasError):
    """An object violates one of its declared invariants."""


class DegenerateDenominatorError(LexbiasError):
    """Full and label scores coincide, so the bias ratio is undefined."""


class TaskKind(str, Enum):
    PAIR_CLASSIFICATION = "pair_classification"
    DISAMBIGUATION = "disambiguation"
    RETRIEVAL = "retrieval"


class VariantKind(str, Enum):
    FULL = "full"
    CONTEXT = "context"
    WORD = "word"
    LABEL = "label"
    GUESSED_WORD = "guessed_word"


BINARY_VALUES = ("T", "F")


@dataclass(frozen=True)
class Label:
    """Gold or predicted label: a binary T/F judgment or a candidate id."""

    kind: str  # "binary" | "candidate"
    value: str

    @classmethod
    def binary(cls, value: str) -> "Label":
        if value not in BINARY_VALUES:
            raise ValidationError(f"binary label must be one of {BINARY_VALUES}, got {value!r}")
        return cls("binary", value)

    @classmethod
    def candidate(cls, value: str) -> "Label":
        if not value:
            raise ValidationError("candidate label must be a non-empty id")
        return cls("candidate", value)

    def to_json(self) -> dict:
        return {self.kind: self.value}

    @classmethod
    def from_json(cls, obj: object) -> "Label":
        if not isinstance(obj, dict) or len(obj) != 1:
            raise ValidationError(f"label must be an object with one of 'binary'/'candidate', got {obj!r}")
        (key, value), = obj.items()
        if key == "binary":
            return cls.binary(value)
        if key == "candidate":
            return cls.candidate(value)
        raise ValidationError(f"unknown label kind {key!r}")


@dataclass(frozen=True)
class Segment:
    """A text with exactly one half-open target span, offsets in Unicode scalar values."""

    text: str
    start: int
    end: int
    surface: str

    def validate(self) -> None:
        if not (0 <= self.start < self.end <= len(self.text)):
            raise ValidationError(
                f"invalid span [{self.start}, {self.end}) for text of length {len(self.text)}"
            )
        actual = self.text[self.start:self.end]
        if actual != self.surface:
            raise ValidationError(
                f"surface mismatch: span covers {actual!r} but surface is {self.surface!r}"
            )


@dataclass(frozen=True)
class Instance:
    """One evaluation item: segments with target spans, a gold label, optional candidates."""

    id: str
    task_kind: TaskKind
    segments: tuple[Segment, ...]
    gold: Label
    candidates: Optional[tuple[str, ...]] = None
    word_key: str = ""

    def validate(self) -> None:
        if not self.id:
            raise ValidationError("instance id must be non-empty")
        expected = 2 if self.task_kind is TaskKind.PAIR_CLASSIFICATION else 1
        if len(self.segments) != expected:
            raise ValidationError(
                f"{self.task_kind.value} requires {expected} segment(s), got {len(self.segments)}"
            )
        for seg in self.segments:
            seg.validate()
        if self.task_kind is TaskKind.PAIR_CLASSIFICATION:
            if self.gold.kind != "binary":
                raise ValidationError("pair_classification requires a binary gold label")
            if self.candidates is not None:
                raise ValidationError("pair_classification instances carry no candidate list")
        else:
            if self.gold.kind != "candidate":
                raise ValidationError(f"{self.task_kind.value} requires a candidate gold label")
        if self.task_kind is TaskKind.DISAMBIGUATION:
            if not self.candidates:
                raise ValidationError("disambiguation requires a per-instance candidate list")
            if self.gold.value not in self.candidates:
                raise ValidationError(
                    f"gold candidate {self.gold.value!r} not among candidates"
                )
        if self.task_kind is TaskKind.RETRIEVAL and self.candidates is not None:
            raise ValidationError("retrieval instances resolve against a global inventory; drop candidates")
        if not self.word_key:
            raise ValidationError("word_key must be non-empty")


def default_word_key(segments: Sequence[Segment], task_kind: TaskKind) -> str:
    """Normalize surfaces into a grouping key: casefold, trim; pairs with
    differing normalized surfaces join both, in order."""
    keys = [seg.surface.strip().casefold() for seg in segments]
    if task_kind is TaskKind.PAIR_CLASSIFICATION and len(set(keys)) > 1:
        return WORD_KEY_JOINER.join(keys)
    return keys[0]


def same_word_pairs(instances: Sequence[Instance]) -> bool:
    """True when every pair instance carries the same normalized surface twice."""
    for inst in instances:
        if inst.task_kind is not TaskKind.PAIR_CLASSIFICATION:
            return False
        a, b = (seg.surface.strip().casefold() for seg in inst.segments)
        if a != b:
            return False
    return bool(instances)


@dataclass(frozen=True)
class Run:
    """One scored run of a system on a variant."""

    seed: Optional[int]
    score: float
    annotator: Optional[str] = None


@dataclass(frozen=True)
class ScoreSummary:
    """Per-variant performance of one system, aggregated over runs."""

    system: str
    variant: VariantKind
    metric: str  # "accuracy" | "accuracy_at_1"
    runs: tuple[Run, ...]
    mean: float
    std: float
    n_instances: int

    def validate(self) -> None:
        if not self.runs:
            raise ValidationError("score summary needs at least one run")
        scores = [r.score for r in self.runs]
        if not (min(scores) - 1e-12 <= self.mean <= max(scores) + 1e-12):
            raise ValidationError("mean outside the range of run scores")
        if self.std < 0:
            raise ValidationError("std must be non-negative")


# Flags a BiasReport may carry.
FLAG_DEGENERATE = "degenerate_denominator"
FLAG_EXCEEDS_ONE_C = "exceeds_one_c"
FLAG_EXCEEDS_ONE_W = "exceeds_one_w"
FLAG_NEGATIVE_C = "negative_c"
FLAG_NEGATIVE_W = "negative_w"


@dataclass(frozen=True)
class BiasReport:
    """Context/word bias ratios and the min gap for one (dataset, system)."""

    dataset: str
    system: str
    bias_c: Optional[float]
    bias_w: Optional[float]
    min_gap: Optional[float]
    flags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class WordEntropy:
    """Entropy statistics for one word key."""

    count: int
    entropy_bits: float
    majority_proportion: float
    majority_label: str


@dataclass(frozen=True)
class EntropyReport:
    """Per-word label or sense entropy plus dataset-level averages.

    ``average`` is the unweighted mean over included word types; the
    frequency-weighted mean and the instance-weighted majority proportion
    are reported alongside.
    """

    kind: str  # "label_entropy" | "sense_entropy"
    per_word: Mapping[str, WordEntropy]
    average: float
    n_words_included: int
    n_words_discarded: int
    majority_proportion_overall: float
    weighted_average: float


@dataclass(frozen=True)
class PredictionSet:
    """One system's predictions for one variant (and optional seed/annotator)."""

    system: str
    variant: VariantKind
    labels: Mapping[str, Label]
    seed: Optional[int] = None
    annotator: Optional[str] = None
