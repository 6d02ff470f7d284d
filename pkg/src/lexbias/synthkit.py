"""Synthetic datasets with planted word/context bias, plus predictor policies,
so measured bias ratios can be checked against ground truth."""
from __future__ import annotations

import logging
import random
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

from .metrics import Run, accuracy, build_bias_report, summarize_runs
from .perturb import MaskConfig, PerturbedInstance, apply_variant
from .types import (
    BiasReport,
    Instance,
    Label,
    PredictionSet,
    Segment,
    TaskKind,
    ValidationError,
    VariantKind,
)

log = logging.getLogger(__name__)

#: Sentinel tokens planting the label cue into generated contexts.
NEUTRAL_CUE = "cuenone"
CUE_PREFIX = "cue="


def cue_token(gold_value: str) -> str:
    return CUE_PREFIX + gold_value


def read_cue(text: str) -> Union[str, None]:
    for token in text.split():
        if token.startswith(CUE_PREFIX):
            return token[len(CUE_PREFIX):]
    return None


@dataclass(frozen=True)
class SynthSpec:
    """Generation knobs: ``label_determinism`` is the probability an example
    carries its word's majority label; ``context_informativeness`` is the
    probability the context carries a sentinel cue encoding the gold label."""

    n_words: int
    examples_per_word: int
    task_kind: TaskKind = TaskKind.PAIR_CLASSIFICATION
    label_determinism: float = 1.0
    context_informativeness: float = 0.0
    seed: int = 0
    senses_per_word: int = 2

    def validate(self) -> None:
        if self.n_words <= 0 or self.examples_per_word <= 0:
            raise ValidationError("n_words and examples_per_word must be positive")
        if not 0.5 <= self.label_determinism <= 1.0:
            raise ValidationError("label_determinism must be in [0.5, 1]")
        if not 0.0 <= self.context_informativeness <= 1.0:
            raise ValidationError("context_informativeness must be in [0, 1]")
        if self.senses_per_word < 2:
            raise ValidationError("senses_per_word must be at least 2")


class PredictorPolicy(str, Enum):
    ORACLE = "oracle"
    MAJORITY = "majority"
    WORD_LOOKUP = "word_lookup"
    CONTEXT_LOOKUP = "context_lookup"


def _word_labels(spec: SynthSpec, rng: random.Random) -> dict[str, tuple[str, list[str]]]:
    """Per word: its majority label value and the full label space."""
    table = {}
    for i in range(spec.n_words):
        word = f"word{i:04d}"
        if spec.task_kind is TaskKind.PAIR_CLASSIFICATION:
            space = ["T", "F"]
        else:
            space = [f"{word}%{k}" for k in range(1, spec.senses_per_word + 1)]
        table[word] = (rng.choice(space), space)
    return table


def _draw_gold(majority: str, space: list[str], p: float, rng: random.Random) -> str:
    if rng.random() < p:
        return majority
    others = [v for v in space if v != majority]
    return rng.choice(others)


def _make_segment(cue: str, counter: int, word: str) -> Segment:
    text = f"{cue} ctx{counter} {word} ."
    start = text.index(word, len(cue))
    return Segment(text, start, start + len(word), word)


def _make_instance(spec: SynthSpec, split: str, index: int, word: str, gold_value: str,
                   space: list[str], rng: random.Random) -> Instance:
    informative = rng.random() < spec.context_informativeness
    cue = cue_token(gold_value) if informative else NEUTRAL_CUE
    if spec.task_kind is TaskKind.PAIR_CLASSIFICATION:
        segments = (_make_segment(cue, 2 * index, word), _make_segment(cue, 2 * index + 1, word))
        gold = Label.binary(gold_value)
        candidates = None
    else:
        segments = (_make_segment(cue, index, word),)
        gold = Label.candidate(gold_value)
        candidates = tuple(space) if spec.task_kind is TaskKind.DISAMBIGUATION else None
    return Instance(
        id=f"syn-{split}-{index:06d}",
        task_kind=spec.task_kind,
        segments=segments,
        gold=gold,
        candidates=candidates,
        word_key=word,
    )


def generate(spec: SynthSpec) -> tuple[list[Instance], list[Instance]]:
    """Seed-deterministic train/test splits with disjoint ids and shared vocabulary."""
    spec.validate()
    rng = random.Random(spec.seed)
    words = _word_labels(spec, rng)
    splits: dict[str, list[Instance]] = {"train": [], "test": []}
    for split, instances in splits.items():
        index = 0
        for word, (majority, space) in words.items():
            for _ in range(spec.examples_per_word):
                gold_value = _draw_gold(majority, space, spec.label_determinism, rng)
                instances.append(_make_instance(spec, split, index, word, gold_value, space, rng))
                index += 1
    return splits["train"], splits["test"]


def inventory(spec: SynthSpec) -> list[str]:
    """Global candidate inventory for retrieval-style synthetic tasks."""
    if spec.task_kind is TaskKind.PAIR_CLASSIFICATION:
        return ["T", "F"]
    return [f"word{i:04d}%{k}"
            for i in range(spec.n_words)
            for k in range(1, spec.senses_per_word + 1)]


def _train_tables(train: Sequence[Instance]):
    per_surface: dict[str, Counter] = defaultdict(Counter)
    overall: Counter = Counter()
    for inst in train:
        overall[inst.gold.value] += 1
        for seg in inst.segments:
            per_surface[seg.surface.casefold()][inst.gold.value] += 1
    top = max(overall.values())
    majority = min(v for v, c in overall.items() if c == top)
    lookup = {}
    for surface, counts in per_surface.items():
        best = max(counts.values())
        lookup[surface] = min(v for v, c in counts.items() if c == best)
    return lookup, majority, sorted(overall)


def _label_space(inst: Instance, train_space: list[str]) -> list[str]:
    if inst.task_kind is TaskKind.PAIR_CLASSIFICATION:
        return ["T", "F"]
    if inst.candidates:
        return list(inst.candidates)
    return train_space


def simulate(policy: PredictorPolicy, train: Sequence[Instance],
             test: Sequence[Union[Instance, PerturbedInstance]],
             seed: int = 0) -> PredictionSet:
    """Run a predictor policy over (possibly perturbed) test instances.

    word_lookup memorizes each surface's train-majority label and falls back
    to the global train majority when the surface was never seen (notably when
    it is masked); the fallback count is logged. context_lookup reads the
    planted cue and guesses uniformly when no cue survives the perturbation.
    """
    if not train:
        raise ValidationError("empty train set")
    if not test:
        raise ValidationError("empty test set")
    variants = {t.variant if isinstance(t, PerturbedInstance) else VariantKind.FULL for t in test}
    if len(variants) > 1:
        raise ValidationError(f"test instances mix variants: {sorted(v.value for v in variants)}")
    variant = next(iter(variants))
    lookup, majority, train_space = _train_tables(train)
    rng = random.Random(seed)
    labels: dict[str, Label] = {}
    fallbacks = 0
    for item in test:
        inst = item.instance if isinstance(item, PerturbedInstance) else item
        if policy is PredictorPolicy.ORACLE:
            value = inst.gold.value
        elif policy is PredictorPolicy.MAJORITY:
            value = majority
        elif policy is PredictorPolicy.WORD_LOOKUP:
            value = lookup.get(inst.segments[0].surface.casefold())
            if value is None:
                value = majority
                fallbacks += 1
        else:
            cue = None
            for seg in inst.segments:
                cue = read_cue(seg.text)
                if cue is not None:
                    break
            value = cue if cue is not None else rng.choice(_label_space(inst, train_space))
        labels[inst.id] = (Label.binary(value)
                           if inst.task_kind is TaskKind.PAIR_CLASSIFICATION
                           else Label.candidate(value))
    if fallbacks:
        log.debug("word_lookup fell back to the train majority on %d/%d instances",
                  fallbacks, len(test))
    return PredictionSet(system=policy.value, variant=variant, labels=labels, seed=seed)


def measure_policy_bias(train: Sequence[Instance], test: Sequence[Instance],
                        policy: PredictorPolicy, seed: int = 0,
                        cfg: MaskConfig = MaskConfig(),
                        dataset_name: str = "synthetic") -> BiasReport:
    """End-to-end check: perturb the test split into every probing variant,
    simulate the policy on each, score, and derive the bias report."""
    gold = {inst.id: inst.gold for inst in test}
    summaries = {}
    for variant in (VariantKind.FULL, VariantKind.CONTEXT, VariantKind.WORD, VariantKind.LABEL):
        perturbed = [apply_variant(inst, variant, cfg) for inst in test]
        pset = simulate(policy, train, perturbed, seed=seed)
        score = accuracy(pset.labels, gold).value
        summaries[variant] = summarize_runs(
            policy.value, variant, "accuracy", (Run(seed=seed, score=score),), len(test))
    return build_bias_report(summaries, dataset_name)
