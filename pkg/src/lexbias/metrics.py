"""Metric mathematics: accuracy, bias ratios, gaps, entropies, agreement."""
from __future__ import annotations

import math
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .types import (
    BiasReport,
    DegenerateDenominatorError,
    EntropyReport,
    FLAG_DEGENERATE,
    FLAG_EXCEEDS_ONE_C,
    FLAG_EXCEEDS_ONE_W,
    FLAG_NEGATIVE_C,
    FLAG_NEGATIVE_W,
    Instance,
    Label,
    LexbiasError,
    Run,
    ScoreSummary,
    TaskKind,
    ValidationError,
    VariantKind,
    WordEntropy,
)

#: Guard for the bias denominator: |full - label| below this is degenerate.
BIAS_EPSILON = 1e-9


@dataclass(frozen=True)
class AccuracyResult:
    """Accuracy plus the diagnostics needed to audit strict scoring."""

    value: float
    n_correct: int
    n_scored: int
    n_missing: int
    n_gold: int


def accuracy(preds: Mapping[str, Label], gold: Mapping[str, Label]) -> AccuracyResult:
    """Fraction of gold ids predicted correctly.

    Scoring is strict: gold ids without a prediction count as wrong and are
    surfaced in ``n_missing``. Every predicted id must exist in gold.
    """
    if not preds:
        raise ValidationError("no predictions")
    unknown = sorted(set(preds) - set(gold))
    if unknown:
        raise ValidationError(f"predictions reference unknown ids: {', '.join(unknown[:5])}"
                              + ("..." if len(unknown) > 5 else ""))
    n_correct = sum(1 for iid, label in preds.items() if label == gold[iid])
    n_missing = len(gold) - len(preds)
    return AccuracyResult(
        value=n_correct / len(gold),
        n_correct=n_correct,
        n_scored=len(preds),
        n_missing=n_missing,
        n_gold=len(gold),
    )


def bias_score(m_x: float, m_l: float, m_full: float, *, context: str = "") -> float:
    """Bias ratio (m_x - m_l) / (m_full - m_l).

    Equivalently: m_x min-max normalized with the label score as min and the
    full-input score as max. Values below 0 and above 1 are legal; callers
    flag them. Scale-free, so fractions and percentages give the same ratio.
    """
    for name, v in (("m_x", m_x), ("m_l", m_l), ("m_full", m_full)):
        if not math.isfinite(v):
            raise ValidationError(f"{name} must be finite, got {v!r}")
    denom = m_full - m_l
    if abs(denom) <= BIAS_EPSILON:
        where = f" for {context}" if context else ""
        raise DegenerateDenominatorError(
            f"full and label scores coincide ({m_full} vs {m_l}){where}; bias is undefined"
        )
    return (m_x - m_l) / denom


def min_gap(full: float, context: float, word: float) -> float:
    """min(full - context, full - word); negative when a baseline beats full input."""
    return min(full - context, full - word)


def _entropy_bits(counts: Counter) -> float:
    total = sum(counts.values())
    ent = 0.0
    for c in counts.values():
        p = c / total
        ent -= p * math.log2(p)
    return ent


def _word_stats(counts: Counter) -> WordEntropy:
    total = sum(counts.values())
    top = max(counts.values())
    majority_label = min(label for label, c in counts.items() if c == top)
    return WordEntropy(
        count=total,
        entropy_bits=_entropy_bits(counts),
        majority_proportion=top / total,
        majority_label=majority_label,
    )


def _entropy_report(groups: Mapping[str, Counter], kind: str, min_count: int) -> EntropyReport:
    retained = {w: c for w, c in groups.items() if sum(c.values()) >= min_count}
    if not retained:
        raise LexbiasError("no repeated words" if min_count > 1 else "empty dataset")
    per_word = {w: _word_stats(counts) for w, counts in sorted(retained.items())}
    n_instances = sum(s.count for s in per_word.values())
    return EntropyReport(
        kind=kind,
        per_word=per_word,
        average=sum(s.entropy_bits for s in per_word.values()) / len(per_word),
        n_words_included=len(per_word),
        n_words_discarded=len(groups) - len(per_word),
        majority_proportion_overall=(
            sum(s.count * s.majority_proportion for s in per_word.values()) / n_instances
        ),
        weighted_average=(
            sum(s.count * s.entropy_bits for s in per_word.values()) / n_instances
        ),
    )


def _group_gold(dataset: Iterable[Instance]) -> dict[str, Counter]:
    groups: dict[str, Counter] = defaultdict(Counter)
    for inst in dataset:
        groups[inst.word_key][inst.gold.value] += 1
    return groups


def label_entropy(dataset: Sequence[Instance], min_count: int = 2) -> EntropyReport:
    """Per-word Shannon entropy of binary gold labels, in bits.

    Words occurring fewer than ``min_count`` times are discarded. The headline
    ``average`` is the unweighted mean over retained word types;
    ``majority_proportion_overall`` is the instance-weighted chance that an
    example carries its word's most frequent label.
    """
    if not dataset:
        raise ValidationError("empty dataset")
    for inst in dataset:
        if inst.task_kind is not TaskKind.PAIR_CLASSIFICATION:
            raise ValidationError(
                f"label entropy applies to pair_classification only; {inst.id} is {inst.task_kind.value}"
            )
    return _entropy_report(_group_gold(dataset), "label_entropy", min_count)


def sense_entropy(dataset: Sequence[Instance]) -> EntropyReport:
    """Per-word Shannon entropy of gold sense/entity distributions, in bits.

    All words are kept, including single-occurrence ones; the average is the
    unweighted mean over word types.
    """
    if not dataset:
        raise ValidationError("empty dataset")
    for inst in dataset:
        if inst.task_kind is TaskKind.PAIR_CLASSIFICATION:
            raise ValidationError(
                f"sense entropy applies to disambiguation/retrieval; {inst.id} is pair_classification"
            )
    return _entropy_report(_group_gold(dataset), "sense_entropy", min_count=1)


def agreement(preds_a: Mapping[str, Label], preds_b: Mapping[str, Label],
              ids: Iterable[str]) -> float:
    """Raw percent agreement between two prediction sets over ``ids``."""
    idset = set(ids)
    if not idset:
        raise ValidationError("no ids to compare")
    missing = sorted((idset - set(preds_a)) | (idset - set(preds_b)))
    if missing:
        raise ValidationError(f"ids missing from one of the prediction sets: {', '.join(missing)}")
    same = sum(1 for iid in idset if preds_a[iid] == preds_b[iid])
    return 100.0 * same / len(idset)


def aggregate_runs(runs: Sequence) -> tuple[float, float]:
    """Mean and sample standard deviation (n-1) of run scores.

    Accepts bare scores, (seed, score) pairs, or Run objects. A single run
    has std 0 by definition.
    """
    scores = []
    for item in runs:
        if isinstance(item, Run):
            scores.append(item.score)
        elif isinstance(item, (tuple, list)):
            scores.append(float(item[1]))
        else:
            scores.append(float(item))
    if not scores:
        raise ValidationError("no runs to aggregate")
    mean = statistics.fmean(scores)
    std = statistics.stdev(scores) if len(scores) > 1 else 0.0
    return mean, std


def summarize_runs(system: str, variant: VariantKind, metric: str,
                   runs: Sequence[Run], n_instances: int) -> ScoreSummary:
    """Build a validated ScoreSummary from individual runs."""
    mean, std = aggregate_runs(runs)
    summary = ScoreSummary(
        system=system,
        variant=variant,
        metric=metric,
        runs=tuple(runs),
        mean=mean,
        std=std,
        n_instances=n_instances,
    )
    summary.validate()
    return summary


def human_convention_baseline(task_kind: TaskKind, variant: VariantKind,
                              same_word_pairs: bool = False) -> Optional[float]:
    """Analytic human scores where convention fixes them; None when the
    score must be measured.

    Same-word pair tasks get 0.5 on word-only input (annotators judge "same");
    with everything masked, binary tasks get 0.5 and retrieval 0.
    """
    if variant not in (VariantKind.WORD, VariantKind.LABEL):
        raise ValidationError(f"no convention for variant {variant.value}")
    if variant is VariantKind.WORD:
        if task_kind is TaskKind.PAIR_CLASSIFICATION and same_word_pairs:
            return 0.5
        return None
    if task_kind is TaskKind.PAIR_CLASSIFICATION:
        return 0.5
    if task_kind is TaskKind.RETRIEVAL:
        return 0.0
    return None


def bias_flags(bias_c: Optional[float], bias_w: Optional[float]) -> frozenset[str]:
    flags = set()
    if bias_c is not None:
        if bias_c > 1.0:
            flags.add(FLAG_EXCEEDS_ONE_C)
        if bias_c < 0.0:
            flags.add(FLAG_NEGATIVE_C)
    if bias_w is not None:
        if bias_w > 1.0:
            flags.add(FLAG_EXCEEDS_ONE_W)
        if bias_w < 0.0:
            flags.add(FLAG_NEGATIVE_W)
    return frozenset(flags)


def build_bias_report(summaries: Mapping[VariantKind, ScoreSummary], dataset: str,
                      lenient: bool = False) -> BiasReport:
    """Derive bias ratios and the min gap from per-variant score summaries.

    Requires full and label summaries plus at least one of context/word, all
    from the same system with the same metric. With ``lenient`` a degenerate
    denominator yields a flagged report with empty biases instead of raising.
    """
    for required in (VariantKind.FULL, VariantKind.LABEL):
        if required not in summaries:
            raise ValidationError(f"missing required variant: {required.value}")
    baselines = [v for v in (VariantKind.CONTEXT, VariantKind.WORD) if v in summaries]
    if not baselines:
        raise ValidationError("need a context or word summary to compute bias")
    systems = {s.system for s in summaries.values()}
    metrics_used = {s.metric for s in summaries.values()}
    if len(systems) > 1 or len(metrics_used) > 1:
        raise ValidationError(
            f"summaries mix systems {sorted(systems)} or metrics {sorted(metrics_used)}"
        )
    system = next(iter(systems))
    m_full = summaries[VariantKind.FULL].mean
    m_l = summaries[VariantKind.LABEL].mean

    bias_c = bias_w = None
    flags: frozenset[str]
    try:
        if VariantKind.CONTEXT in summaries:
            bias_c = bias_score(summaries[VariantKind.CONTEXT].mean, m_l, m_full,
                                context=f"{dataset}/{system}")
        if VariantKind.WORD in summaries:
            bias_w = bias_score(summaries[VariantKind.WORD].mean, m_l, m_full,
                                context=f"{dataset}/{system}")
        flags = bias_flags(bias_c, bias_w)
    except DegenerateDenominatorError:
        if not lenient:
            raise
        bias_c = bias_w = None
        flags = frozenset({FLAG_DEGENERATE})

    gap = min(m_full - summaries[v].mean for v in baselines)
    return BiasReport(
        dataset=dataset,
        system=system,
        bias_c=bias_c,
        bias_w=bias_w,
        min_gap=gap,
        flags=flags,
    )
