"""Parse source dataset and prediction formats into canonical types; write canonical JSONL."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .types import (
    Instance,
    Label,
    LexbiasError,
    PredictionSet,
    Segment,
    TaskKind,
    ValidationError,
    VariantKind,
    default_word_key,
)

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


class ParseError(LexbiasError):
    """Raised when a file fails to parse; carries every located diagnostic."""

    def __init__(self, path, diagnostics: Sequence[Diagnostic]):
        self.path = str(path)
        self.diagnostics = list(diagnostics)
        shown = "; ".join(str(d) for d in self.diagnostics[:5])
        more = f" (+{len(self.diagnostics) - 5} more)" if len(self.diagnostics) > 5 else ""
        super().__init__(f"{self.path}: {shown}{more}")


@dataclass(frozen=True)
class DatasetManifest:
    """Bookkeeping for one parsed dataset split."""

    name: str
    task_kind: TaskKind
    languages: tuple[str, ...]
    split: str  # train | dev | test
    source_format: str  # canonical_jsonl | wic_tsv | pair_jsonl | retrieval_jsonl
    n_instances: int

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "task_kind": self.task_kind.value,
            "languages": list(self.languages),
            "split": self.split,
            "source_format": self.source_format,
            "n_instances": self.n_instances,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DatasetManifest":
        return cls(
            name=obj["name"],
            task_kind=TaskKind(obj["task_kind"]),
            languages=tuple(obj["languages"]),
            split=obj["split"],
            source_format=obj["source_format"],
            n_instances=int(obj["n_instances"]),
        )


@dataclass(frozen=True)
class PredictionRecord:
    """One prediction line: system x variant x seed x annotator for one instance."""

    instance_id: str
    system: str
    variant: VariantKind
    prediction: str
    seed: Optional[int] = None
    annotator: Optional[str] = None
    guessed_surface: Optional[str] = None

    def key(self) -> tuple:
        return (self.instance_id, self.system, self.variant.value, self.seed, self.annotator)

    def to_json(self) -> dict:
        obj = {
            "instance_id": self.instance_id,
            "system": self.system,
            "variant": self.variant.value,
            "seed": self.seed,
            "prediction": self.prediction,
        }
        if self.annotator is not None:
            obj["annotator"] = self.annotator
        if self.guessed_surface is not None:
            obj["guessed_surface"] = self.guessed_surface
        return obj


# ---------------------------------------------------------------------------
# canonical JSONL


def instance_to_obj(inst: Instance) -> dict:
    obj = {
        "id": inst.id,
        "task_kind": inst.task_kind.value,
        "word_key": inst.word_key,
        "segments": [
            {"text": s.text, "start": s.start, "end": s.end, "surface": s.surface}
            for s in inst.segments
        ],
        "gold": inst.gold.to_json(),
    }
    if inst.candidates is not None:
        obj["candidates"] = list(inst.candidates)
    return obj


_INSTANCE_FIELDS = {"id", "task_kind", "word_key", "segments", "gold", "candidates"}
_SEGMENT_FIELDS = {"text", "start", "end", "surface"}


def instance_from_obj(obj: dict) -> Instance:
    if not isinstance(obj, dict):
        raise ValidationError(f"expected an object, got {type(obj).__name__}")
    extra = set(obj) - _INSTANCE_FIELDS
    if extra:
        raise ValidationError(f"unexpected fields: {', '.join(sorted(extra))}")
    for required in ("id", "task_kind", "word_key", "segments", "gold"):
        if required not in obj:
            raise ValidationError(f"missing field {required!r}")
    try:
        task_kind = TaskKind(obj["task_kind"])
    except ValueError:
        raise ValidationError(f"unknown task_kind {obj['task_kind']!r}") from None
    segments = []
    for i, seg in enumerate(obj["segments"]):
        if not isinstance(seg, dict) or set(seg) != _SEGMENT_FIELDS:
            raise ValidationError(f"segment {i} must have exactly fields {sorted(_SEGMENT_FIELDS)}")
        if not isinstance(seg["start"], int) or not isinstance(seg["end"], int):
            raise ValidationError(f"segment {i}: start/end must be integers")
        segments.append(Segment(seg["text"], seg["start"], seg["end"], seg["surface"]))
    candidates = obj.get("candidates")
    inst = Instance(
        id=str(obj["id"]),
        task_kind=task_kind,
        segments=tuple(segments),
        gold=Label.from_json(obj["gold"]),
        candidates=tuple(candidates) if candidates is not None else None,
        word_key=obj["word_key"],
    )
    inst.validate()
    return inst


def _read_jsonl(path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            yield lineno, raw


def _parse_instances(path, obj_to_instance) -> list[Instance]:
    instances: list[Instance] = []
    diagnostics: list[Diagnostic] = []
    seen_ids: set[str] = set()
    for lineno, raw in _read_jsonl(path):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            diagnostics.append(Diagnostic(lineno, f"malformed JSON: {exc.msg}"))
            continue
        try:
            inst = obj_to_instance(obj)
        except (ValidationError, KeyError, TypeError) as exc:
            diagnostics.append(Diagnostic(lineno, str(exc)))
            continue
        if inst.id in seen_ids:
            diagnostics.append(Diagnostic(lineno, f"duplicate id {inst.id!r}"))
            continue
        seen_ids.add(inst.id)
        instances.append(inst)
    if diagnostics:
        raise ParseError(path, diagnostics)
    return instances


def parse_canonical(path) -> list[Instance]:
    """Parse canonical instance JSONL; all-or-nothing with located diagnostics."""
    return _parse_instances(path, instance_from_obj)


def write_canonical(instances: Iterable[Instance], path) -> None:
    """Write canonical JSONL: UTF-8, LF, stable field order; inverse of parse_canonical."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(json.dumps(instance_to_obj(inst), ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# WiC TSV


def token_spans(text: str) -> list[tuple[int, int]]:
    """Half-open character spans of whitespace tokens."""
    return [(m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def parse_wic_tsv(data_path, gold_path) -> list[Instance]:
    """Parse the WiC release format: `word pos idx1-idx2 sent1 sent2` plus a
    parallel file of T/F gold lines. Token indices are zero-based and map to
    character spans by whitespace tokenization."""
    data_lines = Path(data_path).read_text(encoding="utf-8").splitlines()
    gold_lines = Path(gold_path).read_text(encoding="utf-8").splitlines()
    while data_lines and not data_lines[-1].strip():
        data_lines.pop()
    while gold_lines and not gold_lines[-1].strip():
        gold_lines.pop()
    if len(data_lines) != len(gold_lines):
        raise ParseError(data_path, [Diagnostic(
            0, f"line count mismatch: {len(data_lines)} data lines vs {len(gold_lines)} gold lines")])

    stem = Path(data_path).stem
    instances: list[Instance] = []
    diagnostics: list[Diagnostic] = []
    for lineno, (line, gold_raw) in enumerate(zip(data_lines, gold_lines), start=1):
        cols = line.rstrip("\n").split("\t")
        if len(cols) != 5:
            diagnostics.append(Diagnostic(lineno, f"expected 5 tab-separated columns, got {len(cols)}"))
            continue
        word, _pos, indices, sent1, sent2 = cols
        try:
            idx1_s, idx2_s = indices.split("-", 1)
            idx1, idx2 = int(idx1_s), int(idx2_s)
        except ValueError:
            diagnostics.append(Diagnostic(lineno, f"bad token indices {indices!r}"))
            continue
        gold_value = gold_raw.strip()
        if gold_value not in ("T", "F"):
            diagnostics.append(Diagnostic(lineno, f"gold label must be T or F, got {gold_value!r}"))
            continue
        segments = []
        for idx, sent in ((idx1, sent1), (idx2, sent2)):
            spans = token_spans(sent)
            if idx < 0 or idx >= len(spans):
                diagnostics.append(Diagnostic(
                    lineno, f"token index {idx} out of range for sentence with {len(spans)} tokens"))
                break
            start, end = spans[idx]
            surface = sent[start:end]
            if not surface.casefold().startswith(word.casefold()):
                log.warning("%s line %d: token %r does not start with target word %r; keeping verbatim",
                            data_path, lineno, surface, word)
            segments.append(Segment(sent, start, end, surface))
        if len(segments) != 2:
            continue
        instances.append(Instance(
            id=f"{stem}-{lineno}",
            task_kind=TaskKind.PAIR_CLASSIFICATION,
            segments=tuple(segments),
            gold=Label.binary(gold_value),
            word_key=word.strip().casefold(),
        ))
    if diagnostics:
        raise ParseError(data_path, diagnostics)
    return instances


# ---------------------------------------------------------------------------
# minimal pair / retrieval JSONL normalizations


def _pair_from_obj(obj: dict) -> Instance:
    segments = []
    for i in ("1", "2"):
        text = obj[f"sentence{i}"]
        start, end = int(obj[f"start{i}"]), int(obj[f"end{i}"])
        segments.append(Segment(text, start, end, text[start:end] if 0 <= start <= end <= len(text) else ""))
    segments = tuple(segments)
    word_key = obj.get("word", "").strip().casefold() or default_word_key(segments, TaskKind.PAIR_CLASSIFICATION)
    inst = Instance(
        id=str(obj["id"]),
        task_kind=TaskKind.PAIR_CLASSIFICATION,
        segments=segments,
        gold=Label.binary(obj["label"]),
        word_key=word_key,
    )
    inst.validate()
    return inst


def _retrieval_from_obj(obj: dict) -> Instance:
    text = obj["text"]
    start, end = int(obj["start"]), int(obj["end"])
    seg = Segment(text, start, end, text[start:end] if 0 <= start <= end <= len(text) else "")
    word_key = obj.get("word", "").strip().casefold() or default_word_key((seg,), TaskKind.RETRIEVAL)
    inst = Instance(
        id=str(obj["id"]),
        task_kind=TaskKind.RETRIEVAL,
        segments=(seg,),
        gold=Label.candidate(obj["gold_id"]),
        word_key=word_key,
    )
    inst.validate()
    return inst


def parse_pair_jsonl(path) -> list[Instance]:
    """Minimal pair format: id, sentence1/start1/end1, sentence2/start2/end2, label, word?."""
    return _parse_instances(path, _pair_from_obj)


def parse_retrieval_jsonl(path) -> list[Instance]:
    """Minimal retrieval format: id, text, start, end, gold_id, word?."""
    return _parse_instances(path, _retrieval_from_obj)


# ---------------------------------------------------------------------------
# prediction files


def _record_from_obj(obj: dict) -> PredictionRecord:
    for required in ("instance_id", "system", "variant", "prediction"):
        if required not in obj:
            raise ValidationError(f"missing field {required!r}")
    try:
        variant = VariantKind(obj["variant"])
    except ValueError:
        raise ValidationError(f"unknown variant {obj['variant']!r}") from None
    seed = obj.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    guessed = obj.get("guessed_surface")
    if guessed is not None and variant not in (VariantKind.CONTEXT, VariantKind.GUESSED_WORD):
        raise ValidationError(f"guessed_surface only applies to context/guessed_word, not {variant.value}")
    prediction = obj["prediction"]
    if not isinstance(prediction, str) or not prediction:
        raise ValidationError(f"prediction must be a non-empty string, got {prediction!r}")
    return PredictionRecord(
        instance_id=str(obj["instance_id"]),
        system=str(obj["system"]),
        variant=variant,
        prediction=prediction,
        seed=seed,
        annotator=obj.get("annotator"),
        guessed_surface=guessed,
    )


def check_label_space(prediction: str, inst: Instance) -> None:
    """Raise unless the raw prediction is inside the instance's label space."""
    if inst.task_kind is TaskKind.PAIR_CLASSIFICATION:
        if prediction not in ("T", "F"):
            raise ValidationError(f"prediction {prediction!r} outside binary label space")
    elif inst.task_kind is TaskKind.DISAMBIGUATION:
        if inst.candidates and prediction not in inst.candidates:
            raise ValidationError(f"prediction {prediction!r} not among candidates of {inst.id}")


def parse_predictions(path, dataset: Optional[Sequence[Instance]] = None) -> list[PredictionRecord]:
    """Parse prediction JSONL; optionally validate ids and label space against a dataset."""
    by_id = {inst.id: inst for inst in dataset} if dataset is not None else None
    records: list[PredictionRecord] = []
    diagnostics: list[Diagnostic] = []
    seen: set[tuple] = set()
    for lineno, raw in _read_jsonl(path):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            diagnostics.append(Diagnostic(lineno, f"malformed JSON: {exc.msg}"))
            continue
        try:
            record = _record_from_obj(obj)
        except ValidationError as exc:
            diagnostics.append(Diagnostic(lineno, str(exc)))
            continue
        if record.key() in seen:
            diagnostics.append(Diagnostic(lineno, f"duplicate prediction for key {record.key()!r}"))
            continue
        seen.add(record.key())
        if by_id is not None:
            inst = by_id.get(record.instance_id)
            if inst is None:
                diagnostics.append(Diagnostic(lineno, f"unknown instance id {record.instance_id!r}"))
                continue
            try:
                check_label_space(record.prediction, inst)
            except ValidationError as exc:
                diagnostics.append(Diagnostic(lineno, str(exc)))
                continue
        records.append(record)
    if diagnostics:
        raise ParseError(path, diagnostics)
    return records


def write_predictions(records: Iterable[PredictionRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")


def prediction_label(prediction: str, task_kind: TaskKind) -> Label:
    if task_kind is TaskKind.PAIR_CLASSIFICATION:
        return Label.binary(prediction)
    return Label.candidate(prediction)


def group_prediction_sets(records: Sequence[PredictionRecord],
                          dataset: Sequence[Instance]) -> list[PredictionSet]:
    """Bundle records into PredictionSets keyed by (system, variant, seed, annotator)."""
    by_id = {inst.id: inst for inst in dataset}
    grouped: dict[tuple, dict[str, Label]] = {}
    for record in records:
        inst = by_id.get(record.instance_id)
        if inst is None:
            raise ValidationError(f"prediction references unknown id {record.instance_id!r}")
        key = (record.system, record.variant, record.seed, record.annotator)
        grouped.setdefault(key, {})[record.instance_id] = prediction_label(
            record.prediction, inst.task_kind)
    return [
        PredictionSet(system=system, variant=variant, labels=labels, seed=seed, annotator=annotator)
        for (system, variant, seed, annotator), labels in grouped.items()
    ]
