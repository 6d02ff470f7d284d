"""Append-only judgment journal: one JSONL file per batch, recovered by replay."""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from ..ingest import PredictionRecord
from ..types import LexbiasError, ValidationError
from .sampling import AnnotationBatch


class ConflictError(LexbiasError):
    """A differing judgment already exists for this (batch, instance)."""


@dataclass(frozen=True)
class Judgment:
    batch_id: str
    instance_id: str
    annotator: str
    prediction: str
    guessed_surface: Optional[str] = None
    elapsed_ms: Optional[int] = None
    submitted_at: Optional[str] = None

    def same_answer(self, other: "Judgment") -> bool:
        """Equality of the judgment proper, ignoring timing metadata."""
        return (self.instance_id == other.instance_id
                and self.annotator == other.annotator
                and self.prediction == other.prediction
                and self.guessed_surface == other.guessed_surface)

    def to_json(self) -> dict:
        obj = {
            "batch_id": self.batch_id,
            "instance_id": self.instance_id,
            "annotator": self.annotator,
            "prediction": self.prediction,
        }
        if self.guessed_surface is not None:
            obj["guessed_surface"] = self.guessed_surface
        if self.elapsed_ms is not None:
            obj["elapsed_ms"] = self.elapsed_ms
        if self.submitted_at is not None:
            obj["submitted_at"] = self.submitted_at
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Judgment":
        return cls(
            batch_id=obj["batch_id"],
            instance_id=obj["instance_id"],
            annotator=obj["annotator"],
            prediction=obj["prediction"],
            guessed_surface=obj.get("guessed_surface"),
            elapsed_ms=obj.get("elapsed_ms"),
            submitted_at=obj.get("submitted_at"),
        )


class BatchStore:
    """Batches and judgments under one directory, one journal file per batch.

    The first journal line is the batch header; every further line is one
    judgment. A judgment is fsynced before the call returns, so an
    acknowledged judgment survives a crash and restart replays the journal.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._batch_locks: dict[str, threading.Lock] = {}
        self._cache: dict[str, tuple[AnnotationBatch, dict[str, Judgment]]] = {}

    def _journal_path(self, batch_id: str) -> Path:
        safe = batch_id.replace(os.sep, "_")
        return self.root / f"{safe}.jsonl"

    def _batch_lock(self, batch_id: str) -> threading.Lock:
        with self._lock:
            return self._batch_locks.setdefault(batch_id, threading.Lock())

    def create_batch(self, batch: AnnotationBatch) -> None:
        path = self._journal_path(batch.batch_id)
        with self._batch_lock(batch.batch_id):
            if path.exists():
                raise ValidationError(f"batch {batch.batch_id!r} already exists")
            self._append(path, {"type": "batch", "batch": batch.to_json()})
            self._cache[batch.batch_id] = (batch, {})

    def list_batch_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))

    def _replay(self, batch_id: str) -> tuple[AnnotationBatch, dict[str, Judgment]]:
        if batch_id in self._cache:
            return self._cache[batch_id]
        path = self._journal_path(batch_id)
        if not path.exists():
            raise KeyError(batch_id)
        batch: Optional[AnnotationBatch] = None
        judgments: dict[str, Judgment] = {}
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                if not raw.strip():
                    continue
                obj = json.loads(raw)
                if obj["type"] == "batch":
                    batch = AnnotationBatch.from_json(obj["batch"])
                elif obj["type"] == "judgment":
                    j = Judgment.from_json(obj["judgment"])
                    judgments[j.instance_id] = j
        if batch is None:
            raise ValidationError(f"journal {path} has no batch header")
        self._cache[batch_id] = (batch, judgments)
        return self._cache[batch_id]

    def load_batch(self, batch_id: str) -> AnnotationBatch:
        return self._replay(batch_id)[0]

    def judgments(self, batch_id: str) -> dict[str, Judgment]:
        return dict(self._replay(batch_id)[1])

    @staticmethod
    def _append(path: Path, obj: dict) -> None:
        with open(path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def record_judgment(self, judgment: Judgment) -> str:
        """Durably append a judgment. Returns "stored", or "duplicate" when an
        identical judgment already exists; a differing one raises ConflictError."""
        with self._batch_lock(judgment.batch_id):
            batch, judgments = self._replay(judgment.batch_id)
            if judgment.instance_id not in batch.instance_ids:
                raise ValidationError(
                    f"instance {judgment.instance_id!r} is not part of batch {batch.batch_id!r}")
            if judgment.annotator != batch.annotator:
                raise ValidationError(
                    f"batch {batch.batch_id!r} belongs to {batch.annotator!r}, "
                    f"not {judgment.annotator!r}")
            existing = judgments.get(judgment.instance_id)
            if existing is not None:
                if existing.same_answer(judgment):
                    return "duplicate"
                raise ConflictError(
                    f"instance {judgment.instance_id!r} already judged "
                    f"{existing.prediction!r}, refusing {judgment.prediction!r}")
            self._append(self._journal_path(judgment.batch_id),
                         {"type": "judgment", "judgment": judgment.to_json()})
            judgments[judgment.instance_id] = judgment
            return "stored"

    def progress(self, batch_id: str) -> dict:
        batch, judgments = self._replay(batch_id)
        done = sum(1 for iid in batch.instance_ids if iid in judgments)
        return {
            "batch_id": batch.batch_id,
            "annotator": batch.annotator,
            "variant": batch.variant.value,
            "done": done,
            "total": len(batch.instance_ids),
            "complete": done == len(batch.instance_ids),
            "overlap_ids": list(batch.overlap_ids),
        }

    def next_unjudged(self, batch_id: str) -> Optional[str]:
        batch, judgments = self._replay(batch_id)
        for iid in batch.instance_ids:
            if iid not in judgments:
                return iid
        return None


def export_judgments(store: BatchStore, batch_ids: Iterable[str],
                     system: str = "human") -> tuple[list[PredictionRecord], set[str]]:
    """One PredictionRecord per stored judgment, plus the union of overlap ids."""
    records: list[PredictionRecord] = []
    overlap: set[str] = set()
    for batch_id in batch_ids:
        batch = store.load_batch(batch_id)
        judged = store.judgments(batch_id)
        overlap.update(batch.overlap_ids)
        for iid in batch.instance_ids:
            judgment = judged.get(iid)
            if judgment is None:
                continue
            records.append(PredictionRecord(
                instance_id=iid,
                system=system,
                variant=batch.variant,
                prediction=judgment.prediction,
                annotator=batch.annotator,
                guessed_surface=judgment.guessed_surface,
            ))
    return records, overlap
