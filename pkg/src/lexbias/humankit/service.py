"""HTTP+JSON annotation service feeding the browser UI.

Endpoints: POST /batches, GET /batches/{id}/next, POST /batches/{id}/judgments,
GET /batches/{id}/progress, GET /export. Payloads for masked variants never
carry the hidden surface; the render path asserts that before responding.
"""
from __future__ import annotations

import datetime
import json
import zlib
from typing import Optional, Sequence

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from ..ingest import check_label_space
from ..perturb import MaskConfig, apply_variant
from ..types import Instance, LexbiasError, TaskKind, ValidationError, VariantKind
from .sampling import SplitMix64, sample_batches
from .store import BatchStore, ConflictError, Judgment, export_judgments

ANNOTATION_VARIANTS = (VariantKind.FULL, VariantKind.CONTEXT, VariantKind.WORD)


class SamplingRequest(BaseModel):
    variant: str
    n_per_annotator: int = 100
    overlap: int = 50
    seed: int = 0
    annotators: tuple[str, str] = ("annotator-a", "annotator-b")
    dataset_name: Optional[str] = None


class JudgmentRequest(BaseModel):
    instance_id: str
    annotator: str
    prediction: str
    guessed_surface: Optional[str] = None
    elapsed_ms: Optional[int] = None


def _candidate_shortlist(inst: Instance, inventory: Sequence[str], k: int, seed: int) -> list[str]:
    """Deterministic per-instance shortlist: the gold id plus distractors,
    shuffled so the gold position carries no signal."""
    if inst.candidates is not None:
        return list(inst.candidates)
    if not inventory:
        return []
    rng = SplitMix64(seed ^ zlib.crc32(inst.id.encode("utf-8")))
    pool = [c for c in inventory if c != inst.gold.value]
    rng.shuffle(pool)
    shortlist = pool[:max(0, k - 1)] + [inst.gold.value]
    rng.shuffle(shortlist)
    return shortlist


def render_task(inst: Instance, variant: VariantKind, cfg: MaskConfig,
                inventory: Sequence[str] = (), shortlist_k: int = 10, seed: int = 0) -> dict:
    """Variant-specific task payload: masked text for context, surfaces only
    for word, full text otherwise. Masked payloads must not leak the surface."""
    perturbed = apply_variant(inst, variant, cfg)
    payload: dict = {
        "instance_id": inst.id,
        "task_kind": inst.task_kind.value,
        "variant": variant.value,
        "segments": [
            {"text": seg.text, "start": seg.start, "end": seg.end}
            for seg in perturbed.segments
        ],
        "label_space": "binary" if inst.task_kind is TaskKind.PAIR_CLASSIFICATION else "candidate",
        "guess_enabled": variant is VariantKind.CONTEXT,
    }
    if inst.task_kind is not TaskKind.PAIR_CLASSIFICATION:
        payload["candidates"] = _candidate_shortlist(inst, inventory, shortlist_k, seed)
    if variant in (VariantKind.CONTEXT, VariantKind.LABEL):
        for seg in perturbed.segments:
            masked = seg.text[seg.start:seg.end]
            if cfg.mask_token not in masked:
                raise ValidationError(
                    f"masked payload for {inst.id} leaks the target: span is {masked!r}")
    return payload


def create_app(store: BatchStore, dataset: Sequence[Instance],
               cfg: MaskConfig = MaskConfig(), dataset_name: str = "dataset",
               inventory: Sequence[str] = (), shortlist_k: int = 10) -> FastAPI:
    app = FastAPI(title="lexbias annotation service")
    by_id = {inst.id: inst for inst in dataset}

    def get_batch(batch_id: str):
        try:
            return store.load_batch(batch_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown batch {batch_id!r}") from None

    @app.post("/batches")
    def create_batches(req: SamplingRequest):
        try:
            variant = VariantKind(req.variant)
        except ValueError:
            raise HTTPException(status_code=422, detail=f"unknown variant {req.variant!r}") from None
        if variant not in ANNOTATION_VARIANTS:
            raise HTTPException(
                status_code=422,
                detail=f"annotation supports {[v.value for v in ANNOTATION_VARIANTS]}")
        try:
            batch_a, batch_b = sample_batches(
                dataset, variant,
                n_per_annotator=req.n_per_annotator,
                overlap=req.overlap,
                seed=req.seed,
                annotators=req.annotators,
                dataset_name=req.dataset_name or dataset_name,
                created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
            )
            store.create_batch(batch_a)
            store.create_batch(batch_b)
        except LexbiasError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return {"batches": [batch_a.to_json(), batch_b.to_json()]}

    @app.get("/batches/{batch_id}/next")
    def next_task(batch_id: str, annotator: str):
        batch = get_batch(batch_id)
        if annotator != batch.annotator:
            raise HTTPException(status_code=403, detail="annotator does not match this batch")
        progress = store.progress(batch_id)
        iid = store.next_unjudged(batch_id)
        if iid is None:
            return {"done": True, "task": None, "progress": progress}
        task = render_task(by_id[iid], batch.variant, cfg,
                           inventory=inventory, shortlist_k=shortlist_k, seed=batch.seed)
        task["batch_id"] = batch_id
        return {"done": False, "task": task, "progress": progress}

    @app.post("/batches/{batch_id}/judgments")
    def submit_judgment(batch_id: str, req: JudgmentRequest):
        batch = get_batch(batch_id)
        inst = by_id.get(req.instance_id)
        if inst is None or req.instance_id not in batch.instance_ids:
            raise HTTPException(status_code=404,
                                detail=f"instance {req.instance_id!r} is not in this batch")
        try:
            check_label_space(req.prediction, inst)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        judgment = Judgment(
            batch_id=batch_id,
            instance_id=req.instance_id,
            annotator=req.annotator,
            prediction=req.prediction,
            guessed_surface=req.guessed_surface,
            elapsed_ms=req.elapsed_ms,
            submitted_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        )
        try:
            status = store.record_judgment(judgment)
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except ValidationError as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from None
        return {"status": status, "progress": store.progress(batch_id)}

    @app.get("/batches/{batch_id}/progress")
    def progress(batch_id: str):
        get_batch(batch_id)
        return store.progress(batch_id)

    @app.get("/export")
    def export(batch: list[str] = Query(default=[])):
        if not batch:
            raise HTTPException(status_code=422, detail="pass at least one ?batch= id")
        for batch_id in batch:
            get_batch(batch_id)
        records, _overlap = export_judgments(store, batch)
        lines = "".join(json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in records)
        return PlainTextResponse(lines, media_type="application/x-ndjson")

    return app
