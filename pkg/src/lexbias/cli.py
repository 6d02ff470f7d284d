"""Command-line orchestration: convert, perturb, score, bias, entropy,
sample, serve, agree, synth, report."""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import ingest, metrics, perturb, report, synthkit
from .humankit import BatchStore, sample_batches
from .types import (
    Instance,
    Label,
    LexbiasError,
    PredictionSet,
    TaskKind,
    ValidationError,
    VariantKind,
)

CONFIG_KEYS = {"workspace", "mask_token", "marker_open", "marker_close",
               "shade_threshold", "line_threshold"}


def read_config(path) -> dict:
    """Flat `key = value` config file; # starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path} line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ValidationError(f"{path} line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _setting(args, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if getattr(args, "_config", None) and key in args._config:
        return args._config[key]
    return default


def workspace_dir(args) -> Path:
    ws = _setting(args, "workspace", None) or os.environ.get("LEXBIAS_WORKSPACE") or "."
    return Path(ws)


def mask_config(args) -> perturb.MaskConfig:
    markers = getattr(args, "markers", None)
    if markers is not None:
        if markers.count(",") != 1:
            raise ValidationError(f"--markers expects OPEN,CLOSE, got {markers!r}")
        marker_open, marker_close = markers.split(",", 1)
    else:
        marker_open = _setting(args, "marker_open", "[")
        marker_close = _setting(args, "marker_close", "]")
    cfg = perturb.MaskConfig(
        mask_token=_setting(args, "mask_token", "[MASK]"),
        marker_open=marker_open,
        marker_close=marker_close,
        context_mask_per_token=bool(getattr(args, "context_mask_per_token", False)),
        label_single_mask=bool(getattr(args, "label_single_mask", False)),
    )
    cfg.validate()
    return cfg


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def print_table(rows: Sequence[Sequence], header: Sequence[str]) -> None:
    print("\t".join(header))
    for row in rows:
        print("\t".join(str(cell) for cell in row))


def fmt6(value: float) -> str:
    return f"{value:.6f}"


# ---------------------------------------------------------------------------
# scoring helpers shared by `score` and `bias`


def score_sets(sets: Sequence[PredictionSet], gold: dict[str, Label],
               covered_only: bool) -> list[tuple[PredictionSet, metrics.AccuracyResult]]:
    scored = []
    for pset in sorted(sets, key=lambda s: (s.system, s.variant.value,
                                            s.seed if s.seed is not None else -1,
                                            s.annotator or "")):
        universe = {iid: gold[iid] for iid in pset.labels} if covered_only else gold
        scored.append((pset, metrics.accuracy(pset.labels, universe)))
    return scored


def summarize_scored(scored, metric: str) -> list[tuple[str, VariantKind, metrics.ScoreSummary]]:
    grouped: dict[tuple[str, VariantKind], list] = {}
    for pset, result in scored:
        grouped.setdefault((pset.system, pset.variant), []).append((pset, result))
    summaries = []
    for (system, variant), runs in sorted(grouped.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        run_objs = tuple(
            metrics.Run(seed=pset.seed, score=result.value, annotator=pset.annotator)
            for pset, result in runs
        )
        summaries.append((system, variant, metrics.summarize_runs(
            system, variant, metric, run_objs, n_instances=runs[0][1].n_gold)))
    return summaries


def metric_for(dataset: Sequence[Instance]) -> str:
    return "accuracy_at_1" if dataset[0].task_kind is TaskKind.RETRIEVAL else "accuracy"


def load_scored_variant(path, variant: VariantKind, dataset: Sequence[Instance],
                        covered_only: bool, system_filter: Optional[str]):
    records = ingest.parse_predictions(path, dataset)
    records = [r for r in records if r.variant is variant]
    if system_filter:
        records = [r for r in records if r.system == system_filter]
    if not records:
        raise ValidationError(f"{path} has no {variant.value} predictions"
                              + (f" for system {system_filter!r}" if system_filter else ""))
    systems = sorted({r.system for r in records})
    if len(systems) > 1:
        raise ValidationError(f"{path} mixes systems {systems}; pass --system")
    sets = ingest.group_prediction_sets(records, dataset)
    gold = {inst.id: inst.gold for inst in dataset}
    return summarize_scored(score_sets(sets, gold, covered_only), metric_for(dataset))


# ---------------------------------------------------------------------------
# subcommands


def cmd_convert(args) -> int:
    fmt = args.format
    if fmt == "canonical_jsonl":
        instances = ingest.parse_canonical(args.input)
    elif fmt == "wic_tsv":
        if not args.gold:
            raise ValidationError("wic_tsv needs --gold with the T/F label file")
        instances = ingest.parse_wic_tsv(args.input, args.gold)
    elif fmt == "pair_jsonl":
        instances = ingest.parse_pair_jsonl(args.input)
    else:
        instances = ingest.parse_retrieval_jsonl(args.input)
    if not instances:
        print("warning: input contained no instances", file=sys.stderr)
    kinds = {inst.task_kind for inst in instances} or {TaskKind.PAIR_CLASSIFICATION}
    if len(kinds) > 1:
        raise ValidationError(f"input mixes task kinds: {sorted(k.value for k in kinds)}")
    ingest.write_canonical(instances, args.out)
    manifest = ingest.DatasetManifest(
        name=args.name or Path(args.input).stem,
        task_kind=next(iter(kinds)),
        languages=tuple((args.languages or "und").split(",")),
        split=args.split,
        source_format=fmt,
        n_instances=len(instances),
    )
    manifest_path = Path(str(args.out) + ".manifest.json")
    ws = workspace_dir(args)
    if ws.is_dir():
        for other in sorted(ws.glob("**/*.manifest.json")):
            if other.resolve() == manifest_path.resolve():
                continue
            existing = ingest.DatasetManifest.from_json(json.loads(other.read_text(encoding="utf-8")))
            if (existing.name, existing.split) == (manifest.name, manifest.split):
                raise ValidationError(
                    f"dataset {manifest.name!r} split {manifest.split!r} already exists at {other}")
    manifest_path.write_text(json.dumps(manifest.to_json(), ensure_ascii=False, indent=2) + "\n",
                             encoding="utf-8")
    print_table([[manifest.name, manifest.split, manifest.task_kind.value, len(instances), args.out]],
                ["name", "split", "task_kind", "n_instances", "path"])
    return 0


def _load_guesses(path) -> dict[str, list[str]]:
    guesses = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
                guesses[obj["instance_id"]] = list(obj["replacements"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"{path} line {lineno}: bad guess record ({exc})") from None
    return guesses


def cmd_perturb(args) -> int:
    dataset = ingest.parse_canonical(args.dataset)
    cfg = mask_config(args)
    variants = [VariantKind(v) for v in args.variants.split(",")] if args.variants != "all" \
        else [VariantKind.CONTEXT, VariantKind.WORD, VariantKind.LABEL]
    guesses = _load_guesses(args.guesses) if args.guesses else {}
    out_dir = Path(args.out_dir) if args.out_dir else workspace_dir(args) / "variants"
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    if args.emit_marked:
        marked_path = out_dir / "marked.tsv"
        with open(marked_path, "w", encoding="utf-8", newline="\n") as fh:
            for inst in dataset:
                fh.write("\t".join([inst.id, *perturb.mark_targets(inst, cfg)]) + "\n")
        rows.append(["marked", len(dataset), marked_path])
    for variant in variants:
        perturbed = []
        for inst in dataset:
            replacements = guesses.get(inst.id)
            if variant is VariantKind.GUESSED_WORD and replacements is None:
                raise ValidationError(f"no guessed replacements for instance {inst.id!r}")
            perturbed.append(perturb.apply_variant(inst, variant, cfg, replacements))
        path = out_dir / f"{variant.value}.jsonl"
        perturb.write_perturbed(perturbed, path)
        rows.append([variant.value, len(perturbed), path])
    print_table(rows, ["variant", "n_instances", "path"])
    return 0


def cmd_score(args) -> int:
    dataset = ingest.parse_canonical(args.gold)
    records = ingest.parse_predictions(args.predictions, dataset)
    sets = ingest.group_prediction_sets(records, dataset)
    gold = {inst.id: inst.gold for inst in dataset}
    scored = score_sets(sets, gold, args.covered_only)
    summaries = summarize_scored(scored, metric_for(dataset))
    rows = [
        [system, variant.value, s.metric, s.n_instances, len(s.runs), fmt6(s.mean), fmt6(s.std)]
        for system, variant, s in summaries
    ]
    if args.json:
        payload = _score_payload(args, scored, summaries)
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        print_table(rows, ["system", "variant", "metric", "n_instances", "n_runs", "mean", "std"])
    if args.json_out:
        payload = _score_payload(args, scored, summaries)
        Path(args.json_out).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                                       encoding="utf-8")
    return 0


def _score_payload(args, scored, summaries) -> dict:
    return {
        "dataset": args.dataset_name or Path(args.gold).stem,
        "runs": [
            {
                "system": pset.system, "variant": pset.variant.value,
                "seed": pset.seed, "annotator": pset.annotator,
                "score": result.value, "n_correct": result.n_correct,
                "n_scored": result.n_scored, "n_missing": result.n_missing,
                "n_gold": result.n_gold,
            }
            for pset, result in scored
        ],
        "summaries": [report.score_summary_to_json(s) for _, _, s in summaries],
    }


def cmd_bias(args) -> int:
    dataset = ingest.parse_canonical(args.gold)
    dataset_name = args.dataset_name or Path(args.gold).stem
    covered = args.covered_only
    summaries: dict[VariantKind, metrics.ScoreSummary] = {}
    paths = {VariantKind.FULL: args.full, VariantKind.CONTEXT: args.context,
             VariantKind.WORD: args.word, VariantKind.LABEL: args.label}
    for variant, path in paths.items():
        if path is None:
            continue
        entries = load_scored_variant(path, variant, dataset, covered, args.system)
        if len(entries) > 1:
            raise ValidationError(f"{path} yields multiple summaries; pass --system")
        summaries[variant] = entries[0][2]
    if VariantKind.LABEL not in summaries:
        system = next(iter(summaries.values())).system if summaries else "analytic"
        if args.label_score is not None:
            m_l = args.label_score
            provenance = "constant"
        elif args.label_from_train:
            train = ingest.parse_canonical(args.label_from_train)
            m_l = perturb.analytic_label_baseline(train, dataset)
            provenance = "analytic majority"
        else:
            raise ValidationError("provide --label predictions, --label-score or --label-from-train")
        summaries[VariantKind.LABEL] = metrics.summarize_runs(
            system, VariantKind.LABEL, metric_for(dataset),
            (metrics.Run(seed=None, score=m_l, annotator=provenance),), len(dataset))
    bias_report = metrics.build_bias_report(summaries, dataset_name, lenient=args.lenient)
    row = [bias_report.dataset, bias_report.system,
           fmt6(bias_report.bias_c) if bias_report.bias_c is not None else "-",
           fmt6(bias_report.bias_w) if bias_report.bias_w is not None else "-",
           fmt6(bias_report.min_gap) if bias_report.min_gap is not None else "-",
           ",".join(sorted(bias_report.flags)) or "-"]
    payload = {
        "dataset": dataset_name,
        "bias_report": report.bias_report_to_json(bias_report),
        "summaries": [report.score_summary_to_json(s) for s in summaries.values()],
    }
    if args.json:
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        print_table([row], ["dataset", "system", "bias_c", "bias_w", "min_gap", "flags"])
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                                       encoding="utf-8")
    return 0


def cmd_entropy(args) -> int:
    dataset = ingest.parse_canonical(args.dataset)
    if args.kind == "label":
        result = metrics.label_entropy(dataset, min_count=args.min_count)
    else:
        result = metrics.sense_entropy(dataset)
    rows = [
        [word, s.count, fmt6(s.entropy_bits), fmt6(s.majority_proportion), s.majority_label]
        for word, s in result.per_word.items()
    ]
    payload = {"dataset": args.dataset_name or Path(args.dataset).stem,
               "report": report.entropy_report_to_json(result)}
    if args.json:
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        print_table(rows, ["word_key", "count", "entropy_bits", "majority_proportion",
                           "majority_label"])
        print_table([[result.kind, fmt6(result.average), fmt6(result.weighted_average),
                      fmt6(result.majority_proportion_overall), result.n_words_included,
                      result.n_words_discarded]],
                    ["kind", "average_bits", "weighted_average_bits", "majority_proportion",
                     "n_included", "n_discarded"])
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                                       encoding="utf-8")
    return 0


def cmd_sample(args) -> int:
    dataset = ingest.parse_canonical(args.dataset)
    annotators = tuple(args.annotators.split(","))
    if len(annotators) != 2:
        raise ValidationError("--annotators expects two comma-separated names")
    batch_a, batch_b = sample_batches(
        dataset, VariantKind(args.variant),
        n_per_annotator=args.n, overlap=args.overlap, seed=args.seed,
        annotators=annotators, dataset_name=args.dataset_name or Path(args.dataset).stem,
        created_at=args.timestamp,
    )
    store = BatchStore(args.store or workspace_dir(args) / "batches")
    store.create_batch(batch_a)
    store.create_batch(batch_b)
    print_table(
        [[b.batch_id, b.annotator, b.variant.value, len(b.instance_ids), len(b.overlap_ids)]
         for b in (batch_a, batch_b)],
        ["batch_id", "annotator", "variant", "n_instances", "n_overlap"])
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .humankit.service import create_app

    dataset = ingest.parse_canonical(args.dataset)
    inventory = []
    if args.inventory:
        inventory = [line.strip() for line in
                     Path(args.inventory).read_text(encoding="utf-8").splitlines() if line.strip()]
    store = BatchStore(args.store or workspace_dir(args) / "batches")
    app = create_app(store, dataset, mask_config(args),
                     dataset_name=args.dataset_name or Path(args.dataset).stem,
                     inventory=inventory, shortlist_k=args.shortlist_k)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _labels_from_file(path) -> dict[str, str]:
    records = ingest.parse_predictions(path)
    labels: dict[str, str] = {}
    for r in records:
        labels[r.instance_id] = r.prediction
    return labels


def cmd_agree(args) -> int:
    if args.batch:
        if len(args.batch) != 2:
            raise ValidationError("--batch must be given exactly twice")
        store = BatchStore(args.store or workspace_dir(args) / "batches")
        maps = []
        overlaps = []
        for batch_id in args.batch:
            try:
                batch = store.load_batch(batch_id)
            except KeyError:
                raise ValidationError(f"unknown batch {batch_id!r}") from None
            judged = store.judgments(batch_id)
            maps.append({iid: j.prediction for iid, j in judged.items()})
            overlaps.append(set(batch.overlap_ids))
        if overlaps[0] != overlaps[1]:
            raise ValidationError("batches do not share an overlap set; are they siblings?")
        ids = overlaps[0]
        value = metrics.agreement(maps[0], maps[1], ids)
    else:
        if not (args.a and args.b):
            raise ValidationError("pass either --batch twice or both --a and --b")
        map_a = _labels_from_file(args.a)
        map_b = _labels_from_file(args.b)
        if args.ids:
            ids = {line.strip() for line in
                   Path(args.ids).read_text(encoding="utf-8").splitlines() if line.strip()}
        else:
            ids = set(map_a) & set(map_b)
        value = metrics.agreement(map_a, map_b, ids)
    if args.json:
        print(json.dumps({"n_ids": len(ids), "agreement": value}))
    else:
        print_table([[len(ids), f"{value:.1f}"]], ["n_ids", "agreement_pct"])
    return 0


def cmd_synth(args) -> int:
    spec = synthkit.SynthSpec(
        n_words=args.n_words,
        examples_per_word=args.examples_per_word,
        task_kind=TaskKind(args.task),
        label_determinism=args.p,
        context_informativeness=args.q,
        seed=args.seed,
        senses_per_word=args.senses,
    )
    train, test = synthkit.generate(spec)
    out_dir = Path(args.out_dir) if args.out_dir else workspace_dir(args) / "synth"
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    ingest.write_canonical(train, out_dir / "train.jsonl")
    ingest.write_canonical(test, out_dir / "test.jsonl")
    rows.append(["train", len(train), out_dir / "train.jsonl"])
    rows.append(["test", len(test), out_dir / "test.jsonl"])
    cfg = mask_config(args)
    variants = [VariantKind.FULL, VariantKind.CONTEXT, VariantKind.WORD, VariantKind.LABEL]
    if args.emit_variants or args.policy:
        for variant in variants:
            perturbed = [perturb.apply_variant(inst, variant, cfg) for inst in test]
            if args.emit_variants and variant is not VariantKind.FULL:
                path = out_dir / f"{variant.value}.jsonl"
                perturb.write_perturbed(perturbed, path)
                rows.append([variant.value, len(perturbed), path])
            if args.policy:
                pset = synthkit.simulate(synthkit.PredictorPolicy(args.policy), train,
                                         perturbed, seed=args.seed)
                records = [
                    ingest.PredictionRecord(
                        instance_id=iid, system=pset.system, variant=variant,
                        prediction=label.value, seed=args.seed)
                    for iid, label in pset.labels.items()
                ]
                path = out_dir / f"preds_{variant.value}.jsonl"
                ingest.write_predictions(records, path)
                rows.append([f"preds_{variant.value}", len(records), path])
    print_table(rows, ["artifact", "n", "path"])
    return 0


def cmd_report(args) -> int:
    bias_reports = []
    score_tables = []
    entropy_entries = []
    inputs: dict[str, str] = {}
    for path in args.analysis or []:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        inputs[str(path)] = sha256_file(path)
        bias_reports.append(report.bias_report_from_json(obj["bias_report"]))
        score_tables.append(report.ScoreTable(
            obj["dataset"],
            tuple(report.score_summary_from_json(s) for s in obj["summaries"])))
    for path in args.entropy or []:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        inputs[str(path)] = sha256_file(path)
        entropy_entries.append(report.EntropyEntry(
            obj["dataset"], report.entropy_report_from_json(obj["report"])))
    if not (bias_reports or score_tables or entropy_entries):
        raise ValidationError("nothing to report; pass --analysis and/or --entropy files")
    metadata = {"toolkit_version": report.TOOLKIT_VERSION, "inputs": inputs}
    if args.timestamp:
        metadata["generated_at"] = args.timestamp
    bundle = report.ReportBundle(
        bias_reports=tuple(bias_reports),
        score_tables=tuple(score_tables),
        entropy_reports=tuple(entropy_entries),
        metadata=metadata,
    )
    out_dir = Path(args.out_dir) if args.out_dir else workspace_dir(args) / "report"
    out_dir.mkdir(parents=True, exist_ok=True)
    shade = float(_setting(args, "shade_threshold", 0.8))
    line = float(_setting(args, "line_threshold", 1.0))
    rows = []
    plottable = [r for r in bundle.bias_reports if r.bias_c is not None and r.bias_w is not None]
    if plottable:
        (out_dir / "bias_scatter.svg").write_text(
            report.bias_scatter(bundle, shade_threshold=shade, line_threshold=line),
            encoding="utf-8")
        rows.append(["bias_scatter", out_dir / "bias_scatter.svg"])
    if bundle.score_tables:
        (out_dir / "baseline_bars.svg").write_text(report.baseline_bars(bundle.score_tables),
                                                   encoding="utf-8")
        rows.append(["baseline_bars", out_dir / "baseline_bars.svg"])
        try:
            (out_dir / "gap_chart.svg").write_text(report.gap_chart(bundle.score_tables),
                                                   encoding="utf-8")
            rows.append(["gap_chart", out_dir / "gap_chart.svg"])
        except ValidationError as exc:
            print(f"skipping gap chart: {exc}", file=sys.stderr)
    report.write_summary(bundle, out_dir / "summary.json", out_dir / "summary.md")
    rows.append(["summary", out_dir / "summary.json"])
    rows.append(["digest", bundle.digest()])
    print_table(rows, ["artifact", "path"])
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexbias",
        description="Quantify context and target-word bias in lexical semantic datasets.",
    )
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--workspace", help="base directory for default outputs "
                                            "(env: LEXBIAS_WORKSPACE)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="parse a source format into canonical JSONL")
    p.add_argument("--input", required=True)
    p.add_argument("--format", required=True,
                   choices=["canonical_jsonl", "wic_tsv", "pair_jsonl", "retrieval_jsonl"])
    p.add_argument("--gold", help="gold label file (wic_tsv only)")
    p.add_argument("--out", required=True)
    p.add_argument("--name")
    p.add_argument("--split", default="test", choices=["train", "dev", "test"])
    p.add_argument("--languages", help="comma-separated BCP-47 tags")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("perturb", help="emit probing-baseline variants")
    p.add_argument("--dataset", required=True)
    p.add_argument("--variants", default="all",
                   help="comma-separated subset of context,word,label,guessed_word or 'all'")
    p.add_argument("--guesses", help="JSONL of {instance_id, replacements} for guessed_word")
    p.add_argument("--emit-marked", action="store_true",
                   help="also export marked.tsv with targets wrapped in the span markers")
    p.add_argument("--out-dir")
    p.add_argument("--mask-token")
    p.add_argument("--markers", help="span markers as OPEN,CLOSE (default: [,])")
    p.add_argument("--context-mask-per-token", action="store_true",
                   help="one mask per span token instead of one per span")
    p.add_argument("--label-single-mask", action="store_true",
                   help="collapse fully-masked input to a single mask token")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("score", help="score a prediction file against gold")
    p.add_argument("--predictions", required=True)
    p.add_argument("--gold", required=True, help="canonical dataset JSONL")
    p.add_argument("--dataset-name")
    p.add_argument("--covered-only", action="store_true",
                   help="score only the ids the prediction file covers")
    p.add_argument("--json", action="store_true")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("bias", help="bias ratios from per-variant prediction files")
    p.add_argument("--full", required=True)
    p.add_argument("--context")
    p.add_argument("--word")
    p.add_argument("--label")
    p.add_argument("--label-score", type=float, help="analytic label-baseline score")
    p.add_argument("--label-from-train", help="train JSONL for the analytic majority baseline")
    p.add_argument("--gold", required=True)
    p.add_argument("--dataset-name")
    p.add_argument("--system", help="restrict to one system when files mix several")
    p.add_argument("--covered-only", action="store_true")
    p.add_argument("--lenient", action="store_true",
                   help="flag a degenerate denominator instead of failing")
    p.add_argument("--json", action="store_true")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("entropy", help="per-word label or sense entropy")
    p.add_argument("--dataset", required=True)
    p.add_argument("--kind", required=True, choices=["label", "sense"])
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--dataset-name")
    p.add_argument("--json", action="store_true")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("sample", help="draw two annotation batches with overlap")
    p.add_argument("--dataset", required=True)
    p.add_argument("--variant", required=True, choices=["full", "context", "word"])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--overlap", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--annotators", default="annotator-a,annotator-b")
    p.add_argument("--dataset-name")
    p.add_argument("--store", help="batch journal directory")
    p.add_argument("--timestamp", help="ISO timestamp recorded on the batches")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--dataset", required=True)
    p.add_argument("--store")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--mask-token")
    p.add_argument("--markers", help="span markers as OPEN,CLOSE (default: [,])")
    p.add_argument("--dataset-name")
    p.add_argument("--inventory", help="one candidate id per line (retrieval shortlists)")
    p.add_argument("--shortlist-k", type=int, default=10)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("agree", help="percent agreement on an overlap set")
    p.add_argument("--store")
    p.add_argument("--batch", action="append", help="batch id (pass twice)")
    p.add_argument("--a", help="prediction JSONL for annotator A")
    p.add_argument("--b", help="prediction JSONL for annotator B")
    p.add_argument("--ids", help="file of ids to compare (default: intersection)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("synth", help="generate planted-bias synthetic data")
    p.add_argument("--n-words", type=int, required=True)
    p.add_argument("--examples-per-word", type=int, required=True)
    p.add_argument("--task", default="pair_classification",
                   choices=[k.value for k in TaskKind])
    p.add_argument("--p", type=float, default=1.0, help="label determinism in [0.5, 1]")
    p.add_argument("--q", type=float, default=0.0, help="context informativeness in [0, 1]")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--senses", type=int, default=2)
    p.add_argument("--out-dir")
    p.add_argument("--emit-variants", action="store_true")
    p.add_argument("--policy", choices=[p.value for p in synthkit.PredictorPolicy],
                   help="also simulate this policy over every variant")
    p.add_argument("--mask-token")
    p.add_argument("--markers", help="span markers as OPEN,CLOSE (default: [,])")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="render SVG plots and the summary files")
    p.add_argument("--analysis", action="append", help="JSON from `lexbias bias --json-out`")
    p.add_argument("--entropy", action="append", help="JSON from `lexbias entropy --json-out`")
    p.add_argument("--out-dir")
    p.add_argument("--shade-threshold", type=float)
    p.add_argument("--line-threshold", type=float)
    p.add_argument("--timestamp", help="ISO timestamp recorded in the summary metadata")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args._config = read_config(args.config) if args.config else {}
        return args.func(args)
    except (LexbiasError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
