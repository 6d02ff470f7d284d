"""Render analysis outputs: bias scatter, baseline bars, gap chart (SVG 1.1)
and the machine-readable summary (versioned JSON plus a markdown digest)."""
from __future__ import annotations

import hashlib
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Optional, Sequence

from .types import (
    BiasReport,
    EntropyReport,
    Run,
    ScoreSummary,
    TOOLKIT_VERSION,
    ValidationError,
    VariantKind,
    WordEntropy,
)

SCHEMA_VERSION = 1

SVG_NS = "http://www.w3.org/2000/svg"

# System colors follow first appearance; models first, humans second by convention.
PALETTE = ("#111111", "#2563c9", "#0a9d58", "#d34f0e", "#8e44ad", "#0e7d8a")
VARIANT_COLORS = {
    VariantKind.FULL: "#4c4c4c",
    VariantKind.CONTEXT: "#e8b931",
    VariantKind.WORD: "#3f8f3f",
    VariantKind.LABEL: "#b0b0b0",
    VariantKind.GUESSED_WORD: "#7a5db8",
}
VARIANT_ORDER = (VariantKind.FULL, VariantKind.CONTEXT, VariantKind.WORD,
                 VariantKind.LABEL, VariantKind.GUESSED_WORD)


def round_half_up(value: float, digits: int) -> Decimal:
    """Decimal rounding, halves away from zero (3.5 -> 4, -3.5 -> -4)."""
    q = Decimal(1).scaleb(-digits)
    return Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP)


def fmt_bias(value: float) -> str:
    """Bias ratios render with 3 decimals, half-up."""
    return str(round_half_up(value, 3))


def fmt_pct(fraction: float) -> str:
    """Score fractions render x100 with 1 decimal, half-up."""
    return str((Decimal(repr(fraction)) * 100).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ScoreTable:
    dataset: str
    summaries: tuple[ScoreSummary, ...]


@dataclass(frozen=True)
class EntropyEntry:
    dataset: str
    report: EntropyReport


@dataclass(frozen=True)
class ReportBundle:
    """Everything a report needs; every plotted point traces back to a member."""

    bias_reports: tuple[BiasReport, ...] = ()
    score_tables: tuple[ScoreTable, ...] = ()
    entropy_reports: tuple[EntropyEntry, ...] = ()
    metadata: Mapping[str, object] = field(default_factory=dict)

    def digest(self) -> str:
        return hashlib.sha256(summary_json(self).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# JSON (de)serialization for the summary schema


def score_summary_to_json(s: ScoreSummary) -> dict:
    return {
        "system": s.system,
        "variant": s.variant.value,
        "metric": s.metric,
        "mean": s.mean,
        "std": s.std,
        "n_instances": s.n_instances,
        "runs": [{"seed": r.seed, "annotator": r.annotator, "score": r.score} for r in s.runs],
    }


def score_summary_from_json(obj: dict) -> ScoreSummary:
    return ScoreSummary(
        system=obj["system"],
        variant=VariantKind(obj["variant"]),
        metric=obj["metric"],
        runs=tuple(Run(seed=r.get("seed"), score=r["score"], annotator=r.get("annotator"))
                   for r in obj["runs"]),
        mean=obj["mean"],
        std=obj["std"],
        n_instances=obj["n_instances"],
    )


def bias_report_to_json(r: BiasReport) -> dict:
    return {
        "dataset": r.dataset,
        "system": r.system,
        "bias_c": r.bias_c,
        "bias_w": r.bias_w,
        "min_gap": r.min_gap,
        "flags": sorted(r.flags),
    }


def bias_report_from_json(obj: dict) -> BiasReport:
    return BiasReport(
        dataset=obj["dataset"],
        system=obj["system"],
        bias_c=obj["bias_c"],
        bias_w=obj["bias_w"],
        min_gap=obj["min_gap"],
        flags=frozenset(obj["flags"]),
    )


def entropy_report_to_json(r: EntropyReport) -> dict:
    return {
        "kind": r.kind,
        "average": r.average,
        "weighted_average": r.weighted_average,
        "majority_proportion_overall": r.majority_proportion_overall,
        "n_words_included": r.n_words_included,
        "n_words_discarded": r.n_words_discarded,
        "per_word": {
            word: {
                "count": s.count,
                "entropy_bits": s.entropy_bits,
                "majority_proportion": s.majority_proportion,
                "majority_label": s.majority_label,
            }
            for word, s in r.per_word.items()
        },
    }


def entropy_report_from_json(obj: dict) -> EntropyReport:
    return EntropyReport(
        kind=obj["kind"],
        per_word={
            word: WordEntropy(
                count=s["count"],
                entropy_bits=s["entropy_bits"],
                majority_proportion=s["majority_proportion"],
                majority_label=s["majority_label"],
            )
            for word, s in obj["per_word"].items()
        },
        average=obj["average"],
        n_words_included=obj["n_words_included"],
        n_words_discarded=obj["n_words_discarded"],
        majority_proportion_overall=obj["majority_proportion_overall"],
        weighted_average=obj["weighted_average"],
    )


def bundle_to_json(bundle: ReportBundle) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "metadata": dict(bundle.metadata) or {"toolkit_version": TOOLKIT_VERSION},
        "bias_reports": [bias_report_to_json(r) for r in bundle.bias_reports],
        "score_tables": [
            {"dataset": t.dataset, "summaries": [score_summary_to_json(s) for s in t.summaries]}
            for t in bundle.score_tables
        ],
        "entropy_reports": [
            {"dataset": e.dataset, "report": entropy_report_to_json(e.report)}
            for e in bundle.entropy_reports
        ],
    }


def bundle_from_json(obj: dict) -> ReportBundle:
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"unsupported summary schema version {obj.get('schema_version')!r}")
    return ReportBundle(
        bias_reports=tuple(bias_report_from_json(r) for r in obj["bias_reports"]),
        score_tables=tuple(
            ScoreTable(t["dataset"], tuple(score_summary_from_json(s) for s in t["summaries"]))
            for t in obj["score_tables"]
        ),
        entropy_reports=tuple(
            EntropyEntry(e["dataset"], entropy_report_from_json(e["report"]))
            for e in obj["entropy_reports"]
        ),
        metadata=obj.get("metadata", {}),
    )


def summary_json(bundle: ReportBundle) -> str:
    return json.dumps(bundle_to_json(bundle), ensure_ascii=False, indent=2) + "\n"


def summary_markdown(bundle: ReportBundle) -> str:
    """Digest table: one row per (dataset, system) joining scores and biases."""
    scores: dict[tuple[str, str], dict[VariantKind, float]] = {}
    for table in bundle.score_tables:
        for s in table.summaries:
            scores.setdefault((table.dataset, s.system), {})[s.variant] = s.mean
    rows = []
    seen = set()
    for r in bundle.bias_reports:
        key = (r.dataset, r.system)
        seen.add(key)
        means = scores.get(key, {})
        rows.append((r.dataset, r.system, means, r))
    for key, means in scores.items():
        if key not in seen:
            rows.append((key[0], key[1], means, None))

    def pct(means: dict, variant: VariantKind) -> str:
        return fmt_pct(means[variant]) if variant in means else "-"

    lines = [
        "| dataset | system | Full | Context | Word | Label | Bias_C | Bias_W | min-gap |",
        "| --- | --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for dataset, system, means, r in rows:
        bias_c = fmt_bias(r.bias_c) if r and r.bias_c is not None else "-"
        bias_w = fmt_bias(r.bias_w) if r and r.bias_w is not None else "-"
        gap = fmt_pct(r.min_gap) if r and r.min_gap is not None else "-"
        lines.append(
            f"| {dataset} | {system} | {pct(means, VariantKind.FULL)} "
            f"| {pct(means, VariantKind.CONTEXT)} | {pct(means, VariantKind.WORD)} "
            f"| {pct(means, VariantKind.LABEL)} | {bias_c} | {bias_w} | {gap} |"
        )
    return "\n".join(lines) + "\n"


def write_summary(bundle: ReportBundle, json_path, md_path=None) -> None:
    """JSON is the source of truth; the markdown digest sits alongside it."""
    json_path = str(json_path)
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary_json(bundle))
    if md_path is None:
        md_path = json_path[:-5] + ".md" if json_path.endswith(".json") else json_path + ".md"
    with open(md_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary_markdown(bundle))


# ---------------------------------------------------------------------------
# SVG rendering


def _svg_root(width: int, height: int, title: str) -> ET.Element:
    root = ET.Element("svg", {
        "xmlns": SVG_NS,
        "version": "1.1",
        "width": str(width),
        "height": str(height),
        "viewBox": f"0 0 {width} {height}",
    })
    t = ET.SubElement(root, "title")
    t.text = title
    return root


def _text(parent: ET.Element, x: float, y: float, content: str, cls: str,
          anchor: str = "middle", size: int = 11, extra: Optional[dict] = None) -> ET.Element:
    attrs = {
        "x": f"{x:.1f}", "y": f"{y:.1f}", "class": cls,
        "text-anchor": anchor, "font-size": str(size), "font-family": "sans-serif",
    }
    if extra:
        attrs.update(extra)
    el = ET.SubElement(parent, "text", attrs)
    el.text = content
    return el


def _to_svg(root: ET.Element) -> str:
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def _systems_in_order(reports: Sequence[BiasReport]) -> list[str]:
    ordered = []
    for r in reports:
        if r.system not in ordered:
            ordered.append(r.system)
    return ordered


def bias_scatter(bundle: ReportBundle,
                 shade_threshold: float = 0.8,
                 line_threshold: float = 1.0) -> str:
    """Scatter of context bias (x) vs target word bias (y), one labeled point
    per (dataset, system); shaded high-bias bands and dashed reference lines.
    Axes expand to cover points beyond 1.0 rather than clipping them."""
    points = [r for r in bundle.bias_reports if r.bias_c is not None and r.bias_w is not None]
    if not points:
        raise ValidationError("no bias reports with both bias_c and bias_w to plot")

    width, height = 640, 500
    ml, mr, mt, mb = 70, 30, 40, 60
    lo_x = min(0.0, min(r.bias_c for r in points) - 0.05)
    hi_x = max(1.1, max(r.bias_c for r in points) + 0.05)
    lo_y = min(0.0, min(r.bias_w for r in points) - 0.05)
    hi_y = max(1.1, max(r.bias_w for r in points) + 0.05)

    def sx(v: float) -> float:
        return ml + (v - lo_x) / (hi_x - lo_x) * (width - ml - mr)

    def sy(v: float) -> float:
        return height - mb - (v - lo_y) / (hi_y - lo_y) * (height - mt - mb)

    root = _svg_root(width, height, "Context bias vs target word bias")

    # High-bias bands: right of the x threshold, above the y threshold.
    ET.SubElement(root, "rect", {
        "class": "shade-region", "data-axis": "x", "data-threshold": repr(shade_threshold),
        "x": f"{sx(shade_threshold):.1f}", "y": f"{mt:.1f}",
        "width": f"{sx(hi_x) - sx(shade_threshold):.1f}", "height": f"{height - mt - mb:.1f}",
        "fill": "#e8c54a", "fill-opacity": "0.25",
    })
    ET.SubElement(root, "rect", {
        "class": "shade-region", "data-axis": "y", "data-threshold": repr(shade_threshold),
        "x": f"{ml:.1f}", "y": f"{sy(hi_y):.1f}",
        "width": f"{width - ml - mr:.1f}", "height": f"{sy(shade_threshold) - sy(hi_y):.1f}",
        "fill": "#63b56a", "fill-opacity": "0.25",
    })

    # Axes and ticks.
    axis_attrs = {"stroke": "#333333", "stroke-width": "1"}
    ET.SubElement(root, "line", {"class": "axis", "x1": f"{ml}", "y1": f"{height - mb}",
                                 "x2": f"{width - mr}", "y2": f"{height - mb}", **axis_attrs})
    ET.SubElement(root, "line", {"class": "axis", "x1": f"{ml}", "y1": f"{mt}",
                                 "x2": f"{ml}", "y2": f"{height - mb}", **axis_attrs})
    tick = lo_x - (lo_x % 0.2)
    while tick <= hi_x + 1e-9:
        if tick >= lo_x - 1e-9:
            _text(root, sx(tick), height - mb + 16, f"{tick:.1f}", "tick-label")
        tick = round(tick + 0.2, 10)
    tick = lo_y - (lo_y % 0.2)
    while tick <= hi_y + 1e-9:
        if tick >= lo_y - 1e-9:
            _text(root, ml - 8, sy(tick) + 4, f"{tick:.1f}", "tick-label", anchor="end")
        tick = round(tick + 0.2, 10)
    _text(root, (ml + width - mr) / 2, height - 14, "context bias", "axis-label", size=13)
    _text(root, 16, (mt + height - mb) / 2, "target word bias", "axis-label", size=13,
          extra={"transform": f"rotate(-90 16 {(mt + height - mb) / 2:.1f})"})

    # Dashed reference lines at full reliance on context (vertical) or word (horizontal).
    ET.SubElement(root, "line", {
        "class": "ref-line", "data-axis": "x", "data-value": repr(line_threshold),
        "x1": f"{sx(line_threshold):.1f}", "y1": f"{mt}",
        "x2": f"{sx(line_threshold):.1f}", "y2": f"{height - mb}",
        "stroke": "#cc2222", "stroke-width": "1.5", "stroke-dasharray": "6,4",
    })
    ET.SubElement(root, "line", {
        "class": "ref-line", "data-axis": "y", "data-value": repr(line_threshold),
        "x1": f"{ml}", "y1": f"{sy(line_threshold):.1f}",
        "x2": f"{width - mr}", "y2": f"{sy(line_threshold):.1f}",
        "stroke": "#cc2222", "stroke-width": "1.5", "stroke-dasharray": "6,4",
    })

    systems = _systems_in_order(points)
    colors = {s: PALETTE[i % len(PALETTE)] for i, s in enumerate(systems)}
    for r in points:
        ET.SubElement(root, "circle", {
            "class": "bias-point",
            "data-dataset": r.dataset,
            "data-system": r.system,
            "data-bias-c": fmt_bias(r.bias_c),
            "data-bias-w": fmt_bias(r.bias_w),
            "cx": f"{sx(r.bias_c):.1f}", "cy": f"{sy(r.bias_w):.1f}", "r": "5",
            "fill": colors[r.system],
        })
        _text(root, sx(r.bias_c) + 8, sy(r.bias_w) - 6, r.dataset, "point-label", anchor="start")
    for i, system in enumerate(systems):
        y = mt + 14 + 16 * i
        ET.SubElement(root, "circle", {"class": "legend-dot", "cx": f"{width - mr - 130}",
                                       "cy": f"{y - 4}", "r": "5", "fill": colors[system]})
        _text(root, width - mr - 120, y, system, "legend-entry", anchor="start",
              extra={"data-system": system})
    return _to_svg(root)


def _grouped_bars(title: str, groups: Sequence[tuple[str, list[tuple[str, float, dict]]]],
                  bar_class: str, y_label: str, lo: float, hi: float) -> str:
    """Shared layout for bar charts: groups on x, value zero line, labels above bars."""
    width = max(420, 90 + 110 * len(groups))
    height = 420
    ml, mr, mt, mb = 60, 20, 40, 80
    span = hi - lo or 1.0

    def sy(v: float) -> float:
        return height - mb - (v - lo) / span * (height - mt - mb)

    root = _svg_root(width, height, title)
    ET.SubElement(root, "line", {"class": "axis", "x1": f"{ml}", "y1": f"{sy(0):.1f}",
                                 "x2": f"{width - mr}", "y2": f"{sy(0):.1f}",
                                 "stroke": "#333333", "stroke-width": "1"})
    _text(root, 18, (mt + height - mb) / 2, y_label, "axis-label", size=13,
          extra={"transform": f"rotate(-90 18 {(mt + height - mb) / 2:.1f})"})
    group_width = (width - ml - mr) / max(1, len(groups))
    for gi, (group_label, bars) in enumerate(groups):
        gx = ml + gi * group_width
        slot = group_width / (len(bars) + 1)
        for bi, (label, value, extra) in enumerate(bars):
            x = gx + slot * (bi + 0.5)
            y0, y1 = sy(0), sy(value)
            top = min(y0, y1)
            attrs = {
                "class": bar_class,
                "x": f"{x:.1f}", "y": f"{top:.1f}",
                "width": f"{slot * 0.8:.1f}", "height": f"{abs(y0 - y1):.1f}",
            }
            attrs.update(extra)
            ET.SubElement(root, "rect", attrs)
            label_y = top - 4 if value >= 0 else max(y0, y1) + 12
            _text(root, x + slot * 0.4, label_y, extra.get("data-value", label),
                  "bar-label", size=10)
        _text(root, gx + group_width / 2, height - mb + 18, group_label, "group-label")
    return _to_svg(root)


def baseline_bars(score_tables: Sequence[ScoreTable]) -> str:
    """Grouped per (dataset, system) bars of mean scores per variant, labeled x100."""
    if not score_tables:
        raise ValidationError("no score tables to plot")
    groups = []
    hi = 0.0
    for table in score_tables:
        by_system: dict[str, dict[VariantKind, ScoreSummary]] = {}
        for s in table.summaries:
            by_system.setdefault(s.system, {})[s.variant] = s
        for system, by_variant in by_system.items():
            bars = []
            for variant in VARIANT_ORDER:
                if variant not in by_variant:
                    continue
                mean = by_variant[variant].mean
                hi = max(hi, mean)
                bars.append((variant.value, mean, {
                    "data-dataset": table.dataset,
                    "data-system": system,
                    "data-variant": variant.value,
                    "data-value": fmt_pct(mean),
                    "fill": VARIANT_COLORS[variant],
                }))
            if bars:
                groups.append((f"{table.dataset}/{system}", bars))
    if not groups:
        raise ValidationError("no scores to plot")
    return _grouped_bars("Probing baseline scores", groups, "bar", "score x100",
                         lo=0.0, hi=max(hi, 1.0))


def gap_chart(score_tables: Sequence[ScoreTable]) -> str:
    """Bars of min(full-context, full-word) per dataset and system; negative
    gaps extend below the zero line."""
    if not score_tables:
        raise ValidationError("no score tables to plot")
    groups = []
    lo, hi = 0.0, 0.0
    for table in score_tables:
        by_system: dict[str, dict[VariantKind, ScoreSummary]] = {}
        for s in table.summaries:
            by_system.setdefault(s.system, {})[s.variant] = s
        bars = []
        for system, by_variant in sorted(by_system.items()):
            missing = [v.value for v in (VariantKind.FULL, VariantKind.CONTEXT, VariantKind.WORD)
                       if v not in by_variant]
            if missing:
                raise ValidationError(
                    f"gap chart needs full/context/word for {table.dataset}/{system}; "
                    f"missing {', '.join(missing)}")
            gap = min(by_variant[VariantKind.FULL].mean - by_variant[VariantKind.CONTEXT].mean,
                      by_variant[VariantKind.FULL].mean - by_variant[VariantKind.WORD].mean)
            lo, hi = min(lo, gap), max(hi, gap)
            bars.append((system, gap, {
                "data-dataset": table.dataset,
                "data-system": system,
                "data-value": fmt_pct(gap),
                "fill": PALETTE[len(bars) % len(PALETTE)],
            }))
        groups.append((table.dataset, bars))
    return _grouped_bars("Minimum full-to-baseline gap", groups, "gap-bar", "min gap x100",
                         lo=lo - 0.02, hi=max(hi + 0.02, 0.1))
