"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them)."""
import functools
import json
import random
import time
import xml.etree.ElementTree as ET
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lexbias.humankit import sample_batches
from lexbias.ingest import (
    ParseError,
    parse_canonical,
    parse_predictions,
    parse_wic_tsv,
    write_canonical,
)
from lexbias.metrics import (
    accuracy,
    agreement,
    bias_score,
    build_bias_report,
    label_entropy,
    summarize_runs,
)
from lexbias.perturb import make_context_variant, make_label_variant, make_word_variant, \
    mark_targets, substitute_target
from lexbias.report import ReportBundle, bias_scatter, bundle_from_json, summary_json
from lexbias.synthkit import PredictorPolicy, SynthSpec, generate, measure_policy_bias
from lexbias.types import (
    BiasReport,
    DegenerateDenominatorError,
    Instance,
    Label,
    Run,
    Segment,
    TaskKind,
    VariantKind,
)

from conftest import pair, single


def criterion(label):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL  {label}")
                raise
            print(f"PASS  {label}")
            return result
        return wrapper
    return decorate


T, F = Label.binary("T"), Label.binary("F")


# ---------------------------------------------------------------------------
# 1. bias ratio arithmetic on the published score table


@criterion("bias arithmetic: model and human rows reproduce to 1e-9")
def test_bias_ratio_arithmetic():
    assert abs(bias_score(66, 50, 71) - float(Fraction(16, 21))) <= 1e-9
    assert abs(bias_score(61, 50, 71) - float(Fraction(11, 21))) <= 1e-9
    assert abs(bias_score(69, 50, 87.9) - float(Fraction(190, 379))) <= 1e-9
    assert abs(bias_score(68.5, 50, 87.9) - float(Fraction(185, 379))) <= 1e-9
    assert f"{bias_score(66, 50, 71):.6f}" == "0.761905"
    assert f"{bias_score(61, 50, 71):.6f}" == "0.523810"
    assert f"{bias_score(69, 50, 87.9):.6f}" == "0.501319"
    assert f"{bias_score(68.5, 50, 87.9):.6f}" == "0.488127"


# ---------------------------------------------------------------------------
# 2. min gap


@criterion("min gap: human 18.9 and model 5.0")
def test_min_gap_values():
    from lexbias.metrics import min_gap
    assert abs(min_gap(87.9, 69, 68.5) - 18.9) <= 1e-9
    assert min_gap(71, 66, 61) == 5.0


# ---------------------------------------------------------------------------
# 3. degenerate and boundary handling


def _summary(variant, mean, system="sys"):
    return summarize_runs(system, variant, "accuracy", (Run(seed=1, score=mean),), 1)


@criterion("bias boundaries: >1 flagged, anchors exact, degenerate raises, affine-invariant")
def test_degenerate_and_boundary_handling():
    flagged = build_bias_report({
        VariantKind.FULL: _summary(VariantKind.FULL, 0.50),
        VariantKind.WORD: _summary(VariantKind.WORD, 0.51),
        VariantKind.LABEL: _summary(VariantKind.LABEL, 0.0),
    }, "d")
    assert flagged.bias_w == pytest.approx(1.02, abs=1e-12)
    assert "exceeds_one_w" in flagged.flags

    rng = random.Random(20240817)
    for _ in range(2000):
        m_l = rng.uniform(0, 1)
        m_full = rng.uniform(0, 1)
        m_x = rng.uniform(0, 1)
        if abs(m_full - m_l) <= 1e-9:
            with pytest.raises(DegenerateDenominatorError):
                bias_score(m_x, m_l, m_full)
            continue
        value = bias_score(m_x, m_l, m_full)
        assert value == pytest.approx((m_x - m_l) / (m_full - m_l), abs=1e-12)
        assert bias_score(m_l, m_l, m_full) == 0.0
        assert bias_score(m_full, m_l, m_full) == 1.0
        if abs(m_full - m_l) >= 0.05:
            c = rng.uniform(0.5, 2.0)
            d = rng.uniform(-1.0, 1.0)
            assert bias_score(c * m_x + d, c * m_l + d, c * m_full + d) == pytest.approx(
                value, abs=1e-12)
    with pytest.raises(DegenerateDenominatorError):
        bias_score(0.4, 0.5, 0.5 + 9e-10)


# ---------------------------------------------------------------------------
# 4. entropy suite


def _pair(iid, word, gold):
    return pair(iid, word, "a [x] b", "c [x] d", gold)


@criterion("entropy: uniform 1 bit, constant 0, singleton filter, p=0.87 corpus within 0.02")
def test_entropy_suite():
    started = time.monotonic()
    uniform = [_pair(f"u{i}", "w", "TF"[i % 2]) for i in range(4)]
    assert label_entropy(uniform).average == pytest.approx(1.0, abs=1e-12)

    constant = [_pair(f"c{i}", f"w{i % 3}", "T") for i in range(9)]
    assert label_entropy(constant).average == 0.0

    with_singleton = [_pair("a0", "a", "T"), _pair("a1", "a", "F"), _pair("b0", "b", "T")]
    filtered = label_entropy(with_singleton)
    assert filtered.n_words_discarded == 1
    assert "b" not in filtered.per_word

    train, _ = generate(SynthSpec(n_words=500, examples_per_word=20,
                                  label_determinism=0.87, seed=5))
    assert len(train) == 10_000
    measured = label_entropy(train).majority_proportion_overall
    binomial_oracle = sum(
        comb(20, k) * 0.87 ** k * 0.13 ** (20 - k) * max(k, 20 - k) for k in range(21)) / 20
    assert measured == pytest.approx(0.87, abs=0.02)
    assert measured == pytest.approx(binomial_oracle, abs=0.015)
    assert time.monotonic() - started < 5.0


# ---------------------------------------------------------------------------
# 5. planted-bias recovery


@criterion("planted bias: word_lookup recovers Bias_W=1, context_lookup Bias_C>=0.95 at 1e4")
def test_planted_bias_recovery():
    started = time.monotonic()
    train, test = generate(SynthSpec(n_words=500, examples_per_word=20,
                                     label_determinism=1.0, context_informativeness=0.0,
                                     seed=2))
    assert len(test) == 10_000
    word_report = measure_policy_bias(train, test, PredictorPolicy.WORD_LOOKUP, seed=2)
    assert word_report.bias_w == pytest.approx(1.0, abs=1e-9)
    assert word_report.bias_c == pytest.approx(0.0, abs=1e-2)

    train, test = generate(SynthSpec(n_words=500, examples_per_word=20,
                                     label_determinism=0.5, context_informativeness=1.0,
                                     seed=3))
    context_report = measure_policy_bias(train, test, PredictorPolicy.CONTEXT_LOOKUP, seed=3)
    assert context_report.bias_c >= 0.95
    assert time.monotonic() - started < 30.0


# ---------------------------------------------------------------------------
# 6. perturbation golden strings and properties


@criterion("perturbation goldens: WiC pair masking, word, guessed-word substitutions")
def test_perturbation_goldens():
    breed = pair("g1", "breed",
                 "Google represents a new [breed] of entrepreneurs .",
                 "The [breed] of tulip .", "F")
    context = make_context_variant(breed)
    assert context.segments[0].text == "Google represents a new [MASK] of entrepreneurs ."
    assert context.segments[1].text == "The [MASK] of tulip ."

    word = make_word_variant(breed)
    assert [seg.text for seg in word.segments] == ["breed", "breed"]

    guessed = substitute_target(breed, ["type", "type"])
    assert mark_targets(guessed.instance) == [
        "Google represents a new [type] of entrepreneurs .",
        "The [type] of tulip .",
    ]

    kill = pair("g2", "kill", "[Kill] the engine .", "He [kills] the ball .", "F")
    substituted = substitute_target(kill, ["Hit", "hits"])
    assert mark_targets(substituted.instance) == [
        "[Hit] the engine .",
        "He [hits] the ball .",
    ]


_plain = st.text(alphabet=st.characters(blacklist_categories=("Cs",),
                                        blacklist_characters="[]"), max_size=12)
_words = st.text(alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Lo"),
                                        blacklist_characters="[]"),
                 min_size=1, max_size=6)


@st.composite
def _fuzzed(draw):
    segs = []
    for _ in range(2):
        prefix, surface, suffix = draw(_plain), draw(_words), draw(_plain)
        text = prefix + surface + suffix
        segs.append(Segment(text, len(prefix), len(prefix) + len(surface), surface))
    return Instance("fz", TaskKind.PAIR_CLASSIFICATION, tuple(segs),
                    Label.binary("F"), word_key="fz")


@criterion("perturbation properties: idempotence and surface absence over fuzzed inputs")
@settings(max_examples=150, deadline=None)
@given(_fuzzed())
def test_perturbation_properties(inst):
    context = make_context_variant(inst)
    for seg, orig in zip(context.segments, inst.segments):
        assert seg.text[seg.start:seg.end] == "[MASK]"
        assert seg.text[seg.start:seg.end] != orig.surface
        assert seg.text[:seg.start] == orig.text[:orig.start]
        assert seg.text[seg.end:] == orig.text[orig.end:]
    assert make_context_variant(context.instance).segments == context.segments

    label = make_label_variant(inst)
    for seg in label.segments:
        assert set(seg.text.split()) <= {"[MASK]"}
    assert make_label_variant(label.instance).segments == label.segments


# ---------------------------------------------------------------------------
# 7. sampling protocol


@criterion("sampling: 100 seeds give exact sizes/overlap, runs are bit-identical")
def test_sampling_protocol():
    dataset = [
        _pair(f"s{i}", f"w{i}", "T") for i in range(1000)
    ]
    for seed in range(100):
        a, b = sample_batches(dataset, VariantKind.CONTEXT, 100, 50, seed=seed)
        assert len(a.instance_ids) == len(b.instance_ids) == 100
        assert len(set(a.instance_ids)) == len(set(b.instance_ids)) == 100
        assert len(set(a.instance_ids) & set(b.instance_ids)) == 50
        assert a.overlap_ids == b.overlap_ids
    first = sample_batches(dataset, VariantKind.CONTEXT, 100, 50, seed=77)
    second = sample_batches(dataset, VariantKind.CONTEXT, 100, 50, seed=77)
    assert first == second
    assert json.dumps([x.to_json() for x in first]) == json.dumps([x.to_json() for x in second])


# ---------------------------------------------------------------------------
# 8. parser round trip and diagnostics


@criterion("parsers: round-trip identity, WiC spans, located diagnostics per error class")
def test_parser_round_trip_and_diagnostics(tmp_path):
    corpus = [
        pair("rt1", "breed", "Google represents a new [breed] of entrepreneurs .",
             "The [breed] of tulip .", "F"),
        pair("rt2", "apollo", "航天员训练及[阿波罗]中飞船指令长 .",
             "... the six [Apollo] Moon landings .", "T"),
        pair("rt3", "starke", "Herr [Starke] wollte uns kein Interview geben .",
             "Wenn die Frau [Starke] kommt .", "T"),
        single("rt4", "sweat bees", "for instance [sweat bees] in the genera .",
               "halictidae"),
        single("rt5", "art", "The [art] of change-ringing is peculiar .", "art%1",
               candidates=["art%1", "art%2"], kind=TaskKind.DISAMBIGUATION),
    ]
    path = tmp_path / "corpus.jsonl"
    write_canonical(corpus, path)
    assert parse_canonical(path) == corpus

    wic_data = tmp_path / "wic.data.txt"
    wic_gold = tmp_path / "wic.gold.txt"
    wic_data.write_text(
        "board\tN\t2-2\tRoom and board .\tHe nailed boards across the windows .\n"
        "spring\tN\t3-3\tI spent my spring holidays .\tthe season of spring growth .\n",
        encoding="utf-8")
    wic_gold.write_text("F\nT\n", encoding="utf-8")
    parsed = parse_wic_tsv(wic_data, wic_gold)
    assert [i.segments[0].surface for i in parsed] == ["board", "spring"]
    for inst in parsed:
        inst.validate()

    good = json.dumps({
        "id": "ok", "task_kind": "retrieval", "word_key": "w",
        "segments": [{"text": "a w b", "start": 2, "end": 3, "surface": "w"}],
        "gold": {"candidate": "c1"},
    })
    malformed_classes = {
        "malformed JSON": "{oops",
        "invalid span": good.replace('"start": 2, "end": 3', '"start": 3, "end": 2'),
        "surface mismatch": good.replace('"surface": "w"', '"surface": "x"'),
        "missing field": json.dumps({"id": "only"}),
        "unknown task_kind": good.replace("retrieval", "sorting"),
        "duplicate id": good,
    }
    for label, bad_line in malformed_classes.items():
        bad = tmp_path / "bad.jsonl"
        bad.write_text(good + "\n" + bad_line + "\n", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            parse_canonical(bad)
        assert err.value.diagnostics[0].line == 2, label

    pred = tmp_path / "preds.jsonl"
    ok_pred = json.dumps({"instance_id": "ok", "system": "m", "variant": "full",
                          "prediction": "c1"})
    for label, bad_line in {
        "unknown variant": ok_pred.replace("full", "ctx"),
        "duplicate key": ok_pred,
    }.items():
        pred.write_text(ok_pred + "\n" + bad_line + "\n", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            parse_predictions(pred)
        assert err.value.diagnostics[0].line == 2, label


# ---------------------------------------------------------------------------
# 9. report structure


@criterion("report: two dashed 1.0 lines, two 0.8 shades, >1 point above line, JSON exact")
def test_report_structure():
    bundle = ReportBundle(bias_reports=(
        BiasReport("wic", "bert", 1.055, 0.473, 0.02, frozenset({"exceeds_one_c"})),
        BiasReport("wikimed", "bert", 0.447, 1.02, 0.01, frozenset({"exceeds_one_w"})),
        BiasReport("amico", "human", 0.501319, 0.488127, 0.189, frozenset()),
    ))
    svg = bias_scatter(bundle)
    root = ET.fromstring(svg)
    ref_lines = [el for el in root.iter() if el.get("class") == "ref-line"]
    assert len(ref_lines) == 2
    assert all(el.get("data-value") == "1.0" for el in ref_lines)
    assert all(el.get("stroke-dasharray") for el in ref_lines)
    shades = [el for el in root.iter() if el.get("class") == "shade-region"]
    assert len(shades) == 2
    assert all(el.get("data-threshold") == "0.8" for el in shades)

    horizontal = next(el for el in ref_lines if el.get("data-axis") == "y")
    wikimed = next(el for el in root.iter()
                   if el.get("class") == "bias-point" and el.get("data-dataset") == "wikimed")
    assert float(wikimed.get("cy")) < float(horizontal.get("y1"))

    round_tripped = bundle_from_json(json.loads(summary_json(bundle)))
    assert round_tripped.bias_reports == bundle.bias_reports
    assert round_tripped.bias_reports[1].bias_w == 1.02


# ---------------------------------------------------------------------------
# 10. agreement


@criterion("agreement: identity 100, complement 0, 44/50 -> 88")
def test_agreement_values():
    identical = {f"i{k}": T for k in range(50)}
    assert agreement(identical, dict(identical), identical.keys()) == 100.0
    complement = {k: F for k in identical}
    assert agreement(identical, complement, identical.keys()) == 0.0
    partial = {f"i{k}": (T if k < 44 else F) for k in range(50)}
    assert agreement(identical, partial, identical.keys()) == 88.0
