from math import comb

import pytest

from lexbias.metrics import accuracy, label_entropy, sense_entropy
from lexbias.perturb import apply_variant, make_context_variant, make_label_variant
from lexbias.synthkit import (
    NEUTRAL_CUE,
    PredictorPolicy,
    SynthSpec,
    generate,
    inventory,
    measure_policy_bias,
    read_cue,
    simulate,
)
from lexbias.types import Instance, Label, Segment, TaskKind, ValidationError, VariantKind


def spec(**overrides) -> SynthSpec:
    base = dict(n_words=20, examples_per_word=5, seed=13)
    base.update(overrides)
    return SynthSpec(**base)


def test_generate_deterministic():
    assert generate(spec()) == generate(spec())
    assert generate(spec(seed=14)) != generate(spec())


def test_generate_shapes_and_disjoint_ids():
    train, test = generate(spec())
    assert len(train) == len(test) == 100
    assert {i.id for i in train}.isdisjoint({i.id for i in test})
    for inst in train + test:
        inst.validate()


def test_p_one_gives_zero_label_entropy():
    train, _ = generate(spec(label_determinism=1.0))
    result = label_entropy(train)
    assert result.average == 0.0
    assert result.majority_proportion_overall == 1.0


def test_p_half_entropy_approaches_one_bit():
    train, _ = generate(spec(n_words=10, examples_per_word=400, label_determinism=0.5))
    assert label_entropy(train).average > 0.95


def expected_majority_proportion(n: int, p: float) -> float:
    """Binomial oracle: E[max(X, n-X)] / n for X ~ Bin(n, p)."""
    return sum(comb(n, k) * p ** k * (1 - p) ** (n - k) * max(k, n - k)
               for k in range(n + 1)) / n


def test_p_087_reproduces_majority_proportion():
    train, _ = generate(spec(n_words=500, examples_per_word=20,
                             label_determinism=0.87, seed=5))
    assert len(train) == 10_000
    measured = label_entropy(train).majority_proportion_overall
    oracle = expected_majority_proportion(20, 0.87)
    assert measured == pytest.approx(oracle, abs=0.012)
    assert measured == pytest.approx(0.87, abs=0.02)


def test_q_controls_cue_presence():
    informative, _ = generate(spec(context_informativeness=1.0))
    for inst in informative:
        assert read_cue(inst.segments[0].text) == inst.gold.value
    uninformative, _ = generate(spec(context_informativeness=0.0))
    for inst in uninformative:
        assert read_cue(inst.segments[0].text) is None
        assert NEUTRAL_CUE in inst.segments[0].text


def test_cue_survives_context_masking_only():
    train, test = generate(spec(context_informativeness=1.0))
    inst = test[0]
    assert read_cue(make_context_variant(inst).segments[0].text) == inst.gold.value
    assert read_cue(make_label_variant(inst).segments[0].text) is None
    assert read_cue(apply_variant(inst, VariantKind.WORD).segments[0].text) is None


def test_spec_validation():
    with pytest.raises(ValidationError):
        generate(spec(label_determinism=0.3))
    with pytest.raises(ValidationError):
        generate(spec(context_informativeness=1.5))
    with pytest.raises(ValidationError):
        generate(spec(n_words=0))


def test_disambiguation_generation():
    train, test = generate(spec(task_kind=TaskKind.DISAMBIGUATION, senses_per_word=3))
    for inst in train:
        assert inst.candidates is not None
        assert inst.gold.value in inst.candidates
    report = sense_entropy(train)
    assert report.n_words_included == 20


def test_retrieval_generation_and_inventory():
    s = spec(task_kind=TaskKind.RETRIEVAL)
    train, _ = generate(s)
    inv = set(inventory(s))
    assert all(inst.candidates is None for inst in train)
    assert {inst.gold.value for inst in train} <= inv


# ---------------------------------------------------------------------------
# policies


def balanced_pairs():
    seg = Segment("a x b .", 2, 3, "x")
    out = []
    for i in range(20):
        gold = "T" if i % 2 else "F"
        out.append(Instance(f"bal{i}", TaskKind.PAIR_CLASSIFICATION, (seg, seg),
                            Label.binary(gold), word_key=f"w{i % 4}"))
    return out


def test_oracle_policy_is_perfect():
    train, test = generate(spec())
    for variant in (VariantKind.FULL, VariantKind.CONTEXT, VariantKind.LABEL):
        perturbed = [apply_variant(i, variant) for i in test]
        pset = simulate(PredictorPolicy.ORACLE, train, perturbed)
        gold = {i.id: i.gold for i in test}
        assert accuracy(pset.labels, gold).value == 1.0


def test_majority_policy_on_balanced_test():
    data = balanced_pairs()
    pset = simulate(PredictorPolicy.MAJORITY, data, data)
    gold = {i.id: i.gold for i in data}
    assert accuracy(pset.labels, gold).value == 0.5


def test_word_lookup_ignores_context():
    train, test = generate(spec(label_determinism=0.9, context_informativeness=1.0))
    full = simulate(PredictorPolicy.WORD_LOOKUP, train, test)
    word = simulate(PredictorPolicy.WORD_LOOKUP, train,
                    [apply_variant(i, VariantKind.WORD) for i in test])
    assert full.labels == word.labels


def test_simulate_rejects_mixed_variants():
    train, test = generate(spec())
    mixed = [apply_variant(test[0], VariantKind.WORD),
             apply_variant(test[1], VariantKind.CONTEXT)]
    with pytest.raises(ValidationError, match="mix variants"):
        simulate(PredictorPolicy.ORACLE, train, mixed)


def test_simulate_deterministic_under_seed():
    train, test = generate(spec(context_informativeness=0.0))
    a = simulate(PredictorPolicy.CONTEXT_LOOKUP, train, test, seed=3)
    b = simulate(PredictorPolicy.CONTEXT_LOOKUP, train, test, seed=3)
    assert a.labels == b.labels


# ---------------------------------------------------------------------------
# planted-bias recovery


def test_word_bias_recovered_exactly():
    train, test = generate(spec(n_words=60, examples_per_word=10,
                                label_determinism=1.0, context_informativeness=0.0, seed=2))
    report = measure_policy_bias(train, test, PredictorPolicy.WORD_LOOKUP, seed=2)
    assert report.bias_w == pytest.approx(1.0, abs=1e-9)
    assert report.bias_c == pytest.approx(0.0, abs=1e-9)


def test_context_bias_recovered():
    train, test = generate(spec(n_words=100, examples_per_word=10,
                                label_determinism=0.5, context_informativeness=1.0, seed=3))
    report = measure_policy_bias(train, test, PredictorPolicy.CONTEXT_LOOKUP, seed=3)
    assert report.bias_c >= 0.95


def test_word_bias_monotone_in_label_determinism():
    word_scores = []
    biases = []
    for p in (0.6, 0.75, 0.9, 1.0):
        train, test = generate(spec(n_words=60, examples_per_word=30,
                                    label_determinism=p, seed=17))
        word_variant = [apply_variant(i, VariantKind.WORD) for i in test]
        pset = simulate(PredictorPolicy.WORD_LOOKUP, train, word_variant, seed=17)
        gold = {i.id: i.gold for i in test}
        word_scores.append(accuracy(pset.labels, gold).value)
        report = measure_policy_bias(train, test, PredictorPolicy.WORD_LOOKUP, seed=17)
        biases.append(report.bias_w)
    for lo, hi in zip(word_scores, word_scores[1:]):
        assert hi >= lo - 0.03  # sampling noise allowance
    for lo, hi in zip(biases, biases[1:]):
        assert hi >= lo - 0.03
