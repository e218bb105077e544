import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seo.corpus import parse_corpus
from seo.errors import BadThreshold, KeyMismatch, SchemaError, SeoError, UnknownIntent
from seo.fusion import (
    PredictionSet,
    evaluate_multilabel,
    fuse_precision,
    fuse_recall,
    gold_intents,
    load_intent_predictions,
    write_intent_predictions,
)

A, B, C = "a", "b", "c"


def ps(name, *sets):
    return PredictionSet(name, {("d", k): frozenset(s) for k, s in enumerate(sets)})


def test_recall_examples():
    assert fuse_recall([ps("x", {A}), ps("y", {A}), ps("z", {A})])[("d", 0)] == {A}
    assert fuse_recall([ps("x", {A, B}), ps("y", {B, C}), ps("z", {B})])[("d", 0)] == {A, B, C}


def test_precision_examples():
    preds = [ps("x", {A, B}), ps("y", {B, C}), ps("z", {B})]
    assert fuse_precision(preds)[("d", 0)] == {B}
    assert fuse_precision(preds, 1).turns == fuse_recall(preds).turns
    assert fuse_precision(preds, 3)[("d", 0)] == {B}


def test_errors():
    with pytest.raises(SeoError):
        fuse_recall([ps("x", {A})])
    with pytest.raises(KeyMismatch):
        fuse_recall([ps("x", {A}), ps("y", {A}, {B})])
    with pytest.raises(BadThreshold):
        fuse_precision([ps("x", {A}), ps("y", {A})], 3)
    with pytest.raises(BadThreshold):
        fuse_precision([ps("x", {A}), ps("y", {A})], 0)


labels = st.frozensets(st.sampled_from("abcdef"), max_size=4)


@st.composite
def fixtures(draw):
    n_turns = draw(st.integers(1, 6))
    return [PredictionSet(f"p{i}", {("d", k): draw(labels) for k in range(n_turns)}) for i in range(3)]


@settings(max_examples=200)
@given(fixtures())
def test_fusion_algebra(preds):
    union = fuse_recall(preds)
    for key in union.keys():
        for label in "abcdef":
            assert (label in union[key]) == any(label in p[key] for p in preds)
    fused = [fuse_precision(preds, t) for t in (1, 2, 3)]
    assert fused[0].turns == union.turns
    for key in union.keys():
        assert fused[2][key] <= fused[1][key] <= fused[0][key]
        assert fused[2][key] == preds[0][key] & preds[1][key] & preds[2][key]
        for p in preds:
            assert fused[2][key] <= p[key] <= union[key]


# -- evaluation ------------------------------------------------------------


def corpus_from(sets):
    turns = []
    for s in sets:
        turns += [{"speaker": "doctor", "text": "q", "intents": sorted(s)}, {"speaker": "patient", "text": "a"}]
    return parse_corpus(json.dumps({"dialogue_id": "d", "turns": turns[:-1]}))


def test_identity(tiny):
    gold = PredictionSet("gold", gold_intents(tiny))
    r = evaluate_multilabel(gold, tiny)
    for avg in (r.micro, r.macro, r.weighted):
        assert avg == {"precision": 1.0, "recall": 1.0, "f1": 1.0}


def test_empty_prediction_convention(registry):
    corpus = corpus_from([{"tod.mood.whether"}])
    r = evaluate_multilabel(PredictionSet("p", {("d", 0): frozenset()}), corpus)
    assert r.micro == {"precision": 0.0, "recall": 0.0, "f1": 0.0}


def test_hand_table(registry):
    m, s, rf = (registry.resolve(x) for x in ("tod.mood.whether", "tod.sleep.whether", "chitchat.show_empathy.reflection"))
    corpus = corpus_from([{str(m), str(rf)}, {str(s)}, set()])
    pred = PredictionSet("p", {("d", 0): frozenset({m}), ("d", 1): frozenset({s, rf}), ("d", 2): frozenset()})
    r = evaluate_multilabel(pred, corpus)
    # mood tp1; sleep tp1; reflection fn1 fp1
    assert r.micro["precision"] == pytest.approx(2 / 3)
    assert r.micro["recall"] == pytest.approx(2 / 3)
    assert r.macro["precision"] == pytest.approx((1 + 1 + 0) / 3)
    assert r.macro["f1"] == pytest.approx(2 / 3)
    # supports are 1 each, so weighted equals macro here
    assert r.weighted["recall"] == pytest.approx(2 / 3)
    tod = evaluate_multilabel(pred, corpus, aspect="tod")
    assert tod.micro == {"precision": 1.0, "recall": 1.0, "f1": 1.0}


def test_weighted_uses_support(registry):
    m, s = registry.resolve("tod.mood.whether"), registry.resolve("tod.sleep.whether")
    corpus = corpus_from([{str(m)}, {str(m)}, {str(s)}])
    pred = PredictionSet("p", {("d", 0): frozenset({m}), ("d", 1): frozenset({m}), ("d", 2): frozenset()})
    r = evaluate_multilabel(pred, corpus)
    assert r.weighted["recall"] == pytest.approx((2 * 1.0 + 1 * 0.0) / 3)
    assert r.macro["recall"] == pytest.approx(0.5)


def test_evaluation_errors(tiny):
    with pytest.raises(KeyMismatch):
        evaluate_multilabel(PredictionSet("p", {("nope", 0): frozenset()}), tiny)


def test_order_invariance(tiny):
    gold = gold_intents(tiny)
    shuffled = dict(reversed(list(gold.items())))
    assert evaluate_multilabel(PredictionSet("a", gold), tiny) == evaluate_multilabel(PredictionSet("b", shuffled), tiny)


def test_prediction_file_round_trip(fixtures_dir, registry):
    preds = load_intent_predictions((fixtures_dir / "pred_a.jsonl").read_bytes(), registry)
    assert set(preds) == {"pred_a"}
    again = load_intent_predictions(write_intent_predictions(preds["pred_a"]), registry)
    assert again["pred_a"].turns == preds["pred_a"].turns


@pytest.mark.parametrize(
    "row, error",
    [
        ({"dialogue_id": "d", "turn_index": 0, "intents": ["tod.sleep.snoring"]}, UnknownIntent),
        ({"dialogue_id": "d", "turn_index": -1, "intents": []}, SchemaError),
        ({"dialogue_id": "d", "turn_index": 0, "intents": "tod.mood.whether"}, SchemaError),
    ],
)
def test_prediction_file_errors(row, error, registry):
    with pytest.raises(error) as exc:
        load_intent_predictions(json.dumps(row), registry)
    assert exc.value.line == 1
