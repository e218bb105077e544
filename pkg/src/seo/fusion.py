"""Combining intent predictors and scoring multi-label intent predictions.

Recall fusion takes the per-turn union of every predictor; precision
fusion keeps an intent when at least ``threshold`` predictors voted for it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

from .corpus import Corpus, dumps_line, iter_jsonl
from .errors import BadThreshold, KeyMismatch, SchemaError, SeoError
from .ontology import IntentId, OntologyRegistry, default_registry

TurnKey = tuple[str, int]


@dataclass(frozen=True)
class PredictionSet:
    """Intent sets keyed by (dialogue_id, 0-based doctor-turn index)."""

    predictor_id: str
    turns: Mapping[TurnKey, frozenset[IntentId]] = field(default_factory=dict)

    def __getitem__(self, key: TurnKey) -> frozenset[IntentId]:
        return self.turns[key]

    def keys(self) -> set[TurnKey]:
        return set(self.turns)

    def __len__(self) -> int:
        return len(self.turns)


def _aligned_keys(preds: Sequence[PredictionSet]) -> list[TurnKey]:
    if len(preds) < 2:
        raise SeoError(f"fusion needs at least two predictors, got {len(preds)}")
    keys = preds[0].keys()
    for p in preds[1:]:
        if p.keys() != keys:
            diff = sorted(keys ^ p.keys())[:5]
            raise KeyMismatch(f"predictor {p.predictor_id!r} covers different turns than {preds[0].predictor_id!r}: {diff}")
    return sorted(keys)


def fuse_recall(preds: Sequence[PredictionSet], predictor_id: str = "fusion-recall") -> PredictionSet:
    keys = _aligned_keys(preds)
    return PredictionSet(predictor_id, {k: frozenset().union(*(p[k] for p in preds)) for k in keys})


def fuse_precision(
    preds: Sequence[PredictionSet], threshold: int = 2, predictor_id: str | None = None
) -> PredictionSet:
    keys = _aligned_keys(preds)
    if not 1 <= threshold <= len(preds):
        raise BadThreshold(f"threshold must be in 1..{len(preds)}, got {threshold}")
    fused = {}
    for k in keys:
        votes = Counter(i for p in preds for i in p[k])
        fused[k] = frozenset(i for i, n in votes.items() if n >= threshold)
    return PredictionSet(predictor_id or f"fusion-precision@{threshold}", fused)


# -- multi-label evaluation ------------------------------------------------


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass(frozen=True)
class MultilabelReport:
    micro: dict[str, float]
    macro: dict[str, float]
    weighted: dict[str, float]
    per_label: dict[str, dict]
    turns: int

    def to_dict(self) -> dict:
        return {
            "micro": dict(self.micro),
            "macro": dict(self.macro),
            "weighted": dict(self.weighted),
            "per_label": {k: self.per_label[k] for k in sorted(self.per_label)},
            "turns": self.turns,
        }


def confusion_counts(
    pairs: Iterable[tuple[frozenset, frozenset]],
) -> dict[object, Counter]:
    """Per-label tp/fp/fn tallies over (predicted, gold) set pairs."""
    counts: dict[object, Counter] = {}
    for pred, gold in pairs:
        for label in pred | gold:
            c = counts.setdefault(label, Counter())
            if label in pred and label in gold:
                c["tp"] += 1
            elif label in pred:
                c["fp"] += 1
            else:
                c["fn"] += 1
    return counts


def report_from_counts(counts: Mapping[object, Counter], turns: int, labels: Iterable | None = None) -> MultilabelReport:
    """Micro/macro/weighted P/R/F1; labels never seen get zero scores."""
    label_list = sorted(set(counts) if labels is None else set(labels), key=str)
    per_label = {}
    sums = Counter()
    for label in label_list:
        c = counts.get(label, Counter())
        tp, fp, fn = c["tp"], c["fp"], c["fn"]
        p, r, f = _prf(tp, fp, fn)
        support = tp + fn
        per_label[str(label)] = {"tp": tp, "fp": fp, "fn": fn, "support": support, "precision": p, "recall": r, "f1": f}
        sums["tp"] += tp
        sums["fp"] += fp
        sums["fn"] += fn
    micro_p, micro_r, micro_f = _prf(sums["tp"], sums["fp"], sums["fn"])
    n = len(per_label)
    total_support = sum(v["support"] for v in per_label.values())

    def mean(key: str) -> float:
        return sum(v[key] for v in per_label.values()) / n if n else 0.0

    def weighted(key: str) -> float:
        if not total_support:
            return 0.0
        return sum(v[key] * v["support"] for v in per_label.values()) / total_support

    return MultilabelReport(
        micro={"precision": micro_p, "recall": micro_r, "f1": micro_f},
        macro={"precision": mean("precision"), "recall": mean("recall"), "f1": mean("f1")},
        weighted={"precision": weighted("precision"), "recall": weighted("recall"), "f1": weighted("f1")},
        per_label=per_label,
        turns=turns,
    )


def gold_intents(corpus: Corpus) -> dict[TurnKey, frozenset[IntentId] | None]:
    out = {}
    for d in corpus:
        for k, t in enumerate(d.doctor_turns):
            out[(d.dialogue_id, k)] = t.intents
    return out


def evaluate_multilabel(
    pred: PredictionSet,
    gold: Corpus,
    *,
    aspect: str | None = None,
    labels: Iterable[IntentId] | None = None,
) -> MultilabelReport:
    """Score predictions against the corpus' doctor intents.

    The label set is every label seen in gold or predictions on the scored
    turns (or ``labels`` if given); a label that is predicted but never in
    gold has support 0 and contributes 0 to the macro average. ``aspect``
    restricts scoring to ``tod`` or ``chitchat`` intents.
    """
    reference = gold_intents(gold)
    extra = pred.keys() - reference.keys()
    if extra:
        raise KeyMismatch(f"predictions for turns absent from the gold corpus: {sorted(extra)[:5]}")
    pairs = []
    for key in sorted(pred.keys()):
        g = reference[key]
        if g is None:
            raise KeyMismatch(f"gold turn {key} carries no intent labels")
        p = pred[key]
        if aspect is not None:
            p = frozenset(i for i in p if i.aspect == aspect)
            g = frozenset(i for i in g if i.aspect == aspect)
        pairs.append((p, g))
    label_set = None if labels is None else list(labels)
    return report_from_counts(confusion_counts(pairs), len(pairs), label_set)


# -- prediction files ------------------------------------------------------


def load_intent_predictions(
    stream: bytes | IO | str,
    registry: OntologyRegistry | None = None,
    *,
    default_predictor: str = "predictor",
    source: str | None = None,
) -> dict[str, PredictionSet]:
    """Read ``{"predictor", "dialogue_id", "turn_index", "intents"}`` rows, grouped by predictor."""
    registry = registry or default_registry()
    grouped: dict[str, dict[TurnKey, frozenset[IntentId]]] = {}
    for line_no, rec in iter_jsonl(stream, source):
        if not isinstance(rec, dict):
            raise SchemaError("prediction row must be a JSON object", line=line_no, source=source)
        did, k, names = rec.get("dialogue_id"), rec.get("turn_index"), rec.get("intents")
        predictor = rec.get("predictor", default_predictor)
        if not isinstance(did, str) or not isinstance(k, int) or isinstance(k, bool) or k < 0:
            raise SchemaError("row needs string 'dialogue_id' and nonnegative integer 'turn_index'", line=line_no, source=source)
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise SchemaError("'intents' must be a list of strings", line=line_no, source=source)
        if not isinstance(predictor, str):
            raise SchemaError("'predictor' must be a string", line=line_no, source=source)
        try:
            intents = frozenset(registry.resolve(n) for n in names)
        except SeoError as exc:
            raise type(exc)(exc.message, line=line_no, source=source) from None
        turns = grouped.setdefault(predictor, {})
        if (did, k) in turns:
            raise SchemaError(f"duplicate row for predictor {predictor!r} at ({did!r}, {k})", line=line_no, source=source)
        turns[(did, k)] = intents
    return {name: PredictionSet(name, turns) for name, turns in grouped.items()}


def check_against_corpus(pred: PredictionSet, corpus: Corpus) -> None:
    extra = pred.keys() - corpus.doctor_turn_keys()
    if extra:
        raise KeyMismatch(f"predictor {pred.predictor_id!r} references missing doctor turns: {sorted(extra)[:5]}")


def write_intent_predictions(pred: PredictionSet) -> bytes:
    return b"".join(
        dumps_line(
            {"predictor": pred.predictor_id, "dialogue_id": did, "turn_index": k, "intents": sorted(str(i) for i in pred[(did, k)])}
        )
        for did, k in sorted(pred.keys())
    )
