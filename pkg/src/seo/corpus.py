"""Annotated diagnosis dialogues: data model, JSON Lines I/O and statistics.

One dialogue per line::

    {"dialogue_id": "d1", "risk": "mild",
     "turns": [{"speaker": "doctor", "text": "...", "intents": ["tod.mood.whether"]},
               {"speaker": "patient", "text": "...", "state_delta": {"tod.mood.whether": "present"}}]}

Doctor turns carry intent labels, patient turns carry state deltas.
``write_corpus`` emits sorted keys and canonically ordered intents, so
``write(parse(write(c)))`` is byte-identical to ``write(c)``.
"""

from __future__ import annotations

import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    CorpusSyntaxError,
    DuplicateDialogueId,
    EmptyCorpus,
    SchemaError,
    SeoError,
)
from .ontology import CHITCHAT, TOD, IntentId, OntologyRegistry, core_symptom_of, default_registry
from .state import StateDelta, slot_id

DOCTOR = "doctor"
PATIENT = "patient"
SPEAKERS = (DOCTOR, PATIENT)
RISK_LABELS = ("none", "mild", "moderate", "severe")

_DIALOGUE_KEYS = {"dialogue_id", "risk", "turns"}
_TURN_KEYS = {"speaker", "text", "intents", "state_delta", "emotion"}


@dataclass(frozen=True)
class Turn:
    """One utterance. ``intents is None`` marks an unlabeled doctor utterance."""

    speaker: str
    text: str
    intents: frozenset[IntentId] | None = None
    state_delta: StateDelta | None = None
    emotion: str | None = None

    @property
    def is_doctor(self) -> bool:
        return self.speaker == DOCTOR

    @property
    def intent_set(self) -> frozenset[IntentId]:
        return self.intents or frozenset()

    @property
    def delta(self) -> StateDelta:
        return self.state_delta if self.state_delta is not None else StateDelta()

    def topics(self) -> frozenset[str]:
        return frozenset(core_symptom_of(i) for i in self.intent_set if i.aspect == TOD)

    def strategies(self) -> frozenset[IntentId]:
        return frozenset(i for i in self.intent_set if i.aspect == CHITCHAT)


@dataclass(frozen=True)
class Dialogue:
    dialogue_id: str
    turns: tuple[Turn, ...]
    risk: str | None = None

    @property
    def doctor_turns(self) -> tuple[Turn, ...]:
        return tuple(t for t in self.turns if t.speaker == DOCTOR)

    @property
    def L(self) -> int:
        """Number of doctor utterances."""
        return sum(1 for t in self.turns if t.speaker == DOCTOR)

    def doctor_positions(self) -> list[int]:
        """Index into ``turns`` of each doctor utterance, in order."""
        return [i for i, t in enumerate(self.turns) if t.speaker == DOCTOR]

    def exchanges(self) -> int:
        """Doctor/patient exchange count: half the number of speaker runs, rounded up."""
        runs = 0
        prev = None
        for t in self.turns:
            if t.speaker != prev:
                runs += 1
                prev = t.speaker
        return math.ceil(runs / 2)


@dataclass(frozen=True)
class Corpus:
    dialogues: tuple[Dialogue, ...] = ()
    _by_id: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "dialogues", tuple(self.dialogues))
        by_id = {}
        for d in self.dialogues:
            if d.dialogue_id in by_id:
                raise DuplicateDialogueId(f"duplicate dialogue_id {d.dialogue_id!r}")
            by_id[d.dialogue_id] = d
        object.__setattr__(self, "_by_id", by_id)

    @property
    def N(self) -> int:
        return len(self.dialogues)

    def __len__(self) -> int:
        return len(self.dialogues)

    def __iter__(self) -> Iterator[Dialogue]:
        return iter(self.dialogues)

    def __getitem__(self, dialogue_id: str) -> Dialogue:
        return self._by_id[dialogue_id]

    def __contains__(self, dialogue_id: object) -> bool:
        return dialogue_id in self._by_id

    def doctor_turn_keys(self) -> set[tuple[str, int]]:
        return {(d.dialogue_id, k) for d in self.dialogues for k in range(d.L)}


# -- parsing ---------------------------------------------------------------


def _iter_lines(data: bytes) -> Iterator[tuple[int, int, bytes]]:
    """Yield (line_no, byte_offset_of_line_start, line_without_newline)."""
    start = 0
    line_no = 0
    while start < len(data):
        line_no += 1
        end = data.find(b"\n", start)
        if end < 0:
            end = len(data)
        yield line_no, start, data[start:end].rstrip(b"\r")
        start = end + 1


def _as_bytes(stream) -> tuple[bytes, str | None]:
    if isinstance(stream, (bytes, bytearray, memoryview)):
        return bytes(stream), None
    if isinstance(stream, str):
        return stream.encode("utf-8"), None
    data = stream.read()
    if isinstance(data, str):
        data = data.encode("utf-8")
    return data, getattr(stream, "name", None)


def parse_dialogue(
    record: object,
    registry: OntologyRegistry | None = None,
    *,
    strict: bool = False,
    line: int | None = None,
    source: str | None = None,
) -> Dialogue:
    """Validate one decoded JSON record and build a :class:`Dialogue`."""
    registry = registry or default_registry()
    slots = registry.tod_leaves

    def fail(msg: str) -> SchemaError:
        return SchemaError(msg, line=line, source=source)

    if not isinstance(record, dict):
        raise fail("dialogue record must be a JSON object")
    if strict and set(record) - _DIALOGUE_KEYS:
        raise fail(f"unexpected dialogue fields: {sorted(set(record) - _DIALOGUE_KEYS)}")
    dialogue_id = record.get("dialogue_id")
    if not isinstance(dialogue_id, str) or not dialogue_id:
        raise fail("missing or empty 'dialogue_id'")
    risk = record.get("risk")
    if risk is not None and risk not in RISK_LABELS:
        raise fail(f"risk must be one of {'|'.join(RISK_LABELS)}, got {risk!r}")
    raw_turns = record.get("turns")
    if not isinstance(raw_turns, list) or not raw_turns:
        raise fail(f"dialogue {dialogue_id!r}: 'turns' must be a nonempty list")

    turns = []
    for pos, raw in enumerate(raw_turns):
        where = f"dialogue {dialogue_id!r} turn {pos}"
        if not isinstance(raw, dict):
            raise fail(f"{where}: turn must be an object")
        if strict and set(raw) - _TURN_KEYS:
            raise fail(f"{where}: unexpected fields {sorted(set(raw) - _TURN_KEYS)}")
        speaker = raw.get("speaker")
        if speaker not in SPEAKERS:
            raise fail(f"{where}: speaker must be doctor|patient, got {speaker!r}")
        text = raw.get("text")
        if not isinstance(text, str):
            raise fail(f"{where}: missing 'text'")
        emotion = raw.get("emotion")
        if emotion is not None and not isinstance(emotion, str):
            raise fail(f"{where}: 'emotion' must be a string")

        intents = None
        if "intents" in raw:
            names = raw["intents"]
            if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
                raise fail(f"{where}: 'intents' must be a list of strings")
            if speaker == PATIENT and names:
                raise fail(f"{where}: patient turns carry no intents")
            try:
                intents = frozenset(registry.resolve(n) for n in names)
            except SeoError as exc:
                raise type(exc)(f"{where}: {exc.message}", line=line, source=source) from None

        delta = None
        if "state_delta" in raw:
            mapping = raw["state_delta"]
            if not isinstance(mapping, dict):
                raise fail(f"{where}: 'state_delta' must be an object")
            if speaker == DOCTOR and mapping:
                raise fail(f"{where}: doctor turns carry no state_delta")
            try:
                delta = StateDelta({slot_id(k, slots): v for k, v in mapping.items()})
            except SeoError as exc:
                raise type(exc)(f"{where}: {exc.message}", line=line, source=source) from None

        turns.append(Turn(speaker, text, intents, delta, emotion))

    if not any(t.speaker == DOCTOR for t in turns):
        raise fail(f"dialogue {dialogue_id!r} has no doctor turn")
    if strict:
        for a, b in zip(turns, turns[1:]):
            if a.speaker == b.speaker:
                raise fail(f"dialogue {dialogue_id!r}: consecutive {a.speaker} turns (strict alternation)")
    return Dialogue(dialogue_id, tuple(turns), risk)


def iter_jsonl(stream: bytes | IO | str, source: str | None = None) -> Iterator[tuple[int, object]]:
    """Yield ``(line_no, decoded_value)`` for every nonblank JSON Lines record."""
    data, name = _as_bytes(stream)
    source = source or name
    for line_no, offset, raw in _iter_lines(data):
        if not raw.strip():
            continue
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusSyntaxError("invalid UTF-8", line=line_no, offset=offset + exc.start, source=source) from None
        try:
            yield line_no, json.loads(text)
        except json.JSONDecodeError as exc:
            byte_pos = offset + len(text[: exc.pos].encode("utf-8"))
            raise CorpusSyntaxError(exc.msg, line=line_no, offset=byte_pos, source=source) from None


def parse_corpus(
    stream: bytes | IO | str,
    registry: OntologyRegistry | None = None,
    *,
    strict: bool = False,
    source: str | None = None,
) -> Corpus:
    """Parse and validate a JSON Lines corpus.

    Blank lines are skipped. Errors carry the 1-based line number; JSON
    syntax errors also carry the absolute byte offset.
    """
    if not isinstance(stream, (bytes, bytearray, memoryview, str)):
        source = source or getattr(stream, "name", None)
    dialogues = []
    seen: dict[str, int] = {}
    for line_no, record in iter_jsonl(stream, source):
        dialogue = parse_dialogue(record, registry, strict=strict, line=line_no, source=source)
        if dialogue.dialogue_id in seen:
            raise DuplicateDialogueId(
                f"dialogue_id {dialogue.dialogue_id!r} already used on line {seen[dialogue.dialogue_id]}",
                line=line_no,
                source=source,
            )
        seen[dialogue.dialogue_id] = line_no
        dialogues.append(dialogue)
    return Corpus(tuple(dialogues))


def read_corpus(path: str | os.PathLike, registry: OntologyRegistry | None = None, *, strict: bool = False) -> Corpus:
    return parse_corpus(Path(path).read_bytes(), registry, strict=strict, source=str(path))


# -- writing ---------------------------------------------------------------


def turn_record(turn: Turn) -> dict:
    rec: dict = {"speaker": turn.speaker, "text": turn.text}
    if turn.intents is not None:
        rec["intents"] = sorted(str(i) for i in turn.intents)
    if turn.state_delta is not None:
        rec["state_delta"] = turn.state_delta.to_dict()
    if turn.emotion is not None:
        rec["emotion"] = turn.emotion
    return rec


def dialogue_record(dialogue: Dialogue) -> dict:
    rec: dict = {"dialogue_id": dialogue.dialogue_id, "turns": [turn_record(t) for t in dialogue.turns]}
    if dialogue.risk is not None:
        rec["risk"] = dialogue.risk
    return rec


def dumps_line(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8") + b"\n"


def write_corpus(corpus: Corpus | Iterable[Dialogue]) -> bytes:
    return b"".join(dumps_line(dialogue_record(d)) for d in corpus)


# -- statistics ------------------------------------------------------------


@dataclass(frozen=True)
class TransitionCounts:
    """Square count matrix; ``counts[a][b]`` tallies a -> b transitions."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def matrix(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64).reshape(len(self.labels), len(self.labels))

    def __getitem__(self, pair: tuple[str, str]) -> int:
        a, b = pair
        return self.counts[self.labels.index(a)][self.labels.index(b)]

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(r) for r in self.counts)

    def normalized(self, smoothing: float = 0.0) -> np.ndarray:
        """Row-stochastic view; rows with no mass become uniform."""
        m = self.matrix().astype(float) + smoothing
        sums = m.sum(axis=1, keepdims=True)
        n = len(self.labels)
        out = np.full_like(m, 1.0 / n if n else 0.0)
        np.divide(m, sums, out=out, where=sums > 0)
        return out

    def __add__(self, other: TransitionCounts) -> TransitionCounts:
        if self.labels != other.labels:
            raise ValueError("cannot add transition counts over different labels")
        return TransitionCounts(
            self.labels,
            tuple(tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.counts, other.counts)),
        )

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": [list(r) for r in self.counts]}


def _tally(labels: Sequence[str], sequences: Iterable[Sequence[frozenset]], *, singleton_only: bool, skip_empty: bool) -> TransitionCounts:
    index = {l: i for i, l in enumerate(labels)}
    m = [[0] * len(labels) for _ in labels]
    for seq in sequences:
        seq = [s for s in seq if s] if skip_empty else list(seq)
        for a, b in zip(seq, seq[1:]):
            if singleton_only and (len(a) != 1 or len(b) != 1):
                continue
            for x in a:
                for y in b:
                    m[index[x]][index[y]] += 1
    return TransitionCounts(tuple(labels), tuple(tuple(r) for r in m))


def estimate_transition_counts(
    corpus: Corpus | Iterable[Dialogue],
    registry: OntologyRegistry | None = None,
    *,
    singleton_only: bool = False,
    skip_empty: bool = False,
) -> tuple[TransitionCounts, TransitionCounts]:
    """Topic (core symptom) and chit-chat strategy transition counts.

    For each pair of adjacent doctor utterances every (a, b) in
    topics(k) x topics(k+1) is counted once. ``skip_empty`` drops doctor
    utterances with no topic before pairing; ``singleton_only`` counts a
    pair only when both sides hold exactly one label.
    """
    registry = registry or default_registry()
    dialogues = list(corpus)
    if not dialogues:
        raise EmptyCorpus("cannot estimate transitions from an empty corpus")
    topic_labels = registry.groups(TOD)
    strategy_labels = tuple(str(i) for i in registry.chitchat_leaves)
    topics = _tally(
        topic_labels,
        ([t.topics() for t in d.doctor_turns] for d in dialogues),
        singleton_only=singleton_only,
        skip_empty=skip_empty,
    )
    strategies = _tally(
        strategy_labels,
        ([frozenset(str(s) for s in t.strategies()) for t in d.doctor_turns] for d in dialogues),
        singleton_only=singleton_only,
        skip_empty=skip_empty,
    )
    return topics, strategies


@dataclass(frozen=True)
class CorpusStats:
    n_dialogues: int
    avg_turns: float
    avg_utterances: dict[str, float]
    intent_totals: dict[str, int]
    labeled_doctor_utterances: int
    avg_intents_per_utterance: dict[str, float]
    leaf_counts: dict[str, int]
    risk_counts: dict[str, int]
    topic_transitions: TransitionCounts
    strategy_transitions: TransitionCounts

    def to_dict(self) -> dict:
        return {
            "n_dialogues": self.n_dialogues,
            "avg_turns": self.avg_turns,
            "avg_utterances": dict(self.avg_utterances),
            "intent_totals": dict(self.intent_totals),
            "labeled_doctor_utterances": self.labeled_doctor_utterances,
            "avg_intents_per_utterance": dict(self.avg_intents_per_utterance),
            "leaf_counts": dict(self.leaf_counts),
            "risk_counts": dict(self.risk_counts),
            "topic_transitions": self.topic_transitions.to_dict(),
            "strategy_transitions": self.strategy_transitions.to_dict(),
        }


@dataclass
class DialogueTally:
    """Additive per-dialogue counts; merged with ``+``."""

    dialogues: int = 0
    exchanges: int = 0
    doctor_utterances: int = 0
    patient_utterances: int = 0
    labeled_doctor_utterances: int = 0
    leaves: Counter = field(default_factory=Counter)
    risks: Counter = field(default_factory=Counter)

    def __add__(self, other: DialogueTally) -> DialogueTally:
        return DialogueTally(
            self.dialogues + other.dialogues,
            self.exchanges + other.exchanges,
            self.doctor_utterances + other.doctor_utterances,
            self.patient_utterances + other.patient_utterances,
            self.labeled_doctor_utterances + other.labeled_doctor_utterances,
            self.leaves + other.leaves,
            self.risks + other.risks,
        )


def tally_dialogue(dialogue: Dialogue) -> DialogueTally:
    tally = DialogueTally(dialogues=1, exchanges=dialogue.exchanges())
    for t in dialogue.turns:
        if t.speaker == DOCTOR:
            tally.doctor_utterances += 1
            if t.intents is not None:
                tally.labeled_doctor_utterances += 1
                tally.leaves.update(str(i) for i in t.intents)
        else:
            tally.patient_utterances += 1
    if dialogue.risk is not None:
        tally.risks[dialogue.risk] += 1
    return tally


def stats_from_tally(
    tally: DialogueTally,
    transitions: tuple[TransitionCounts, TransitionCounts],
    registry: OntologyRegistry | None = None,
) -> CorpusStats:
    registry = registry or default_registry()
    if tally.dialogues == 0:
        raise EmptyCorpus("cannot compute statistics of an empty corpus")
    n = tally.dialogues
    leaf_counts = {str(i): tally.leaves.get(str(i), 0) for i in registry}
    totals = {
        TOD: sum(leaf_counts[str(i)] for i in registry.tod_leaves),
        CHITCHAT: sum(leaf_counts[str(i)] for i in registry.chitchat_leaves),
    }
    totals["total"] = totals[TOD] + totals[CHITCHAT]
    denom = tally.labeled_doctor_utterances
    avg_intents = {k: (v / denom if denom else 0.0) for k, v in totals.items()}
    return CorpusStats(
        n_dialogues=n,
        avg_turns=tally.exchanges / n,
        avg_utterances={
            "total": (tally.doctor_utterances + tally.patient_utterances) / n,
            "doctor": tally.doctor_utterances / n,
            "patient": tally.patient_utterances / n,
        },
        intent_totals=totals,
        labeled_doctor_utterances=denom,
        avg_intents_per_utterance=avg_intents,
        leaf_counts=leaf_counts,
        risk_counts={r: tally.risks.get(r, 0) for r in RISK_LABELS},
        topic_transitions=transitions[0],
        strategy_transitions=transitions[1],
    )


def compute_stats(
    corpus: Corpus | Iterable[Dialogue],
    registry: OntologyRegistry | None = None,
    *,
    singleton_only: bool = False,
    skip_empty: bool = False,
) -> CorpusStats:
    """Corpus-level counts and averages.

    Average intents per utterance divide by doctor utterances that carry an
    ``intents`` field (labeled ones), not by all utterances.
    """
    dialogues = list(corpus)
    if not dialogues:
        raise EmptyCorpus("cannot compute statistics of an empty corpus")
    tally = DialogueTally()
    for d in dialogues:
        tally = tally + tally_dialogue(d)
    transitions = estimate_transition_counts(
        dialogues, registry, singleton_only=singleton_only, skip_empty=skip_empty
    )
    return stats_from_tally(tally, transitions, registry)


# -- D4 conversion ---------------------------------------------------------

# Expected layout of a D4 record; adjust the mapping if a release differs.
D4_FIELD_MAP: Mapping[str, str] = {
    "dialogue_id": "id",
    "turns": "log",
    "speaker": "speaker",
    "text": "text",
    "intents": "intents",
    "state_delta": "state_delta",
    "risk": "risk",
}
D4_SPEAKERS = {"doctor": DOCTOR, "医生": DOCTOR, "patient": PATIENT, "患者": PATIENT, "病人": PATIENT}


def convert_d4_record(record: Mapping, field_map: Mapping[str, str] = D4_FIELD_MAP) -> dict:
    """Rename a D4-style record into this toolkit's dialogue schema.

    Only field names and speaker labels are mapped; the result still has
    to go through :func:`parse_dialogue` for validation.
    """
    out: dict = {"dialogue_id": str(record[field_map["dialogue_id"]]), "turns": []}
    risk = record.get(field_map["risk"])
    if risk is not None:
        out["risk"] = str(risk).casefold()
    for raw in record[field_map["turns"]]:
        speaker = D4_SPEAKERS.get(str(raw[field_map["speaker"]]).casefold(), raw[field_map["speaker"]])
        turn = {"speaker": speaker, "text": raw[field_map["text"]]}
        if speaker == DOCTOR and field_map["intents"] in raw:
            turn["intents"] = list(raw[field_map["intents"]])
        if speaker == PATIENT and field_map["state_delta"] in raw:
            turn["state_delta"] = dict(raw[field_map["state_delta"]])
        out["turns"].append(turn)
    return out
