"""Dialogue state tracking: gold replay, a lexical delta tracker, DST scoring.

States are indexed by doctor utterance: snapshot ``k`` is what is known
about the patient right before the k-th (0-based) doctor utterance.
Trackers only ever emit deltas; full states are recovered by folding.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .corpus import DOCTOR, PATIENT, Corpus, Dialogue, Turn, dumps_line, iter_jsonl
from .errors import LengthMismatch, MalformedLexicon, SchemaError, SeoError
from .ontology import IntentId, OntologyRegistry, default_registry
from .state import (
    UNKNOWN,
    DialogueState,
    SlotValue,
    StateDelta,
    apply_delta,
    coerce_value,
    diff_states,
    slot_id,
)

DEFAULT_WINDOW = 3


def replay_gold(dialogue: Dialogue, slots: tuple[IntentId, ...] | None = None) -> list[DialogueState]:
    """One snapshot per doctor utterance, folding patient deltas seen so far."""
    state = DialogueState.initial(slots)
    snapshots = []
    for turn in dialogue.turns:
        if turn.speaker == DOCTOR:
            snapshots.append(state)
        elif turn.state_delta:
            state = apply_delta(state, turn.state_delta)
    return snapshots


def final_state(dialogue: Dialogue, slots: tuple[IntentId, ...] | None = None) -> DialogueState:
    """State after every patient delta, including those after the last doctor turn."""
    state = DialogueState.initial(slots)
    for turn in dialogue.turns:
        if turn.speaker == PATIENT and turn.state_delta:
            state = apply_delta(state, turn.state_delta)
    return state


def states_to_deltas(states: Sequence[DialogueState]) -> list[StateDelta]:
    """Per-snapshot deltas relative to the previous snapshot (first vs all-unknown)."""
    out = []
    prev = None
    for s in states:
        prev = prev or DialogueState.initial(s.slots)
        out.append(diff_states(s, prev))
        prev = s
    return out


def deltas_to_states(deltas: Iterable[Mapping], slots: tuple[IntentId, ...] | None = None) -> list[DialogueState]:
    state = DialogueState.initial(slots)
    out = []
    for d in deltas:
        state = apply_delta(state, d)
        out.append(state)
    return out


@dataclass(frozen=True)
class HistoryWindow:
    dialogue_id: str
    doctor_index: int
    turns: tuple[Turn, ...]

    def patient_texts(self) -> list[str]:
        return [t.text for t in self.turns if t.speaker == PATIENT]


def history_window(dialogue: Dialogue, k: int, w: int = DEFAULT_WINDOW) -> HistoryWindow:
    """Turns from doctor utterance ``k - w`` up to (excluding) doctor utterance ``k``.

    ``k == L`` gives the window closing the dialogue.
    """
    if w < 1:
        raise ValueError("window must cover at least one turn pair")
    positions = dialogue.doctor_positions()
    if not 0 <= k <= len(positions):
        raise IndexError(f"doctor index {k} out of range for dialogue {dialogue.dialogue_id!r}")
    end = positions[k] if k < len(positions) else len(dialogue.turns)
    start = positions[k - w] if k - w > 0 else 0
    return HistoryWindow(dialogue.dialogue_id, k, dialogue.turns[start:end])


# -- lexical tracker -------------------------------------------------------


@dataclass(frozen=True)
class LexiconRule:
    pattern: re.Pattern
    slot: IntentId
    value: SlotValue
    override: bool = False


def load_lexicon(
    source: str | os.PathLike | IO | Iterable[str],
    slots: tuple[IntentId, ...] | None = None,
) -> list[LexiconRule]:
    """Read ``pattern<TAB>slot<TAB>value[<TAB>override]`` lines.

    Patterns are case-insensitive regular expressions; ``override`` is
    ``1``/``true`` to let the rule overwrite an already known slot.
    """
    if isinstance(source, (str, os.PathLike)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    elif hasattr(source, "read"):
        data = source.read()
        lines = (data.decode("utf-8") if isinstance(data, bytes) else data).splitlines()
    else:
        lines = list(source)
    rules = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise MalformedLexicon(f"expected 3 or 4 tab-separated fields, got {len(fields)}", line=line_no)
        try:
            pattern = re.compile(fields[0], re.IGNORECASE)
        except re.error as exc:
            raise MalformedLexicon(f"bad pattern {fields[0]!r}: {exc}", line=line_no) from None
        try:
            slot = slot_id(fields[1], slots)
            value = coerce_value(fields[2])
        except SeoError as exc:
            raise MalformedLexicon(exc.message, line=line_no) from None
        override = False
        if len(fields) == 4:
            flag = fields[3].strip().casefold()
            if flag not in ("", "0", "1", "true", "false", "override"):
                raise MalformedLexicon(f"override flag must be 0/1/true/false, got {fields[3]!r}", line=line_no)
            override = flag in ("1", "true", "override")
        rules.append(LexiconRule(pattern, slot, value, override))
    return rules


def lexical_track(window: HistoryWindow, prev: DialogueState, lexicon: Sequence[LexiconRule]) -> StateDelta:
    """Delta from lexicon hits in the window's patient utterances.

    Rules are tried in lexicon order and the first hit on a slot wins.
    Slots already known in ``prev`` are only touched by override rules.
    """
    texts = window.patient_texts()
    assigned: dict[IntentId, SlotValue] = {}
    for rule in lexicon:
        if not isinstance(rule, LexiconRule):
            raise MalformedLexicon(f"lexicon entries must be LexiconRule, got {type(rule).__name__}")
        if rule.slot in assigned:
            continue
        if prev[rule.slot] is not UNKNOWN and not rule.override:
            continue
        if any(rule.pattern.search(t) for t in texts):
            assigned[rule.slot] = rule.value
    # an overriding hit that restates the current value is not a change
    return StateDelta({s: v for s, v in assigned.items() if prev[s] is not v})


def track_dialogue(
    dialogue: Dialogue,
    lexicon: Sequence[LexiconRule],
    *,
    window: int = DEFAULT_WINDOW,
    slots: tuple[IntentId, ...] | None = None,
) -> list[DialogueState]:
    """Run the lexical tracker; one snapshot per doctor utterance."""
    state = DialogueState.initial(slots)
    out = []
    for k in range(dialogue.L):
        delta = lexical_track(history_window(dialogue, k, window), state, lexicon)
        state = apply_delta(state, delta)
        out.append(state)
    return out


DEFAULT_LEXICON_TSV = """\
# pattern\tslot\tvalue\toverride
can'?t sleep|trouble sleeping|insomnia|睡不着|失眠\tsleep.whether\tpresent
hard to fall asleep|difficulty (in )?falling asleep|入睡困难|很难入睡\tsleep.difficulty_in_falling_sleep\tpresent
wake up (too )?early|早醒\tsleep.wake_up_early\tpresent
nightmares?|dreams? a lot|多梦|做梦\tsleep.dream\tpresent
sleep (is )?(fine|ok|well)|睡得(挺)?好\tsleep.whether\tabsent
(feel|feeling|been) (down|sad|depressed|low)|心情(不好|低落)|难过\tmood.whether\tpresent
no appetite|not hungry|lost my appetite|没(有)?胃口|食欲(不好|下降)\tappetite.whether\tpresent
eat(ing)? too much|overeat|暴饮暴食\tappetite.overeating\tpresent
lost interest|nothing interests|没(有)?兴趣\tinterest.whether\tpresent
tired|exhausted|no energy|累|疲惫\tmental_status.tired\tpresent
can'?t concentrate|hard to focus|注意力不集中\tmental_status.decreased_concentration\tpresent
hopeless|没有希望|绝望\tsuicide.hopelessness\tpresent
hurt myself|self-harm|自残|伤害自己\tsuicide.self_harm_tendency\tpresent
(want|wanted) to die|suicid|想死|自杀\tsuicide.suicidal_tendency\tpresent
my fault|guilty|内疚|自责\tsuicide.guilt\tpresent
"""


def default_lexicon(slots: tuple[IntentId, ...] | None = None) -> list[LexiconRule]:
    return load_lexicon(DEFAULT_LEXICON_TSV.splitlines(), slots)


# -- evaluation ------------------------------------------------------------


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class DstTally:
    turns: int = 0
    exact: int = 0
    slot_pairs: int = 0
    slot_matches: int = 0
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: DstTally) -> DstTally:
        return DstTally(*(a + b for a, b in zip(self.astuple(), other.astuple())))

    def astuple(self) -> tuple[int, ...]:
        return (self.turns, self.exact, self.slot_pairs, self.slot_matches, self.tp, self.fp, self.fn)

    @property
    def jga(self) -> float:
        return self.exact / self.turns if self.turns else 0.0

    @property
    def slot_accuracy(self) -> float:
        return self.slot_matches / self.slot_pairs if self.slot_pairs else 0.0

    @property
    def symptom(self) -> tuple[float, float, float]:
        return _prf(self.tp, self.fp, self.fn)


def tally_dst(predicted: Sequence[DialogueState], gold: Sequence[DialogueState], dialogue_id: str = "") -> DstTally:
    if len(predicted) != len(gold):
        raise LengthMismatch(
            f"dialogue {dialogue_id!r}: {len(predicted)} predicted vs {len(gold)} gold snapshots"
        )
    t = DstTally()
    for p, g in zip(predicted, gold):
        if p.slots != g.slots:
            raise LengthMismatch(f"dialogue {dialogue_id!r}: predicted and gold states use different slots")
        t.turns += 1
        matches = sum(a is b for a, b in zip(p.values, g.values))
        t.slot_pairs += len(g.values)
        t.slot_matches += matches
        t.exact += matches == len(g.values)
    if gold:
        pred_pos, gold_pos = predicted[-1].present(), gold[-1].present()
        t.tp = len(pred_pos & gold_pos)
        t.fp = len(pred_pos - gold_pos)
        t.fn = len(gold_pos - pred_pos)
    return t


@dataclass(frozen=True)
class DstEvalReport:
    jga: float
    slot_accuracy: float
    symptom_precision: float
    symptom_recall: float
    symptom_f1: float
    turns: int
    per_dialogue: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "jga": self.jga,
            "slot_accuracy": self.slot_accuracy,
            "symptom_f1": {"precision": self.symptom_precision, "recall": self.symptom_recall, "f1": self.symptom_f1},
            "turns": self.turns,
            "per_dialogue": {k: self.per_dialogue[k] for k in sorted(self.per_dialogue)},
        }


def report_from_tallies(tallies: Mapping[str, DstTally]) -> DstEvalReport:
    total = DstTally()
    per = {}
    for did in sorted(tallies):
        t = tallies[did]
        total = total + t
        p, r, f = t.symptom
        per[did] = {"turns": t.turns, "jga": t.jga, "slot_accuracy": t.slot_accuracy, "symptom_f1": f}
    p, r, f = total.symptom
    return DstEvalReport(total.jga, total.slot_accuracy, p, r, f, total.turns, per)


def evaluate_dst(
    predicted: Mapping[str, Sequence[DialogueState]],
    gold: Mapping[str, Sequence[DialogueState]],
) -> DstEvalReport:
    """JGA, slot accuracy and final-turn Symptom F1 (micro over dialogues).

    JGA counts snapshots whose every slot matches; slot accuracy averages
    over all (snapshot, slot) pairs; Symptom F1 treats ``present`` in the
    last snapshot of each dialogue as the positive class.
    """
    if set(predicted) != set(gold):
        missing = sorted(set(gold) - set(predicted))
        extra = sorted(set(predicted) - set(gold))
        raise LengthMismatch(f"dialogue sets differ (missing predictions: {missing[:5]}, unknown: {extra[:5]})")
    return report_from_tallies({did: tally_dst(predicted[did], gold[did], did) for did in gold})


def gold_states(corpus: Corpus, slots: tuple[IntentId, ...] | None = None) -> dict[str, list[DialogueState]]:
    return {d.dialogue_id: replay_gold(d, slots) for d in corpus}


# -- prediction files ------------------------------------------------------


def load_state_predictions(
    stream: bytes | IO | str,
    corpus: Corpus,
    registry: OntologyRegistry | None = None,
    *,
    source: str | None = None,
) -> dict[str, list[DialogueState]]:
    """Read ``{"dialogue_id", "turn_index", "state" | "state_delta"}`` rows.

    ``state`` rows give sparse full states (omitted slots are unknown);
    ``state_delta`` rows are folded in turn order. A turn without a row
    carries the previous snapshot forward. A file must use one kind only.
    """
    registry = registry or default_registry()
    slots = registry.tod_leaves
    kind = None
    rows: dict[str, dict[int, Mapping]] = {}
    for line_no, rec in iter_jsonl(stream, source):
        if not isinstance(rec, dict):
            raise SchemaError("prediction row must be a JSON object", line=line_no, source=source)
        did, k = rec.get("dialogue_id"), rec.get("turn_index")
        if not isinstance(did, str) or not isinstance(k, int) or isinstance(k, bool):
            raise SchemaError("row needs string 'dialogue_id' and integer 'turn_index'", line=line_no, source=source)
        row_kind = "state" if "state" in rec else "state_delta" if "state_delta" in rec else None
        if row_kind is None or ("state" in rec and "state_delta" in rec):
            raise SchemaError("row needs exactly one of 'state' or 'state_delta'", line=line_no, source=source)
        if kind is not None and row_kind != kind:
            raise SchemaError(f"file mixes {kind} and {row_kind} rows", line=line_no, source=source)
        kind = row_kind
        if did not in corpus:
            raise LengthMismatch(f"unknown dialogue {did!r}", line=line_no, source=source)
        if not 0 <= k < corpus[did].L:
            raise LengthMismatch(
                f"turn_index {k} outside 0..{corpus[did].L - 1} for dialogue {did!r}", line=line_no, source=source
            )
        if k in rows.setdefault(did, {}):
            raise SchemaError(f"duplicate row for ({did!r}, {k})", line=line_no, source=source)
        payload = rec[row_kind]
        if not isinstance(payload, dict):
            raise SchemaError(f"'{row_kind}' must be an object", line=line_no, source=source)
        try:
            rows[did][k] = StateDelta({slot_id(s, slots): v for s, v in payload.items()})
        except SeoError as exc:
            raise type(exc)(exc.message, line=line_no, source=source) from None

    out = {}
    for did, by_turn in rows.items():
        state = DialogueState.initial(slots)
        seq = []
        for k in range(corpus[did].L):
            if k in by_turn:
                if kind == "state":
                    state = apply_delta(DialogueState.initial(slots), by_turn[k])
                else:
                    state = apply_delta(state, by_turn[k])
            seq.append(state)
        out[did] = seq
    return out


def write_state_predictions(states: Mapping[str, Sequence[DialogueState]], *, mode: str = "state") -> bytes:
    """Serialize snapshots as full sparse states or as per-turn deltas."""
    if mode not in ("state", "delta"):
        raise ValueError("mode must be 'state' or 'delta'")
    chunks = []
    for did in sorted(states):
        seq = states[did]
        payloads = [s.to_dict() for s in seq] if mode == "state" else [d.to_dict() for d in states_to_deltas(seq)]
        key = "state" if mode == "state" else "state_delta"
        for k, payload in enumerate(payloads):
            chunks.append(dumps_line({"dialogue_id": did, "turn_index": k, key: payload}))
    return b"".join(chunks)

