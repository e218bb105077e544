"""The symptom + empathy intent hierarchy (aspect -> group -> leaf).

The built-in registry holds 38 symptom leaves under 10 core symptoms and
7 chit-chat leaves under 4 strategy groups. Leaves are addressed by a
canonical ``aspect.group.leaf`` string in lower snake case.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, TextIO

from .errors import (
    CountMismatch,
    DuplicateLeaf,
    NotASymptom,
    OntologyError,
    UnknownGroup,
    UnknownIntent,
)

TOD = "tod"
CHITCHAT = "chitchat"
ASPECTS = (TOD, CHITCHAT)

TOD_GROUPS = (
    "cause",
    "mood",
    "interest",
    "social_function",
    "mental_status",
    "sleep",
    "appetite",
    "somatic_symptoms",
    "suicide",
    "screening",
)
CHITCHAT_GROUPS = ("starting_ending", "give_information", "show_empathy", "seek_help")
GROUPS = {TOD: TOD_GROUPS, CHITCHAT: CHITCHAT_GROUPS}

GROUP_DISPLAY = {
    "cause": "Cause",
    "mood": "Mood",
    "interest": "Interest",
    "social_function": "Social Function",
    "mental_status": "Mental Status",
    "sleep": "Sleep",
    "appetite": "Appetite",
    "somatic_symptoms": "Somatic Symptoms",
    "suicide": "Suicide",
    "screening": "Screening",
    "starting_ending": "Starting/ending",
    "give_information": "Give information",
    "show_empathy": "Show empathy",
    "seek_help": "Seek help",
}

EXPECTED_LEAVES = 45

# canonical id, display name, remark, occurrence in the annotated corpus
_BUILTIN: tuple[tuple[str, str, str, int], ...] = (
    ("tod.cause.cause", "cause", "The primary reason for patients seeking assistance.", 1245),
    ("tod.mood.whether", "whether", "Whether patients in a bad mood", 979),
    ("tod.mood.duration", "duration", "", 523),
    ("tod.mood.morning_depression", "morning depression", "Feel more sad in the morning or at night", 359),
    ("tod.interest.whether", "whether", "Does the patient has low interest", 175),
    ("tod.interest.duration", "duration", "", 223),
    ("tod.interest.range", "range", "Past hobbies or all things.", 1178),
    ("tod.interest.indifferent", "indifferent", "Lack of emotional experience.", 320),
    ("tod.social_function.life_affair", "life affair", "The function of dealing with life affairs", 397),
    ("tod.social_function.study_work", "study & work", "", 507),
    ("tod.social_function.social_contact", "social contact", "Whether to contact/talk to family and friends.", 765),
    ("tod.social_function.social_interact", "social interact", "Whether patients deliberately avoid social interaction.", 253),
    ("tod.mental_status.decreased_concentration", "decreased concentration", "", 267),
    ("tod.mental_status.memory_loss", "memory loss", "", 307),
    ("tod.mental_status.tired", "tired", "", 987),
    ("tod.mental_status.difficulty_in_decision", "difficulty in decision", "", 323),
    ("tod.mental_status.decline_in_self_confidence", "decline in self-confidence", "", 852),
    ("tod.sleep.whether", "whether", "Does the patient has sleep problems", 1288),
    ("tod.sleep.difficulty_in_falling_sleep", "difficulty in falling sleep", "", 469),
    ("tod.sleep.light_sleep", "light sleep", "", 413),
    ("tod.sleep.wake_up_early", "wake up early", "", 331),
    ("tod.sleep.sleep_too_short", "sleep too short", "", 284),
    ("tod.sleep.dream", "dream", "", 350),
    ("tod.appetite.whether", "whether", "Does the patient has appetite problems", 1258),
    ("tod.appetite.loss_of_appetite", "loss of appetite", "", 76),
    ("tod.appetite.overeating", "overeating", "", 135),
    ("tod.appetite.significant_weight_change", "significant weight change", "", 755),
    ("tod.somatic_symptoms.psychomotor_agitation", "psychomotor agitation", "Excessive excitement and loquacity.", 547),
    ("tod.somatic_symptoms.psychomotor_retardation", "psychomotor retardation", "Slow response", 524),
    ("tod.somatic_symptoms.physical_discomfort", "physical discomfort", "", 1218),
    ("tod.suicide.self_harm_tendency", "self-harm-tendency", "", 549),
    ("tod.suicide.suicidal_tendency", "suicidal tendency", "", 492),
    ("tod.suicide.suicidal_behavior", "suicidal behavior", "", 305),
    ("tod.suicide.hopelessness", "hopelessness", "", 574),
    ("tod.suicide.guilt", "guilt", "", 498),
    ("tod.suicide.low_self_worth", "low self-worth", "", 506),
    ("tod.screening.mania", "mania", "Is it irritable and prone to disputes", 732),
    ("tod.screening.genetic", "genetic", "", 447),
    ("chitchat.starting_ending.starting_ending", "starting/ending", "", 4302),
    ("chitchat.give_information.question", "requiring personal information", "Inquire about personal information of patients", 2309),
    ("chitchat.give_information.restatement", "restatement", "", 1776),
    ("chitchat.show_empathy.reflection", "reflection", "The doctor demonstrated an understanding of the emotions experienced by the patient.", 1145),
    ("chitchat.show_empathy.self_disclosure", "self-disclosure", "The doctor expressed their own emotions and viewpoints.", 55),
    ("chitchat.show_empathy.affirmation", "affirmation", "The doctor positively acknowledged and recognized the patient.", 1973),
    ("chitchat.seek_help.provide_suggestions", "provide suggestions", "", 2597),
)

DEFAULT_EMPATHY = (
    "chitchat.show_empathy.reflection",
    "chitchat.show_empathy.self_disclosure",
    "chitchat.show_empathy.affirmation",
    "chitchat.seek_help.provide_suggestions",
)
# stricter reading: only the "show empathy" group
SHOW_EMPATHY_ONLY = DEFAULT_EMPATHY[:3]


@dataclass(frozen=True, order=True)
class IntentId:
    aspect: str
    group: str
    leaf: str

    def __str__(self) -> str:
        return f"{self.aspect}.{self.group}.{self.leaf}"

    @property
    def canonical(self) -> str:
        return str(self)

    @property
    def is_symptom(self) -> bool:
        return self.aspect == TOD

    @classmethod
    def parse(cls, text: str) -> IntentId:
        """Split a canonical string without consulting any registry."""
        parts = text.strip().casefold().split(".")
        if len(parts) != 3 or not all(parts):
            raise UnknownIntent(f"not a canonical intent id: {text!r}")
        return cls(*parts)


@dataclass(frozen=True)
class IntentInfo:
    display_name: str
    remark: str = ""
    occurrence: int | None = None


@dataclass(frozen=True)
class OntologyRegistry:
    """Immutable set of intents with metadata and the empathy-strategy set."""

    entries: tuple[tuple[IntentId, IntentInfo], ...]
    empathy_strategies: frozenset[IntentId]
    custom: bool = False
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        index = {}
        for intent, info in self.entries:
            key = str(intent)
            if key in index:
                raise DuplicateLeaf(f"duplicate intent {key}")
            index[key] = (intent, info)
        missing = [str(e) for e in self.empathy_strategies if str(e) not in index]
        if missing:
            raise UnknownIntent(f"empathy strategies not in registry: {', '.join(sorted(missing))}")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[IntentId]:
        return (intent for intent, _ in self.entries)

    def __contains__(self, intent: object) -> bool:
        return str(intent) in self._index

    @property
    def leaves(self) -> tuple[IntentId, ...]:
        return tuple(self)

    @property
    def tod_leaves(self) -> tuple[IntentId, ...]:
        return tuple(i for i in self if i.aspect == TOD)

    @property
    def chitchat_leaves(self) -> tuple[IntentId, ...]:
        return tuple(i for i in self if i.aspect == CHITCHAT)

    def groups(self, aspect: str) -> tuple[str, ...]:
        seen = dict.fromkeys(i.group for i in self if i.aspect == aspect)
        return tuple(seen)

    def leaves_of(self, group: str) -> tuple[IntentId, ...]:
        return tuple(i for i in self if i.group == group)

    @property
    def group_index(self) -> dict[str, frozenset[IntentId]]:
        index: dict[str, set[IntentId]] = {}
        for intent in self:
            index.setdefault(intent.group, set()).add(intent)
        return {g: frozenset(v) for g, v in index.items()}

    def info(self, intent: IntentId | str) -> IntentInfo:
        try:
            return self._index[str(intent)][1]
        except KeyError:
            raise UnknownIntent(f"unknown intent {intent}") from None

    def resolve(self, text: str) -> IntentId:
        return resolve_intent(text, self)

    def with_empathy(self, strategies: Iterable[str | IntentId]) -> OntologyRegistry:
        es = frozenset(self.resolve(str(s)) for s in strategies)
        return OntologyRegistry(self.entries, es, self.custom)


def resolve_intent(text: str, registry: OntologyRegistry) -> IntentId:
    """Look up a canonical id, case-insensitively."""
    key = text.strip().casefold()
    hit = registry._index.get(key)
    if hit is None:
        raise UnknownIntent(f"unknown intent {text!r}")
    return hit[0]


def core_symptom_of(intent: IntentId) -> str:
    """Core symptom (topic) of a symptom leaf."""
    if intent.aspect != TOD:
        raise NotASymptom(f"{intent} is a chit-chat intent and has no core symptom")
    return intent.group


def _builtin_entries() -> list[tuple[IntentId, IntentInfo]]:
    return [
        (IntentId.parse(cid), IntentInfo(display, remark, occ))
        for cid, display, remark, occ in _BUILTIN
    ]


def _read_lines(source) -> tuple[list[str], str | None]:
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        return path.read_text(encoding="utf-8").splitlines(), str(path)
    if isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return data.splitlines(), getattr(source, "name", None)
    return list(source), None


def parse_override(source: str | os.PathLike | TextIO) -> list[tuple[IntentId, IntentInfo, int]]:
    """Parse an override document into ``(intent, info, line_no)`` records."""
    lines, name = _read_lines(source)
    records = []
    seen: dict[str, int] = {}
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 2 or len(fields) > 4:
            raise OntologyError(
                f"expected 2-4 tab-separated fields, got {len(fields)}", line=line_no, source=name
            )
        cid, display = fields[0], fields[1]
        remark = fields[2] if len(fields) > 2 else ""
        occ_text = fields[3].strip() if len(fields) > 3 else ""
        try:
            intent = IntentId.parse(cid)
        except UnknownIntent as exc:
            raise OntologyError(exc.message, line=line_no, source=name) from None
        if intent.aspect not in GROUPS:
            raise UnknownGroup(f"unknown aspect {intent.aspect!r} in {cid}", line=line_no, source=name)
        if intent.group not in GROUPS[intent.aspect]:
            raise UnknownGroup(
                f"group {intent.group!r} is not one of the {intent.aspect} groups", line=line_no, source=name
            )
        key = str(intent)
        if key in seen:
            raise DuplicateLeaf(f"{key} already defined on line {seen[key]}", line=line_no, source=name)
        seen[key] = line_no
        occurrence = None
        if occ_text:
            if not occ_text.isdigit():
                raise OntologyError(f"occurrence must be a nonnegative integer, got {occ_text!r}", line=line_no, source=name)
            occurrence = int(occ_text)
        records.append((intent, IntentInfo(display.strip(), remark.strip(), occurrence), line_no))
    return records


def load_ontology(
    source: str | os.PathLike | TextIO | None = None,
    *,
    custom: bool = False,
    empathy: Iterable[str] | None = None,
) -> OntologyRegistry:
    """Build the registry, optionally applying an override document.

    Override records replace the metadata of existing leaves; unseen ids
    are appended. The result must still hold 45 leaves unless ``custom``
    is set.
    """
    entries = dict((str(i), (i, info)) for i, info in _builtin_entries())
    if source is not None:
        for intent, info, _ in parse_override(source):
            entries[str(intent)] = (intent, info)
    if len(entries) != EXPECTED_LEAVES and not custom:
        raise CountMismatch(
            f"override yields {len(entries)} leaves, expected {EXPECTED_LEAVES} (pass custom=True for a custom ontology)"
        )
    pairs = tuple(entries.values())
    index = {str(i) for i, _ in pairs}
    names = DEFAULT_EMPATHY if empathy is None else tuple(empathy)
    es = frozenset(IntentId.parse(n) for n in names if n.strip().casefold() in index)
    if empathy is not None and len(es) != len(set(n.strip().casefold() for n in names)):
        unknown = sorted(n for n in names if n.strip().casefold() not in index)
        raise UnknownIntent(f"empathy strategies not in registry: {', '.join(unknown)}")
    return OntologyRegistry(pairs, es, custom)


_DEFAULT: OntologyRegistry | None = None


def default_registry() -> OntologyRegistry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_ontology()
    return _DEFAULT
