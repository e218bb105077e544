"""Ternary dialogue state over the symptom slots and its delta algebra.

A state is a total assignment of every symptom leaf to ``unknown``,
``present`` or ``absent``. A delta lists only the slots that change;
tracking a dialogue is a left fold of ``apply_delta`` from the
all-unknown state.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Iterator

from .errors import LengthMismatch, UnknownSlot
from .ontology import TOD, IntentId, OntologyRegistry, default_registry


class SlotValue(str, Enum):
    UNKNOWN = "unknown"
    PRESENT = "present"
    ABSENT = "absent"

    def __str__(self) -> str:
        return self.value


UNKNOWN, PRESENT, ABSENT = SlotValue.UNKNOWN, SlotValue.PRESENT, SlotValue.ABSENT


def default_slots() -> tuple[IntentId, ...]:
    return default_registry().tod_leaves


@lru_cache(maxsize=64)
def _slot_index(slots: tuple[IntentId, ...]) -> dict[IntentId, int]:
    return {s: i for i, s in enumerate(slots)}


@lru_cache(maxsize=64)
def _slot_names(slots: tuple[IntentId, ...]) -> dict[str, IntentId]:
    names = {}
    for s in slots:
        names[str(s)] = s
        names[f"{s.group}.{s.leaf}"] = s
    return names


def slot_id(name: str | IntentId, slots: tuple[IntentId, ...] | None = None) -> IntentId:
    """Resolve a slot given as ``tod.group.leaf`` or the short ``group.leaf``."""
    slots = slots or default_slots()
    if isinstance(name, IntentId):
        if name in _slot_index(slots):
            return name
        raise UnknownSlot(f"{name} is not a dialogue-state slot")
    hit = _slot_names(slots).get(name.strip().casefold())
    if hit is None:
        raise UnknownSlot(f"{name!r} is not a dialogue-state slot")
    return hit


def coerce_value(value: str | SlotValue) -> SlotValue:
    if isinstance(value, SlotValue):
        return value
    try:
        return SlotValue(str(value).strip().casefold())
    except ValueError:
        raise UnknownSlot(f"slot value must be unknown/present/absent, got {value!r}") from None


class StateDelta(Mapping):
    """Immutable map from slot to its new value."""

    __slots__ = ("_items",)

    def __init__(self, assignments: Mapping | Iterable = ()):
        items = dict(assignments.items() if isinstance(assignments, Mapping) else assignments)
        self._items = {k: coerce_value(v) for k, v in items.items()}

    def __getitem__(self, key: IntentId) -> SlotValue:
        return self._items[key]

    def __iter__(self) -> Iterator[IntentId]:
        return iter(sorted(self._items, key=str))

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        return hash(frozenset(self._items.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v.value}" for k, v in self.items())
        return f"StateDelta({{{body}}})"

    def to_dict(self) -> dict[str, str]:
        return {str(k): v.value for k, v in self.items()}


EMPTY_DELTA = StateDelta()


@dataclass(frozen=True)
class DialogueState:
    """Total ternary assignment over ``slots`` (value semantics)."""

    slots: tuple[IntentId, ...]
    values: tuple[SlotValue, ...]

    def __post_init__(self):
        if len(self.slots) != len(self.values):
            raise LengthMismatch(f"{len(self.slots)} slots but {len(self.values)} values")

    @classmethod
    def initial(cls, slots: tuple[IntentId, ...] | None = None) -> DialogueState:
        slots = slots or default_slots()
        return cls(slots, (UNKNOWN,) * len(slots))

    @classmethod
    def from_registry(cls, registry: OntologyRegistry) -> DialogueState:
        return cls.initial(registry.tod_leaves)

    @classmethod
    def from_mapping(cls, mapping: Mapping, slots: tuple[IntentId, ...] | None = None) -> DialogueState:
        """Sparse mapping -> state; omitted slots are unknown."""
        state = cls.initial(slots)
        delta = StateDelta({slot_id(k, state.slots): v for k, v in mapping.items()})
        return apply_delta(state, delta)

    def __getitem__(self, slot: IntentId | str) -> SlotValue:
        return self.values[_slot_index(self.slots)[slot_id(slot, self.slots)]]

    def __len__(self) -> int:
        return len(self.slots)

    def items(self) -> Iterator[tuple[IntentId, SlotValue]]:
        return zip(self.slots, self.values)

    def with_value(self, slot: IntentId | str, value: SlotValue | str) -> DialogueState:
        return apply_delta(self, StateDelta({slot_id(slot, self.slots): value}))

    def present(self) -> frozenset[IntentId]:
        return frozenset(s for s, v in self.items() if v is PRESENT)

    def known(self) -> frozenset[IntentId]:
        return frozenset(s for s, v in self.items() if v is not UNKNOWN)

    def to_dict(self, *, sparse: bool = True) -> dict[str, str]:
        return {
            str(s): v.value
            for s, v in sorted(self.items(), key=lambda kv: str(kv[0]))
            if not sparse or v is not UNKNOWN
        }


def apply_delta(state: DialogueState, delta: Mapping) -> DialogueState:
    """Overwrite the delta's slots; the input state is left untouched."""
    if not delta:
        return state
    index = _slot_index(state.slots)
    values = list(state.values)
    for slot, value in delta.items():
        pos = index.get(slot)
        if pos is None:
            raise UnknownSlot(f"{slot} is not a dialogue-state slot")
        values[pos] = coerce_value(value)
    return DialogueState(state.slots, tuple(values))


def diff_states(curr: DialogueState, prev: DialogueState) -> StateDelta:
    """Minimal delta taking ``prev`` to ``curr``."""
    if curr.slots != prev.slots:
        raise UnknownSlot("states are defined over different slot sets")
    return StateDelta({s: c for s, c, p in zip(curr.slots, curr.values, prev.values) if c is not p})


def fold_deltas(deltas: Iterable[Mapping], start: DialogueState | None = None) -> DialogueState:
    state = start or DialogueState.initial()
    for delta in deltas:
        state = apply_delta(state, delta)
    return state


__all__ = [
    "ABSENT",
    "PRESENT",
    "TOD",
    "UNKNOWN",
    "DialogueState",
    "EMPTY_DELTA",
    "SlotValue",
    "StateDelta",
    "apply_delta",
    "default_slots",
    "diff_states",
    "fold_deltas",
    "slot_id",
]
