import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seo.errors import LengthMismatch, UnknownSlot
from seo.ontology import IntentId, default_registry
from seo.state import (
    ABSENT,
    PRESENT,
    UNKNOWN,
    DialogueState,
    StateDelta,
    apply_delta,
    diff_states,
    fold_deltas,
    slot_id,
)

SLOTS = default_registry().tod_leaves
VALUES = (UNKNOWN, PRESENT, ABSENT)

states = st.lists(st.sampled_from(VALUES), min_size=len(SLOTS), max_size=len(SLOTS)).map(
    lambda vs: DialogueState(SLOTS, tuple(vs))
)
deltas = st.dictionaries(st.sampled_from(SLOTS), st.sampled_from(VALUES), max_size=8).map(StateDelta)


def test_initial_is_all_unknown():
    s = DialogueState.initial()
    assert len(s) == 38 and s.known() == frozenset()


def test_apply_examples():
    s0 = DialogueState.initial()
    assert apply_delta(s0, {}) == s0
    s1 = apply_delta(s0, StateDelta({slot_id("sleep.whether"): "present"}))
    assert s1["tod.sleep.whether"] is PRESENT
    assert sum(v is UNKNOWN for v in s1.values) == 37
    s2 = apply_delta(s1, StateDelta({slot_id("tod.sleep.whether"): ABSENT}))
    assert s2["sleep.whether"] is ABSENT


def test_apply_does_not_mutate():
    s0 = DialogueState.initial()
    apply_delta(s0, StateDelta({SLOTS[0]: PRESENT}))
    assert s0 == DialogueState.initial()


def test_diff_examples():
    s0 = DialogueState.initial()
    assert diff_states(s0, s0) == {}
    s1 = s0.with_value("sleep.whether", PRESENT)
    assert diff_states(s1, s0).to_dict() == {"tod.sleep.whether": "present"}


def test_unknown_slot():
    with pytest.raises(UnknownSlot):
        slot_id("sleep.snoring")
    with pytest.raises(UnknownSlot):
        apply_delta(DialogueState.initial(), {IntentId("tod", "sleep", "snoring"): PRESENT})
    with pytest.raises(UnknownSlot):
        StateDelta({SLOTS[0]: "maybe"})
    with pytest.raises(UnknownSlot):
        diff_states(DialogueState.initial(), DialogueState.initial(SLOTS[:5]))


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        DialogueState(SLOTS, (UNKNOWN,))


def test_values_are_coerced_case_insensitively():
    d = StateDelta({SLOTS[0]: " Present "})
    assert d[SLOTS[0]] is PRESENT


def test_sparse_round_trip():
    s = DialogueState.initial().with_value("mood.whether", PRESENT).with_value("sleep.dream", ABSENT)
    assert s.to_dict() == {"tod.mood.whether": "present", "tod.sleep.dream": "absent"}
    assert DialogueState.from_mapping(s.to_dict()) == s
    assert len(s.to_dict(sparse=False)) == 38


@settings(max_examples=300)
@given(states, states)
def test_delta_algebra(curr, prev):
    delta = diff_states(curr, prev)
    assert apply_delta(prev, delta) == curr
    # minimality: only slots that differ are listed
    for slot in delta:
        assert curr[slot] is not prev[slot]
    differing = sum(a is not b for a, b in zip(curr.values, prev.values))
    assert len(delta) == differing


@given(states)
def test_identity_laws(s):
    assert diff_states(s, s) == {}
    assert apply_delta(s, StateDelta()) == s


@given(st.lists(deltas, max_size=6))
def test_fold_matches_sequential_overwrite(ds):
    naive = {s: UNKNOWN for s in SLOTS}
    for d in ds:
        for k, v in d.items():
            naive[k] = v
    folded = fold_deltas(ds)
    assert all(folded[s] is naive[s] for s in SLOTS)


@given(deltas)
def test_delta_hash_and_order(d):
    assert hash(d) == hash(StateDelta(dict(d)))
    keys = [str(k) for k in d]
    assert keys == sorted(keys)
