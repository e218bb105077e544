import io

import pytest

from seo.errors import CountMismatch, DuplicateLeaf, NotASymptom, OntologyError, UnknownGroup, UnknownIntent
from seo.ontology import (
    CHITCHAT,
    SHOW_EMPATHY_ONLY,
    TOD,
    IntentId,
    core_symptom_of,
    default_registry,
    load_ontology,
    resolve_intent,
)


def test_builtin_shape(registry):
    assert len(registry) == 45
    assert len(registry.tod_leaves) == 38
    assert len(registry.chitchat_leaves) == 7
    assert len(registry.groups(TOD)) == 10
    assert len(registry.groups(CHITCHAT)) == 4
    assert len(registry.empathy_strategies) == 4


def test_occurrence_metadata(registry):
    assert registry.info("tod.cause.cause").occurrence == 1245
    assert registry.info("chitchat.starting_ending.starting_ending").occurrence == 4302
    assert registry.info("chitchat.show_empathy.self_disclosure").occurrence == 55
    assert sum(registry.info(i).occurrence for i in registry.chitchat_leaves) == 14157


def test_group_sizes(registry):
    sizes = {g: len(registry.leaves_of(g)) for g in registry.groups(TOD)}
    assert sizes == {
        "cause": 1, "mood": 3, "interest": 4, "social_function": 4, "mental_status": 5,
        "sleep": 6, "appetite": 4, "somatic_symptoms": 3, "suicide": 6, "screening": 2,
    }


def test_canonical_ids_are_lower_snake(registry):
    for intent in registry:
        text = str(intent)
        assert text == text.lower() and text.isascii() and " " not in text and "-" not in text


def test_question_display_name(registry):
    assert registry.info("chitchat.give_information.question").display_name == "requiring personal information"


def test_resolve():
    reg = default_registry()
    assert resolve_intent("tod.sleep.wake_up_early", reg) == IntentId("tod", "sleep", "wake_up_early")
    assert resolve_intent("TOD.Sleep.Dream", reg) == IntentId("tod", "sleep", "dream")
    with pytest.raises(UnknownIntent):
        resolve_intent("tod.sleep.snoring", reg)
    with pytest.raises(UnknownIntent):
        resolve_intent("sleep.dream", reg)


def test_core_symptom_of(registry):
    assert core_symptom_of(registry.resolve("tod.suicide.guilt")) == "suicide"
    assert core_symptom_of(registry.resolve("tod.cause.cause")) == "cause"
    with pytest.raises(NotASymptom):
        core_symptom_of(registry.resolve("chitchat.show_empathy.reflection"))


def test_core_symptom_total(registry):
    for intent in registry:
        if intent.aspect == TOD:
            assert core_symptom_of(intent) == intent.group
        else:
            with pytest.raises(NotASymptom):
                core_symptom_of(intent)


def test_load_is_idempotent():
    assert load_ontology() == load_ontology()


def test_override_replaces_metadata():
    doc = io.StringIO("# comment\ntod.sleep.dream\tnightmares\tbad dreams\t7\n")
    reg = load_ontology(doc)
    assert reg.info("tod.sleep.dream").display_name == "nightmares"
    assert reg.info("tod.sleep.dream").occurrence == 7
    assert len(reg) == 45


def test_override_duplicate_leaf():
    doc = io.StringIO("tod.sleep.dream\ta\ntod.sleep.dream\tb\n")
    with pytest.raises(DuplicateLeaf) as exc:
        load_ontology(doc)
    assert exc.value.line == 2


def test_override_unknown_group():
    with pytest.raises(UnknownGroup):
        load_ontology(io.StringIO("tod.hearing.tinnitus\ttinnitus\n"))


def test_override_new_leaf_needs_custom():
    doc = "tod.sleep.snoring\tsnoring\n"
    with pytest.raises(CountMismatch):
        load_ontology(io.StringIO(doc))
    reg = load_ontology(io.StringIO(doc), custom=True)
    assert len(reg) == 46 and reg.resolve("tod.sleep.snoring")


def test_override_bad_fields():
    with pytest.raises(OntologyError):
        load_ontology(io.StringIO("tod.sleep.dream\n"))
    with pytest.raises(OntologyError):
        load_ontology(io.StringIO("tod.sleep.dream\tx\t\tmany\n"))


def test_empathy_knob():
    strict = load_ontology(empathy=SHOW_EMPATHY_ONLY)
    assert len(strict.empathy_strategies) == 3
    assert strict.resolve("chitchat.seek_help.provide_suggestions") not in strict.empathy_strategies
    with pytest.raises(UnknownIntent):
        load_ontology(empathy=["chitchat.show_empathy.hug"])
