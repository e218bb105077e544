"""Policy-driven dialogue simulation and a rule-based depression risk scorer.

The doctor walks core symptoms along a topic Markov chain estimated from a
corpus, asks each topic's next unasked leaf, and mixes in empathy
strategies at phase-dependent rates. The patient discloses the asked
slot's true value with probability equal to the current rapport, which
grows with every empathetic doctor turn.
"""

from __future__ import annotations

import json
import math
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .corpus import DOCTOR, PATIENT, RISK_LABELS, Corpus, Dialogue, Turn, estimate_transition_counts, iter_jsonl
from .errors import EmptyCorpus, MissingTemplate, NonTerminating, RuleTableError, SchemaError, SeoError
from .ontology import GROUP_DISPLAY, TOD, IntentId, OntologyRegistry, default_registry
from .state import ABSENT, PRESENT, UNKNOWN, DialogueState, StateDelta, apply_delta, slot_id
from .tracking import final_state

PHASES = ("opening", "body", "closing")
HARD_CAP = 1000
ROW_TOL = 1e-9
STARTING_ENDING = "chitchat.starting_ending.starting_ending"


def phase_of(k: int, length: int) -> str:
    """Phase of doctor turn ``k`` (0-based) in a dialogue of ``length`` doctor turns."""
    if 3 * k < length:
        return "opening"
    if 3 * k < 2 * length:
        return "body"
    return "closing"


# -- policy ----------------------------------------------------------------


@dataclass(frozen=True)
class PolicyModel:
    topics: tuple[str, ...]
    initial: tuple[float, ...]
    transitions: tuple[tuple[float, ...], ...]
    empathy_rate: Mapping[str, float]
    empathy_mix: Mapping[str, Mapping[str, float]]
    min_coverage: float = 0.5
    max_turns: int = 40
    repeat_prob: float = 0.0
    repeat_window: int = 3

    def __post_init__(self):
        n = len(self.topics)
        if len(self.initial) != n or len(self.transitions) != n or any(len(r) != n for r in self.transitions):
            raise SchemaError("policy dimensions do not match the topic list")
        for name, row in [("initial", self.initial), *((f"row {t}", r) for t, r in zip(self.topics, self.transitions))]:
            _check_distribution(row, name)
        for phase in PHASES:
            rate = self.empathy_rate.get(phase)
            if rate is None or not 0.0 <= rate <= 1.0:
                raise SchemaError(f"empathy rate for {phase} must be in [0, 1]")
            mix = self.empathy_mix.get(phase, {})
            if mix:
                _check_distribution(tuple(mix.values()), f"empathy mix for {phase}")
        if not 0.0 <= self.min_coverage <= 1.0:
            raise SchemaError("min_coverage must be in [0, 1]")
        if not 0.0 <= self.repeat_prob <= 1.0:
            raise SchemaError("repeat_prob must be in [0, 1]")
        if self.repeat_window < 1:
            raise SchemaError("repeat_window must be positive")

    def matrix(self) -> np.ndarray:
        return np.array(self.transitions, dtype=float)

    def replace(self, **changes) -> PolicyModel:
        data = self.to_dict()
        data.update(changes)
        return PolicyModel.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "topics": list(self.topics),
            "initial": list(self.initial),
            "transitions": [list(r) for r in self.transitions],
            "empathy_rate": {p: self.empathy_rate[p] for p in PHASES},
            "empathy_mix": {p: dict(sorted(self.empathy_mix.get(p, {}).items())) for p in PHASES},
            "min_coverage": self.min_coverage,
            "max_turns": self.max_turns,
            "repeat_prob": self.repeat_prob,
            "repeat_window": self.repeat_window,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> PolicyModel:
        try:
            return cls(
                topics=tuple(data["topics"]),
                initial=tuple(float(x) for x in data["initial"]),
                transitions=tuple(tuple(float(x) for x in row) for row in data["transitions"]),
                empathy_rate={p: float(v) for p, v in data["empathy_rate"].items()},
                empathy_mix={p: {k: float(v) for k, v in mix.items()} for p, mix in data.get("empathy_mix", {}).items()},
                min_coverage=float(data.get("min_coverage", 0.5)),
                max_turns=int(data.get("max_turns", 40)),
                repeat_prob=float(data.get("repeat_prob", 0.0)),
                repeat_window=int(data.get("repeat_window", 3)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed policy: {exc}") from None

    @classmethod
    def load(cls, path: str | os.PathLike) -> PolicyModel:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _check_distribution(values: Sequence[float], name: str) -> None:
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise SchemaError(f"{name}: probabilities must lie in [0, 1]")
    if abs(math.fsum(values) - 1.0) > ROW_TOL:
        raise SchemaError(f"{name}: probabilities sum to {math.fsum(values)!r}, not 1")


def _normalize(counts: Sequence[float]) -> tuple[float, ...]:
    total = math.fsum(counts)
    if total <= 0:
        return tuple(1.0 / len(counts) for _ in counts)
    return tuple(c / total for c in counts)


def uniform_policy(registry: OntologyRegistry | None = None, *, empathy_rate: float = 0.3, **kwargs) -> PolicyModel:
    registry = registry or default_registry()
    topics = registry.groups(TOD)
    n = len(topics)
    es = sorted(str(e) for e in registry.empathy_strategies)
    mix = {e: 1.0 / len(es) for e in es}
    return PolicyModel(
        topics=topics,
        initial=tuple(1.0 / n for _ in topics),
        transitions=tuple(tuple(1.0 / n for _ in topics) for _ in topics),
        empathy_rate={p: empathy_rate for p in PHASES},
        empathy_mix={p: dict(mix) for p in PHASES},
        **kwargs,
    )


def estimate_policy(
    corpus: Corpus | Iterable[Dialogue],
    smoothing: float = 1.0,
    registry: OntologyRegistry | None = None,
    **kwargs,
) -> PolicyModel:
    """Fit topic chain and phase-wise empathy rates from annotated dialogues.

    Transition rows are ``(count + smoothing)`` normalized over doctor turns
    that carry a topic; rows without mass fall back to uniform.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    registry = registry or default_registry()
    dialogues = list(corpus)
    if not dialogues or not any(t.intents for d in dialogues for t in d.doctor_turns):
        raise EmptyCorpus("policy estimation needs dialogues with doctor intents")
    topics = registry.groups(TOD)
    counts, _ = estimate_transition_counts(dialogues, registry, skip_empty=True)
    rows = counts.normalized(smoothing)
    transitions = tuple(_normalize(row) for row in rows.tolist())

    first = Counter()
    for d in dialogues:
        for t in d.doctor_turns:
            if t.topics():
                first.update(t.topics())
                break
    initial = _normalize([first[t] + smoothing for t in topics])

    es = registry.empathy_strategies
    es_names = sorted(str(e) for e in es)
    turns_in = Counter()
    empathic = Counter()
    used: dict[str, Counter] = {p: Counter() for p in PHASES}
    for d in dialogues:
        doctor = d.doctor_turns
        for k, t in enumerate(doctor):
            if t.intents is None:
                continue
            phase = phase_of(k, len(doctor))
            turns_in[phase] += 1
            hits = t.intents & es
            if hits:
                empathic[phase] += 1
                used[phase].update(str(h) for h in hits)
    rate = {p: (empathic[p] / turns_in[p] if turns_in[p] else 0.0) for p in PHASES}
    mix = {p: dict(zip(es_names, _normalize([used[p][e] for e in es_names]))) for p in PHASES}
    return PolicyModel(topics, initial, transitions, rate, mix, **kwargs)


# -- risk rules ------------------------------------------------------------


@dataclass(frozen=True)
class RiskRuleTable:
    """Symptom-group count thresholds plus escalators that only raise severity."""

    mild_min: int = 2
    moderate_min: int = 4
    severe_min: int = 6
    excluded_groups: tuple[str, ...] = ("cause", "screening")
    moderate_escalator_groups: tuple[str, ...] = ("suicide",)
    severe_escalator_slots: tuple[str, ...] = ("tod.suicide.suicidal_behavior",)

    def __post_init__(self):
        if not 1 <= self.mild_min < self.moderate_min < self.severe_min:
            raise RuleTableError("thresholds must satisfy 1 <= mild < moderate < severe")

    @classmethod
    def from_dict(cls, data: Mapping) -> RiskRuleTable:
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise RuleTableError(f"unknown rule fields: {sorted(extra)}")
        kwargs = {k: (tuple(v) if isinstance(v, list) else v) for k, v in data.items()}
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | os.PathLike) -> RiskRuleTable:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "mild_min": self.mild_min,
            "moderate_min": self.moderate_min,
            "severe_min": self.severe_min,
            "excluded_groups": list(self.excluded_groups),
            "moderate_escalator_groups": list(self.moderate_escalator_groups),
            "severe_escalator_slots": list(self.severe_escalator_slots),
        }


def risk_rank(label: str) -> int:
    return RISK_LABELS.index(label)


def score_risk(state: DialogueState, rules: RiskRuleTable | None = None) -> str:
    """Map a final dialogue state to none/mild/moderate/severe."""
    rules = rules or RiskRuleTable()
    present = state.present()
    groups = {s.group for s in present if s.group not in rules.excluded_groups}
    n = len(groups)
    rank = 3 if n >= rules.severe_min else 2 if n >= rules.moderate_min else 1 if n >= rules.mild_min else 0
    if any(s.group in rules.moderate_escalator_groups for s in present):
        rank = max(rank, 2)
    if any(str(s) in rules.severe_escalator_slots for s in present):
        rank = 3
    return RISK_LABELS[rank]


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return p, r, (2 * p * r / (p + r) if p + r else 0.0)


def risk_report(gold: Sequence[str], predicted: Sequence[str]) -> dict:
    """Per-class precision/recall/F1 and their unweighted average.

    The average runs over classes seen in gold or predictions, so a
    severity absent from both does not drag it down.
    """
    classes = {}
    seen = set(gold) | set(predicted)
    for label in RISK_LABELS:
        tp = sum(1 for g, p in zip(gold, predicted) if g == label and p == label)
        fp = sum(1 for g, p in zip(gold, predicted) if g != label and p == label)
        fn = sum(1 for g, p in zip(gold, predicted) if g == label and p != label)
        p, r, f = _prf(tp, fp, fn)
        classes[label] = {"precision": p, "recall": r, "f1": f, "support": tp + fn}
    active = [classes[label] for label in RISK_LABELS if label in seen]
    average = {k: (sum(c[k] for c in active) / len(active) if active else 0.0) for k in ("precision", "recall", "f1")}
    return {"classes": classes, "average": average, "n": len(gold)}


def evaluate_risk(corpus: Corpus, rules: RiskRuleTable | None = None, registry: OntologyRegistry | None = None) -> dict:
    slots = (registry or default_registry()).tod_leaves
    predictions = {d.dialogue_id: score_risk(final_state(d, slots), rules) for d in corpus}
    scored = [d for d in corpus if d.risk is not None]
    report = risk_report([d.risk for d in scored], [predictions[d.dialogue_id] for d in scored])
    report["unlabeled"] = len(corpus) - len(scored)
    report["predictions"] = {k: predictions[k] for k in sorted(predictions)}
    return report


# -- patient ---------------------------------------------------------------


@dataclass(frozen=True)
class PatientProfile:
    profile_id: str
    truth: DialogueState
    risk: str
    rapport: float = 0.3
    gain: float = 0.1

    def __post_init__(self):
        if any(v is UNKNOWN for v in self.truth.values):
            raise SchemaError(f"profile {self.profile_id!r}: truth must assign every slot")
        if self.risk not in RISK_LABELS:
            raise SchemaError(f"profile {self.profile_id!r}: unknown risk {self.risk!r}")
        if not 0.0 <= self.rapport <= 1.0 or self.gain < 0:
            raise SchemaError(f"profile {self.profile_id!r}: rapport must be in [0, 1] and gain >= 0")

    def to_dict(self) -> dict:
        return {
            "profile_id": self.profile_id,
            "truth": self.truth.to_dict(sparse=False),
            "risk": self.risk,
            "rapport": self.rapport,
            "gain": self.gain,
        }


def make_profile(
    profile_id: str,
    present: Iterable[str | IntentId],
    *,
    rules: RiskRuleTable | None = None,
    registry: OntologyRegistry | None = None,
    **kwargs,
) -> PatientProfile:
    """Profile whose listed slots are present and all others absent."""
    slots = (registry or default_registry()).tod_leaves
    on = {slot_id(s, slots) for s in present}
    truth = DialogueState(slots, tuple(PRESENT if s in on else ABSENT for s in slots))
    return PatientProfile(profile_id, truth, score_risk(truth, rules), **kwargs)


def sample_profiles(
    n: int,
    seed: int = 0,
    *,
    present_prob: float = 0.25,
    rules: RiskRuleTable | None = None,
    registry: OntologyRegistry | None = None,
    **kwargs,
) -> list[PatientProfile]:
    slots = (registry or default_registry()).tod_leaves
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        draws = rng.random(len(slots)) < present_prob
        present = [s for s, hit in zip(slots, draws) if hit]
        out.append(make_profile(f"p{i:05d}", present, rules=rules, registry=registry, **kwargs))
    return out


def load_profiles(stream: bytes | IO | str, *, rules: RiskRuleTable | None = None, registry: OntologyRegistry | None = None, source: str | None = None) -> list[PatientProfile]:
    """Rows ``{"profile_id", "truth": {slot: present|absent}, "risk"?, "rapport"?, "gain"?}``.

    Slots missing from ``truth`` are absent; a missing ``risk`` is scored by the rules.
    """
    slots = (registry or default_registry()).tod_leaves
    out = []
    seen = set()
    for line_no, rec in iter_jsonl(stream, source):
        try:
            if not isinstance(rec, dict) or not isinstance(rec.get("profile_id"), str):
                raise SchemaError("profile row needs a string 'profile_id'")
            if rec["profile_id"] in seen:
                raise SchemaError(f"duplicate profile_id {rec['profile_id']!r}")
            seen.add(rec["profile_id"])
            state = DialogueState(slots, (ABSENT,) * len(slots))
            truth = rec.get("truth", {})
            if not isinstance(truth, dict):
                raise SchemaError("'truth' must be an object")
            state = apply_delta(state, StateDelta({slot_id(k, slots): v for k, v in truth.items()}))
            risk = rec.get("risk") or score_risk(state, rules)
            out.append(
                PatientProfile(
                    rec["profile_id"], state, risk, float(rec.get("rapport", 0.3)), float(rec.get("gain", 0.1))
                )
            )
        except SeoError as exc:
            raise type(exc)(exc.message, line=line_no, source=source) from None
    return out


# -- templates -------------------------------------------------------------

_QUESTIONS = {
    "tod.cause.cause": "What made you decide to seek help recently?",
    "tod.mood.whether": "Have you been feeling down or in a bad mood lately?",
    "tod.mood.duration": "How long has your low mood lasted?",
    "tod.mood.morning_depression": "Do you feel worse in the morning or at night?",
    "tod.interest.whether": "Have you lost interest in things you used to enjoy?",
    "tod.interest.duration": "How long have you felt this lack of interest?",
    "tod.interest.range": "Is it only some past hobbies, or everything?",
    "tod.interest.indifferent": "Do you feel emotionally numb or indifferent?",
    "tod.social_function.life_affair": "Are you still able to handle daily chores?",
    "tod.social_function.study_work": "How are your study or work going?",
    "tod.social_function.social_contact": "Do you still talk to your family and friends?",
    "tod.social_function.social_interact": "Do you find yourself avoiding other people?",
    "tod.mental_status.decreased_concentration": "Is it hard for you to concentrate?",
    "tod.mental_status.memory_loss": "Have you noticed problems with your memory?",
    "tod.mental_status.tired": "Do you often feel tired or short of energy?",
    "tod.mental_status.difficulty_in_decision": "Is it hard for you to make decisions?",
    "tod.mental_status.decline_in_self_confidence": "Has your self-confidence dropped?",
    "tod.sleep.whether": "How has your sleep been?",
    "tod.sleep.difficulty_in_falling_sleep": "Do you have trouble falling asleep?",
    "tod.sleep.light_sleep": "Do you sleep lightly and wake easily?",
    "tod.sleep.wake_up_early": "Do you wake up much earlier than you want?",
    "tod.sleep.sleep_too_short": "Do you sleep too few hours?",
    "tod.sleep.dream": "Do you have a lot of dreams or nightmares?",
    "tod.appetite.whether": "How is your appetite?",
    "tod.appetite.loss_of_appetite": "Have you lost your appetite?",
    "tod.appetite.overeating": "Do you find yourself overeating?",
    "tod.appetite.significant_weight_change": "Has your weight changed noticeably?",
    "tod.somatic_symptoms.psychomotor_agitation": "Do you feel restless or unusually excited?",
    "tod.somatic_symptoms.psychomotor_retardation": "Do you feel slowed down in thinking or moving?",
    "tod.somatic_symptoms.physical_discomfort": "Do you have any physical discomfort?",
    "tod.suicide.self_harm_tendency": "Have you ever wanted to hurt yourself?",
    "tod.suicide.suicidal_tendency": "Have you had thoughts of ending your life?",
    "tod.suicide.suicidal_behavior": "Have you ever acted on those thoughts?",
    "tod.suicide.hopelessness": "Do you feel hopeless about the future?",
    "tod.suicide.guilt": "Do you often blame yourself?",
    "tod.suicide.low_self_worth": "Do you feel worthless?",
    "tod.screening.mania": "Have you been unusually irritable or quick to argue?",
    "tod.screening.genetic": "Does anyone in your family have a mental health condition?",
}

DEFAULT_TEMPLATES: dict[str, str] = {
    **_QUESTIONS,
    STARTING_ENDING: "Hello, thank you for coming in today.",
    "chitchat.give_information.question": "Could you tell me a little about yourself?",
    "chitchat.give_information.restatement": "So what you are saying is that things have been hard.",
    "chitchat.show_empathy.reflection": "That sounds really difficult for you.",
    "chitchat.show_empathy.self_disclosure": "I have felt overwhelmed at times too.",
    "chitchat.show_empathy.affirmation": "It is good that you are talking about this.",
    "chitchat.seek_help.provide_suggestions": "It may help to keep a regular daily routine.",
    "closing": "Thank you for sharing. Take care and we will talk again.",
    "patient.present": "Yes, {name} has been a problem for me.",
    "patient.absent": "No, {name} is not a problem for me.",
    "patient.withhold": "I'd rather not talk about that right now.",
}
PATIENT_KEYS = ("patient.present", "patient.absent", "patient.withhold")


class _SafeDict(dict):
    def __missing__(self, key):
        return "{" + key + "}"


def render(template: str, intent: IntentId | None, registry: OntologyRegistry) -> str:
    fields = _SafeDict()
    if intent is not None:
        fields["name"] = registry.info(intent).display_name
        fields["topic"] = GROUP_DISPLAY.get(intent.group, intent.group).lower()
        if registry.info(intent).display_name in ("whether", "duration"):
            fields["name"] = f"{fields['topic']} ({registry.info(intent).display_name})"
    return template.format_map(fields)


def check_templates(templates: Mapping[str, str], registry: OntologyRegistry) -> None:
    missing = [str(i) for i in registry if str(i) not in templates]
    missing += [k for k in PATIENT_KEYS if k not in templates]
    if missing:
        raise MissingTemplate(f"templates missing for: {', '.join(missing)}")


def load_templates(path: str | os.PathLike) -> dict[str, str]:
    """JSON object of overrides merged over the built-in English table."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict) or not all(isinstance(v, str) for v in data.values()):
        raise SchemaError("template file must map ids to strings")
    return {**DEFAULT_TEMPLATES, **data}


# -- simulation ------------------------------------------------------------


def _pick(rng: np.random.Generator, weights: np.ndarray) -> int:
    total = weights.sum()
    if total <= 0:
        weights = (weights >= 0).astype(float)
        total = weights.sum()
    return int(rng.choice(len(weights), p=weights / total))


def simulate(
    policy: PolicyModel,
    profile: PatientProfile,
    seed: int | np.random.SeedSequence = 0,
    templates: Mapping[str, str] | None = None,
    registry: OntologyRegistry | None = None,
    *,
    dialogue_id: str | None = None,
) -> Dialogue:
    """Generate one annotated dialogue; identical inputs give identical output."""
    registry = registry or default_registry()
    templates = DEFAULT_TEMPLATES if templates is None else templates
    check_templates(templates, registry)
    if not 1 <= policy.max_turns <= HARD_CAP:
        raise NonTerminating(f"max_turns must be within 1..{HARD_CAP}, got {policy.max_turns}")
    slots = profile.truth.slots
    by_topic = {t: [s for s in slots if s.group == t] for t in policy.topics}
    es_index = {p: (list(m), np.array(list(m.values()), dtype=float)) for p, m in policy.empathy_mix.items() if m}
    opening = registry.resolve(STARTING_ENDING)
    rng = np.random.default_rng(seed)

    target = min(len(slots), math.ceil(policy.min_coverage * len(slots)))
    planned = min(policy.max_turns, target + 1)
    rapport = profile.rapport
    state = DialogueState.initial(slots)
    asked: set[IntentId] = set()
    history: list[frozenset[IntentId]] = []
    turns: list[Turn] = []
    topic: int | None = None

    def empathy(k: int) -> IntentId | None:
        phase = phase_of(k, planned)
        if phase not in es_index or rng.random() >= policy.empathy_rate[phase]:
            return None
        names, weights = es_index[phase]
        return registry.resolve(names[_pick(rng, weights)])

    k = 0
    while k < policy.max_turns - 1 and len(asked) < target:
        if k >= HARD_CAP:
            raise NonTerminating("simulation exceeded the hard turn cap")
        question = None
        if policy.repeat_prob > 0 and rng.random() < policy.repeat_prob:
            recent = set().union(*history[-policy.repeat_window :]) if history else set()
            candidates = sorted((s for s in recent if s.aspect == TOD and state[s] is not UNKNOWN), key=str)
            if candidates:
                question = candidates[int(rng.integers(len(candidates)))]
        if question is None:
            open_topics = np.array([any(s not in asked for s in by_topic[t]) for t in policy.topics], dtype=float)
            if not open_topics.any():
                break
            base = np.array(policy.initial if topic is None else policy.transitions[topic], dtype=float)
            weights = base * open_topics
            topic = _pick(rng, weights if weights.sum() > 0 else open_topics)
            question = next(s for s in by_topic[policy.topics[topic]] if s not in asked)
            asked.add(question)

        intents = {question}
        parts = []
        if k == 0:
            intents.add(opening)
            parts.append(render(templates[STARTING_ENDING], None, registry))
        strategy = empathy(k)
        if strategy is not None:
            intents.add(strategy)
            parts.append(render(templates[str(strategy)], strategy, registry))
            rapport = min(1.0, rapport + profile.gain)
        parts.append(render(templates[str(question)], question, registry))
        turns.append(Turn(DOCTOR, " ".join(parts), frozenset(intents)))
        history.append(frozenset(intents))

        if rng.random() < rapport:
            value = profile.truth[question]
            key = "patient.present" if value is PRESENT else "patient.absent"
            delta = StateDelta({question: value}) if state[question] is not value else StateDelta()
            state = apply_delta(state, delta)
        else:
            key = "patient.withhold"
            delta = StateDelta()
        turns.append(Turn(PATIENT, render(templates[key], question, registry), state_delta=delta))
        k += 1

    closing = {opening}
    parts = []
    strategy = empathy(k)
    if strategy is not None:
        closing.add(strategy)
        parts.append(render(templates[str(strategy)], strategy, registry))
    parts.append(render(templates.get("closing", templates[STARTING_ENDING]), None, registry))
    turns.append(Turn(DOCTOR, " ".join(parts), frozenset(closing)))
    did = dialogue_id or f"sim-{profile.profile_id}"
    return Dialogue(did, tuple(turns), profile.risk)


def session_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Independent per-session seeds derived from one master seed."""
    return np.random.SeedSequence(seed).spawn(n)
