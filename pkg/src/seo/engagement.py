"""Engagement metrics over doctor intents: in-depth, repeated and empathy ratios.

All three share the denominator ``sum_n L_n`` (doctor utterances over the
corpus). Turn indices are 0-based doctor utterances; a window of size
``i`` at turn ``k`` covers doctor turns ``k-i .. k-1`` (plus ``k`` for the
inclusive in-depth variant).

The repeated-question check uses the snapshot taken right before doctor
turn ``k``, i.e. after the patient's answer to turn ``k-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, Dialogue
from .errors import MissingIntents, MissingStates
from .ontology import TOD, IntentId, OntologyRegistry, core_symptom_of, default_registry
from .state import UNKNOWN, DialogueState
from .tracking import replay_gold

TurnKey = tuple[str, int]


@dataclass(frozen=True)
class EngagementConfig:
    iqr_windows: tuple[int, ...] = (3, 5)
    rqr_window: int = 3
    window_inclusive_current: bool = False
    empathy: frozenset[IntentId] | None = None

    def __post_init__(self):
        if not self.iqr_windows or any(w < 1 for w in self.iqr_windows) or self.rqr_window < 1:
            raise ValueError("screening windows must be positive integers")


def in_depth_sets(intents: Sequence[frozenset[IntentId]], window: int, inclusive: bool = False) -> list[frozenset[IntentId]]:
    """Per-turn new symptom leaves whose core symptom was raised in the window."""
    out = []
    asked: set[IntentId] = set()
    for k, current in enumerate(intents):
        lo = max(0, k - window)
        hi = k + 1 if inclusive else k
        topics = {core_symptom_of(x) for turn in intents[lo:hi] for x in turn if x.aspect == TOD}
        out.append(frozenset(x for x in current if x.aspect == TOD and x not in asked and x.group in topics))
        asked.update(current)
    return out


def repeated_sets(
    intents: Sequence[frozenset[IntentId]], states: Sequence[DialogueState], window: int
) -> list[frozenset[IntentId]]:
    """Per-turn symptom leaves re-asked within the window although already known."""
    if len(states) != len(intents):
        raise MissingStates(f"{len(states)} state snapshots for {len(intents)} doctor turns")
    out = []
    for k, current in enumerate(intents):
        recent = set().union(*intents[max(0, k - window) : k])
        known = states[k]
        out.append(frozenset(x for x in current if x.aspect == TOD and x in recent and known[x] is not UNKNOWN))
    return out


def empathy_sets(intents: Sequence[frozenset[IntentId]], strategies: frozenset[IntentId]) -> list[frozenset[IntentId]]:
    return [current & strategies for current in intents]


@dataclass
class DialogueEngagement:
    dialogue_id: str
    L: int
    in_depth: dict[int, list[frozenset[IntentId]]]
    repeated: list[frozenset[IntentId]]
    empathy: list[frozenset[IntentId]]

    def counts(self) -> dict:
        return {
            "L": self.L,
            "in_depth": {str(w): sum(len(s) for s in sets) for w, sets in sorted(self.in_depth.items())},
            "repeated": sum(len(s) for s in self.repeated),
            "empathy_turns": sum(1 for s in self.empathy if s),
        }

    def audit(self) -> list[dict]:
        rows = []
        for k in range(self.L):
            rows.append(
                {
                    "turn_index": k,
                    "in_depth": {str(w): sorted(map(str, sets[k])) for w, sets in sorted(self.in_depth.items())},
                    "repeated": sorted(map(str, self.repeated[k])),
                    "empathy": sorted(map(str, self.empathy[k])),
                }
            )
        return rows


def dialogue_intents(dialogue: Dialogue, override: Mapping[TurnKey, frozenset[IntentId]] | None = None) -> list[frozenset[IntentId]]:
    out = []
    for k, turn in enumerate(dialogue.doctor_turns):
        if override is not None:
            key = (dialogue.dialogue_id, k)
            if key not in override:
                raise MissingIntents(f"no predicted intents for dialogue {dialogue.dialogue_id!r} turn {k}")
            out.append(frozenset(override[key]))
        else:
            if turn.intents is None:
                raise MissingIntents(f"dialogue {dialogue.dialogue_id!r} doctor turn {k} carries no intents")
            out.append(turn.intents)
    return out


def dialogue_states(
    dialogue: Dialogue,
    override: Mapping[str, Sequence[DialogueState]] | None = None,
    slots: tuple[IntentId, ...] | None = None,
) -> list[DialogueState]:
    if override is None:
        return replay_gold(dialogue, slots)
    if dialogue.dialogue_id not in override:
        raise MissingStates(f"no predicted states for dialogue {dialogue.dialogue_id!r}")
    return list(override[dialogue.dialogue_id])


def score_dialogue(
    dialogue: Dialogue,
    cfg: EngagementConfig,
    strategies: frozenset[IntentId],
    intents: Mapping[TurnKey, frozenset[IntentId]] | None = None,
    states: Mapping[str, Sequence[DialogueState]] | None = None,
    slots: tuple[IntentId, ...] | None = None,
) -> DialogueEngagement:
    seq = dialogue_intents(dialogue, intents)
    snapshots = dialogue_states(dialogue, states, slots)
    return DialogueEngagement(
        dialogue.dialogue_id,
        len(seq),
        {w: in_depth_sets(seq, w, cfg.window_inclusive_current) for w in cfg.iqr_windows},
        repeated_sets(seq, snapshots, cfg.rqr_window),
        empathy_sets(seq, strategies),
    )


@dataclass(frozen=True)
class RatioResult:
    value: float
    numerator: int
    denominator: int
    per_dialogue: dict[str, tuple[int, int]] = field(default_factory=dict)


@dataclass(frozen=True)
class EngagementReport:
    iqr: dict[int, RatioResult]
    rqr: RatioResult
    err: RatioResult
    config: EngagementConfig
    dialogues: dict[str, DialogueEngagement] = field(default_factory=dict)

    def to_dict(self, *, scale: float = 1.0, audit: bool = False) -> dict:
        out = {
            "iqr": {str(w): r.value * scale for w, r in sorted(self.iqr.items())},
            "rqr": self.rqr.value * scale,
            "err": self.err.value * scale,
            "scale": "percent" if scale == 100 else "fraction",
            "counts": {
                "doctor_turns": self.err.denominator,
                "in_depth": {str(w): r.numerator for w, r in sorted(self.iqr.items())},
                "repeated": self.rqr.numerator,
                "empathy_turns": self.err.numerator,
            },
            "config": {
                "iqr_windows": list(self.config.iqr_windows),
                "rqr_window": self.config.rqr_window,
                "window_inclusive_current": self.config.window_inclusive_current,
            },
            "per_dialogue": {did: self.dialogues[did].counts() for did in sorted(self.dialogues)},
        }
        if audit:
            out["audit"] = {did: self.dialogues[did].audit() for did in sorted(self.dialogues)}
        return out


def _ratio(rows: Iterable[tuple[str, int, int]]) -> RatioResult:
    per = {}
    num = den = 0
    for did, n, l in rows:
        per[did] = (n, l)
        num += n
        den += l
    return RatioResult(num / den if den else 0.0, num, den, per)


def merge(scored: Iterable[DialogueEngagement], cfg: EngagementConfig) -> EngagementReport:
    dialogues = {d.dialogue_id: d for d in scored}
    ordered = [dialogues[k] for k in sorted(dialogues)]
    iqr = {
        w: _ratio((d.dialogue_id, sum(len(s) for s in d.in_depth[w]), d.L) for d in ordered)
        for w in cfg.iqr_windows
    }
    rqr = _ratio((d.dialogue_id, sum(len(s) for s in d.repeated), d.L) for d in ordered)
    err = _ratio((d.dialogue_id, sum(1 for s in d.empathy if s), d.L) for d in ordered)
    return EngagementReport(iqr, rqr, err, cfg, dialogues)


def _strategies(cfg: EngagementConfig, registry: OntologyRegistry | None) -> frozenset[IntentId]:
    if cfg.empathy is not None:
        return frozenset(cfg.empathy)
    return (registry or default_registry()).empathy_strategies


def evaluate_engagement(
    corpus: Corpus | Iterable[Dialogue],
    cfg: EngagementConfig | None = None,
    *,
    intents: Mapping[TurnKey, frozenset[IntentId]] | None = None,
    states: Mapping[str, Sequence[DialogueState]] | None = None,
    registry: OntologyRegistry | None = None,
) -> EngagementReport:
    cfg = cfg or EngagementConfig()
    es = _strategies(cfg, registry)
    slots = (registry or default_registry()).tod_leaves
    return merge((score_dialogue(d, cfg, es, intents, states, slots) for d in corpus), cfg)


def compute_iqr(
    corpus: Corpus | Iterable[Dialogue],
    cfg: EngagementConfig | None = None,
    *,
    window: int | None = None,
    intents: Mapping[TurnKey, frozenset[IntentId]] | None = None,
) -> RatioResult:
    cfg = cfg or EngagementConfig()
    w = window if window is not None else cfg.iqr_windows[0]
    rows = []
    for d in corpus:
        seq = dialogue_intents(d, intents)
        sets = in_depth_sets(seq, w, cfg.window_inclusive_current)
        rows.append((d.dialogue_id, sum(len(s) for s in sets), len(seq)))
    return _ratio(sorted(rows))


def compute_rqr(
    corpus: Corpus | Iterable[Dialogue],
    cfg: EngagementConfig | None = None,
    *,
    intents: Mapping[TurnKey, frozenset[IntentId]] | None = None,
    states: Mapping[str, Sequence[DialogueState]] | None = None,
) -> RatioResult:
    cfg = cfg or EngagementConfig()
    rows = []
    for d in corpus:
        seq = dialogue_intents(d, intents)
        sets = repeated_sets(seq, dialogue_states(d, states), cfg.rqr_window)
        rows.append((d.dialogue_id, sum(len(s) for s in sets), len(seq)))
    return _ratio(sorted(rows))


def compute_err(
    corpus: Corpus | Iterable[Dialogue],
    cfg: EngagementConfig | None = None,
    *,
    intents: Mapping[TurnKey, frozenset[IntentId]] | None = None,
    registry: OntologyRegistry | None = None,
) -> RatioResult:
    cfg = cfg or EngagementConfig()
    es = _strategies(cfg, registry)
    rows = []
    for d in corpus:
        seq = dialogue_intents(d, intents)
        rows.append((d.dialogue_id, sum(1 for s in empathy_sets(seq, es) if s), len(seq)))
    return _ratio(sorted(rows))
