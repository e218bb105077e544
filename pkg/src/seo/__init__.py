"""Symptom and empathy ontology toolkit for depression-diagnosis dialogues."""

from .corpus import Corpus, Dialogue, Turn, parse_corpus, read_corpus, write_corpus
from .engagement import EngagementConfig, evaluate_engagement
from .errors import SeoError
from .fusion import PredictionSet, evaluate_multilabel, fuse_precision, fuse_recall
from .ontology import IntentId, OntologyRegistry, default_registry, load_ontology
from .sim import PatientProfile, PolicyModel, RiskRuleTable, estimate_policy, score_risk, simulate
from .state import DialogueState, SlotValue, StateDelta, apply_delta, diff_states
from .text_metrics import bleu2, dist2, meteor_lite, rouge_l, tokenize
from .tracking import evaluate_dst, replay_gold

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Dialogue",
    "DialogueState",
    "EngagementConfig",
    "IntentId",
    "OntologyRegistry",
    "PatientProfile",
    "PolicyModel",
    "PredictionSet",
    "RiskRuleTable",
    "SeoError",
    "SlotValue",
    "StateDelta",
    "Turn",
    "apply_delta",
    "bleu2",
    "default_registry",
    "diff_states",
    "dist2",
    "estimate_policy",
    "evaluate_dst",
    "evaluate_engagement",
    "evaluate_multilabel",
    "fuse_precision",
    "fuse_recall",
    "load_ontology",
    "meteor_lite",
    "parse_corpus",
    "read_corpus",
    "replay_gold",
    "rouge_l",
    "score_risk",
    "simulate",
    "tokenize",
    "write_corpus",
]
