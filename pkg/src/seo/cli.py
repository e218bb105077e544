"""``seo`` command line: one binary, git-style subcommands.

Exit codes: 0 success, 1 data or validation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import functools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import __version__
from .corpus import (
    Corpus,
    DialogueTally,
    estimate_transition_counts,
    parse_corpus,
    stats_from_tally,
    tally_dialogue,
    write_corpus,
)
from .engagement import EngagementConfig, merge, score_dialogue
from .errors import EmptyCorpus, SchemaError, SeoError
from .fusion import (
    check_against_corpus,
    evaluate_multilabel,
    fuse_precision,
    fuse_recall,
    load_intent_predictions,
    write_intent_predictions,
)
from .ontology import OntologyRegistry, default_registry, load_ontology
from .sim import (
    DEFAULT_TEMPLATES,
    PolicyModel,
    RiskRuleTable,
    estimate_policy,
    load_profiles,
    load_templates,
    risk_report,
    sample_profiles,
    score_risk,
    session_seeds,
    simulate,
)
from .text_metrics import METRICS, evaluate_text, load_text_pairs, score_pair
from .tracking import (
    DEFAULT_WINDOW,
    default_lexicon,
    final_state,
    gold_states,
    load_lexicon,
    load_state_predictions,
    replay_gold,
    report_from_tallies,
    tally_dst,
    track_dialogue,
    write_state_predictions,
)

SCHEMA_VERSION = "1"
ENV_ONTOLOGY = "SEO_ONTOLOGY"


# -- shared plumbing -------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(_positive_int(part) for part in text.split(",") if part.strip())


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {value}")
    return value


def fan_out(fn: Callable, items: Sequence, jobs: int) -> list:
    """Order-preserving map, in worker processes when ``jobs > 1``."""
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def registry_from(args) -> OntologyRegistry:
    path = args.ontology or os.environ.get(ENV_ONTOLOGY) or None
    return load_ontology(path) if path else default_registry()


def read_corpus_arg(path: str, registry: OntologyRegistry, strict: bool) -> Corpus:
    return parse_corpus(Path(path).read_bytes(), registry, strict=strict, source=path)


def flatten(value, prefix: str = "") -> Iterable[tuple[str, object]]:
    if isinstance(value, dict):
        if not value and prefix:
            yield prefix, "{}"
        for k in value:
            yield from flatten(value[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(value, list) and any(isinstance(v, (dict, list)) for v in value):
        for i, v in enumerate(value):
            yield from flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, value


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    if isinstance(value, list):
        return ",".join(map(str, value))
    return str(value)


def render_table(report: dict) -> str:
    rows = [(k, _cell(v)) for k, v in flatten(report)]
    width = max((len(k) for k, _ in rows), default=0)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


def emit(args, command: str, body: dict) -> None:
    report = {"schema_version": SCHEMA_VERSION, "command": command, "seed": args.seed, **body}
    if args.format == "table":
        text = render_table(report)
    else:
        text = json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    sys.stdout.write(text)


def write_output(data: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


# -- subcommands -----------------------------------------------------------


def cmd_validate(args) -> int:
    registry = registry_from(args)
    corpus = read_corpus_arg(args.file, registry, args.strict)
    doctor = sum(d.L for d in corpus)
    emit(args, "validate", {
        "file": args.file,
        "valid": True,
        "dialogues": corpus.N,
        "doctor_utterances": doctor,
        "patient_utterances": sum(len(d.turns) for d in corpus) - doctor,
    })
    return 0


def cmd_stats(args) -> int:
    registry = registry_from(args)
    corpus = read_corpus_arg(args.file, registry, args.strict)
    if not corpus.N:
        raise EmptyCorpus("cannot compute statistics of an empty corpus", source=args.file)
    tally = DialogueTally()
    for part in fan_out(tally_dialogue, list(corpus), args.jobs):
        tally = tally + part
    transitions = estimate_transition_counts(
        corpus, registry, singleton_only=args.singleton_only, skip_empty=args.skip_empty
    )
    body = stats_from_tally(tally, transitions, registry).to_dict()
    if args.format == "table":
        # the transition matrices dominate a flat table; keep the marginals only
        for key in ("topic_transitions", "strategy_transitions"):
            body[key] = {"row_sums": {a: sum(r) for a, r in zip(body[key]["labels"], body[key]["counts"])}}
    emit(args, "stats", body)
    return 0


def cmd_track(args) -> int:
    registry = registry_from(args)
    corpus = read_corpus_arg(args.corpus, registry, args.strict)
    slots = registry.tod_leaves
    if args.tracker == "gold":
        states = dict(zip((d.dialogue_id for d in corpus), fan_out(functools.partial(replay_gold, slots=slots), list(corpus), args.jobs)))
    else:
        lexicon = load_lexicon(args.lexicon, slots) if args.lexicon else default_lexicon(slots)
        fn = functools.partial(track_dialogue, lexicon=lexicon, window=args.window, slots=slots)
        states = dict(zip((d.dialogue_id for d in corpus), fan_out(fn, list(corpus), args.jobs)))
    data = write_state_predictions(states, mode=args.mode)
    write_output(data, args.out)
    if args.out:
        emit(args, "track", {"tracker": args.tracker, "dialogues": len(states), "rows": data.count(b"\n"), "out": args.out})
    return 0


def _tally_pair(item):
    did, pred, gold = item
    return tally_dst(pred, gold, did)


def cmd_eval_dst(args) -> int:
    registry = registry_from(args)
    corpus = read_corpus_arg(args.gold, registry, args.strict)
    pred = load_state_predictions(Path(args.pred).read_bytes(), corpus, registry, source=args.pred)
    gold = gold_states(corpus, registry.tod_leaves)
    missing = sorted(set(gold) - set(pred))
    if missing:
        raise SchemaError(f"no predictions for dialogues: {', '.join(missing[:5])}", source=args.pred)
    items = [(did, pred[did], gold[did]) for did in sorted(gold)]
    tallies = dict(zip((i[0] for i in items), fan_out(_tally_pair, items, args.jobs)))
    emit(args, "eval-dst", report_from_tallies(tallies).to_dict())
    return 0


def cmd_eval_intents(args) -> int:
    registry = registry_from(args)
    corpus = read_corpus_arg(args.gold, registry, args.strict)
    preds = load_intent_predictions(Path(args.pred).read_bytes(), registry, default_predictor=Path(args.pred).stem, source=args.pred)
    if args.predictor:
        if args.predictor not in preds:
            raise SchemaError(f"predictor {args.predictor!r} not found in {args.pred}")
        preds = {args.predictor: preds[args.predictor]}
    reports = {}
    for name in sorted(preds):
        check_against_corpus(preds[name], corpus)
        reports[name] = evaluate_multilabel(preds[name], corpus, aspect=args.aspect).to_dict()
        if not args.per_label:
            reports[name].pop("per_label")
    emit(args, "eval-intents", {"aspect": args.aspect or "all", "predictors": reports})
    return 0


def cmd_fuse(args) -> int:
    registry = registry_from(args)
    sets = {}
    for path in args.pred:
        for name, ps in load_intent_predictions(Path(path).read_bytes(), registry, default_predictor=Path(path).stem, source=path).items():
            if name in sets:
                raise SchemaError(f"predictor {name!r} appears in more than one input", source=path)
            sets[name] = ps
    ordered = [sets[k] for k in sorted(sets)]
    if args.mode == "recall":
        fused = fuse_recall(ordered)
    else:
        fused = fuse_precision(ordered, args.threshold if args.threshold is not None else 2)
    data = write_intent_predictions(fused)
    write_output(data, args.out)
    if args.out:
        emit(args, "fuse", {"mode": args.mode, "predictors": sorted(sets), "turns": len(fused), "out": args.out, "fused_predictor": fused.predictor_id})
    return 0


def cmd_eval_text(args) -> int:
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    unknown = sorted(set(metrics) - set(METRICS))
    if unknown:
        raise SchemaError(f"unknown metrics: {', '.join(unknown)} (choose from {', '.join(METRICS)})")
    pairs = load_text_pairs(Path(args.pairs).read_bytes(), source=args.pairs)
    rows = fan_out(functools.partial(score_pair, metrics=metrics), pairs, args.jobs)
    report = evaluate_text(pairs, metrics, rows).to_dict()
    if not args.per_pair:
        report.pop("per_pair")
    report["metrics"] = list(metrics)
    emit(args, "eval-text", report)
    return 0


def cmd_eval_engagement(args) -> int:
    registry = registry_from(args)
    corpus = read_corpus_arg(args.corpus, registry, args.strict)
    intents = states = None
    if args.pred_intents:
        preds = load_intent_predictions(Path(args.pred_intents).read_bytes(), registry, source=args.pred_intents)
        if args.predictor:
            if args.predictor not in preds:
                raise SchemaError(f"predictor {args.predictor!r} not found", source=args.pred_intents)
            chosen = preds[args.predictor]
        elif len(preds) == 1:
            chosen = next(iter(preds.values()))
        else:
            raise SchemaError(f"{len(preds)} predictors in file; pick one with --predictor", source=args.pred_intents)
        check_against_corpus(chosen, corpus)
        intents = dict(chosen.turns)
    if args.pred_states:
        states = load_state_predictions(Path(args.pred_states).read_bytes(), corpus, registry, source=args.pred_states)
    empathy = frozenset(registry.resolve(x) for x in args.empathy.split(",") if x.strip()) if args.empathy else None
    cfg = EngagementConfig(args.iqr_window, args.rqr_window, args.inclusive_window, empathy)
    es = empathy if empathy is not None else registry.empathy_strategies
    fn = functools.partial(score_dialogue, cfg=cfg, strategies=es, intents=intents, states=states, slots=registry.tod_leaves)
    report = merge(fan_out(fn, list(corpus), args.jobs), cfg)
    scale = args.scale or ("percent" if args.format == "table" else "fraction")
    emit(args, "eval-engagement", report.to_dict(scale=100.0 if scale == "percent" else 1.0, audit=args.audit))
    return 0


def _simulate_one(item, policy, templates, registry):
    profile, seq = item
    return simulate(policy, profile, seq, templates, registry, dialogue_id=f"sim-{profile.profile_id}")


def cmd_simulate(args) -> int:
    registry = registry_from(args)
    if args.policy:
        policy = PolicyModel.load(args.policy)
    else:
        policy = estimate_policy(read_corpus_arg(args.from_corpus, registry, args.strict), args.smoothing, registry)
    overrides = {k: getattr(args, k) for k in ("max_turns", "min_coverage", "repeat_prob") if getattr(args, k) is not None}
    if args.empathy_rate is not None:
        overrides["empathy_rate"] = {p: args.empathy_rate for p in ("opening", "body", "closing")}
    if overrides:
        policy = policy.replace(**overrides)
    if args.save_policy:
        Path(args.save_policy).write_text(json.dumps(policy.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    rules = RiskRuleTable.load(args.rules) if args.rules else None
    knobs = {k: getattr(args, k) for k in ("rapport", "gain") if getattr(args, k) is not None}
    if args.profiles:
        profiles = load_profiles(Path(args.profiles).read_bytes(), rules=rules, registry=registry, source=args.profiles)
        if knobs:
            profiles = [type(p)(p.profile_id, p.truth, p.risk, knobs.get("rapport", p.rapport), knobs.get("gain", p.gain)) for p in profiles]
    else:
        profiles = sample_profiles(args.sample, args.seed, rules=rules, registry=registry, **knobs)
    templates = load_templates(args.templates) if args.templates else DEFAULT_TEMPLATES
    items = list(zip(profiles, session_seeds(args.seed, len(profiles))))
    fn = functools.partial(_simulate_one, policy=policy, templates=templates, registry=registry)
    dialogues = fan_out(fn, items, args.jobs)
    data = write_corpus(sorted(dialogues, key=lambda d: d.dialogue_id))
    write_output(data, args.out)
    if args.out:
        emit(args, "simulate", {
            "dialogues": len(dialogues),
            "doctor_turns": sum(d.L for d in dialogues),
            "out": args.out,
            "policy": {"max_turns": policy.max_turns, "min_coverage": policy.min_coverage, "repeat_prob": policy.repeat_prob},
        })
    return 0


def _risk_one(dialogue, rules, slots):
    return score_risk(final_state(dialogue, slots), rules)


def cmd_risk(args) -> int:
    registry = registry_from(args)
    corpus = read_corpus_arg(args.corpus, registry, args.strict)
    rules = RiskRuleTable.load(args.rules) if args.rules else RiskRuleTable()
    ordered = sorted(corpus, key=lambda d: d.dialogue_id)
    labels = fan_out(functools.partial(_risk_one, rules=rules, slots=registry.tod_leaves), ordered, args.jobs)
    predictions = {d.dialogue_id: label for d, label in zip(ordered, labels)}
    body: dict = {"rules": rules.to_dict(), "counts": {r: 0 for r in ("none", "mild", "moderate", "severe")}}
    for label in labels:
        body["counts"][label] += 1
    if args.eval:
        scored = [d for d in ordered if d.risk is not None]
        if not scored:
            raise SchemaError("--eval needs dialogues carrying a gold 'risk' label", source=args.corpus)
        body["evaluation"] = risk_report([d.risk for d in scored], [predictions[d.dialogue_id] for d in scored])
        body["evaluation"]["unlabeled"] = len(ordered) - len(scored)
    if args.format == "json" or not args.eval:
        body["predictions"] = predictions
    emit(args, "risk", body)
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--ontology", metavar="FILE", help=f"ontology override TSV (else ${ENV_ONTOLOGY})")
    g.add_argument("--format", choices=("json", "table"), default="json")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--jobs", type=_positive_int, default=1, help="worker processes for per-dialogue work")
    g.add_argument("--strict", action="store_true", help="reject unknown fields and non-alternating speakers")

    parser = argparse.ArgumentParser(prog="seo", description="Symptom and empathy ontology toolkit for diagnostic dialogues.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name: str, fn, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(handler=fn)
        return p

    p = add("validate", cmd_validate, "Validate a dialogue corpus.")
    p.add_argument("file")

    p = add("stats", cmd_stats, "Corpus statistics and intent transition counts.")
    p.add_argument("file")
    p.add_argument("--singleton-only", action="store_true", help="count transitions only between single-topic turns")
    p.add_argument("--skip-empty", action="store_true", help="bridge over doctor turns without a topic")

    p = add("track", cmd_track, "Produce per-turn dialogue states.")
    p.add_argument("corpus")
    p.add_argument("--tracker", choices=("gold", "lexical"), default="gold")
    p.add_argument("--lexicon", metavar="FILE")
    p.add_argument("--window", type=_positive_int, default=DEFAULT_WINDOW)
    p.add_argument("--mode", choices=("state", "delta"), default="state")
    p.add_argument("--out", metavar="FILE")

    p = add("eval-dst", cmd_eval_dst, "Score predicted dialogue states.")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)

    p = add("eval-intents", cmd_eval_intents, "Score predicted doctor intents.")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--aspect", choices=("tod", "chitchat"))
    p.add_argument("--predictor")
    p.add_argument("--per-label", action="store_true")

    p = add("fuse", cmd_fuse, "Fuse several intent predictors.")
    p.add_argument("--mode", choices=("recall", "precision"), required=True)
    p.add_argument("--threshold", type=int)
    p.add_argument("--pred", nargs="+", required=True)
    p.add_argument("--out", metavar="FILE")

    p = add("eval-text", cmd_eval_text, "BLEU-2, ROUGE-L, METEOR and DIST-2 over text pairs.")
    p.add_argument("--pairs", required=True)
    p.add_argument("--metrics", default=",".join(METRICS))
    p.add_argument("--per-pair", action="store_true")

    p = add("eval-engagement", cmd_eval_engagement, "In-depth, repeated and empathy ratios.")
    p.add_argument("corpus")
    p.add_argument("--pred-intents", metavar="FILE")
    p.add_argument("--predictor")
    p.add_argument("--pred-states", metavar="FILE")
    p.add_argument("--iqr-window", type=_int_list, default=(3, 5))
    p.add_argument("--rqr-window", type=_positive_int, default=3)
    p.add_argument("--inclusive-window", action="store_true", help="let the in-depth window include the current turn")
    p.add_argument("--empathy", metavar="IDS", help="comma-separated empathy strategy ids")
    p.add_argument("--scale", choices=("fraction", "percent"))
    p.add_argument("--audit", action="store_true", help="include per-turn sets")

    p = add("simulate", cmd_simulate, "Generate annotated dialogues from a policy and patient profiles.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--policy", metavar="FILE")
    src.add_argument("--from-corpus", metavar="FILE")
    who = p.add_mutually_exclusive_group(required=True)
    who.add_argument("--profiles", metavar="FILE")
    who.add_argument("--sample", type=_positive_int, metavar="N")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--templates", metavar="FILE")
    p.add_argument("--rules", metavar="FILE")
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--max-turns", type=_positive_int)
    p.add_argument("--min-coverage", type=_probability)
    p.add_argument("--repeat-prob", type=_probability)
    p.add_argument("--empathy-rate", type=_probability)
    p.add_argument("--rapport", type=_probability)
    p.add_argument("--gain", type=float)
    p.add_argument("--save-policy", metavar="FILE")

    p = add("risk", cmd_risk, "Rule-based depression risk from final dialogue states.")
    p.add_argument("--corpus", required=True)
    p.add_argument("--rules", metavar="FILE")
    p.add_argument("--eval", action="store_true", help="compare with gold risk labels")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "handler", None):
        parser.print_help(sys.stderr)
        return 2
    if args.command == "fuse" and args.mode == "recall" and args.threshold is not None:
        parser.error("--threshold only applies to --mode precision")
    try:
        return args.handler(args)
    except SeoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv: Sequence[str] | None = None) -> None:
    try:
        code = run(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
    sys.exit(code)
