"""Brute-force reference implementations used to cross-check the library.

Nothing here imports the metric code under test; each oracle counts
things the slow, obvious way.
"""

from __future__ import annotations

import itertools
import math


# -- DST -------------------------------------------------------------------


def dst_oracle(pred_seqs: dict, gold_seqs: dict, slots) -> tuple[float, float, float]:
    """JGA, slot accuracy and final-turn symptom F1 by slot enumeration.

    Sequences hold plain dicts slot -> "present"/"absent"/"unknown".
    """
    turns = exact = pairs = hits = 0
    tp = fp = fn = 0
    for did in gold_seqs:
        for p, g in zip(pred_seqs[did], gold_seqs[did]):
            turns += 1
            same = 0
            for s in slots:
                pairs += 1
                if p[s] == g[s]:
                    same += 1
                    hits += 1
            if same == len(slots):
                exact += 1
        if gold_seqs[did]:
            p, g = pred_seqs[did][-1], gold_seqs[did][-1]
            for s in slots:
                pp, gp = p[s] == "present", g[s] == "present"
                tp += pp and gp
                fp += pp and not gp
                fn += gp and not pp
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return exact / turns if turns else 0.0, hits / pairs if pairs else 0.0, f1


# -- text metrics ----------------------------------------------------------


def count_ngram(seq, gram) -> int:
    n = len(gram)
    return sum(1 for i in range(len(seq) - n + 1) if tuple(seq[i : i + n]) == gram)


def bleu2_oracle(cand, ref) -> float:
    if not cand:
        return 0.0
    logs = []
    for n in (1, 2):
        grams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
        total = len(grams)
        matched = sum(min(count_ngram(cand, g), count_ngram(ref, g)) for g in set(grams))
        logs.append(math.log(matched / total) if matched else math.log(1 / (total + 1)))
    bp = 1.0 if len(cand) > len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(sum(logs) / 2)


def lcs_oracle(a, b) -> int:
    """Longest common subsequence by trying subsequences of the shorter side, longest first."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)

    def is_subseq(sub, seq):
        it = iter(seq)
        return all(any(x == y for y in it) for x in sub)

    for size in range(len(short), 0, -1):
        for idx in itertools.combinations(range(len(short)), size):
            if is_subseq([short[i] for i in idx], long_):
                return size
    return 0


def rouge_l_oracle(cand, ref) -> float:
    lcs = lcs_oracle(cand, ref)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(cand), lcs / len(ref)
    return 2 * p * r / (p + r)


def _chunks(pairs) -> int:
    pairs = sorted(pairs)
    return sum(1 for k, (i, j) in enumerate(pairs) if k == 0 or (i, j) != (pairs[k - 1][0] + 1, pairs[k - 1][1] + 1))


def meteor_oracle(cand, ref) -> float:
    """Enumerate every maximum matching type by type and keep the fewest chunks."""
    types = sorted(set(cand) & set(ref))
    if not types:
        return 0.0
    per_type = []
    for t in types:
        ci = [i for i, x in enumerate(cand) if x == t]
        rj = [j for j, x in enumerate(ref) if x == t]
        k = min(len(ci), len(rj))
        options = []
        for cs in itertools.combinations(ci, k):
            for rs in itertools.permutations(rj, k):
                options.append(list(zip(cs, rs)))
        per_type.append(options)
    best = None
    m = 0
    for combo in itertools.product(*per_type):
        pairs = [p for part in combo for p in part]
        m = len(pairs)
        c = _chunks(pairs)
        best = c if best is None else min(best, c)
    p, r = m / len(cand), m / len(ref)
    fmean = 10 * p * r / (r + 9 * p)
    return fmean * (1 - 0.5 * (best / m) ** 3)


def dist2_oracle(cands) -> float:
    seen = []
    total = 0
    for c in cands:
        for i in range(len(c) - 1):
            total += 1
            if (c[i], c[i + 1]) not in seen:
                seen.append((c[i], c[i + 1]))
    return len(seen) / total if total else 0.0


# -- engagement ------------------------------------------------------------


def engagement_oracle(dialogues, window_iqr: int, window_rqr: int, empathy: set, inclusive: bool = False):
    """Counts (in_depth, repeated, empathy_turns, L) straight from the set definitions.

    ``dialogues`` is a list of (intents_per_turn, known_before_turn) where
    intents are canonical strings and ``known_before_turn[k]`` is the set of
    non-unknown slots in the snapshot taken before doctor turn k.
    """
    iq = rq = er = total = 0
    for intents, known in dialogues:
        for k, cur in enumerate(intents):
            total += 1
            earlier = [x for t in intents[:k] for x in t]
            hi = k + 1 if inclusive else k
            topics = [x.split(".")[1] for t in intents[max(0, k - window_iqr) : hi] for x in t if x.startswith("tod.")]
            for x in cur:
                if x.startswith("tod.") and x not in earlier and x.split(".")[1] in topics:
                    iq += 1
            recent = [x for t in intents[max(0, k - window_rqr) : k] for x in t]
            for x in cur:
                if x.startswith("tod.") and x in recent and x in known[k]:
                    rq += 1
            if any(x in empathy for x in cur):
                er += 1
    return iq, rq, er, total
