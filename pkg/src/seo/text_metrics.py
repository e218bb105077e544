"""Generation metrics over character/word tokens: BLEU-2, ROUGE-L, METEOR-lite, DIST-2.

All metrics are single-reference and return values in [0, 1].
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

from .corpus import iter_jsonl
from .errors import SchemaError

Tokens = Sequence[str]

_CJK_RANGES = (
    (0x3040, 0x30FF),  # hiragana, katakana
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x20000, 0x323AF),
)


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def tokenize(text: str) -> list[str]:
    """CJK characters and punctuation become single tokens; other letter/digit
    runs become one case-folded token; whitespace is dropped."""
    tokens: list[str] = []
    run: list[str] = []

    def flush():
        if run:
            tokens.append("".join(run).casefold())
            run.clear()

    for ch in unicodedata.normalize("NFC", text):
        if is_cjk(ch):
            flush()
            tokens.append(ch)
        elif ch.isalnum() or (run and unicodedata.category(ch).startswith("M")):
            run.append(ch)
        else:
            flush()
            if not ch.isspace():
                tokens.append(ch)
    flush()
    return tokens


def ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


# -- BLEU-2 ----------------------------------------------------------------


def clipped_matches(candidate: Tokens, reference: Tokens, n: int) -> tuple[int, int]:
    """(clipped n-gram matches, candidate n-gram count)."""
    cand = ngrams(candidate, n)
    ref = ngrams(reference, n)
    return sum(min(c, ref[g]) for g, c in cand.items()), max(len(candidate) - n + 1, 0)


def _bleu_from_counts(matches: Sequence[int], totals: Sequence[int], cand_len: int, ref_len: int) -> float:
    if cand_len == 0:
        return 0.0
    log_p = 0.0
    for m, t in zip(matches, totals):
        # add-one only on levels with no match
        p = m / t if m else 1.0 / (t + 1)
        log_p += math.log(p)
    bp = math.exp(min(0.0, 1.0 - ref_len / cand_len))
    return bp * math.exp(log_p / len(matches))


def bleu2(candidate: Tokens, reference: Tokens) -> float:
    counts = [clipped_matches(candidate, reference, n) for n in (1, 2)]
    return _bleu_from_counts([m for m, _ in counts], [t for _, t in counts], len(candidate), len(reference))


def corpus_bleu2(pairs: Iterable[tuple[Tokens, Tokens]]) -> float:
    """BLEU-2 from n-gram counts and lengths pooled over all pairs."""
    matches = [0, 0]
    totals = [0, 0]
    cand_len = ref_len = 0
    for cand, ref in pairs:
        for idx, n in enumerate((1, 2)):
            m, t = clipped_matches(cand, ref, n)
            matches[idx] += m
            totals[idx] += t
        cand_len += len(cand)
        ref_len += len(ref)
    return _bleu_from_counts(matches, totals, cand_len, ref_len)


# -- ROUGE-L ---------------------------------------------------------------


def lcs_length(a: Tokens, b: Tokens) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            curr.append(prev[j - 1] + 1 if x == y else max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def rouge_l(candidate: Tokens, reference: Tokens) -> float:
    lcs = lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    return _f1(lcs / len(candidate), lcs / len(reference))


def rouge_l_pooled(pairs: Iterable[tuple[Tokens, Tokens]]) -> float:
    lcs = cand_len = ref_len = 0
    for cand, ref in pairs:
        lcs += lcs_length(cand, ref)
        cand_len += len(cand)
        ref_len += len(ref)
    if lcs == 0:
        return 0.0
    return _f1(lcs / cand_len, lcs / ref_len)


# -- METEOR-lite -----------------------------------------------------------

MAX_ALIGNMENT_STATES = 200_000


@dataclass(frozen=True)
class MeteorDetail:
    matches: int
    chunks: int
    precision: float
    recall: float
    fmean: float
    penalty: float
    score: float
    exact: bool = True


def count_chunks(alignment: Iterable[tuple[int, int]]) -> int:
    """Chunks of an alignment given as (candidate_pos, reference_pos) pairs."""
    pairs = sorted(alignment)
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def _greedy_alignment(candidate: Tokens, reference: Tokens) -> list[tuple[int, int]]:
    """Repeatedly align the longest common block of unused positions."""
    used_c = [False] * len(candidate)
    used_r = [False] * len(reference)
    alignment = []
    while True:
        best = (0, 0, 0)
        for i in range(len(candidate)):
            if used_c[i]:
                continue
            for j in range(len(reference)):
                length = 0
                while (
                    i + length < len(candidate)
                    and j + length < len(reference)
                    and not used_c[i + length]
                    and not used_r[j + length]
                    and candidate[i + length] == reference[j + length]
                ):
                    length += 1
                if length > best[0]:
                    best = (length, i, j)
        length, i, j = best
        if length == 0:
            return alignment
        for d in range(length):
            used_c[i + d] = used_r[j + d] = True
            alignment.append((i + d, j + d))


def min_chunks(candidate: Tokens, reference: Tokens, budget: int = MAX_ALIGNMENT_STATES) -> tuple[int, int, bool]:
    """Fewest chunks over all maximum-cardinality exact-match alignments.

    Returns ``(matches, chunks, exact)``. The search is a layered DP over
    candidate positions with state (reference position matched by the
    previous candidate token, set of used reference positions). If a
    layer outgrows ``budget`` the greedy block alignment is used and
    ``exact`` is False.
    """
    cand_counts = Counter(candidate)
    ref_counts = Counter(reference)
    need = {t: min(c, ref_counts[t]) for t, c in cand_counts.items()}
    m = sum(need.values())
    if m == 0:
        return 0, 0, True
    slack = {t: cand_counts[t] - need[t] for t in cand_counts}
    positions: dict[str, list[int]] = {}
    for j, tok in enumerate(reference):
        positions.setdefault(tok, []).append(j)

    # state: (prev_j, used_mask, skipped) -> chunks; skipped tracks per-type skips as a tuple
    types = sorted(cand_counts)
    tindex = {t: k for k, t in enumerate(types)}
    layer: dict[tuple[int, int, tuple[int, ...]], int] = {(-1, 0, (0,) * len(types)): 0}
    for i, tok in enumerate(candidate):
        nxt: dict[tuple[int, int, tuple[int, ...]], int] = {}
        k = tindex[tok]
        for (prev_j, used, skipped), chunks in layer.items():
            if skipped[k] < slack[tok]:
                sk = skipped[:k] + (skipped[k] + 1,) + skipped[k + 1 :]
                key = (-1, used, sk)
                if chunks < nxt.get(key, m + 1):
                    nxt[key] = chunks
            for j in positions.get(tok, ()):
                if used >> j & 1:
                    continue
                cost = chunks + (0 if prev_j >= 0 and j == prev_j + 1 else 1)
                key = (j, used | (1 << j), skipped)
                if cost < nxt.get(key, m + 1):
                    nxt[key] = cost
        if len(nxt) > budget:
            return m, count_chunks(_greedy_alignment(candidate, reference)), False
        layer = nxt
    return m, min(layer.values()), True


def meteor_details(candidate: Tokens, reference: Tokens, budget: int = MAX_ALIGNMENT_STATES) -> MeteorDetail:
    m, chunks, exact = min_chunks(candidate, reference, budget)
    if m == 0:
        return MeteorDetail(0, 0, 0.0, 0.0, 0.0, 0.0, 0.0, exact)
    p = m / len(candidate)
    r = m / len(reference)
    fmean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return MeteorDetail(m, chunks, p, r, fmean, penalty, fmean * (1 - penalty), exact)


def meteor_lite(candidate: Tokens, reference: Tokens) -> float:
    """Exact-match METEOR: Fmean (recall-weighted 9:1) times the fragmentation penalty."""
    return meteor_details(candidate, reference).score


# -- DIST-2 ----------------------------------------------------------------


def dist2(candidates: Iterable[Tokens]) -> float:
    """Distinct bigrams over total bigrams, pooled across candidates."""
    pool: Counter = Counter()
    for cand in candidates:
        pool.update(ngrams(cand, 2))
    total = sum(pool.values())
    return len(pool) / total if total else 0.0


# -- file evaluation -------------------------------------------------------

METRICS = ("bleu2", "rougeL", "meteor", "dist2")


@dataclass(frozen=True)
class TextPair:
    dialogue_id: str
    turn_index: int
    candidate: str
    reference: str


def load_text_pairs(stream: bytes | IO | str, *, source: str | None = None) -> list[TextPair]:
    pairs = []
    for line_no, rec in iter_jsonl(stream, source):
        if not isinstance(rec, dict):
            raise SchemaError("pair row must be a JSON object", line=line_no, source=source)
        did, k = rec.get("dialogue_id"), rec.get("turn_index")
        cand, ref = rec.get("candidate"), rec.get("reference")
        if not isinstance(did, str) or not isinstance(k, int) or isinstance(k, bool):
            raise SchemaError("row needs string 'dialogue_id' and integer 'turn_index'", line=line_no, source=source)
        if not isinstance(cand, str) or not isinstance(ref, str):
            raise SchemaError("row needs string 'candidate' and 'reference'", line=line_no, source=source)
        pairs.append(TextPair(did, k, cand, ref))
    return pairs


def score_pair(pair: TextPair, metrics: Sequence[str] = METRICS) -> dict:
    cand, ref = tokenize(pair.candidate), tokenize(pair.reference)
    row: dict = {"dialogue_id": pair.dialogue_id, "turn_index": pair.turn_index}
    if "bleu2" in metrics:
        row["bleu2"] = bleu2(cand, ref)
    if "rougeL" in metrics:
        row["rougeL"] = rouge_l(cand, ref)
    if "meteor" in metrics:
        detail = meteor_details(cand, ref)
        row["meteor"] = detail.score
        if not detail.exact:
            row["meteor_exact"] = False
    return row


@dataclass(frozen=True)
class TextEvalReport:
    n_pairs: int
    corpus: dict[str, float]
    per_pair: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"n_pairs": self.n_pairs, "corpus": dict(self.corpus), "per_pair": list(self.per_pair)}


def evaluate_text(
    pairs: Sequence[TextPair],
    metrics: Sequence[str] = METRICS,
    per_pair: Sequence[Mapping] | None = None,
) -> TextEvalReport:
    """Corpus means of the per-pair scores plus the pooled variants.

    ``per_pair`` may carry precomputed :func:`score_pair` rows (same order).
    """
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    rows = list(per_pair) if per_pair is not None else [score_pair(p, metrics) for p in pairs]
    n = len(rows)
    corpus: dict[str, float] = {}
    tokenized = None
    if {"bleu2", "rougeL", "dist2"} & set(metrics):
        tokenized = [(tokenize(p.candidate), tokenize(p.reference)) for p in pairs]
    for name in ("bleu2", "rougeL", "meteor"):
        if name in metrics:
            corpus[name] = math.fsum(r[name] for r in rows) / n if n else 0.0
    if "bleu2" in metrics:
        corpus["bleu2_pooled"] = corpus_bleu2(tokenized)
    if "rougeL" in metrics:
        corpus["rougeL_pooled"] = rouge_l_pooled(tokenized)
    if "meteor" in metrics:
        corpus["meteor_inexact_pairs"] = sum(1 for r in rows if r.get("meteor_exact") is False)
    if "dist2" in metrics:
        corpus["dist2"] = dist2(c for c, _ in tokenized)
    return TextEvalReport(n, corpus, rows)
