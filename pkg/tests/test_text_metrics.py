import json
import math
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bleu2_oracle, dist2_oracle, lcs_oracle, meteor_oracle, rouge_l_oracle
from seo.errors import SchemaError
from seo.text_metrics import (
    bleu2,
    corpus_bleu2,
    dist2,
    evaluate_text,
    lcs_length,
    load_text_pairs,
    meteor_details,
    meteor_lite,
    min_chunks,
    rouge_l,
    tokenize,
)


def test_tokenize_examples():
    assert tokenize("") == []
    assert tokenize("ok ok") == ["ok", "ok"]
    assert tokenize("睡不着, really") == ["睡", "不", "着", ",", "really"]
    assert tokenize("Hello WORLD") == ["hello", "world"]
    assert tokenize("abc，中文2x") == ["abc", "，", "中", "文", "2x"]


def test_tokenize_nfc():
    assert tokenize("café") == tokenize("café")


def test_bleu_examples():
    assert bleu2(list("abcd"), list("abcd")) == 1.0
    assert bleu2(list("abcd"), list("wxyz")) == pytest.approx(math.sqrt(1 / 5 * 1 / 4))
    assert bleu2([], list("ab")) == 0.0


def test_brevity_penalty():
    short = bleu2(list("ab"), list("abcd"))
    assert short == pytest.approx(math.exp(1 - 4 / 2))


def test_rouge_examples():
    assert rouge_l(list("abc"), list("abc")) == 1.0
    assert rouge_l(list("abc"), list("ac")) == pytest.approx(0.8)
    assert rouge_l([], list("ac")) == 0.0


def test_meteor_examples():
    for n in (1, 2, 5):
        x = [f"t{i}" for i in range(n)]
        fmean = 1.0
        assert meteor_lite(x, x) == pytest.approx(fmean * (1 - 0.5 / n**3), abs=1e-15)
    assert meteor_lite(list("ab"), list("cd")) == 0.0
    d = meteor_details(list("axb"), list("ab"))
    assert (d.matches, d.chunks) == (2, 2)
    assert d.precision == pytest.approx(2 / 3) and d.recall == 1.0
    assert d.fmean == pytest.approx(20 / 21)
    assert d.score == pytest.approx(10 / 21)


def test_meteor_minimizes_chunks():
    # greedy left-to-right would take the first "a" and split the block
    cand, ref = list("abab"), list("bab")
    m, chunks, exact = min_chunks(cand, ref)
    assert (m, chunks, exact) == (3, 1, True)


def test_meteor_budget_fallback():
    cand = list("ab" * 20)
    ref = list("ba" * 20)
    d = meteor_details(cand, ref, budget=50)
    assert not d.exact and d.matches == 40 and 0 < d.score <= 1
    assert meteor_details(list("abc"), list("abc"), budget=50).exact


def test_dist2_examples():
    assert dist2([list("abc")]) == 1.0
    assert dist2([list("ab"), list("ab")]) == 0.5
    assert dist2([["a"], []]) == 0.0


token_seqs = st.lists(st.sampled_from("abcdefg"), max_size=12)


@settings(max_examples=200, deadline=None)
@given(token_seqs, token_seqs)
def test_against_oracles(cand, ref):
    assert bleu2(cand, ref) == pytest.approx(bleu2_oracle(cand, ref), abs=1e-9)
    assert lcs_length(cand, ref) == lcs_oracle(cand, ref)
    assert rouge_l(cand, ref) == pytest.approx(rouge_l_oracle(cand, ref), abs=1e-9)
    assert meteor_lite(cand, ref) == pytest.approx(meteor_oracle(cand, ref), abs=1e-9)
    assert dist2([cand, ref]) == pytest.approx(dist2_oracle([cand, ref]), abs=1e-9)
    for v in (bleu2(cand, ref), rouge_l(cand, ref), meteor_lite(cand, ref), dist2([cand])):
        assert 0.0 <= v <= 1.0


@given(st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=12))
def test_self_scores(x):
    assert bleu2(x, x) == 1.0
    assert rouge_l(x, x) == 1.0


def test_transposition_sensitivity():
    ref = list("abcd")
    assert bleu2(list("bacd"), ref) < 1.0
    assert rouge_l(list("bacd"), ref) < 1.0


def test_corpus_bleu_pools_counts():
    pairs = [(list("abcd"), list("abcd")), (list("ab"), list("xy"))]
    # unigram 4/6, bigram 3/4, lengths equal
    assert corpus_bleu2(pairs) == pytest.approx(math.sqrt(4 / 6 * 3 / 4))


def test_evaluate_text(fixtures_dir):
    pairs = load_text_pairs((fixtures_dir / "pairs.jsonl").read_bytes())
    report = evaluate_text(pairs)
    assert report.n_pairs == 4
    manual = sum(bleu2(tokenize(p.candidate), tokenize(p.reference)) for p in pairs) / 4
    assert report.corpus["bleu2"] == pytest.approx(manual)
    assert report.corpus["meteor_inexact_pairs"] == 0
    with pytest.raises(ValueError):
        evaluate_text(pairs, ("bleu4",))


def test_long_repetitive_input_is_bounded():
    text = "ha " * 75
    start = time.perf_counter()
    d = meteor_details(tokenize(text), tokenize(text[:-3] + "ho"))
    assert time.perf_counter() - start < 10
    assert 0 < d.score <= 1


def test_bad_pair_rows():
    with pytest.raises(SchemaError):
        load_text_pairs(json.dumps({"dialogue_id": "d", "turn_index": 0, "candidate": 3, "reference": "x"}))
