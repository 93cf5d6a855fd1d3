"""Parser structure, rate formulas, word-count extremes, and word classes."""

import math

import numpy as np
import pytest

import gibbslz as g
from gibbslz import (
    CosineLattice,
    EnsembleSpec,
    LzParse,
    Statistics,
    TypicalParams,
    classify_words,
    code_rate,
    lz78_parse,
    lz_rate,
    lz_rate_from_count,
    marginal_entropy,
    max_word_count,
    site_entropies,
    site_means,
    typical_membership,
    word_ensemble_entropy,
)
from gibbslz.errors import DomainError

FERMI = EnsembleSpec(Statistics.FERMI, 1.0, 1.0, CosineLattice())


def test_hand_traced_parse():
    parse = lz78_parse(np.array([1, 0, 1, 1, 0, 1, 0]))
    assert parse.word_count == 5
    assert parse.starts.tolist() == [0, 1, 2, 4, 6]
    assert parse.lengths.tolist() == [1, 1, 2, 2, 1]


def test_all_zeros_closed_form():
    # 0 | 00 | 000 | ... : the count is the least k with k(k+1)/2 >= ell.
    for ell in [1, 2, 3, 6, 10, 11, 12, 100, 1000]:
        parse = lz78_parse(np.zeros(ell, dtype=np.int64))
        expected = next(k for k in range(1, ell + 1) if k * (k + 1) // 2 >= ell)
        assert parse.word_count == expected
        assert parse.word_count == max_word_count(ell, alphabet_size=1)


def test_trailing_word_may_duplicate():
    parse = lz78_parse(np.array([0, 1, 0, 1, 0, 1]))
    assert parse.words == [(0, 1), (1, 1), (2, 2), (4, 2)]
    vals = np.array([0, 1, 0, 1, 0, 1])
    words = [tuple(vals[s:s + m]) for s, m in parse.words]
    assert words[-1] == words[2]
    assert len(set(words[:-1])) == len(words) - 1


def test_single_repeated_symbol_counts_trailer():
    parse = lz78_parse(np.array([1, 1]))
    assert parse.word_count == 2
    assert parse.words == [(0, 1), (1, 1)]


def test_all_but_last_word_distinct_on_samples():
    rng = np.random.default_rng(7)
    for _ in range(20):
        vals = rng.integers(0, 3, size=rng.integers(2, 400))
        parse = lz78_parse(vals)
        words = [tuple(vals[s:s + m]) for s, m in parse.words]
        assert len(set(words[:-1])) == len(words) - 1
        assert int(parse.lengths.sum()) == vals.size


def test_prefix_closure_on_samples():
    rng = np.random.default_rng(11)
    for _ in range(10):
        vals = rng.integers(0, 2, size=rng.integers(2, 300))
        parse = lz78_parse(vals)
        seen = set()
        for s, m in parse.words[:-1]:
            word = tuple(vals[s:s + m])
            if m > 1:
                assert word[:-1] in seen
            seen.add(word)


def test_relabel_invariance():
    rng = np.random.default_rng(3)
    vals = rng.integers(0, 4, size=500)
    base = lz78_parse(vals)
    for mapping in [{0: 1, 1: 0, 2: 3, 3: 2}, {k: k + 17 for k in range(4)}]:
        relabeled = np.vectorize(mapping.get)(vals)
        parse = lz78_parse(relabeled)
        assert parse.starts.tolist() == base.starts.tolist()
        assert parse.lengths.tolist() == base.lengths.tolist()


def test_max_word_count_is_tight_for_short_binary_strings():
    for ell in range(1, 13):
        best = 0
        for bits in range(1 << ell):
            vals = np.array([(bits >> i) & 1 for i in range(ell)], dtype=np.int64)
            best = max(best, lz78_parse(vals).word_count)
        assert best == max_word_count(ell, alphabet_size=2)


def test_max_word_count_validation_and_growth():
    with pytest.raises(DomainError):
        max_word_count(-1)
    with pytest.raises(DomainError):
        max_word_count(5, alphabet_size=0)
    assert max_word_count(0) == 0
    # Bound grows sublinearly: C log2 C <= ell log2(alphabet) + O(C).
    for ell in [64, 256, 1024, 4096]:
        c = max_word_count(ell, alphabet_size=2)
        assert c * math.log2(c) <= ell + 2 * c


def test_rate_formulas():
    assert lz_rate_from_count(5, 7) == pytest.approx(5 * math.log2(7) / 7)
    parse = lz78_parse(np.array([1, 0, 1, 1, 0, 1, 0]))
    assert lz_rate(parse) == pytest.approx(5 * math.log2(7) / 7)
    assert code_rate(parse) == pytest.approx(5 * math.log2(5) / 7)
    with pytest.raises(DomainError):
        lz_rate_from_count(3, 1)
    with pytest.raises(DomainError):
        lz_rate_from_count(-1, 8)
    with pytest.raises(DomainError):
        code_rate(lz78_parse(np.array([0])))


def test_parse_tiling_validation():
    LzParse(0, np.array([], dtype=np.int64), np.array([], dtype=np.int64))
    with pytest.raises(DomainError):
        LzParse(3, np.array([0, 2]), np.array([1, 1]))
    with pytest.raises(DomainError):
        LzParse(3, np.array([0, 1]), np.array([1, 1]))
    with pytest.raises(DomainError):
        LzParse(2, np.array([0]), np.array([0]))
    with pytest.raises(DomainError):
        LzParse(2, np.array([], dtype=np.int64), np.array([], dtype=np.int64))
    parse = lz78_parse(np.array([1, 0]))
    with pytest.raises(ValueError):
        parse.starts[0] = 5


def test_parse_rejects_bad_inputs():
    with pytest.raises(DomainError):
        lz78_parse(np.array([[1, 0], [0, 1]]))
    with pytest.raises(DomainError):
        lz78_parse(np.array([0.5, 1.0]))


def test_word_ensemble_entropy_matches_profile():
    ell = 64
    ents = site_entropies(FERMI, ell)
    whole = word_ensemble_entropy(FERMI, ell, 0, ell)
    assert whole == pytest.approx(float(ents.sum()), rel=1e-12)
    one = word_ensemble_entropy(FERMI, ell, 17, 1)
    assert one == pytest.approx(float(marginal_entropy(FERMI, 17 / ell)), rel=1e-12)
    with pytest.raises(DomainError):
        word_ensemble_entropy(FERMI, ell, 60, 5)
    with pytest.raises(DomainError):
        word_ensemble_entropy(FERMI, ell, -1, 2)


def test_typical_params_from_ensemble():
    params = TypicalParams.from_ensemble(FERMI, 0.3)
    expit = lambda t: 1.0 / (1.0 + math.exp(-t))
    sup = expit(1.0)
    assert params.sup_mean == pytest.approx(sup, abs=1e-6)
    h = -(sup * math.log2(sup) + (1 - sup) * math.log2(1 - sup))
    assert params.entropy_at_sup == pytest.approx(h, abs=1e-6)
    assert params.eps_prime == pytest.approx(0.3 * h / (2 * sup), abs=1e-6)
    assert not params.two_sided
    for bad in [0.0, 1.0, -0.2, 1.5]:
        with pytest.raises(DomainError):
            TypicalParams.from_ensemble(FERMI, bad)


def test_typical_membership_thresholds():
    params = TypicalParams(eps=0.5, eps_prime=0.25, sup_mean=0.5,
                           entropy_at_sup=1.0, two_sided=False)
    profile = np.full(8, 0.5)
    vals = np.array([1, 1, 0, 0, 0, 0, 0, 0])
    # Window [0, 4): dev = 2 - 2 = 0 <= 1.
    assert typical_membership(vals, 0, 4, profile, params)
    # Window [0, 2): dev = 2 - 1 = 1 > 0.5.
    assert not typical_membership(vals, 0, 2, profile, params)
    # Exactly at the allowance passes.
    assert typical_membership(np.array([1, 1, 0, 0, 1, 0, 0, 0]), 0, 4,
                              profile, params)
    # Undershoot passes one-sided, fails two-sided.
    zeros = np.zeros(8, dtype=np.int64)
    assert typical_membership(zeros, 0, 4, profile, params)
    two = TypicalParams(eps=0.5, eps_prime=0.25, sup_mean=0.5,
                        entropy_at_sup=1.0, two_sided=True)
    assert not typical_membership(zeros, 0, 4, profile, two)
    with pytest.raises(DomainError):
        typical_membership(vals, 6, 4, profile, params)
    with pytest.raises(DomainError):
        typical_membership(vals, 0, 4, profile[:4], params)


def test_classify_words_matches_direct_loop():
    ell = 256
    string = g.sample_canonical(FERMI, ell, g.choose_n(0.5, ell).n, seed=5)
    parse = lz78_parse(string)
    params = TypicalParams.from_ensemble(FERMI, 0.3)
    counts = classify_words(parse, string, FERMI, params)

    means = site_means(FERMI, ell)
    budget = (1.0 - params.eps ** 2) * math.log2(ell)
    low = other = non = 0
    for s, m in parse.words:
        typ = typical_membership(string, s, m, means, params)
        ent = word_ensemble_entropy(FERMI, ell, s, m)
        if typ and ent <= budget:
            low += 1
        elif typ:
            other += 1
        else:
            non += 1
    assert (counts.low_typical, counts.other_typical, counts.non_typical) == \
        (low, other, non)
    assert counts.total == parse.word_count


def test_classify_words_validation():
    vals = np.array([1, 0, 1, 1])
    parse = lz78_parse(vals)
    params = TypicalParams.from_ensemble(FERMI, 0.3)
    with pytest.raises(DomainError):
        classify_words(parse, vals[:3], FERMI, params)
    with pytest.raises(DomainError):
        classify_words(lz78_parse(np.array([0])), np.array([0]), FERMI, params)


def test_classify_words_two_sided_is_stricter():
    rng = np.random.default_rng(9)
    vals = (rng.random(512) < 0.5).astype(np.int64)
    parse = lz78_parse(vals)
    one = TypicalParams.from_ensemble(FERMI, 0.3)
    two = TypicalParams.from_ensemble(FERMI, 0.3, two_sided=True)
    c1 = classify_words(parse, vals, FERMI, one)
    c2 = classify_words(parse, vals, FERMI, two)
    assert c2.non_typical >= c1.non_typical
    assert c1.total == c2.total == parse.word_count
