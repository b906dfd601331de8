import itertools

import pytest
from hypothesis import given, strategies as st

from subharm.combinatorics import (NecklaceTable, TooLarge, bits_to_letters, block_rotations,
                                   canonical_necklace, divisors, least_rotation_index,
                                   lyndon_words, moebius, predicted_subharmonic_count,
                                   smallest_period, witt_count)


@pytest.mark.parametrize("l,mu", [(1, 1), (2, -1), (3, -1), (4, 0), (6, 1), (12, 0), (30, -1),
                                  (49, 0), (97, -1), (210, 1)])
def test_moebius(l, mu):
    assert moebius(l) == mu


def test_moebius_domain():
    with pytest.raises(ValueError):
        moebius(0)


def test_witt_binary_table():
    assert [witt_count(2, k) for k in range(1, 11)] == [2, 1, 2, 3, 6, 9, 18, 30, 56, 99]


@pytest.mark.parametrize("n,k,expected", [(4, 2, 6), (8, 2, 28), (2, 5, 6), (3, 3, 8)])
def test_witt_values(n, k, expected):
    assert witt_count(n, k) == expected


def test_witt_exact_big_integers():
    # 2^60 is far beyond float precision; the count must stay exact
    v = witt_count(2, 60)
    assert isinstance(v, int) and v * 60 == sum(moebius(l) * 2 ** (60 // l) for l in divisors(60))


@pytest.mark.parametrize("k,words", [(2, ["ab"]), (3, ["aab", "abb"]), (4, ["aaab", "aabb", "abbb"])])
def test_lyndon_small(k, words):
    assert lyndon_words(2, k) == words


def test_lyndon_int_alphabet():
    assert lyndon_words(3, 2, alphabet=int) == [(0, 1), (0, 2), (1, 2)]


def test_lyndon_guard():
    with pytest.raises(TooLarge):
        lyndon_words(10, 8)


@pytest.mark.parametrize("k", range(1, 11))
def test_lyndon_counts_match_witt(k):
    assert len(lyndon_words(2, k)) == witt_count(2, k)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("k", range(1, 11))
def test_necklace_factorisation(n, k):
    assert sum(d * len(lyndon_words(n, d)) for d in divisors(k)) == n ** k


def _brute_aperiodic_necklaces(n, k):
    seen = set()
    for w in itertools.product(range(n), repeat=k):
        if smallest_period(w) == k:
            seen.add(min(w[i:] + w[:i] for i in range(k)))
    return len(seen)


@pytest.mark.parametrize("n,k", [(n, k) for n in range(1, 5) for k in range(1, 9)])
def test_brute_force_counts(n, k):
    assert _brute_aperiodic_necklaces(n, k) == witt_count(n, k)


@pytest.mark.parametrize("s,canon,aperiodic", [("bbaa", "aabb", True), ("abab", "abab", False),
                                              ("a", "a", True), ("baa", "aab", True)])
def test_canonical_necklace(s, canon, aperiodic):
    assert canonical_necklace(s) == (canon, aperiodic)


@given(st.text(alphabet="abc", min_size=1, max_size=12), st.integers(0, 11))
def test_canonical_rotation_invariant_and_idempotent(s, r):
    r %= len(s)
    c, ap = canonical_necklace(s)
    assert canonical_necklace(s[r:] + s[:r]) == (c, ap)
    assert canonical_necklace(c) == (c, ap)
    assert c == min(s[i:] + s[:i] for i in range(len(s)))


@given(st.lists(st.integers(0, 3), min_size=1, max_size=15))
def test_booth_matches_naive(xs):
    i = least_rotation_index(xs)
    assert xs[i:] + xs[:i] == min(xs[j:] + xs[:j] for j in range(len(xs)))


def test_block_rotations_and_letters():
    bits = (1, 0, 0, 1, 1, 1)
    assert block_rotations(bits, 3) == [bits, (1, 1, 1, 1, 0, 0)]
    assert bits_to_letters(bits, 3) == (4, 7)
    with pytest.raises(ValueError):
        block_rotations(bits, 4)


@pytest.mark.parametrize("m,k,expected", [(1, 2, 1), (1, 5, 6), (3, 2, 28)])
def test_predicted_count(m, k, expected):
    assert predicted_subharmonic_count(m, k) == expected


def test_predicted_count_domain():
    with pytest.raises(ValueError):
        predicted_subharmonic_count(1, 1)


def test_necklace_table():
    t = NecklaceTable.build(2, 6)
    assert t.count == 9 == len(t.words)
    assert NecklaceTable.build(4, 12, limit=10).words == []
