import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from coblab import latin
from coblab.errors import CapacityError, DimensionError, InvariantError
from conftest import validate

# OEIS A002860
LATIN_COUNTS = {1: 1, 2: 2, 3: 12, 4: 576, 5: 161280}


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_enumeration_counts(n):
    assert len(latin.enumerate_latin_array(n)) == LATIN_COUNTS[n]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_enumeration_matches_bruteforce(n):
    assert latin.count_legal_tuples_bruteforce(n) == LATIN_COUNTS[n]


def test_enumeration_sorted_distinct_and_latin():
    arr = latin.enumerate_latin_array(4)
    keys = [tuple(a.ravel().tolist()) for a in arr]
    assert keys == sorted(set(keys))
    assert all(latin.is_latin_array(a) for a in arr)
    squares = latin.enumerate_latin(3)
    assert [s.key() for s in squares] == sorted(s.key() for s in squares)


def test_enumeration_cap():
    with pytest.raises(CapacityError):
        latin.enumerate_latin_array(6)
    with pytest.raises(DimensionError):
        latin.enumerate_latin_array(0)


def test_square_validation():
    with pytest.raises(InvariantError):
        latin.LatinSquare.from_rows([[0, 1], [0, 1]])
    with pytest.raises(DimensionError):
        latin.LatinSquare.from_rows([[0, 1, 2], [1, 2, 0]])
    with pytest.raises(InvariantError):
        latin.Permutation((0, 0, 1))


def test_permutation_inverse():
    p = latin.Permutation((2, 0, 3, 1))
    q = p.inverse()
    assert all(q(p(i)) == i for i in range(4))


def test_json_roundtrip():
    sq = latin.LatinSquare.cyclic(5)
    data = sq.to_json()
    validate(data, "latin-square")
    assert latin.LatinSquare.from_json(data) == sq
    with pytest.raises(DimensionError):
        latin.LatinSquare.from_json({"n": 4, "rows": data["rows"]})


@pytest.mark.parametrize("n", [1, 2, 3, 7, 12, 31])
def test_sampler_proper(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        assert latin.is_latin_array(latin.sample_uniform_array(n, rng))


def test_sampler_zero_burn_in_still_proper():
    assert latin.is_latin_array(latin.sample_uniform_array(9, 1, burn_in=0))


def test_sampler_deterministic():
    a = latin.sample_uniform_array(20, 123)
    b = latin.sample_uniform_array(20, 123)
    c = latin.sample_uniform_array(20, 124)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert latin.sample_uniform(6, 5) == latin.sample_uniform(6, 5)


def test_sampler_chi_square_order3():
    index = {tuple(a.ravel().tolist()): i for i, a in enumerate(latin.enumerate_latin_array(3))}
    rng = np.random.default_rng(7)
    counts = np.zeros(12)
    for _ in range(12000):
        counts[index[tuple(latin.sample_uniform_array(3, rng).ravel().tolist())]] += 1
    assert chisquare(counts).pvalue > 0.001


def test_sampler_order4_spread():
    # every one of the 576 squares should appear in 20000 draws with overwhelming probability
    index = {tuple(a.ravel().tolist()) for a in latin.enumerate_latin_array(4)}
    rng = np.random.default_rng(11)
    seen = {tuple(latin.sample_uniform_array(4, rng).ravel().tolist()) for _ in range(20000)}
    assert seen == index


@settings(max_examples=60, deadline=None)
@given(st.permutations(list(range(6))), st.sets(st.tuples(st.integers(0, 5), st.integers(0, 5))))
def test_g_stat_matches_definition(perm, pairs):
    E = latin.PairSet.from_pairs(6, pairs)
    assert latin.g_stat(perm, E) == sum(1 for i in range(6) if (i, perm[i]) in pairs)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 64))
def test_f_stat_matches_definition(seed, size):
    rng = np.random.default_rng(seed)
    CE = latin.random_triset(4, size, rng)
    L = latin.sample_uniform(4, rng)
    trips = set(CE.triples())
    assert latin.f_stat(L, CE) == sum(1 for i in range(4) for j in range(4) if (i, j, L[i, j]) in trips)
    assert latin.f_stat_many(L.as_array()[None], CE)[0] == latin.f_stat(L, CE)


def test_f_expectation_exact_small():
    arr = latin.enumerate_latin_array(3)
    rng = np.random.default_rng(3)
    for size in (0, 1, 5, 13, 27):
        CE = latin.random_triset(3, size, rng)
        assert Fraction(int(latin.f_stat_many(arr, CE).sum()), len(arr)) == Fraction(size, 3)


def test_g_expectation_exact_small():
    rng = np.random.default_rng(4)
    perms = list(itertools.permutations(range(4)))
    for size in (0, 3, 8, 16):
        E = latin.random_pairset(4, size, rng)
        assert Fraction(sum(latin.g_stat(p, E) for p in perms), len(perms)) == Fraction(size, 4)


def test_pairset_stats():
    E = latin.PairSet.from_pairs(4, [(0, 1), (0, 2), (3, 3)])
    assert len(E) == 3 and E.max_row() == 2
    assert E.row_sets()[0] == frozenset({1, 2})
    assert len(latin.PairSet.full(3)) == 9 and len(latin.PairSet.empty(3)) == 0
    with pytest.raises(DimensionError):
        latin.g_stat((0, 1, 2), E)
