import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coblab import deviations as dv
from coblab import latin
from coblab.errors import CapacityError, DimensionError, InvariantError, PreconditionError
from conftest import brute_permanent, validate

# OEIS A000166: per(J - I)
DERANGEMENTS = [1, 0, 1, 2, 9, 44, 265, 1854, 14833]


# -- permanents --------------------------------------------------------------


@pytest.mark.parametrize("n", range(0, 9))
def test_permanent_known_families(n):
    assert dv.permanent_exact(np.ones((n, n), int)) == math.factorial(n)
    assert dv.permanent_exact(np.eye(n, dtype=int)) == 1
    assert dv.permanent_exact(np.ones((n, n), int) - np.eye(n, dtype=int)) == DERANGEMENTS[n]


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32), st.integers(0, 3))
def test_permanent_three_ways(n, seed, top):
    M = np.random.default_rng(seed).integers(0, top + 1, size=(n, n))
    assert dv.permanent_exact(M) == dv.permanent_naive(M) == brute_permanent(M)


def test_permanent_big_and_caps():
    assert dv.permanent_exact(np.ones((16, 16), int)) == math.factorial(16)
    with pytest.raises(CapacityError):
        dv.permanent_exact(np.ones((21, 21), int))
    with pytest.raises(DimensionError):
        dv.permanent_exact(np.ones((2, 3), int))
    with pytest.raises(DimensionError):
        dv.permanent_exact([[0.5]])


# -- Bregman -----------------------------------------------------------------


def test_bregman_random(rng):
    for _ in range(300):
        n = int(rng.integers(1, 9))
        M = (rng.random((n, n)) < rng.random()).astype(int)
        chk = dv.bregman_check(M)
        assert chk.holds
        assert chk.permanent <= chk.bound * (1 + 1e-9)


@pytest.mark.parametrize("n", range(1, 9))
def test_bregman_tight_cases(n, rng):
    P = np.eye(n, dtype=int)[rng.permutation(n)]
    for M in (P, np.ones((n, n), int)):
        chk = dv.bregman_check(M)
        assert chk.holds and chk.tight
        assert chk.bound == pytest.approx(chk.permanent)


def test_bregman_zero_row():
    chk = dv.bregman_check([[0, 0], [1, 1]])
    assert chk.permanent == 0 and chk.holds and not chk.tight
    with pytest.raises(DimensionError):
        dv.bregman_bound([[2]])


def test_bregman_block_diagonal_tight():
    # direct sums of all-ones blocks attain the bound
    M = np.zeros((5, 5), int)
    M[:2, :2] = 1
    M[2:, 2:] = 1
    chk = dv.bregman_check(M)
    assert chk.permanent == 12 and chk.tight


# -- restriction systems ----------------------------------------------------


def test_system_derived_sets():
    E = latin.PairSet.from_pairs(3, [(0, 0), (0, 1), (2, 2)])
    sys = dv.RestrictionSystem(3, E, (frozenset({1}), frozenset({0}), frozenset({2})))
    assert sys.k == 1 and sys.ell == 2
    assert sys.R == (frozenset({0}), frozenset(), frozenset())
    assert sys.S == (frozenset({2}), frozenset({1, 2}), frozenset({0, 1}))
    assert sys.p() == (Fraction(1, 2), 0, 0)
    again = dv.RestrictionSystem.from_json(sys.to_json())
    assert again.F == sys.F and np.array_equal(again.E.mask, sys.E.mask)
    with pytest.raises(InvariantError):
        dv.RestrictionSystem(3, E, (frozenset({1}), frozenset(), frozenset({2})))


@pytest.mark.parametrize("n", [1, 3, 5])
def test_sefm_empty_system(n):
    sys = dv.empty_system(n)
    assert dv.count_SEFm(sys, 0).brute == math.factorial(n) == dv.count_SEFm(sys, 0).permanent_sum
    for m in range(1, n + 1):
        c = dv.count_SEFm(sys, m)
        assert c.brute == c.permanent_sum == 0


def test_sefm_identity_random(rng):
    for _ in range(40):
        n = int(rng.integers(2, 6))
        sys = dv.random_system(n, int(rng.integers(0, n)), rng)
        counts = [dv.count_SEFm(sys, m) for m in range(n + 1)]
        assert all(c.equal for c in counts)
        # summing over m counts every permutation avoiding F
        perms = itertools.permutations(range(n))
        avoid = sum(1 for p in perms if all(p[i] not in sys.F[i] for i in range(n)))
        assert sum(c.brute for c in counts) == avoid


# -- the two counting propositions -----------------------------------------------


def test_prop42_documented_instance():
    # n = 6, every row truncated to n/2 = 3 entries, k = 0
    E = latin.PairSet.from_pairs(6, [(i, j) for i in range(6) for j in range(3)])
    sys = dv.RestrictionSystem(6, E, tuple(frozenset() for _ in range(6)))
    chk = dv.check_prop42(sys, Fraction(1, 2))
    assert chk.status == "pass" and chk.count == 0


def test_prop42_n7_half_is_infeasible(rng):
    # l(E) <= 3 caps |E| at 21 < 49/2
    with pytest.raises(PreconditionError):
        dv.random_prop42_system(7, 1, Fraction(1, 2), rng)
    sys = dv.random_prop42_system(7, 1, Fraction(3, 7), rng)
    assert dv.check_prop42(sys, Fraction(3, 7)).status == "pass"


def test_prop42_random_admissible(rng):
    for _ in range(40):
        n = int(rng.integers(2, 8))
        gamma = Fraction(int(rng.integers(1, n // 2 + 1)), n) if n >= 2 else Fraction(1, 2)
        gamma = min(gamma, Fraction(1, 2))
        k = int(rng.integers(0, math.floor(gamma * n / 2) + 1))
        chk = dv.check_prop42(dv.random_prop42_system(n, k, gamma, rng), gamma)
        assert chk.status == "pass", chk


def test_prop42_rejections(rng):
    sys = dv.random_system(6, 0, rng, row_sizes=[3] * 6)
    assert dv.check_prop42(sys, Fraction(3, 4)).status == "rejected"
    full = dv.random_system(6, 0, rng, row_sizes=[6] * 6)
    assert dv.check_prop42(full, Fraction(1, 2)).reason == "l(E) > n / 2"
    with pytest.raises(CapacityError):
        dv.check_prop42(dv.empty_system(9), Fraction(1, 2))


def test_prop42_json():
    E = latin.PairSet.from_pairs(4, [(i, j) for i in range(4) for j in range(2)])
    out = dv.check_prop42(dv.RestrictionSystem(4, E, tuple(frozenset() for _ in range(4))), Fraction(1, 2)).to_json()
    assert out["status"] == "pass" and out["bound"] == pytest.approx(math.exp(out["log_bound"]))
    assert "ceil" in out["conventions"]


def test_prop43_documented_instances(rng):
    for n, gamma in ((4, Fraction(1, 2)), (5, Fraction(2, 5))):
        Es, I = dv.random_prop43_instance(n, gamma, rng)
        assert len(I) == math.ceil(gamma * n / 2)
        chk = dv.check_prop43(n, gamma, Es, I)
        assert chk.status == "pass"


def test_prop43_frozen_counts():
    # rows take E_i = [n] x {0, .., n/2 - 1} on I = {0}
    n, gamma = 4, Fraction(1, 2)
    E = latin.PairSet.from_pairs(n, [(i, j) for i in range(n) for j in range(2)])
    chk = dv.check_prop43(n, gamma, [E] * n, [0])
    # g < 1/5 means g = 0: row 0 avoids symbols {0, 1} everywhere, which no permutation can do
    assert chk.count == 0 and chk.status == "pass"


def test_prop43_rejections(rng):
    Es, I = dv.random_prop43_instance(4, Fraction(1, 2), rng)
    assert dv.check_prop43(4, Fraction(1, 2), Es, []).status == "rejected"
    assert dv.check_prop43(4, Fraction(1, 2), Es, [0, 1]).status == "rejected"
    with pytest.raises(CapacityError):
        dv.check_prop43(6, Fraction(1, 2), Es, I)


def test_gamma_rationalised():
    # 0.4 * 5 / 2 = 1 exactly, not 1.0000000000000002
    assert dv.prop43_index_size(5, 0.4) == 1
    assert dv.prop43_index_size(5, Fraction(2, 5)) == 1


# -- nls ---------------------------------------------------------------


def test_nls_frozen():
    expected = {1: 1.0, 2: 1.0, 3: math.sqrt(2), 4: 1.817, 5: 4.4295}
    for n, v in expected.items():
        r = dv.nls_ratio(n)
        assert r.at_least_one and r.value == pytest.approx(v, abs=5e-4)
    assert dv.nls_ratio(5).latin_count == 161280


# -- expectation identities ---------------------------------------------------


def test_f_expectation_order4(rng):
    arr = latin.enumerate_latin_array(4)
    for _ in range(5):
        CE = latin.random_triset(4, int(rng.integers(0, 65)), rng)
        assert Fraction(int(latin.f_stat_many(arr, CE).sum()), 576) == Fraction(len(CE), 4)


def test_g_expectation_S5(rng):
    perms = list(itertools.permutations(range(5)))
    for _ in range(5):
        E = latin.random_pairset(5, int(rng.integers(0, 26)), rng)
        assert Fraction(sum(latin.g_stat(p, E) for p in perms), 120) == Fraction(len(E), 5)


# -- Chernoff ----------------------------------------------------------------


def test_chernoff_dominates_exact_tail(rng):
    for _ in range(30):
        ps = [Fraction(int(rng.integers(0, 11)), 10) for _ in range(int(rng.integers(1, 25)))]
        pmf = dv.poisson_binomial_pmf(ps)
        assert sum(pmf) == 1
        mean = sum(ps)
        if mean == 0:
            continue
        for a in (0.5, 1.0, 2.0, float(mean) / 2):
            if a <= 0:
                continue
            tail = sum(w for j, w in enumerate(pmf) if j < mean - Fraction(a))
            assert float(tail) <= dv.chernoff_bound(float(mean), a) + 1e-12


def test_poisson_binomial_binomial_case():
    pmf = dv.poisson_binomial_pmf([Fraction(1, 2)] * 4)
    assert pmf == [Fraction(c, 16) for c in (1, 4, 6, 4, 1)]


# -- Monte Carlo reports ---------------------------------------------------------


def test_wilson_interval():
    lo, hi = dv.wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)
    assert dv.wilson_interval(0, 10)[0] == 0.0 and dv.wilson_interval(10, 10)[1] == 1.0


def test_tail_experiment_deterministic_and_schema(rng):
    n = 8
    CE = latin.random_triset(n, 300, rng)
    a = dv.tail_experiment(n, 0.5, CE, 60, seed=5)
    b = dv.tail_experiment(n, 0.5, CE, 60, seed=5, threads=3)
    assert np.array_equal(a.values, b.values)
    assert 0 <= a.tail_mass <= 1 and a.expected_mean == Fraction(300, 8)
    validate(a.to_json(), "tail-report")
    assert abs(a.mean - 300 / 8) <= 4 / math.sqrt(60) * n * 8  # 4/sqrt(samples) * n relative slack


def test_tail_full_CE():
    n = 5
    CE = latin.TriSet(n, np.ones((n, n, n), bool))
    rep = dv.tail_experiment(n, 0.9, CE, 10, seed=1)
    assert set(rep.values.tolist()) == {25} and rep.tail_mass == 0.0


def test_tail_preconditions(rng):
    CE = latin.random_triset(5, 10, rng)
    with pytest.raises(PreconditionError):
        dv.tail_experiment(5, 0.5, CE, 10)
    with pytest.raises(PreconditionError):
        dv.tail_experiment(5, 0.01, CE, 0)


def test_d1_homology_always_nonzero():
    out = dv.h1_nonvanishing_experiment(6, 1, 5, seed=2)
    assert out["frequency"] == 1.0
    validate(out, "experiment")


def test_d3_homology_deterministic():
    a = dv.h1_nonvanishing_experiment(8, 3, 6, seed=4)
    b = dv.h1_nonvanishing_experiment(8, 3, 6, seed=4, threads=2)
    assert a == b and a["reference_line"] == pytest.approx(0.5768, abs=1e-4)
