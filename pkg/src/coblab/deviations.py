"""Permanents, restricted permutation counts and the Latin-square tail bounds.

Counts are exact Python integers. Bound formulas are evaluated in the log
domain; ``*_log`` fields are natural logarithms.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .complexes import build_Y_union
from ._exact import rational
from .errors import CapacityError, DimensionError, InvariantError, PreconditionError
from .gf2 import cohomology_rank
from .latin import PairSet, TriSet, enumerate_latin_array, f_stat_many, sample_uniform_array
from .rng import resolve_seed, spawn

PERMANENT_CAP = 20
BRUTE_CAP = 8
LOG_TOL = 1e-9
CONVENTIONS = "|I| = ceil(gamma n / 2); m < gamma n / 10 compared as reals"


def _as_int_matrix(M) -> list[list[int]]:
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("matrix must be square")
    if A.size and (A.min() < 0 or not np.array_equal(A, np.round(A))):
        raise DimensionError("entries must be nonnegative integers")
    return [[int(x) for x in row] for row in A.tolist()]


# ---------------------------------------------------------------------------
# permanents


def permanent_exact(M) -> int:
    """per M by Ryser's formula, walking column subsets in Gray order.

    per M = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} M[i][j]; one column
    enters or leaves per step, so row sums update in O(n).
    """
    A = _as_int_matrix(M)
    n = len(A)
    if n > PERMANENT_CAP:
        raise CapacityError(f"exact permanent is capped at n = {PERMANENT_CAP}")
    if n == 0:
        return 1
    cols = [[A[i][j] for i in range(n)] for j in range(n)]
    sums = [0] * n
    total = 0
    inside = [False] * n
    size = 0
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        col = cols[j]
        if inside[j]:
            sums = [s - c for s, c in zip(sums, col)]
            size -= 1
        else:
            sums = [s + c for s, c in zip(sums, col)]
            size += 1
        inside[j] = not inside[j]
        term = math.prod(sums)
        total += -term if size & 1 else term
    return total if n % 2 == 0 else -total


def permanent_naive(M) -> int:
    """Sum over all n! permutations; the oracle for :func:`permanent_exact`."""
    A = _as_int_matrix(M)
    n = len(A)
    if n > BRUTE_CAP:
        raise CapacityError(f"naive permanent is capped at n = {BRUTE_CAP}")
    return sum(math.prod(A[i][p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def _row_sums(M) -> list[int]:
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("matrix must be square")
    if A.size and not np.isin(A, (0, 1)).all():
        raise DimensionError("Bregman's bound is stated for 0/1 matrices")
    return [int(t) for t in A.sum(axis=1)]


def bregman_log_bound(M) -> float:
    """log of prod_i t_i!^(1 / t_i); empty rows contribute 0."""
    return sum(math.lgamma(t + 1) / t for t in _row_sums(M) if t > 0)


def bregman_bound(M) -> float:
    return math.exp(bregman_log_bound(M))


@dataclass(frozen=True)
class BregmanCheck:
    permanent: int
    bound: float
    holds: bool
    tight: bool


def bregman_check(M) -> BregmanCheck:
    """Compare per M with the bound exactly.

    With l the lcm of the nonzero row sums, per^l <= prod t_i!^(l / t_i) is an
    integer comparison equivalent to the bound.
    """
    t = _row_sums(M)
    per = permanent_exact(M)
    bound = bregman_bound(M)
    if any(x == 0 for x in t):
        return BregmanCheck(per, bound, per == 0, False)
    ell = math.lcm(*t) if t else 1
    rhs = math.prod(math.factorial(x) ** (ell // x) for x in t)
    lhs = per**ell
    return BregmanCheck(per, bound, lhs <= rhs, lhs == rhs)


# ---------------------------------------------------------------------------
# restriction systems


@dataclass(frozen=True, eq=False)
class RestrictionSystem:
    """A pair set E = U {i} x A_i with forbidden sets B_i, all of size k."""

    n: int
    E: PairSet
    F: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.E.n != self.n or len(self.F) != self.n:
            raise DimensionError("E and F must both have n rows")
        F = tuple(frozenset(int(x) for x in B) for B in self.F)
        if any(not all(0 <= x < self.n for x in B) for B in F):
            raise DimensionError("forbidden symbols must lie in [n]")
        if len({len(B) for B in F}) > 1:
            raise InvariantError("forbidden sets must share one size k")
        object.__setattr__(self, "F", F)

    @property
    def k(self) -> int:
        return len(self.F[0]) if self.F else 0

    @property
    def A(self) -> tuple[frozenset[int], ...]:
        return self.E.row_sets()

    @property
    def R(self) -> tuple[frozenset[int], ...]:
        return tuple(a - b for a, b in zip(self.A, self.F))

    @property
    def S(self) -> tuple[frozenset[int], ...]:
        full = frozenset(range(self.n))
        return tuple(full - a - b for a, b in zip(self.A, self.F))

    @property
    def ell(self) -> int:
        return self.E.max_row()

    def p(self) -> tuple[Fraction, ...]:
        """p_i = r_i / (n - k)."""
        return tuple(Fraction(len(r), self.n - self.k) for r in self.R)

    def forbidden_mask(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        for i, B in enumerate(self.F):
            m[i, sorted(B)] = True
        return m

    def M_I(self, I) -> np.ndarray:
        """Row i is the indicator of R_i for i in I and of S_i otherwise."""
        I = set(I)
        M = np.zeros((self.n, self.n), dtype=np.int64)
        for i, (r, s) in enumerate(zip(self.R, self.S)):
            M[i, sorted(r if i in I else s)] = 1
        return M

    def to_json(self) -> dict:
        return {"n": self.n, "E": self.E.to_json()["pairs"], "F": [sorted(B) for B in self.F]}

    @classmethod
    def from_json(cls, data: dict) -> "RestrictionSystem":
        n = int(data["n"])
        return cls(n, PairSet.from_pairs(n, data["E"]), tuple(frozenset(B) for B in data["F"]))


def empty_system(n: int) -> RestrictionSystem:
    return RestrictionSystem(n, PairSet.empty(n), tuple(frozenset() for _ in range(n)))


def random_system(n: int, k: int, rng, row_sizes: Sequence[int] | None = None) -> RestrictionSystem:
    """Random A_i (of the given sizes, default uniform in [0, n]) and random k-sets B_i."""
    mask = np.zeros((n, n), dtype=bool)
    F = []
    for i in range(n):
        a = int(rng.integers(0, n + 1)) if row_sizes is None else int(row_sizes[i])
        mask[i, rng.choice(n, size=a, replace=False)] = True
        F.append(frozenset(int(x) for x in rng.choice(n, size=k, replace=False)))
    return RestrictionSystem(n, PairSet(n, mask), tuple(F))


@lru_cache(maxsize=None)
def _perm_array(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)


def _g_and_allowed(sys: RestrictionSystem) -> tuple[np.ndarray, np.ndarray]:
    if sys.n > BRUTE_CAP:
        raise CapacityError(f"brute-force counts are capped at n = {BRUTE_CAP}")
    P = _perm_array(sys.n)
    rows = np.arange(sys.n)
    g = sys.E.mask[rows, P].sum(axis=1)
    allowed = ~sys.forbidden_mask()[rows, P].any(axis=1)
    return g, allowed


@dataclass(frozen=True)
class SEFmCount:
    m: int
    brute: int
    permanent_sum: int

    @property
    def equal(self) -> bool:
        return self.brute == self.permanent_sum


def count_SEFm(sys: RestrictionSystem, m: int) -> SEFmCount:
    """|S(E, F, m)| by enumerating permutations and by summing per M_I over |I| = m."""
    g, allowed = _g_and_allowed(sys)
    brute = int(np.sum((g == m) & allowed))
    total = 0
    if 0 <= m <= sys.n:
        for I in itertools.combinations(range(sys.n), m):
            total += permanent_exact(sys.M_I(I))
    return SEFmCount(m, brute, total)


# ---------------------------------------------------------------------------
# the two counting propositions


@dataclass(frozen=True)
class BoundCheck:
    status: str  # pass | fail | rejected
    count: int | None
    log_bound: float | None
    reason: str = ""
    conventions: str = CONVENTIONS
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status != "fail"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "count": self.count,
            "log_bound": self.log_bound,
            "bound": None if self.log_bound is None else _safe_exp(self.log_bound),
            "reason": self.reason,
            "conventions": self.conventions,
            **self.extra,
        }


def _safe_exp(x: float) -> float | str:
    return math.exp(x) if x < 700 else f"exp({x!r})"


def _log_le(count: int, log_bound: float) -> bool:
    if count == 0:
        return True
    return math.log(count) <= log_bound + LOG_TOL * max(1.0, abs(log_bound))


def prop42_log_bound(n: int, k: int, gamma: float) -> float:
    """log of 4 n^2 ((n - k) / e)^n exp(-gamma n / 20)."""
    return math.log(4 * n * n) + n * (math.log(n - k) - 1) - gamma * n / 20


def check_prop42(sys: RestrictionSystem, gamma) -> BoundCheck:
    """Brute-force |S(E, F)| = sum over m < gamma n / 10 of |S(E, F, m)| against the bound."""
    n, k = sys.n, sys.k
    g = float(gamma)
    if not 0 < g <= 0.5:
        return BoundCheck("rejected", None, None, "gamma must lie in (0, 1/2]")
    if n > BRUTE_CAP:
        raise CapacityError(f"brute-force counts are capped at n = {BRUTE_CAP}")
    if len(sys.E) < rational(gamma) * n * n:
        return BoundCheck("rejected", None, None, "|E| < gamma n^2")
    if k > rational(gamma) * n / 2:
        return BoundCheck("rejected", None, None, "k > gamma n / 2")
    if 2 * sys.ell > n:
        return BoundCheck("rejected", None, None, "l(E) > n / 2")
    gs, allowed = _g_and_allowed(sys)
    cutoff = rational(gamma) * n / 10
    count = int(np.sum((gs < cutoff) & allowed))
    lb = prop42_log_bound(n, k, g)
    return BoundCheck("pass" if _log_le(count, lb) else "fail", count, lb, extra={"n": n, "k": k, "gamma": g})


def log_prod_factorial_powers(n: int) -> float:
    """log of prod_{k=1}^n k!^(n / k)."""
    return sum(n * math.lgamma(k + 1) / k for k in range(1, n + 1))


def prop43_log_bound(n: int, gamma: float) -> float:
    """log of (2n)^(gamma n) prod k!^(n/k) exp(-gamma^2 n^2 / 40)."""
    return gamma * n * math.log(2 * n) + log_prod_factorial_powers(n) - gamma * gamma * n * n / 40


def prop43_index_size(n: int, gamma) -> int:
    return math.ceil(rational(gamma) * n / 2)


def check_prop43(n: int, gamma, Es: Sequence[PairSet], I: Sequence[int]) -> BoundCheck:
    """Count squares whose rows i in I satisfy g_{E_i}(pi_i) < gamma n / 10."""
    if n > 5:
        raise CapacityError("the Latin-square count enumerates, so n <= 5")
    I = sorted(set(int(i) for i in I))
    g = float(gamma)
    if not 0 < g <= 0.5:
        return BoundCheck("rejected", None, None, "gamma must lie in (0, 1/2]")
    if len(Es) != n or any(E.n != n for E in Es):
        raise DimensionError("need n pair sets of order n")
    if not I:
        return BoundCheck("rejected", None, None, "I must be nonempty")
    if any(not 0 <= i < n for i in I):
        raise DimensionError("I must be a subset of [n]")
    if len(I) != prop43_index_size(n, gamma):
        return BoundCheck("rejected", None, None, "|I| != ceil(gamma n / 2)")
    if any(2 * E.max_row() > n for E in Es):
        return BoundCheck("rejected", None, None, "some l(E_i) > n / 2")
    if any(len(Es[i]) < rational(gamma) * n * n for i in I):
        return BoundCheck("rejected", None, None, "some |E_i| < gamma n^2 for i in I")
    squares = enumerate_latin_array(n).astype(np.int64)
    cutoff = rational(gamma) * n / 10
    keep = np.ones(len(squares), dtype=bool)
    cols = np.arange(n)
    for i in I:
        gi = Es[i].mask[cols[None, :], squares[:, i, :]].sum(axis=1)
        keep &= gi < cutoff
    count = int(keep.sum())
    lb = prop43_log_bound(n, g)
    return BoundCheck(
        "pass" if _log_le(count, lb) else "fail",
        count,
        lb,
        extra={"n": n, "gamma": g, "I": I, "latin_squares": len(squares)},
    )


@dataclass(frozen=True)
class NlsRatio:
    n: int
    latin_count: int
    value: float
    log_value: float
    at_least_one: bool


def nls_ratio(n: int) -> NlsRatio:
    """prod k!^(n/k) / |L_n|, with ``>= 1`` decided in integers.

    Raising to the power l = lcm(1..n) clears every fractional exponent.
    """
    count = len(enumerate_latin_array(n))
    ell = math.lcm(*range(1, n + 1))
    num = math.prod(math.factorial(k) ** (n * ell // k) for k in range(1, n + 1))
    log_value = (math.log(num) - ell * math.log(count)) / ell
    return NlsRatio(n, count, math.exp(log_value), log_value, num >= count**ell)


# ---------------------------------------------------------------------------
# Chernoff


def chernoff_bound(mean: float, a: float) -> float:
    """exp(-a^2 / (2 E[Y])) bounding Pr[Y < E[Y] - a] for a sum of Bernoullis."""
    if a <= 0:
        raise PreconditionError("a must be positive")
    return math.exp(-a * a / (2 * mean))


def poisson_binomial_pmf(ps: Sequence) -> list[Fraction]:
    """Exact distribution of a sum of independent Bernoulli(p_i), p_i rational."""
    pmf = [Fraction(1)]
    for p in ps:
        p = Fraction(p)
        nxt = [Fraction(0)] * (len(pmf) + 1)
        for j, w in enumerate(pmf):
            nxt[j] += w * (1 - p)
            nxt[j + 1] += w * p
        pmf = nxt
    return pmf


# ---------------------------------------------------------------------------
# Monte Carlo reports


def _map(fn, items, threads: int | None):
    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


@dataclass(frozen=True, eq=False)
class TailReport:
    """Observed distribution of f_CE on sampled Latin squares.

    Observational only: the tail theorem holds past an unspecified n_0(c).
    """

    n: int
    c: float
    samples: int
    seed: int
    ce_size: int
    values: np.ndarray
    threshold: float
    tail_mass: float
    paper_bound: float
    mean: float
    expected_mean: Fraction
    std: float

    @property
    def distribution(self) -> dict[int, int]:
        vals, counts = np.unique(self.values, return_counts=True)
        return dict(zip(vals.tolist(), counts.tolist()))

    @property
    def mean_within_3_sigma(self) -> bool:
        se = self.std / math.sqrt(self.samples) if self.samples > 1 else 0.0
        return abs(self.mean - float(self.expected_mean)) <= 3 * se + 1e-12

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "c": self.c,
            "samples": self.samples,
            "seed": self.seed,
            "ce_size": self.ce_size,
            "threshold": self.threshold,
            "tail_mass": self.tail_mass,
            "paper_bound": self.paper_bound,
            "mean": self.mean,
            "expected_mean": str(self.expected_mean),
            "expected_mean_float": float(self.expected_mean),
            "std": self.std,
            "mean_within_3_sigma": self.mean_within_3_sigma,
            "distribution": {str(k): v for k, v in self.distribution.items()},
            "label": "observational; not a test of the tail theorem",
        }

    def csv_rows(self) -> list[dict]:
        return [{"sample": i, "f": int(v)} for i, v in enumerate(self.values.tolist())]


def tail_experiment(
    n: int,
    c: float,
    CE: TriSet,
    samples: int,
    seed: int | None = None,
    burn_in: int | None = None,
    threads: int | None = None,
) -> TailReport:
    """Sample squares (one spawned stream each) and record f_CE."""
    if samples <= 0:
        raise PreconditionError("samples must be positive")
    if CE.n != n:
        raise DimensionError("CE has the wrong order")
    if len(CE) < c * n**3:
        raise PreconditionError("|CE| < c n^3")
    seed = resolve_seed(seed)
    streams = spawn(seed, samples)
    squares = np.stack(_map(lambda r: sample_uniform_array(n, r, burn_in), streams, threads))
    values = f_stat_many(squares, CE).astype(np.int64)
    threshold = 1e-3 * c * c * n * n
    return TailReport(
        n=n,
        c=float(c),
        samples=samples,
        seed=seed,
        ce_size=len(CE),
        values=values,
        threshold=threshold,
        tail_mass=float(np.mean(values < threshold)),
        paper_bound=math.exp(-threshold),
        mean=float(values.mean()),
        expected_mean=Fraction(len(CE), n),
        std=float(values.std(ddof=1)) if samples > 1 else 0.0,
    )


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / trials
    den = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return (lo, hi)


D3_REFERENCE = 1 - 17 * math.exp(-3) / 2


def h1_nonvanishing_experiment(
    n: int,
    d: int,
    samples: int,
    seed: int | None = None,
    burn_in: int | None = None,
    threads: int | None = None,
) -> dict:
    """Frequency of nonzero reduced H^1 over random Y(n, d), with a Wilson 95% interval."""
    if samples <= 0:
        raise PreconditionError("samples must be positive")
    seed = resolve_seed(seed)
    streams = spawn(seed, samples)

    def one(rng):
        Y = build_Y_union([sample_uniform_array(n, rng, burn_in) for _ in range(d)])
        return cohomology_rank(Y, 1)

    ranks = _map(one, streams, threads)
    hits = sum(1 for r in ranks if r > 0)
    lo, hi = wilson_interval(hits, samples)
    return {
        "n": n,
        "d": d,
        "samples": samples,
        "seed": seed,
        "frequency": hits / samples,
        "wilson95": [lo, hi],
        "reference_line": D3_REFERENCE if d == 3 else None,
        "label": "observational; the reference line is an asymptotic lower bound",
        "rows": [{"sample": i, "h1_rank": int(r)} for i, r in enumerate(ranks)],
    }


# ---------------------------------------------------------------------------
# admissible random instances


def _row_sizes(n: int, total_min: int, rng) -> list[int]:
    """Row sizes <= n // 2 summing to at least ``total_min``, randomly thinned."""
    cap = n // 2
    if cap * n < total_min:
        raise PreconditionError(f"no E with l(E) <= n/2 has {total_min} pairs at n = {n}")
    sizes = [cap] * n
    slack = cap * n - total_min
    drop = int(rng.integers(0, slack + 1))
    for _ in range(drop):
        live = [i for i in range(n) if sizes[i] > 0]
        sizes[int(rng.choice(live))] -= 1
    return sizes


def random_prop42_system(n: int, k: int, gamma, rng) -> RestrictionSystem:
    """Random system meeting |E| >= gamma n^2, l(E) <= n/2 and |B_i| = k <= gamma n / 2."""
    g = rational(gamma)
    if k > g * n / 2:
        raise PreconditionError("k > gamma n / 2")
    return random_system(n, k, rng, row_sizes=_row_sizes(n, math.ceil(g * n * n), rng))


def random_prop43_instance(n: int, gamma, rng) -> tuple[list[PairSet], list[int]]:
    """Random pair sets E_1..E_n with l(E_i) <= n/2, large on a random I of size ceil(gamma n / 2)."""
    g = rational(gamma)
    size = prop43_index_size(n, g)
    if size == 0:
        raise PreconditionError("ceil(gamma n / 2) must be positive")
    I = sorted(int(i) for i in rng.choice(n, size=size, replace=False))
    need = math.ceil(g * n * n)
    Es = []
    for i in range(n):
        rows = _row_sizes(n, need, rng) if i in I else [int(rng.integers(0, n // 2 + 1)) for _ in range(n)]
        mask = np.zeros((n, n), dtype=bool)
        for r, a in enumerate(rows):
            mask[r, rng.choice(n, size=a, replace=False)] = True
        Es.append(PairSet(n, mask))
    return Es, I
