"""Latin squares as legal tuples of permutations.

Indices are 0-based: row ``i`` of a square is the permutation ``j -> L[i][j]``.
A tuple of permutations is legal when no two of them agree anywhere, which is
the same as every column being a permutation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import CapacityError, DimensionError, InvariantError
from .rng import kernel_seed, make_rng

ENUMERATION_CAP = 5


@dataclass(frozen=True)
class Permutation:
    image: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.image) != list(range(len(self.image))):
            raise InvariantError(f"not a permutation of 0..{len(self.image) - 1}: {self.image}")

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i]

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, v in enumerate(self.image):
            inv[v] = i
        return Permutation(tuple(inv))


def _as_image(p) -> tuple[int, ...]:
    if isinstance(p, Permutation):
        return p.image
    return tuple(int(v) for v in p)


def is_legal(rows: Sequence[Permutation | Sequence[int]]) -> bool:
    images = [_as_image(r) for r in rows]
    if not images:
        return True
    n = len(images[0])
    for img in images:
        if len(img) != n:
            raise DimensionError("rows have different lengths")
    for col in range(n):
        seen = {img[col] for img in images}
        if len(seen) != len(images):
            return False
    return True


@dataclass(frozen=True)
class LatinSquare:
    rows: tuple[Permutation, ...]

    def __post_init__(self):
        if len(self.rows) == 0:
            raise DimensionError("a Latin square has order at least 1")
        if any(r.n != len(self.rows) for r in self.rows):
            raise DimensionError("row length must equal the number of rows")
        if not is_legal(self.rows):
            raise InvariantError("rows are not pairwise column-distinct")

    @property
    def n(self) -> int:
        return len(self.rows)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]]) -> "LatinSquare":
        return cls(tuple(Permutation(tuple(int(v) for v in r)) for r in rows))

    @classmethod
    def cyclic(cls, n: int) -> "LatinSquare":
        return cls.from_rows([[(i + j) % n for j in range(n)] for i in range(n)])

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.rows[i].image[j]

    def as_array(self) -> np.ndarray:
        return np.array([r.image for r in self.rows], dtype=np.int64)

    def key(self) -> tuple[int, ...]:
        """Row-major image; the lexicographic sort key."""
        return tuple(v for r in self.rows for v in r.image)

    def to_json(self) -> dict:
        return {"n": self.n, "rows": [list(r.image) for r in self.rows]}

    @classmethod
    def from_json(cls, data: dict) -> "LatinSquare":
        sq = cls.from_rows(data["rows"])
        if sq.n != data["n"]:
            raise DimensionError("declared order does not match rows")
        return sq


def _square_from_array(arr: np.ndarray) -> LatinSquare:
    return LatinSquare.from_rows(arr.tolist())


# ---------------------------------------------------------------------------
# enumeration


@lru_cache(maxsize=None)
def _enumeration_array(n: int) -> np.ndarray:
    perms = list(itertools.permutations(range(n)))
    # cell mask of a permutation: bit (col * n + symbol)
    masks = [sum(1 << (c * n + p[c]) for c in range(n)) for p in perms]
    out: list[tuple[int, ...]] = []
    chosen: list[int] = []

    def extend(cands: list[int]) -> None:
        if len(chosen) == n:
            out.append(tuple(chosen))
            return
        for q in cands:
            mq = masks[q]
            chosen.append(q)
            extend([r for r in cands if not masks[r] & mq])
            chosen.pop()

    extend(list(range(len(perms))))
    perm_arr = np.array(perms, dtype=np.int8).reshape(len(perms), n)
    idx = np.array(out, dtype=np.int64).reshape(len(out), n)
    arr = perm_arr[idx]
    arr.setflags(write=False)
    return arr


def enumerate_latin_array(n: int) -> np.ndarray:
    """All Latin squares of order ``n`` as an int8 array of shape (count, n, n)."""
    if n < 1:
        raise DimensionError("order must be positive")
    if n > ENUMERATION_CAP:
        raise CapacityError(f"enumeration is capped at order {ENUMERATION_CAP}")
    return _enumeration_array(n)


@lru_cache(maxsize=None)
def _enumeration_squares(n: int) -> tuple[LatinSquare, ...]:
    arr = enumerate_latin_array(n)
    pool = {p: Permutation(p) for p in itertools.permutations(range(n))}
    squares = []
    for sq in arr:
        rows = tuple(pool[tuple(int(v) for v in r)] for r in sq)
        obj = object.__new__(LatinSquare)
        object.__setattr__(obj, "rows", rows)
        squares.append(obj)
    return tuple(squares)


def enumerate_latin(n: int) -> list[LatinSquare]:
    """Every Latin square of order ``n <= 5``, sorted by row-major image."""
    enumerate_latin_array(n)  # validates n
    return list(_enumeration_squares(n))


def count_legal_tuples_bruteforce(n: int) -> int:
    """Independent oracle: filter all of S_n^n with :func:`is_legal`."""
    perms = list(itertools.permutations(range(n)))
    return sum(1 for rows in itertools.product(perms, repeat=n) if is_legal(rows))


# ---------------------------------------------------------------------------
# sampling


def default_burn_in(n: int) -> int:
    return 2 * n**3


def sample_uniform(n: int, rng=None, burn_in: int | None = None) -> LatinSquare:
    """Approximately uniform Latin square by a Jacobson–Matthews walk.

    Each call starts a fresh walk from the cyclic square, runs ``burn_in``
    moves (default ``2 n^3``) and keeps moving until the square is proper.
    """
    if n < 1:
        raise DimensionError("order must be positive")
    return _square_from_array(sample_uniform_array(n, rng, burn_in))


def sample_uniform_array(n: int, rng=None, burn_in: int | None = None) -> np.ndarray:
    """Like :func:`sample_uniform` but returns the (n, n) array without validation."""
    if n > 32767:
        raise CapacityError("sampler supports orders up to 32767")
    rng = make_rng(rng)
    steps = default_burn_in(n) if burn_in is None else int(burn_in)
    start = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    return _kernels.jm_walk(start.astype(np.int64), steps, kernel_seed(rng))


def is_latin_array(arr: np.ndarray) -> bool:
    n = arr.shape[0]
    full = np.arange(n)
    return (
        arr.shape == (n, n)
        and all(np.array_equal(np.sort(arr[i]), full) for i in range(n))
        and all(np.array_equal(np.sort(arr[:, j]), full) for j in range(n))
    )


# ---------------------------------------------------------------------------
# pair and triple sets


@dataclass(frozen=True, eq=False)
class PairSet:
    """Subset E of [n] x [n], viewed row by row as E = U {i} x A_i."""

    n: int
    mask: np.ndarray  # (n, n) bool, read-only

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (self.n, self.n):
            raise DimensionError("mask shape must be (n, n)")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "PairSet":
        m = np.zeros((n, n), dtype=bool)
        for i, j in pairs:
            m[i, j] = True
        return cls(n, m)

    @classmethod
    def full(cls, n: int) -> "PairSet":
        return cls(n, np.ones((n, n), dtype=bool))

    @classmethod
    def empty(cls, n: int) -> "PairSet":
        return cls(n, np.zeros((n, n), dtype=bool))

    def __len__(self) -> int:
        return int(self.mask.sum())

    def row_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(np.flatnonzero(self.mask[i]).tolist()) for i in range(self.n))

    def max_row(self) -> int:
        """l(E): the largest row set."""
        return int(self.mask.sum(axis=1).max()) if self.n else 0

    def pairs(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.mask))]

    def to_json(self) -> dict:
        return {"n": self.n, "pairs": [list(p) for p in self.pairs()]}


@dataclass(frozen=True, eq=False)
class TriSet:
    """Subset of [n]^3; (i, j, k) stands for the triangle [a_i, b_j, c_k]."""

    n: int
    mask: np.ndarray  # (n, n, n) bool, read-only

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (self.n,) * 3:
            raise DimensionError("mask shape must be (n, n, n)")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def from_triples(cls, n: int, triples: Iterable[tuple[int, int, int]]) -> "TriSet":
        m = np.zeros((n, n, n), dtype=bool)
        for t in triples:
            m[t] = True
        return cls(n, m)

    def __len__(self) -> int:
        return int(self.mask.sum())

    def triples(self) -> list[tuple[int, int, int]]:
        return [tuple(int(v) for v in t) for t in zip(*np.nonzero(self.mask))]

    def to_json(self) -> dict:
        return {"n": self.n, "triples": [list(t) for t in self.triples()]}


def random_pairset(n: int, size: int, rng) -> PairSet:
    rng = make_rng(rng)
    flat = np.zeros(n * n, dtype=bool)
    flat[rng.choice(n * n, size=size, replace=False)] = True
    return PairSet(n, flat.reshape(n, n))


def random_triset(n: int, size: int, rng) -> TriSet:
    rng = make_rng(rng)
    flat = np.zeros(n**3, dtype=bool)
    flat[rng.choice(n**3, size=size, replace=False)] = True
    return TriSet(n, flat.reshape(n, n, n))


# ---------------------------------------------------------------------------
# deviation statistics


def g_stat(pi: Permutation | Sequence[int], E: PairSet) -> int:
    """Number of i with (i, pi(i)) in E."""
    img = _as_image(pi)
    if len(img) != E.n:
        raise DimensionError("permutation and pair set differ in n")
    return int(E.mask[np.arange(E.n), np.asarray(img, dtype=np.int64)].sum()) if E.n else 0


def f_stat(L: LatinSquare | np.ndarray, CE: TriSet) -> int:
    """Number of the square's n^2 triangles (i, j, L[i][j]) lying in CE."""
    arr = L.as_array() if isinstance(L, LatinSquare) else np.asarray(L)
    if arr.shape[0] != CE.n:
        raise DimensionError("square and triangle set differ in n")
    n = CE.n
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return int(CE.mask[i, j, arr].sum())


def f_stat_many(squares: np.ndarray, CE: TriSet) -> np.ndarray:
    """Vectorised :func:`f_stat` over an array of shape (count, n, n)."""
    n = CE.n
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return CE.mask[i[None], j[None], squares.astype(np.int64)].sum(axis=(1, 2))
