"""F_2 cochains on a :class:`~coblab.complexes.Complex2`.

A cochain of degree k is a Python ``int`` read as a bitset over the k-faces in
index order (bit i = face i). Degree -1 is the augmentation term F_2 with a
single bit. Bulk kernels use packed ``uint64`` rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .complexes import INDEX_SCHEMA_VERSION, Complex2
from .errors import CapacityError, DimensionError
from .rng import make_rng

EXACT_VERTEX_CAP = 24
GRAY_RANK_LIMIT = 16
HEURISTIC_STARTS = 64


# ---------------------------------------------------------------------------
# bit conversions


def int_to_bools(x: int, length: int) -> np.ndarray:
    if length == 0:
        return np.zeros(0, dtype=bool)
    raw = np.frombuffer(x.to_bytes((length + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:length].astype(bool)


def bools_to_int(bits: np.ndarray) -> int:
    bits = np.asarray(bits, dtype=bool)
    if bits.size == 0:
        return 0
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def words_for(length: int) -> int:
    return max(1, (length + 63) // 64)


def int_to_words(x: int, n_words: int) -> np.ndarray:
    return np.frombuffer(x.to_bytes(8 * n_words, "little"), dtype="<u8").astype(np.uint64)


def words_to_int(w: np.ndarray) -> int:
    return int.from_bytes(np.asarray(w, dtype="<u8").tobytes(), "little")


# ---------------------------------------------------------------------------
# cochains


@dataclass(frozen=True)
class Cochain:
    complex: Complex2
    degree: int
    bits: int = 0

    def __post_init__(self):
        if self.degree not in (-1, 0, 1, 2):
            raise DimensionError("degree must be -1, 0, 1 or 2")
        if self.bits < 0 or self.bits.bit_length() > self.length:
            raise DimensionError("cochain has bits beyond its face count")

    @property
    def length(self) -> int:
        return self.complex.face_count(self.degree)

    @classmethod
    def zero(cls, X: Complex2, k: int) -> "Cochain":
        return cls(X, k, 0)

    @classmethod
    def from_support(cls, X: Complex2, k: int, faces) -> "Cochain":
        bits = 0
        for f in faces:
            bits ^= 1 << int(f)
        return cls(X, k, bits)

    @classmethod
    def from_bools(cls, X: Complex2, k: int, values) -> "Cochain":
        values = np.asarray(values, dtype=bool)
        if values.shape != (X.face_count(k),):
            raise DimensionError("value vector has the wrong length")
        return cls(X, k, bools_to_int(values))

    @classmethod
    def ones(cls, X: Complex2, k: int) -> "Cochain":
        return cls(X, k, (1 << X.face_count(k)) - 1)

    @classmethod
    def random(cls, X: Complex2, k: int, rng=None, density: float = 0.5) -> "Cochain":
        rng = make_rng(rng)
        return cls.from_bools(X, k, rng.random(X.face_count(k)) < density)

    def support(self) -> list[int]:
        return np.flatnonzero(self.to_bools()).tolist()

    def to_bools(self) -> np.ndarray:
        return int_to_bools(self.bits, self.length)

    def __add__(self, other: "Cochain") -> "Cochain":
        if other.complex is not self.complex or other.degree != self.degree:
            raise DimensionError("cochains live on different complexes or degrees")
        return Cochain(self.complex, self.degree, self.bits ^ other.bits)

    __xor__ = __add__

    def __bool__(self) -> bool:
        return self.bits != 0

    def to_json(self) -> dict:
        return {
            "schema": INDEX_SCHEMA_VERSION,
            "degree": self.degree,
            "length": self.length,
            "hex": format(self.bits, "x"),
        }

    @classmethod
    def from_json(cls, X: Complex2, data: dict) -> "Cochain":
        if data.get("schema") != INDEX_SCHEMA_VERSION:
            raise DimensionError(f"unknown face-index schema {data.get('schema')!r}")
        c = cls(X, int(data["degree"]), int(data["hex"], 16))
        if c.length != data["length"]:
            raise DimensionError("cochain length does not match the complex")
        return c

    def __repr__(self) -> str:
        return f"Cochain(deg={self.degree}, |supp|={support_norm(self)}/{self.length})"


def support_norm(phi: Cochain) -> int:
    """||phi||: number of faces where phi is 1."""
    return phi.bits.bit_count()


def coboundary(phi: Cochain) -> Cochain:
    """d_k phi: on each (k+1)-face, the mod-2 sum of phi over its k-subfaces."""
    X, k = phi.complex, phi.degree
    if k >= 2:
        raise DimensionError("no faces above dimension 2")
    if k == -1:
        return Cochain.ones(X, 0) if phi.bits & 1 else Cochain.zero(X, 0)
    vals = phi.to_bools()
    if k == 0:
        e = X.edges
        out = vals[e[:, 0]] ^ vals[e[:, 1]]
    else:
        te = X.tri_edges
        out = vals[te[:, 0]] ^ vals[te[:, 1]] ^ vals[te[:, 2]]
    return Cochain.from_bools(X, k + 1, out)


def vertex_coboundaries(X: Complex2) -> list[int]:
    """d_0(1_v) for every vertex v, as bitsets over edges."""
    masks = [0] * X.n_vertices
    for idx, (u, v) in enumerate(X.edges.tolist()):
        masks[u] |= 1 << idx
        masks[v] |= 1 << idx
    return masks


# ---------------------------------------------------------------------------
# packed matrices


class GF2Matrix:
    """Dense matrix over F_2 with rows packed into ``uint64`` words."""

    def __init__(self, n_rows: int, n_cols: int, data: np.ndarray | None = None):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        W = words_for(n_cols)
        if data is None:
            data = np.zeros((self.n_rows, W), dtype=np.uint64)
        data = np.ascontiguousarray(data, dtype=np.uint64)
        if data.shape != (self.n_rows, W):
            raise DimensionError("packed data has the wrong shape")
        self.data = data

    @classmethod
    def from_dense(cls, dense) -> "GF2Matrix":
        dense = np.asarray(dense, dtype=bool)
        r, c = dense.shape
        m = cls(r, c)
        rows, cols = np.nonzero(dense)
        m._set(rows, cols)
        return m

    @classmethod
    def from_entries(cls, n_rows: int, n_cols: int, rows, cols) -> "GF2Matrix":
        m = cls(n_rows, n_cols)
        m._set(np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))
        return m

    def _set(self, rows: np.ndarray, cols: np.ndarray) -> None:
        bits = np.left_shift(np.uint64(1), (cols % 64).astype(np.uint64))
        np.bitwise_or.at(self.data, (rows, cols // 64), bits)

    def to_dense(self) -> np.ndarray:
        raw = self.data.astype("<u8").view(np.uint8).reshape(self.n_rows, -1)
        return np.unpackbits(raw, axis=1, bitorder="little")[:, : self.n_cols].astype(bool)

    def row_int(self, i: int) -> int:
        return words_to_int(self.data[i])

    def row_ints(self) -> list[int]:
        return [self.row_int(i) for i in range(self.n_rows)]

    def transpose(self) -> "GF2Matrix":
        return GF2Matrix.from_dense(self.to_dense().T)

    def rank(self) -> int:
        """Forward elimination on packed words, columns in increasing order."""
        if self.n_rows == 0 or self.n_cols == 0:
            return 0
        return int(_kernels.gf2_rank_packed(self.data.copy(), self.n_cols))

    def rank_reference(self) -> int:
        """Independent rank: insert rows into an xor basis keyed by top bit."""
        basis: dict[int, int] = {}
        for row in self.row_ints():
            while row:
                top = row.bit_length() - 1
                if top in basis:
                    row ^= basis[top]
                else:
                    basis[top] = row
                    break
        return len(basis)

    def __repr__(self) -> str:
        return f"GF2Matrix({self.n_rows}x{self.n_cols})"


def coboundary_matrix(X: Complex2, k: int) -> GF2Matrix:
    """Matrix of d_k: |X(k+1)| rows, |X(k)| columns."""
    if k == -1:
        return GF2Matrix.from_entries(X.n_vertices, 1, np.arange(X.n_vertices), np.zeros(X.n_vertices))
    if k == 0:
        e = X.edges
        rows = np.repeat(np.arange(len(e)), 2)
        return GF2Matrix.from_entries(len(e), X.n_vertices, rows, e.ravel())
    if k == 1:
        te = X.tri_edges
        rows = np.repeat(np.arange(len(te)), 3)
        return GF2Matrix.from_entries(len(te), X.n_edges, rows, te.ravel())
    raise DimensionError("k must be -1, 0 or 1")


def cohomology_rank(X: Complex2, k: int) -> int:
    """dim of reduced H^k(X; F_2) = dim ker d_k - rank d_{k-1}."""
    if k not in (0, 1):
        raise DimensionError("k must be 0 or 1")
    rank_k = coboundary_matrix(X, k).rank()
    rank_prev = coboundary_matrix(X, k - 1).rank()
    return X.face_count(k) - rank_k - rank_prev


# ---------------------------------------------------------------------------
# coset norms


def rref(vectors) -> list[tuple[int, int]]:
    """Fully reduced echelon basis of the span as ``(pivot_bit, vector)`` pairs.

    Each vector has a 1 at its own pivot and 0 at every other pivot.
    """
    basis: list[tuple[int, int]] = []
    for v in vectors:
        for p, b in basis:
            if v >> p & 1:
                v ^= b
        if v:
            p = v.bit_length() - 1
            basis = [(q, b ^ v) if b >> p & 1 else (q, b) for q, b in basis]
            basis.append((p, v))
    basis.sort()
    return basis


@lru_cache(maxsize=64)
def _b1_basis_cached(X: Complex2) -> tuple[tuple[int, int], ...]:
    return tuple(rref(vertex_coboundaries(X)))


def coboundary_basis(X: Complex2, k: int) -> list[tuple[int, int]]:
    """Reduced echelon basis of B^k(X) as ``(pivot, vector)`` pairs."""
    if k == 0:
        return [] if X.n_vertices == 0 else [(X.n_vertices - 1, (1 << X.n_vertices) - 1)]
    if k == 1:
        return list(_b1_basis_cached(X))
    raise DimensionError("k must be 0 or 1")


@dataclass(frozen=True)
class CosetNorm:
    value: int
    representative: Cochain
    exact: bool

    def __int__(self) -> int:
        return self.value


def coset_norm(phi: Cochain, heuristic: bool = False, method: str = "auto", rng=None) -> CosetNorm:
    """||[phi]||: least support over phi + B^k, with a minimising representative.

    Exact for k = 0 always and for k = 1 when the complex has at most 24
    vertices. Above the cap ``heuristic=True`` switches to steepest-descent
    vertex flips from 64 starts; the result is an upper bound flagged
    ``exact=False``. ``method`` picks the exact k = 1 route: ``"gray"``
    (exhaustive Gray-code sweep of B^1), ``"bnb"`` (branch and bound over 0-cochains)
    or ``"auto"``.
    """
    X, k = phi.complex, phi.degree
    if k == 0:
        V = X.n_vertices
        w = support_norm(phi)
        rep = phi if w <= V - w else phi + Cochain.ones(X, 0)
        return CosetNorm(min(w, V - w), rep, True)
    if k != 1:
        raise DimensionError("coset norms are defined here for k = 0, 1")
    if X.n_vertices > EXACT_VERTEX_CAP:
        if not heuristic:
            raise CapacityError(
                f"exact coset norm needs at most {EXACT_VERTEX_CAP} vertices (got {X.n_vertices})"
            )
        value, bits = _descent(X, phi.bits, make_rng(rng))
        return CosetNorm(value, Cochain(X, 1, bits), False)
    basis = coboundary_basis(X, 1)
    if method == "auto":
        method = "gray" if len(basis) <= GRAY_RANK_LIMIT else "bnb"
    if method == "gray":
        (value,), (bits,) = _sweep(X, [phi.bits], [b for _, b in basis])
    elif method == "bnb":
        value, bits = _bnb(X, phi.bits)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CosetNorm(value, Cochain(X, 1, bits), True)


def coset_norms(phis: list[Cochain]) -> list[int]:
    """Exact k = 1 coset norms of many cochains on one complex in a single sweep."""
    if not phis:
        return []
    X = phis[0].complex
    if X.n_vertices > EXACT_VERTEX_CAP:
        raise CapacityError("exact coset norm is capped at 24 vertices")
    basis = [b for _, b in coboundary_basis(X, 1)]
    if len(basis) > GRAY_RANK_LIMIT:
        return [coset_norm(p, method="bnb").value for p in phis]
    values, _ = _sweep(X, [p.bits for p in phis], basis)
    return values


def _sweep(X: Complex2, phis: list[int], basis: list[int]) -> tuple[list[int], list[int]]:
    W = words_for(X.n_edges)
    P = np.stack([int_to_words(p, W) for p in phis])
    Bm = np.stack([int_to_words(b, W) for b in basis]) if basis else np.zeros((0, W), np.uint64)
    best, arg = _kernels.coset_sweep(P, Bm)
    reps = []
    for p, g in zip(phis, arg.tolist()):
        shift = 0
        j = 0
        while g:
            if g & 1:
                shift ^= basis[j]
            g >>= 1
            j += 1
        reps.append(p ^ shift)
    return best.tolist(), reps


@lru_cache(maxsize=64)
def _csr(X: Complex2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    e = X.edges
    owners = np.concatenate([e[:, 0], e[:, 1]])
    nbr = np.concatenate([e[:, 1], e[:, 0]])
    eid = np.concatenate([np.arange(len(e)), np.arange(len(e))])
    order = np.argsort(owners, kind="stable")
    indptr = np.searchsorted(owners[order], np.arange(X.n_vertices + 1))
    return indptr.astype(np.int64), nbr[order].astype(np.int64), eid[order].astype(np.int64)


def _bnb(X: Complex2, bits: int) -> tuple[int, int]:
    indptr, nbr, eid = _csr(X)
    phi = int_to_bools(bits, X.n_edges).astype(np.uint8)
    ones = np.bincount(X.edges[phi.astype(bool)].ravel(), minlength=X.n_vertices)
    deg = np.diff(indptr)
    order = np.lexsort((-deg, -ones)).astype(np.int64)
    best_psi = np.zeros(X.n_vertices, dtype=np.uint8)
    start = int(phi.sum())
    best = _kernels.coset_bnb(indptr, nbr, eid, phi, order, start + 1, best_psi)
    psi = best_psi.astype(bool)
    e = X.edges
    rep = phi.astype(bool) ^ psi[e[:, 0]] ^ psi[e[:, 1]]
    return int(best), bools_to_int(rep)


def _descent(X: Complex2, bits: int, rng: np.random.Generator) -> tuple[int, int]:
    indptr, nbr, eid = _csr(X)
    e = X.edges
    deg = np.diff(indptr)
    phi = int_to_bools(bits, X.n_edges)
    best_val, best_rep = int(phi.sum()), phi
    for start in range(HEURISTIC_STARTS):
        psi = np.zeros(X.n_vertices, dtype=bool) if start == 0 else rng.random(X.n_vertices) < 0.5
        cur = phi ^ psi[e[:, 0]] ^ psi[e[:, 1]]
        ones = np.bincount(e[cur].ravel(), minlength=X.n_vertices)
        while True:
            delta = deg - 2 * ones
            v = int(np.argmin(delta))
            if delta[v] >= 0:
                break
            for p in range(indptr[v], indptr[v + 1]):
                idx, w = eid[p], nbr[p]
                cur[idx] = not cur[idx]
                step = 1 if cur[idx] else -1
                ones[v] += step
                ones[w] += step
        val = int(cur.sum())
        if val < best_val:
            best_val, best_rep = val, cur.copy()
    return best_val, bools_to_int(best_rep)


def is_coboundary(phi: Cochain) -> bool:
    """Membership in B^k by reduction against the echelon basis."""
    v = phi.bits
    for p, b in coboundary_basis(phi.complex, phi.degree):
        if v >> p & 1:
            v ^= b
    return v == 0
