"""Two-dimensional simplicial complexes and their vertex links.

Faces are stored as integer arrays with vertices in ascending order. Generic
complexes list edges and triangles lexicographically. Subcomplexes of the
complete 3-partite complex T_n use the frozen canonical indexing instead:

    a_i -> i,  b_j -> n + j,  c_k -> 2n + k
    ab(i, j) -> i*n + j,  ac(i, k) -> n^2 + i*n + k,  bc(j, k) -> 2n^2 + j*n + k
    triangle (i, j, k) -> i*n^2 + j*n + k   (subcomplexes keep the sorted ranks)
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvariantError
from .latin import LatinSquare
from .rng import make_rng

INDEX_SCHEMA_VERSION = "coblab-face-index/1"


def _frozen(a: np.ndarray, dtype=np.int64) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TripartiteMeta:
    n: int

    def part(self, v: int) -> str:
        return "ABC"[v // self.n]

    def label(self, v: int) -> str:
        return f"{'abc'[v // self.n]}{v % self.n + 1}"

    def edge_index(self, u: int, v: int) -> int:
        n = self.n
        u, v = min(u, v), max(u, v)
        pu, pv = u // n, v // n
        if pu == pv:
            raise KeyError("edge inside one part")
        block = {(0, 1): 0, (0, 2): 1, (1, 2): 2}[(pu, pv)]
        return block * n * n + (u % n) * n + (v % n)

    def triangle_index(self, i: int, j: int, k: int) -> int:
        return i * self.n * self.n + j * self.n + k


class Complex2:
    """A 2-complex on vertices ``0..n_vertices-1``; immutable after construction."""

    def __init__(
        self,
        n_vertices: int,
        edges,
        triangles,
        *,
        tripartite: TripartiteMeta | None = None,
        name: str = "",
    ):
        self.n_vertices = int(n_vertices)
        self.edges = _frozen(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
        self.triangles = _frozen(np.asarray(triangles, dtype=np.int64).reshape(-1, 3))
        self.tripartite = tripartite
        self.name = name
        self.audit()

    # -- sizes ---------------------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def face_count(self, k: int) -> int:
        return {-1: 1, 0: self.n_vertices, 1: self.n_edges, 2: self.n_triangles}[k]

    # -- indexing ------------------------------------------------------------

    @cached_property
    def _edge_keys(self) -> tuple[np.ndarray, np.ndarray]:
        keys = self.edges[:, 0] * self.n_vertices + self.edges[:, 1]
        order = np.argsort(keys, kind="stable")
        return keys[order], order

    def edge_indices(self, u, v) -> np.ndarray:
        """Vectorised edge lookup; ``u < v`` elementwise. Raises on a missing edge."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        if self.tripartite is not None:
            n = self.tripartite.n
            pu, pv = u // n, v // n
            block = pu + pv - 1  # (0,1)->0, (0,2)->1, (1,2)->2
            idx = block * n * n + (u % n) * n + (v % n)
            if np.any(pu == pv):
                raise InvariantError("edge inside one part of a tripartite complex")
            return idx
        sorted_keys, order = self._edge_keys
        keys = u * self.n_vertices + v
        pos = np.searchsorted(sorted_keys, keys)
        pos_c = np.minimum(pos, len(sorted_keys) - 1)
        if len(sorted_keys) == 0 or np.any(sorted_keys[pos_c] != keys):
            raise InvariantError("face refers to a missing edge")
        return order[pos_c]

    def edge_index(self, u: int, v: int) -> int:
        u, v = min(u, v), max(u, v)
        return int(self.edge_indices(np.array([u]), np.array([v]))[0])

    @cached_property
    def tri_edges(self) -> np.ndarray:
        """(T, 3) edge indices of each triangle: v0v1, v0v2, v1v2."""
        t = self.triangles
        if len(t) == 0:
            return _frozen(np.zeros((0, 3)))
        cols = [self.edge_indices(t[:, a], t[:, b]) for a, b in ((0, 1), (0, 2), (1, 2))]
        return _frozen(np.stack(cols, axis=1))

    @cached_property
    def triangle_t_index(self) -> np.ndarray | None:
        if self.tripartite is None:
            return None
        n = self.tripartite.n
        t = self.triangles
        return _frozen(t[:, 0] * n * n + (t[:, 1] - n) * n + (t[:, 2] - 2 * n))

    def audit(self) -> None:
        """Check ascending faces, no duplicates and downward closure."""
        V = self.n_vertices
        e, t = self.edges, self.triangles
        if len(e) and (e.min() < 0 or e.max() >= V or np.any(e[:, 0] >= e[:, 1])):
            raise InvariantError("edges must be ascending vertex pairs in range")
        if len(t) and (t.min() < 0 or t.max() >= V or np.any(t[:, 0] >= t[:, 1]) or np.any(t[:, 1] >= t[:, 2])):
            raise InvariantError("triangles must be ascending vertex triples in range")
        if len(np.unique(e[:, 0] * V + e[:, 1])) != len(e):
            raise InvariantError("duplicate edge")
        if len(t):
            keys = (t[:, 0] * V + t[:, 1]) * V + t[:, 2]
            if len(np.unique(keys)) != len(t):
                raise InvariantError("duplicate triangle")
        if self.tripartite is not None:
            n = self.tripartite.n
            if V != 3 * n:
                raise InvariantError("tripartite complex needs 3n vertices")
            if len(e):
                idx = self.edge_indices(e[:, 0], e[:, 1])
                if not np.array_equal(idx, np.arange(len(e))):
                    raise InvariantError("edges are not in canonical tripartite order")
            if len(t):
                if np.any(t[:, 0] >= n) or np.any((t[:, 1] < n) | (t[:, 1] >= 2 * n)) or np.any(t[:, 2] < 2 * n):
                    raise InvariantError("triangle does not meet each part once")
                ti = self.triangle_t_index
                if np.any(np.diff(ti) <= 0):
                    raise InvariantError("triangles are not sorted by canonical rank")
        self.tri_edges  # raises if some edge of a triangle is missing

    # -- degrees -------------------------------------------------------------

    @cached_property
    def edge_degrees(self) -> np.ndarray:
        return _frozen(np.bincount(self.tri_edges.ravel(), minlength=self.n_edges))

    @cached_property
    def vertex_neighbours(self) -> list[np.ndarray]:
        e = self.edges
        owners = np.concatenate([e[:, 0], e[:, 1]])
        others = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((others, owners))
        owners, others = owners[order], others[order]
        bounds = np.searchsorted(owners, np.arange(self.n_vertices + 1))
        return [others[bounds[v] : bounds[v + 1]] for v in range(self.n_vertices)]

    def label(self, v: int) -> str:
        if self.tripartite is not None:
            return self.tripartite.label(v)
        return str(v + 1)

    def trianglesets(self) -> set[tuple[int, int, int]]:
        return {tuple(int(x) for x in r) for r in self.triangles}

    def to_json(self) -> dict:
        out = {
            "schema": INDEX_SCHEMA_VERSION,
            "name": self.name,
            "n_vertices": self.n_vertices,
            "tripartite_n": None if self.tripartite is None else self.tripartite.n,
            "edges": self.edges.tolist(),
            "triangles": self.triangles.tolist(),
        }
        if self.tripartite is not None:
            out["triangle_rank_to_t_index"] = self.triangle_t_index.tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Complex2":
        tp = data.get("tripartite_n")
        return cls(
            data["n_vertices"],
            np.array(data["edges"], dtype=np.int64).reshape(-1, 2),
            np.array(data["triangles"], dtype=np.int64).reshape(-1, 3),
            tripartite=None if tp is None else TripartiteMeta(tp),
            name=data.get("name", ""),
        )

    def __repr__(self) -> str:
        return (
            f"Complex2({self.name or 'anon'}: {self.n_vertices} vertices, "
            f"{self.n_edges} edges, {self.n_triangles} triangles)"
        )


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on ``0..n_vertices-1``.

    ``labels`` maps local indices to vertex ids of an ambient complex, when the
    graph is a link.
    """

    n_vertices: int
    edges: np.ndarray
    labels: tuple[int, ...] | None = None

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(e):
            e = np.sort(e, axis=1)
            if np.any(e[:, 0] == e[:, 1]):
                raise InvariantError("graph has a loop")
            if e.min() < 0 or e.max() >= self.n_vertices:
                raise InvariantError("edge endpoint out of range")
            e = np.unique(e, axis=0)
        object.__setattr__(self, "edges", _frozen(e))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, np.array(list(combinations(range(n), 2)), dtype=np.int64).reshape(-1, 2))

    @classmethod
    def complete_bipartite(cls, n: int, m: int) -> "Graph":
        u, v = np.meshgrid(np.arange(n), n + np.arange(m), indexing="ij")
        return cls(n + m, np.stack([u.ravel(), v.ravel()], axis=1))

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[tuple[int, int]]) -> "Graph":
        return cls(n, np.array(list(edges), dtype=np.int64).reshape(-1, 2))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)

    @cached_property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v in self.edges.tolist():
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def components(self) -> int:
        """Number of connected components (union–find)."""
        parent = list(range(self.n_vertices))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        count = self.n_vertices
        for u, v in self.edges.tolist():
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                count -= 1
        return count

    def is_connected(self) -> bool:
        return self.n_vertices > 0 and self.components() == 1

    def cut_size(self, S) -> int:
        inside = np.zeros(self.n_vertices, dtype=bool)
        inside[list(S)] = True
        return int(np.sum(inside[self.edges[:, 0]] != inside[self.edges[:, 1]]))


# ---------------------------------------------------------------------------
# constructors


def build_T(n: int) -> Complex2:
    """The complete 3-partite complex T_n = V_1 * V_2 * V_3."""
    if n < 1:
        raise DimensionError("part size must be positive")
    return _tripartite(n, np.arange(n**3), name=f"T_{n}")


def _tripartite(n: int, t_index: np.ndarray, name: str) -> Complex2:
    r = np.arange(n)
    ii, jj = np.meshgrid(r, r, indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    edges = np.concatenate(
        [
            np.stack([ii, n + jj], axis=1),
            np.stack([ii, 2 * n + jj], axis=1),
            np.stack([n + ii, 2 * n + jj], axis=1),
        ]
    )
    t = np.asarray(t_index, dtype=np.int64)
    tris = np.stack([t // (n * n), n + (t // n) % n, 2 * n + t % n], axis=1)
    return Complex2(3 * n, edges, tris, tripartite=TripartiteMeta(n), name=name)


def _square_t_index(arr: np.ndarray) -> np.ndarray:
    n = arr.shape[0]
    r = np.arange(n)
    return (r[:, None] * n * n + r[None, :] * n + np.asarray(arr, dtype=np.int64)).ravel()


def build_Y(L: LatinSquare) -> Complex2:
    """T_n's 1-skeleton plus the triangles [a_i, b_j, c_{L[i][j]}]."""
    if not isinstance(L, LatinSquare):
        L = LatinSquare.from_rows(L)
    return _tripartite(L.n, _square_t_index(L.as_array()), name=f"Y(L), n={L.n}")


def build_Y_union(Ls: Sequence[LatinSquare | np.ndarray]) -> Complex2:
    """Union of the triangle sets of Y(L_1), ..., Y(L_d); duplicates merged."""
    if not Ls:
        raise DimensionError("need at least one Latin square")
    arrs = [L.as_array() if isinstance(L, LatinSquare) else np.asarray(L) for L in Ls]
    n = arrs[0].shape[0]
    if any(a.shape != (n, n) for a in arrs):
        raise DimensionError("Latin squares of mixed order")
    t = np.unique(np.concatenate([_square_t_index(a) for a in arrs]))
    return _tripartite(n, t, name=f"Y(L^{len(arrs)}), n={n}")


def build_T_subcomplex(n: int, t_index) -> Complex2:
    """T_n's 1-skeleton with an arbitrary set of tripartite triangles."""
    return _tripartite(n, np.unique(np.asarray(t_index, dtype=np.int64)), name=f"sub T_{n}")


def build_simplex_skeleton(n: int, k: int) -> Complex2:
    """Full k-skeleton (k = 1 or 2) of the simplex on n vertices."""
    if k not in (1, 2):
        raise DimensionError("only k = 1, 2 are supported")
    if n < k + 1:
        raise DimensionError("need n >= k + 1 vertices")
    edges = list(combinations(range(n), 2))
    tris = list(combinations(range(n), 3)) if k == 2 else []
    return Complex2(n, edges, np.array(tris, dtype=np.int64).reshape(-1, 3), name=f"Delta_{n}^({k})")


def build_Y2np(n: int, p: float, rng=None) -> Complex2:
    """Full 1-skeleton of the n-simplex plus each triangle independently w.p. p."""
    if not 0.0 <= p <= 1.0:
        raise DimensionError("p must lie in [0, 1]")
    rng = make_rng(rng)
    tris = np.array(list(combinations(range(n), 3)), dtype=np.int64).reshape(-1, 3)
    keep = rng.random(len(tris)) < p
    return Complex2(n, list(combinations(range(n), 2)), tris[keep], name=f"Y_2({n},{p})")


# ---------------------------------------------------------------------------
# links and degrees


def _link_from_pairs(X: Complex2, v: int, pairs: np.ndarray) -> Graph:
    verts = X.vertex_neighbours[v]
    if len(pairs):
        local = np.searchsorted(verts, pairs)
    else:
        local = np.zeros((0, 2), dtype=np.int64)
    return Graph(len(verts), local, labels=tuple(int(u) for u in verts))


def link(X: Complex2, v: int) -> Graph:
    """lk(X, v): the graph on the neighbours of v with edges uw for uvw in X(2)."""
    if not 0 <= v < X.n_vertices:
        raise KeyError(f"unknown vertex {v}")
    t = X.triangles
    rows = t[np.any(t == v, axis=1)]
    pairs = rows[rows != v].reshape(-1, 2)
    return _link_from_pairs(X, v, pairs)


def all_links(X: Complex2) -> list[Graph]:
    """Links of every vertex, computed in one pass over the triangles."""
    t = X.triangles
    owners = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
    pairs = np.concatenate([t[:, [1, 2]], t[:, [0, 2]], t[:, [0, 1]]])
    order = np.argsort(owners, kind="stable")
    owners, pairs = owners[order], pairs[order]
    bounds = np.searchsorted(owners, np.arange(X.n_vertices + 1))
    return [_link_from_pairs(X, v, pairs[bounds[v] : bounds[v + 1]]) for v in range(X.n_vertices)]


def edge_degree_max(X: Complex2) -> tuple[int, dict[int, int]]:
    """D_1(X) and the histogram {degree: number of edges}."""
    deg = X.edge_degrees
    hist = dict(sorted(Counter(deg.tolist()).items()))
    return (int(deg.max()) if len(deg) else 0), hist
