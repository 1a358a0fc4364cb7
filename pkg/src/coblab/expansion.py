"""Coboundary expansion constants and the small-cochain inequalities.

Exact values are :class:`fractions.Fraction`. Everything heuristic says so in
its ``mode`` and ``label`` fields.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from . import _kernels
from .complexes import Complex2, Graph
from ._exact import rational
from .errors import CapacityError, DimensionError, PreconditionError
from .gf2 import (
    EXACT_VERTEX_CAP,
    Cochain,
    coboundary,
    coboundary_basis,
    coset_norm,
    int_to_words,
    support_norm,
)
from .rng import make_rng, resolve_seed

H0_EXACT_CAP = 30
H1_EDGE_CAP = 28
H1_SPAN_RANK_CAP = 20
FLOAT_TOL = 1e-9
_CHUNKS = 64


@dataclass(frozen=True, eq=False)
class ExpansionReport:
    """Value of h_k with its witness.

    In exact mode ``value`` is a Fraction and the witness is a minimal-support
    representative attaining it. ``value`` is None for an empty minimum.
    """

    quantity: str
    value: Fraction | float | None
    mode: str
    label: str
    witness: Cochain | None = None
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        v = self.value
        if isinstance(v, Fraction):
            value = {"numerator": v.numerator, "denominator": v.denominator, "float": float(v)}
        elif v is None:
            value = None
        else:
            value = {"float": float(v)}
        return {
            "quantity": self.quantity,
            "value": value,
            "mode": self.mode,
            "label": self.label,
            "witness": None if self.witness is None else self.witness.to_json(),
            "meta": self.meta,
        }


def ratio(phi: Cochain) -> Fraction | None:
    """||d phi|| / ||[phi]|| for a 1-cochain, exactly; None on B^1."""
    m = coset_norm(phi).value
    if m == 0:
        return None
    return Fraction(support_norm(coboundary(phi)), m)


# ---------------------------------------------------------------------------
# h0


def _graph_complex(G: Graph) -> Complex2:
    return Complex2(G.n_vertices, G.edges, np.zeros((0, 3), np.int64), name="graph")


def _components(G: Graph) -> list[list[int]]:
    adj = G.adjacency
    seen = [False] * G.n_vertices
    comps = []
    for s in range(G.n_vertices):
        if seen[s]:
            continue
        seen[s] = True
        comp, queue = [], deque([s])
        while queue:
            u = queue.popleft()
            comp.append(u)
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


def h0_graph(G: Graph, heuristic: bool = False) -> ExpansionReport:
    """Cheeger constant min over 0 < |S| <= |V|/2 of e(S, V-S) / |S|.

    Exact by Gray-code subset enumeration up to 30 vertices. Larger graphs
    need ``heuristic=True``, which scans BFS balls and reports an upper bound.
    """
    V = G.n_vertices
    if V < 2:
        raise PreconditionError("h0 needs at least two vertices")
    X = _graph_complex(G)
    meta = {"n_vertices": V, "n_edges": G.n_edges}
    comps = _components(G)
    if len(comps) > 1:
        S = min(comps, key=len)
        return ExpansionReport("h0", Fraction(0), "exact", "h0 (disconnected)", Cochain.from_support(X, 0, S), meta)
    if V <= H0_EXACT_CAP:
        adj = np.zeros(V, np.uint64)
        for u, v in G.edges.tolist():
            adj[u] |= np.uint64(1) << np.uint64(v)
            adj[v] |= np.uint64(1) << np.uint64(u)
        cut, size, mask = _kernels.cheeger_sweep(adj, G.degrees.astype(np.int64))
        bits = int(mask)
        if 2 * bits.bit_count() > V:
            bits ^= (1 << V) - 1
        return ExpansionReport("h0", Fraction(int(cut), int(size)), "exact", "h0", Cochain(X, 0, bits), meta)
    if not heuristic:
        raise CapacityError(f"exact h0 is capped at {H0_EXACT_CAP} vertices")
    best, best_set = None, None
    adj = G.adjacency
    for s in range(V):
        inside = np.zeros(V, bool)
        cut = 0
        order, queue, seen = [], deque([s]), {s}
        while queue and len(order) < V // 2:
            u = queue.popleft()
            order.append(u)
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        for k, u in enumerate(order, start=1):
            inside[u] = True
            cut += sum(-1 if inside[w] else 1 for w in adj[u])
            r = Fraction(cut, k)
            if best is None or r < best:
                best, best_set = r, order[:k]
    return ExpansionReport(
        "h0", best, "heuristic", "upper bound on h0 (BFS balls)", Cochain.from_support(X, 0, best_set), meta
    )


# ---------------------------------------------------------------------------
# h1


@dataclass(frozen=True)
class _Quotient:
    q_edge: np.ndarray  # edge bit of each quotient coordinate
    q_tri: np.ndarray  # its coboundary
    span: np.ndarray  # every element of B^1


def _quotient(X: Complex2) -> _Quotient:
    basis = coboundary_basis(X, 1)
    pivots = {p for p, _ in basis}
    free = [e for e in range(X.n_edges) if e not in pivots]
    tri_mask = np.zeros(X.n_edges, np.uint64)
    for t, row in enumerate(X.tri_edges.tolist()):
        for e in row:
            tri_mask[e] |= np.uint64(1) << np.uint64(t)
    q_edge = np.array([1 << e for e in free], dtype=np.uint64)
    q_tri = tri_mask[free] if free else np.zeros(0, np.uint64)
    span = np.zeros(1, np.uint64)
    for _, b in basis:
        span = np.concatenate([span, span ^ np.uint64(b)])
    return _Quotient(q_edge, np.ascontiguousarray(q_tri), span)


def h1_exact(X: Complex2, chunks: int = _CHUNKS) -> ExpansionReport:
    """Exact h1 by sweeping every coset of B^1 in C^1.

    Cosets are named by their unique representative vanishing on the pivot
    edges of a reduced basis of B^1; representatives are walked in Gray
    order with one-word updates of the cochain and its coboundary. The
    in-coset minimum is a scan of B^1. The sweep is cut into ``chunks``
    contiguous Gray ranges evaluated in parallel; the merge keeps the first
    minimiser in Gray order, so the result does not depend on threads.
    """
    if X.n_edges > H1_EDGE_CAP:
        raise CapacityError(f"exact h1 is capped at {H1_EDGE_CAP} edges (got {X.n_edges})")
    if X.n_triangles > 64:
        raise CapacityError("exact h1 needs at most 64 triangles")
    if len(coboundary_basis(X, 1)) > H1_SPAN_RANK_CAP:
        raise CapacityError(f"exact h1 scans B^1 and needs rank at most {H1_SPAN_RANK_CAP}")
    Q = _quotient(X)
    dim = len(Q.q_edge)
    meta = {
        "n_vertices": X.n_vertices,
        "n_edges": X.n_edges,
        "n_triangles": X.n_triangles,
        "quotient_dim": dim,
        "cosets": 1 << dim,
    }
    if dim == 0:
        return ExpansionReport("h1", None, "exact", "h1 (every 1-cochain is a coboundary)", None, meta)
    total = 1 << dim
    chunks = max(1, min(chunks, total))
    bounds = np.array([total * c // chunks for c in range(chunks + 1)], dtype=np.int64)
    out = _kernels.h1_sweep(Q.q_edge, Q.q_tri, Q.span, bounds)
    best = None
    for a, m, i in out.tolist():
        if m == 0:
            continue
        r = Fraction(a, m)
        if best is None or r < best[0]:
            best = (r, i)
    value, index = best
    gray = index ^ (index >> 1)
    rep = 0
    for j in range(dim):
        if gray >> j & 1:
            rep |= int(Q.q_edge[j])
    shifts = [rep ^ int(s) for s in Q.span]
    first = min(range(len(shifts)), key=lambda t: (shifts[t].bit_count(), t))
    witness = Cochain(X, 1, shifts[first])
    return ExpansionReport("h1", value, "exact", "h1", witness, meta)


def _pack(bools: np.ndarray) -> np.ndarray:
    """(S, L) bool rows to (S, W) little-endian uint64 words."""
    S, L = bools.shape
    W = max(1, (L + 63) // 64)
    padded = np.zeros((S, W * 64), dtype=bool)
    padded[:, :L] = bools
    return np.packbits(padded, axis=1, bitorder="little").view("<u8").astype(np.uint64)


def h1_lower_estimate(X: Complex2, samples: int, rng=None, batch: int = 4096) -> ExpansionReport:
    """Least observed ``||d1 phi|| / ||[phi]||`` over random 1-cochains.

    A minimum over a sample can only exceed h1, so the value is an upper bound
    on h1. Each sample draws its own density in (0, 1). Coset norms are exact
    up to 24 vertices and steepest-descent estimates beyond, in which case the
    estimate may also undershoot; the label records which.
    """
    seed = resolve_seed(rng) if rng is None or isinstance(rng, (int, np.integer)) else None
    gen = make_rng(seed if seed is not None else rng)
    exact_norms = X.n_vertices <= EXACT_VERTEX_CAP
    label = "upper bound on h1 (min observed ratio)"
    if not exact_norms:
        label += "; heuristic coset norms"
    meta = {
        "samples": int(samples),
        "seed": seed,
        "n_vertices": X.n_vertices,
        "coset_norms": "exact" if exact_norms else "heuristic",
    }
    best, best_bits, seen = None, None, 0
    te = X.tri_edges
    basis = [b for _, b in coboundary_basis(X, 1)]
    left = int(samples)
    while left > 0:
        S = min(batch, left)
        left -= S
        dens = gen.random(S)[:, None]
        phis = gen.random((S, X.n_edges)) < dens
        dnorm = (phis[:, te[:, 0]] ^ phis[:, te[:, 1]] ^ phis[:, te[:, 2]]).sum(axis=1)
        if exact_norms and len(basis) <= 16:
            words = _pack(phis)
            W = words.shape[1]
            Bm = np.stack([int_to_words(b, W) for b in basis]) if basis else np.zeros((0, W), np.uint64)
            norms, _ = _kernels.coset_sweep(words, Bm)
            norms = norms.tolist()
        else:
            norms = []
            for row in phis:
                bits = int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")
                norms.append(coset_norm(Cochain(X, 1, bits), heuristic=True, rng=gen).value)
        for s in range(S):
            m = norms[s]
            if m == 0:
                continue
            seen += 1
            r = Fraction(int(dnorm[s]), int(m))
            if best is None or r < best:
                best = r
                best_bits = int.from_bytes(np.packbits(phis[s], bitorder="little").tobytes(), "little")
    meta["non_coboundary_samples"] = seen
    if best is None:
        return ExpansionReport("h1", None, "heuristic", label + "; empty sample", None, meta)
    witness = coset_norm(Cochain(X, 1, best_bits), heuristic=not exact_norms, rng=gen).representative
    return ExpansionReport("h1", best, "heuristic", label, witness, meta)


# ---------------------------------------------------------------------------
# the small-cochain bound


def _icbrt(x: int) -> int | None:
    if x < 0:
        return None
    r = round(x ** (1.0 / 3.0)) if x < 2**900 else 1 << (x.bit_length() // 3)
    while r**3 > x:
        r -= 1
    while (r + 1) ** 3 <= x:
        r += 1
    return r if r**3 == x else None


def rational_cbrt(c) -> Fraction | None:
    """Exact cube root of a rational when it is rational, else None."""
    if not isinstance(c, Rational):
        return None
    c = Fraction(c)
    p, q = _icbrt(c.numerator), _icbrt(c.denominator)
    return Fraction(p, q) if p is not None and q is not None else None


@dataclass(frozen=True)
class SmallCochainBound:
    """(1 - c^(1/3)) mu_tilde / 2 - d / 3, exact when every input is rational."""

    c: Fraction | float
    mu_tilde: Fraction | float
    d: Fraction | float
    bound: Fraction | float
    exact: bool
    tolerance: float

    @property
    def vacuous(self) -> bool:
        return self.bound <= 0

    def to_json(self) -> dict:
        return {
            "c": str(self.c),
            "mu_tilde": str(self.mu_tilde),
            "d": str(self.d),
            "bound": str(self.bound),
            "bound_float": float(self.bound),
            "exact": self.exact,
            "tolerance": self.tolerance,
            "vacuous": self.vacuous,
        }


def small_cochain_bound(c, mu_tilde, d) -> SmallCochainBound:
    if not 0 < c < 1:
        raise PreconditionError("c must lie in (0, 1)")
    root = rational_cbrt(c)
    if root is not None and isinstance(mu_tilde, Rational) and isinstance(d, Rational):
        c, mu_tilde, d = Fraction(c), Fraction(mu_tilde), Fraction(d)
        bound = (1 - root) * mu_tilde / 2 - d / 3
        return SmallCochainBound(c, mu_tilde, d, bound, True, 0.0)
    bound = (1 - float(c) ** (1.0 / 3.0)) * float(mu_tilde) / 2 - float(d) / 3
    return SmallCochainBound(float(c), float(mu_tilde), float(d), bound, False, FLOAT_TOL)


@dataclass(frozen=True)
class Prop31Row:
    status: str  # skipped | rejected | vacuous | pass | fail
    coboundary_norm: int
    coset_norm: int

    @property
    def ok(self) -> bool:
        return self.status != "fail"


@dataclass(frozen=True)
class Prop31Report:
    n: int
    c: float | Fraction
    bound: SmallCochainBound
    rows: tuple[Prop31Row, ...]

    def counts(self) -> dict[str, int]:
        out = {k: 0 for k in ("skipped", "rejected", "vacuous", "pass", "fail")}
        for r in self.rows:
            out[r.status] += 1
        return out

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "c": str(self.c),
            "bound": self.bound.to_json(),
            "counts": self.counts(),
            "rows": [
                {"status": r.status, "d1_norm": r.coboundary_norm, "coset_norm": r.coset_norm} for r in self.rows
            ],
        }


def tripartite_order(Y: Complex2) -> int:
    """n for a subcomplex of T_n with the full 1-skeleton; raises otherwise."""
    meta = Y.tripartite
    if meta is None or Y.n_edges != 3 * meta.n * meta.n:
        raise PreconditionError("expected a subcomplex of T_n with complete 1-skeleton")
    return meta.n


def verify_prop31(Y: Complex2, c, phis, mu_tilde=None, d=None) -> Prop31Report:
    """Check ||d1 phi|| >= bound * ||[phi]|| for each phi with ||[phi]|| <= c n^2.

    ``mu_tilde`` defaults to the least link spectral gap and ``d`` to the
    largest edge degree. Coset norms are exact, so the complex must have at
    most 24 vertices.
    """
    from .spectral import min_link_gap

    n = tripartite_order(Y)
    if mu_tilde is None:
        mu_tilde, _ = min_link_gap(Y)
    if d is None:
        d = int(Y.edge_degrees.max()) if Y.n_edges else 0
    bound = small_cochain_bound(c, mu_tilde, d)
    cap = rational(c) * n * n
    rows = []
    for phi in phis:
        m = coset_norm(phi).value
        a = support_norm(coboundary(phi))
        if m == 0:
            status = "skipped"
        elif m > cap:
            status = "rejected"
        elif bound.vacuous:
            status = "vacuous"
        else:
            rhs = bound.bound * m
            ok = a >= rhs if bound.exact else a >= float(rhs) - FLOAT_TOL * max(1.0, abs(float(rhs)))
            status = "pass" if ok else "fail"
        rows.append(Prop31Row(status, a, m))
    return Prop31Report(n, c, bound, tuple(rows))


# ---------------------------------------------------------------------------
# the degree-sum claim


@dataclass(frozen=True)
class Claim32Result:
    status: str  # pass | fail | rejected
    lhs: int
    rhs: float
    m: int
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"


def verify_claim32(G: Graph, c, n: int) -> Claim32Result:
    """Check sum_v s_v^2 <= (1 + 3 c^(1/3)) m n.

    Preconditions: 3n vertices, m <= c n^2 edges and every degree at most n.
    The comparison is exact for rational c: it cubes both sides of
    ``(sum s_v^2 - m n) / (3 m n) <= c^(1/3)``.
    """
    c_exact = rational(c)
    s = G.degrees.astype(np.int64)
    m = G.n_edges
    lhs = int((s * s).sum())
    rhs = (1 + 3 * float(c) ** (1.0 / 3.0)) * m * n
    if not 0 < c < 1:
        return Claim32Result("rejected", lhs, rhs, m, "c must lie in (0, 1)")
    if G.n_vertices != 3 * n:
        return Claim32Result("rejected", lhs, rhs, m, "graph must have 3n vertices")
    if m > c_exact * n * n:
        return Claim32Result("rejected", lhs, rhs, m, "m exceeds c n^2")
    if len(s) and s.max() > n:
        return Claim32Result("rejected", lhs, rhs, m, "a degree exceeds n")
    if m == 0:
        return Claim32Result("pass" if lhs == 0 else "fail", lhs, rhs, m)
    excess = lhs - m * n
    ok = excess <= 0 or Fraction(excess, 3 * m * n) ** 3 <= c_exact
    return Claim32Result("pass" if ok else "fail", lhs, rhs, m)


def random_claim32_instance(n: int, c, rng) -> Graph:
    """Random subgraph of K_{n,n,n} meeting the claim's preconditions.

    Edges are drawn inside a random vertex subset so that degrees pile up
    near the cap n.
    """
    rng = make_rng(rng)
    cap = int(math.floor(rational(c) * n * n))
    target = int(rng.integers(0, cap + 1))
    pool = rng.choice(3 * n, size=int(rng.integers(2, 3 * n + 1)), replace=False)
    deg = np.zeros(3 * n, np.int64)
    edges: set[tuple[int, int]] = set()
    tries = 0
    while len(edges) < target and tries < 20 * (target + 1):
        tries += 1
        u, v = (int(x) for x in rng.choice(pool, 2, replace=False))
        if u // n == v // n or deg[u] >= n or deg[v] >= n:
            continue
        e = (min(u, v), max(u, v))
        if e in edges:
            continue
        edges.add(e)
        deg[u] += 1
        deg[v] += 1
    return Graph.from_edges(3 * n, sorted(edges))


# ---------------------------------------------------------------------------
# corollary evaluators and the constant chase


def corollary_small_bound(d: float, c: float) -> float:
    """(d - 3 sqrt d)(1 - c^(1/3)) / 2 - d / 3."""
    return (d - 3 * math.sqrt(d)) * (1 - c ** (1.0 / 3.0)) / 2 - d / 3


def corollary_large_log_failure(n: int, d: float, c: float) -> float:
    """log of 2^(3n^2) exp(-4e-5 d c^2 n^2), the large-cochain failure bound."""
    return n * n * (3 * math.log(2) - 4e-5 * d * c * c)


def corollary_large_ratio(c: float) -> float:
    return 1e-5 * c * c


def constants_chase(c: float = 1e-3, d: float = 1e11, d_small: int = 201) -> dict:
    """The arithmetic that fixes d and epsilon.

    The small-cochain bound f(d) = a d - b sqrt(d) with a = (1 - c^(1/3))/2 - 1/3
    and b = 3 (1 - c^(1/3))/2 grows for d > (b / 2a)^2, so checking f at one
    point past that turning point checks every larger d.
    """
    cr = c ** (1.0 / 3.0)
    a = (1 - cr) / 2 - 1 / 3
    b = 3 * (1 - cr) / 2
    turning = (b / (2 * a)) ** 2 if a > 0 else math.inf
    # smallest integer d with f(d) > 1: f(d) = 1 at sqrt(d) = (b + sqrt(b^2 + 4a)) / (2a)
    root = (b + math.sqrt(b * b + 4 * a)) / (2 * a) if a > 0 else math.inf
    threshold = math.floor(root * root) + 1 if a > 0 else None
    while threshold is not None and corollary_small_bound(threshold - 1, c) > 1:
        threshold -= 1
    while threshold is not None and corollary_small_bound(threshold, c) <= 1:
        threshold += 1
    f_small = corollary_small_bound(d_small, c)
    exponent = 4e-5 * d * c * c
    return {
        "c": c,
        "c_cube_root": cr,
        "small_bound_at": {"d": d_small, "value": f_small, "exceeds_one": f_small > 1},
        "small_bound_increasing_beyond": turning,
        "all_d_above_200_exceed_one": f_small > 1 and turning < d_small,
        "first_integer_d_exceeding_one": threshold,
        "d": d,
        "small_bound_at_d": corollary_small_bound(d, c),
        "large_exponent": exponent,
        "large_check": {"lhs_2_cubed": 8.0, "rhs_exp": math.exp(exponent), "holds": 3 * math.log(2) < exponent},
        "log_failure_per_n2": 3 * math.log(2) - exponent,
        "epsilon": corollary_large_ratio(c),
        "expander_epsilon": min(corollary_large_ratio(c), 1.0),
    }
