"""Graph Laplacians, spectral gaps and the Alon–Milman/Tanner cut bound.

The eigensolver is self-contained: Householder reduction to tridiagonal form,
then either implicit-shift QL (all eigenvalues) or Sturm-sequence bisection
(one eigenvalue). The two back ends are independent of each other and are
cross-checked in the test suite.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import dsymv, dsyr2

from . import _kernels
from .complexes import Complex2, Graph, all_links, build_Y_union
from .errors import DimensionError, PreconditionError
from .latin import sample_uniform_array
from .rng import resolve_seed, spawn

EIG_TOL = 1e-9
DENSE_CAP = 5000


def laplacian(G: Graph) -> np.ndarray:
    L = np.zeros((G.n_vertices, G.n_vertices))
    u, v = G.edges[:, 0], G.edges[:, 1]
    L[u, v] = -1.0
    L[v, u] = -1.0
    L[np.diag_indices(G.n_vertices)] = G.degrees
    return L


def tridiagonalize(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder similarity reduction of a symmetric matrix.

    Only the lower triangle is read and updated (BLAS ``dsymv``/``dsyr2``).
    Returns ``(diag, off)`` with ``off[i]`` the (i, i-1) entry; ``off[0] = 0``.
    """
    A = np.array(A, dtype=float, order="F")
    n = A.shape[0]
    if A.ndim != 2 or A.shape != (n, n):
        raise DimensionError("matrix must be square")
    off = np.zeros(n)
    for k in range(n - 2):
        x = A[k + 1 :, k]
        sigma = math.sqrt(float(x @ x))
        if sigma == 0.0:
            continue
        alpha = -sigma if x[0] >= 0 else sigma
        v = x.copy()
        v[0] -= alpha
        vv = float(v @ v)
        if vv == 0.0:
            off[k + 1] = x[0]
            continue
        beta = 2.0 / vv
        sub = A[k + 1 :, k + 1 :]
        p = dsymv(beta, sub, v, lower=1)
        q = p - (0.5 * beta * float(v @ p)) * v
        A[k + 1 :, k + 1 :] = dsyr2(-1.0, v, q, a=sub, lower=1, overwrite_a=1)
        A[k + 1, k] = alpha
        off[k + 1] = alpha
    if n > 1:
        off[n - 1] = A[n - 1, n - 2]
    return np.diag(A).copy(), off


def symmetric_eigenvalues(A: np.ndarray) -> np.ndarray:
    """All eigenvalues, ascending (tridiagonalisation + implicit QL)."""
    if len(A) == 0:
        return np.zeros(0)
    d, e = tridiagonalize(A)
    return _kernels.tql_eigenvalues(d, e)


def kth_eigenvalue(A: np.ndarray, k: int, tol: float = 1e-12) -> float:
    """k-th smallest eigenvalue (0-based) by Sturm bisection on the tridiagonal form."""
    d, e = tridiagonalize(A)
    radius = np.abs(e).copy()
    radius[:-1] += np.abs(e[1:])
    lo = float(np.min(d - radius)) - 1.0
    hi = float(np.max(d + radius)) + 1.0
    return float(_kernels.sturm_kth(d, e, k, lo, hi, tol))


@dataclass(frozen=True, eq=False)
class LaplacianSpectrum:
    graph: Graph
    eigenvalues: np.ndarray
    tolerance: float = EIG_TOL

    @property
    def mu(self) -> float:
        return float(self.eigenvalues[1]) if len(self.eigenvalues) > 1 else 0.0


def laplacian_spectrum(G: Graph) -> LaplacianSpectrum:
    if G.n_vertices > DENSE_CAP:
        raise DimensionError(f"dense eigensolver capped at {DENSE_CAP} vertices")
    return LaplacianSpectrum(G, symmetric_eigenvalues(laplacian(G)))


def spectral_gap(G: Graph, method: str = "ql") -> float:
    """mu(G), the second smallest Laplacian eigenvalue.

    Connectivity is decided combinatorially: a disconnected graph returns
    exactly 0.0 whatever the floating-point eigenvalue looks like.
    """
    if G.n_vertices < 2:
        raise DimensionError("spectral gap needs at least two vertices")
    if G.n_vertices > DENSE_CAP:
        raise DimensionError(f"dense eigensolver capped at {DENSE_CAP} vertices")
    if not G.is_connected():
        return 0.0
    L = laplacian(G)
    if method == "ql":
        return float(symmetric_eigenvalues(L)[1])
    if method == "bisect":
        return kth_eigenvalue(L, 1)
    raise ValueError(f"unknown method {method!r}")


def min_link_gap(Y: Complex2, method: str = "ql") -> tuple[float, list[tuple[int, float]]]:
    """The least spectral gap over all vertex links, with the per-vertex table."""
    table = [(v, spectral_gap(g, method)) for v, g in enumerate(all_links(Y))]
    return min(mu for _, mu in table), table


@dataclass(frozen=True)
class TannerResult:
    passed: bool
    cut: int
    bound: float
    slack: float


def tanner_check(G: Graph, S, mu: float | None = None) -> TannerResult:
    """Check e(S, V-S) >= |S| |V-S| mu(G) / |V|."""
    S = sorted(set(int(s) for s in S))
    V = G.n_vertices
    if not S or len(S) >= V or S[0] < 0 or S[-1] >= V:
        raise PreconditionError("S must be a nonempty proper vertex subset")
    if mu is None:
        mu = spectral_gap(G)
    cut = G.cut_size(S)
    bound = len(S) * (V - len(S)) * mu / V
    return TannerResult(cut >= bound - EIG_TOL * max(1.0, bound), cut, bound, cut - bound)


def all_cut_sizes(G: Graph) -> np.ndarray:
    """e(S, V-S) for every subset S, indexed by bitmask (|V| <= 24)."""
    V = G.n_vertices
    if V > 24:
        raise DimensionError("exhaustive cuts capped at 24 vertices")
    masks = np.arange(1 << V, dtype=np.int64)
    cut = np.zeros(1 << V, dtype=np.int64)
    for u, v in G.edges.tolist():
        cut += ((masks >> u) ^ (masks >> v)) & 1
    return cut


def tanner_exhaustive(G: Graph) -> tuple[int, float]:
    """Check the cut bound on every nonempty proper subset.

    Returns the number of violations and the minimum slack.
    """
    V = G.n_vertices
    mu = spectral_gap(G)
    cut = all_cut_sizes(G)[1:-1]
    sizes = np.bitwise_count(np.arange(1, (1 << V) - 1, dtype=np.uint64)).astype(np.int64)
    bound = sizes * (V - sizes) * mu / V
    slack = cut - bound
    violations = int(np.sum(slack < -EIG_TOL * np.maximum(1.0, bound)))
    return violations, float(slack.min())


# ---------------------------------------------------------------------------
# Monte Carlo report


def friedman_line(d: int) -> float:
    return d - 3 * math.sqrt(d)


def link_gap_experiment(
    n: int,
    d: int,
    samples: int,
    seed: int | None = None,
    burn_in: int | None = None,
    threads: int | None = None,
) -> dict:
    """Distribution of the min link gap of random Y(n, d) beside d - 3 sqrt(d).

    Observational only; one row per sample. Each sample draws its d squares
    from its own spawned stream, so rows do not depend on ``threads``.
    """
    seed = resolve_seed(seed)
    line = friedman_line(d)
    rows = []
    for s, rng in enumerate(spawn(seed, samples)):
        if threads is not None and threads > 1:
            subs = rng.spawn(d)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                squares = list(pool.map(lambda r: sample_uniform_array(n, r, burn_in), subs))
        else:
            squares = [sample_uniform_array(n, r, burn_in) for r in rng.spawn(d)]
        Y = build_Y_union(squares)
        mu_tilde, table = min_link_gap(Y)
        gaps = np.array([mu for _, mu in table])
        rows.append(
            {
                "sample": s,
                "mu_tilde": mu_tilde,
                "mean_link_gap": float(gaps.mean()),
                "D1": int(Y.edge_degrees.max()),
                "above_line": bool(mu_tilde > line),
            }
        )
    above = sum(r["above_line"] for r in rows)
    return {
        "n": n,
        "d": d,
        "samples": samples,
        "seed": seed,
        "reference_line": line,
        "frequency_above_line": above / samples if samples else None,
        "label": "observational; the reference line is a comparison, not a claim",
        "rows": rows,
    }


def latin_bipartite(n: int, d: int, rng) -> Graph:
    """The n-by-n bipartite graph on edges (i, pi_j(i)) for d rows pi_j of a random Latin square."""
    if not 1 <= d <= n:
        raise DimensionError("need 1 <= d <= n rows")
    L = sample_uniform_array(n, rng)
    rows = rng.choice(n, size=d, replace=False)
    i = np.tile(np.arange(n), d)
    j = L[rows].ravel()
    return Graph.from_edges(2 * n, list(zip(i.tolist(), (n + j).tolist())))
