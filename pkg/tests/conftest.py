"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's kernels: they work on plain
Python ints or dense numpy arrays so that agreement is evidence, not tautology.
"""
from __future__ import annotations

import itertools
import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

SCHEMA_DIR = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def load_schema(name: str) -> dict:
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())


def validate(instance, name: str) -> None:
    import jsonschema

    jsonschema.validate(instance, load_schema(name))


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a.astype(np.uint64)).astype(np.int64)


def brute_h1(X) -> Fraction | None:
    """min ||d phi|| / ||[phi]|| over every 1-cochain, by dense enumeration.

    Coset norms come from XOR against all 2^V vertex coboundaries. Returns
    None when every 1-cochain is a coboundary.
    """
    V, E = X.n_vertices, X.n_edges
    edges = X.edges.tolist()
    shifts = []
    for mask in range(1 << V):
        b = 0
        for idx, (u, v) in enumerate(edges):
            if ((mask >> u) ^ (mask >> v)) & 1:
                b |= 1 << idx
        shifts.append(b)
    shifts = np.unique(np.array(shifts, dtype=np.uint64))
    phis = np.arange(1 << E, dtype=np.uint64)
    norms = np.full(len(phis), E + 1, dtype=np.int64)
    for b in shifts:
        np.minimum(norms, _popcount(phis ^ b), out=norms)
    te = X.tri_edges
    d = np.zeros(len(phis), dtype=np.int64)
    for a, b, c in te.tolist():
        d += ((phis >> np.uint64(a)) ^ (phis >> np.uint64(b)) ^ (phis >> np.uint64(c))).astype(np.int64) & 1
    live = norms > 0
    if not live.any():
        return None
    return min(Fraction(int(x), int(y)) for x, y in set(zip(d[live].tolist(), norms[live].tolist())))


def brute_h0(n_vertices: int, edges) -> Fraction:
    """Cheeger constant by iterating over every subset with itertools."""
    best = None
    for size in range(1, n_vertices // 2 + 1):
        for S in itertools.combinations(range(n_vertices), size):
            s = set(S)
            cut = sum(1 for u, v in edges if (u in s) != (v in s))
            r = Fraction(cut, size)
            best = r if best is None or r < best else best
    return best


def dense_laplacian(n_vertices: int, edges) -> np.ndarray:
    L = np.zeros((n_vertices, n_vertices))
    for u, v in edges:
        L[u, v] -= 1
        L[v, u] -= 1
        L[u, u] += 1
        L[v, v] += 1
    return L


def brute_permanent(M) -> int:
    M = [list(map(int, r)) for r in M]
    n = len(M)
    return sum(int(np.prod([M[i][p[i]] for i in range(n)])) for p in itertools.permutations(range(n)))


def gf2_rank_dense(rows: np.ndarray) -> int:
    """Gaussian elimination on a dense uint8 array."""
    A = (np.array(rows, dtype=np.uint8) & 1).copy()
    r = 0
    n_rows, n_cols = A.shape
    for c in range(n_cols):
        piv = np.nonzero(A[r:, c])[0]
        if not len(piv):
            continue
        p = r + piv[0]
        A[[r, p]] = A[[p, r]]
        mask = A[:, c].astype(bool)
        mask[r] = False
        A[mask] ^= A[r]
        r += 1
        if r == n_rows:
            break
    return r


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
