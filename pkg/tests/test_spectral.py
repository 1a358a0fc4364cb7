import numpy as np
import pytest

from coblab import complexes as cx
from coblab import latin, spectral
from coblab.errors import DimensionError, PreconditionError
from conftest import dense_laplacian


@pytest.mark.parametrize("n", range(2, 31))
def test_complete_graph_gap(n):
    G = cx.Graph.complete(n)
    assert spectral.spectral_gap(G) == pytest.approx(n, abs=1e-9)
    assert spectral.spectral_gap(G, method="bisect") == pytest.approx(n, abs=1e-9)


@pytest.mark.parametrize("n", range(2, 31))
def test_complete_bipartite_gap(n):
    G = cx.Graph.complete_bipartite(n, n)
    assert spectral.spectral_gap(G) == pytest.approx(n, abs=1e-9)
    assert spectral.spectral_gap(G, method="bisect") == pytest.approx(n, abs=1e-9)


def test_single_edge_gap():
    # K_{1,1} is K_2, whose gap is 2 rather than 1
    assert spectral.spectral_gap(cx.Graph.complete_bipartite(1, 1)) == pytest.approx(2, abs=1e-12)


def test_full_spectrum_bipartite():
    # K_{n,n}: 0, n (2n-2 times), 2n
    ev = spectral.laplacian_spectrum(cx.Graph.complete_bipartite(5, 5)).eigenvalues
    assert np.allclose(ev, [0] + [5] * 8 + [10], atol=1e-9)


def test_against_numpy(rng):
    for size in (1, 2, 3, 10, 57, 120):
        B = rng.normal(size=(size, size))
        A = B + B.T
        ref = np.linalg.eigvalsh(A)
        assert np.allclose(spectral.symmetric_eigenvalues(A), ref, atol=1e-9 * max(1, np.abs(ref).max()))
        for k in {0, size // 2, size - 1}:
            assert spectral.kth_eigenvalue(A, k) == pytest.approx(ref[k], abs=1e-8)


def test_tridiagonal_similarity(rng):
    B = rng.normal(size=(30, 30))
    A = B + B.T
    d, e = spectral.tridiagonalize(A)
    T = np.diag(d) + np.diag(e[1:], -1) + np.diag(e[1:], 1)
    assert np.allclose(np.linalg.eigvalsh(T), np.linalg.eigvalsh(A), atol=1e-10)
    assert d.sum() == pytest.approx(np.trace(A))


def test_random_graph_trace_identity(rng):
    for _ in range(20):
        V = int(rng.integers(2, 60))
        edges = [(u, v) for u in range(V) for v in range(u + 1, V) if rng.random() < 0.3]
        G = cx.Graph.from_edges(V, edges)
        ev = spectral.laplacian_spectrum(G).eigenvalues
        L = dense_laplacian(V, edges)
        tr1, tr2 = np.trace(L), np.sum(L * L)
        assert abs(ev.sum() - tr1) <= 1e-6 * max(1.0, tr1)
        assert abs((ev**2).sum() - tr2) <= 1e-6 * max(1.0, tr2)
        assert np.allclose(ev, np.linalg.eigvalsh(L), atol=1e-9)


def test_disconnected_gap_is_zero():
    G = cx.Graph.from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)])
    assert spectral.spectral_gap(G) == 0.0
    with pytest.raises(DimensionError):
        spectral.spectral_gap(cx.Graph.complete(1))


def test_path_gap():
    # P_n: 2 - 2 cos(pi / n)
    n = 12
    G = cx.Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    assert spectral.spectral_gap(G) == pytest.approx(2 - 2 * np.cos(np.pi / n), abs=1e-12)


def test_tanner_fifty_bipartite(rng):
    violations = 0
    for i in range(50):
        if i % 2:
            n = int(rng.integers(2, 8))
            G = spectral.latin_bipartite(n, int(rng.integers(1, n + 1)), rng)
        else:
            a, b = int(rng.integers(1, 8)), int(rng.integers(1, 8))
            edges = [(u, a + v) for u in range(a) for v in range(b) if rng.random() < 0.5]
            G = cx.Graph.from_edges(a + b, edges)
        assert G.n_vertices <= 14
        bad, slack = spectral.tanner_exhaustive(G)
        violations += bad
    assert violations == 0


def test_tanner_single_subset():
    G = cx.Graph.complete(6)
    r = spectral.tanner_check(G, [0, 1])
    assert r.passed and r.cut == 8 and r.bound == pytest.approx(8.0)
    with pytest.raises(PreconditionError):
        spectral.tanner_check(G, [])


def test_all_cut_sizes_against_definition(rng):
    G = cx.Graph.from_edges(7, [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (0, 6)])
    cuts = spectral.all_cut_sizes(G)
    for mask in rng.integers(0, 1 << 7, size=30):
        S = [v for v in range(7) if mask >> v & 1]
        assert cuts[mask] == G.cut_size(S) if S else cuts[mask] == 0


def test_T_link_gap():
    mu, table = spectral.min_link_gap(cx.build_T(4))
    assert mu == pytest.approx(4, abs=1e-9) and len(table) == 12


def test_latin_bipartite_regular(rng):
    G = spectral.latin_bipartite(9, 4, rng)
    assert G.n_edges == 36 and np.all(G.degrees == 4)


def test_link_gap_experiment_deterministic():
    a = spectral.link_gap_experiment(6, 3, 3, seed=9)
    b = spectral.link_gap_experiment(6, 3, 3, seed=9, threads=2)
    assert a == b
    assert a["reference_line"] == pytest.approx(3 - 3 * np.sqrt(3))
    assert [r["sample"] for r in a["rows"]] == [0, 1, 2]
    assert all(r["D1"] <= 3 for r in a["rows"])
