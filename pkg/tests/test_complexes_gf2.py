import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coblab import complexes as cx
from coblab import gf2, latin
from coblab.errors import CapacityError, DimensionError, InvariantError
from conftest import dense_laplacian, gf2_rank_dense, validate


def random_Y(n, d, rng):
    return cx.build_Y_union([latin.sample_uniform_array(n, rng) for _ in range(d)])


# -- construction -------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_T_sizes_and_links(n):
    X = cx.build_T(n)
    assert (X.n_vertices, X.n_edges, X.n_triangles) == (3 * n, 3 * n * n, n**3)
    assert np.all(X.edge_degrees == n)
    for v in range(X.n_vertices):
        g = cx.link(X, v)
        assert g.n_vertices == 2 * n and g.n_edges == n * n


def test_Y_has_one_triangle_per_edge(rng):
    L = latin.sample_uniform(6, rng)
    Y = cx.build_Y(L)
    assert Y.n_triangles == 36 and np.all(Y.edge_degrees == 1)
    # each link is a perfect matching
    assert all(g.n_edges == 6 and np.all(g.degrees == 1) for g in cx.all_links(Y))


def test_Y_union_degree_bound(rng):
    Y = random_Y(7, 3, rng)
    D, hist = cx.edge_degree_max(Y)
    assert D <= 3 and sum(hist.values()) == Y.n_edges


def test_Y_union_merges_duplicates():
    L = latin.LatinSquare.cyclic(4)
    assert cx.build_Y_union([L, L]).n_triangles == 16


def test_all_links_match_single_link(rng):
    Y = random_Y(5, 2, rng)
    for v, g in enumerate(cx.all_links(Y)):
        h = cx.link(Y, v)
        assert np.array_equal(g.edges, h.edges) and g.labels == h.labels


def test_link_keyerror():
    with pytest.raises(KeyError):
        cx.link(cx.build_T(2), 6)


def test_edge_index_canonical_order():
    X = cx.build_T(3)
    for idx, (u, v) in enumerate(X.edges.tolist()):
        assert X.edge_index(u, v) == idx == X.edge_index(v, u)
    S = cx.build_simplex_skeleton(5, 2)
    for idx, (u, v) in enumerate(S.edges.tolist()):
        assert S.edge_index(u, v) == idx


def test_audit_rejects_bad_faces():
    with pytest.raises(InvariantError):
        cx.Complex2(3, [(0, 1)], [(0, 1, 2)])
    with pytest.raises(InvariantError):
        cx.Complex2(3, [(1, 0)], [])
    with pytest.raises(InvariantError):
        cx.Complex2(3, [(0, 1), (0, 1)], [])
    with pytest.raises(DimensionError):
        cx.build_simplex_skeleton(2, 2)


def test_complex_json_roundtrip(rng):
    for X in (cx.build_T(2), random_Y(4, 2, rng), cx.build_simplex_skeleton(5, 2), cx.build_Y2np(6, 0.3, rng)):
        data = X.to_json()
        validate(data, "complex")
        Y = cx.Complex2.from_json(data)
        assert np.array_equal(X.edges, Y.edges) and np.array_equal(X.triangles, Y.triangles)


def test_y2np_extremes(rng):
    assert cx.build_Y2np(6, 0.0, rng).n_triangles == 0
    assert cx.build_Y2np(6, 1.0, rng).n_triangles == 20


def test_graph_basics():
    G = cx.Graph.complete_bipartite(3, 2)
    assert G.n_edges == 6 and G.is_connected()
    assert G.cut_size([0]) == 2
    H = cx.Graph.from_edges(4, [(0, 1), (2, 3)])
    assert not H.is_connected() and H.components() == 2
    with pytest.raises(InvariantError):
        cx.Graph.from_edges(2, [(1, 1)])
    L = dense_laplacian(G.n_vertices, G.edges.tolist())
    assert np.array_equal(np.diag(L), G.degrees)


# -- cochain algebra ----------------------------------------------------------


def test_dd_zero_random(rng):
    for _ in range(50):
        X = random_Y(int(rng.integers(2, 7)), int(rng.integers(1, 4)), rng)
        for _ in range(4):
            phi = gf2.Cochain.random(X, 0, rng)
            assert not gf2.coboundary(gf2.coboundary(phi))
        assert not gf2.coboundary(gf2.coboundary(gf2.Cochain.ones(X, -1)))


def test_dd_zero_as_matrices(rng):
    X = random_Y(5, 3, rng)
    d0 = gf2.coboundary_matrix(X, 0).to_dense().astype(np.int64)
    d1 = gf2.coboundary_matrix(X, 1).to_dense().astype(np.int64)
    assert not np.any((d1 @ d0) % 2)


def test_coboundary_matches_matrix(rng):
    X = random_Y(4, 2, rng)
    M = gf2.coboundary_matrix(X, 1).to_dense().astype(np.int64)
    for _ in range(20):
        phi = gf2.Cochain.random(X, 1, rng)
        assert np.array_equal(gf2.coboundary(phi).to_bools(), (M @ phi.to_bools()) % 2 == 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(1, 130), st.integers(0, 2**32))
def test_rank_three_ways(rows, cols, seed):
    dense = np.random.default_rng(seed).random((rows, cols)) < 0.3
    M = gf2.GF2Matrix.from_dense(dense)
    assert np.array_equal(M.to_dense(), dense)
    assert M.rank() == M.rank_reference() == gf2_rank_dense(dense)


def test_rank_on_coboundary_matrices(rng):
    for _ in range(10):
        X = random_Y(int(rng.integers(2, 9)), int(rng.integers(1, 4)), rng)
        for k in (0, 1):
            M = gf2.coboundary_matrix(X, k)
            assert M.rank() == M.rank_reference() == gf2_rank_dense(M.to_dense())


@pytest.mark.parametrize(
    "X, expected",
    [
        (cx.build_simplex_skeleton(6, 2), 0),
        (cx.build_simplex_skeleton(6, 1), 10),  # cycle rank of K_6
        (cx.build_T(3), 0),
        (cx.build_Y(latin.LatinSquare.cyclic(3)), 10),
    ],
)
def test_cohomology_rank_frozen(X, expected):
    assert gf2.cohomology_rank(X, 1) == expected


def test_cohomology_rank_euler(rng):
    # chi = V - E + T = 1 + h0 - h1 + h2 with reduced Betti numbers
    for _ in range(10):
        X = random_Y(int(rng.integers(2, 7)), int(rng.integers(1, 4)), rng)
        r1 = gf2.coboundary_matrix(X, 1).rank()
        h2 = X.n_triangles - r1
        chi = X.n_vertices - X.n_edges + X.n_triangles
        assert chi == 1 + gf2.cohomology_rank(X, 0) - gf2.cohomology_rank(X, 1) + h2


def test_rref_properties(rng):
    vecs = [int(x) for x in rng.integers(0, 2**20, size=30)]
    basis = gf2.rref(vecs)
    pivots = [p for p, _ in basis]
    assert len(basis) == gf2.GF2Matrix.from_dense([gf2.int_to_bools(v, 20) for v in vecs]).rank()
    for p, b in basis:
        assert b >> p & 1 and b.bit_length() - 1 == p
        assert all(not (b >> q & 1) for q in pivots if q != p)


def test_cochain_json_and_validation():
    X = cx.build_T(2)
    phi = gf2.Cochain.from_support(X, 1, [0, 5, 11])
    data = phi.to_json()
    validate(data, "cochain")
    assert gf2.Cochain.from_json(X, data) == phi
    with pytest.raises(DimensionError):
        gf2.Cochain(X, 1, 1 << 12)
    with pytest.raises(DimensionError):
        phi + gf2.Cochain.zero(X, 0)


def test_words_roundtrip(rng):
    for _ in range(20):
        x = int(rng.integers(0, 2**62)) << int(rng.integers(0, 100))
        n = gf2.words_for(x.bit_length() + 1)
        assert gf2.words_to_int(gf2.int_to_words(x, n)) == x


# -- coset norms -------------------------------------------------------------


def test_coset_norm_invariance(rng):
    for _ in range(40):
        X = random_Y(int(rng.integers(2, 6)), int(rng.integers(1, 4)), rng)
        phi = gf2.Cochain.random(X, 1, rng)
        base = gf2.coset_norm(phi)
        assert base.exact and gf2.is_coboundary(base.representative + phi)
        assert gf2.support_norm(base.representative) == base.value
        for _ in range(5):
            shift = gf2.coboundary(gf2.Cochain.random(X, 0, rng))
            assert gf2.coset_norm(phi + shift).value == base.value


def test_gray_and_bnb_agree(rng):
    for _ in range(30):
        X = random_Y(int(rng.integers(2, 6)), 2, rng)
        phi = gf2.Cochain.random(X, 1, rng, density=float(rng.random()))
        assert gf2.coset_norm(phi, method="gray").value == gf2.coset_norm(phi, method="bnb").value


def test_batched_norms_agree(rng):
    X = random_Y(4, 2, rng)
    phis = [gf2.Cochain.random(X, 1, rng) for _ in range(25)]
    assert gf2.coset_norms(phis) == [gf2.coset_norm(p).value for p in phis]


def test_coset_norm_small_brute(rng):
    X = cx.build_T(2)
    shifts = {gf2.coboundary(gf2.Cochain(X, 0, m)).bits for m in range(1 << 6)}
    for _ in range(50):
        phi = gf2.Cochain.random(X, 1, rng)
        assert gf2.coset_norm(phi).value == min((phi.bits ^ s).bit_count() for s in shifts)


def test_coset_norm_degree0():
    X = cx.build_T(2)
    phi = gf2.Cochain.from_support(X, 0, [0, 1, 2, 3, 4])
    assert gf2.coset_norm(phi).value == 1


def test_coset_norm_cap_and_heuristic(rng):
    X = random_Y(9, 2, rng)  # 27 vertices
    phi = gf2.Cochain.random(X, 1, rng)
    with pytest.raises(CapacityError):
        gf2.coset_norm(phi)
    h = gf2.coset_norm(phi, heuristic=True, rng=rng)
    assert not h.exact and h.value <= gf2.support_norm(phi)
    assert gf2.is_coboundary(h.representative + phi)


def test_heuristic_is_upper_bound(rng):
    X = random_Y(5, 2, rng)
    for _ in range(10):
        phi = gf2.Cochain.random(X, 1, rng)
        # heuristic path is forced only above the cap; emulate via the descent directly
        value, bits = gf2._descent(X, phi.bits, rng)
        assert value >= gf2.coset_norm(phi).value
        assert gf2.is_coboundary(gf2.Cochain(X, 1, bits) + phi)
