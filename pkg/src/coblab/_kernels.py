"""Compiled inner loops (numba).

Everything here works on plain integer/float arrays; the public modules wrap
them with validation and the domain types.
"""
from __future__ import annotations

import numba
import numpy as np

# the bundled TBB is too old for numba; avoid the warning on every import
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ONE = np.uint64(1)
_TWO = np.uint64(2)
_FOUR = np.uint64(4)
_S56 = np.uint64(56)


@numba.njit(cache=True, inline="always")
def popcount64(x):
    x = x - ((x >> _ONE) & _M1)
    x = (x & _M2) + ((x >> _TWO) & _M2)
    x = (x + (x >> _FOUR)) & _M4
    return (x * _H01) >> _S56


# ---------------------------------------------------------------------------
# Jacobson–Matthews walk
#
# Random numbers come from an inline xorshift64* generator (Vigna 2016),
# seeded through one splitmix64 step; the seed is drawn from the caller's
# numpy Generator.
#
# The incidence cube M[x, y, z] is stored through its three line families.
# Each line keeps at most two "+1" entries (two slots, -1 = empty); the single
# "-1" cell of an improper square is tracked separately.


@numba.njit(cache=True, inline="always")
def _next(st):
    x = st[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    st[0] = x
    return (x * np.uint64(2685821657736338717)) >> np.uint64(11)


@numba.njit(cache=True, inline="always")
def _below(st, n):
    # 53 random bits scaled to [0, n)
    return np.int64((_next(st) * np.uint64(n)) >> np.uint64(53))


@numba.njit(cache=True)
def _splitmix(seed):
    z = seed + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    if z == 0:
        z = np.uint64(1)
    return z


@numba.njit(cache=True, inline="always")
def _slot_remove(P, a, b, v):
    if P[a, b, 0] == v:
        P[a, b, 0] = -1
    else:
        P[a, b, 1] = -1


@numba.njit(cache=True, inline="always")
def _slot_add(P, a, b, v):
    if P[a, b, 0] < 0:
        P[a, b, 0] = v
    else:
        P[a, b, 1] = v


@numba.njit(cache=True, inline="always")
def _slot_one(P, a, b):
    if P[a, b, 0] >= 0:
        return P[a, b, 0]
    return P[a, b, 1]


@numba.njit(cache=True, inline="always")
def _slot_pick(P, a, b, st):
    if _next(st) & np.uint64(1):
        return P[a, b, 0]
    return P[a, b, 1]


@numba.njit(cache=True, inline="always")
def _cell_down(Pxy, Pyz, Pxz, x, y, z):
    _slot_remove(Pxy, x, y, z)
    _slot_remove(Pyz, y, z, x)
    _slot_remove(Pxz, x, z, y)


@numba.njit(cache=True, inline="always")
def _cell_up(Pxy, Pyz, Pxz, x, y, z):
    _slot_add(Pxy, x, y, z)
    _slot_add(Pyz, y, z, x)
    _slot_add(Pxz, x, z, y)


@numba.njit(cache=True, nogil=True)
def jm_walk(square, steps, seed):
    """Run at least ``steps`` moves from ``square``; stop on a proper square.

    ``seed`` is a uint64. Orders above 32767 do not fit the int16 line slots.
    """
    n = square.shape[0]
    st = np.empty(1, np.uint64)
    st[0] = _splitmix(seed)
    Pxy = -np.ones((n, n, 2), np.int16)
    Pyz = -np.ones((n, n, 2), np.int16)
    Pxz = -np.ones((n, n, 2), np.int16)
    for x in range(n):
        for y in range(n):
            _cell_up(Pxy, Pyz, Pxz, x, y, square[x, y])
    out = np.empty((n, n), np.int64)
    if n > 1:
        improper = False
        ix = 0
        iy = 0
        iz = 0
        t = 0
        while t < steps or improper:
            t += 1
            if not improper:
                x = _below(st, n)
                y = _below(st, n)
                zp = _slot_one(Pxy, x, y)
                z = _below(st, n - 1)
                if z >= zp:
                    z += 1
                xp = _slot_one(Pyz, y, z)
                yp = _slot_one(Pxz, x, z)
            else:
                x = ix
                y = iy
                z = iz
                xp = _slot_pick(Pyz, y, z, st)
                yp = _slot_pick(Pxz, x, z, st)
                zp = _slot_pick(Pxy, x, y, st)
            corner = Pxy[xp, yp, 0] == zp or Pxy[xp, yp, 1] == zp
            _cell_down(Pxy, Pyz, Pxz, x, y, zp)
            _cell_down(Pxy, Pyz, Pxz, x, yp, z)
            _cell_down(Pxy, Pyz, Pxz, xp, y, z)
            if corner:
                _cell_down(Pxy, Pyz, Pxz, xp, yp, zp)
            if not improper:
                _cell_up(Pxy, Pyz, Pxz, x, y, z)
            _cell_up(Pxy, Pyz, Pxz, x, yp, zp)
            _cell_up(Pxy, Pyz, Pxz, xp, y, zp)
            _cell_up(Pxy, Pyz, Pxz, xp, yp, z)
            if corner:
                improper = False
            else:
                improper = True
                ix = xp
                iy = yp
                iz = zp
    for x in range(n):
        for y in range(n):
            out[x, y] = _slot_one(Pxy, x, y)
    return out


# ---------------------------------------------------------------------------
# GF(2) elimination on bit-packed rows


@numba.njit(cache=True, nogil=True)
def gf2_rank_packed(rows, ncols):
    """Rank of a packed matrix by forward elimination in column order.

    ``rows`` is consumed (modified in place).
    """
    R = rows.shape[0]
    rank = 0
    for c in range(ncols):
        if rank == R:
            break
        w = c // 64
        bit = np.uint64(1) << np.uint64(c % 64)
        piv = -1
        for r in range(rank, R):
            if rows[r, w] & bit:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for k in range(w, rows.shape[1]):
                tmp = rows[piv, k]
                rows[piv, k] = rows[rank, k]
                rows[rank, k] = tmp
        for r in range(rank + 1, R):
            if rows[r, w] & bit:
                for k in range(w, rows.shape[1]):
                    rows[r, k] ^= rows[rank, k]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# Coset minimisation


@numba.njit(cache=True)
def coset_sweep(phis, basis):
    """For each packed cochain, min popcount over its coset ``phi + span(basis)``.

    Walks the span in reflected Gray-code order (one basis XOR per step).
    Returns the minima and the Gray index of the first minimiser.
    """
    B = phis.shape[0]
    W = phis.shape[1]
    r = basis.shape[0]
    cur = phis.copy()
    best = np.zeros(B, np.int64)
    arg = np.zeros(B, np.int64)
    for b in range(B):
        s = 0
        for w in range(W):
            s += popcount64(cur[b, w])
        best[b] = s
    total = np.int64(1) << np.int64(r)
    for i in range(1, total):
        j = 0
        t = i
        while (t & 1) == 0:
            t >>= 1
            j += 1
        gray = i ^ (i >> 1)
        for b in range(B):
            s = 0
            for w in range(W):
                cur[b, w] ^= basis[j, w]
                s += popcount64(cur[b, w])
            if s < best[b]:
                best[b] = s
                arg[b] = gray
    return best, arg


@numba.njit(cache=True)
def coset_bnb(indptr, nbr, eid, phi, order, best, best_psi):
    """Exact min over psi of |phi + d0 psi| by depth-first branch and bound.

    The vertex ``order[0]`` is pinned to 0 (psi and its complement give the
    same shift). The bound adds, for every unassigned vertex, the cheaper of
    its two values against already assigned neighbours.
    """
    V = order.shape[0]
    psi = np.zeros(V, np.uint8)
    assigned = np.zeros(V, np.bool_)
    cnt = np.zeros((V, 2), np.int64)
    choice = -np.ones(V, np.int64)
    cost = 0
    lbsum = 0
    t = 0
    while t >= 0:
        v = order[t]
        if choice[t] >= 0:
            val = choice[t]
            assigned[v] = False
            for p in range(indptr[v], indptr[v + 1]):
                w = nbr[p]
                if not assigned[w]:
                    x = 1 ^ phi[eid[p]] ^ val
                    old = min(cnt[w, 0], cnt[w, 1])
                    cnt[w, x] -= 1
                    lbsum += min(cnt[w, 0], cnt[w, 1]) - old
            cost -= cnt[v, val]
            lbsum += min(cnt[v, 0], cnt[v, 1])
        nxt = choice[t] + 1
        if t == 0 and nxt > 0:
            nxt = 2
        if nxt > 1:
            choice[t] = -1
            t -= 1
            continue
        choice[t] = nxt
        psi[v] = nxt
        cost += cnt[v, nxt]
        lbsum -= min(cnt[v, 0], cnt[v, 1])
        assigned[v] = True
        for p in range(indptr[v], indptr[v + 1]):
            w = nbr[p]
            if not assigned[w]:
                x = 1 ^ phi[eid[p]] ^ nxt
                old = min(cnt[w, 0], cnt[w, 1])
                cnt[w, x] += 1
                lbsum += min(cnt[w, 0], cnt[w, 1]) - old
        if cost + lbsum >= best:
            continue
        if t == V - 1:
            best = cost
            for k in range(V):
                best_psi[k] = psi[k]
            continue
        t += 1
        choice[t] = -1
    return best


@numba.njit(cache=True, inline="always")
def _ctz(i):
    j = 0
    while (i & 1) == 0:
        i >>= 1
        j += 1
    return j


@numba.njit(cache=True)
def h1_range(q_edge, q_tri, span, lo, hi):
    """Least ||d1 phi|| / ||[phi]|| over Gray indices ``lo <= i < hi``.

    A Gray index ``g`` names the coset representative that is the XOR of
    ``q_edge[j]`` over the set bits ``j`` of ``g``; ``q_tri[j]`` is the
    coboundary of ``q_edge[j]``. ``span`` lists all of B^1. Index 0 (the
    coboundary coset) is skipped. Cochains fit one 64-bit word.

    Returns ``(num, den, index)`` of the first strict minimum; ``den = 0``
    when the range holds no admissible coset.
    """
    rep = np.uint64(0)
    img = np.uint64(0)
    g0 = lo ^ (lo >> 1)
    j = 0
    while g0 >> j:
        if (g0 >> j) & 1:
            rep ^= q_edge[j]
            img ^= q_tri[j]
        j += 1
    best_a = np.int64(1)
    best_m = np.int64(0)
    best_i = np.int64(-1)
    S = span.shape[0]
    for i in range(lo, hi):
        if i > lo:
            j = _ctz(i)
            rep ^= q_edge[j]
            img ^= q_tri[j]
        if i == 0:
            continue
        a = np.int64(popcount64(img))
        # ||[phi]|| <= |rep|, so a / |rep| bounds the ratio from below
        if best_m > 0 and a * best_m >= best_a * np.int64(popcount64(rep)):
            continue
        m = np.int64(64)
        for s in range(S):
            c = np.int64(popcount64(rep ^ span[s]))
            if c < m:
                m = c
        if best_m == 0 or a * best_m < best_a * m:
            best_a = a
            best_m = m
            best_i = i
    return best_a, best_m, best_i


@numba.njit(cache=True, parallel=True)
def h1_sweep(q_edge, q_tri, span, bounds):
    """:func:`h1_range` over consecutive chunks ``bounds[c] .. bounds[c+1]``."""
    C = bounds.shape[0] - 1
    out = np.zeros((C, 3), np.int64)
    for c in numba.prange(C):
        a, m, i = h1_range(q_edge, q_tri, span, bounds[c], bounds[c + 1])
        out[c, 0] = a
        out[c, 1] = m
        out[c, 2] = i
    return out


@numba.njit(cache=True)
def cheeger_sweep(adj, deg):
    """Least cut(S) / min(|S|, |V - S|) over nonempty proper S.

    The last vertex stays outside S (S and its complement give the same
    ratio); subsets of the rest are walked in Gray order. ``adj[v]`` is the
    neighbour bitmask of v. Returns ``(cut, size, mask)`` of the first strict
    minimum, with ``size`` the smaller side.
    """
    V = adj.shape[0]
    S = np.uint64(0)
    cut = np.int64(0)
    k = np.int64(0)
    best_c = np.int64(1)
    best_s = np.int64(0)
    best_mask = np.uint64(0)
    total = np.int64(1) << np.int64(V - 1)
    for i in range(1, total):
        v = _ctz(i)
        bit = np.uint64(1) << np.uint64(v)
        inside = np.int64(popcount64(adj[v] & (S & ~bit)))
        if S & bit:
            S ^= bit
            cut -= deg[v] - 2 * inside
            k -= 1
        else:
            S ^= bit
            cut += deg[v] - 2 * inside
            k += 1
        small = k if 2 * k <= V else V - k
        if best_s == 0 or cut * best_s < best_c * small:
            best_c = cut
            best_s = small
            best_mask = S
    return best_c, best_s, best_mask


# ---------------------------------------------------------------------------
# Symmetric tridiagonal eigenvalues


@numba.njit(cache=True)
def tql_eigenvalues(diag, off):
    """Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL.

    ``diag`` has length n, ``off`` length n with ``off[i]`` coupling i-1 and i
    (``off[0]`` ignored). Returns ascending eigenvalues.
    """
    n = diag.shape[0]
    d = diag.copy()
    e = np.zeros(n)
    for i in range(1, n):
        e[i - 1] = off[i]
    e[n - 1] = 0.0
    eps = 2.220446049250313e-16
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                raise RuntimeError("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(d)


@numba.njit(cache=True)
def sturm_count(diag, off, x):
    """Number of eigenvalues of the tridiagonal matrix strictly below ``x``."""
    n = diag.shape[0]
    count = 0
    q = diag[0] - x
    if q < 0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = 1e-300
        q = diag[i] - x - off[i] * off[i] / q
        if q < 0:
            count += 1
    return count


@numba.njit(cache=True)
def sturm_kth(diag, off, k, lo, hi, tol):
    """k-th smallest eigenvalue (0-based) by bisection on Sturm counts."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sturm_count(diag, off, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
