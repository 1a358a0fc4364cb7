"""``coblab`` command line.

Every command prints canonical JSON (or CSV rows with ``--format csv``) or,
with ``--out PATH``, writes it atomically next to ``PATH.manifest.json``.
Exit codes: 0 ok, 2 usage or precondition error, 3 capacity, 4 a checked
identity or inequality failed.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import complexes as cx
from . import deviations as dv
from . import expansion as ex
from . import gf2, io, latin, spectral
from .errors import CapacityError, DimensionError, InvariantError, PreconditionError
from .rng import derived, make_rng, resolve_seed, spawn

COMPLEX_KINDS = ("T", "Y", "Y-union", "simplex", "y2np", "file")


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as err:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from err


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return v


def _read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _payload(data: dict) -> dict:
    """Accept either a bare object or one wrapped in an output envelope."""
    return data["result"] if isinstance(data, dict) and data.get("schema") == io.OUTPUT_SCHEMA else data


# ---------------------------------------------------------------------------
# shared argument groups


def _add_complex_args(p: argparse.ArgumentParser, flag: bool = True) -> None:
    if flag:
        p.add_argument("--complex", choices=COMPLEX_KINDS, required=True)
    p.add_argument("--n", type=_positive, help="part size (T, Y) or vertex count (simplex, y2np)")
    p.add_argument("--d", type=_positive, default=1, help="number of Latin squares for Y-union")
    p.add_argument("--k", type=int, default=2, help="skeleton dimension for simplex")
    p.add_argument("--p", type=float, help="triangle probability for y2np")
    p.add_argument("--square", help="Latin square JSON for --complex Y (default: sampled)")
    p.add_argument("--input", help="complex JSON for --complex file")
    p.add_argument("--burn-in", type=_nonneg, dest="burn_in")


def _need_n(args) -> int:
    if args.n is None:
        raise UsageError(f"--n is required for --complex {args.complex}")
    return args.n


def _make_complex(args, seed: int) -> cx.Complex2:
    kind = args.complex
    if kind == "file":
        if not args.input:
            raise UsageError("--complex file needs --input")
        X = cx.Complex2.from_json(_payload(_read_json(args.input)))
        X.audit()
        return X
    n = _need_n(args)
    if kind == "T":
        return cx.build_T(n)
    if kind == "simplex":
        return cx.build_simplex_skeleton(n, args.k)
    if kind == "y2np":
        if args.p is None:
            raise UsageError("--complex y2np needs --p")
        return cx.build_Y2np(n, args.p, make_rng(seed))
    if kind == "Y":
        if args.square:
            return cx.build_Y(latin.LatinSquare.from_json(_payload(_read_json(args.square))))
        return cx.build_Y_union([latin.sample_uniform_array(n, make_rng(seed), args.burn_in)])
    streams = spawn(seed, args.d)
    return cx.build_Y_union([latin.sample_uniform_array(n, r, args.burn_in) for r in streams])


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", choices=("complete", "complete-bipartite", "link", "file"), required=True)
    p.add_argument("--n", type=_positive)
    p.add_argument("--m", type=_positive, help="second side for complete-bipartite")
    p.add_argument("--vertex", type=_nonneg, default=0, help="vertex whose link is taken")
    p.add_argument("--complex", choices=COMPLEX_KINDS, default="T", help="ambient complex for --graph link")
    p.add_argument("--d", type=_positive, default=1)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--p", type=float)
    p.add_argument("--square")
    p.add_argument("--input", help="graph JSON {n_vertices, edges} for --graph file; complex JSON for a file link")
    p.add_argument("--burn-in", type=_nonneg, dest="burn_in")


def _make_graph(args, seed: int) -> cx.Graph:
    if args.graph == "complete":
        return cx.Graph.complete(_need_n(args))
    if args.graph == "complete-bipartite":
        n = _need_n(args)
        return cx.Graph.complete_bipartite(n, args.m or n)
    if args.graph == "file":
        if not args.input:
            raise UsageError("--graph file needs --input")
        data = _payload(_read_json(args.input))
        return cx.Graph.from_edges(int(data["n_vertices"]), [tuple(e) for e in data["edges"]])
    X = _make_complex(args, seed)
    if not 0 <= args.vertex < X.n_vertices:
        raise UsageError(f"--vertex must lie in [0, {X.n_vertices})")
    return cx.link(X, args.vertex)


def _graph_json(G: cx.Graph) -> dict:
    return {"n_vertices": G.n_vertices, "edges": G.edges.tolist()}


def _matrices(args, seed: int) -> list[np.ndarray]:
    if args.matrix:
        data = _payload(_read_json(args.matrix))
        mats = data if data and isinstance(data[0][0], list) else [data]
        return [np.array(m, dtype=np.int64) for m in mats]
    if args.random is None:
        raise UsageError("give --matrix FILE or --random N")
    rng = make_rng(seed)
    return [(rng.random((args.random, args.random)) < args.density).astype(np.int64) for _ in range(args.count)]


# ---------------------------------------------------------------------------
# commands; each returns (result, failed)


def cmd_gen_latin(args, seed):
    rng = make_rng(seed)
    squares = [latin.sample_uniform(args.n, rng, args.burn_in) for _ in range(args.count)]
    if args.count == 1:
        return squares[0].to_json(), False
    return {"n": args.n, "squares": [s.to_json() for s in squares],
            "rows": [{"sample": i, "square": json.dumps(s.to_json()["rows"])} for i, s in enumerate(squares)]}, False


def cmd_enum_latin(args, seed):
    arr = latin.enumerate_latin_array(args.n)
    out = {"n": args.n, "count": int(len(arr))}
    if args.list:
        out["squares"] = arr.astype(np.int64).tolist()
        out["rows"] = [{"index": i, "square": "".join(map(str, a.ravel().tolist()))} for i, a in enumerate(arr)]
    return out, False


def cmd_build(args, seed):
    X = _make_complex(args, seed)
    X.audit()
    D1, hist = cx.edge_degree_max(X)
    return {"complex": X.to_json(), "summary": {"n_vertices": X.n_vertices, "n_edges": X.n_edges,
                                                "n_triangles": X.n_triangles, "D1": D1}}, False


def cmd_links(args, seed):
    X = _make_complex(args, seed)
    D1, hist = cx.edge_degree_max(X)
    rows = []
    for v, g in enumerate(cx.all_links(X)):
        rows.append({"vertex": v, "label": X.label(v), "n_vertices": g.n_vertices,
                     "n_edges": g.n_edges, "connected": g.is_connected()})
    return {"D1": D1, "edge_degree_histogram": hist, "rows": rows}, False


def cmd_h0(args, seed):
    G = _make_graph(args, seed)
    rep = ex.h0_graph(G, heuristic=args.heuristic)
    return {"report": rep.to_json(), "graph": _graph_json(G)}, False


def cmd_h1_exact(args, seed):
    X = _make_complex(args, seed)
    rep = ex.h1_exact(X)
    out = {"report": rep.to_json(), "cohomology_rank": gf2.cohomology_rank(X, 1)}
    failed = False
    if rep.witness is not None:
        again = ex.ratio(rep.witness)
        out["witness_ratio"] = str(again)
        failed = again != rep.value or gf2.is_coboundary(rep.witness)
        failed |= (rep.value == 0) != (out["cohomology_rank"] > 0)
    return out, failed


def cmd_h1_estimate(args, seed):
    X = _make_complex(args, seed)
    rep = ex.h1_lower_estimate(X, args.samples, derived(seed, 1))
    rep.meta["seed"] = seed
    return {"report": rep.to_json()}, False


def cmd_cohomology(args, seed):
    X = _make_complex(args, seed)
    if args.degree not in (0, 1):
        raise UsageError("--degree must be 0 or 1")
    ranks = {str(k): gf2.coboundary_matrix(X, k).rank() for k in (-1, 0, 1)}
    return {"degree": args.degree, "rank": gf2.cohomology_rank(X, args.degree), "coboundary_ranks": ranks,
            "faces": {str(k): X.face_count(k) for k in (-1, 0, 1, 2)}}, False


def cmd_spectral_links(args, seed):
    if args.samples is not None:
        if args.complex != "Y-union":
            raise UsageError("--samples draws fresh Y(n, d); use --complex Y-union")
        return spectral.link_gap_experiment(_need_n(args), args.d, args.samples, seed, args.burn_in, args.threads), False
    X = _make_complex(args, seed)
    mu, table = spectral.min_link_gap(X, args.method)
    D1 = int(X.edge_degrees.max()) if X.n_edges else 0
    return {"mu_tilde": mu, "D1": D1, "method": args.method, "reference_line": spectral.friedman_line(D1),
            "rows": [{"vertex": v, "label": X.label(v), "mu": m} for v, m in table]}, False


def cmd_tanner(args, seed):
    rows = []
    if args.graph:
        graphs = [_make_graph(args, seed)]
    else:
        if args.n is None or 2 * args.n > 24:
            raise UsageError("random mode needs --n with 2n <= 24")
        graphs = []
        for r in spawn(seed, args.graphs):
            d = args.degree if args.degree else int(r.integers(1, args.n + 1))
            graphs.append(spectral.latin_bipartite(args.n, d, r))
    for i, G in enumerate(graphs):
        viol, slack = spectral.tanner_exhaustive(G)
        rows.append({"graph": i, "n_vertices": G.n_vertices, "n_edges": G.n_edges,
                     "mu": spectral.spectral_gap(G), "violations": viol, "min_slack": slack})
    total = sum(r["violations"] for r in rows)
    return {"graphs": len(rows), "violations": total, "rows": rows}, total > 0


def _sparse_cochains(X: cx.Complex2, count: int, max_support: int, rng) -> list[gf2.Cochain]:
    out = []
    for _ in range(count):
        k = int(rng.integers(1, max_support + 1))
        out.append(gf2.Cochain.from_support(X, 1, rng.choice(X.n_edges, size=k, replace=False).tolist()))
    return out


def cmd_prop31(args, seed):
    n = args.n
    streams = spawn(seed, args.d + 1)
    Y = cx.build_Y_union([latin.sample_uniform_array(n, r, args.burn_in) for r in streams[:-1]])
    phis = _sparse_cochains(Y, args.samples, args.max_support, streams[-1])
    rep = ex.verify_prop31(Y, args.c, phis)
    out = rep.to_json()
    out["rows"] = [{"phi": i, **r} for i, r in enumerate(out["rows"])]
    return out, not rep.ok


def cmd_claim32(args, seed):
    counts = {"pass": 0, "fail": 0, "rejected": 0}
    rows = []
    for i, r in enumerate(spawn(seed, args.instances)):
        n = int(r.choice(args.n))
        c = args.c[int(r.integers(len(args.c)))]
        G = ex.random_claim32_instance(n, c, r)
        res = ex.verify_claim32(G, c, n)
        counts[res.status] += 1
        rows.append({"instance": i, "n": n, "c": str(c), "m": res.m, "lhs": res.lhs, "rhs": res.rhs,
                     "status": res.status})
    return {"instances": args.instances, "counts": counts, "rows": rows}, counts["fail"] > 0


def cmd_permanent(args, seed):
    rows = []
    for i, M in enumerate(_matrices(args, seed)):
        per = dv.permanent_exact(M)
        row = {"matrix": i, "n": len(M), "permanent": str(per)}
        if len(M) <= dv.BRUTE_CAP:
            row["naive_agrees"] = dv.permanent_naive(M) == per
        rows.append(row)
    failed = any(r.get("naive_agrees") is False for r in rows)
    return {"rows": rows}, failed


def cmd_bregman(args, seed):
    rows = []
    for i, M in enumerate(_matrices(args, seed)):
        chk = dv.bregman_check(M)
        rows.append({"matrix": i, "n": len(M), "permanent": str(chk.permanent), "bound": chk.bound,
                     "holds": chk.holds, "tight": chk.tight})
    return {"rows": rows, "violations": sum(not r["holds"] for r in rows)}, any(not r["holds"] for r in rows)


def cmd_sefperm(args, seed):
    rows = []
    for i, r in enumerate(spawn(seed, args.systems)):
        sys_ = dv.random_system(args.n, args.k, r)
        for m in range(args.n + 1):
            res = dv.count_SEFm(sys_, m)
            rows.append({"system": i, "m": m, "brute": res.brute, "permanent_sum": res.permanent_sum,
                         "equal": res.equal})
    bad = sum(not r["equal"] for r in rows)
    return {"n": args.n, "k": args.k, "systems": args.systems, "mismatches": bad, "rows": rows}, bad > 0


def cmd_prop42(args, seed):
    rows = []
    for i, r in enumerate(spawn(seed, args.systems)):
        res = dv.check_prop42(dv.random_prop42_system(args.n, args.k, args.gamma, r), args.gamma)
        rows.append({"system": i, "status": res.status, "count": res.count, "log_bound": res.log_bound})
    fails = sum(r["status"] == "fail" for r in rows)
    return {"n": args.n, "k": args.k, "gamma": str(args.gamma), "conventions": dv.CONVENTIONS,
            "failures": fails, "rows": rows}, fails > 0


def cmd_prop43(args, seed):
    rows = []
    for i, r in enumerate(spawn(seed, args.instances)):
        Es, I = dv.random_prop43_instance(args.n, args.gamma, r)
        res = dv.check_prop43(args.n, args.gamma, Es, I)
        rows.append({"instance": i, "I": json.dumps(I), "status": res.status, "count": res.count,
                     "log_bound": res.log_bound})
    fails = sum(r["status"] == "fail" for r in rows)
    return {"n": args.n, "gamma": str(args.gamma), "conventions": dv.CONVENTIONS, "failures": fails,
            "rows": rows}, fails > 0


def cmd_nls_ratio(args, seed):
    rows = []
    for n in args.n:
        r = dv.nls_ratio(n)
        rows.append({"n": n, "latin_count": r.latin_count, "ratio": r.value, "log_ratio": r.log_value,
                     "at_least_one": r.at_least_one})
    return {"rows": rows}, not all(r["at_least_one"] for r in rows)


def cmd_tail(args, seed):
    if not 0 < args.c <= 1:
        raise UsageError("--c must lie in (0, 1]")
    n, c = args.n, float(args.c)
    size = math.ceil(args.c * n**3)
    CE = latin.random_triset(n, size, derived(seed, 2)) if size < n**3 else latin.TriSet(n, np.ones((n,) * 3, bool))
    rep = dv.tail_experiment(n, c, CE, args.samples, seed, args.burn_in, args.threads)
    return rep.to_json() | {"rows": rep.csv_rows()}, False


def cmd_d3_homology(args, seed):
    return dv.h1_nonvanishing_experiment(args.n, args.d, args.samples, seed, args.burn_in, args.threads), False


def cmd_constants(args, seed):
    out = ex.constants_chase(float(args.c), float(args.d), args.d_small)
    exact = ex.small_cochain_bound(args.c, args.d_small - 3 * math.sqrt(args.d_small), args.d_small)
    out["small_bound_at_d_small"] = exact.to_json()
    return out, not out["all_d_above_200_exceed_one"] or not out["large_check"]["holds"]


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coblab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="64-bit seed (default: $COBLAB_SEED, else 0)")
    common.add_argument("--out", help="write the result here (and PATH.manifest.json)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=_positive, help="worker cap (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("gen-latin", cmd_gen_latin, "sample Latin squares (Jacobson-Matthews)")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--count", type=_positive, default=1)
    p.add_argument("--burn-in", type=_nonneg, dest="burn_in")

    p = add("enum-latin", cmd_enum_latin, "enumerate all Latin squares of order n <= 5")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--list", action="store_true", help="include the squares")

    p = add("build", cmd_build, "build a complex")
    p.add_argument("complex", choices=COMPLEX_KINDS[:-1], metavar="{T|Y|Y-union|simplex|y2np}")
    _add_complex_args(p, flag=False)

    p = add("links", cmd_links, "vertex links and edge degrees of a complex")
    _add_complex_args(p)

    p = add("h0", cmd_h0, "Cheeger constant of a graph")
    _add_graph_args(p)
    p.add_argument("--heuristic", action="store_true")

    p = add("h1-exact", cmd_h1_exact, "exact h1 by coset sweep (at most 28 edges)")
    _add_complex_args(p)

    p = add("h1-estimate", cmd_h1_estimate, "sampled upper bound on h1")
    _add_complex_args(p)
    p.add_argument("--samples", type=_nonneg, required=True)

    p = add("cohomology", cmd_cohomology, "rank of reduced cohomology over F_2")
    _add_complex_args(p)
    p.add_argument("--degree", type=int, default=1)

    p = add("spectral-links", cmd_spectral_links, "link spectral gaps, or their distribution over samples")
    _add_complex_args(p)
    p.add_argument("--method", choices=("ql", "bisect"), default="ql")
    p.add_argument("--samples", type=_positive)

    p = add("tanner", cmd_tanner, "exhaustive cut-bound check on bipartite Latin graphs")
    p.add_argument("--n", type=_positive)
    p.add_argument("--degree", type=_positive, help="rows per graph (default: random)")
    p.add_argument("--graphs", type=_positive, default=50)
    p.add_argument("--graph", choices=("complete", "complete-bipartite", "link", "file"))
    p.add_argument("--m", type=_positive)
    p.add_argument("--vertex", type=_nonneg, default=0)
    p.add_argument("--complex", choices=COMPLEX_KINDS, default="T")
    p.add_argument("--d", type=_positive, default=1)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--p", type=float)
    p.add_argument("--square")
    p.add_argument("--input")
    p.add_argument("--burn-in", type=_nonneg, dest="burn_in")

    p = add("prop31", cmd_prop31, "small-cochain bound on sparse cochains of Y(n, d)")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--d", type=_positive, required=True)
    p.add_argument("--c", type=_fraction, required=True)
    p.add_argument("--samples", type=_positive, default=1000)
    p.add_argument("--max-support", type=_positive, default=3, dest="max_support")
    p.add_argument("--burn-in", type=_nonneg, dest="burn_in")

    p = add("claim32", cmd_claim32, "degree-sum inequality on random admissible graphs")
    p.add_argument("--n", type=_positive, nargs="+", default=list(range(6, 13)))
    p.add_argument("--c", type=_fraction, nargs="+", default=[Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)])
    p.add_argument("--instances", type=_positive, default=10000)

    for name, fn, help_ in (("permanent", cmd_permanent, "exact permanents"),
                            ("bregman", cmd_bregman, "Bregman bound against exact permanents")):
        p = add(name, fn, help_)
        p.add_argument("--matrix", help="JSON matrix, or list of matrices")
        p.add_argument("--random", type=_nonneg, metavar="N")
        p.add_argument("--density", type=float, default=0.5)
        p.add_argument("--count", type=_positive, default=1)

    p = add("sefperm", cmd_sefperm, "S(E,F,m) by brute force and by permanent sums")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=_nonneg, default=0)
    p.add_argument("--systems", type=_positive, default=100)

    p = add("prop42", cmd_prop42, "restricted permutation bound on admissible systems")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=_nonneg, default=0)
    p.add_argument("--gamma", type=_fraction, required=True)
    p.add_argument("--systems", type=_positive, default=100)

    p = add("prop43", cmd_prop43, "Latin-square count bound on admissible instances")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--gamma", type=_fraction, required=True)
    p.add_argument("--instances", type=_positive, default=20)

    p = add("nls-ratio", cmd_nls_ratio, "prod k!^(n/k) / |L_n| for n <= 5")
    p.add_argument("--n", type=_positive, nargs="+", default=[1, 2, 3, 4, 5])

    p = add("tail", cmd_tail, "distribution of f_CE over sampled squares (observational)")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--c", type=_fraction, required=True)
    p.add_argument("--samples", type=_positive, default=10000)
    p.add_argument("--burn-in", type=_nonneg, dest="burn_in")

    p = add("d3-homology", cmd_d3_homology, "frequency of nonzero H^1 for Y(n, d) (observational)")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--d", type=_positive, default=3)
    p.add_argument("--samples", type=_positive, default=200)
    p.add_argument("--burn-in", type=_nonneg, dest="burn_in")

    p = add("constants", cmd_constants, "the constant chase behind d and epsilon")
    p.add_argument("--c", type=_fraction, default=Fraction(1, 1000))
    p.add_argument("--d", type=float, default=1e11)
    p.add_argument("--d-small", type=_positive, default=201, dest="d_small")
    return parser


_VOLATILE = {"func", "out", "format", "threads", "seed"}


def _plain(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, list):
        return [_plain(x) for x in v]
    return v


def _params(args) -> dict:
    """Parsed options minus those that cannot change the result."""
    return {k: _plain(v) for k, v in sorted(vars(args).items()) if k not in _VOLATILE and k != "command"}


def _set_threads(k: int | None) -> None:
    import numba

    if k is not None:
        numba.set_num_threads(max(1, min(k, numba.config.NUMBA_NUM_THREADS)))


def run(argv: list[str]) -> int:
    if argv and argv[0] == "experiment":
        argv = argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = resolve_seed(args.seed)
    if args.threads is None:
        args.threads = os.cpu_count() or 1
    _set_threads(args.threads)
    start = time.perf_counter()
    try:
        result, failed = args.func(args, seed)
        params = _params(args)
        if args.format == "csv":
            if not isinstance(result, dict) or "rows" not in result:
                raise UsageError(f"{args.command} has no tabular output; use --format json")
            text = io.to_csv(result["rows"])
        else:
            text = io.dumps(io.envelope(args.command, seed, params, result))
    except UsageError as err:
        parser.error(str(err))
    except CapacityError as err:
        print(f"coblab: capacity: {err}", file=sys.stderr)
        return 3
    except InvariantError as err:
        print(f"coblab: invariant: {err}", file=sys.stderr)
        return 4
    except (PreconditionError, DimensionError, ValueError, KeyError, OSError) as err:
        print(f"coblab: error: {err}", file=sys.stderr)
        return 2
    runtime = time.perf_counter() - start
    if args.out:
        man_path = args.out + ".manifest.json"
        io.atomic_write(args.out, text)
        io.atomic_write(man_path, io.dumps(io.manifest(args.command, argv, params, seed, [args.out], runtime)))
    else:
        sys.stdout.write(text)
    if failed:
        print(f"coblab: {args.command}: a checked statement failed", file=sys.stderr)
        return 4
    return 0


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
