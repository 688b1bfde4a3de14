"""Command-line front end: ``cspref gen | refute | predicate | hypergraph``.

Exit codes: 0 when every run produced a bound, 2 when some run returned
"fail", 1 on usage or input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .hypergraph import Hypergraph, certify_chromatic, certify_independence, sample_hypergraph
from .instances import Instance, read_dimacs, sample_fixed_m, sample_instance, sample_planted
from .polynomials import library_separator, verify_separating
from .predicates import named_predicate, parse_predicate_spec
from .refute import (
    _map,
    certify_quasirandom,
    certify_t_quasirandom,
    delta_refute,
    refute,
    strong_refute,
    xor_strong_refute,
)
from .spectral import DEFAULT_CAP_DIM
from .twise import EXACT_LP_MAX_K, exceeds_granularity, granularity_bound, granularity_K, twise_distance

log = logging.getLogger("cspref")

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _frac(v) -> str:
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def _seeds(args) -> list[int]:
    return args.seed if args.seed else [0]


def _sweep(spec: str | None) -> list[float] | None:
    """'1000,2000,4000' or 'start:stop:count' (geometric)."""
    if not spec:
        return None
    if ":" in spec:
        a, b, c = spec.split(":")
        a, b, c = float(a), float(b), int(c)
        if c < 2:
            return [a]
        return [a * (b / a) ** (i / (c - 1)) for i in range(c)]
    return [float(v) for v in spec.split(",") if v]


# --- gen -----------------------------------------------------------------------------------


def _sample(args, seed: int, p=None, m=None) -> Instance:
    pred = parse_predicate_spec(args.pred)
    p = args.p if p is None and m is None else p
    m = args.m if p is None and m is None else m
    if args.planted:
        if m is None:
            raise UsageError("--planted needs --m")
        inst, _ = sample_planted(pred, args.n, int(m), seed)
        return inst
    if p is not None:
        return sample_instance(pred, args.n, p, seed)
    return sample_fixed_m(pred, args.n, int(m), seed)


def _seed_path(out: str | None, seed: int, many: bool) -> str | None:
    if out is None or out == "-":
        return out
    if "{seed}" in out:
        return out.format(seed=seed)
    if many:
        path = Path(out)
        return str(path.with_name(f"{path.stem}-{seed}{path.suffix}"))
    return out


def cmd_gen(args) -> int:
    seeds = _seeds(args)
    for seed in seeds:
        if args.uniformity:
            if args.p is None:
                raise UsageError("hypergraph sampling needs --p")
            H = sample_hypergraph(args.n, args.p, args.uniformity, seed)
            text = _dump(H.to_dict())
        else:
            if args.pred is None:
                raise UsageError("--pred is required")
            text = _dump(_sample(args, seed).to_dict())
        _write(text, _seed_path(args.out, seed, len(seeds) > 1))
    return EXIT_OK


# --- refute ----------------------------------------------------------------------------------


def _load_instance(path: str) -> Instance:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return Instance.from_dict(json.loads(text))
    return read_dimacs(text)


def _run_refute(inst: Instance, args) -> dict:
    kw = {"cap_dim": args.cap_dim}
    method = args.method
    if method == "auto":
        out = refute(inst, args.t, **kw)
    elif method == "strong":
        out = strong_refute(inst, **kw)
    elif method == "xor":
        out = xor_strong_refute(inst, **kw)
    elif method == "quasirandom":
        out = certify_quasirandom(inst, **kw)
    elif method == "t-quasirandom":
        out = certify_t_quasirandom(inst, args.t or 2, **kw)
    elif method == "delta":
        if args.separator:
            name, _, param = args.separator.partition(":")
            sep = library_separator(name, int(param))
            out = delta_refute(inst, sep.polynomial, sep.delta, **kw)
        else:
            res = twise_distance(inst.predicate, args.t or inst.k)
            out = delta_refute(inst, res.dual, res.delta, verify=False, **kw)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown method {method}")
    report = out.to_dict()
    report.pop("seconds", None) if args.no_timing else None
    return report


def cmd_refute(args) -> int:
    jobs = []
    if args.input:
        for path in args.input:
            jobs.append(("file", path, None))
    else:
        if args.pred is None or args.n is None:
            raise UsageError("give instance files or --pred/--n with --p or --m")
        grid = _sweep(args.sweep)
        for seed in _seeds(args):
            if grid is None:
                jobs.append(("gen", seed, None))
            else:
                for val in grid:
                    jobs.append(("gen", seed, val))

    def work(job):
        kind, ref, val = job
        if kind == "file":
            inst = _load_instance(ref)
            row = {"source": ref}
        else:
            if val is None:
                inst = _sample(args, ref)
            elif args.p is not None:
                inst = _sample(args, ref, p=val)
            else:
                inst = _sample(args, ref, m=int(val))
            row = {"seed": ref, "grid": val}
        report = _run_refute(inst, args)
        row.update({"n": inst.n, "m": inst.m, "k": inst.k, "report": report})
        return row

    rows = _map(work, jobs)
    n_bound = sum(r["report"]["verdict"] == "bound" for r in rows)
    aggregate = {"runs": len(rows), "bounds": n_bound, "fails": len(rows) - n_bound}
    if args.target is not None:
        hits = sum(r["report"]["verdict"] == "bound" and r["report"]["bound"] <= args.target for r in rows)
        aggregate["target"] = args.target
        aggregate["success_rate"] = hits / len(rows) if rows else 0.0
    if args.format == "csv":
        buf = io.StringIO()
        fields = ["source", "seed", "grid", "n", "m", "k", "kind", "verdict", "bound", "delta"]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            rep = r["report"]
            writer.writerow({"source": r.get("source", ""), "seed": r.get("seed", ""), "grid": r.get("grid", ""),
                             "n": r["n"], "m": r["m"], "k": r["k"], "kind": rep["kind"],
                             "verdict": rep["verdict"], "bound": rep["bound"], "delta": rep.get("delta", "")})
        text = buf.getvalue()
    else:
        text = _dump({"rows": rows, "aggregate": aggregate} if len(rows) != 1 else rows[0]["report"])
    _write(text, args.out)
    return EXIT_OK if n_bound == len(rows) else EXIT_FAIL


# --- predicate -----------------------------------------------------------------------------------


def cmd_predicate(args) -> int:
    pred = parse_predicate_spec(args.pred)
    report = {"predicate": pred.to_dict(), "k": pred.k}
    if pred.has_table:
        report["mean"] = _frac(pred.mean())
    if pred.k > EXACT_LP_MAX_K:
        if not args.separator:
            raise UsageError(f"exact LP needs k <= {EXACT_LP_MAX_K}")
    else:
        t_max = min(pred.k, args.t or pred.k)
        rows = []
        for t in range(1, t_max + 1):
            res = twise_distance(pred, t)
            rows.append({
                "t": t,
                "delta": _frac(res.delta),
                "status": res.status,
                "granularity_K": granularity_K(pred.k, t),
                "granularity_bound": granularity_bound(pred.k, t),
                "above_granularity": res.delta == 0 or exceeds_granularity(res.delta, pred.k, t),
                "dual_separates": verify_separating(pred, res.dual, res.delta),
                "dual_polynomial": res.dual.to_dict(),
                "primal_support": sorted(f"{i:x}" for i in res.primal),
            })
        report["lp"] = rows
    if args.separator:
        name, _, param = args.separator.partition(":")
        sep = library_separator(name, int(param))
        entry = {"name": sep.name, "param": int(param), "k": sep.k,
                 "delta": str(sep.delta), "theta1": str(sep.theta1), "theta0": str(sep.theta0)}
        if name == "huang":
            from .polynomials import verify_huang
            entry["checks"] = verify_huang(int(param), sep.polynomial, sep.delta, samples=args.samples)
        else:
            target = _library_target(name, int(param))
            entry["verified"] = verify_separating(target, sep.polynomial, sep.delta)
        report["separator"] = entry
    _write(_dump(report), args.out)
    return EXIT_OK


def _library_target(name: str, k: int):
    if name == "thr_minus1":
        return named_predicate("thr", k=k, theta=-1)
    if name == "maj":
        return named_predicate("maj", k=k)
    if name == "thr_halfsqrt":
        return named_predicate("thr_halfsqrt", k=k)
    raise UsageError(f"unknown separator {name}")


# --- hypergraph ---------------------------------------------------------------------------------


def _load_hypergraph(path: str, n: int | None, k: int | None) -> Hypergraph:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    if text.lstrip().startswith("{"):
        return Hypergraph.from_dict(json.loads(text))
    return Hypergraph.from_edge_list(text, n=n, k=k)


def cmd_hypergraph(args) -> int:
    jobs = []
    if args.input:
        jobs = [("file", path) for path in args.input]
    else:
        if args.n is None or args.p is None:
            raise UsageError("give hypergraph files or --n/--p/--uniformity")
        jobs = [("gen", seed) for seed in _seeds(args)]

    def work(job):
        kind, ref = job
        if kind == "file":
            H = _load_hypergraph(ref, args.n, args.uniformity)
            row = {"source": ref}
        else:
            H = sample_hypergraph(args.n, args.p, args.uniformity or 3, ref)
            row = {"seed": ref}
        p = args.p if args.p is not None else H.meta.get("p")
        if p is None:
            raise UsageError("--p is required for hypergraphs without sampling metadata")
        row.update({"n": H.n, "k": H.k, "edges": H.n_edges, "p": p})
        if args.xi:
            verdict = certify_chromatic(H, p, args.xi, cap_dim=args.cap_dim)
            row["chromatic"] = {"certified": verdict.certified, "xi": verdict.xi, "threshold": verdict.threshold,
                                "status": "chi > xi certified" if verdict.certified else "not certified"}
            row["independence"] = verdict.independence.to_dict()
        else:
            row["independence"] = certify_independence(H, p, cap_dim=args.cap_dim).to_dict()
        return row

    rows = _map(work, jobs)
    text = _dump(rows[0] if len(rows) == 1 else {"rows": rows})
    _write(text, args.out)
    return EXIT_OK


# --- parser ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cspref", description="Random CSP refutation certificates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, density=True):
        p.add_argument("--pred", help="predicate, e.g. xor:3, or:3, thr:5,-1, maj:3, huang:4")
        p.add_argument("--n", type=int)
        if density:
            g = p.add_mutually_exclusive_group()
            g.add_argument("--p", type=float)
            g.add_argument("--m", type=float)
        p.add_argument("--seed", type=int, action="append", help="repeatable")
        p.add_argument("--out", help="output path ('-' for stdout); '{seed}' is expanded")
        p.add_argument("--cap-dim", type=int, default=DEFAULT_CAP_DIM)

    g = sub.add_parser("gen", help="sample instances or hypergraphs")
    common(g)
    g.add_argument("--planted", action="store_true", help="plant a satisfying assignment (needs --m)")
    g.add_argument("--uniformity", type=int, help="sample a k-uniform hypergraph instead")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("refute", help="certify upper bounds on Opt")
    common(r)
    r.add_argument("input", nargs="*", help="instance JSON or DIMACS files")
    r.add_argument("--t", type=int)
    r.add_argument("--method", default="auto",
                   choices=["auto", "strong", "xor", "quasirandom", "t-quasirandom", "delta"])
    r.add_argument("--separator", help="library separator for --method delta, e.g. thr_minus1:5")
    r.add_argument("--planted", action="store_true")
    r.add_argument("--format", choices=["json", "csv"], default="json")
    r.add_argument("--sweep", help="grid over p (with --p) or m (with --m): 'a,b,c' or 'lo:hi:count'")
    r.add_argument("--target", type=float, help="count bounds <= target in the aggregate")
    r.add_argument("--no-timing", action="store_true", help="omit timing fields")
    r.set_defaults(func=cmd_refute)

    q = sub.add_parser("predicate", help="LP distances and separators for a predicate")
    q.add_argument("--pred", required=True)
    q.add_argument("--t", type=int, help="largest t (default k)")
    q.add_argument("--separator", help="also verify a library separator, e.g. maj:25 or huang:9")
    q.add_argument("--samples", type=int, default=10_000)
    q.add_argument("--out")
    q.set_defaults(func=cmd_predicate)

    h = sub.add_parser("hypergraph", help="independence / chromatic certificates")
    h.add_argument("input", nargs="*", help="hypergraph JSON or edge-list files")
    h.add_argument("--n", type=int)
    h.add_argument("--p", type=float)
    h.add_argument("--uniformity", "--k", dest="uniformity", type=int)
    h.add_argument("--xi", type=int, help="try to certify chi(H) > xi")
    h.add_argument("--seed", type=int, action="append")
    h.add_argument("--out")
    h.add_argument("--cap-dim", type=int, default=DEFAULT_CAP_DIM)
    h.set_defaults(func=cmd_hypergraph)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors; map to 1
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"cspref: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
