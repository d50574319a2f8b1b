"""Command-line interface.

Exit codes: 0 on success, 1 when a verification check or a computation
fails, 2 on usage, input or file errors. JSON output is written with sorted
keys so identical inputs give byte-identical reports.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import struct
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, hubplan, labelings, simulate, varsolve
from .errors import DegenerateWidth, DomainError, GraphFormatError, HyperrateError, SizeLimitExceeded
from .hypercore import (
    automorphism_count,
    density_blockwise,
    load_hypergraph,
    max_degree,
    relative_entropy,
)

log = logging.getLogger("hyperrate")

DEFAULT_SEED = 0
_HEADER = struct.Struct("<QQQ")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialization

def _clean(obj):
    if isinstance(obj, dict):
        return {(_clean(k) if isinstance(k, Fraction) else str(k)): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


def to_json_text(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_tensor(path, n: int, r: int, values) -> None:
    """Header ``(n, r, count)`` as little-endian uint64, then float64 values."""
    values = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(n, r, values.shape[0]))
        fh.write(values.tobytes())


def read_tensor(path):
    """Inverse of :func:`write_tensor`: ``(n, r, values)``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise GraphFormatError(f"{path}: truncated tensor header")
    n, r, count = _HEADER.unpack_from(data)
    if count != math.comb(n, r) or len(data) != _HEADER.size + 8 * count:
        raise GraphFormatError(f"{path}: header does not match payload")
    return n, r, np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)


# ---------------------------------------------------------------------------
# argument helpers

def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _fraction_list(text: str) -> list:
    return [_fraction(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _sweep(text: str) -> list:
    try:
        a, b, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"sweep must be start:stop:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError(f"sweep needs stop >= start and step > 0, got {text!r}")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [a + i * step for i in range(count)]


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _probability(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return v


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def _graph(args):
    try:
        return load_hypergraph(args.graph)
    except FileNotFoundError:
        raise UsageError(f"graph file not found: {args.graph}") from None


# ---------------------------------------------------------------------------
# subcommands

def cmd_info(args):
    H = _graph(args)
    try:
        autos = automorphism_count(H)
    except SizeLimitExceeded:
        autos = None
    return 0, {
        "name": H.name,
        "r": H.r,
        "vertices": H.k,
        "edges": [list(e) for e in H.edges],
        "num_edges": H.num_edges,
        "degrees": list(H.degrees),
        "max_degree": max_degree(H),
        "complete": H.is_complete(),
        "automorphisms": autos,
    }


def cmd_labelings(args):
    H = _graph(args)
    L = labelings.enumerate_stable_labelings(H)
    groups = [{"values": list(key), "count": count} for key, count in labelings.multiplicity_groups(L)]
    return 0, {"graph": H.name, "count": len(L), "labelings": [f.to_json() for f in L], "groups": groups}


def _rate(H, delta, args, L):
    if args.restrict:
        return hubplan.rho_restricted(H, delta, args.restrict, labelings=L, seed=args.seed, restarts=args.restarts)
    return hubplan.rho(H, delta, labelings=L, seed=args.seed, restarts=args.restarts)


def cmd_rho(args):
    H = _graph(args)
    if (args.delta is None) == (args.sweep is None):
        raise UsageError("rho needs exactly one of --delta or --sweep")
    L = labelings.enumerate_stable_labelings(H)
    deltas = [args.delta] if args.sweep is None else args.sweep
    rows = [_rate(H, d, args, L).to_json() for d in deltas]
    if args.sweep is None:
        return 0, rows[0]
    return 0, {"graph": H.name, "sweep": rows}


def cmd_plant(args):
    H = _graph(args)
    L = labelings.enumerate_stable_labelings(H)
    res = _rate(H, args.delta, args, L)
    M = hubplan.collection_from_certificate(H, res.certificate, L)
    B = hubplan.plant(H, M, args.n, args.p)
    scale = args.n**H.r * args.p ** max_degree(H) * math.log(1 / args.p) / math.factorial(H.r)
    gain = hubplan.p_value(H, L, M)
    dens = density_blockwise(H, B)
    return 0, {
        "rate": res.to_json(),
        "widths": {k: v for k, v in sorted(hubplan.prefix_widths(H, M, args.n, args.p).items())},
        "class_sizes": list(B.sizes),
        "density": dens,
        "density_ratio": dens / (gain * args.p**H.num_edges),
        "relative_entropy": relative_entropy(B),
        "normalized_entropy": relative_entropy(B) / scale,
        "volume": hubplan.volume(M),
    }


def cmd_varsolve(args):
    H = _graph(args)
    inst = varsolve.VariationalInstance(H, args.n, args.p, args.delta, restarts=args.restarts,
                                        max_iter=args.max_iter, seed=args.seed)
    sol = varsolve.solve_phi(inst)
    if args.dump:
        try:
            write_tensor(args.dump, args.n, H.r, sol.W.values)
        except OSError as exc:
            raise UsageError(f"cannot write {args.dump}: {exc.strerror}") from None
    out = sol.to_json()
    out.update(graph=H.name, n=args.n, p=args.p, delta=args.delta, seed=args.seed)
    return 0, out


def cmd_simulate(args):
    H = _graph(args)
    if not 0.0 <= args.p <= 1.0 or args.delta < -1:
        raise UsageError(f"need 0 <= p <= 1 and delta >= -1, got p={args.p_text} delta={args.delta_text}")
    if args.importance:
        # proposal: the planted construction of the rate certificate
        if args.delta <= 0:
            raise UsageError("--importance needs delta > 0")
        L = labelings.enumerate_stable_labelings(H)
        res = hubplan.rho(H, args.delta, labelings=L, seed=args.seed)
        B = hubplan.plant(H, hubplan.collection_from_certificate(H, res.certificate, L), args.n, args.p)
        proposal = args.p + args.blend * (B.to_weighted().values - args.p)
        rep = simulate.importance_tail_estimate(H, args.n, args.p, args.delta, proposal,
                                                args.samples, args.seed, args.threads)
    else:
        rep = simulate.tail_estimate(H, args.n, args.p, args.delta, args.samples, args.seed, args.threads)
    out = rep.to_json()
    out["graph"] = H.name
    out["sampler"] = "planted_importance" if args.importance else "direct"
    if args.exact:
        exact = simulate.exact_tail(H, args.n, _fraction(args.p_text), _fraction(args.delta_text))
        out["exact_tail"] = exact
        out["exact_tail_float"] = float(exact)
    return 0, out


def cmd_cutnorm(args):
    if args.tensor:
        try:
            n, r, values = read_tensor(args.tensor)
        except FileNotFoundError:
            raise UsageError(f"tensor file not found: {args.tensor}") from None
        from .hypercore import WeightedHypergraph

        dense = WeightedHypergraph(n, r, values).dense - (args.center if args.center is not None else 0.0)
        source = str(args.tensor)
    else:
        n, r = args.n, args.r
        dense = np.random.default_rng(args.seed).standard_normal((n,) * r)
        source = "gaussian"
    out = {"n": n, "r": r, "source": source, "seed": args.seed,
           "heuristic": analysis.cut_norm_heuristic(dense, restarts=args.restarts, seed=args.seed)}
    if args.exact:
        out["exact"] = analysis.cut_norm_exact(dense)
    return 0, out


def cmd_gw(args):
    H = _graph(args)
    rep = analysis.disc_gw_estimate(H, args.n, gaussian_samples=args.samples, seed=args.seed)
    out = rep.to_json()
    out["graph"] = H.name
    out["n"] = args.n
    return 0, out


def cmd_programs(args):
    deltas = [args.delta] if args.sweep is None else args.sweep
    rows = []
    for d in deltas:
        row = {"delta": d, "special": analysis.solve_special_program(d, seed=args.seed).to_json()}
        if args.k is not None:
            row["clique"] = analysis.solve_clique_program(args.k, args.r, d).to_json()
        rows.append(row)
    return 0, rows[0] if args.sweep is None else {"sweep": rows}


def cmd_lemmas(args):
    rep = analysis.entropy_lemma_checks(args.p, grid=args.grid)
    first = rep["first_failure"]
    return (0 if rep["passed"] else 1), {
        "passed": rep["passed"],
        "checks": len(rep["checks"]),
        "failures": sum(not c.passed for c in rep["checks"]),
        "first_failure": None if first is None else first.to_json(),
    }


def cmd_verify(args):
    from .verify import verify_all

    try:
        rep = verify_all("full" if args.full else "quick", seed=args.seed, threads=args.threads,
                         graphs_dir=args.graphs)
    except FileNotFoundError as exc:
        raise UsageError(f"bundled graph not found: {exc}") from None
    for name, secs in rep.timings.items():
        log.info("%s: %.2f s", name, secs)
    return (0 if rep.passed else 1), rep.to_json(timings=args.timings)


# ---------------------------------------------------------------------------
# parser

def _globals(defaults: bool) -> argparse.ArgumentParser:
    # accepted both before and after the subcommand
    g = argparse.ArgumentParser(add_help=False)
    kw = {} if defaults else {"default": argparse.SUPPRESS}
    g.add_argument("--seed", type=int, help="random seed (default 0)", **({"default": DEFAULT_SEED} if defaults else kw))
    g.add_argument("--threads", type=_positive_int, help="worker threads for sampling",
                   **({"default": 1} if defaults else kw))
    g.add_argument("--out", help="write the report here instead of stdout", **({"default": None} if defaults else kw))
    g.add_argument("--format", choices=("json", "csv"), help="report format",
                   **({"default": "json"} if defaults else kw))
    return g


def build_parser() -> argparse.ArgumentParser:
    sub_globals = _globals(False)
    parser = argparse.ArgumentParser(prog="hyperrate", parents=[_globals(True)],
                                     description="Upper-tail rates for subgraph counts in random hypergraphs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[sub_globals], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("info", cmd_info, "summary of a hypergraph")
    p.add_argument("--graph", required=True)

    p = add("labelings", cmd_labelings, "stable labelings as exact rationals")
    p.add_argument("--graph", required=True)

    p = add("rho", cmd_rho, "optimal mixed-hub rate")
    p.add_argument("--graph", required=True)
    p.add_argument("--delta", type=_positive)
    p.add_argument("--sweep", type=_sweep, help="start:stop:step")
    p.add_argument("--restrict", type=_fraction_list, help="allowed labels, e.g. 1,1/2,1/3")
    p.add_argument("--restarts", type=int, default=4)

    p = add("plant", cmd_plant, "planted block model from the rate certificate")
    p.add_argument("--graph", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--p", type=_probability, required=True)
    p.add_argument("--delta", type=_positive, required=True)
    p.add_argument("--restrict", type=_fraction_list)
    p.add_argument("--restarts", type=int, default=4)

    p = add("varsolve", cmd_varsolve, "numerical variational problem")
    p.add_argument("--graph", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--p", type=_probability, required=True)
    p.add_argument("--delta", type=_positive, required=True)
    p.add_argument("--restarts", type=int, default=2)
    p.add_argument("--max-iter", type=_positive_int, default=300)
    p.add_argument("--dump", help="write the optimal weights as a binary tensor")

    p = add("simulate", cmd_simulate, "Monte Carlo upper tail")
    p.add_argument("--graph", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--p", dest="p_text", required=True)
    p.add_argument("--delta", dest="delta_text", required=True)
    p.add_argument("--samples", type=_positive_int, default=10_000)
    p.add_argument("--exact", action="store_true", help="also enumerate every graph")
    p.add_argument("--importance", action="store_true",
                   help="sample from the planted construction and reweight")
    p.add_argument("--blend", type=_probability, default=0.5,
                   help="proposal weight p + blend * (planted - p)")

    p = add("analysis", None, "analytic cross-checks and reduced programs")
    asub = p.add_subparsers(dest="analysis_command", required=True)

    def aadd(name, fn, help_):
        q = asub.add_parser(name, parents=[sub_globals], help=help_)
        q.set_defaults(func=fn)
        return q

    q = aadd("cutnorm", cmd_cutnorm, "cut norm of a tensor dump or a Gaussian tensor")
    q.add_argument("--tensor", help="binary tensor written by varsolve --dump")
    q.add_argument("--center", type=float, help="subtract this constant first (e.g. p)")
    q.add_argument("--n", type=_positive_int, default=6)
    q.add_argument("--r", type=_positive_int, default=2)
    q.add_argument("--restarts", type=_positive_int, default=50)
    q.add_argument("--exact", action="store_true")

    q = aadd("gw", cmd_gw, "Gaussian width estimates")
    q.add_argument("--graph", required=True)
    q.add_argument("--n", type=_positive_int, required=True)
    q.add_argument("--samples", type=_positive_int, default=200)

    q = aadd("programs", cmd_programs, "reduced convex programs")
    q.add_argument("--delta", type=_positive, default=1.0)
    q.add_argument("--sweep", type=_sweep)
    q.add_argument("--k", type=int)
    q.add_argument("--r", type=int)

    q = aadd("lemmas", cmd_lemmas, "relative entropy estimates")
    q.add_argument("--p", type=_float_list, default=[1e-3, 1e-4, 1e-5, 1e-6])
    q.add_argument("--grid", type=_positive_int, default=20)

    p = add("verify", cmd_verify, "run every cross-check")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--quick", action="store_true", help="skip the largest runs (default)")
    mode.add_argument("--full", action="store_true")
    p.add_argument("--graphs", help="directory holding the bundled instances")
    p.add_argument("--timings", action="store_true", help="include wall times (breaks byte identity)")
    return parser


def _csv_text(command: str, payload) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if command == "rho":
        rows = payload["sweep"] if "sweep" in payload else [payload]
        writer.writerow(["delta", "rho", "method"])
        for row in rows:
            writer.writerow([repr(float(row["delta"])), repr(float(row["rho"])), row["method"]])
    elif command == "verify":
        writer.writerow(["name", "pass", "observed", "expected", "tolerance"])
        for c in payload["checks"]:
            writer.writerow([c["name"], c["pass"], c["observed"], c["expected"], c["tolerance"]])
    else:
        raise UsageError(f"--format csv is not supported by {command}")
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if args.command == "simulate":
        try:
            args.p = float(_fraction(args.p_text))
            args.delta = float(_fraction(args.delta_text))
        except argparse.ArgumentTypeError as exc:
            parser.error(str(exc))
    try:
        code, payload = args.func(args)
        text = _csv_text(args.command, _clean(payload)) if args.format == "csv" else to_json_text(payload)
        if args.out:
            try:
                Path(args.out).write_text(text)
            except OSError as exc:
                raise UsageError(f"cannot write {args.out}: {exc.strerror}") from None
        else:
            sys.stdout.write(text)
        return code
    except (UsageError, GraphFormatError, DomainError, SizeLimitExceeded, DegenerateWidth) as exc:
        print(f"hyperrate: error: {exc}", file=sys.stderr)
        return 2
    except HyperrateError as exc:
        print(f"hyperrate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
