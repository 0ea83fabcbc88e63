"""Command-line front end: ``chainbound {moments,test,reconstruct,synth}``.

All machine-readable output is JSON with sorted keys, written atomically;
human summaries go to standard output. Exit codes: 0 success (or bounds),
1 bad input, 2 numerical failure, 3 internal error, 4 rejects,
5 inconclusive. ``CHAINBOUND_THREADS`` caps the BLAS worker count.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import synth
from .curve import dump_curve, load_curve
from .errors import ChainboundError, InputError
from .membership import (BOUNDS, REJECTS, FitSettings, Tolerances, Verdict,
                         minimal_level_search, solve_level, solve_level1, test_level0)
from .moments import N0, N_MAX, MomentTable, Quadrature, compute_moments
from .reconstruct import compare_to_truth, reconstruct_sheets, sheets_to_json

DEFAULT_LMAX = 4
EXIT_STATUS = {BOUNDS: 0, REJECTS: 4}
EXIT_INCONCLUSIVE = 5


class _Parser(argparse.ArgumentParser):
    """Argument errors are input errors (exit 1), not argparse's exit 2."""

    def error(self, message):
        raise InputError(message)


def write_json(doc, path: str | os.PathLike | None) -> None:
    """Deterministic JSON; to stdout when ``path`` is None, else via temp file + rename."""
    text = json.dumps(doc, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def parse_complex_list(text: str) -> list[complex]:
    """``"0, 0.2, 0.1+0.1j"`` or the path of a JSON list of numbers / [re, im] pairs."""
    if text and Path(text).is_file():
        items = read_json(text)
        try:
            return [complex(*v) if isinstance(v, list) else complex(v) for v in items]
        except TypeError as exc:
            raise InputError(f"bad point list in {text}: {exc}") from exc
    try:
        return [complex(tok.strip().replace(" ", "")) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse complex list {text!r}") from exc


def _quadrature(args) -> Quadrature:
    return Quadrature(nodes=args.nodes, max_nodes=args.nmax)


def _tolerances(args) -> Tolerances:
    try:
        return Tolerances(args.tol_accept, args.tol_reject)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _orders(args) -> tuple[int, int]:
    top = args.level if getattr(args, "level", None) is not None else args.lmax
    dmax = args.dmax if args.dmax is not None else 2 * top + 2
    kmax = args.kmax if args.kmax is not None else 4 * top + 8
    if dmax < 1 or kmax < 1:
        raise InputError("--dmax and --kmax must be positive")
    return dmax, kmax


def _table(args) -> MomentTable:
    if args.table:
        return MomentTable.from_json(read_json(args.table))
    if not args.curve:
        raise InputError("give --curve or --table")
    dmax, kmax = _orders(args)
    return compute_moments(load_curve(args.curve), dmax, kmax, _quadrature(args))


def cmd_moments(args) -> int:
    if not args.curve:
        raise InputError("--curve is required")
    dmax, kmax = _orders(args)
    table = compute_moments(load_curve(args.curve), dmax, kmax, _quadrature(args))
    write_json(table.to_json(), args.out)
    if args.out:
        norm = np.abs(table.normalized())
        tails = [norm[i, sum(a) + 1:] for i, a in enumerate(table.alphas) if sum(a) > 0]
        tail_max = max((float(np.max(t, initial=0.0)) for t in tails), default=0.0)
        flat = np.argsort(norm, axis=None)[::-1][:5]
        print(f"moments: dmax={dmax} kmax={kmax} nodes={table.diagnostics.get('nodes')} "
              f"converged={table.converged} radius={table.radius:.6g}")
        print(f"largest tail entry (|A_k| radius^k, k > |alpha|): {tail_max:.3e}")
        for idx in flat:
            i, k = np.unravel_index(idx, norm.shape)
            print(f"  A_{k}{table.alphas[i]} = {complex(table.values[i, k]):.6g}")
    return 0


def cmd_test(args) -> int:
    table = _table(args)
    tol = _tolerances(args)
    fit = FitSettings(seed=args.seed)
    if args.level is not None:
        if args.level == 0:
            verdict = test_level0(table, tol)
        elif args.level == 1 and table.q == 1:
            verdict = solve_level1(table, fit, tol)
        else:
            verdict = solve_level(table, args.level, fit, tol)
    else:
        verdict = minimal_level_search(table, args.lmax, fit, tol)
    write_json(verdict.to_json(), args.out)
    if args.out:
        print(f"test: level={verdict.level} status={verdict.status} "
              f"residual_rel={verdict.residual_rel:.3e}")
    return EXIT_STATUS.get(verdict.status, EXIT_INCONCLUSIVE)


def cmd_reconstruct(args) -> int:
    if not args.verdict:
        raise InputError("--verdict is required")
    if not args.curve:
        raise InputError("--curve is required")
    if not args.points:
        raise InputError("--points is required")
    verdict = Verdict.from_json(read_json(args.verdict))
    spec = load_curve(args.curve)
    points = parse_complex_list(args.points)
    samples = reconstruct_sheets(spec, verdict, points, _quadrature(args))
    write_json(sheets_to_json(samples), args.out)
    if args.out:
        flagged = sum(s.flagged for s in samples)
        print(f"reconstruct: {len(samples)} points, level {verdict.level}, {flagged} flagged")
    if args.truth:
        truth = synth.GroundTruth.from_json(read_json(args.truth))
        dist = compare_to_truth(samples, [truth.evaluate(p) for p in points])
        print(f"max matched distance to truth: {dist:.3e}")
    return 0


def _truth_path(args) -> Path | None:
    if args.truth:
        return Path(args.truth)
    if args.out:
        out = Path(args.out)
        return out.with_name(out.stem + ".truth.json")
    return None


def cmd_synth(args) -> int:
    kind = args.generator
    if kind == "graph":
        spec, truth = synth.graph_boundary(parse_complex_list(args.num), parse_complex_list(args.den),
                                           complex(args.center), args.radius, args.orientation,
                                           args.multiplicity)
    elif kind == "random-graph":
        rng = np.random.default_rng(args.seed)
        spec, truth = synth.random_graph(rng, args.degree, args.rational, complex(args.center),
                                         args.radius)
    elif kind == "algebraic":
        try:
            rows = json.loads(args.coeffs)
            coeffs = [[complex(*c) if isinstance(c, list) else complex(c) for c in row] for row in rows]
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise InputError(f"--coeffs must be a JSON matrix: {exc}") from exc
        spec, truth = synth.algebraic_boundary(coeffs, complex(args.center), args.radius,
                                               args.multiplicity)
    elif kind == "transcendental":
        spec, truth = synth.transcendental_boundary(args.kind, complex(args.center), args.radius,
                                                    args.scale)
    elif kind == "sum":
        parts = []
        for path in args.parts:
            part = load_curve(path)
            sidecar = Path(path).with_name(Path(path).stem + ".truth.json")
            parts.append((part, synth.GroundTruth.from_json(read_json(sidecar))
                          if sidecar.is_file() else None))
        (a, ta), (b, tb) = parts
        result = synth.sum_boundaries(a, b, ta, tb)
        spec, truth = result if isinstance(result, tuple) else (result, None)
    else:  # pragma: no cover - argparse restricts the choices
        raise InputError(f"unknown generator {kind}")
    write_json(dump_curve(spec), args.out)
    tpath = _truth_path(args)
    if truth is not None and tpath is not None:
        write_json(truth.to_json(), tpath)
    if args.out:
        level = truth.expected_level if truth is not None else "unknown"
        print(f"synth {kind}: {len(spec.loops)} loop(s), expected level {level}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output JSON path (default: stdout, no summary)")
    quad = _Parser(add_help=False)
    quad.add_argument("--nodes", type=int, default=N0, help="initial quadrature nodes")
    quad.add_argument("--nmax", type=int, default=N_MAX, help="node cap for doubling")
    orders = _Parser(add_help=False)
    orders.add_argument("--curve", help="curve JSON document")
    orders.add_argument("--dmax", type=int, help="largest |alpha| (default 2*level+2)")
    orders.add_argument("--kmax", type=int, help="largest Taylor degree (default 4*level+8)")
    orders.add_argument("--lmax", type=int, default=DEFAULT_LMAX, help="largest level searched")

    parser = _Parser(prog="chainbound", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("moments", parents=[common, quad, orders], help="compute a moment table")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("test", parents=[common, quad, orders], help="run the membership test")
    p.add_argument("--table", help="moment table JSON (instead of --curve)")
    p.add_argument("--level", type=int, help="test this level only")
    p.add_argument("--tol-accept", type=float, default=1e-6)
    p.add_argument("--tol-reject", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("reconstruct", parents=[common, quad], help="sheets near the base point")
    p.add_argument("--curve", help="curve JSON document")
    p.add_argument("--verdict", help="verdict JSON with status bounds")
    p.add_argument("--points", help="comma-separated complex points or a JSON file")
    p.add_argument("--truth", help="truth sidecar to compare against")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("synth", help="generate a curve and its truth sidecar")
    gens = p.add_subparsers(dest="generator", required=True, parser_class=_Parser)
    circle = _Parser(add_help=False)
    circle.add_argument("--center", default="0", help="circle center (complex)")
    circle.add_argument("--radius", type=float, default=1.0)
    circle.add_argument("--truth", help="truth sidecar path (default: <out>.truth.json)")

    g = gens.add_parser("graph", parents=[common, circle])
    g.add_argument("--num", required=True, help="numerator coefficients, ascending powers")
    g.add_argument("--den", default="1", help="denominator coefficients, ascending powers")
    g.add_argument("--orientation", type=int, default=1, choices=(1, -1))
    g.add_argument("--multiplicity", type=int, default=1)
    g = gens.add_parser("random-graph", parents=[common, circle])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--degree", type=int, default=3)
    g.add_argument("--rational", action="store_true")
    g = gens.add_parser("algebraic", parents=[common, circle])
    g.add_argument("--coeffs", required=True,
                   help="JSON matrix; entry [i][j] multiplies z^i w^j (numbers or [re, im])")
    g.add_argument("--multiplicity", type=int, default=1)
    g = gens.add_parser("transcendental", parents=[common, circle])
    g.add_argument("--kind", default="exp_cos", choices=synth.TRANSCENDENTAL_KINDS)
    g.add_argument("--scale", type=float, default=1.0)
    g = gens.add_parser("sum", parents=[common])
    g.add_argument("parts", nargs=2, help="two curve documents (sidecars picked up if present)")
    g.add_argument("--truth", help="truth sidecar path (default: <out>.truth.json)")
    p.set_defaults(func=cmd_synth)
    return parser


def _thread_cap() -> int | None:
    raw = os.environ.get("CHAINBOUND_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError as exc:
        raise InputError(f"CHAINBOUND_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise InputError("CHAINBOUND_THREADS must be positive")
    return n


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        with threadpool_limits(limits=_thread_cap()):
            return args.func(args)
    except ChainboundError as exc:
        print(f"chainbound: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort exit code for the shell
        print(f"chainbound: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return ChainboundError.exit_code


if __name__ == "__main__":
    sys.exit(main())
