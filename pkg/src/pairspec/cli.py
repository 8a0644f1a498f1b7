"""``pairspec`` command line: solve, count, verify, sweep.

Exit codes: 0 pass, 1 verification failure, 2 input error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

from .eigensolve import EigenSolveError, ThresholdBoundaryError, count_below_perturbed
from .femassembly import build_system, export_matrix
from .geometry import DomainKind, GeometryError, PairParameters, make_domain, write_mesh
from .report import SweepPlan, VerifyConfig, run_sweep, solve_domain, sweep_csv, verify_theorem

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

_DOMAINS = [k.value for k in DomainKind]
_SECTORS = {"full": "full", "s": "symmetric", "a": "antisymmetric"}


def _domain_args(p):
    p.add_argument("--domain", choices=_DOMAINS, default="pair")
    p.add_argument("--sector", choices=list(_SECTORS), default="full")
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--L", type=float, default=None, help="truncation distance (default 8d)")
    p.add_argument("--h", type=float, default=None, help="mesh spacing (default d/32)")
    p.add_argument("--scale", type=float, default=1.0, choices=[1.0, 0.5],
                   help="1/2 builds the cross of parameter d/2")


def build_parser():
    parser = argparse.ArgumentParser(prog="pairspec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="lowest eigenpairs of one domain")
    _domain_args(p)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=0.02)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--dump-mesh", metavar="PATH")
    p.add_argument("--export-matrices", metavar="PREFIX",
                   help="write PREFIX_A.txt and PREFIX_B.txt triplet files")

    p = sub.add_parser("count", help="number of eigenvalues below E")
    _domain_args(p)
    p.add_argument("--E", type=float, required=True)

    p = sub.add_parser("verify", help="run the full verification suite")
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.02)
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("sweep", help="(h, L) refinement table from a JSON plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", metavar="PATH")
    return parser


def _emit(text, path=None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _record_csv(rec):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["domain", "sector", "d", "L", "h", "snapped_width", "threshold", "isolated_count",
                "pass", "index", "eigenvalue", "residual"])
    for i, (lam, res) in enumerate(zip(rec["eigenvalues"], rec["residuals"])):
        w.writerow([rec["domain"], rec["sector"], rec["d"], rec["L"], rec["h"], rec["snapped_width"],
                    rec["threshold"], rec["isolated_count"], rec["pass"], i + 1, repr(lam), repr(res)])
    return buf.getvalue()


def _spec(args):
    d = args.d
    L = 8 * d if args.L is None else args.L
    h = d / 32 if args.h is None else args.h
    return make_domain(args.domain, PairParameters(d, L, h), args.scale, sector=_SECTORS[args.sector])


def cmd_solve(args):
    spec = _spec(args)
    system = build_system(spec, deterministic=args.deterministic)
    if args.dump_mesh:
        write_mesh(system.mesh, args.dump_mesh)
    if args.export_matrices:
        export_matrix(system.stiffness, f"{args.export_matrices}_A.txt")
        export_matrix(system.mass, f"{args.export_matrices}_B.txt")
    rec, _, _ = solve_domain(spec.kind, spec.sector, spec.params.d, spec.params.L, spec.params.h,
                             args.k, args.tol, args.seed, args.delta, spec.scale, system=system)
    _emit(json.dumps(rec) if args.format == "json" else _record_csv(rec))
    return EXIT_PASS if rec["pass"] else EXIT_FAIL


def cmd_count(args):
    spec = _spec(args)
    system = build_system(spec)
    n = count_below_perturbed(system.stiffness, system.mass, args.E)
    _emit(json.dumps({"domain": spec.kind.value, "sector": spec.sector, "d": spec.params.d,
                      "L": spec.params.L, "h": spec.params.h, "snapped_width": spec.half_width,
                      "E": args.E, "count": n}))
    return EXIT_PASS


def cmd_verify(args):
    cfg = VerifyConfig(h=args.h, L=args.L, delta=args.delta, seed=args.seed)
    report = verify_theorem(args.d, cfg)
    _emit(report.to_json(), args.out)
    for name in report.failing():
        logging.getLogger("pairspec").error("failed check: %s", name)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_sweep(args):
    table = run_sweep(SweepPlan.from_json(args.plan))
    _emit(json.dumps(table, indent=2) if args.format == "json" else sweep_csv(table), args.out)
    return EXIT_PASS if all(c["status"] == "ok" for c in table["cells"]) else EXIT_SOLVER


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"solve": cmd_solve, "count": cmd_count, "verify": cmd_verify, "sweep": cmd_sweep}[args.command]
    try:
        return handler(args)
    except (GeometryError, ValueError, TypeError, OSError) as exc:
        print(f"pairspec: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EigenSolveError, ThresholdBoundaryError) as exc:
        print(f"pairspec: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
