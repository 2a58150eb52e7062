"""Command-line interface.

Subcommands:
  construct         build the divergent sequence, emit JSON, optionally verify
  verify            re-check a construction result file (or build-and-verify)
  constants         projection L1-norm table as CSV
  uncond            unconditionality ratio experiment
  demo-convergence  scalar (RNP-valued) convergence contrast
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .errors import SplineMartError
from .filtration import parse_filtration_spec
from .intervals import frac


def _add_filtration_arg(p):
    p.add_argument(
        "--filtration",
        default="dyadic",
        help="dyadic | padic:<p> | accum:<point> | file:<path>",
    )


def cmd_construct(args) -> int:
    from .construction import build_sequence
    from .harness import verify_sequence

    filt = parse_filtration_spec(args.filtration)
    seq = build_sequence(filt, args.k, frac(args.eta), args.steps)
    blob = seq.to_json(trace=args.trace)
    out = json.dumps(blob, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        print(out)
    if args.verify:
        report = verify_sequence(seq)
        print(report.render(), file=sys.stderr)
        return 0 if report.all_passed else 1
    return 0


def cmd_verify(args) -> int:
    from .construction import build_sequence
    from .harness import verify_sequence

    if args.infile:
        with open(args.infile) as fh:
            blob = json.load(fh)
        failures = []
        eta = frac(blob["eta"])
        for n, entry in enumerate(blob["E"], start=1):
            bound = 1 - Fraction(1, 2**n) * eta
            if frac(entry["measure"]) < bound:
                failures.append(f"|E_{n}| below (1 - 2^-{n} eta)|V|")
        for row in blob.get("trace_summary", []):
            if row.get("failed"):
                failures.append(f"step {row['step']}: {row['failed']}")
        if failures:
            print("\n".join("FAIL  " + f for f in failures))
            return 1
        print("PASS  recorded measures and trace inequalities hold")
        return 0
    filt = parse_filtration_spec(args.filtration)
    seq = build_sequence(filt, args.k, frac(args.eta), args.steps)
    report = verify_sequence(seq)
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(report.render())
    return 0 if report.all_passed else 1


def cmd_constants(args) -> int:
    from .harness import ConstantsTable, shadrin_profile

    filt = parse_filtration_spec(args.filtration)
    table = ConstantsTable()
    lines = ["level,dimension,l1_norm"]
    for level, dim, norm in shadrin_profile(filt, args.k, args.levels):
        lines.append(f"{level},{dim},{norm!r}")
        table.add("l1_norm", args.k, level, norm)
    out = "\n".join(lines)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)
    return 0


def cmd_uncond(args) -> int:
    from .bspline import ScalarSpline
    from .harness import unconditionality_ratio
    from .projection import ProjectionContext

    import numpy as np

    filt = parse_filtration_spec(args.filtration)
    ctx = ProjectionContext(filt, args.k)
    kv = ctx.knot_vector(args.depth)
    rng = np.random.default_rng(args.seed)
    f = ScalarSpline(kv, rng.uniform(-1.0, 1.0, kv.dim))
    ratio = unconditionality_ratio(ctx, f, args.p, args.trials, seed=args.seed)
    result = {
        "k": args.k,
        "p": args.p,
        "depth": args.depth,
        "trials": args.trials,
        "seed": args.seed,
        "max_ratio": ratio,
    }
    if args.json:
        print(json.dumps(result))
    else:
        print(f"max unconditionality ratio (k={args.k}, p={args.p}): {ratio:.6f}")
    return 0


def cmd_demo_convergence(args) -> int:
    from .harness import scalar_convergence_demo

    filt = parse_filtration_spec(args.filtration)
    result = scalar_convergence_demo(filt, args.k, args.depth, seed=args.seed)
    if args.json:
        print(json.dumps(result))
    else:
        print(
            f"depth {result['depth']}: final increments < {result['tolerance']} on "
            f"{100 * result['final_small_mass_fraction']:.2f}% of [0,1]"
        )
        print("per-level increment sups:", ["%.2e" % s for s in result["increment_sups"]])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splinemart",
        description="martingale spline sequences over interval filtrations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build the divergent sequence")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--eta", default="1/2")
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--out", default=None)
    p.add_argument("--trace", choices=["summary", "full"], default="summary")
    p.add_argument("--verify", action="store_true")
    _add_filtration_arg(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="verify a result file or a fresh build")
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--eta", default="1/2")
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--json", action="store_true")
    _add_filtration_arg(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("constants", help="projection norm table")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--csv", default=None)
    _add_filtration_arg(p)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("uncond", help="unconditionality ratio experiment")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    _add_filtration_arg(p)
    p.set_defaults(func=cmd_uncond)

    p = sub.add_parser("demo-convergence", help="scalar convergence contrast")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    _add_filtration_arg(p)
    p.set_defaults(func=cmd_demo_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SplineMartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
