"""``freelip`` command-line entry point."""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import ck_approx as ck
from . import textio
from .constructions import adfamily as adf
from .constructions import gluing, retractions
from .free_norm import free_norm_dual, free_norm_primal
from .harness import (SUITES, Check, ExperimentConfig, SuiteReport, emit_report, pair_witness,
                      run_suite)
from .metric_core import lip_norm
from .sampling import random_function, random_molecule, trial_rng


def _default_seed() -> int:
    raw = os.environ.get("FREELIP_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"FREELIP_SEED must be an integer, got {raw!r}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=None, help="PRNG seed (default: $FREELIP_SEED or 0)")
    g.add_argument("--trials", type=int, default=None, help="number of trials")
    g.add_argument("--format", choices=("human", "machine"), default="human")
    g.add_argument("--tolerance", type=float, default=None, help="override the check tolerance")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="freelip", parents=[common],
                                     description="Lipschitz-free space laboratory.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common], help="free norm of a molecule")
    p.add_argument("--space", required=True, type=Path)
    p.add_argument("--molecule", required=True, type=Path)
    p.add_argument("--method", choices=("primal", "dual", "both"), default="both")
    p.add_argument("--plan-out", type=Path, help="write the optimal transport plan here")
    p.add_argument("--certificate-out", type=Path, help="write the dual certificate here")

    p = sub.add_parser("glue-check", parents=[common], help="check a glued space")
    p.add_argument("--spec", required=True, type=Path)

    p = sub.add_parser("retract-audit", parents=[common], help="Lipschitz audit of a retraction")
    p.add_argument("--kind", choices=("block", "c0"), required=True)
    p.add_argument("--blocks", type=int, default=8)
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--explicit", type=int, default=16)

    p = sub.add_parser("adfamily", parents=[common], help="almost disjoint family")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)

    p = sub.add_parser("partition-demo", parents=[common], help="projections along a refinement chain")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--function", default="binary-embed", help="const | firstbits:k | binary-embed")
    p.add_argument("--chain", choices=("uniform",), default="uniform")

    p = sub.add_parser("suite", parents=[common], help="run one experiment suite")
    p.add_argument("name", choices=SUITES + ("all",))
    _size_options(p)

    p = sub.add_parser("all", parents=[common], help="run every experiment suite")
    _size_options(p)
    return parser


def _size_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--blocks", type=int, default=8)
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--horizon", type=int, default=4096)
    p.add_argument("--count", type=int, default=64)


def _single(name: str, args, check: Check) -> SuiteReport:
    cfg = ExperimentConfig("all", seed=args.seed, trials=args.trials)
    return SuiteReport(name, cfg, [check])


def cmd_norm(args) -> int:
    space = textio.load_space(args.space)
    report = space.validation
    if not report.ok:
        print(f"invalid space:\n{report}", file=sys.stderr)
        return 2
    mu = textio.load_molecule(args.molecule, space)
    values = {}
    if args.method in ("primal", "both"):
        values["primal"], plan = free_norm_primal(mu)
        if args.plan_out:
            args.plan_out.write_text(textio.format_plan(plan, space))
    if args.method in ("dual", "both"):
        values["dual"], cert = free_norm_dual(mu)
        if args.certificate_out:
            args.certificate_out.write_text(textio.format_function(cert.f))
    ok = True
    if args.method == "both":
        gap = abs(values["primal"] - values["dual"])
        tol = args.tolerance if args.tolerance is not None else 1e-7
        ok = gap <= tol * (1 + values["primal"])
        values["gap"] = gap
    if args.format == "machine":
        print(" ".join(f"{k}={v!r}" for k, v in values.items()) + f" verdict={'pass' if ok else 'fail'}")
    else:
        for k, v in values.items():
            print(f"{k:<8}{v:.12g}")
    return 0 if ok else 1


def parse_glue_spec(path: Path) -> gluing.GluedSpace:
    """Glue spec: ``rule l1|sup|explicit``, ``component FILE`` lines (paths
    relative to that file), and ``cross NAME NAME VALUE`` lines for the
    explicit rule."""
    rule = None
    comps = []
    cross = {}
    for no, line in textio.content_lines(path.read_text()):
        toks = line.split()
        if toks[0] == "rule" and len(toks) == 2:
            rule = toks[1]
        elif toks[0] == "component" and len(toks) == 2:
            comps.append(textio.load_space(path.parent / toks[1]))
        elif toks[0] == "cross" and len(toks) == 4:
            cross[(toks[1], toks[2])] = textio.parse_number(toks[3], no)
        else:
            raise textio.FormatError(f"line {no}: cannot parse {line!r}")
    if rule is None:
        raise textio.FormatError("glue spec needs a 'rule' line")
    return gluing.glue(comps, rule, cross=cross if rule == "explicit" else None)


def cmd_glue_check(args) -> int:
    g = parse_glue_spec(args.spec)
    c = gluing.orthogonality_constant(g)
    slack = args.tolerance if args.tolerance is not None else 1e-9
    max_ratio, witness = 0.0, None
    dec_lo, dec_hi = np.inf, 0.0
    for t in range(args.trials):
        rng = trial_rng(args.seed, "glue-check", t)
        fs = [random_function(rng, comp) for comp in g.components]
        top = max(lip_norm(f) for f in fs)
        ratio = lip_norm(gluing.glue_function(g, fs)) / top if top > 0 else 0.0
        if ratio > max_ratio or witness is None:
            max_ratio, witness = max(ratio, max_ratio), {"trial": t}
        mu = random_molecule(rng, g.ambient)
        amb, total = gluing.decomposition_ratio(g, mu)
        if amb > 0:
            dec_lo, dec_hi = min(dec_lo, total / amb), max(dec_hi, total / amb)
    passed = max_ratio <= c + slack and (dec_lo == np.inf or (dec_lo >= 1 - slack and dec_hi <= c + slack))
    check = Check("glue-check", g.cross_rule, passed,
                  {"trials": args.trials, "seed": args.seed, "components": g.n_components,
                   "constant": c, "max_ratio": max_ratio, "bound": c,
                   "decomposition_min": None if dec_lo == np.inf else dec_lo,
                   "decomposition_max": dec_hi},
                  witness)
    print(emit_report(_single("glue-check", args, check), args.format), end="")
    return 0 if passed else 1


def cmd_retract_audit(args) -> int:
    rng = trial_rng(args.seed, f"retract-audit-{args.kind}", 0)
    if args.kind == "block":
        audit = retractions.block_retraction_lipschitz_audit(args.trials, rng=rng, blocks=args.blocks,
                                                            width=args.width)
        extra = {"zero_case_max": audit.case_max["zero"], "distinct_case_max": audit.case_max["distinct"]}
    else:
        audit = retractions.c0_retract_lipschitz_audit(args.trials, rng=rng, explicit=args.explicit)
        extra = {}
    if args.tolerance is not None:
        audit.slack = args.tolerance
    check = Check("retract-audit", args.kind, audit.verdict,
                  {"trials": args.trials, "seed": args.seed, "max_ratio": audit.max_ratio,
                   "bound": audit.bound, **extra},
                  {"witness_pair": pair_witness(audit.witness_pair)})
    print(emit_report(_single("retract-audit", args, check), args.format), end="")
    return 0 if audit.verdict else 1


def cmd_adfamily(args) -> int:
    fam = adf.ad_family(args.count, args.horizon)
    rep = adf.verify_ad_family(fam)
    check = Check("adfamily", "intersections", rep.verdict,
                  {"trials": rep.pairs, "seed": args.seed, "count": args.count, "horizon": args.horizon,
                   "max_intersection": rep.max_intersection, "bound": rep.bound,
                   "increasing": rep.strictly_increasing},
                  {"witness_pair": list(rep.witness) if rep.witness else None})
    print(emit_report(_single("adfamily", args, check), args.format), end="")
    return 0 if rep.verdict else 1


def make_function(space: ck.CantorApprox, name: str) -> ck.CantorFunction:
    if name == "const":
        return ck.constant_function(space, 1.0)
    if name == "binary-embed":
        return ck.binary_embedding(space)
    if name.startswith("firstbits:"):
        try:
            k = int(name.split(":", 1)[1])
        except ValueError:
            raise SystemExit(f"bad function {name!r}")
        return ck.first_bits_function(space, k)
    raise SystemExit(f"unknown function {name!r}; use const, firstbits:k or binary-embed")


def cmd_partition_demo(args) -> int:
    space = ck.CantorApprox(args.depth)
    f = make_function(space, args.function)
    report = ck.projection_converges(f, ck.uniform_chain(args.depth))
    if args.format == "machine":
        for i, cells, mesh, dev, bound in report.rows:
            print(f"node={i} cells={cells} mesh={mesh!r} deviation={dev!r} bound={bound!r}")
        print(f"verdict={'pass' if report.verdict else 'fail'}")
    else:
        print(report.table())
    return 0 if report.verdict else 1


def cmd_suite(args, name: str) -> int:
    cfg = ExperimentConfig(name, seed=args.seed, trials=args.trials, points=args.points,
                           blocks=args.blocks, width=args.width, depth=args.depth,
                           horizon=args.horizon, count=args.count, tolerance=args.tolerance)
    report = run_suite(cfg)
    print(emit_report(report, args.format), end="")
    return 0 if report.verdict else 1


DEFAULT_TRIALS = {"glue-check": 100, "retract-audit": 100_000, "suite": 100, "all": 100}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is None:
        args.seed = _default_seed()
    if not 0 <= args.seed < 2**64:
        print("seed must be a 64-bit unsigned integer", file=sys.stderr)
        return 2
    if args.trials is None:
        args.trials = DEFAULT_TRIALS.get(args.command, 0)
    if args.trials < 0:
        print("trials must be nonnegative", file=sys.stderr)
        return 2
    try:
        if args.command == "norm":
            return cmd_norm(args)
        if args.command == "glue-check":
            return cmd_glue_check(args)
        if args.command == "retract-audit":
            return cmd_retract_audit(args)
        if args.command == "adfamily":
            return cmd_adfamily(args)
        if args.command == "partition-demo":
            return cmd_partition_demo(args)
        if args.command == "suite":
            return cmd_suite(args, args.name)
        return cmd_suite(args, "all")
    except (ValueError, OSError) as exc:
        print(f"freelip: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
