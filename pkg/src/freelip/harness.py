"""Seeded experiment suites and their text reports."""
from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import ck_approx as ck
from .constructions import adfamily as adf
from .constructions import gluing, retractions
from .free_norm import free_norm_dual, free_norm_primal
from .metric_core import Molecule, lip_norm
from .sampling import random_function, random_molecule, random_space, trial_rng

SUITES = ("duality", "decomposition", "block-retract", "c0-retract", "partition", "adfamily")
WALL_CLOCK_KEYS = ("wall_clock_s",)


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str
    seed: int = 0
    trials: int = 100
    points: int = 10
    blocks: int = 8
    width: int = 4
    explicit: int = 16
    depth: int = 10
    horizon: int = 4096
    count: int = 64
    tolerance: float | None = None

    def __post_init__(self):
        if self.suite not in SUITES + ("all",):
            raise ValueError(f"unknown suite {self.suite!r}; choose from {SUITES + ('all',)}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.trials < 0:
            raise ValueError("trials must be nonnegative")
        if self.points < 2 or self.blocks < 1 or self.width < 1 or self.explicit < 1:
            raise ValueError("size parameters must be positive (points >= 2)")
        if not 1 <= self.depth <= ck.MAX_DEPTH:
            raise ValueError(f"depth must lie in [1, {ck.MAX_DEPTH}]")
        if self.count < 1 or self.horizon < self.count:
            raise ValueError("need count >= 1 and horizon >= count")

    def tol(self, default: float) -> float:
        return default if self.tolerance is None else self.tolerance


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    witness: object = None


@dataclass
class SuiteReport:
    suite: str
    config: ExperimentConfig
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    duration: float = 0.0

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in self.checks)

    def sections(self) -> dict[str, list[Check]]:
        out: dict[str, list[Check]] = {}
        for c in self.checks:
            out.setdefault(c.suite, []).append(c)
        return out

    def check(self, suite: str, name: str) -> Check:
        for c in self.checks:
            if c.suite == suite and c.name == name:
                return c
        raise KeyError((suite, name))


def _check(cfg, suite, name, passed, witness=None, **metrics) -> Check:
    return Check(suite, name, bool(passed), {"trials": cfg.trials, "seed": cfg.seed, **metrics}, witness)


# -- suites -----------------------------------------------------------------

def suite_duality(cfg: ExperimentConfig) -> list[Check]:
    rel = cfg.tol(1e-7)
    exact_tol = cfg.tol(1e-9)
    gap_max = rel_max = 0.0
    gap_witness = None
    two_max = 0.0
    two_witness = None
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, "duality", t)
        space = random_space(rng, cfg.points)
        mu = random_molecule(rng, space)
        primal, _ = free_norm_primal(mu)
        dual, _ = free_norm_dual(mu)
        gap = abs(primal - dual)
        if gap / (1 + primal) > rel_max or gap_witness is None:
            rel_max = max(rel_max, gap / (1 + primal))
            gap_witness = {"trial": t, "primal": primal, "dual": dual}
        gap_max = max(gap_max, gap)
        for x, y in itertools.combinations(range(space.n_points), 2):
            mu = Molecule.delta(space, x, y) if x != space.base else Molecule.delta(space, y)
            err = abs(free_norm_primal(mu)[0] - space.dist[x, y])
            if err > two_max or two_witness is None:
                two_max = max(two_max, err)
                two_witness = {"trial": t, "pair": [space.points[x], space.points[y]]}
    return [
        _check(cfg, "duality", "gap", rel_max <= rel, gap_witness,
               points=cfg.points, gap_max=gap_max, rel_gap_max=rel_max, tolerance=rel),
        _check(cfg, "duality", "two-point", two_max <= exact_tol, two_witness,
               points=cfg.points, err_max=two_max, tolerance=exact_tol),
    ]


def glued_instance(rng: np.random.Generator, rule: str, *, equal_radius: bool = False) -> gluing.GluedSpace:
    """Two to four random components glued by ``rule``."""
    comps = []
    for j in range(int(rng.integers(2, 5))):
        space = random_space(rng, int(rng.integers(2, 5)), prefix=f"c{j}p")
        comps.append(space)
    if equal_radius:
        # rescale so the first non-base point of every component sits at radius 1
        comps = [type(c)(c.points, c.dist / c.dist[c.base, 1 if c.base == 0 else 0], c.base) for c in comps]
    return gluing.glue(comps, rule)


def suite_decomposition(cfg: ExperimentConfig) -> list[Check]:
    rel = cfg.tol(1e-6)
    slack = cfg.tol(1e-9)
    l1_err = 0.0
    l1_w = None
    sup_low = sup_high = 0.0
    sup_w = None
    glue_ratio = 0.0
    glue_w = None
    inverse_ok = True
    c_max = 1.0
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, "decomposition", t)
        g1 = glued_instance(rng, "l1")
        mu = random_molecule(rng, g1.ambient)
        amb, total = gluing.decomposition_ratio(g1, mu)
        err = abs(amb - total) / max(amb, 1e-300) if amb > 0 else abs(total)
        if err > l1_err or l1_w is None:
            l1_err, l1_w = max(err, l1_err), {"trial": t, "ambient": amb, "sum": total}

        g2 = glued_instance(rng, "sup", equal_radius=bool(rng.integers(2)))
        c = gluing.orthogonality_constant(g2)
        c_max = max(c_max, c)
        mu = random_molecule(rng, g2.ambient)
        amb, total = gluing.decomposition_ratio(g2, mu)
        low = amb - total                       # must be <= slack
        high = total - 2.0 * amb                # must be <= slack
        if max(low, high) > max(sup_low, sup_high) or sup_w is None:
            sup_w = {"trial": t, "ambient": amb, "sum": total, "C": c}
        sup_low, sup_high = max(sup_low, low), max(sup_high, high)

        for g in (g1, g2):
            fs = [random_function(rng, comp) for comp in g.components]
            pasted = gluing.glue_function(g, fs)
            c = gluing.orthogonality_constant(g)
            top = max(lip_norm(f) for f in fs)
            ratio = lip_norm(pasted) / (c * top) if top > 0 else 0.0
            if ratio > glue_ratio or glue_w is None:
                glue_ratio, glue_w = max(ratio, glue_ratio), {"trial": t, "rule": g.cross_rule, "C": c}
            inverse_ok &= all(np.array_equal(gluing.restrict_function(g, pasted, j).values, f.values)
                              for j, f in enumerate(fs))
    return [
        _check(cfg, "decomposition", "l1-equality", l1_err <= rel, l1_w, rel_err_max=l1_err, tolerance=rel),
        _check(cfg, "decomposition", "sup-bounds", sup_low <= slack and sup_high <= slack, sup_w,
               lower_excess_max=sup_low, upper_excess_max=sup_high, constant_max=c_max, tolerance=slack),
        _check(cfg, "decomposition", "glue-bound", glue_ratio <= 1.0 + slack and inverse_ok, glue_w,
               ratio_max=glue_ratio, right_inverse=inverse_ok, tolerance=slack),
    ]


def tie_inputs(rng: np.random.Generator, count: int, blocks: int, width: int):
    """Inputs whose maximal block norm is attained by at least two blocks."""
    for _ in range(count):
        x = rng.normal(size=(blocks, width))
        k = int(rng.integers(2, min(blocks, 4) + 1)) if blocks > 1 else 1
        tied = rng.choice(blocks, size=k, replace=False)
        top = np.max(np.abs(x)) + 1.0
        for j in tied:
            i = int(np.argmax(np.abs(x[j])))
            x[j, i] = top if x[j, i] >= 0 else -top
        yield x, tied


def suite_block_retract(cfg: ExperimentConfig) -> list[Check]:
    slack = cfg.tol(retractions.AUDIT_SLACK)
    rng = trial_rng(cfg.seed, "block-retract", 0)
    audit = retractions.block_retraction_lipschitz_audit(cfg.trials, rng=rng, blocks=cfg.blocks,
                                                        width=cfg.width)
    audit.slack = slack
    rng = trial_rng(cfg.seed, "block-retract", 1)
    x = rng.normal(size=(cfg.trials, cfg.blocks, cfg.width)) * rng.lognormal(size=(cfg.trials, cfg.blocks, 1))
    rx = retractions.block_retraction_batch(x)
    idem = bool(np.array_equal(retractions.block_retraction_batch(rx), rx))
    rng = trial_rng(cfg.seed, "block-retract", 2)
    ties_ok, tie_w, n_orders = True, None, 0
    for x, tied in tie_inputs(rng, min(cfg.trials, 200), cfg.blocks, cfg.width):
        bv = retractions.BlockVector.from_array(x)
        rest = [j for j in range(cfg.blocks) if j not in tied]
        for perm in itertools.permutations(tied.tolist()):
            n_orders += 1
            out = retractions.block_retraction(bv, order=list(perm) + rest)
            if out.norm() != 0.0:
                ties_ok, tie_w = False, {"input": x.tolist(), "order": list(perm)}
    return [
        _check(cfg, "block-retract", "lipschitz", audit.verdict,
               pair_witness(audit.witness_pair), max_ratio=audit.max_ratio, bound=audit.bound,
               zero_case_max=audit.case_max["zero"], distinct_case_max=audit.case_max["distinct"],
               tolerance=slack),
        _check(cfg, "block-retract", "idempotence", idem, None, inputs=cfg.trials),
        _check(cfg, "block-retract", "ties", ties_ok, tie_w, tie_orders=n_orders),
    ]


def pair_witness(pair):
    if pair is None:
        return None
    out = []
    for p in pair:
        if isinstance(p, retractions.TailSequence):
            out.append({"explicit": {str(k): v for k, v in p.explicit.items()}, "tail": p.tail})
        else:
            out.append(p)
    return out


def suite_c0_retract(cfg: ExperimentConfig) -> list[Check]:
    slack = cfg.tol(retractions.AUDIT_SLACK)
    rng = trial_rng(cfg.seed, "c0-retract", 0)
    audit = retractions.c0_retract_lipschitz_audit(cfg.trials, rng=rng, explicit=cfg.explicit)
    audit.slack = slack
    rng = trial_rng(cfg.seed, "c0-retract", 1)
    fixed_ok = tail_ok = idem_ok = True
    witness = None
    for _ in range(min(cfg.trials, 2000)):
        k = int(rng.integers(0, cfg.explicit + 1))
        a = retractions.TailSequence(dict(enumerate(rng.normal(size=k).tolist())), 0.0)
        if retractions.c0_retract(a) != a:
            fixed_ok, witness = False, {"explicit": a.explicit}
        x = retractions.TailSequence(dict(enumerate(rng.normal(size=k).tolist())), float(rng.normal()))
        rx = retractions.c0_retract(x)
        tail_ok &= rx.tail == 0.0
        idem_ok &= retractions.c0_retract(rx) == rx
    return [
        _check(cfg, "c0-retract", "lipschitz", audit.verdict, pair_witness(audit.witness_pair),
               max_ratio=audit.max_ratio, bound=audit.bound, tolerance=slack),
        _check(cfg, "c0-retract", "fixed-points", fixed_ok and tail_ok and idem_ok, witness,
               fixed=fixed_ok, zero_tail=tail_ok, idempotent=idem_ok),
    ]


def suite_partition(cfg: ExperimentConfig) -> list[Check]:
    n = cfg.depth
    space = ck.CantorApprox(n)
    chain = ck.uniform_chain(n)
    slack = cfg.tol(ck.MONOTONE_SLACK)
    rng = trial_rng(cfg.seed, "partition", 0)

    # norm one and idempotence on constants and random functions
    norm_ok, idem_ok = True, True
    attained = True
    for node in chain:
        c = ck.constant_function(space, 1.0)
        attained &= np.max(np.abs(ck.partition_project(c, node))) == 1.0
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, "partition", t)
        f = rng.normal(size=space.n_points)
        node = chain.nodes[int(rng.integers(len(chain)))]
        p = ck.partition_project(f, node)
        norm_ok &= np.max(np.abs(p)) <= np.max(np.abs(f))
        idem_ok &= np.array_equal(ck.partition_project(p, node), p)

    emb = ck.binary_embedding(space)
    conv = ck.projection_converges(emb, chain)
    dyadic_ok = all(dev <= 2.0 ** -k + slack for k, dev in enumerate(conv.deviations))

    exact_ok, exact_w = True, None
    modulus_ok, modulus_err = True, 0.0
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, "partition-st", t)
        k = int(rng.integers(0, n + 1))
        table = rng.normal(size=1 << k)
        table[0] = 0.0
        f = ck.first_bits_function(space, k, table)
        stop = int(rng.integers(k, n + 1))
        g, m = ck.s_after_t(f.as_lip(), ck.uniform_chain(n, stop=stop), modulus=f.modulus)
        if not np.array_equal(g.values, f.values) or m > 1.0:
            exact_ok, exact_w = False, {"trial": t, "k": k, "stop": stop}
        stop = int(rng.integers(0, n + 1))
        sub = ck.uniform_chain(n, stop=stop)
        g, _ = ck.s_after_t(emb.as_lip(), sub, modulus=emb.modulus)
        err = float(np.max(np.abs(g.values - emb.values)))
        modulus_err = max(modulus_err, err - emb.modulus(sub.nodes[-1].mesh))
    modulus_ok = modulus_err <= slack
    return [
        _check(cfg, "partition", "norm-one", norm_ok and attained, None, depth=n, attained=attained),
        _check(cfg, "partition", "idempotence", idem_ok, None, depth=n),
        _check(cfg, "partition", "binary-embed", dyadic_ok and conv.verdict, None, depth=n,
               deviation_max=max(conv.deviations), monotone=conv.monotone),
        _check(cfg, "partition", "s-after-t", exact_ok and modulus_ok, exact_w, depth=n,
               modulus_excess_max=modulus_err, exact=exact_ok),
    ]


def suite_adfamily(cfg: ExperimentConfig) -> list[Check]:
    fam = adf.ad_family(cfg.count, cfg.horizon)
    rep = adf.verify_ad_family(fam)
    return [_check(cfg, "adfamily", "intersections", rep.verdict, rep.witness, count=cfg.count,
                   horizon=cfg.horizon, pairs=rep.pairs, max_intersection=rep.max_intersection,
                   bound=rep.bound, increasing=rep.strictly_increasing)]


SUITE_FUNCS: dict[str, Callable[[ExperimentConfig], list[Check]]] = {
    "duality": suite_duality,
    "decomposition": suite_decomposition,
    "block-retract": suite_block_retract,
    "c0-retract": suite_c0_retract,
    "partition": suite_partition,
    "adfamily": suite_adfamily,
}


# exhaustive suites run the same way whatever the trial count
EXHAUSTIVE = ("adfamily",)


def run_suite(cfg: ExperimentConfig) -> SuiteReport:
    """Run one suite or all of them. Sampled suites with zero trials
    contribute no checks, only a note."""
    start = time.perf_counter()
    report = SuiteReport(cfg.suite, cfg)
    names = SUITES if cfg.suite == "all" else (cfg.suite,)
    for name in names:
        if cfg.trials == 0 and name not in EXHAUSTIVE:
            report.notes.append(f"{name}: no trials requested, nothing checked")
            continue
        report.checks.extend(SUITE_FUNCS[name](replace(cfg, suite=name)))
    report.duration = time.perf_counter() - start
    return report


# -- report formatting ---------------------------------------------------------

def _value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str) and v and " " not in v and "=" not in v:
        return v
    return json.dumps(_plain(v), separators=(",", ":"), sort_keys=True)


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, np.generic):
        return v.item()
    return v


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def emit_report(report: SuiteReport, fmt: str = "human") -> str:
    """Render a report; ``machine`` gives one ``key=value`` record per line."""
    if fmt not in ("human", "machine"):
        raise ValueError("format must be 'human' or 'machine'")
    cfg = report.config
    empty = not report.checks and not report.notes
    if fmt == "machine":
        lines = [f"record=header suite={report.suite} seed={cfg.seed} trials={cfg.trials}"]
        if empty:
            return lines[0] + "\n"
        for c in report.checks:
            fields = {"record": "check", "suite": c.suite, "check": c.name, **c.metrics,
                      "verdict": _verdict(c.passed)}
            if c.witness is not None:
                fields["witness"] = c.witness
            lines.append(" ".join(f"{k}={_value(v)}" for k, v in fields.items()))
        for note in report.notes:
            lines.append(f"record=note text={json.dumps(note)}")
        lines.append(f"record=summary checks={len(report.checks)} verdict={_verdict(report.verdict)} "
                     f"wall_clock_s={report.duration:.3f}")
        return "\n".join(lines) + "\n"

    header = f"{'suite':<15}{'check':<15}{'verdict':<9}details"
    lines = [f"freelip report: suite={report.suite} seed={cfg.seed} trials={cfg.trials}", header]
    if empty:
        return "\n".join(lines) + "\n"
    for c in report.checks:
        details = " ".join(f"{k}={_fmt_human(v)}" for k, v in c.metrics.items()
                           if k not in ("trials", "seed"))
        lines.append(f"{c.suite:<15}{c.name:<15}{_verdict(c.passed):<9}{details}")
        if not c.passed and c.witness is not None:
            lines.append(f"{'':<30}witness={_value(c.witness)}")
    for note in report.notes:
        lines.append(f"note: {note}")
    lines.append(f"verdict: {_verdict(report.verdict)}  ({len(report.checks)} checks, "
                 f"{report.duration:.2f} s)")
    return "\n".join(lines) + "\n"


def _fmt_human(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return _value(v)


def strip_wall_clock(text: str) -> str:
    """Drop wall-clock fields so reports from identical configs compare equal."""
    out = []
    for line in text.splitlines():
        toks = [t for t in line.split(" ") if t.split("=", 1)[0] not in WALL_CLOCK_KEYS]
        out.append(" ".join(toks))
    return "\n".join(out)
