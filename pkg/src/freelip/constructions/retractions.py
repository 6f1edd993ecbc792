"""Lipschitz retractions: onto a union of coordinate blocks, and from ℓ∞ onto c₀.

Both maps come with seeded sampling audits that report the largest observed
ratio ``|R(x) - R(y)| / |x - y|``. The audits certify nothing beyond the
sampled pairs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

AUDIT_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class BlockVector:
    """Finitely many finite blocks, each under the sup norm; the whole vector
    carries the max of the block norms."""

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = []
        for b in self.blocks:
            arr = np.array(b, dtype=float, copy=True).reshape(-1)
            arr.setflags(write=False)
            blocks.append(arr)
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def from_array(cls, a) -> "BlockVector":
        return cls(tuple(np.asarray(a, dtype=float)))

    def block_norms(self) -> np.ndarray:
        return np.array([np.max(np.abs(b), initial=0.0) for b in self.blocks])

    def norm(self) -> float:
        return float(np.max(self.block_norms(), initial=0.0))

    def __sub__(self, other: "BlockVector") -> "BlockVector":
        return BlockVector(tuple(a - b for a, b in zip(self.blocks, other.blocks, strict=True)))

    def __eq__(self, other) -> bool:
        return (isinstance(other, BlockVector) and len(self.blocks) == len(other.blocks)
                and all(np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks)))

    __hash__ = None


def dominant_block(norms: np.ndarray, order: Sequence[int] | None = None) -> int:
    """Index of a block of maximal norm; ties go to the earliest index in ``order``."""
    top = np.max(norms)
    for j in (range(len(norms)) if order is None else order):
        if norms[j] == top:
            return int(j)
    raise ValueError("tie-break order does not cover the maximal blocks")


def block_retraction(x: BlockVector, order: Sequence[int] | None = None) -> BlockVector:
    """Keep only the dominant block, shrunk by the relative size of the runner-up.

    With block norms ``n`` and dominant index ``b``, the output block is
    ``(1 - max_{i != b} n_i / n_b) x_b``; every other block is zeroed.
    """
    norms = x.block_norms()
    zeros = tuple(np.zeros_like(b) for b in x.blocks)
    if not np.any(norms > 0):
        return BlockVector(zeros)
    b = dominant_block(norms, order)
    runner_up = np.max(np.delete(norms, b), initial=0.0)
    out = list(zeros)
    out[b] = (1.0 - runner_up / norms[b]) * x.blocks[b]
    return BlockVector(tuple(out))


def block_retraction_batch(x: np.ndarray) -> np.ndarray:
    """Vectorised retraction over an array of shape ``(batch, blocks, width)``
    with smallest-index tie-breaking."""
    x = np.asarray(x, dtype=float)
    norms = np.max(np.abs(x), axis=2)
    rows = np.arange(len(x))
    b = np.argmax(norms, axis=1)
    top = norms[rows, b]
    others = norms.copy()
    others[rows, b] = -np.inf
    runner_up = np.maximum(np.max(others, axis=1), 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(top > 0, 1.0 - runner_up / np.where(top > 0, top, 1.0), 0.0)
    out = np.zeros_like(x)
    out[rows, b] = factor[:, None] * x[rows, b]
    return out


@dataclass
class AuditReport:
    kind: str
    trials: int
    bound: float
    max_ratio: float = 0.0
    witness_pair: tuple | None = None
    case_max: dict[str, float] = field(default_factory=dict)
    case_bounds: dict[str, float] = field(default_factory=dict)
    slack: float = AUDIT_SLACK

    @property
    def verdict(self) -> bool:
        if self.max_ratio > self.bound + self.slack:
            return False
        return all(self.case_max.get(k, 0.0) <= v + self.slack for k, v in self.case_bounds.items())


def _sup(a: np.ndarray, axes) -> np.ndarray:
    return np.max(np.abs(a), axis=axes)


def _block_pairs(rng: np.random.Generator, count: int, blocks: int, width: int):
    """Adversarial pair generator mixing zero partners, near ties, scale
    mismatches, swapped dominance and single-block points."""
    shape = (count, blocks, width)
    case = rng.integers(0, 6, size=count)
    x = rng.normal(size=shape) * rng.lognormal(0.0, 1.0, size=(count, blocks, 1))
    y = x + rng.normal(size=shape) * 10.0 ** rng.uniform(-6, 0, size=(count, 1, 1))

    # zero partner
    m = case == 1
    y[m] = 0.0
    # near ties: two dominant blocks of almost the same norm in both points
    m = np.flatnonzero(case == 2)
    if len(m):
        scale = np.max(np.abs(x[m]), axis=(1, 2))
        i = rng.integers(0, blocks, size=len(m))
        j = (i + rng.integers(1, blocks, size=len(m))) % blocks if blocks > 1 else i
        for t, (a, c) in enumerate(zip(i, j)):
            x[m[t], a] *= scale[t] / np.max(np.abs(x[m[t], a]))
            x[m[t], c] *= scale[t] * (1 - 1e-3 * rng.random()) / np.max(np.abs(x[m[t], c]))
        y[m] = x[m] + rng.normal(size=(len(m), blocks, width)) * 1e-3 * scale[:, None, None]
    # scale mismatch: single block much larger than the rest
    m = np.flatnonzero(case == 3)
    if len(m):
        i = rng.integers(0, blocks, size=len(m))
        x[m, i] *= 1e3
        y[m, i] *= 1e3
    # swap dominance between the two points
    m = np.flatnonzero(case == 4)
    if len(m):
        y[m] = x[m][:, ::-1] + rng.normal(size=(len(m), blocks, width)) * 0.1
    # one point supported on a single block
    m = np.flatnonzero(case == 5)
    if len(m):
        keep = rng.integers(0, blocks, size=len(m))
        mask = np.zeros((len(m), blocks, 1))
        mask[np.arange(len(m)), keep] = 1.0
        x[m] *= mask
    return x, y


def block_retraction_lipschitz_audit(trials: int = 100_000, *, seed: int = 0, blocks: int = 8,
                                     width: int = 4, batch: int = 20_000,
                                     rng: np.random.Generator | None = None) -> AuditReport:
    """Sample pairs and record the worst Lipschitz ratio of the block retraction.

    Cases reported separately: ``zero`` (y = 0, bound 2), ``distinct`` (the two
    points have different dominant blocks, bound 2), ``same`` (same dominant
    block). The overall bound is 3.
    """
    rng = rng if rng is not None else np.random.default_rng(seed)
    report = AuditReport("block", trials, 3.0, case_bounds={"zero": 2.0, "distinct": 2.0, "same": 3.0})
    report.case_max = {"zero": 0.0, "distinct": 0.0, "same": 0.0}
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        x, y = _block_pairs(rng, k, blocks, width)
        rx, ry = block_retraction_batch(x), block_retraction_batch(y)
        num = _sup(rx - ry, (1, 2))
        den = _sup(x - y, (1, 2))
        ok = den > 0
        ratio = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
        nx, ny = _sup(x, 2), _sup(y, 2)
        xz, yz = ~np.any(nx > 0, axis=1), ~np.any(ny > 0, axis=1)
        bx, by = np.argmax(nx, axis=1), np.argmax(ny, axis=1)
        cases = {
            "zero": xz ^ yz,
            "distinct": ~xz & ~yz & (bx != by),
            "same": ~xz & ~yz & (bx == by),
        }
        for name, m in cases.items():
            if m.any():
                report.case_max[name] = max(report.case_max[name], float(ratio[m].max()))
        i = int(np.argmax(ratio))
        if ratio[i] > report.max_ratio:
            report.max_ratio = float(ratio[i])
            report.witness_pair = (x[i].tolist(), y[i].tolist())
        done += k
    return report


@dataclass(frozen=True, eq=False)
class TailSequence:
    """Eventually constant bounded family: explicit coordinates plus a tail value.

    Every index not listed in ``explicit`` takes the value ``tail``. Explicit
    entries equal to the tail are dropped, so equal sequences compare equal.
    """

    explicit: Mapping[int, float]
    tail: float = 0.0

    def __post_init__(self):
        tail = float(self.tail) + 0.0  # drops negative zero
        if not np.isfinite(tail):
            raise ValueError("tail must be finite")
        explicit = {}
        for i, v in dict(self.explicit).items():
            v = float(v)
            if not np.isfinite(v):
                raise ValueError("coordinates must be finite")
            if v != tail:
                explicit[int(i)] = v + 0.0
        object.__setattr__(self, "explicit", dict(sorted(explicit.items())))
        object.__setattr__(self, "tail", tail)

    def __getitem__(self, i: int) -> float:
        return self.explicit.get(i, self.tail)

    def support(self) -> set[int]:
        return set(self.explicit)

    def in_c0(self) -> bool:
        return self.tail == 0.0

    def sup_norm(self) -> float:
        return max([abs(self.tail), *map(abs, self.explicit.values())])

    def __sub__(self, other: "TailSequence") -> "TailSequence":
        idx = self.support() | other.support()
        return TailSequence({i: self[i] - other[i] for i in idx}, self.tail - other.tail)

    def __eq__(self, other) -> bool:
        return (isinstance(other, TailSequence) and self.tail == other.tail
                and self.explicit == other.explicit)

    __hash__ = None


def c0_distance(x: TailSequence) -> float:
    """Distance to c₀; for an eventually constant sequence it is the absolute tail."""
    return abs(x.tail)


def soft_threshold(v, level):
    return np.sign(v) * np.maximum(np.abs(v) - level, 0.0)


def c0_retract(x: TailSequence) -> TailSequence:
    """Shrink every coordinate toward zero by the distance to c₀."""
    d = c0_distance(x)
    out = {i: float(soft_threshold(v, d)) for i, v in x.explicit.items()}
    return TailSequence(out, float(soft_threshold(x.tail, d)))


def c0_retract_batch(explicit: np.ndarray, tails: np.ndarray):
    """Vectorised retraction for sequences sharing the explicit index set.

    ``explicit`` has shape ``(batch, k)``, ``tails`` shape ``(batch,)``.
    """
    d = np.abs(tails)
    return soft_threshold(explicit, d[:, None]), soft_threshold(tails, d)


def _tail_pairs(rng: np.random.Generator, count: int, k: int):
    case = rng.integers(0, 5, size=count)
    xe = rng.normal(size=(count, k)) * rng.lognormal(0.0, 1.0, size=(count, 1))
    xt = rng.normal(size=count) * rng.lognormal(0.0, 1.0, size=count)
    step = 10.0 ** rng.uniform(-6, 0, size=count)
    ye = xe + rng.normal(size=(count, k)) * step[:, None]
    yt = xt + rng.normal(size=count) * step
    m = case == 1          # both in c0
    xt[m] = 0.0
    yt[m] = 0.0
    m = case == 2          # coordinates straddling the threshold
    ye[m] = np.sign(xe[m]) * np.abs(yt[m])[:, None] + rng.normal(size=(m.sum(), k)) * 1e-3
    xe[m] = np.sign(xe[m]) * np.abs(xt[m])[:, None] + rng.normal(size=(m.sum(), k)) * 1e-3
    m = case == 3          # only the tail moves
    ye[m] = xe[m]
    m = case == 4          # constant against zero
    xe[m] = xt[m][:, None]
    ye[m] = 0.0
    yt[m] = 0.0
    return xe, xt, ye, yt


def c0_retract_lipschitz_audit(trials: int = 100_000, *, seed: int = 0, explicit: int = 16,
                               batch: int = 50_000,
                               rng: np.random.Generator | None = None) -> AuditReport:
    """Sample pairs of eventually constant sequences on a shared index set and
    record the worst ratio ``|R(x) - R(y)|_∞ / |x - y|_∞`` (bound 2)."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    report = AuditReport("c0", trials, 2.0)
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        xe, xt, ye, yt = _tail_pairs(rng, k, explicit)
        rxe, rxt = c0_retract_batch(xe, xt)
        rye, ryt = c0_retract_batch(ye, yt)
        # the index set is infinite, so the tail coordinate always counts
        num = np.maximum(np.max(np.abs(rxe - rye), axis=1), np.abs(rxt - ryt))
        den = np.maximum(np.max(np.abs(xe - ye), axis=1), np.abs(xt - yt))
        ok = den > 0
        ratio = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
        i = int(np.argmax(ratio))
        if ratio[i] > report.max_ratio:
            report.max_ratio = float(ratio[i])
            report.witness_pair = (
                TailSequence(dict(enumerate(xe[i].tolist())), float(xt[i])),
                TailSequence(dict(enumerate(ye[i].tolist())), float(yt[i])),
            )
        done += k
    return report


def as_tail_sequences(explicit: np.ndarray, tails: np.ndarray) -> Iterable[TailSequence]:
    for row, t in zip(explicit, tails):
        yield TailSequence(dict(enumerate(row.tolist())), float(t))
