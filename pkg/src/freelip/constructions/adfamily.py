"""Almost disjoint families of subsets of ℕ from branches of the binary tree.

Tree nodes are numbered heap-style: the root is 1 and the children of node
``k`` are ``2k`` and ``2k + 1``. A branch is an infinite 0/1 sequence; its set
is the node codes of all its finite prefixes. Distinct branches share only the
prefixes before they split, so any two sets meet in finitely many codes.
Truncating at a horizon ``N`` keeps the codes ``<= N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np


@dataclass(frozen=True)
class ADFamily:
    horizon: int
    # prefix bits of each branch; after the prefix a branch repeats its last bit
    branches: tuple[str, ...]
    sets: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.sets)


def branch_bit(prefix: str, k: int) -> int:
    """Bit ``k`` of the branch that starts with ``prefix`` and then repeats its last bit."""
    return int(prefix[k] if k < len(prefix) else prefix[-1])


def branch_codes(prefix: str, horizon: int) -> tuple[int, ...]:
    codes = []
    code, k = 1, 0
    while code <= horizon:
        codes.append(code)
        code = 2 * code + branch_bit(prefix, k)
        k += 1
    return tuple(codes)


def full_depth(horizon: int) -> int:
    """Deepest level whose every node code is ``<= horizon``."""
    return int(math.floor(math.log2(horizon + 1))) - 1


def intersection_bound(horizon: int) -> int:
    return math.ceil(math.log2(horizon)) + 1 if horizon > 1 else 1


def ad_family(m: int, horizon: int) -> ADFamily:
    """``m`` pairwise almost disjoint sets truncated at ``horizon``.

    Branch ``j`` starts with the ``w``-bit binary expansion of ``j``,
    ``w = ceil(log2 m)``, and then repeats its last bit; so for ``m = 2`` the
    branches are ``000...`` and ``111...``.
    """
    if m < 1:
        raise ValueError("need m >= 1")
    if horizon < m:
        raise ValueError("need horizon >= m")
    needed = math.ceil(math.log2(m))
    if needed > full_depth(horizon):
        raise ValueError(f"{m} branches need depth {needed}, but horizon {horizon} "
                         f"only resolves depth {full_depth(horizon)}")
    branches = tuple(format(j, f"0{max(1, needed)}b") for j in range(m))
    return ADFamily(horizon, branches, tuple(branch_codes(b, horizon) for b in branches))


def divergence_depth(a: str, b: str) -> int:
    """Depth of the first node at which the two branches differ."""
    k = 0
    limit = max(len(a), len(b)) + 1
    while k < limit and branch_bit(a, k) == branch_bit(b, k):
        k += 1
    if k == limit:
        raise ValueError("branches coincide")
    return k + 1


@dataclass(frozen=True)
class ADReport:
    pairs: int
    max_intersection: int
    bound: int
    witness: tuple[int, int] | None
    strictly_increasing: bool

    @property
    def verdict(self) -> bool:
        return self.strictly_increasing and self.max_intersection <= self.bound


def verify_ad_family(family: ADFamily) -> ADReport:
    """Exhaustive pairwise intersection count against ``ceil(log2 N) + 1``."""
    sets = [frozenset(s) for s in family.sets]
    increasing = all(np.all(np.diff(s) > 0) for s in family.sets)
    best, witness, pairs = 0, None, 0
    for i, j in combinations(range(len(sets)), 2):
        pairs += 1
        k = len(sets[i] & sets[j])
        if witness is None or k > best:
            best, witness = k, (i, j)
    return ADReport(pairs, best, intersection_bound(family.horizon), witness, increasing)
