"""Clopen partitions of a depth-truncated Cantor set and the operators built on them.

Points of :class:`CantorApprox` are the binary strings of length ``depth``,
stored as integers with the first bit most significant, so lexicographic
order is integer order. Two distinct points whose longest common prefix has
length ``k`` are at distance ``2**-k``; a cylinder of prefix length ``k`` has
diameter ``2**-k`` by convention (also for singletons at full depth).

Cells of a partition are cylinders, each represented by its smallest member.
Because of that choice, representatives are nested along refinements.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .metric_core import LipFunction, Subspace

MAX_DEPTH = 16
STABILITY_TOL = 1e-9
MONOTONE_SLACK = 1e-12

Modulus = Callable[[float], float]


class DivergenceError(ValueError):
    """The evaluation sequence did not settle along the end of the chain."""

    def __init__(self, point: int, spread: float, tolerance: float):
        self.point = point
        self.spread = spread
        super().__init__(f"evaluations at point {point} vary by {spread:.3g} "
                         f"over the last chain nodes (tolerance {tolerance:.3g})")


def _bit_length(a: np.ndarray) -> np.ndarray:
    """Bit length of nonnegative integers below 2**53."""
    out = np.zeros(a.shape, dtype=int)
    nz = a > 0
    out[nz] = np.floor(np.log2(a[nz])).astype(int) + 1
    return out


@dataclass(frozen=True, eq=False)
class CantorApprox:
    depth: int
    max_depth: int = MAX_DEPTH

    def __post_init__(self):
        if not 1 <= self.depth <= self.max_depth:
            raise ValueError(f"depth must lie in [1, {self.max_depth}], got {self.depth}")

    @property
    def n_points(self) -> int:
        return 1 << self.depth

    @property
    def base(self) -> int:
        return 0

    @cached_property
    def points(self) -> np.ndarray:
        return np.arange(self.n_points)

    def label(self, i: int) -> str:
        return format(i, f"0{self.depth}b")

    def bits(self) -> np.ndarray:
        """``(n_points, depth)`` array of bits, first bit in column 0."""
        shifts = np.arange(self.depth - 1, -1, -1)
        return (self.points[:, None] >> shifts) & 1

    def distance(self, i, j):
        i, j = np.asarray(i), np.asarray(j)
        cpl = self.depth - _bit_length(i ^ j)
        return np.where(i == j, 0.0, 2.0 ** -cpl)

    def lipschitz_constant(self, values, subset=None) -> float:
        """Exact Lipschitz constant, computed level by level of the tree."""
        values = np.asarray(values, dtype=float)
        full = np.full(self.n_points, np.nan)
        if subset is None:
            if values.shape != (self.n_points,):
                raise ValueError(f"expected {self.n_points} values, got shape {values.shape}")
            full[:] = values
        else:
            subset = np.asarray(subset, dtype=int)
            if values.shape != subset.shape:
                raise ValueError("values and subset differ in length")
            full[subset] = values
        present = ~np.isnan(full)
        hi = np.where(present, full, -np.inf)
        lo = np.where(present, full, np.inf)
        best = 0.0
        for k in range(self.depth):
            h = hi.reshape(1 << k, 2, -1).max(axis=2)
            l = lo.reshape(1 << k, 2, -1).min(axis=2)
            both = np.isfinite(h[:, 0]) & np.isfinite(h[:, 1])
            if not both.any():
                continue
            spread = np.maximum(h[both, 0] - l[both, 1], h[both, 1] - l[both, 0])
            best = max(best, float(spread.max()) * 2.0 ** k)
        return best

    def map_lipschitz(self, image) -> float:
        """Exact Lipschitz constant of the self-map ``i -> image[i]``.

        Within a depth-k cylinder the two children are at distance ``2**-k``;
        the closest pair of images across them is as close as the extreme
        images of the whole cylinder.
        """
        image = np.asarray(image, dtype=np.int64)
        best = 0.0
        for k in range(self.depth):
            cells = image.reshape(1 << k, -1)
            lo, hi = cells.min(axis=1), cells.max(axis=1)
            moved = lo != hi
            if not moved.any():
                continue
            cpl = self.depth - _bit_length(lo[moved] ^ hi[moved])
            best = max(best, float(np.max(2.0 ** (k - cpl))))
        return best

    def subspace(self, indices) -> Subspace:
        return Subspace(self, indices)


@dataclass(frozen=True, eq=False)
class CantorFunction:
    """Dense samples of a continuous function, with an optional modulus of continuity."""

    space: CantorApprox
    values: np.ndarray
    modulus: Modulus | None = None
    name: str = "f"

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.shape != (self.space.n_points,):
            raise ValueError(f"function has {values.shape} samples, expected {self.space.n_points}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def as_lip(self) -> LipFunction:
        return LipFunction(self.space, self.values)


def constant_function(space: CantorApprox, c: float = 1.0) -> CantorFunction:
    return CantorFunction(space, np.full(space.n_points, float(c)), lambda t: 0.0, "const")


def binary_embedding(space: CantorApprox) -> CantorFunction:
    """``x -> sum_i x_i 2**-i``, which is 1-Lipschitz for the Cantor metric."""
    return CantorFunction(space, space.points / space.n_points, lambda t: t, "binary-embed")


def first_bits_function(space: CantorApprox, k: int, table=None) -> CantorFunction:
    """Function of the first ``k`` bits only.

    Defaults to the first ``k`` bits read as a binary fraction; ``table``
    may give one value per prefix instead.
    """
    if not 0 <= k <= space.depth:
        raise ValueError(f"k must lie in [0, {space.depth}]")
    prefix = space.points >> (space.depth - k)
    if table is None:
        table = np.arange(1 << k) / (1 << k)
        step = 2.0 ** -k

        def modulus(t):
            return 0.0 if t <= step else t
    else:
        table = np.asarray(table, dtype=float)
        if table.shape != (1 << k,):
            raise ValueError(f"table needs {1 << k} entries")
        span = float(np.ptp(table)) if len(table) else 0.0
        step = 2.0 ** -k

        def modulus(t):
            return 0.0 if t <= step else span
    return CantorFunction(space, table[prefix], modulus, f"firstbits:{k}")


@dataclass(frozen=True, eq=False)
class PartitionNode:
    """Partition of the depth-``depth`` points into cylinders given by prefixes."""

    depth: int
    prefixes: tuple[str, ...]

    def __post_init__(self):
        prefixes = tuple(str(p) for p in self.prefixes)
        for p in prefixes:
            if len(p) > self.depth or set(p) - {"0", "1"}:
                raise ValueError(f"bad prefix {p!r} for depth {self.depth}")
        starts = np.array([int(p, 2) << (self.depth - len(p)) if p else 0 for p in prefixes], dtype=np.int64)
        sizes = np.array([1 << (self.depth - len(p)) for p in prefixes], dtype=np.int64)
        order = np.argsort(starts, kind="stable")
        starts, sizes = starts[order], sizes[order]
        prefixes = tuple(prefixes[i] for i in order)
        ends = np.cumsum(sizes)
        if len(prefixes) == 0 or starts[0] != 0 or np.any(starts[1:] != ends[:-1]) or ends[-1] != 1 << self.depth:
            raise ValueError("cylinders do not partition the space")
        object.__setattr__(self, "prefixes", prefixes)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def uniform(cls, depth: int, k: int) -> "PartitionNode":
        if not 0 <= k <= depth:
            raise ValueError(f"uniform level must lie in [0, {depth}]")
        return cls(depth, tuple(format(i, f"0{k}b") if k else "" for i in range(1 << k)))

    @classmethod
    def discrete(cls, depth: int) -> "PartitionNode":
        return cls.uniform(depth, depth)

    @property
    def n_cells(self) -> int:
        return len(self.prefixes)

    @property
    def representatives(self) -> np.ndarray:
        """Smallest member of each cell, in cell order."""
        return self.starts

    @property
    def mesh(self) -> float:
        return float(2.0 ** -min(len(p) for p in self.prefixes))

    def depth_profile(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.prefixes)

    @cached_property
    def cell_labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_cells), self.sizes)

    @cached_property
    def rep_map(self) -> np.ndarray:
        """Point -> representative of its cell."""
        return np.repeat(self.starts, self.sizes)

    def is_discrete(self) -> bool:
        return self.n_cells == 1 << self.depth

    def refines(self, other: "PartitionNode") -> bool:
        """True if every cell of ``self`` lies inside a cell of ``other``."""
        if self.depth != other.depth:
            return False
        lab = other.cell_labels
        return bool(np.all(lab[self.starts] == lab[self.starts + self.sizes - 1]))


@dataclass(frozen=True, eq=False)
class RefinementChain:
    nodes: tuple[PartitionNode, ...]

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if not nodes:
            raise ValueError("empty chain")
        for a, b in zip(nodes, nodes[1:]):
            if not b.refines(a) or b.n_cells == a.n_cells:
                raise ValueError("each chain node must strictly refine its predecessor")
        object.__setattr__(self, "nodes", nodes)

    @property
    def depth(self) -> int:
        return self.nodes[0].depth

    @property
    def cofinal(self) -> bool:
        """Whether the chain ends at the discrete partition."""
        return self.nodes[-1].is_discrete()

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


def uniform_chain(depth: int, stop: int | None = None, start: int = 0) -> RefinementChain:
    """Uniform partitions at levels ``start..stop`` (``stop`` defaults to full depth)."""
    stop = depth if stop is None else stop
    return RefinementChain(tuple(PartitionNode.uniform(depth, k) for k in range(start, stop + 1)))


def _samples(f, space_points: int) -> np.ndarray:
    values = f.values if hasattr(f, "values") else np.asarray(f, dtype=float)
    if values.shape != (space_points,):
        raise ValueError(f"partition is for {space_points} points, function has shape {values.shape}")
    return np.asarray(values)


def partition_project(f, node: PartitionNode) -> np.ndarray:
    """Replace ``f`` on each cell by its value at the cell representative."""
    return _samples(f, 1 << node.depth)[node.rep_map]


@dataclass
class ConvergenceReport:
    rows: list[tuple[int, int, float, float, float]] = field(default_factory=list)
    monotone: bool = True
    within_modulus: bool = True

    @property
    def verdict(self) -> bool:
        return self.monotone and self.within_modulus

    @property
    def deviations(self) -> list[float]:
        return [r[3] for r in self.rows]

    def table(self) -> str:
        lines = [f"{'node':>4} {'cells':>7} {'mesh':>12} {'deviation':>14} {'bound':>14}"]
        for i, cells, mesh, dev, bound in self.rows:
            lines.append(f"{i:>4d} {cells:>7d} {mesh:>12.6g} {dev:>14.6e} {bound:>14.6e}")
        return "\n".join(lines)


def projection_converges(f: CantorFunction, chain: RefinementChain,
                         modulus: Modulus | None = None) -> ConvergenceReport:
    """Sup-distance from ``f`` to its projections along ``chain``.

    Checks the distances never increase (within 1e-12) and stay below the
    modulus of continuity evaluated at each mesh.
    """
    modulus = modulus or getattr(f, "modulus", None)
    if modulus is None:
        raise ValueError("a modulus of continuity is required")
    values = _samples(f, 1 << chain.depth)
    report = ConvergenceReport()
    prev = np.inf
    for i, node in enumerate(chain):
        dev = float(np.max(np.abs(values - values[node.rep_map])))
        bound = float(modulus(node.mesh))
        report.rows.append((i, node.n_cells, node.mesh, dev, bound))
        report.monotone &= dev <= prev + MONOTONE_SLACK
        report.within_modulus &= dev <= bound + MONOTONE_SLACK
        prev = dev
    return report


def restrict_T(f: LipFunction, subsets: Sequence) -> list[LipFunction]:
    """Restrict ``f`` to each subset (each must contain the base point)."""
    out = []
    for idx in subsets:
        sub = f.space.subspace(idx)
        out.append(LipFunction(sub, np.asarray(f.values)[sub.indices]))
    return out


def reconstruct_S(fs: Sequence[LipFunction], maps: Sequence, *,
                  tol: float | Sequence[float] = STABILITY_TOL,
                  window: int = 3) -> tuple[LipFunction, float]:
    """Chain limit of ``x -> f_j(R_j(x))``.

    ``fs[j]`` lives on a subspace ``Y_j`` of a common ambient space and
    ``maps[j]`` gives, for every ambient point, the ambient index of its image
    in ``Y_j``. The limit is the value at the last map once the last
    ``window`` evaluations agree with it within ``tol`` (a scalar, or one
    tolerance per map). Returns the limit and ``M = max_j Lip(R_j)``.
    """
    if len(fs) != len(maps) or not fs:
        raise ValueError("need one map per function and at least one of each")
    ambient = fs[0].space.ambient
    tols = np.broadcast_to(np.asarray(tol, dtype=float), (len(fs),))
    evals = np.empty((len(fs), ambient.n_points))
    bound = 0.0
    for j, (f, img) in enumerate(zip(fs, maps)):
        if f.space.ambient is not ambient:
            raise ValueError("all functions must live on subspaces of one ambient space")
        img = np.asarray(img, dtype=int)
        if img.shape != (ambient.n_points,):
            raise ValueError("each map must send every ambient point somewhere")
        local = f.space.local_index[img]
        if np.any(local < 0):
            raise ValueError(f"map {j} leaves its target subset")
        if img[ambient.base] != ambient.base:
            raise ValueError(f"map {j} does not fix the base point")
        evals[j] = f.values[local]
        bound = max(bound, ambient.map_lipschitz(img))
    last = evals[-1]
    for j in range(max(0, len(fs) - window), len(fs)):
        spread = np.abs(evals[j] - last)
        bad = np.flatnonzero(spread > tols[j])
        if len(bad):
            x = int(bad[np.argmax(spread[bad])])
            raise DivergenceError(x, float(spread[x]), float(tols[j]))
    return LipFunction(ambient, last), bound


def chain_subsets(chain: RefinementChain) -> list[np.ndarray]:
    return [node.representatives for node in chain]


def chain_maps(chain: RefinementChain) -> list[np.ndarray]:
    return [node.rep_map for node in chain]


def s_after_t(f: LipFunction, chain: RefinementChain, modulus: Modulus | None = None,
              tol: float = STABILITY_TOL) -> tuple[LipFunction, float]:
    """Restrict ``f`` to the representative sets of ``chain`` and reconstruct.

    With a modulus, the settling test at node ``j`` allows ``modulus(mesh_j)``
    on top of ``tol``: nested representatives of one cell are within the
    cell's diameter, so a function with that modulus cannot move further.
    """
    fs = restrict_T(f, chain_subsets(chain))
    if modulus is None:
        tols = tol
    else:
        tols = [tol + float(modulus(node.mesh)) for node in chain]
    return reconstruct_S(fs, chain_maps(chain), tol=tols)
