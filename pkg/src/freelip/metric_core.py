"""Finite pointed metric spaces, base-point-vanishing Lipschitz functions and molecules.

Every object here is immutable after construction. Arrays handed to the
constructors are copied and frozen, so instances can be shared freely.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

METRIC_TOL = 1e-9
MIN_SEPARATION = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Violation(NamedTuple):
    axiom: str
    witness: tuple
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def axioms(self) -> set[str]:
        return {v.axiom for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "pass"
        return "\n".join(f"{v.axiom}: {v.witness} ({v.detail})" for v in self.violations)


@dataclass(frozen=True, eq=False)
class PointedMetricSpace:
    """A finite set of named points with a base point and a distance matrix.

    Construction only checks shapes; metric axioms are checked by
    :func:`validate_space` so that broken inputs can still be inspected.
    """

    points: tuple[str, ...]
    dist: np.ndarray
    base: int = 0

    def __post_init__(self):
        points = tuple(str(p) for p in self.points)
        if len(set(points)) != len(points):
            raise ValueError("point identifiers must be distinct")
        dist = _frozen(self.dist)
        n = len(points)
        if dist.shape != (n, n):
            raise ValueError(f"distance matrix has shape {dist.shape}, expected {(n, n)}")
        if not 0 <= self.base < n:
            raise ValueError(f"base index {self.base} out of range for {n} points")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "dist", dist)

    @classmethod
    def from_points(cls, coords, *, p: float = 2, names: Sequence[str] | None = None, base: int = 0):
        """Metric induced by the ``p``-norm on rows of ``coords``."""
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.linalg.norm(diff, ord=p, axis=-1)
        if names is None:
            names = [f"p{i}" for i in range(len(coords))]
        return cls(tuple(names), dist, base)

    @property
    def n_points(self) -> int:
        return len(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown point {name!r}") from None

    @cached_property
    def _index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.points)}

    @cached_property
    def validation(self) -> ValidationReport:
        return validate_space(self)

    def require_valid(self) -> "PointedMetricSpace":
        if not self.validation.ok:
            raise ValueError(f"invalid metric space:\n{self.validation}")
        return self

    def distance_to_base(self) -> np.ndarray:
        return self.dist[self.base]

    def lipschitz_constant(self, values, subset=None) -> float:
        """Smallest Lipschitz constant of ``values`` (optionally on the points ``subset``)."""
        values = np.asarray(values, dtype=float)
        d = self.dist if subset is None else self.dist[np.ix_(subset, subset)]
        if values.shape != (d.shape[0],):
            raise ValueError(f"expected {d.shape[0]} values, got shape {values.shape}")
        if len(values) < 2:
            return 0.0
        iu = np.triu_indices(len(values), k=1)
        return float(np.max(np.abs(values[iu[0]] - values[iu[1]]) / d[iu]))

    def map_lipschitz(self, image) -> float:
        """Lipschitz constant of the self-map sending point ``i`` to point ``image[i]``."""
        image = np.asarray(image, dtype=int)
        if len(image) < 2:
            return 0.0
        iu = np.triu_indices(self.n_points, k=1)
        return float(np.max(self.dist[image[iu[0]], image[iu[1]]] / self.dist[iu]))

    def subspace(self, indices) -> "Subspace":
        return Subspace(self, indices)

    def induced(self, indices, base: int | None = None) -> "PointedMetricSpace":
        """New dense space on ``indices``; keeps the base if it is among them."""
        idx = list(indices)
        if base is None:
            if self.base not in idx:
                raise ValueError("base point not in index set; pass base explicitly")
            base = idx.index(self.base)
        return PointedMetricSpace(tuple(self.points[i] for i in idx), self.dist[np.ix_(idx, idx)], base)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subset of an ambient space that contains its base point.

    Works with any ambient exposing ``n_points``, ``base`` and
    ``lipschitz_constant(values, subset)``.
    """

    ambient: object
    indices: np.ndarray

    def __post_init__(self):
        idx = _frozen(self.indices, dtype=int)
        if idx.ndim != 1 or len(np.unique(idx)) != len(idx):
            raise ValueError("subspace indices must be a flat sequence of distinct indices")
        if len(idx) and (idx.min() < 0 or idx.max() >= self.ambient.n_points):
            raise ValueError("subspace index out of range")
        hits = np.flatnonzero(idx == self.ambient.base)
        if len(hits) == 0:
            raise ValueError("subset does not contain the base point")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "_base", int(hits[0]))

    @property
    def base(self) -> int:
        return self._base

    @property
    def n_points(self) -> int:
        return len(self.indices)

    def lipschitz_constant(self, values) -> float:
        return self.ambient.lipschitz_constant(values, subset=self.indices)

    @cached_property
    def local_index(self) -> np.ndarray:
        """Ambient index -> position in this subspace, or -1."""
        out = np.full(self.ambient.n_points, -1, dtype=int)
        out[self.indices] = np.arange(len(self.indices))
        return out


def _check_values(space, values, what: str) -> np.ndarray:
    arr = _frozen(values)
    if arr.shape != (space.n_points,):
        raise ValueError(f"{what} has shape {arr.shape}, expected ({space.n_points},)")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class LipFunction:
    """Real values on the points of ``space`` vanishing at the base point."""

    space: object
    values: np.ndarray

    def __post_init__(self):
        values = _check_values(self.space, self.values, "function values")
        if values[self.space.base] != 0.0:
            raise ValueError("Lipschitz function must vanish at the base point")
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls, space) -> "LipFunction":
        return cls(space, np.zeros(space.n_points))

    @classmethod
    def from_mapping(cls, space: PointedMetricSpace, mapping: dict[str, float]) -> "LipFunction":
        values = np.zeros(space.n_points)
        for name, v in mapping.items():
            values[space.index(name)] = v
        return cls(space, values)

    def __add__(self, other: "LipFunction") -> "LipFunction":
        _same_space(self.space, other.space)
        return LipFunction(self.space, self.values + other.values)

    def __mul__(self, a: float) -> "LipFunction":
        return LipFunction(self.space, a * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Molecule:
    """Finitely supported element of the free space: coefficients on points.

    The base coefficient is stored as 0 since the base evaluation is the zero functional.
    """

    space: PointedMetricSpace
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(_check_values(self.space, self.coeffs, "molecule coefficients"))
        coeffs[self.space.base] = 0.0
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def delta(cls, space: PointedMetricSpace, x: int | str, y: int | str | None = None) -> "Molecule":
        """The evaluation ``δ_x``, or the difference ``δ_x - δ_y``."""
        coeffs = np.zeros(space.n_points)
        coeffs[_as_index(space, x)] += 1.0
        if y is not None:
            coeffs[_as_index(space, y)] -= 1.0
        return cls(space, coeffs)

    @classmethod
    def from_mapping(cls, space: PointedMetricSpace, mapping: dict[str, float]) -> "Molecule":
        coeffs = np.zeros(space.n_points)
        for name, v in mapping.items():
            coeffs[space.index(name)] += v
        return cls(space, coeffs)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def __add__(self, other: "Molecule") -> "Molecule":
        _same_space(self.space, other.space)
        return Molecule(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "Molecule") -> "Molecule":
        return self + (-1.0) * other

    def __mul__(self, a: float) -> "Molecule":
        return Molecule(self.space, a * self.coeffs)

    __rmul__ = __mul__


def _as_index(space, x) -> int:
    return space.index(x) if isinstance(x, str) else int(x)


def _same_space(a, b) -> None:
    if a is b:
        return
    if a.n_points != b.n_points:
        raise ValueError(f"dimension mismatch: {a.n_points} vs {b.n_points} points")


def validate_space(space: PointedMetricSpace, *, tol: float = METRIC_TOL,
                   max_witnesses: int = 10) -> ValidationReport:
    """Check the metric axioms, returning every violated axiom with witnesses."""
    d = np.asarray(space.dist)
    n = space.n_points
    found: list[Violation] = []

    def record(axiom, idx, detail_fn):
        for w in list(zip(*idx))[:max_witnesses]:
            w = tuple(int(i) for i in w)
            found.append(Violation(axiom, tuple(space.points[i] for i in w), detail_fn(w)))

    if not np.all(np.isfinite(d)):
        record("finite", np.nonzero(~np.isfinite(d)), lambda w: "non-finite distance")
        return ValidationReport(tuple(found))
    record("nonnegative", np.nonzero(d < 0), lambda w: f"d={d[w]:.17g}")
    record("zero-diagonal", (np.flatnonzero(np.diag(d) != 0),), lambda w: f"d={d[w[0], w[0]]:.17g}")
    off = ~np.eye(n, dtype=bool)
    upper = np.triu(off)
    record("separation", np.nonzero(upper & (d < MIN_SEPARATION)), lambda w: f"d={d[w]:.17g}")
    record("symmetry", np.nonzero(upper & (np.abs(d - d.T) > tol)),
           lambda w: f"d(p,q)={d[w]:.17g} d(q,p)={d[w[::-1]]:.17g}")
    # excess[p, q, r] = d(p, r) - d(p, q) - d(q, r)
    excess = d[:, None, :] - d[:, :, None] - d[None, :, :]
    record("triangle", np.nonzero(excess > tol),
           lambda w: f"d(p,r)={d[w[0], w[2]]:.17g} > d(p,q)+d(q,r)={d[w[0], w[1]] + d[w[1], w[2]]:.17g}")
    return ValidationReport(tuple(found))


def lip_norm(f: LipFunction, space=None) -> float:
    """Smallest Lipschitz constant of ``f``; 0 on single-point spaces."""
    if space is not None:
        _same_space(f.space, space)
    else:
        space = f.space
    return space.lipschitz_constant(f.values)


def molecule_eval(f: LipFunction, mu: Molecule) -> float:
    """The pairing ``<f, mu>`` (sum of coefficient times function value)."""
    _same_space(f.space, mu.space)
    coeffs = np.array(mu.coeffs)
    coeffs[mu.space.base] = 0.0
    return float(coeffs @ f.values)
