"""Seeded generators for random spaces, molecules and functions."""
from __future__ import annotations

import zlib

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .metric_core import LipFunction, Molecule, PointedMetricSpace

SPACE_KINDS = ("euclidean", "grid-l1", "graph")


def trial_rng(seed: int, stream: str, trial: int) -> np.random.Generator:
    """Independent generator per (seed, stream, trial); adding trials never
    changes the draws of earlier ones."""
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(stream.encode()), trial])


def random_space(rng: np.random.Generator, n: int, kind: str | None = None,
                 prefix: str = "p") -> PointedMetricSpace:
    """A validated random metric space on ``n`` points with base 0.

    ``euclidean``: uniform points in the unit square. ``grid-l1``: distinct
    integer grid points under the l1 metric (distances are integers, so the
    free norm is solved exactly). ``graph``: shortest-path metric of a
    complete graph with random weights.
    """
    kind = kind or SPACE_KINDS[rng.integers(len(SPACE_KINDS))]
    names = tuple(f"{prefix}{i}" for i in range(n))
    if kind == "euclidean":
        space = PointedMetricSpace.from_points(rng.random((n, 2)), names=names)
    elif kind == "grid-l1":
        side = max(4, int(np.ceil(np.sqrt(4 * n))))
        cells = rng.choice(side * side, size=n, replace=False)
        coords = np.stack([cells // side, cells % side], axis=1)
        space = PointedMetricSpace.from_points(coords, p=1, names=names)
    elif kind == "graph":
        w = rng.uniform(0.1, 2.0, size=(n, n))
        w = np.triu(w, 1)
        w = w + w.T
        dist = shortest_path(w, directed=False)
        space = PointedMetricSpace(names, dist, 0)
    else:
        raise ValueError(f"unknown space kind {kind!r}")
    return space.require_valid()


def random_molecule(rng: np.random.Generator, space: PointedMetricSpace,
                    integer: bool | None = None) -> Molecule:
    if integer is None:
        integer = bool(rng.integers(2))
    n = space.n_points
    if integer:
        coeffs = rng.integers(-3, 4, size=n).astype(float)
    else:
        coeffs = rng.normal(size=n)
    keep = rng.random(n) < rng.uniform(0.3, 1.0)
    return Molecule(space, np.where(keep, coeffs, 0.0))


def random_function(rng: np.random.Generator, space, scale: float | None = None) -> LipFunction:
    scale = rng.lognormal(0.0, 1.0) if scale is None else scale
    values = rng.normal(size=space.n_points) * scale
    values[space.base] = 0.0
    return LipFunction(space, values)
