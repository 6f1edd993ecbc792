"""Gluing pointed metric spaces at a common base point.

The components meet only at the base. Distances between points of different
components come from a cross rule:

* ``"l1"``: ``d(x, y) = d(x, 0) + d(y, 0)`` (orthogonality constant 1)
* ``"sup"``: ``d(x, y) = max(d(x, 0), d(y, 0))`` (constant at most 2)
* ``"explicit"``: a user-supplied table of cross distances, validated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..free_norm import free_norm_primal
from ..metric_core import LipFunction, Molecule, PointedMetricSpace

CROSS_RULES = ("l1", "sup", "explicit")


@dataclass(frozen=True, eq=False)
class GluedSpace:
    components: tuple[PointedMetricSpace, ...]
    ambient: PointedMetricSpace
    cross_rule: str
    # members[j] = ambient indices of component j, in component order
    members: tuple[np.ndarray, ...]

    @property
    def n_components(self) -> int:
        return len(self.components)

    def component_of(self) -> np.ndarray:
        """Component label per ambient point; -1 at the base."""
        label = np.full(self.ambient.n_points, -1)
        for j, idx in enumerate(self.members):
            label[idx] = j
        label[self.ambient.base] = -1
        return label

    def restrict(self, mu: Molecule, j: int) -> Molecule:
        return Molecule(self.components[j], np.asarray(mu.coeffs)[self.members[j]])


def glue(components: Sequence[PointedMetricSpace], rule: str = "l1", *,
         cross: Mapping[tuple[str, str], float] | None = None,
         base_name: str | None = None) -> GluedSpace:
    """Disjoint union of ``components`` with their base points identified.

    Non-base point names must be distinct across components. For the
    ``"explicit"`` rule, ``cross`` maps every cross-component name pair (either
    order) to its distance.
    """
    if rule not in CROSS_RULES:
        raise ValueError(f"unknown cross rule {rule!r}; choose from {CROSS_RULES}")
    if not components:
        raise ValueError("need at least one component")
    if (rule == "explicit") != (cross is not None):
        raise ValueError("cross distances are required for, and only for, the explicit rule")
    components = tuple(c.require_valid() for c in components)

    names = [base_name or components[0].points[components[0].base]]
    owner = [-1]
    local = [-1]
    for j, comp in enumerate(components):
        for i, p in enumerate(comp.points):
            if i != comp.base:
                names.append(p)
                owner.append(j)
                local.append(i)
    if len(set(names)) != len(names):
        raise ValueError("non-base point names must be distinct across components")
    owner = np.array(owner)
    local = np.array(local)
    n = len(names)

    radius = np.zeros(n)
    for k in range(1, n):
        comp = components[owner[k]]
        radius[k] = comp.dist[comp.base, local[k]]

    dist = np.zeros((n, n))
    for k in range(n):
        for m in range(k + 1, n):
            if owner[k] == -1 or owner[m] == -1:
                v = radius[k] + radius[m]
            elif owner[k] == owner[m]:
                v = components[owner[k]].dist[local[k], local[m]]
            elif rule == "l1":
                v = radius[k] + radius[m]
            elif rule == "sup":
                v = max(radius[k], radius[m])
            else:
                key = (names[k], names[m])
                if key in cross:
                    v = cross[key]
                elif key[::-1] in cross:
                    v = cross[key[::-1]]
                else:
                    raise ValueError(f"missing cross distance for {key}")
            dist[k, m] = dist[m, k] = v
    ambient = PointedMetricSpace(tuple(names), dist, 0)
    if not ambient.validation.ok:
        raise ValueError(f"glued space is not a metric space:\n{ambient.validation}")

    members = []
    for j, comp in enumerate(components):
        idx = np.empty(comp.n_points, dtype=int)
        idx[comp.base] = 0
        mine = np.flatnonzero(owner == j)
        idx[local[mine]] = mine
        members.append(idx)
    return GluedSpace(components, ambient, rule, tuple(members))


def orthogonality_constant(g: GluedSpace) -> float:
    """Smallest ``C`` with ``d(x,0) + d(y,0) <= C d(x,y)`` across components (1 if there are none)."""
    d = g.ambient.dist
    r = g.ambient.distance_to_base()
    label = g.component_of()
    cross = (label[:, None] != label[None, :]) & (label[:, None] >= 0) & (label[None, :] >= 0)
    if not cross.any():
        return 1.0
    if np.any(d[cross] <= 0):
        raise ValueError("invalid gluing: zero distance between different components")
    ratio = (r[:, None] + r[None, :])[cross] / d[cross]
    return max(1.0, float(ratio.max()))


def glue_function(g: GluedSpace, fs: Sequence[LipFunction]) -> LipFunction:
    """Paste one function per component into a function on the ambient space."""
    if len(fs) != g.n_components:
        raise ValueError(f"expected {g.n_components} functions, got {len(fs)}")
    values = np.zeros(g.ambient.n_points)
    for idx, f, comp in zip(g.members, fs, g.components):
        if f.space.n_points != comp.n_points:
            raise ValueError("function does not live on its component")
        values[idx] = f.values
    return LipFunction(g.ambient, values)


def restrict_function(g: GluedSpace, f: LipFunction, j: int) -> LipFunction:
    return LipFunction(g.components[j], np.asarray(f.values)[g.members[j]])


def decomposition_ratio(g: GluedSpace, mu: Molecule) -> tuple[float, float]:
    """``(ambient free norm, sum of component free norms of the restrictions)``."""
    if mu.space.n_points != g.ambient.n_points:
        raise ValueError("molecule is not supported on the glued space")
    ambient, _ = free_norm_primal(mu, g.ambient)
    total = sum(free_norm_primal(g.restrict(mu, j))[0] for j in range(g.n_components))
    return ambient, float(total)
