"""Free-space norm of a molecule: transport (primal) and Lipschitz (dual) formulations."""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .metric_core import LipFunction, Molecule, PointedMetricSpace, lip_norm, molecule_eval
from .network_simplex import solve_min_cost_flow

GAP_TOL = 1e-7
CERT_TOL = 1e-9
MAX_DENOMINATOR = 10**6


@dataclass(frozen=True)
class TransportPlan:
    """Nonnegative flows ``(p, q) -> mass moved from p to q`` and their total cost.

    For every non-base point the net inflow equals the molecule's coefficient;
    the base point absorbs whatever imbalance remains. ``potentials`` vanish
    at the base and form a 1-Lipschitz function whose pairing with the
    molecule equals ``cost``.
    """

    flows: dict[tuple[int, int], float]
    cost: float
    exact_cost: Fraction | None = None
    potentials: tuple[float, ...] = ()
    pivots: int = 0

    def net_inflow(self, n_points: int) -> np.ndarray:
        out = np.zeros(n_points)
        for (p, q), w in self.flows.items():
            out[q] += w
            out[p] -= w
        return out


@dataclass(frozen=True)
class DualCertificate:
    f: LipFunction
    value: float


def _rational(x: float) -> Fraction | None:
    q = Fraction(x).limit_denominator(MAX_DENOMINATOR)
    return q if float(q) == x else None


# rational form of each space's distance matrix (None if it has none)
_RATIONAL_DIST: "weakref.WeakKeyDictionary[PointedMetricSpace, list | None]" = weakref.WeakKeyDictionary()


def _rational_dist(space: PointedMetricSpace):
    if space not in _RATIONAL_DIST:
        d = [[_rational(v) for v in row] for row in space.dist.tolist()]
        _RATIONAL_DIST[space] = None if any(v is None for row in d for v in row) else d
    return _RATIONAL_DIST[space]


def _exact_inputs(space: PointedMetricSpace, coeffs: np.ndarray):
    c = [_rational(v) for v in coeffs.tolist()]
    if any(v is None for v in c):
        return None
    d = _rational_dist(space)
    return None if d is None else (d, c)


def free_norm_primal(mu: Molecule, space: PointedMetricSpace | None = None, *,
                     exact: bool | None = None,
                     callback: Callable[[int, object, bool], None] | None = None
                     ) -> tuple[float, TransportPlan]:
    """Minimum transport cost of ``mu`` with free creation/destruction of mass at the base.

    ``exact=None`` pivots in rational arithmetic whenever every distance and
    coefficient is a ratio with denominator at most 10**6, and in floating
    point otherwise.
    """
    space = (space or mu.space).require_valid()
    if space.n_points != mu.space.n_points:
        raise ValueError("molecule and space have different numbers of points")
    if mu.is_zero:
        return 0.0, TransportPlan({}, 0.0, Fraction(0), tuple([0.0] * space.n_points))

    coeffs = np.asarray(mu.coeffs)
    rational = _exact_inputs(space, coeffs) if exact is not False else None
    if exact and rational is None:
        raise ValueError("inputs are not representable with denominators <= 10**6")
    if rational is not None:
        d, c = rational
        supply = [-v for v in c]
        supply[space.base] = sum(c[i] for i in range(len(c)) if i != space.base)
        sol = solve_min_cost_flow(d, supply, exact=True, callback=callback)
        exact_cost = sol.cost
    else:
        supply = -coeffs.copy()
        supply[space.base] = 0.0
        supply[space.base] = -supply.sum()
        sol = solve_min_cost_flow(space.dist, supply, exact=False, callback=callback)
        exact_cost = None
    base_pot = sol.potentials[space.base]
    plan = TransportPlan(
        flows={k: float(v) for k, v in sol.flows.items()},
        cost=float(sol.cost),
        exact_cost=exact_cost,
        potentials=tuple(float(p - base_pot) for p in sol.potentials),
        pivots=sol.pivots,
    )
    return plan.cost, plan


def dual_constraints(space: PointedMetricSpace):
    """Pairwise constraints ``f(x) - f(y) <= d(x, y)`` in both orientations as ``A f <= b``."""
    n = space.n_points
    rows, rhs = [], []
    for i in range(n):
        for j in range(n):
            if i != j:
                r = np.zeros(n)
                r[i], r[j] = 1.0, -1.0
                rows.append(r)
                rhs.append(space.dist[i, j])
    return np.array(rows).reshape(-1, n), np.array(rhs)


def free_norm_dual(mu: Molecule, space: PointedMetricSpace | None = None
                   ) -> tuple[float, DualCertificate]:
    """Maximum of ``<f, mu>`` over 1-Lipschitz ``f`` vanishing at the base, with the maximiser."""
    space = (space or mu.space).require_valid()
    n = space.n_points
    if mu.is_zero or n == 1:
        f = LipFunction.zero(mu.space)
        return 0.0, DualCertificate(f, 0.0)
    a_ub, b_ub = dual_constraints(space)
    bounds = [(None, None)] * n
    bounds[space.base] = (0.0, 0.0)
    res = linprog(-np.asarray(mu.coeffs), A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"dual LP failed: {res.message}")
    values = np.asarray(res.x, dtype=float)
    values[space.base] = 0.0
    f = LipFunction(mu.space, values)
    lip = lip_norm(f)
    if lip > 1.0:
        # solver feasibility slack; rescale into the unit ball so the certificate is genuine
        f = LipFunction(mu.space, values / lip)
    value = molecule_eval(f, mu)
    return value, DualCertificate(f, value)


def duality_gap(mu: Molecule, space: PointedMetricSpace | None = None) -> float:
    primal, _ = free_norm_primal(mu, space)
    dual, _ = free_norm_dual(mu, space)
    return abs(primal - dual)


def free_norm(mu: Molecule, space: PointedMetricSpace | None = None) -> float:
    return free_norm_primal(mu, space)[0]


def check_certificate(cert: DualCertificate, mu: Molecule, tol: float = CERT_TOL) -> bool:
    f = cert.f
    return (f.values[f.space.base] == 0.0 and lip_norm(f) <= 1.0 + tol
            and abs(molecule_eval(f, mu) - cert.value) <= tol * (1 + abs(cert.value)))


def check_plan(plan: TransportPlan, mu: Molecule, tol: float = 1e-9) -> bool:
    """Nonnegativity, conservation at non-base points and the stated cost."""
    space = mu.space
    if any(w < 0 for w in plan.flows.values()):
        return False
    inflow = plan.net_inflow(space.n_points)
    mask = np.arange(space.n_points) != space.base
    scale = 1 + np.abs(mu.coeffs).sum()
    if np.max(np.abs(inflow[mask] - mu.coeffs[mask]), initial=0.0) > tol * scale:
        return False
    cost = sum(w * space.dist[p, q] for (p, q), w in plan.flows.items())
    return abs(cost - plan.cost) <= tol * (1 + plan.cost)
