"""Primal network simplex for uncapacitated min-cost flow on a complete digraph.

The basis is a spanning tree over the nodes plus an artificial root that is
joined to every node by a big-M arc. Entering and leaving arcs are chosen by
Bland's rule, which rules out cycling under degeneracy. Arithmetic is generic:
pass ``Fraction`` inputs for exact pivoting or floats for the fast path.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

MAX_PIVOTS = 200_000


@dataclass
class FlowSolution:
    flows: dict[tuple[int, int], object]
    cost: object
    potentials: list
    pivots: int


def _to_exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def solve_min_cost_flow(cost: Sequence[Sequence], supply: Sequence, *, exact: bool = False,
                        eps: float = 1e-12,
                        callback: Callable[[int, object, bool], None] | None = None) -> FlowSolution:
    """Minimise ``sum cost[i][j] * flow(i, j)`` over flows with
    ``outflow(v) - inflow(v) == supply[v]`` on the complete digraph.

    ``cost`` must be nonnegative with a zero diagonal, and ``supply`` must sum
    to zero. ``callback(pivot, cost, feasible)`` is invoked on the initial
    basis and after every pivot; ``feasible`` is true once no artificial arc
    carries flow, in which case ``cost`` is the cost of a genuine flow.

    The returned potentials satisfy ``cost[i][j] + pi[i] - pi[j] >= 0`` on
    every arc, with equality on arcs that carry flow.
    """
    n = len(supply)
    if exact:
        c = [[_to_exact(v) for v in row] for row in cost]
        b = [_to_exact(v) for v in supply]
        zero = Fraction(0)
    else:
        c = [[float(v) for v in row] for row in cost]
        b = [float(v) for v in supply]
        zero = 0.0
    if exact and sum(b) != 0:
        raise ValueError("supplies must sum to zero")
    if not exact and abs(sum(b)) > 1e-9 * (1 + sum(abs(v) for v in b)):
        raise ValueError("supplies must sum to zero")

    root = n
    tail: list[int] = []
    head: list[int] = []
    arc_cost: list = []
    for i in range(n):
        for j in range(n):
            if i != j:
                tail.append(i)
                head.append(j)
                arc_cost.append(c[i][j])
    n_real = len(tail)
    cmax = max((v for v in arc_cost), default=zero)
    big_m = 2 * cmax + 1

    flow = [zero] * n_real
    for v in range(n):
        if b[v] > 0:
            tail.append(v)
            head.append(root)
            flow.append(b[v])
        else:
            tail.append(root)
            head.append(v)
            flow.append(-b[v])
        arc_cost.append(big_m)
    n_arcs = len(tail)
    tree = set(range(n_real, n_arcs))
    adj: list[set[int]] = [set() for _ in range(n + 1)]
    for a in tree:
        adj[tail[a]].add(a)
        adj[head[a]].add(a)

    if not exact:
        np_tail = np.array(tail)
        np_head = np.array(head)
        np_cost = np.array(arc_cost, dtype=float)
        tol = eps * max(1.0, float(cmax))

    def real_cost():
        return sum((flow[a] * arc_cost[a] for a in range(n_real) if flow[a]), zero)

    flow_tol = zero if exact else 1e-12 * (1.0 + sum(abs(v) for v in b))

    def feasible():
        return all(flow[a] <= flow_tol for a in range(n_real, n_arcs))

    pivots = 0
    if callback is not None:
        callback(pivots, real_cost(), feasible())

    while True:
        # potentials along the tree: pi[head] = pi[tail] + cost on tree arcs
        pi = [zero] * (n + 1)
        parent_arc = [-1] * (n + 1)
        parent = [-1] * (n + 1)
        depth = [0] * (n + 1)
        stack = [root]
        seen = [False] * (n + 1)
        seen[root] = True
        while stack:
            x = stack.pop()
            for a in adj[x]:
                y = head[a] if tail[a] == x else tail[a]
                if seen[y]:
                    continue
                seen[y] = True
                parent[y], parent_arc[y], depth[y] = x, a, depth[x] + 1
                pi[y] = pi[x] + arc_cost[a] if tail[a] == x else pi[x] - arc_cost[a]
                stack.append(y)

        entering = -1
        if exact:
            for a in range(n_arcs):
                if a not in tree and arc_cost[a] + pi[tail[a]] - pi[head[a]] < 0:
                    entering = a
                    break
        else:
            pi_arr = np.array(pi)
            rc = np_cost + pi_arr[np_tail] - pi_arr[np_head]
            cand = np.flatnonzero(rc < -tol)
            for a in cand:
                if int(a) not in tree:
                    entering = int(a)
                    break
        if entering < 0:
            break

        u, v = tail[entering], head[entering]
        # cycle runs u -> v along the entering arc, then v -> u through the tree
        forward: list[int] = []
        backward: list[int] = []
        x, y = v, u
        while depth[x] > depth[y]:
            a = parent_arc[x]
            (forward if tail[a] == x else backward).append(a)
            x = parent[x]
        while depth[y] > depth[x]:
            a = parent_arc[y]
            (forward if head[a] == y else backward).append(a)
            y = parent[y]
        while x != y:
            a = parent_arc[x]
            (forward if tail[a] == x else backward).append(a)
            x = parent[x]
            a = parent_arc[y]
            (forward if head[a] == y else backward).append(a)
            y = parent[y]
        if not backward:
            raise RuntimeError("unbounded min-cost flow (negative cycle)")
        theta = min(flow[a] for a in backward)
        leaving = min(a for a in backward if flow[a] == theta)

        for a in forward:
            flow[a] += theta
        for a in backward:
            flow[a] -= theta
        flow[entering] = theta
        flow[leaving] = zero

        tree.discard(leaving)
        adj[tail[leaving]].discard(leaving)
        adj[head[leaving]].discard(leaving)
        tree.add(entering)
        adj[u].add(entering)
        adj[v].add(entering)

        pivots += 1
        if pivots > MAX_PIVOTS:
            raise RuntimeError("network simplex exceeded pivot limit")
        if callback is not None:
            callback(pivots, real_cost(), feasible())

    if not feasible():
        raise RuntimeError("artificial arcs carry flow at optimum")
    flows = {(tail[a], head[a]): flow[a] for a in range(n_real) if flow[a] > flow_tol}
    return FlowSolution(flows=flows, cost=real_cost(), potentials=pi[:n], pivots=pivots)
