"""Uncapacitated min-cost flow by successive shortest paths with potentials.

The solver works on directed arcs with nonnegative costs.  Node potentials
are maintained so every Dijkstra runs on nonnegative reduced costs; at
termination they are an optimal dual solution:

* ``u[i] - u[j] <= cost(i, j)`` for every arc (feasibility),
* ``u[i] - u[j] == cost(i, j)`` on every flow-carrying arc (slackness).

With arcs built from Euclidean lengths this makes ``u`` a Kantorovich
potential certifying the transport cost, which is why the solver is written
out rather than delegated: the certificates are part of the public contract.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleFlowError, ValidationError

__all__ = ["FlowSolution", "solve_min_cost_flow"]

_MAX_AUGMENTATIONS_FACTOR = 16


@dataclass(frozen=True)
class FlowSolution:
    arc_flows: np.ndarray  # flow >= 0 per input arc
    potentials: np.ndarray  # optimal dual values per node
    cost: float


def solve_min_cost_flow(n_nodes, arcs, costs, supply) -> FlowSolution:
    """Route `supply` (positive = source, negative = sink) through directed
    uncapacitated `arcs` at minimum total cost.

    Parameters
    ----------
    n_nodes : int
    arcs : (m, 2) int array of (tail, head) pairs
    costs : (m,) nonnegative arc costs
    supply : (n_nodes,) signed reals summing to ~0

    Raises
    ------
    InfeasibleFlowError
        If some supply cannot reach any remaining demand.
    """
    arcs = np.asarray(arcs, dtype=int).reshape(-1, 2)
    costs = np.asarray(costs, dtype=float).ravel()
    supply = np.asarray(supply, dtype=float).ravel()
    if arcs.shape[0] != costs.size:
        raise ValidationError("arcs and costs length mismatch")
    if supply.size != n_nodes:
        raise ValidationError("supply length does not match node count")
    if np.any(costs < 0.0):
        raise ValidationError("arc costs must be nonnegative")

    m = arcs.shape[0]
    scale = float(np.sum(np.abs(supply)))
    eps = 1e-13 * max(scale, 1.0)

    out_arcs = [[] for _ in range(n_nodes)]
    in_arcs = [[] for _ in range(n_nodes)]
    for a in range(m):
        out_arcs[arcs[a, 0]].append(a)
        in_arcs[arcs[a, 1]].append(a)

    flow = np.zeros(m)
    potential = np.zeros(n_nodes)
    excess = supply.copy()

    def dijkstra(source):
        """Shortest reduced-cost paths from `source`; stops at the first
        settled deficit node.  Returns (target, dist, settled, parent)."""
        dist = np.full(n_nodes, np.inf)
        settled = np.zeros(n_nodes, dtype=bool)
        parent = [None] * n_nodes  # (arc index, forward?) used to reach node
        dist[source] = 0.0
        heap = [(0.0, source)]
        target = -1
        while heap:
            d, v = heapq.heappop(heap)
            if settled[v]:
                continue
            settled[v] = True
            if excess[v] < -eps:
                target = v
                break
            pv = potential[v]
            for a in out_arcs[v]:
                w = arcs[a, 1]
                if settled[w]:
                    continue
                # forward arc, reduced cost >= 0 up to roundoff
                nd = d + max(costs[a] - pv + potential[w], 0.0)
                if nd < dist[w]:
                    dist[w] = nd
                    parent[w] = (a, True)
                    heapq.heappush(heap, (nd, w))
            for a in in_arcs[v]:
                if flow[a] <= 0.0:
                    continue
                w = arcs[a, 0]
                if settled[w]:
                    continue
                # canceling arc of a flow-carrying arc, cost -costs[a]
                nd = d + max(-costs[a] - pv + potential[w], 0.0)
                if nd < dist[w]:
                    dist[w] = nd
                    parent[w] = (a, False)
                    heapq.heappush(heap, (nd, w))
        return target, dist, settled, parent

    max_rounds = _MAX_AUGMENTATIONS_FACTOR * (n_nodes + m + 1)
    rounds = 0
    while True:
        sources = np.nonzero(excess > eps)[0]
        if sources.size == 0:
            break
        if not np.any(excess < -eps):
            break
        s = int(sources[0])
        target, dist_lab, settled, parent = dijkstra(s)
        if target < 0:
            raise InfeasibleFlowError(
                f"supply at node {s} cannot reach any demand "
                "(graph disconnected between sources and sinks)"
            )
        d_t = dist_lab[target]
        potential -= np.where(settled, np.minimum(dist_lab, d_t), d_t)

        # walk the path backwards to find the bottleneck
        path = []
        v = target
        while v != s:
            a, forward = parent[v]
            path.append((a, forward))
            v = arcs[a, 0] if forward else arcs[a, 1]
        delta = min(excess[s], -excess[target])
        for a, forward in path:
            if not forward:
                delta = min(delta, flow[a])
        for a, forward in path:
            if forward:
                flow[a] += delta
            else:
                flow[a] = 0.0 if flow[a] == delta else flow[a] - delta
        if delta == excess[s]:
            excess[s] = 0.0
        else:
            excess[s] -= delta
        if delta == -excess[target]:
            excess[target] = 0.0
        else:
            excess[target] += delta

        rounds += 1
        if rounds > max_rounds:
            raise InfeasibleFlowError(
                "augmentation limit exceeded; supplies may be numerically inconsistent"
            )

    cost = 0.0
    for a in range(m):
        if flow[a] != 0.0:
            cost += flow[a] * costs[a]
    flow.setflags(write=False)
    potential.setflags(write=False)
    return FlowSolution(arc_flows=flow, potentials=potential, cost=cost)
