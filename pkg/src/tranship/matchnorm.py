"""Kantorovich norm of balanced atom measures: minimal connection, dual
Lipschitz potential, and the flat norm with its bounded-potential variant.

Three independent routes to the same value:

* :func:`minimal_connection` -- primal transport (assignment fast path for
  equal masses, successive-shortest-path flow otherwise),
* :func:`dual_potential` -- the finite dual LP over all support pairs,
* :func:`brute_force_connection` -- exhaustive matching oracle for tiny
  unit-mass instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .errors import TranshipError, ValidationError
from .geom import dist
from .measures import SignedAtomMeasure
from .mincostflow import solve_min_cost_flow

__all__ = [
    "Matching",
    "Potential",
    "minimal_connection",
    "dual_potential",
    "flat_norm",
    "brute_force_connection",
]

_LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True)
class Matching:
    """Transport edges (source point, target point, mass > 0) and their cost."""

    edges: tuple  # ((source, target, mass), ...) lexicographic by atom index
    cost: float

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True)
class Potential:
    """Dual potential on the atom support with a certified Lipschitz constant."""

    values: dict  # tuple(point) -> float
    lip_bound: float

    def __call__(self, point) -> float:
        return self.values[tuple(np.asarray(point, dtype=float))]


def _matching_cost(edges) -> float:
    # canonical accumulation order: the oracle sums the same floats the same way
    cost = 0.0
    for source, target, mass in edges:
        cost += mass * dist(source, target)
    return cost


def _edges_from_pairs(pos_pts, neg_pts, triples):
    edges = []
    for i, j, mass in sorted(triples):
        edges.append((pos_pts[i].copy(), neg_pts[j].copy(), float(mass)))
    for source, target, _ in edges:
        source.setflags(write=False)
        target.setflags(write=False)
    return tuple(edges)


def minimal_connection(f: SignedAtomMeasure) -> Matching:
    """Min-cost transport between the positive and negative parts of `f`.

    For equal masses this is an optimal assignment (Hungarian-style); in
    general it is an uncapacitated min-cost flow on the complete bipartite
    graph.  Edges are ordered lexicographically by (source, target) atom
    index, and the cost equals the Kantorovich norm of `f`.
    """
    f.require_balanced()
    pos_pts, pos_mass = f.positive_part()
    neg_pts, neg_mass = f.negative_part()
    if len(pos_pts) == 0:
        return Matching(edges=(), cost=0.0)

    equal = (
        len(pos_pts) == len(neg_pts)
        and np.all(pos_mass == pos_mass[0])
        and np.all(neg_mass == pos_mass[0])
    )
    if equal:
        d = _distance_matrix(pos_pts, neg_pts)
        rows, cols = linear_sum_assignment(d)
        triples = [(int(i), int(j), float(pos_mass[0])) for i, j in zip(rows, cols)]
    else:
        n_pos, n_neg = len(pos_pts), len(neg_pts)
        arcs = []
        costs = []
        for i in range(n_pos):
            for j in range(n_neg):
                arcs.append((i, n_pos + j))
                costs.append(dist(pos_pts[i], neg_pts[j]))
        supply = np.concatenate([pos_mass, -neg_mass])
        sol = solve_min_cost_flow(n_pos + n_neg, np.array(arcs), np.array(costs), supply)
        triples = []
        for a, (i, j) in enumerate(arcs):
            if sol.arc_flows[a] > 0.0:
                triples.append((i, j - n_pos, float(sol.arc_flows[a])))
    edges = _edges_from_pairs(pos_pts, neg_pts, triples)
    return Matching(edges=edges, cost=_matching_cost(edges))


def _distance_matrix(pts_a, pts_b) -> np.ndarray:
    d = np.empty((len(pts_a), len(pts_b)))
    for i, p in enumerate(pts_a):
        for j, q in enumerate(pts_b):
            d[i, j] = dist(p, q)
    return d


def _pair_constraints(points):
    """Rows of u_i - u_j <= |x_i - x_j| over all ordered support pairs."""
    n = len(points)
    rows = []
    rhs = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            row = np.zeros(n)
            row[i] = 1.0
            row[j] = -1.0
            rows.append(row)
            rhs.append(dist(points[i], points[j]))
    if not rows:
        return np.zeros((0, n)), np.zeros(0)
    return np.array(rows), np.array(rhs)


def dual_potential(f: SignedAtomMeasure):
    """Solve max sum_i m_i u(x_i) subject to the pairwise Lipschitz constraints.

    Returns ``(Potential, value)`` with the potential shifted so its minimum
    is zero; by strong duality the value equals the minimal-connection cost.
    """
    f.require_balanced()
    n = len(f)
    if n == 0:
        return Potential(values={}, lip_bound=0.0), 0.0
    points = f.points
    a_ub, b_ub = _pair_constraints(points)
    # pin u[0] = 0: the balanced objective is invariant under constant shifts
    res = linprog(
        c=-f.masses[1:],
        A_ub=a_ub[:, 1:],
        b_ub=b_ub,
        bounds=[(None, None)] * (n - 1),
        method="highs",
        options=_LP_OPTIONS,
    )
    if not res.success:
        raise TranshipError(f"dual potential LP failed: {res.message}")
    u = np.concatenate([[0.0], res.x])
    u -= u.min()
    value = float(np.sum(f.masses * u))
    lip = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = dist(points[i], points[j])
            if d > 0.0:
                lip = max(lip, abs(u[i] - u[j]) / d)
    values = {tuple(p): float(ui) for p, ui in zip(points, u)}
    return Potential(values=values, lip_bound=lip), value


def flat_norm(f: SignedAtomMeasure, convention: str = "max") -> float:
    """Flat norm of `f` (which need not be balanced).

    ``max``  : sup of the pairing over |u| <= 1 with Lipschitz constant <= 1.
    ``sum``  : the uniform bound and the Lipschitz budget share a total of 1,
               encoded with an explicit budget variable L.
    """
    if convention not in ("max", "sum"):
        raise ValidationError(f"unknown flat norm convention {convention!r}")
    value, _ = _flat_norm_lp(f, convention)
    return value


def _flat_norm_lp(f: SignedAtomMeasure, convention: str):
    n = len(f)
    if n == 0:
        return 0.0, np.zeros(0)
    a_pairs, b_pairs = _pair_constraints(f.points)
    if convention == "max":
        res = linprog(
            c=-f.masses,
            A_ub=a_pairs,
            b_ub=b_pairs,
            bounds=[(-1.0, 1.0)] * n,
            method="highs",
            options=_LP_OPTIONS,
        )
    else:
        # variables (u_1..u_n, L): u_i - u_j <= L d_ij and |u_i| <= 1 - L
        n_rows = a_pairs.shape[0]
        a_ub = np.zeros((n_rows + 2 * n, n + 1))
        b_ub = np.zeros(n_rows + 2 * n)
        a_ub[:n_rows, :n] = a_pairs
        a_ub[:n_rows, n] = -b_pairs
        for i in range(n):
            a_ub[n_rows + 2 * i, i] = 1.0
            a_ub[n_rows + 2 * i, n] = 1.0
            b_ub[n_rows + 2 * i] = 1.0
            a_ub[n_rows + 2 * i + 1, i] = -1.0
            a_ub[n_rows + 2 * i + 1, n] = 1.0
            b_ub[n_rows + 2 * i + 1] = 1.0
        res = linprog(
            c=np.concatenate([-f.masses, [0.0]]),
            A_ub=a_ub,
            b_ub=b_ub,
            bounds=[(None, None)] * n + [(0.0, 1.0)],
            method="highs",
            options=_LP_OPTIONS,
        )
    if not res.success:
        raise TranshipError(f"flat norm LP failed: {res.message}")
    u = res.x[: len(f)]
    return float(-res.fun), u


@lru_cache(maxsize=8)
def _all_permutations(k: int) -> np.ndarray:
    return np.array(list(permutations(range(k))), dtype=int)


def brute_force_connection(f: SignedAtomMeasure, max_dipoles: int = 7) -> float:
    """Exhaustive minimum over all perfect matchings; unit masses only.

    Testing oracle: enumerates every permutation, so it is independent of the
    solver it checks.  The per-permutation cost is accumulated in source-index
    order, the same order :func:`minimal_connection` uses.
    """
    f.require_balanced()
    pos_pts, pos_mass = f.positive_part()
    neg_pts, neg_mass = f.negative_part()
    if len(pos_pts) == 0:
        return 0.0
    magnitude = pos_mass[0]
    if len(pos_pts) != len(neg_pts) or not (
        np.all(pos_mass == magnitude) and np.all(neg_mass == magnitude)
    ):
        raise ValidationError("brute force oracle requires equal unit masses")
    k = len(pos_pts)
    if k > max_dipoles:
        raise ValidationError(f"brute force oracle limited to {max_dipoles} dipoles, got {k}")
    d = _distance_matrix(pos_pts, neg_pts)
    perms = _all_permutations(k)
    costs = d[np.arange(k)[None, :], perms].sum(axis=1)
    return float(magnitude * costs.min())
