"""Seeded instance generators shared by the self-test suites and the tests."""

from __future__ import annotations

import numpy as np

from .geom import dist
from .matchnorm import minimal_connection
from .measures import SignedAtomMeasure, StructuredVectorMeasure

__all__ = [
    "random_balanced_measure",
    "random_unit_dipole_measure",
    "random_dipole",
    "certified_instance",
]


def random_balanced_measure(rng: np.random.Generator, max_pairs: int = 15) -> SignedAtomMeasure:
    """Balanced measure with distinct random masses in the unit box."""
    n_pos = int(rng.integers(1, max_pairs + 1))
    n_neg = int(rng.integers(1, max_pairs + 1))
    pos_mass = rng.uniform(0.05, 1.0, size=n_pos)
    neg_mass = rng.uniform(0.05, 1.0, size=n_neg)
    neg_mass *= pos_mass.sum() / neg_mass.sum()
    points = rng.uniform(0.0, 1.0, size=(n_pos + n_neg, 2))
    return SignedAtomMeasure(points, np.concatenate([pos_mass, -neg_mass]))


def random_unit_dipole_measure(rng: np.random.Generator, max_pairs: int = 7) -> SignedAtomMeasure:
    """Unit-mass dipole collection in the unit box."""
    k = int(rng.integers(1, max_pairs + 1))
    points = rng.uniform(0.0, 1.0, size=(2 * k, 2))
    masses = np.concatenate([np.ones(k), -np.ones(k)])
    return SignedAtomMeasure(points, masses)


def random_dipole(rng: np.random.Generator, max_distance: float = 5.0):
    """A single +/- pair at controlled separation; returns (measure, distance)."""
    p = rng.uniform(0.0, 1.0, size=2)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    r = rng.uniform(1e-3, max_distance)
    n = p + r * np.array([np.cos(angle), np.sin(angle)])
    f = SignedAtomMeasure(np.array([p, n]), np.array([1.0, -1.0]))
    return f, dist(p, n)


def certified_instance(rng: np.random.Generator, max_pairs: int = 6, n_normal: int = 3):
    """Tangential transport plus well-separated normal atoms.

    Returns (nu, matching, normal_part): `nu` combines the optimal transport
    segments of a random balanced measure with far-away vector atoms, so the
    norm additivity of the tangential/normal decomposition is certifiable by
    an explicit Lipschitz witness.  Normal atoms sit on a line at x >= 4,
    farther from the unit box than any potential value can reach, and 10
    bump radii apart from each other.
    """
    from .genplan import plan_from_matching, to_vector_measure

    f = random_balanced_measure(rng, max_pairs=max_pairs)
    matching = minimal_connection(f)
    nu_t = to_vector_measure(plan_from_matching(matching))
    atoms = []
    for k in range(n_normal):
        z = np.array([4.0 + 2.0 * k, rng.uniform(0.0, 1.0)])
        vec = rng.normal(size=2)
        vec *= rng.uniform(0.5, 2.0) / np.sqrt(np.dot(vec, vec))
        atoms.append((z, vec))
    normal_part = StructuredVectorMeasure.build(2, atoms=atoms, validate=False)
    nu = nu_t + normal_part
    return nu, matching, normal_part
