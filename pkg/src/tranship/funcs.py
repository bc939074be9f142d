"""Closed-form test functions with exact gradients.

These are the functions a distribution is paired against.  Anything with a
``value(point) -> float`` and ``gradient(point) -> ndarray`` pair works;
the classes here are the built-in C^1 kinds.  Polynomials additionally
expose ``degree`` so quadrature routines can flag exactness violations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import ValidationError
from .geom import as_point

__all__ = ["TestFunction", "Coordinate", "Polynomial", "RadialBump", "polynomial_family"]


@runtime_checkable
class TestFunction(Protocol):
    def value(self, point) -> float: ...

    def gradient(self, point) -> np.ndarray: ...


@dataclass(frozen=True)
class Coordinate:
    """The i-th coordinate function x -> x_i."""

    axis: int
    dim: int = 2

    degree = 1

    def value(self, point) -> float:
        return float(np.asarray(point, dtype=float)[self.axis])

    def gradient(self, point) -> np.ndarray:
        g = np.zeros(self.dim)
        g[self.axis] = 1.0
        return g

    def __str__(self):
        return f"x[{self.axis}]"


@dataclass(frozen=True)
class Polynomial:
    """Multivariate polynomial given by {multi-index exponent: coefficient}."""

    coeffs: dict
    dim: int

    def __post_init__(self):
        clean = {}
        for exps, c in self.coeffs.items():
            e = tuple(int(k) for k in exps)
            if len(e) != self.dim or any(k < 0 for k in e):
                raise ValidationError(f"bad monomial exponent {exps!r} for dim {self.dim}")
            if c != 0.0:
                clean[e] = float(c)
        object.__setattr__(self, "coeffs", clean)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def value(self, point) -> float:
        x = np.asarray(point, dtype=float)
        total = 0.0
        for exps, c in self.coeffs.items():
            term = c
            for xi, e in zip(x, exps):
                if e:
                    term *= xi**e
            total += term
        return float(total)

    def gradient(self, point) -> np.ndarray:
        x = np.asarray(point, dtype=float)
        g = np.zeros(self.dim)
        for exps, c in self.coeffs.items():
            for axis, e in enumerate(exps):
                if e == 0:
                    continue
                term = c * e
                for k, (xi, ek) in enumerate(zip(x, exps)):
                    p = ek - 1 if k == axis else ek
                    if p:
                        term *= xi**p
                g[axis] += term
        return g

    def __str__(self):
        terms = sorted(self.coeffs.items())
        return " + ".join(f"{c}*x^{e}" for e, c in terms) or "0"


@dataclass(frozen=True)
class RadialBump:
    """Compactly supported C^2 bump a*(1 - (r/R)^2)^3 around a center."""

    center: np.ndarray
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.radius > 0:
            raise ValidationError("bump radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.size

    def value(self, point) -> float:
        d = np.asarray(point, dtype=float) - self.center
        s2 = float(np.dot(d, d)) / self.radius**2
        if s2 >= 1.0:
            return 0.0
        return self.amplitude * (1.0 - s2) ** 3

    def gradient(self, point) -> np.ndarray:
        d = np.asarray(point, dtype=float) - self.center
        s2 = float(np.dot(d, d)) / self.radius**2
        if s2 >= 1.0:
            return np.zeros(self.dim)
        return (-6.0 * self.amplitude / self.radius**2) * (1.0 - s2) ** 2 * d

    def __str__(self):
        return f"bump({self.center.tolist()}, R={self.radius})"


def polynomial_family(dim: int, max_degree: int = 3) -> tuple:
    """All monomials of total degree <= max_degree, in graded lexicographic order.

    The constant monomial is included: it pairs to the total mass of the
    measure part, so it detects imbalance.
    """
    funcs = []
    for total in range(max_degree + 1):
        for exps in itertools.product(range(total + 1), repeat=dim):
            if sum(exps) == total:
                funcs.append(Polynomial({exps: 1.0}, dim))
    return tuple(funcs)
