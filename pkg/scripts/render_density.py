#!/usr/bin/env python3
"""Solve a random transport instance and render its transport density.

Prints the ascii heat map and writes density.svg next to the working
directory; the density total is checked against the transport cost.
"""

import sys

import numpy as np

from tranship.density import export, rasterize_plan
from tranship.geom import Domain, Grid
from tranship.matchnorm import minimal_connection
from tranship.testing import random_balanced_measure


def main():
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 42
    rng = np.random.default_rng(seed)
    f = random_balanced_measure(rng, max_pairs=12)
    matching = minimal_connection(f)
    grid = Grid(Domain([-0.1, -0.1], [1.1, 1.1]), (48, 48))
    density = rasterize_plan(matching, grid)
    sys.stdout.write(export(density, "ascii").decode())
    with open("density.svg", "wb") as fh:
        fh.write(export(density, "svg"))
    gap = abs(density.total - matching.cost)
    print(f"\ncost {matching.cost:.12f}  raster total {density.total:.12f}  gap {gap:.3e}")
    print("wrote density.svg")


if __name__ == "__main__":
    main()
