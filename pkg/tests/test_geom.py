import numpy as np
import pytest

from tranship.errors import ValidationError
from tranship.geom import Domain, Grid, dist, gauss_legendre, segment_cell_intervals, segment_quadrature


def test_domain_requires_strict_box():
    with pytest.raises(ValidationError):
        Domain([0.0, 0.0], [1.0, 0.0])


def test_domain_from_geometry_pads_degenerate_axes():
    dom = Domain.from_geometry(np.array([[0.0, 0.5], [1.0, 0.5]]))
    assert dom.contains([0.0, 0.5]) and dom.contains([1.0, 0.5])
    assert dom.lower[1] < 0.5 < dom.upper[1]


def test_cell_index_boundary_ties_go_low():
    grid = Grid(Domain([0.0, 0.0], [1.0, 1.0]), (4, 4))
    assert grid.cell_index([0.25, 0.1]) == (0, 0)  # exactly on the 0/1 boundary
    assert grid.cell_index([0.26, 0.1]) == (1, 0)
    assert grid.cell_index([1.0, 1.0]) == (3, 3)
    assert grid.cell_index([0.0, 0.0]) == (0, 0)


def test_grid_centers_order_is_c_major():
    grid = Grid(Domain([0.0, 0.0], [1.0, 1.0]), (2, 2))
    centers = grid.centers()
    assert np.allclose(centers[0], [0.25, 0.25])
    assert np.allclose(centers[1], [0.25, 0.75])  # axis 0 major
    assert grid.flat_index((1, 0)) == 2


def test_gauss_legendre_degree_exactness():
    # 8 nodes integrate x^15 on [-1,1] exactly (odd: zero) and x^14 to roundoff
    nodes, weights = gauss_legendre(8)
    assert abs(np.sum(weights * nodes**15)) < 1e-14
    exact = 2.0 / 15.0
    assert abs(np.sum(weights * nodes**14) - exact) < 1e-14


def test_segment_quadrature_weights_sum_to_length(rng):
    for _ in range(20):
        a = rng.uniform(-1, 1, size=2)
        b = rng.uniform(-1, 1, size=2)
        if dist(a, b) == 0.0:
            continue
        _, w = segment_quadrature(a, b)
        assert abs(w.sum() - dist(a, b)) < 1e-13


def test_clipping_fractions_sum_to_one(rng):
    grid = Grid(Domain([0.0, 0.0], [1.0, 1.0]), (16, 16))
    for _ in range(100):
        a = rng.uniform(0, 1, size=2)
        b = rng.uniform(0, 1, size=2)
        flat, frac = segment_cell_intervals(grid, a, b)
        assert abs(frac.sum() - 1.0) <= 1e-12
        assert np.all(frac > 0)
        assert np.all((flat >= 0) & (flat < grid.n_cells))


def test_clipping_on_a_cell_face_goes_to_lower_cell():
    grid = Grid(Domain([0.0, 0.0], [1.0, 1.0]), (2, 2))
    flat, frac = segment_cell_intervals(grid, [0.1, 0.5], [0.4, 0.5])
    # runs along the j=0/1 face: assigned to j=0
    assert flat.tolist() == [grid.flat_index((0, 0))]
    assert abs(frac.sum() - 1.0) <= 1e-15


def test_clipping_rejects_outside_endpoint():
    grid = Grid(Domain([0.0, 0.0], [1.0, 1.0]), (2, 2))
    with pytest.raises(ValidationError):
        segment_cell_intervals(grid, [0.5, 0.5], [1.5, 0.5])
