"""Transport densities on regular grids: rasterization and export.

The transport density of a matching is the superposition of arc-length
measures along its transport segments; rasterization clips each segment
against the grid analytically, so total mass equals transport cost up to
roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geom import Grid, dist, segment_cell_intervals, vec_norm
from .matchnorm import Matching
from .measures import StructuredVectorMeasure

__all__ = ["Grid", "GridDensity", "rasterize_plan", "rasterize_vector_measure", "export"]

_ASCII_RAMP = " .:-=+*#%@"


@dataclass(frozen=True)
class GridDensity:
    """Nonnegative mass per grid cell (flat C-order array)."""

    grid: Grid
    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).ravel()
        if m.size != self.grid.n_cells:
            raise ValidationError("cell masses do not match the grid size")
        if np.any(m < 0.0):
            raise ValidationError("cell masses must be nonnegative")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))

    def as_array(self) -> np.ndarray:
        return self.masses.reshape(self.grid.shape)


def _deposit_segment(acc: np.ndarray, grid: Grid, a, b, mass: float):
    """Spread `mass` over the cells crossed by [a, b], by length fraction."""
    flat, frac = segment_cell_intervals(grid, a, b)
    np.add.at(acc, flat, mass * frac)


def rasterize_plan(matching: Matching, grid: Grid, workers: int = 1) -> GridDensity:
    """Deposit mass * (length of segment inside each cell) for every edge.

    The total equals the matching cost to roundoff.  With workers > 1 the
    edges are processed in fixed index chunks and partial grids merged in
    chunk order, so the result is independent of worker count.
    """
    chunks = _chunk_indices(len(matching.edges), workers)
    partials = []
    for chunk in chunks:
        acc = np.zeros(grid.n_cells)
        for k in chunk:
            source, target, mass = matching.edges[k]
            _deposit_segment(acc, grid, source, target, mass * dist(source, target))
        partials.append(acc)
    return _merge_partials(grid, partials)


def rasterize_vector_measure(
    nu: StructuredVectorMeasure, grid: Grid, workers: int = 1
) -> GridDensity:
    """Rasterize the total variation of a structured vector measure.

    Segments deposit |density| * length by clipping, atoms deposit |vector|
    into their containing cell, and cell fields are resampled onto the target
    grid by overlap volume (they must not be finer than the target grid).
    """
    if nu.cells is not None:
        src = nu.cells.grid
        if np.any(src.cell_size < grid.cell_size - 1e-12 * grid.cell_size):
            raise ValidationError("cell field is finer than the target grid")
    chunks = _chunk_indices(nu.n_segments, workers)
    partials = []
    for chunk in chunks:
        acc = np.zeros(grid.n_cells)
        for k in chunk:
            a = nu.seg_a[k]
            b = nu.seg_b[k]
            _deposit_segment(acc, grid, a, b, vec_norm(nu.seg_density[k]) * nu.segment_lengths[k])
        partials.append(acc)
    tail = np.zeros(grid.n_cells)
    for point, vector in zip(nu.atom_points, nu.atom_vectors):
        if not grid.domain.contains(point):
            raise ValidationError(f"vector atom at {point.tolist()} outside the grid domain")
        tail[grid.flat_index(grid.cell_index(point))] += vec_norm(vector)
    if nu.cells is not None:
        _resample_cells(tail, nu, grid)
    partials.append(tail)
    return _merge_partials(grid, partials)


def _resample_cells(acc: np.ndarray, nu: StructuredVectorMeasure, grid: Grid):
    src = nu.cells.grid
    if not (grid.domain.contains(src.domain.lower) and grid.domain.contains(src.domain.upper)):
        raise ValidationError("cell field extends outside the target grid domain")
    for flat in range(src.n_cells):
        vector = nu.cells.vectors[flat]
        norm = vec_norm(vector)
        if norm == 0.0:
            continue
        multi = np.unravel_index(flat, src.shape)
        lo = src.domain.lower + np.asarray(multi, dtype=float) * src.cell_size
        hi = lo + src.cell_size
        # axis-wise overlap lengths with the target cells
        axis_weights = []
        axis_indices = []
        for k in range(grid.dim):
            cell = grid.cell_size[k]
            base = grid.domain.lower[k]
            i0 = max(0, int(np.floor((lo[k] - base) / cell)))
            i1 = min(grid.shape[k] - 1, int(np.ceil((hi[k] - base) / cell)) - 1)
            idx = np.arange(i0, i1 + 1)
            left = np.maximum(lo[k], base + idx * cell)
            right = np.minimum(hi[k], base + (idx + 1) * cell)
            w = np.maximum(right - left, 0.0)
            keep = w > 0.0
            axis_indices.append(idx[keep])
            axis_weights.append(w[keep])
        vol = axis_weights[0]
        for k in range(1, grid.dim):
            vol = np.multiply.outer(vol, axis_weights[k])
        mesh = np.meshgrid(*axis_indices, indexing="ij")
        flat_targets = np.ravel_multi_index([m.ravel() for m in mesh], grid.shape)
        np.add.at(acc, flat_targets, norm * vol.ravel())


def _chunk_indices(n: int, workers: int):
    workers = max(1, int(workers))
    if workers == 1 or n == 0:
        return [range(n)]
    size = (n + workers - 1) // workers
    return [range(k, min(k + size, n)) for k in range(0, n, size)]


def _merge_partials(grid: Grid, partials):
    total = np.zeros(grid.n_cells)
    for acc in partials:  # fixed-order merge keeps float results reproducible
        total += acc
    return GridDensity(grid=grid, masses=total)


def export(density: GridDensity, fmt: str) -> bytes:
    """Serialize as csv (any dimension), or svg heat map / ascii ramp (2-d only)."""
    if fmt == "csv":
        return _export_csv(density)
    if density.grid.dim != 2:
        raise ValidationError(f"{fmt} export requires a 2-d grid")
    if fmt == "svg":
        return _export_svg(density)
    if fmt == "ascii":
        return _export_ascii(density)
    raise ValidationError(f"unknown export format {fmt!r}")


def _export_csv(density: GridDensity) -> bytes:
    grid = density.grid
    header = ",".join(["i", "j", "k"][: grid.dim] + ["mass"])
    lines = [header]
    arr = density.as_array()
    for multi in np.ndindex(*grid.shape):
        idx = ",".join(str(i) for i in multi)
        lines.append(f"{idx},{float(arr[multi])!r}")
    return ("\n".join(lines) + "\n").encode()


def _export_svg(density: GridDensity, cell_px: int = 16) -> bytes:
    nx, ny = density.grid.shape
    arr = density.as_array()
    peak = float(arr.max())
    width, height = nx * cell_px, ny * cell_px
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    for i in range(nx):
        for j in range(ny):
            shade = 0.0 if peak == 0.0 else arr[i, j] / peak
            level = 255 - int(round(255 * shade))
            x = i * cell_px
            y = (ny - 1 - j) * cell_px
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" '
                f'fill="rgb({level},{level},{level})"/>'
            )
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode()


def _export_ascii(density: GridDensity) -> bytes:
    nx, ny = density.grid.shape
    arr = density.as_array()
    peak = float(arr.max())
    lines = []
    for j in range(ny - 1, -1, -1):
        chars = []
        for i in range(nx):
            if peak == 0.0:
                chars.append(" ")
            else:
                level = min(len(_ASCII_RAMP) - 1, int(len(_ASCII_RAMP) * arr[i, j] / peak))
                chars.append(_ASCII_RAMP[level])
        lines.append("".join(chars))
    return ("\n".join(lines) + "\n").encode()
