"""Uniform dyadic grids over a box domain and per-cell probability measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridSpec",
    "CellMeasure",
    "cell_of",
    "locate_cells",
    "bin_samples",
    "kt_probabilities",
    "empirical_cell_measure",
    "analytic_cell_probabilities",
    "read_samples_csv",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform dyadic tesselation of a d-dimensional box.

    The box is affinely rescaled to the unit cube and split into ``2**depth``
    equal cells per axis, ``2**(dimension * depth)`` hypercubes in total.
    Linear cell indices are row-major with axis 1 running fastest::

        index = i_1 + i_2 * 2**depth + ... + i_d * 2**((d - 1) * depth)

    Cells are half-open along every axis (a point on an interior cell edge
    belongs to the upper cell); the last cell per axis is closed so that the
    whole box is covered.
    """

    dimension: int
    depth: int
    domain_lower: tuple[float, ...]
    domain_upper: tuple[float, ...]

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        lower = tuple(float(v) for v in np.atleast_1d(np.asarray(self.domain_lower, dtype=float)))
        upper = tuple(float(v) for v in np.atleast_1d(np.asarray(self.domain_upper, dtype=float)))
        if len(lower) != self.dimension or len(upper) != self.dimension:
            raise ValueError("domain bounds must have one entry per axis")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise ValueError("domain_lower must be strictly below domain_upper on every axis")
        object.__setattr__(self, "domain_lower", lower)
        object.__setattr__(self, "domain_upper", upper)

    @classmethod
    def cube(cls, dimension: int, depth: int, low: float, high: float) -> "GridSpec":
        """Grid whose box is the same interval ``[low, high]`` on every axis."""
        return cls(dimension, depth, (low,) * dimension, (high,) * dimension)

    @property
    def cells_per_axis(self) -> int:
        return 1 << self.depth

    @property
    def cell_count(self) -> int:
        return 1 << (self.dimension * self.depth)

    def normalize(self, points) -> np.ndarray:
        """Map domain coordinates onto the unit cube (may land outside [0, 1])."""
        lo = np.asarray(self.domain_lower)
        hi = np.asarray(self.domain_upper)
        return (np.asarray(points, dtype=float) - lo) / (hi - lo)

    def cell_multi_index(self, index: int) -> tuple[int, ...]:
        """Per-axis cell coordinates ``(i_1, ..., i_d)`` of a linear index."""
        if not 0 <= index < self.cell_count:
            raise ValueError(f"cell index {index} out of range for {self.cell_count} cells")
        out = []
        for _ in range(self.dimension):
            out.append(index & (self.cells_per_axis - 1))
            index >>= self.depth
        return tuple(out)

    def cell_index(self, multi) -> int:
        """Linear index of per-axis coordinates; inverse of :meth:`cell_multi_index`."""
        multi = tuple(int(i) for i in multi)
        if len(multi) != self.dimension:
            raise ValueError("multi-index must have one entry per axis")
        if any(not 0 <= i < self.cells_per_axis for i in multi):
            raise ValueError("multi-index entry out of range")
        index = 0
        for i in reversed(multi):
            index = (index << self.depth) | i
        return index

    def cell_bounds(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        """Cell bounds in normalized coordinates as ``(lower, upper)`` vectors."""
        multi = np.asarray(self.cell_multi_index(index), dtype=float)
        m = self.cells_per_axis
        return multi / m, (multi + 1.0) / m

    def axis_edges(self, axis: int) -> np.ndarray:
        """The ``2**depth + 1`` cell edges along one axis, in domain coordinates."""
        lo = self.domain_lower[axis]
        hi = self.domain_upper[axis]
        return lo + (hi - lo) * np.arange(self.cells_per_axis + 1) / self.cells_per_axis


@dataclass
class CellMeasure:
    """Probability vector over the cells of a grid.

    ``sample_count`` is the number of (kept) samples behind an empirical
    measure and 0 for an analytic one.  ``kt_applied`` records whether the
    add-half preloading was used, which guarantees strictly positive entries.
    """

    probs: np.ndarray
    sample_count: int = 0
    kt_applied: bool = False

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-D vector")
        if not np.all(np.isfinite(probs)):
            raise ValueError("probs must be finite")
        if self.sample_count < 0:
            raise ValueError("sample_count must be >= 0")
        total = float(np.sum(probs))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probs must sum to 1 (got {total!r})")
        if self.kt_applied:
            floor = 0.5 / (0.5 * probs.size + self.sample_count)
            if not np.all(probs >= floor):
                raise ValueError("preloaded probabilities fall below the add-half floor")
        elif np.any(probs < 0.0):
            raise ValueError("probs must be non-negative")
        self.probs = probs
        self.sample_count = int(self.sample_count)

    @property
    def cell_count(self) -> int:
        return self.probs.size


def locate_cells(grid: GridSpec, samples) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized cell lookup.

    Parameters
    ----------
    grid : GridSpec
    samples : array-like
        Points, reshaped to ``(n, d)``.

    Returns
    -------
    indices : int ndarray of shape (n,)
        Linear cell index per point; -1 where the point is outside the box.
    inside : bool ndarray of shape (n,)
        True for points inside the (closed) box.  Non-finite coordinates
        count as outside.
    """
    pts = np.asarray(samples, dtype=float).reshape(-1, grid.dimension)
    z = grid.normalize(pts)
    inside = np.all((z >= 0.0) & (z <= 1.0), axis=1)
    m = grid.cells_per_axis
    ij = np.floor(z * m)
    ij = np.clip(ij, 0, m - 1).astype(np.int64)
    strides = (1 << (grid.depth * np.arange(grid.dimension))).astype(np.int64)
    indices = ij @ strides
    indices[~inside] = -1
    return indices, inside


def cell_of(grid: GridSpec, point) -> int | None:
    """Cell index containing ``point``, or ``None`` if it lies outside the box."""
    indices, inside = locate_cells(grid, point)
    if indices.size != 1:
        raise ValueError("cell_of expects a single point")
    return int(indices[0]) if inside[0] else None


def bin_samples(grid: GridSpec, samples) -> tuple[np.ndarray, int]:
    """Count samples per grid cell, discarding points outside the box.

    Returns
    -------
    counts : int ndarray of length ``grid.cell_count``
    n_kept : int
        Number of samples that fell inside the box (``counts.sum()``).
    """
    indices, inside = locate_cells(grid, samples)
    counts = np.bincount(indices[inside], minlength=grid.cell_count).astype(np.int64)
    return counts, int(np.count_nonzero(inside))


def kt_probabilities(counts, n: int) -> CellMeasure:
    """Add-half (Krichevsky-Trofimov) cell probabilities from counts.

    Each of the ``2**(d*J)`` cells is preloaded with half a count before
    normalizing, so every entry is strictly positive:
    ``probs[k] = (1/2 + counts[k]) / (2**(d*J - 1) + n)``.
    """
    counts = np.asarray(counts)
    if counts.ndim != 1 or counts.size < 1:
        raise ValueError("counts must be a non-empty 1-D vector")
    size = counts.size
    if size & (size - 1):
        raise ValueError(f"counts length {size} is not a dyadic cell count (power of two)")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    n = int(n)
    if n != int(counts.sum()):
        raise ValueError("n must equal the total count")
    probs = (counts + 0.5) / (0.5 * size + n)
    return CellMeasure(probs=probs, sample_count=n, kt_applied=True)


def empirical_cell_measure(grid: GridSpec, samples) -> CellMeasure:
    """Bin samples and apply add-half preloading in one step."""
    counts, n_kept = bin_samples(grid, samples)
    return kt_probabilities(counts, n_kept)


def analytic_cell_probabilities(grid: GridSpec, dist) -> CellMeasure:
    """Exact cell probabilities of a product-form distribution.

    Per axis, the cell masses are CDF differences at the cell edges; the
    result is renormalized over the box so that mass outside the domain is
    discarded, mirroring how empirical binning drops outside samples.
    """
    if not hasattr(dist, "axis_cdf"):
        raise TypeError("analytic cell probabilities need a product-form distribution with per-axis CDFs")
    if dist.dimension != grid.dimension:
        raise ValueError("distribution and grid dimensions differ")
    axis_probs = []
    for axis in range(grid.dimension):
        mass = np.diff(dist.axis_cdf(axis, grid.axis_edges(axis)))
        total = float(mass.sum())
        if total <= 0.0:
            raise ValueError("distribution has no probability mass inside the domain box")
        axis_probs.append(mass / total)
    # outer product arranged so axis 1 varies fastest in the raveled result
    probs = axis_probs[-1]
    for p in axis_probs[-2::-1]:
        probs = np.multiply.outer(probs, p)
    return CellMeasure(probs=np.ravel(probs), sample_count=0, kt_applied=False)


def read_samples_csv(path, dimension: int) -> np.ndarray:
    """Read samples from CSV: one point per row, exactly ``dimension`` numeric
    columns, optional header/comment lines starting with '#'."""
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", dtype=float, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"malformed sample CSV {path}: {exc}") from exc
    if data.size == 0:
        return np.zeros((0, dimension))
    if data.shape[1] != dimension:
        raise ValueError(
            f"sample CSV {path} has {data.shape[1]} columns, expected {dimension}"
        )
    return data
