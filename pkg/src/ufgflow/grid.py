"""Uniform tensor-product grids and second-order finite-difference operators.

Fields are stored on every node of the lattice, boundary included, in
row-major order with axis 0 = x, axis 1 = y, axis 2 = z (last axis varies
fastest).  Homogeneous Dirichlet conditions are imposed by keeping the
boundary nodes at zero: operators read them as zero neighbours and always
write zero back onto them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

AXIS_NAMES = ("x", "y", "z")
STORAGE_ORDER = "C"


class GridMismatchError(ValueError):
    """Two fields that should share a lattice do not."""


@dataclass(frozen=True)
class Grid:
    """Uniform lattice on a box ``[lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]``.

    ``counts[i]`` is the number of intervals along axis ``i``; the axis
    therefore carries ``counts[i] + 1`` nodes ``lo + j*h`` for
    ``0 <= j <= counts[i]``.
    """

    bounds: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.bounds) != len(self.counts):
            raise ValueError("bounds and counts must have the same length")
        if not 1 <= len(self.counts) <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {len(self.counts)}")
        for (lo, hi), n in zip(self.bounds, self.counts):
            if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
                raise ValueError(f"degenerate bounds ({lo}, {hi})")
            if int(n) != n or n < 3:
                raise ValueError(f"need at least 3 intervals per axis, got {n}")

    @property
    def dim(self) -> int:
        return len(self.counts)

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.bounds, self.counts))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            lo + np.arange(n + 1) * h
            for (lo, _), n, h in zip(self.bounds, self.counts, self.spacing)
        )

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Sparse (broadcastable) coordinate arrays, one per axis."""
        return tuple(np.meshgrid(*self.axes, indexing="ij", sparse=True))

    @property
    def interior(self) -> tuple[slice, ...]:
        return (slice(1, -1),) * self.dim

    def origin_index(self) -> tuple[int, ...] | None:
        """Index of the node at the origin, or None if there is no such node."""
        idx = []
        for ax, h in zip(self.axes, self.spacing):
            j = int(np.argmin(np.abs(ax)))
            if abs(ax[j]) > 1e-9 * h:
                return None
            idx.append(j)
        return tuple(idx)

    def is_origin_symmetric(self, axes=(0, 1)) -> bool:
        return all(
            np.isclose(self.bounds[a][0], -self.bounds[a][1]) for a in axes if a < self.dim
        )

    def zeros(self, dtype=complex) -> "Field":
        return Field(self, np.zeros(self.shape, dtype=dtype))

    def sample(self, func, dtype=complex) -> "Field":
        """Evaluate ``func(*coords)`` on the nodes and zero the boundary."""
        values = np.asarray(func(*self.mesh()), dtype=dtype)
        values = np.broadcast_to(values, self.shape).copy()
        zero_boundary(values)
        return Field(self, values)

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "bounds": [list(b) for b in self.bounds],
            "counts": list(self.counts),
            "spacing": list(self.spacing),
            "storage_order": "row-major, last axis fastest",
        }


def build_grid(dim: int, bounds, counts) -> Grid:
    """Build a ``dim``-dimensional grid.

    ``bounds`` may be a single ``(lo, hi)`` pair (used for every axis) or one
    pair per axis; likewise ``counts`` may be a single integer.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {dim}")
    bounds = list(bounds)
    if len(bounds) == 2 and np.isscalar(bounds[0]):
        bounds = [tuple(bounds)] * dim
    if np.isscalar(counts):
        counts = [counts] * dim
    counts = list(counts)
    if len(bounds) != dim or len(counts) != dim:
        raise ValueError("bounds/counts do not match the dimension")
    return Grid(
        tuple((float(lo), float(hi)) for lo, hi in bounds),
        tuple(int(n) for n in counts),
    )


@dataclass
class Field:
    """Lattice function bound to its grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise GridMismatchError(
                f"values of shape {self.values.shape} do not fit grid {self.grid.shape}"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def norm(self) -> float:
        return discrete_norm(self)

    def normalized(self) -> "Field":
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError("cannot normalize a zero field")
        if not np.isfinite(n):
            raise ValueError("cannot normalize a field with non-finite values")
        return Field(self.grid, self.values / n)

    def density(self) -> np.ndarray:
        return self.values.real**2 + self.values.imag**2

    def __mul__(self, scalar):
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__


def zero_boundary(values: np.ndarray) -> np.ndarray:
    """Set every boundary node of ``values`` to zero in place."""
    for axis in range(values.ndim):
        idx = [slice(None)] * values.ndim
        idx[axis] = 0
        values[tuple(idx)] = 0
        idx[axis] = -1
        values[tuple(idx)] = 0
    return values


def _check_same_grid(f: Field, g: Field):
    if f.grid != g.grid:
        raise GridMismatchError("fields live on different grids")


def _shifted(ndim, axis, lo, hi):
    idx = [slice(1, -1)] * ndim
    idx[axis] = slice(lo, hi if hi != 0 else None)
    return tuple(idx)


def laplacian_array(values: np.ndarray, spacing) -> np.ndarray:
    """Centered second-difference Laplacian; zero on the boundary."""
    out = np.zeros_like(values)
    ndim = values.ndim
    inner = (slice(1, -1),) * ndim
    centre = values[inner]
    for axis, h in enumerate(spacing):
        up = values[_shifted(ndim, axis, 2, 0)]
        down = values[_shifted(ndim, axis, 0, -2)]
        out[inner] += (up - 2.0 * centre + down) / (h * h)
    return out


def gradient_arrays(values: np.ndarray, spacing) -> list[np.ndarray]:
    """Centered first differences per axis on interior nodes; zero elsewhere."""
    ndim = values.ndim
    inner = (slice(1, -1),) * ndim
    grads = []
    for axis, h in enumerate(spacing):
        g = np.zeros_like(values)
        g[inner] = (values[_shifted(ndim, axis, 2, 0)] - values[_shifted(ndim, axis, 0, -2)]) / (2.0 * h)
        grads.append(g)
    return grads


def lz_array(values: np.ndarray, grid: Grid) -> np.ndarray:
    """-i (x d/dy - y d/dx) with centered differences; zero on the boundary."""
    if grid.dim < 2:
        raise ValueError("the angular momentum operator needs dim >= 2")
    ndim = values.ndim
    inner = (slice(1, -1),) * ndim
    hx, hy = grid.spacing[0], grid.spacing[1]
    xs = grid.axes[0][1:-1].reshape((-1,) + (1,) * (ndim - 1))
    ys = grid.axes[1][1:-1].reshape((1, -1) + (1,) * (ndim - 2))
    dx = (values[_shifted(ndim, 0, 2, 0)] - values[_shifted(ndim, 0, 0, -2)]) / (2.0 * hx)
    dy = (values[_shifted(ndim, 1, 2, 0)] - values[_shifted(ndim, 1, 0, -2)]) / (2.0 * hy)
    out = np.zeros(values.shape, dtype=np.result_type(values.dtype, complex))
    out[inner] = -1j * (xs * dy - ys * dx)
    return out


def apply_laplacian(f: Field) -> Field:
    return Field(f.grid, laplacian_array(f.values, f.grid.spacing))


def apply_lz(f: Field) -> Field:
    grid = f.grid
    if grid.dim < 2:
        raise ValueError("the angular momentum operator needs dim >= 2")
    if not grid.is_origin_symmetric():
        warnings.warn(
            "rotation operator on a grid that is not symmetric about the origin in x and y",
            stacklevel=2,
        )
    return Field(grid, lz_array(f.values, grid))


def discrete_norm(f: Field) -> float:
    v = f.values
    return float(np.sqrt(f.grid.cell_volume * np.sum(v.real**2 + v.imag**2)))


def inner_product(f: Field, g: Field) -> complex:
    """Discrete L2 pairing, conjugate-linear in the first argument."""
    _check_same_grid(f, g)
    return complex(f.grid.cell_volume * np.sum(np.conj(f.values) * g.values))
