"""Periodic grids and the field containers that live on them.

All fields store component-major arrays whose trailing axes are the grid
axes, so ``values[..., i0, i1]`` addresses node ``(i0, i1)``.  Values are
copied on construction and frozen.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from ..errors import DimensionError, RejectedInputError


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the flat torus prod_i [0, L_i)."""

    nodes: tuple
    periods: tuple

    def __post_init__(self):
        nodes = tuple(int(n) for n in self.nodes)
        periods = tuple(float(p) for p in self.periods)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "periods", periods)
        if not nodes or len(nodes) != len(periods):
            raise DimensionError(f"nodes {nodes} and periods {periods} disagree")
        for n in nodes:
            if n < 8 or n % 2:
                raise RejectedInputError(f"node count {n} must be even and >= 8")
        for p in periods:
            if not np.isfinite(p) or p <= 0:
                raise RejectedInputError(f"period {p} must be positive")

    @property
    def dim(self):
        return len(self.nodes)

    @property
    def shape(self):
        return self.nodes

    @property
    def size(self):
        return int(np.prod(self.nodes))

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.periods, self.nodes))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def axis_coords(self, axis):
        return np.arange(self.nodes[axis]) * self.spacing[axis]

    def coords(self):
        """Node coordinates as a tuple of ``dim`` arrays of shape ``self.shape``."""
        return tuple(np.meshgrid(*(self.axis_coords(a) for a in range(self.dim)), indexing="ij"))

    def wavenumbers(self, axis):
        """Angular wavenumbers of the real FFT along ``axis``."""
        n = self.nodes[axis]
        return 2.0 * np.pi / self.periods[axis] * np.arange(n // 2 + 1)

    def product(self, other):
        return Grid(self.nodes + other.nodes, self.periods + other.periods)

    def to_dict(self):
        return {"dim": self.dim, "nodes": list(self.nodes), "periods": list(self.periods)}

    @classmethod
    def from_dict(cls, d):
        grid = cls(tuple(d["nodes"]), tuple(d["periods"]))
        if "dim" in d and int(d["dim"]) != grid.dim:
            raise DimensionError(f"header dim {d['dim']} disagrees with nodes {grid.nodes}")
        return grid

    @classmethod
    def torus(cls, n, period=2 * np.pi, dim=1):
        return cls((n,) * dim, (period,) * dim)


def _frozen(values, shape, what):
    arr = np.array(values, dtype=float)
    if arr.shape != tuple(shape):
        raise DimensionError(f"{what}: expected shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError(f"{what}: non-finite values")
    arr.setflags(write=False)
    return arr


def _check_same_grid(*fields):
    grids = {f.grid for f in fields}
    if len(grids) > 1:
        raise DimensionError(f"fields live on different grids: {grids}")


class ScalarField(np.lib.mixins.NDArrayOperatorsMixin):
    """Real scalar function sampled at the grid nodes.

    Supports numpy ufuncs and arithmetic; results on the same grid are
    wrapped back into ``ScalarField``.
    """

    __array_priority__ = 20

    def __init__(self, grid, values):
        self.grid = grid
        self.values = _frozen(values, grid.shape, "ScalarField")

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        fields = [x for x in inputs if isinstance(x, ScalarField)]
        _check_same_grid(*fields)
        raw = [x.values if isinstance(x, ScalarField) else x for x in inputs]
        out = getattr(ufunc, method)(*raw, **kwargs)
        if isinstance(out, np.ndarray) and out.shape == self.grid.shape:
            return ScalarField(self.grid, out)
        return out

    def __repr__(self):
        return f"ScalarField(grid={self.grid.nodes}, min={self.min():.6g}, max={self.max():.6g})"

    def min(self):
        return float(self.values.min())

    def max(self):
        return float(self.values.max())

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn(*coords)`` at the nodes."""
        return cls(grid, np.broadcast_to(fn(*grid.coords()), grid.shape))


class VectorField:
    """Contravariant vector field, components stacked along axis 0."""

    def __init__(self, grid, values):
        self.grid = grid
        self.values = _frozen(values, (grid.dim, *grid.shape), "VectorField")

    def component(self, i):
        return ScalarField(self.grid, self.values[i])

    def __repr__(self):
        return f"VectorField(grid={self.grid.nodes})"


def sym_index_pairs(n):
    """Upper-triangle ``(i, j)`` pairs in storage order."""
    return list(combinations_with_replacement(range(n), 2))


class SymTensorField:
    """Covariant symmetric 2-tensor; only the upper triangle is stored."""

    def __init__(self, grid, packed):
        self.grid = grid
        n = grid.dim
        self.packed = _frozen(packed, (n * (n + 1) // 2, *grid.shape), "SymTensorField")

    @classmethod
    def from_full(cls, grid, full):
        full = np.asarray(full, dtype=float)
        n = grid.dim
        if full.shape != (n, n, *grid.shape):
            raise DimensionError(f"SymTensorField: expected {(n, n, *grid.shape)}, got {full.shape}")
        sym = 0.5 * (full + np.swapaxes(full, 0, 1))
        return cls(grid, np.stack([sym[i, j] for i, j in sym_index_pairs(n)]))

    @classmethod
    def diagonal(cls, grid, diag):
        """Diagonal tensor from a sequence of ``dim`` scalar arrays."""
        n = grid.dim
        full = np.zeros((n, n, *grid.shape))
        for i in range(n):
            full[i, i] = np.broadcast_to(np.asarray(diag[i], dtype=float), grid.shape)
        return cls.from_full(grid, full)

    @classmethod
    def identity(cls, grid):
        return cls.diagonal(grid, [1.0] * grid.dim)

    @property
    def full(self):
        n = self.grid.dim
        out = np.empty((n, n, *self.grid.shape))
        for p, (i, j) in enumerate(sym_index_pairs(n)):
            out[i, j] = self.packed[p]
            out[j, i] = self.packed[p]
        return out

    def component(self, i, j):
        i, j = min(i, j), max(i, j)
        return ScalarField(self.grid, self.packed[sym_index_pairs(self.grid.dim).index((i, j))])

    def __add__(self, other):
        _check_same_grid(self, other)
        return SymTensorField(self.grid, self.packed + other.packed)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SymTensorField(self.grid, self.packed - other.packed)

    def __neg__(self):
        return SymTensorField(self.grid, -self.packed)

    def scale(self, factor):
        """Multiply by a scalar or a ScalarField (pointwise)."""
        f = factor.values if isinstance(factor, ScalarField) else factor
        return SymTensorField(self.grid, self.packed * f)

    def __repr__(self):
        return f"SymTensorField(grid={self.grid.nodes})"


class Christoffel3Field:
    """Christoffel symbols ``values[k, i, j]`` = Gamma^k_ij, symmetric in (i, j)."""

    def __init__(self, grid, values):
        self.grid = grid
        n = grid.dim
        arr = np.asarray(values, dtype=float)
        if arr.shape != (n, n, n, *grid.shape):
            raise DimensionError(f"Christoffel3Field: expected {(n, n, n, *grid.shape)}, got {arr.shape}")
        self.values = _frozen(0.5 * (arr + np.swapaxes(arr, 1, 2)), arr.shape, "Christoffel3Field")

    def __repr__(self):
        return f"Christoffel3Field(grid={self.grid.nodes})"


def fourier_series(grid, const=0.0, terms=()):
    """Sample ``const + sum a cos(k.x) + b sin(k.x)`` on ``grid``.

    Each term is a mapping with integer mode numbers ``k`` (one per axis, in
    units of 2*pi/L_axis) and amplitudes ``cos`` / ``sin``.
    """
    x = grid.coords()
    out = np.full(grid.shape, float(const))
    for term in terms:
        k = list(term["k"]) if np.ndim(term["k"]) else [term["k"]]
        if len(k) != grid.dim:
            raise DimensionError(f"mode {k} does not match grid dim {grid.dim}")
        phase = sum(2 * np.pi * kk / L * xx for kk, L, xx in zip(k, grid.periods, x))
        out = out + term.get("cos", 0.0) * np.cos(phase) + term.get("sin", 0.0) * np.sin(phase)
    return ScalarField(grid, out)
