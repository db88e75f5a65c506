"""Fourier differentiation on periodic grids.

The array-level helpers treat the trailing ``grid.dim`` axes as the grid and
any leading axes as a batch, so vector and tensor components are
differentiated in one call.
"""
import numpy as np

from ..errors import DimensionError, RejectedInputError
from .fields import Grid, ScalarField


def _grid_axis(values, grid, axis):
    if not 0 <= axis < grid.dim:
        raise DimensionError(f"axis {axis} out of range for a {grid.dim}-dimensional grid")
    if values.shape[values.ndim - grid.dim:] != grid.shape:
        raise DimensionError(f"array of shape {values.shape} does not end in grid shape {grid.shape}")
    return values.ndim - grid.dim + axis


def diff(values, grid, axis):
    """First derivative along a grid axis; the Nyquist mode is dropped."""
    ax = _grid_axis(values, grid, axis)
    n = grid.nodes[axis]
    mult = 1j * grid.wavenumbers(axis)
    mult[-1] = 0.0
    shape = [1] * values.ndim
    shape[ax] = mult.size
    spec = np.fft.rfft(values, axis=ax) * mult.reshape(shape)
    return np.fft.irfft(spec, n=n, axis=ax)


def grad_cov(values, grid):
    """Covariant components d_i f stacked on a new leading axis."""
    return np.stack([diff(values, grid, a) for a in range(grid.dim)], axis=-grid.dim - 1)


def flat_laplacian(values, grid, axes=None):
    """Sum of second derivatives over ``axes`` (all by default), via ``diff`` twice."""
    axes = range(grid.dim) if axes is None else axes
    return sum(diff(diff(values, grid, a), grid, a) for a in axes)


def spectral_derivative(f, axis):
    """Partial derivative of a ScalarField along ``axis``; exact for band-limited fields."""
    if not np.all(np.isfinite(f.values)):
        raise RejectedInputError("non-finite values in field")
    return ScalarField(f.grid, diff(f.values, f.grid, axis))


def _pad_axis(values, ax, n):
    spec = np.fft.fft(values, axis=ax)
    shape = list(values.shape)
    shape[ax] = 2 * n
    out = np.zeros(shape, dtype=complex)
    h = n // 2

    def sl(s):
        idx = [slice(None)] * values.ndim
        idx[ax] = s
        return tuple(idx)

    out[sl(slice(0, h))] = spec[sl(slice(0, h))]
    out[sl(slice(-h + 1, None))] = spec[sl(slice(h + 1, None))]
    # the Nyquist coefficient is shared between +n/2 and -n/2
    out[sl(h)] = 0.5 * spec[sl(h)]
    out[sl(-h)] = 0.5 * spec[sl(h)]
    return 2.0 * np.fft.ifft(out, axis=ax).real


def _fold_axis(values, ax, n):
    spec = np.fft.fft(values, axis=ax)
    shape = list(values.shape)
    shape[ax] = n
    out = np.zeros(shape, dtype=complex)
    h = n // 2

    def sl(s):
        idx = [slice(None)] * values.ndim
        idx[ax] = s
        return tuple(idx)

    out[sl(slice(0, h))] = 0.5 * spec[sl(slice(0, h))]
    out[sl(slice(h + 1, None))] = 0.5 * spec[sl(slice(-h + 1, None))]
    out[sl(h)] = 0.25 * (spec[sl(h)] + spec[sl(-h)])
    return np.fft.ifft(out, axis=ax).real


def upsample(values, grid):
    """Trigonometric interpolant on the grid refined by two along every axis."""
    out = values
    for a in range(grid.dim):
        out = _pad_axis(out, values.ndim - grid.dim + a, grid.nodes[a])
    return out


def fold(values, grid):
    """Adjoint of ``upsample`` for the cell-weighted sums on the two grids.

    Keeps the modes below the coarse Nyquist frequency, so ``fold(upsample(f))``
    returns f except for its Nyquist part, which is halved.
    """
    out = values
    for a in range(grid.dim):
        out = _fold_axis(out, values.ndim - grid.dim + a, grid.nodes[a])
    return out


def fine_grid(grid):
    return Grid(tuple(2 * n for n in grid.nodes), grid.periods)
