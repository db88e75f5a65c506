"""Metric plus potential at one instant, with lazily cached derived quantities."""
from functools import cached_property

import numpy as np

from ..errors import DimensionError
from .curvature import (
    check_positive_definite,
    christoffel_array,
    inverse_full,
    node_major,
    ricci_array,
)
from .calculus import _witten_array
from .fields import Christoffel3Field, ScalarField, SymTensorField
from .spectral import grad_cov, upsample


class GeometrySnapshot:
    """A positive-definite metric ``g`` and a potential ``phi`` on a periodic grid.

    The weighted measure is ``dmu = exp(-phi) sqrt(det g) dx``.  Derived
    quantities are computed on first access and never change; build a new
    snapshot for a new metric.
    """

    def __init__(self, metric, potential=None):
        if potential is None:
            potential = ScalarField.constant(metric.grid, 0.0)
        if potential.grid != metric.grid:
            raise DimensionError("metric and potential live on different grids")
        self.metric = metric
        self.potential = potential
        self.grid = metric.grid
        self.min_eigenvalue = check_positive_definite(metric.full, self.grid)

    @classmethod
    def flat(cls, grid, potential=None):
        return cls(SymTensorField.identity(grid), potential)

    @classmethod
    def conformal(cls, grid, a, potential=None):
        """Metric ``exp(2a) * identity`` for a ScalarField ``a``."""
        w = np.exp(2 * np.asarray(a))
        return cls(SymTensorField.diagonal(grid, [w] * grid.dim), potential)

    def with_potential(self, potential):
        return GeometrySnapshot(self.metric, potential)

    @property
    def dim(self):
        return self.grid.dim

    @cached_property
    def g(self):
        return self.metric.full

    @cached_property
    def g_inv(self):
        return inverse_full(self.g, self.grid)

    @cached_property
    def sqrt_det(self):
        return np.sqrt(np.linalg.det(node_major(self.g, self.grid)))

    @cached_property
    def density(self):
        """Node weights of dmu relative to Lebesgue measure: exp(-phi) sqrt(det g)."""
        return np.exp(-self.potential.values) * self.sqrt_det

    @cached_property
    def christoffel(self):
        return Christoffel3Field(self.grid, christoffel_array(self.g, self.g_inv, self.grid))

    @cached_property
    def ricci(self):
        return SymTensorField.from_full(self.grid, ricci_array(self.christoffel.values, self.grid))

    @cached_property
    def scalar_curvature(self):
        return ScalarField(self.grid, np.einsum("ij...,ij...->...", self.g_inv, self.ricci.full))

    @cached_property
    def dphi(self):
        """Covariant components of d(phi)."""
        return grad_cov(self.potential.values, self.grid)

    @cached_property
    def flux_coefficients(self):
        """rho g^{ij}, the coefficient of the divergence-form weighted Laplacian."""
        return self.density * self.g_inv

    @cached_property
    def fine_flux_coefficients(self):
        """``flux_coefficients`` interpolated onto the twice-refined grid."""
        return upsample(self.flux_coefficients, self.grid)

    @cached_property
    def max_inverse_eigenvalue(self):
        return float(1.0 / self.min_eigenvalue.min())

    @cached_property
    def witten_spectral_radius(self):
        """Power-iteration estimate of the largest |eigenvalue| of the discrete L."""
        v = np.random.default_rng(0).standard_normal(self.grid.shape)
        lam = 0.0
        for _ in range(40):
            w = _witten_array(self, v)
            lam = -np.sum(v * w * self.density) / np.sum(v * v * self.density)
            v = w / np.sqrt(np.sum(w * w * self.density))
        return float(abs(lam))

    @cached_property
    def total_measure(self):
        return float(np.sum(self.density) * self.grid.cell_volume)

    def __repr__(self):
        return f"GeometrySnapshot(grid={self.grid.nodes})"
