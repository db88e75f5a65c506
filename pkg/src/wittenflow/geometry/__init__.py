"""Periodic grids, fields and Riemannian calculus on flat tori in coordinates."""
from .calculus import (
    bakry_emery,
    bakry_emery_m,
    gradient,
    hessian,
    integrate,
    laplace_beltrami,
    min_rel_eigenvalue,
    ricci,
    scalar_curvature,
    tensor_norm_sq,
    witten_laplacian,
)
from .curvature import christoffel
from .fields import (
    Christoffel3Field,
    Grid,
    ScalarField,
    SymTensorField,
    VectorField,
    fourier_series,
)
from .io import load_field, save_field
from .snapshot import GeometrySnapshot
from .spectral import spectral_derivative

__all__ = [
    "Christoffel3Field",
    "GeometrySnapshot",
    "Grid",
    "ScalarField",
    "SymTensorField",
    "VectorField",
    "bakry_emery",
    "bakry_emery_m",
    "christoffel",
    "fourier_series",
    "gradient",
    "hessian",
    "integrate",
    "laplace_beltrami",
    "load_field",
    "min_rel_eigenvalue",
    "ricci",
    "save_field",
    "scalar_curvature",
    "spectral_derivative",
    "tensor_norm_sq",
    "witten_laplacian",
]
