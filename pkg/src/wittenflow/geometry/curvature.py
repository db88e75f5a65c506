"""Levi-Civita connection and curvature of a metric sampled on a periodic grid."""
import numpy as np

from ..errors import GeometryError
from .fields import Christoffel3Field, SymTensorField
from .spectral import diff

PD_THRESHOLD = 1e-12


def node_major(arr, grid):
    """Move the leading component axes of ``arr`` behind the grid axes."""
    lead = arr.ndim - grid.dim
    return np.moveaxis(arr, tuple(range(lead)), tuple(range(-lead, 0)))


def component_major(arr, grid, ncomp_axes):
    return np.moveaxis(arr, tuple(range(-ncomp_axes, 0)), tuple(range(ncomp_axes)))


def check_positive_definite(g_full, grid, what="metric"):
    """Raise GeometryError naming the first node whose smallest eigenvalue is <= 1e-12."""
    lam = np.linalg.eigvalsh(node_major(g_full, grid))[..., 0]
    if not np.all(lam > PD_THRESHOLD):
        node = np.unravel_index(int(np.argmin(lam)), grid.shape)
        raise GeometryError(
            f"{what} not positive-definite at node {tuple(int(i) for i in node)} "
            f"(smallest eigenvalue {lam[node]:.3e})",
            node=node,
        )
    return lam


def inverse_full(g_full, grid):
    return component_major(np.linalg.inv(node_major(g_full, grid)), grid, 2)


def christoffel_array(g_full, g_inv, grid):
    n = grid.dim
    dg = np.stack([diff(g_full, grid, c) for c in range(n)])  # dg[c, a, b] = d_c g_ab
    # Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    lower = 0.5 * (
        np.einsum("ijl...->lij...", dg)
        + np.einsum("jil...->lij...", dg)
        - dg
    )
    return np.einsum("kl...,lij...->kij...", g_inv, lower)


def christoffel(g):
    """Christoffel symbols of the second kind for a SymTensorField metric."""
    full = g.full
    check_positive_definite(full, g.grid)
    return Christoffel3Field(g.grid, christoffel_array(full, inverse_full(full, g.grid), g.grid))


def ricci_array(gamma, grid):
    n = grid.dim
    dgam = np.stack([diff(gamma, grid, a) for a in range(n)])  # dgam[a, k, i, j] = d_a Gamma^k_ij
    r = np.einsum("kkij...->ij...", dgam) - np.einsum("ikkj...->ij...", dgam)
    r = r + np.einsum("kkl...,lij...->ij...", gamma, gamma)
    r = r - np.einsum("kil...,lkj...->ij...", gamma, gamma)
    return r


def ricci(g):
    gam = christoffel(g)
    return SymTensorField.from_full(g.grid, ricci_array(gam.values, g.grid))
