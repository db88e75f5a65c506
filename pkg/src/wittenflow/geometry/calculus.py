"""Differential operators, Bakry-Emery tensors and quadrature on a GeometrySnapshot.

Public operators take and return field objects.  The underscored array
versions accept extra leading batch axes and are used by the solvers.
"""
import numpy as np

from ..errors import DimensionError, ParameterError, RejectedInputError
from .curvature import node_major
from .fields import ScalarField, SymTensorField, VectorField
from .spectral import diff, fine_grid, fold, grad_cov, upsample


def _same_grid(snap, field):
    if field.grid != snap.grid:
        raise DimensionError(f"field on grid {field.grid.nodes} used with snapshot on {snap.grid.nodes}")


def _inner(snap, a_cov, b_cov):
    """g^{ij} a_i b_j for covariant components with the component axis first."""
    return np.einsum("ij...,i...,j...->...", snap.g_inv, a_cov, b_cov)


def _hessian_array(snap, values, dvalues=None):
    grid = snap.grid
    d1 = grad_cov(values, grid) if dvalues is None else dvalues
    n = grid.dim
    second = np.stack([np.stack([diff(d1[i], grid, j) for j in range(n)]) for i in range(n)])
    second = 0.5 * (second + np.swapaxes(second, 0, 1))
    return second - np.einsum("kij...,k...->ij...", snap.christoffel.values, d1)


def _witten_array(snap, values):
    """rho^{-1} d_i (rho g^{ij} d_j f); trailing axes are the grid, leading axes a batch.

    Evaluated as a Fourier-Galerkin operator: f is interpolated onto the grid
    refined by two, the flux is formed there without aliasing and the result
    is folded back.  This keeps L symmetric and mass-conserving, and unlike
    two Nyquist-free derivatives it does not annihilate the grid-scale mode.
    """
    grid = snap.grid
    fine = fine_grid(grid)
    n = grid.dim
    a = snap.fine_flux_coefficients
    up = upsample(values, grid)
    d = [diff(up, fine, j) for j in range(n)]
    out = 0.0
    for i in range(n):
        flux = sum(a[i, j] * d[j] for j in range(n))
        out = out + diff(flux, fine, i)
    return fold(out, grid) / snap.density


def gradient(snap, f):
    """Riemannian gradient (contravariant components g^{ij} d_j f)."""
    _same_grid(snap, f)
    return VectorField(snap.grid, np.einsum("ij...,j...->i...", snap.g_inv, grad_cov(f.values, snap.grid)))


def hessian(snap, f):
    """Covariant Hessian d_i d_j f - Gamma^k_ij d_k f."""
    _same_grid(snap, f)
    return SymTensorField.from_full(snap.grid, _hessian_array(snap, f.values))


def laplace_beltrami(snap, f):
    """Trace of the Hessian against the inverse metric."""
    _same_grid(snap, f)
    h = _hessian_array(snap, f.values)
    return ScalarField(snap.grid, np.einsum("ij...,ij...->...", snap.g_inv, h))


def witten_laplacian(snap, f):
    """L f = Delta f - g(grad phi, grad f), evaluated in divergence form.

    The divergence form makes L exactly symmetric in the discrete weighted
    inner product and gives sum(L f * rho) = 0 to rounding.
    """
    _same_grid(snap, f)
    return ScalarField(snap.grid, _witten_array(snap, f.values))


def ricci(snap):
    return snap.ricci


def scalar_curvature(snap):
    return snap.scalar_curvature


def _dphi_outer(snap):
    d = snap.dphi
    return np.einsum("i...,j...->ij...", d, d)


def bakry_emery(snap):
    """Ric(L) = Ric + Hess(phi)."""
    h = _hessian_array(snap, snap.potential.values, snap.dphi)
    return SymTensorField.from_full(snap.grid, snap.ricci.full + h)


def bakry_emery_m(snap, m):
    """Ric_{m,n}(L) = Ric + Hess(phi) - dphi (x) dphi / (m - n), for m > n."""
    n = snap.dim
    if not m > n:
        raise ParameterError(f"m-dimensional Bakry-Emery tensor needs m > n; got m={m}, n={n}")
    base = bakry_emery(snap).full
    return SymTensorField.from_full(snap.grid, base - _dphi_outer(snap) / (m - n))


def tensor_norm_sq(snap, T):
    """Pointwise g^{ik} g^{jl} T_ij T_kl."""
    _same_grid(snap, T)
    return ScalarField(snap.grid, _norm_sq_array(snap, T.full))


def _norm_sq_array(snap, t_full):
    mixed = np.einsum("ik...,kj...->ij...", snap.g_inv, t_full)
    return np.einsum("ij...,ji...->...", mixed, mixed)


def _whitener(snap):
    lam, vec = np.linalg.eigh(node_major(snap.g, snap.grid))
    return np.einsum("...ik,...k,...jk->...ij", vec, lam ** -0.5, vec)


def min_rel_eigenvalue(snap, T):
    """Smallest eigenvalue of T relative to g (generalised problem T v = lambda g v)."""
    _same_grid(snap, T)
    w = _whitener(snap)
    t = node_major(T.full, snap.grid)
    return ScalarField(snap.grid, np.linalg.eigvalsh(w @ t @ w)[..., 0])


def integrate(f, snap):
    """Periodic trapezoid rule for the integral of f against dmu."""
    values = f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)
    if isinstance(f, ScalarField):
        _same_grid(snap, f)
    if not np.all(np.isfinite(values)):
        raise RejectedInputError("non-finite integrand")
    return float(np.sum(values * snap.density) * snap.grid.cell_volume)
