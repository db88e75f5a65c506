"""Warped products M x N with metric g (+) exp(-2 phi / q) g_N over a flat torus fiber.

The closed-form block formulas here are checked in the test-suite against
direct computation (``geometry.christoffel``, ``geometry.ricci`` ...) on the
assembled product metric.  Index order on the product is base axes first,
then fiber axes.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError, ParameterError, RejectedInputError
from .geometry import GeometrySnapshot, Grid, ScalarField, SymTensorField
from .geometry.calculus import _hessian_array, _inner, _norm_sq_array, _witten_array
from .geometry.fields import Christoffel3Field
from .geometry.spectral import flat_laplacian, grad_cov


@dataclass(frozen=True)
class WarpedSpec:
    """Base snapshot (metric g, potential phi) plus fiber dimension ``q``.

    ``fiber`` is the flat torus grid used when the product is assembled; it
    may be omitted for closed-form work, in which case ``q`` can be any real
    number > 0.  The fiber measure is rescaled to total mass 1.
    """

    base: GeometrySnapshot
    q: float
    fiber: Grid = None

    def __post_init__(self):
        if not self.q > 0:
            raise ParameterError(f"fiber dimension q must be positive, got {self.q}")
        if self.fiber is not None and self.fiber.dim != self.q:
            raise DimensionError(f"fiber grid has dim {self.fiber.dim} but q={self.q}")

    @classmethod
    def torus_fiber(cls, base, q, nodes=8, period=2 * np.pi):
        return cls(base, int(q), Grid((nodes,) * int(q), (period,) * int(q)))

    @property
    def n(self):
        return self.base.dim

    @property
    def m(self):
        return self.n + self.q

    @cached_property
    def warp(self):
        """Fiber metric factor exp(-2 phi / q) on the base grid."""
        return np.exp(-2.0 * self.base.potential.values / self.q)

    def require_fiber(self):
        if self.fiber is None:
            raise ParameterError("this operation needs an assembled product; give WarpedSpec a fiber grid")
        return self.fiber


class WarpedSnapshot:
    """The assembled product metric on the product grid, with block accessors."""

    def __init__(self, spec):
        fiber = spec.require_fiber()
        self.spec = spec
        self.grid = spec.base.grid.product(fiber)
        n, q = spec.n, fiber.dim
        full = np.zeros((n + q, n + q, *self.grid.shape))
        full[:n, :n] = self.lift(spec.base.g)
        for a in range(q):
            full[n + a, n + a] = self.lift(spec.warp)
        self.metric = SymTensorField.from_full(self.grid, full)
        # constant potential log vol(N) rescales dvol to dmu (x) dnu_N with nu_N(N) = 1
        fiber_volume = float(np.prod(fiber.periods))
        self.snapshot = GeometrySnapshot(self.metric, ScalarField.constant(self.grid, np.log(fiber_volume)))

    def lift(self, arr):
        """Broadcast an array whose trailing axes are the base grid onto the product grid."""
        arr = np.asarray(arr.values if isinstance(arr, ScalarField) else arr, dtype=float)
        fshape = self.spec.fiber.shape
        out = arr.reshape(arr.shape + (1,) * len(fshape))
        return np.broadcast_to(out, arr.shape + fshape).copy()

    def lift_field(self, f):
        return ScalarField(self.grid, self.lift(f))

    def restrict(self, arr):
        """Slice a fiber-constant product array back to the base grid (first fiber node)."""
        arr = np.asarray(arr.values if isinstance(arr, ScalarField) else arr)
        return arr[(Ellipsis,) + (0,) * self.spec.fiber.dim]

    def blocks(self, t_full):
        n = self.spec.n
        return t_full[:n, :n], t_full[:n, n:], t_full[n:, n:]


def build_warped(spec):
    return WarpedSnapshot(spec)


def _base_only(spec, f):
    """Accept a base ScalarField or a fiber-constant product ScalarField."""
    base_grid = spec.base.grid
    if f.grid == base_grid:
        return f.values
    fiber = spec.require_fiber()
    if f.grid != base_grid.product(fiber):
        raise DimensionError("field lives neither on the base nor on the product grid")
    axes = tuple(range(base_grid.dim, f.grid.dim))
    ref = f.values[(Ellipsis,) + (0,) * fiber.dim]
    spread = np.max(np.abs(f.values - np.expand_dims(ref, axes)))
    if spread > 1e-12 * max(1.0, np.max(np.abs(ref))):
        raise RejectedInputError(f"field varies along the fiber (spread {spread:.3e}); base-only field required")
    return ref


def warped_christoffel_closed_form(spec):
    """All Christoffel blocks of the warped metric from the base data.

    Gamma^k_ij = base, Gamma^k_ab = q^-1 g^kl d_l phi gt_ab,
    Gamma^b_ia = -(d_i phi / q) delta^b_a, every other block zero.
    """
    ws = WarpedSnapshot(spec)
    n, q = spec.n, spec.fiber.dim
    base = spec.base
    gam = np.zeros((n + q,) * 3 + ws.grid.shape)
    gam[:n, :n, :n] = ws.lift(base.christoffel.values)
    up_dphi = np.einsum("kl...,l...->k...", base.g_inv, base.dphi)
    for a in range(q):
        for k in range(n):
            gam[k, n + a, n + a] = ws.lift(up_dphi[k] * spec.warp / spec.q)
        for i in range(n):
            mixed = ws.lift(-base.dphi[i] / spec.q)
            gam[n + a, i, n + a] = mixed
            gam[n + a, n + a, i] = mixed
    return Christoffel3Field(ws.grid, gam)


def warped_hessian_blocks(spec, f):
    """Blocks of the product Hessian of a base-only function.

    Returns ``(horizontal, fiber_coefficient)``: the horizontal block is the
    base Hessian, the fiber block is ``fiber_coefficient * gt_ab`` with
    coefficient ``-(grad phi . grad f) / q``; the mixed block vanishes.
    """
    values = _base_only(spec, f)
    base = spec.base
    grid = base.grid
    df = grad_cov(values, grid)
    horizontal = SymTensorField.from_full(grid, _hessian_array(base, values, df))
    coef = -_inner(base, base.dphi, df) / spec.q
    return horizontal, ScalarField(grid, coef)


def assemble_blocks(spec, horizontal, fiber_coefficient):
    """Product SymTensorField with the given horizontal block and fiber block coef * gt_N."""
    ws = WarpedSnapshot(spec)
    n, q = spec.n, spec.fiber.dim
    full = np.zeros((n + q, n + q, *ws.grid.shape))
    full[:n, :n] = ws.lift(horizontal.full)
    for a in range(q):
        full[n + a, n + a] = ws.lift(np.asarray(fiber_coefficient) * spec.warp)
    return SymTensorField.from_full(ws.grid, full)


def hessian_norm_decomposition(spec, f, t):
    """Split |Hess~ f - g~/2t|^2 into horizontal and vertical parts.

    ``total`` is the g~-norm of the block tensor (on the assembled product
    when a fiber grid is available, blockwise otherwise);
    ``horizontal = |Hess f - g/2t|^2`` and
    ``vertical = (grad phi . grad f + q/2t)^2 / q``.
    """
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    base = spec.base
    hor, coef = warped_hessian_blocks(spec, f)
    shifted = hor.full - base.g / (2 * t)
    horizontal = _norm_sq_array(base, shifted)
    dot = -spec.q * coef.values
    vertical = (dot + spec.q / (2 * t)) ** 2 / spec.q
    fiber_block = coef.values - 1.0 / (2 * t)
    if spec.fiber is not None:
        ws = WarpedSnapshot(spec)
        tensor = assemble_blocks(spec, SymTensorField.from_full(base.grid, shifted), fiber_block)
        total = ws.restrict(_norm_sq_array(ws.snapshot, tensor.full))
    else:
        total = horizontal + spec.q * fiber_block ** 2
    grid = base.grid
    return ScalarField(grid, total), ScalarField(grid, horizontal), ScalarField(grid, vertical)


def warped_laplacian(spec, f):
    """Laplace-Beltrami operator of the product as L + exp(+2 phi / q) Delta_N."""
    fiber = spec.require_fiber()
    base = spec.base
    nb = base.dim
    grid = base.grid.product(fiber)
    if f.grid != grid:
        raise DimensionError("warped_laplacian expects a field on the product grid")
    batch = np.moveaxis(f.values, tuple(range(nb, grid.dim)), tuple(range(fiber.dim)))
    horizontal = np.moveaxis(_witten_array(base, batch), tuple(range(fiber.dim)), tuple(range(nb, grid.dim)))
    fiber_axes = range(nb, grid.dim)
    inv_warp = np.exp(2.0 * base.potential.values / spec.q)
    inv_warp = inv_warp.reshape(inv_warp.shape + (1,) * fiber.dim)
    return ScalarField(grid, horizontal + inv_warp * flat_laplacian(f.values, grid, fiber_axes))


def _psi_terms(base):
    lap = np.einsum("ij...,ij...->...", base.g_inv, _hessian_array(base, base.potential.values, base.dphi))
    grad_sq = _inner(base, base.dphi, base.dphi)
    return lap, grad_sq


def warped_ricci(spec):
    """Ricci blocks of g (+) exp(-2 psi / q) g_N, with psi the base potential.

    Returns ``(horizontal, fiber_coefficient)`` where the horizontal block is
    Ric + Hess psi - dpsi (x) dpsi / q and the fiber block equals
    ``fiber_coefficient * gt_ab`` with coefficient (Delta psi - |grad psi|^2) / q.
    """
    base = spec.base
    hess = _hessian_array(base, base.potential.values, base.dphi)
    outer = np.einsum("i...,j...->ij...", base.dphi, base.dphi)
    horizontal = SymTensorField.from_full(base.grid, base.ricci.full + hess - outer / spec.q)
    lap, grad_sq = _psi_terms(base)
    return horizontal, ScalarField(base.grid, (lap - grad_sq) / spec.q)


def warped_scalar_curvature(spec):
    """R_q = R + 2 Delta psi - (1 + 1/q) |grad psi|^2."""
    base = spec.base
    lap, grad_sq = _psi_terms(base)
    r = base.scalar_curvature.values + 2 * lap - (1 + 1 / spec.q) * grad_sq
    return ScalarField(base.grid, r)


def warped_hessian_general(spec, v):
    """Product Hessian of a base-only function written against the flat fiber form.

    Returns ``(Hess v, c)`` with the fiber block equal to ``c * sum dx_a^2``,
    c = -(1/q) exp(-2 psi/q) <grad psi, grad v>.
    """
    horizontal, coef = warped_hessian_blocks(spec, v)
    return horizontal, ScalarField(spec.base.grid, coef.values * spec.warp)
