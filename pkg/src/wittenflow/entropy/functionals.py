"""Entropy functionals of a heat-flow state and the right-hand sides of their dissipation formulas.

A "state" is anything with ``t``, ``snapshot`` and ``u`` (a FlowState).  A
"schedule" supplies ``rate(t)``; ``None`` means a static metric.
"""
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConditioningError, ParameterError, RejectedInputError
from ..geometry import integrate
from ..geometry.calculus import _hessian_array, _inner, _norm_sq_array, _witten_array, bakry_emery, bakry_emery_m
from ..geometry.calculus import min_rel_eigenvalue
from ..geometry.spectral import grad_cov
from ..warped import WarpedSpec, warped_ricci, warped_scalar_curvature

LOG_FLOOR = 1e-300
CONDITIONING_MIN = 1e-12
MASS_TOL = 1e-8


def _check_t(t):
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")


def _check_K(K):
    if K < 0:
        raise ParameterError(f"K must be non-negative, got {K}")


def _check_mass(snap, u, tol=MASS_TOL):
    mass = integrate(u, snap)
    if abs(mass - 1.0) > tol:
        raise RejectedInputError(f"density has mass {mass:.12g}, expected 1")


def _xlogx(u):
    up = np.maximum(u, 0.0)
    return np.where(up > 0, up * np.log(np.maximum(up, LOG_FLOOR)), 0.0)


def fisher_information(snap, u):
    """Integral of |grad log u|^2 u dmu, evaluated as -int log u * L u dmu.

    Summation by parts is exact for the spectral derivative, so this equals
    sum rho g^ij d_i log u d_j u, and it stays finite where u underflows.
    """
    u = np.asarray(u, dtype=float)
    log_u = np.log(np.maximum(u, LOG_FLOOR))
    return -integrate(log_u * _witten_array(snap, u), snap)


def _dimension_gap(snap, m):
    n = snap.dim
    if m > n:
        return m - n
    if m == n and np.max(np.abs(snap.dphi)) <= 1e-12:
        return 0
    raise ParameterError(f"need m > n (or m = n with constant potential); got m={m}, n={n}")


class LogDerivatives:
    """Pointwise derivatives of log u computed spectrally from log u itself."""

    def __init__(self, snap, u):
        u = np.asarray(u, dtype=float)
        if u.min() < CONDITIONING_MIN:
            raise ConditioningError(
                f"min u = {u.min():.3e} is below {CONDITIONING_MIN:g}; log-derivative formulas unreliable"
            )
        self.snap = snap
        self.u = u
        self.log_u = np.log(u)
        self.d = grad_cov(self.log_u, snap.grid)
        self.up = np.einsum("ij...,j...->i...", snap.g_inv, self.d)
        self.grad_sq = _inner(snap, self.d, self.d)

    @property
    def hessian(self):
        return _hessian_array(self.snap, self.log_u, self.d)

    def quad(self, tensor_full):
        """T(grad log u, grad log u) pointwise."""
        return np.einsum("ij...,i...,j...->...", tensor_full, self.up, self.up)

    def dphi_dot(self):
        return np.einsum("i...,i...->...", self.snap.dphi, self.up)

    def integrate(self, integrand):
        return integrate(integrand * self.u, self.snap)


def _rate_full(schedule, state):
    if schedule is None:
        return 0.0
    return schedule.rate(state.t).full


# -- functionals ----------------------------------------------------------------

def shannon_H(state):
    """-int u log u dmu with x log x extended by 0 at 0."""
    snap, u = state.snapshot, np.asarray(state.u)
    _check_mass(snap, u)
    return -integrate(_xlogx(u), snap)


def H_m(state, m):
    _check_t(state.t)
    return shannon_H(state) - 0.5 * m * (1 + np.log(4 * np.pi * state.t))


def H_mK(state, m, K):
    _check_K(K)
    t = state.t
    return H_m(state, m) - 0.5 * m * K * t * (1 + K * t / 6)


def W_closed(state):
    """int [t |grad log u|^2 - log u] u dmu."""
    _check_t(state.t)
    return state.t * fisher_information(state.snapshot, state.u) + shannon_H(state)


def W_m_closed(state, m):
    return W_closed(state) - 0.5 * m * (2 + np.log(4 * np.pi * state.t))


def W_mK_closed(state, m, K):
    _check_K(K)
    t = state.t
    return W_m_closed(state, m) - m * (K * t + K * K * t * t / 4)


def W_mK_potential_form(state, m, K):
    """W_{m,K} through u = exp(-f) / (4 pi t)^(m/2): int [t|grad f|^2 + f - m (1 + Kt/2)^2] u dmu."""
    _check_K(K)
    snap, u, t = state.snapshot, np.asarray(state.u), state.t
    _check_t(t)
    _check_mass(snap, u)
    log_u = np.log(np.maximum(u, LOG_FLOOR))
    f = -log_u - 0.5 * m * np.log(4 * np.pi * t)
    grad_term = t * fisher_information(snap, u)
    f_term = integrate(np.where(u > 0, f * np.maximum(u, 0.0), 0.0), snap)
    return grad_term + f_term - m * (1 + K * t / 2) ** 2


# -- right-hand sides ---------------------------------------------------------

def dH_rhs(state):
    return fisher_information(state.snapshot, state.u)


def _curvature_form(ld, schedule, state, tensor_full):
    return ld.quad(0.5 * _rate_full(schedule, state) + tensor_full)


def d2H_rhs(state, schedule=None):
    """-2 int [|Hess log u|^2 + (1/2 dg/dt + Ric(L))(grad log u, grad log u)] u dmu."""
    snap = state.snapshot
    _check_mass(snap, np.asarray(state.u))
    ld = LogDerivatives(snap, state.u)
    hess_sq = _norm_sq_array(snap, ld.hessian)
    curv = _curvature_form(ld, schedule, state, bakry_emery(snap).full)
    return -2.0 * ld.integrate(hess_sq + curv)


def dW_rhs(state, schedule=None):
    """t * d2H_rhs + 2 int |grad log u|^2 u dmu."""
    _check_t(state.t)
    ld = LogDerivatives(state.snapshot, state.u)
    return state.t * d2H_rhs(state, schedule) + 2.0 * ld.integrate(ld.grad_sq)


def _dWm_terms(state, schedule, m, K):
    snap, t = state.snapshot, state.t
    _check_t(t)
    _check_K(K)
    _check_mass(snap, np.asarray(state.u))
    n = snap.dim
    if not m > n:
        raise ParameterError(f"the m-dimensional formula needs m > n; got m={m}, n={n}")
    ld = LogDerivatives(snap, state.u)
    c = 1.0 / (2 * t) + K / 2
    hess_term = ld.integrate(_norm_sq_array(snap, ld.hessian + c * snap.g))
    gap = m - n
    fiber_term = ld.integrate((ld.dphi_dot() - gap * c) ** 2)
    curv = _curvature_form(ld, schedule, state, bakry_emery_m(snap, m).full + K * snap.g)
    curv_term = ld.integrate(curv)
    return -2 * t * hess_term - (2 * t / gap) * fiber_term - 2 * t * curv_term


def dWm_rhs(state, schedule, m):
    return _dWm_terms(state, schedule, m, 0.0)


def dWmK_rhs(state, schedule, m, K):
    return _dWm_terms(state, schedule, m, K)


def li_yau_identity_defect(state, m):
    """Pointwise 2t|Hess l|^2 + m/2t - [2t|Hess l + g/2t|^2 + (m-n)/2t - 2 Delta l], l = log u."""
    snap, t = state.snapshot, state.t
    _check_t(t)
    ld = LogDerivatives(snap, state.u)
    hess = ld.hessian
    lap = np.einsum("ij...,ij...->...", snap.g_inv, hess)
    lhs = 2 * t * _norm_sq_array(snap, hess) + m / (2 * t)
    rhs = 2 * t * _norm_sq_array(snap, hess + snap.g / (2 * t)) + (m - snap.dim) / (2 * t) - 2 * lap
    return lhs - rhs


# -- Harnack ------------------------------------------------------------------

@dataclass
class HarnackCertificate:
    times: np.ndarray
    max_defect: np.ndarray
    m: float
    K: float
    tolerance: float
    curvature_certified: bool
    curvature_margin: float
    verdict: bool = field(init=False)

    def __post_init__(self):
        self.times = np.atleast_1d(np.asarray(self.times, dtype=float))
        self.max_defect = np.atleast_1d(np.asarray(self.max_defect, dtype=float))
        self.verdict = bool(np.all(self.max_defect <= self.tolerance))

    def to_dict(self):
        return {
            "times": self.times.tolist(),
            "max_defect": self.max_defect.tolist(),
            "m": self.m,
            "K": self.K,
            "tolerance": self.tolerance,
            "curvature_certified": self.curvature_certified,
            "curvature_margin": self.curvature_margin,
            "verdict": self.verdict,
        }


def harnack_field(state, m, K):
    """|grad u|^2/u^2 - (1 + 2Kt/3) Lu/u - m/2t - (mK/2)(1 + Kt/3) at every node."""
    snap, t = state.snapshot, state.t
    _check_t(t)
    _check_K(K)
    _dimension_gap(snap, m)
    ld = LogDerivatives(snap, state.u)
    lu_over_u = _witten_array(snap, ld.u) / ld.u
    lhs = ld.grad_sq - (1 + 2 * K * t / 3) * lu_over_u
    return lhs - (m / (2 * t) + 0.5 * m * K * (1 + K * t / 3))


def curvature_lower_bound(snap, m):
    """min over nodes of the g-relative smallest eigenvalue of Ric_{m,n}(L) (Ric(L) when m = n)."""
    gap = _dimension_gap(snap, m)
    tensor = bakry_emery(snap) if gap == 0 else bakry_emery_m(snap, m)
    return float(min_rel_eigenvalue(snap, tensor).min())


def harnack_defect(state, m, K, tol=1e-6):
    return harnack_series([state], m, K, tol)


def harnack_series(states, m, K, tol=1e-6):
    states = list(states)
    margin = min(curvature_lower_bound(s.snapshot, m) + K for s in states)
    defects = [float(harnack_field(s, m, K).max()) for s in states]
    return HarnackCertificate([s.t for s in states], defects, m, K, tol, margin >= -1e-10, margin)


# -- Lott flow W-entropy ------------------------------------------------------

def _lott_checks(lott_state, phi, tau):
    if tau is None or not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    snap = lott_state.snapshot
    mass = integrate(phi, snap)
    if abs(mass - 1.0) > 1e-6:
        raise RejectedInputError(f"phi has mass {mass:.9g}; W_q needs a normalized density")
    return snap


def _eta(phi, tau, N):
    return -np.log(np.maximum(np.asarray(phi), LOG_FLOOR)) - 0.5 * N * np.log(4 * np.pi * tau)


def W_q_ricci(lott_state, phi, eta=None, tau=None, n=None, q=None):
    """int [tau (|grad eta|^2 + R_q) + eta - (n+q)] phi dmu."""
    n = lott_state.n if n is None else n
    q = lott_state.q if q is None else q
    snap = _lott_checks(lott_state, phi, tau)
    phi_v = np.asarray(phi, dtype=float)
    eta_v = _eta(phi_v, tau, n + q) if eta is None else np.asarray(eta)
    r_q = warped_scalar_curvature(WarpedSpec(snap, q)).values
    grad_term = fisher_information(snap, phi_v)
    rest = integrate((tau * r_q + eta_v - (n + q)) * phi_v, snap)
    return tau * grad_term + rest


def dWq_rhs(lott_state, phi, eta=None, tau=None):
    """-2 tau int [|Ric_psi^q + Hess eta - g/2tau|^2 + (1/q)(Delta psi - |grad psi|^2 - <grad psi, grad eta> - q/2tau)^2] phi dmu."""
    q = lott_state.q
    snap = _lott_checks(lott_state, phi, tau)
    phi_v = np.asarray(phi, dtype=float)
    eta_v = _eta(phi_v, tau, lott_state.n + q) if eta is None else np.asarray(eta, dtype=float)
    if np.asarray(phi).min() < CONDITIONING_MIN:
        raise ConditioningError("phi too small for the Hessian of eta")
    d_eta = grad_cov(eta_v, snap.grid)
    hess_eta = _hessian_array(snap, eta_v, d_eta)
    ric_q, fiber_coef = warped_ricci(WarpedSpec(snap, q))
    tensor = ric_q.full + hess_eta - snap.g / (2 * tau)
    scalar = q * fiber_coef.values - _inner(snap, snap.dphi, d_eta) - q / (2 * tau)
    integrand = _norm_sq_array(snap, tensor) + scalar ** 2 / q
    return -2 * tau * integrate(integrand * phi_v, snap)
