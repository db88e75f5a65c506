"""Coupled flow dg/dt = -2 Ric_psi^q, dpsi/dt = Delta psi - |grad psi|^2 and its conjugate heat equation.

The Lott trajectory keeps every accepted step together with the rates, so
the geometry between steps is recovered by cubic Hermite interpolation in
time.  It exposes ``snapshot(t)`` and ``interval`` and can therefore drive
``evolve_heat`` directly.
"""
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from ..errors import FlowSingularityError, GeometryError, ParameterError, RejectedInputError
from ..geometry import GeometrySnapshot, ScalarField, SymTensorField, integrate
from ..geometry.calculus import _witten_array
from ..geometry.curvature import christoffel_array, inverse_full, ricci_array
from ..warped import WarpedSpec, _psi_terms, warped_ricci, warped_scalar_curvature
from .heat import DEFAULT_SAFETY, _rk4, check_positive, stable_dt


def parabolic_dt(snap, safety=DEFAULT_SAFETY):
    h_min = min(snap.grid.spacing)
    return safety * h_min ** 2 / (snap.dim * snap.max_inverse_eigenvalue)


@dataclass(frozen=True)
class LottState:
    t: float
    metric: SymTensorField
    psi: ScalarField
    q: float
    phi_conj: ScalarField = None

    def __post_init__(self):
        if not self.q > 0:
            raise ParameterError(f"q must be positive, got {self.q}")
        if self.phi_conj is not None and self.phi_conj.min() <= 0:
            raise RejectedInputError("conjugate solution must be positive")

    @property
    def grid(self):
        return self.metric.grid

    @property
    def n(self):
        return self.grid.dim

    @cached_property
    def snapshot(self):
        return GeometrySnapshot(self.metric, self.psi)

    @cached_property
    def spec(self):
        return WarpedSpec(self.snapshot, self.q)

    @cached_property
    def r_q(self):
        return warped_scalar_curvature(self.spec)

    @classmethod
    def flat(cls, grid, psi, q, t=0.0):
        return cls(t, SymTensorField.identity(grid), psi, q)


def _pack(state):
    return np.concatenate([state.metric.packed.ravel(), state.psi.values.ravel()])


def _unpack(y, grid):
    npk = grid.dim * (grid.dim + 1) // 2
    packed = y[: npk * grid.size].reshape((npk, *grid.shape))
    psi = y[npk * grid.size:].reshape(grid.shape)
    return packed, psi


def lott_rates(state):
    """(dg/dt packed, dpsi/dt) at a state."""
    spec = state.spec
    horizontal, _ = warped_ricci(spec)
    lap, grad_sq = _psi_terms(state.snapshot)
    return -2.0 * horizontal.packed, lap - grad_sq


def _state_from(y, grid, q, t):
    packed, psi = _unpack(y, grid)
    if not np.all(np.isfinite(y)):
        raise GeometryError("flow produced non-finite values")
    return LottState(t, SymTensorField(grid, packed), ScalarField(grid, psi), q)


def _rhs(grid, q):
    def rhs(t, y):
        dg, dpsi = lott_rates(_state_from(y, grid, q, t))
        return np.concatenate([dg.ravel(), dpsi.ravel()])
    return rhs


def lott_flow_step(state, dt):
    """One RK4 step with curvature recomputed at each substage."""
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    try:
        y1 = _rk4(_rhs(state.grid, state.q), state.t, _pack(state), dt)
        return _state_from(y1, state.grid, state.q, state.t + dt)
    except GeometryError as exc:
        raise FlowSingularityError(f"metric degenerated during step from t={state.t}: {exc}", last_good=state)


class LottTrajectory:
    """Dense record of a Lott run with cubic Hermite interpolation between steps."""

    preserves_measure = False

    def __init__(self, grid, q, times, ys, rates, outputs, metadata):
        self.grid = grid
        self.q = q
        self.knots = np.asarray(times)
        self._ys = np.asarray(ys)
        self._rates = np.asarray(rates)
        self.outputs = outputs
        self.metadata = metadata
        self._cache = OrderedDict()

    @property
    def interval(self):
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def times(self):
        return np.array([s.t for s in self.outputs])

    @cached_property
    def _spline(self):
        if len(self.knots) < 2:
            raise ParameterError("trajectory holds a single time; nothing to interpolate")
        return CubicHermiteSpline(self.knots, self._ys, self._rates, axis=0)

    def state_at(self, t):
        t = float(t)
        t0, t1 = self.interval
        if t < t0 - 1e-12 or t > t1 + 1e-12:
            raise ParameterError(f"time {t} outside trajectory interval [{t0}, {t1}]")
        state = self._cache.get(t)
        if state is None:
            idx = np.searchsorted(self.knots, t)
            if idx < len(self.knots) and self.knots[idx] == t:
                y = self._ys[idx]
            else:
                y = self._spline(min(max(t, t0), t1))
            state = _state_from(y, self.grid, self.q, t)
            self._cache[t] = state
            if len(self._cache) > 16:
                self._cache.popitem(last=False)
        return state

    def snapshot(self, t):
        return self.state_at(t).snapshot

    def r_q(self, t):
        return self.state_at(t).r_q


def evolve_lott(initial, T, output_times=None, safety=DEFAULT_SAFETY):
    """Run the coupled flow from ``initial.t`` to ``T``, landing on every output time."""
    t0 = initial.t
    if not T > t0:
        raise ParameterError(f"final time {T} must exceed start {t0}")
    targets = np.unique(np.append(np.asarray(output_times if output_times is not None else [], float), [t0, T]))
    if targets[0] < t0 or targets[-1] > T:
        raise ParameterError("output times must lie in [t0, T]")
    grid, q = initial.grid, initial.q
    rhs = _rhs(grid, q)
    state = initial
    y = _pack(state)
    times, ys, rates = [t0], [y], []
    outputs = [state]
    steps = 0
    for target in targets[1:]:
        while state.t < target - 1e-14:
            dt = min(parabolic_dt(state.snapshot, safety), target - state.t)
            if target - (state.t + dt) < 1e-12 * max(1.0, abs(target)):
                dt = target - state.t
            try:
                k1 = rhs(state.t, y)
                k2 = rhs(state.t + dt / 2, y + dt / 2 * k1)
                k3 = rhs(state.t + dt / 2, y + dt / 2 * k2)
                k4 = rhs(state.t + dt, y + dt * k3)
                y_new = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                t_new = target if abs(state.t + dt - target) < 1e-12 else state.t + dt
                new_state = _state_from(y_new, grid, q, t_new)
                new_state.snapshot
            except GeometryError as exc:
                raise FlowSingularityError(f"metric degenerated after t={state.t}: {exc}", last_good=state)
            rates.append(k1)
            state, y = new_state, y_new
            times.append(state.t)
            ys.append(y)
            steps += 1
        outputs.append(state)
    rates.append(rhs(state.t, y))
    if output_times is not None:
        wanted = set(np.asarray(output_times, float).tolist())
        outputs = [s for s in outputs if s.t in wanted]
    meta = {"steps": steps, "safety": safety, "q": q, "t0": t0, "T": float(T)}
    return LottTrajectory(grid, q, times, ys, rates, outputs, meta)


# -- direct Ricci flow on an arbitrary metric ---------------------------------

def ricci_rate(metric):
    g = metric.full
    gam = christoffel_array(g, inverse_full(g, metric.grid), metric.grid)
    return SymTensorField.from_full(metric.grid, -2.0 * ricci_array(gam, metric.grid))


def evolve_ricci_flow(metric, t0, T, output_times, safety=DEFAULT_SAFETY):
    """Plain dg/dt = -2 Ric by RK4; returns {t: SymTensorField} at the output times."""
    grid = metric.grid
    shape = metric.packed.shape

    def rhs(t, y):
        m = SymTensorField(grid, y.reshape(shape))
        return ricci_rate(m).packed

    out = {}
    t, y = float(t0), metric.packed.copy()
    for target in sorted(set(float(s) for s in output_times)):
        while t < target - 1e-14:
            snap = GeometrySnapshot(SymTensorField(grid, y))
            dt = min(parabolic_dt(snap, safety), target - t)
            y = _rk4(rhs, t, y, dt)
            t = target if abs(t + dt - target) < 1e-12 else t + dt
        out[target] = SymTensorField(grid, y)
    return out


# -- conjugate heat equation in backward time ---------------------------------

@dataclass(frozen=True)
class ConjugateState:
    tau: float
    t: float
    snapshot: GeometrySnapshot
    phi: ScalarField
    lott: LottState = None


@dataclass
class ConjugateTrajectory:
    states: list
    metadata: dict = field(default_factory=dict)

    @property
    def taus(self):
        return np.array([s.tau for s in self.states])

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    def __iter__(self):
        return iter(self.states)


def conjugate_heat_solve(trajectory, phi_T, output_tau, safety=DEFAULT_SAFETY, normalize=True):
    """Solve d phi/d tau = L phi - R_q phi with tau = T - t from terminal data at tau = 0."""
    t_end = trajectory.interval[1]
    t_begin = trajectory.interval[0]
    output_tau = np.asarray(output_tau, dtype=float)
    if len(output_tau) > 1 and not np.all(np.diff(output_tau) > 0):
        raise ParameterError("output_tau must be strictly increasing")
    if output_tau[0] < 0 or output_tau[-1] > t_end - t_begin + 1e-12:
        raise ParameterError("output_tau must lie in [0, T - t0]")
    values = np.asarray(phi_T.values if isinstance(phi_T, ScalarField) else phi_T, dtype=float)
    if not np.all(np.isfinite(values)) or values.min() <= 0:
        raise RejectedInputError("terminal data must be finite and strictly positive")
    snap_T = trajectory.snapshot(t_end)
    mass = integrate(values, snap_T)
    if normalize:
        values = values / mass

    def rhs(tau, y):
        t = t_end - tau
        st = trajectory.state_at(t)
        return _witten_array(st.snapshot, y) - st.r_q.values * y

    tau, y = 0.0, values
    states, steps = [], 0
    for target in output_tau:
        span = target - tau
        if span > 0:
            nsub = max(1, math.ceil(span / stable_dt(trajectory.snapshot(t_end - tau), safety) - 1e-9))
            dt = span / nsub
            start = tau
            for k in range(nsub):
                y = _rk4(rhs, tau, y, dt)
                tau = start + (k + 1) * dt
                check_positive(y, t_end - tau)
            steps += nsub
        tau = float(target)
        st = trajectory.state_at(t_end - tau)
        states.append(ConjugateState(tau, t_end - tau, st.snapshot, ScalarField(st.grid, y), st))
    return ConjugateTrajectory(states, {"steps": steps, "terminal_mass": mass, "safety": safety})


def eta_from_phi(phi, tau, n, q):
    """eta with phi = (4 pi tau)^(-(n+q)/2) exp(-eta)."""
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    values = np.asarray(phi)
    if values.min() <= 0:
        raise RejectedInputError("phi must be strictly positive")
    return ScalarField(phi.grid, -np.log(values) - 0.5 * (n + q) * np.log(4 * np.pi * tau))
