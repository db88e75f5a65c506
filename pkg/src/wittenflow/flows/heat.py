"""Explicit RK4 for the heat equation of the time-dependent Witten Laplacian."""
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError, RejectedInputError, StabilityError
from ..geometry import GeometrySnapshot, ScalarField, integrate
from ..geometry.calculus import _witten_array

DEFAULT_SAFETY = 0.2
# nodes below -POSITIVITY_TOL * max|u| count as a loss of positivity; smaller
# negatives are rounding noise in underflowed tails
POSITIVITY_TOL = 1e-12
MASS_DRIFT_RATE = 1e-9


# RK4 is stable on the negative real axis up to |z| = 2.785
RK4_REAL_LIMIT = 2.0


def spectral_radius(snap):
    return snap.witten_spectral_radius


def stable_dt(snap, safety=DEFAULT_SAFETY):
    """min(safety * h_min^2 / (dim * max lambda_max(g^-1)), 2 / spectral radius of L).

    The first bound is the usual parabolic rule; the second catches strong
    potentials, which push the top of the discrete spectrum past pi^2/h^2.
    """
    h_min = min(snap.grid.spacing)
    rule = safety * h_min ** 2 / (snap.dim * snap.max_inverse_eigenvalue)
    return min(rule, RK4_REAL_LIMIT / spectral_radius(snap))


@dataclass(frozen=True)
class FlowState:
    t: float
    snapshot: GeometrySnapshot
    u: ScalarField

    @property
    def grid(self):
        return self.snapshot.grid

    def mass(self):
        return integrate(self.u, self.snapshot)


@dataclass
class FlowTrajectory:
    """States at the requested output times plus solver bookkeeping."""

    states: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ts = self.times
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise RejectedInputError("trajectory timestamps must be strictly increasing")

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    def __iter__(self):
        return iter(self.states)


def check_positive(u, t):
    values = np.asarray(u)
    scale = np.max(np.abs(values))
    if not np.all(np.isfinite(values)) or values.min() < -POSITIVITY_TOL * scale or scale == 0:
        raise StabilityError(
            f"solution lost positivity at t={t:.6g} (min {values.min():.3e}); reduce dt or the safety factor"
        )


def _rk4(rhs, t, y, dt):
    k1 = rhs(t, y)
    k2 = rhs(t + dt / 2, y + dt / 2 * k1)
    k3 = rhs(t + dt / 2, y + dt / 2 * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _heat_rhs(geometry):
    return lambda t, y: _witten_array(geometry.snapshot(t), y)


def heat_step(state, dt, geometry):
    """One RK4 step of du/dt = L_{g(t), f(t)} u; geometry refreshed at every substage."""
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    t1 = state.t + dt
    u1 = _rk4(_heat_rhs(geometry), state.t, state.u.values, dt)
    check_positive(u1, t1)
    return FlowState(t1, geometry.snapshot(t1), ScalarField(state.grid, u1))


def evolve_heat(geometry, u0, output_times, t_start=None, safety=DEFAULT_SAFETY, normalize=True):
    """Integrate the heat equation from ``t_start`` through every output time.

    ``geometry`` is anything with ``snapshot(t)`` and ``interval`` (a
    MetricSchedule or a Lott trajectory).  Steps are sized to land exactly on
    each output time and never exceed the stability bound.
    """
    output_times = np.asarray(output_times, dtype=float)
    if output_times.ndim != 1 or len(output_times) == 0:
        raise ParameterError("output_times must be a non-empty 1-d sequence")
    if len(output_times) > 1 and not np.all(np.diff(output_times) > 0):
        raise ParameterError("output_times must be strictly increasing")
    t0 = geometry.interval[0] if t_start is None else float(t_start)
    if output_times[0] < t0:
        raise ParameterError(f"first output time {output_times[0]} precedes start {t0}")
    snap = geometry.snapshot(t0)
    values = np.asarray(u0.values if isinstance(u0, ScalarField) else u0, dtype=float)
    if not np.all(np.isfinite(values)) or values.min() <= 0:
        raise RejectedInputError("initial data must be finite and strictly positive")
    mass0 = integrate(values, snap)
    if normalize:
        values = values / mass0
        mass0 = 1.0
    state = FlowState(t0, snap, ScalarField(snap.grid, values))
    rhs = _heat_rhs(geometry)
    conserves = getattr(geometry, "preserves_measure", False)

    states, dts, steps, drift = [], [], 0, 0.0
    for t_out in output_times:
        span = t_out - state.t
        if span > 0:
            dt_max = stable_dt(geometry.snapshot(state.t), safety)
            nsub = max(1, math.ceil(span / dt_max - 1e-9))
            dt = span / nsub
            y, t = state.u.values, state.t
            for k in range(nsub):
                y = _rk4(rhs, t, y, dt)
                t = state.t + (k + 1) * dt
                check_positive(y, t)
            steps += nsub
            dts.append(dt)
            snap = geometry.snapshot(t_out)
            state = FlowState(float(t_out), snap, ScalarField(snap.grid, y))
            if conserves:
                drift = max(drift, abs(integrate(y, snap) - mass0))
        states.append(state)

    meta = {
        "t_start": t0,
        "steps": steps,
        "dt_min": min(dts) if dts else None,
        "dt_max": max(dts) if dts else None,
        "safety": safety,
        "initial_mass": mass0,
        "normalized": normalize,
    }
    if conserves:
        meta["mass_drift"] = drift
        meta["mass_drift_ok"] = drift <= MASS_DRIFT_RATE * max(1.0, output_times[-1] - t0)
    return FlowTrajectory(states, meta)
