"""Time-dependent metrics with the potential slaved to them by the conjugate equation."""
from collections import OrderedDict

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import ParameterError, RejectedInputError, StabilityError
from ..geometry import GeometrySnapshot, ScalarField, SymTensorField, bakry_emery_m, min_rel_eigenvalue
from ..geometry.curvature import check_positive_definite, node_major

TIME_SLACK = 1e-12


class MetricSchedule:
    """A family t -> g(t) on [t0, T] with potential f(t) from the conjugate equation.

    ``metric_at(t)`` returns a SymTensorField; ``metric_rate_at(t)`` its time
    derivative.  Without an analytic rate, a centered difference with step
    ``1e-4 * (T - t0)`` is used.
    """

    preserves_measure = True

    def __init__(self, grid, t0, T, metric_at, f0=None, metric_rate_at=None, fd_step=None, name="custom"):
        if not T > t0:
            raise ParameterError(f"schedule interval [{t0}, {T}] is empty")
        self.grid = grid
        self.t0 = float(t0)
        self.T = float(T)
        self._metric_at = metric_at
        self._rate_at = metric_rate_at
        self.fd_step = fd_step if fd_step is not None else 1e-4 * (self.T - self.t0)
        self.f0 = f0 if f0 is not None else ScalarField.constant(grid, 0.0)
        self.name = name
        g0 = self.metric(self.t0)
        check_positive_definite(g0.full, grid)
        self._logdet0 = self._logdet(g0)
        self._cache = OrderedDict()
        self._fixed = None

    @property
    def interval(self):
        return self.t0, self.T

    def _check_time(self, t):
        if t < self.t0 - TIME_SLACK or t > self.T + TIME_SLACK:
            raise StabilityError(f"time {t} outside schedule interval [{self.t0}, {self.T}]")

    def _logdet(self, g):
        sign, logdet = np.linalg.slogdet(node_major(g.full, self.grid))
        if np.any(sign <= 0):
            raise RejectedInputError("metric determinant ratio is not positive")
        return logdet

    def metric(self, t):
        g = self._metric_at(float(t))
        if g.grid != self.grid:
            raise RejectedInputError("metric_at returned a field on the wrong grid")
        return g

    def rate(self, t):
        if self._rate_at is not None:
            return self._rate_at(float(t))
        d = self.fd_step
        return SymTensorField(self.grid, (self.metric(t + d).packed - self.metric(t - d).packed) / (2 * d))

    def potential(self, t):
        return conjugate_potential(self, t)

    def snapshot(self, t):
        key = float(t)
        if self._fixed is not None:
            self._check_time(key)
            return self._fixed
        snap = self._cache.get(key)
        if snap is None:
            self._check_time(key)
            snap = GeometrySnapshot(self.metric(key), self.potential(key))
            self._cache[key] = snap
            if len(self._cache) > 16:
                self._cache.popitem(last=False)
        return snap

    # -- families -------------------------------------------------------

    @classmethod
    def static(cls, snapshot, t0, T):
        zero = SymTensorField(snapshot.grid, np.zeros_like(snapshot.metric.packed))
        sched = cls(
            snapshot.grid, t0, T, lambda t: snapshot.metric, f0=snapshot.potential,
            metric_rate_at=lambda t: zero, name="static",
        )
        sched._fixed = snapshot
        return sched

    @classmethod
    def scaled(cls, metric0, scale, scale_rate, t0, T, f0=None):
        """g(t) = scale(t) * metric0 with an analytic ``scale_rate``."""
        return cls(
            metric0.grid, t0, T,
            lambda t: metric0.scale(scale(t)),
            f0=f0,
            metric_rate_at=lambda t: metric0.scale(scale_rate(t)),
            name="scaled",
        )

    @classmethod
    def expanding(cls, grid, t0, T, f0=None):
        """g(t) = (1 + t) * identity."""
        ident = SymTensorField.identity(grid)
        return cls.scaled(ident, lambda t: 1.0 + t, lambda t: 1.0, t0, T, f0=f0)

    @classmethod
    def conformal(cls, grid, a, b, t0, T, f0=None):
        """g(t) = exp(2 (a + t b)) * identity for ScalarFields a, b."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)

        def metric_at(t):
            w = np.exp(2 * (a + t * b))
            return SymTensorField.diagonal(grid, [w] * grid.dim)

        def rate_at(t):
            w = 2 * b * np.exp(2 * (a + t * b))
            return SymTensorField.diagonal(grid, [w] * grid.dim)

        return cls(grid, t0, T, metric_at, f0=f0, metric_rate_at=rate_at, name="conformal")

    @classmethod
    def tabulated(cls, metric0, times, scales, f0=None):
        """g(t) = s(t) * metric0 with s a cubic spline through tabulated samples."""
        spline = CubicSpline(np.asarray(times, float), np.asarray(scales, float))
        rate = spline.derivative()
        sched = cls.scaled(metric0, lambda t: float(spline(t)), lambda t: float(rate(t)),
                           float(times[0]), float(times[-1]), f0=f0)
        sched.name = "tabulated"
        return sched


def conjugate_potential(schedule, t):
    """f(t) = f0 + 1/2 log(det g(t) / det g(t0)).

    This is the exact time integral of df/dt = 1/2 g^{ij} dg_ij/dt, so the
    weighted density exp(-f) sqrt(det g) does not depend on t.
    """
    schedule._check_time(t)
    logdet = schedule._logdet(schedule.metric(t))
    return ScalarField(schedule.grid, schedule.f0.values + 0.5 * (logdet - schedule._logdet0))


def super_ricci_defect(schedule, m, K, t):
    """Pointwise smallest g-relative eigenvalue of 1/2 dg/dt + Ric_{m,n}(L) + K g."""
    if K < 0:
        raise ParameterError(f"K must be non-negative, got {K}")
    snap = schedule.snapshot(t)
    tensor = schedule.rate(t).scale(0.5) + bakry_emery_m(snap, m) + snap.metric.scale(K)
    return min_rel_eigenvalue(snap, tensor)


def certify_super_flow(schedule, m, K, times, tol=1e-10):
    """Minimum defect over ``times`` and whether it clears ``-tol``."""
    worst = min(super_ricci_defect(schedule, m, K, t).min() for t in times)
    return worst, worst >= -tol
