"""Optimal log-Sobolev constants by constrained minimization.

With w = (4 pi t)^(-m/4) u the problem becomes

    minimize  Phi(w) = int [a |grad w|^2 + V w^2 - w^2 log w^2 - c w^2] dmu
    subject to int w^2 dmu = 1,

with a = 4t and c = m' + (m/2) log(4 pi t) (m' = m for mu(t), m (1 + Kt/2)^2
for mu_K(t)); the Lott variant uses tau, V = tau R_q and m = n + q.  The
minimum is mu and the Euler-Lagrange equation reads
-a L w + V w - 2 w log w - c w = mu w.

Descent runs L-BFGS on w = exp(s) / |exp(s)|, which keeps every iterate
positive, and is then polished by Newton's method on the bordered system
(w, mu).
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import minimize

from .errors import ConvergenceError, ParameterError, RejectedInputError
from .geometry import ScalarField, save_field
from .geometry.calculus import _witten_array, bakry_emery
from .geometry.calculus import min_rel_eigenvalue

EL_TOL = 1e-8
NONUNIQUE_GAP = 1e-7
DENSE_LIMIT = 1024


@dataclass
class LogSobolevSolution:
    t: float
    mu: float
    u: ScalarField
    residual: float
    iterations: int
    m: float
    K: float = 0.0
    kind: str = "mu"
    seed: int = 0
    restart_mus: list = field(default_factory=list)
    nonunique: bool = False
    multiplier: float = None

    def summary(self):
        return {
            "kind": self.kind,
            "t": self.t,
            "mu": self.mu,
            "multiplier": self.multiplier,
            "m": self.m,
            "K": self.K,
            "residual": self.residual,
            "iterations": self.iterations,
            "seed": self.seed,
            "restart_mus": self.restart_mus,
            "nonunique": self.nonunique,
        }

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_field(directory / "minimizer.npz", self.u)
        (directory / "summary.json").write_text(json.dumps(self.summary(), indent=1))
        return directory


def _log(x):
    return np.log(np.maximum(x, 1e-300))


class _Problem:
    """Discrete Phi on the nodes, with the dmu quadrature weights folded in."""

    def __init__(self, snap, a, c, V=None):
        self.snap = snap
        self.a = float(a)
        self.c = float(c)
        self.V = np.zeros(snap.grid.shape) if V is None else np.asarray(V, dtype=float)
        self.weight = snap.density * snap.grid.cell_volume
        self.shape = snap.grid.shape

    def L(self, w):
        return _witten_array(self.snap, w)

    def normalize(self, w):
        return w / np.sqrt(np.sum(self.weight * w * w))

    def value(self, w):
        w2 = w * w
        dirichlet = -np.sum(self.weight * w * self.L(w))
        return float(self.a * dirichlet + np.sum(self.weight * (self.V * w2 - w2 * _log(w2) - self.c * w2)))

    def el_operator(self, w):
        """-a L w + V w - 2 w log w - c w."""
        return -self.a * self.L(w) + self.V * w - 2 * w * _log(w) - self.c * w

    def residual(self, w, mu):
        r = self.el_operator(w) - mu * w
        return float(np.sqrt(np.sum(self.weight * r * r)))

    def objective(self, s):
        s = s.reshape(self.shape)
        e = np.exp(s - s.max())
        w = self.normalize(e)
        grad_w = 2 * self.weight * (self.el_operator(w) - w)
        inner = np.sum(grad_w * w)
        grad_s = grad_w * w - inner * self.weight * w * w
        return self.value(w), grad_s.ravel()

    def dense_L(self):
        n = int(np.prod(self.shape))
        eye = np.eye(n).reshape((n, *self.shape))
        return self.L(eye).reshape(n, n).T

    def _system(self, w, mu):
        sq = np.sqrt(self.weight.ravel())
        return np.concatenate([
            (self.el_operator(w.reshape(self.shape)).ravel() - mu * w) * sq,
            [np.sum(self.weight.ravel() * w * w) - 1.0],
        ])

    def newton(self, w, iters=60):
        """Damped Newton on (w, mu) for the EL equation plus the constraint.

        Each node may shrink at most tenfold per step, which keeps iterates
        positive; the step is halved until the residual norm drops.
        """
        n = w.size
        Lm = self.dense_L()
        V, weight = self.V.ravel(), self.weight.ravel()
        sq = np.sqrt(weight)
        wf = w.ravel().copy()
        mu = self.value(w)
        F = self._system(wf, mu)
        norm = np.linalg.norm(F)
        for _ in range(iters):
            if norm < 1e-15:
                break
            J = np.empty((n + 1, n + 1))
            J[:n, :n] = -self.a * Lm
            J[np.arange(n), np.arange(n)] += V - 2 * _log(wf) - 2 - self.c - mu
            J[:n, :n] *= sq[:, None]
            J[:n, n] = -wf * sq
            J[n, :n] = 2 * weight * wf
            J[n, n] = 0.0
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
            alpha, accepted = 1.0, False
            while alpha > 1e-6:
                # fraction to the boundary, node by node: shrink at most tenfold
                w_new = np.maximum(wf + alpha * step[:n], 0.1 * wf)
                mu_new = mu + alpha * step[n]
                F_new = self._system(w_new, mu_new)
                norm_new = np.linalg.norm(F_new)
                if np.isfinite(norm_new) and norm_new < norm:
                    accepted = True
                    break
                alpha /= 2
            if not accepted:
                break
            wf, mu, F, norm = w_new, mu_new, F_new, norm_new
        w_out = self.normalize(wf.reshape(self.shape))
        mu_out = self.value(w_out)
        return w_out, mu_out, self.residual(w_out, mu_out)


def _initial_guesses(shape, restarts, seed):
    rng = np.random.default_rng(seed)
    yield np.zeros(shape)
    for _ in range(restarts):
        noise = rng.standard_normal(shape)
        # smooth the noise so the restart is a moderate positive bump, not white noise
        spec = np.fft.rfftn(noise)
        k = np.sqrt(sum(np.meshgrid(*[np.fft.fftfreq(n) * n if i < len(shape) - 1 else np.fft.rfftfreq(n) * n
                                        for i, n in enumerate(shape)], indexing="ij")[j] ** 2
                        for j in range(len(shape))))
        spec *= np.exp(-(k / 3.0) ** 2)
        s = np.fft.irfftn(spec, shape, axes=tuple(range(len(shape))))
        yield s / max(np.std(s), 1e-12)


def _solve(problem, restarts, seed, maxiter, tol, t, m, K, kind):
    runs = []
    total_iters = 0
    for s0 in _initial_guesses(problem.shape, restarts, seed):
        res = minimize(problem.objective, s0.ravel(), jac=True, method="L-BFGS-B",
                       options={"maxiter": maxiter, "maxcor": 30, "ftol": 1e-16, "gtol": 1e-13})
        total_iters += int(res.nit)
        s = res.x.reshape(problem.shape)
        w = problem.normalize(np.exp(s - s.max()))
        mu = problem.value(w)
        defect = problem.residual(w, mu)
        if w.size <= DENSE_LIMIT:
            w, mu, defect = problem.newton(w)
        runs.append((mu, w, defect))

    mus = np.array([r[0] for r in runs])
    best_mu = mus.min()
    uniform = problem.normalize(np.ones(problem.shape))
    candidates = [r for r in runs if r[0] <= best_mu + 1e-10]
    mu, w, defect = min(candidates, key=lambda r: np.sqrt(np.sum(problem.weight * (r[1] - uniform) ** 2)))
    if defect > tol:
        raise ConvergenceError(
            f"Euler-Lagrange defect {defect:.3e} above {tol:g} after {total_iters} iterations",
            last_iterate=ScalarField(problem.snap.grid, w), defect=defect,
        )
    if w.min() <= 0:
        raise ConvergenceError("minimizer is not strictly positive", last_iterate=ScalarField(problem.snap.grid, w))
    multiplier = float(np.sum(problem.weight * w * problem.el_operator(w)))
    scale = (4 * np.pi * t) ** (m / 4)
    return LogSobolevSolution(
        t=t, mu=mu, u=ScalarField(problem.snap.grid, scale * w), residual=defect, iterations=total_iters,
        m=m, K=K, kind=kind, seed=seed, restart_mus=mus.tolist(),
        nonunique=bool(mus.max() - mus.min() > NONUNIQUE_GAP), multiplier=multiplier,
    )


def _check(t, m, snap):
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    if m < snap.dim:
        raise ParameterError(f"need m >= n; got m={m}, n={snap.dim}")


def solve_mu(snapshot, t, m, restarts=5, seed=0, maxiter=20000, tol=EL_TOL):
    """mu(t) = inf int [4t|grad u|^2 - u^2 log u^2 - m u^2] (4 pi t)^(-m/2) dmu."""
    return solve_mu_K(snapshot, t, m, 0.0, restarts, seed, maxiter, tol)


def solve_mu_K(snapshot, t, m, K, restarts=5, seed=0, maxiter=20000, tol=EL_TOL):
    """As solve_mu with the zeroth-order coefficient m (1 + Kt/2)^2."""
    _check(t, m, snapshot)
    if K < 0:
        raise ParameterError(f"K must be non-negative, got {K}")
    m_eff = m * (1 + K * t / 2) ** 2
    problem = _Problem(snapshot, 4 * t, m_eff + 0.5 * m * np.log(4 * np.pi * t))
    return _solve(problem, restarts, seed, maxiter, tol, t, m, K, "mu" if K == 0 else "mu_K")


def solve_mu_lott(lott_state, tau, n=None, q=None, restarts=5, seed=0, maxiter=20000, tol=EL_TOL):
    """mu(tau) with the potential term tau R_q and m = n + q."""
    n = lott_state.n if n is None else n
    q = lott_state.q if q is None else q
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    N = n + q
    problem = _Problem(lott_state.snapshot, 4 * tau, N + 0.5 * N * np.log(4 * np.pi * tau),
                       V=tau * lott_state.r_q.values)
    return _solve(problem, restarts, seed, maxiter, tol, tau, N, 0.0, "mu_lott")


def _gradient_flow(problem, w, step, maxiter, tol):
    """Projected gradient flow dw/ds = -E(w) + <E(w), w> w, E the EL operator; linear part implicit.

    Keeping the multiplier in the explicit part makes every fixed point an
    exact EL solution, independent of the step.
    """
    n = w.size
    A = np.eye(n) - step * (problem.a * problem.dense_L() - np.diag(problem.V.ravel()))
    lu = lu_factor(A)
    w = problem.normalize(np.abs(w))
    mu = problem.value(w)
    for k in range(1, maxiter + 1):
        lam = np.sum(problem.weight * w * problem.el_operator(w))
        rhs = w + step * (w * _log(w * w) + (problem.c + lam) * w)
        w = problem.normalize(np.abs(lu_solve(lu, rhs.ravel()).reshape(problem.shape)))
        mu_new = problem.value(w)
        if abs(mu_new - mu) < tol:
            return w, mu_new, k
        mu = mu_new
    return w, mu, maxiter


def gradient_flow_mu(snapshot, t, m, K=0.0, restarts=5, seed=0, step=0.05, maxiter=20000, tol=1e-14):
    """Brute-force cross-check for solve_mu_K: best normalized-gradient-flow value over the same restarts.

    Returns ``(mu, u, restart_mus)``.  Uses a dense operator, so it is meant
    for grids up to a few hundred nodes.
    """
    _check(t, m, snapshot)
    m_eff = m * (1 + K * t / 2) ** 2
    problem = _Problem(snapshot, 4 * t, m_eff + 0.5 * m * np.log(4 * np.pi * t))
    runs = []
    for s0 in _initial_guesses(problem.shape, restarts, seed):
        w, mu, _ = _gradient_flow(problem, np.exp(s0 - s0.max()), step, maxiter, tol)
        runs.append((mu, w))
    mu, w = min(runs, key=lambda r: r[0])
    return mu, ScalarField(snapshot.grid, (4 * np.pi * t) ** (m / 4) * w), [r[0] for r in runs]


def log_sobolev_gap(snapshot, t, m, mu, w_values, K=0.0):
    """4t int |grad w|^2 d nu - int w^2 log w^2 d nu - m' - mu for w normalized in d nu = (4 pi t)^(-m/2) dmu.

    Non-negative for every admissible w exactly when mu is a valid constant,
    and zero at the minimizer.
    """
    problem = _Problem(snapshot, 4 * t, 0.0)
    scale = (4 * np.pi * t) ** (-m / 2)
    w = np.asarray(w_values, dtype=float)
    mass = scale * np.sum(problem.weight * w * w)
    if abs(mass - 1) > 1e-10:
        raise RejectedInputError(f"test function has weighted mass {mass:.12g}, expected 1")
    w2 = w * w
    entropy = scale * np.sum(problem.weight * np.where(w2 > 0, w2 * np.log(np.where(w2 > 0, w2, 1.0)), 0.0))
    dirichlet = -scale * np.sum(problem.weight * w * problem.L(w))
    m_eff = m * (1 + K * t / 2) ** 2
    return 4 * t * dirichlet - entropy - m_eff - mu


def _super_margin(schedule, m, K, t):
    from .flows.schedule import super_ricci_defect

    snap = schedule.snapshot(t)
    if m > snap.dim:
        return float(super_ricci_defect(schedule, m, K, t).min())
    tensor = schedule.rate(t).scale(0.5) + bakry_emery(snap) + snap.metric.scale(K)
    return float(min_rel_eigenvalue(snap, tensor).min())


def mu_monotonicity(source, times, m, K=0.0, slack=NONUNIQUE_GAP, **solver_kw):
    """mu at each time and whether the sequence is non-increasing.

    ``source`` is a MetricSchedule (times are t, certified by the super
    Ricci flow defect) or a LottTrajectory (times are tau, always certified).
    Without a certificate the verdict is reported as not applicable.
    """
    times = [float(t) for t in times]
    if hasattr(source, "state_at"):
        t_end = source.interval[1]
        sols = [solve_mu_lott(source.state_at(t_end - tau), tau, **solver_kw) for tau in times]
        certified, margin = True, None
    else:
        if m == source.grid.dim:
            for t in times:
                if np.max(np.abs(source.snapshot(t).dphi)) > 1e-12:
                    raise ParameterError("m = n needs a constant potential")
        margin = min(_super_margin(source, m, K, t) for t in times)
        certified = margin >= -1e-10
        sols = [solve_mu_K(source.snapshot(t), t, m, K, **solver_kw) for t in times]
    mus = np.array([s.mu for s in sols])
    holds = bool(np.all(np.diff(mus) <= slack))
    return {
        "times": times,
        "mu": mus.tolist(),
        "certified": certified,
        "defect_margin": margin,
        "verdict": holds if certified else None,
        "measured_nonincreasing": holds,
        "solutions": sols,
    }
