"""Named checks an experiment can select, and the lazily built context they share."""
import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..entropy import (
    W_m_closed,
    W_q_ricci,
    curvature_lower_bound,
    dWq_rhs,
    formula_residuals,
    harnack_series,
    time_derivative,
)
from ..flows import (
    LottState,
    MetricSchedule,
    conjugate_heat_solve,
    evolve_heat,
    evolve_lott,
    evolve_ricci_flow,
    super_ricci_defect,
)
from ..geometry import (
    GeometrySnapshot,
    Grid,
    ScalarField,
    SymTensorField,
    christoffel,
    fourier_series,
    integrate,
    laplace_beltrami,
    ricci,
)
from ..logsobolev import gradient_flow_mu, mu_monotonicity, solve_mu_K
from ..warped import (
    WarpedSnapshot,
    WarpedSpec,
    assemble_blocks,
    hessian_norm_decomposition,
    warped_christoffel_closed_form,
    warped_laplacian,
    warped_ricci,
)

GAUSSIAN_IMAGES = 3


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: dict = dataclasses.field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "measured": _json_float(self.measured),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
        }


def _json_float(x):
    return float(x) if x is not None and math.isfinite(x) else None


@dataclass(frozen=True)
class Check:
    name: str
    fn: object
    tolerance: float
    description: str
    needs: str = "snapshot"  # snapshot | heat | lott
    m_formula: bool = False
    needs_fiber: bool = False
    needs_log_sobolev: str = None
    needs_convergence: bool = False
    needs_time_series: bool = False
    lott_ok: bool = False

    def run(self, ctx, tolerance=None):
        tol = self.tolerance if tolerance is None else float(tolerance)
        measured, ok, detail = self.fn(ctx, tol)
        passed = bool(ok) and measured is not None and math.isfinite(measured)
        return CheckResult(self.name, float(measured) if measured is not None else float("nan"), tol, passed, detail)


CHECKS = {}


def check(name, tolerance, description, **kw):
    def deco(fn):
        CHECKS[name] = Check(name, fn, tolerance, description, **kw)
        return fn
    return deco


# -- experiment context ---------------------------------------------------------

class Context:
    """Builds geometry, trajectories and reports on first use, so each check only pays for what it needs."""

    def __init__(self, config):
        self.config = config

    @cached_property
    def grid(self):
        return Grid(tuple(self.config.grid["nodes"]), tuple(self.config.periods))

    def fourier(self, spec):
        if spec is None:
            return ScalarField.constant(self.grid, 0.0)
        return fourier_series(self.grid, spec.get("const", 0.0), spec.get("terms", ()))

    @cached_property
    def potential(self):
        return self.fourier(self.config.geometry.get("potential"))

    @cached_property
    def metric0(self):
        metric = self.config.geometry.get("metric", {"family": "flat"})
        if metric.get("family") == "conformal":
            w = np.exp(2 * self.fourier(metric.get("a")).values)
            return SymTensorField.diagonal(self.grid, [w] * self.grid.dim)
        return SymTensorField.identity(self.grid)

    @cached_property
    def base_snapshot(self):
        return GeometrySnapshot(self.metric0, self.potential)

    @property
    def m(self):
        return self.config.m

    @property
    def t0(self):
        return float(self.config.solver_value("t0", min(self._ls_times() or [1.0])))

    @property
    def T(self):
        return float(self.config.solver_value("T", max(self._ls_times() or [self.t0 + 1.0])))

    def _ls_times(self):
        ls = self.config.log_sobolev or {}
        out = []
        for key in ("oracle_times", "monotone_times"):
            out += list(ls.get(key, []))
        return out

    @cached_property
    def schedule(self):
        s = self.config.schedule
        kind = s.get("kind", "static")
        t0, T = self.t0, self.T
        if kind == "static":
            return MetricSchedule.static(self.base_snapshot, t0, T)
        if kind == "expanding":
            return MetricSchedule.expanding(self.grid, t0, T, f0=self.potential)
        if kind == "scaled":
            coeffs = [float(c) for c in s["coeffs"]]
            poly = np.polynomial.Polynomial(coeffs)
            deriv = poly.deriv()
            return MetricSchedule.scaled(self.metric0, lambda t: float(poly(t)), lambda t: float(deriv(t)),
                                         t0, T, f0=self.potential)
        if kind == "conformal":
            a = self.fourier(self.config.geometry.get("metric", {}).get("a"))
            return MetricSchedule.conformal(self.grid, a, self.fourier(s.get("b")), t0, T, f0=self.potential)
        if kind == "tabulated":
            return MetricSchedule.tabulated(self.metric0, s["times"], s["scales"], f0=self.potential)
        raise ValueError(f"schedule kind {kind!r} has no metric schedule")

    @cached_property
    def K(self):
        K = self.config.parameters.get("K", 0.0)
        if K != "auto":
            return float(K)
        times = self.output_times if self.config.solver_value("dt_out") else [self.t0]
        probe = sorted({float(times[0]), float(times[len(times) // 2]), float(times[-1])})
        low = min(curvature_lower_bound(self.schedule.snapshot(t), self.m) for t in probe)
        return max(0.0, -low)

    @cached_property
    def output_times(self):
        t0, T = self.t0, self.T
        dt = float(self.config.solver_value("dt_out"))
        count = int(round((T - t0) / dt))
        return np.round(t0 + dt * np.arange(count + 1), 12)

    def initial_values(self, snap, t_start):
        init = self.config.initial
        kind = init.get("kind", "constant")
        if kind == "constant":
            return np.ones(self.grid.shape)
        if kind == "exp_fourier":
            return np.exp(self.fourier(init.get("field")).values)
        # wrapped Gaussian heat kernel of the flat torus at time t_start
        t = float(init.get("t", t_start))
        center = init.get("center", [0.0] * self.grid.dim)
        out = np.ones(self.grid.shape)
        for axis, (x, c, L) in enumerate(zip(self.grid.coords(), center, self.grid.periods)):
            d = x - c
            out = out * sum(np.exp(-(d + k * L) ** 2 / (4 * t)) for k in range(-GAUSSIAN_IMAGES, GAUSSIAN_IMAGES + 1))
            out = out / np.sqrt(4 * np.pi * t)
        # far tails underflow to 0; keep the data strictly positive
        return np.maximum(out, np.finfo(float).tiny)

    @cached_property
    def trajectory(self):
        snap = self.schedule.snapshot(self.t0)
        u0 = self.initial_values(snap, self.t0)
        return evolve_heat(self.schedule, u0, self.output_times,
                           safety=self.config.solver_value("safety", 0.2))

    @cached_property
    def report(self):
        return formula_residuals(self.trajectory, self.schedule, self.m, self.K,
                                 richardson=self.config.solver_value("richardson", True))

    # -- Lott flow ----------------------------------------------------------------

    @cached_property
    def lott_initial(self):
        return LottState(0.0, self.metric0, self.potential, float(self.config.q))

    @cached_property
    def lott_outputs(self):
        count = int(self.config.schedule.get("product_samples", 10))
        return np.round(np.linspace(0.0, self.T, count + 1), 12)

    @cached_property
    def lott(self):
        return evolve_lott(self.lott_initial, self.T, self.lott_outputs,
                           safety=self.config.solver_value("safety", 0.2))

    @cached_property
    def terminal(self):
        return np.exp(self.fourier(self.config.schedule.get("terminal")).values)

    @cached_property
    def conjugate(self):
        dt = float(self.config.solver_value("dt_out"))
        count = int(round(self.T / dt))
        taus = np.round(dt * np.arange(count + 1), 12)
        return conjugate_heat_solve(self.lott, self.terminal, taus,
                                    safety=self.config.solver_value("safety", 0.2))

    @cached_property
    def lott_entropy(self):
        sel = [c for c in self.conjugate if c.tau >= self.t0 - 1e-12]
        taus = np.array([c.tau for c in sel])
        W = np.array([W_q_ricci(c.lott, c.phi, None, c.tau) for c in sel])
        rhs = np.array([dWq_rhs(c.lott, c.phi, None, c.tau) for c in sel])
        dt = float(self.config.solver_value("dt_out"))
        lhs = time_derivative(W, dt, 1, self.config.solver_value("richardson", True))
        return taus, W, lhs, rhs

    # -- warped product --------------------------------------------------------------

    @cached_property
    def warped_spec(self):
        fiber = self.config.fiber or {}
        return WarpedSpec.torus_fiber(self.base_snapshot, int(fiber.get("q", 1)), nodes=int(fiber.get("nodes", 8)))

    @cached_property
    def warped(self):
        return WarpedSnapshot(self.warped_spec)

    def derived(self, **changes):
        """A fresh context for a modified config (used by convergence studies)."""
        cfg = dataclasses.replace(self.config)
        cfg.solver = dict(self.config.solver, **changes.pop("solver", {}))
        if "nodes" in changes:
            cfg.grid = dict(self.config.grid, nodes=changes.pop("nodes"))
        if "initial" in changes:
            cfg.initial = changes.pop("initial")
        return Context(cfg)


# -- warped product identities ---------------------------------------------------

@check("warped_christoffel", 1e-9, "closed-form Christoffel blocks against direct computation", needs_fiber=True)
def _warped_christoffel(ctx, tol):
    closed = warped_christoffel_closed_form(ctx.warped_spec).values
    direct = christoffel(ctx.warped.metric).values
    err = float(np.max(np.abs(closed - direct)))
    return err, err <= tol, {}


@check("warped_laplacian", 1e-9, "split Laplacian L + exp(2 phi/q) Delta_N against the product Laplacian",
       needs_fiber=True)
def _warped_laplacian(ctx, tol):
    ws = ctx.warped
    coords = ws.grid.coords()
    n = ctx.grid.dim
    f = ScalarField(ws.grid, np.cos(coords[0]) * np.sin(coords[n]))
    err = float(np.max(np.abs(warped_laplacian(ctx.warped_spec, f).values
                              - laplace_beltrami(ws.snapshot, f).values)))
    return err, err <= tol, {"test_function": "cos(x) sin(theta)"}


@check("warped_hessian_split", 1e-12, "|Hess f - g/2t|^2 equals its horizontal plus vertical parts",
       needs_fiber=True)
def _warped_hessian_split(ctx, tol):
    x = ctx.grid.coords()[0]
    f = ScalarField(ctx.grid, np.cos(x) + 0.3 * np.sin(2 * x))
    err = 0.0
    for t in (0.1, 0.5, 2.0):
        total, hor, ver = hessian_norm_decomposition(ctx.warped_spec, f, t)
        err = max(err, float(np.max(np.abs(total.values - hor.values - ver.values))))
    return err, err <= tol, {}


@check("warped_ricci", 1e-8, "Ricci blocks against direct Ricci of the assembled product", needs_fiber=True)
def _warped_ricci(ctx, tol):
    horizontal, coef = warped_ricci(ctx.warped_spec)
    closed = assemble_blocks(ctx.warped_spec, horizontal, coef).full
    err = float(np.max(np.abs(closed - ricci(ctx.warped.snapshot).full)))
    return err, err <= tol, {}


# -- entropy formulas -------------------------------------------------------------

def _formula_check(key, m_formula, absolute=False):
    def fn(ctx, tol):
        rep = ctx.report
        measured = rep.max_abs_residual(key) if absolute else rep.max_rel_residual(key)
        return measured, measured <= tol, {"max_abs_residual": _json_float(rep.max_abs_residual(key))}
    return fn


for _key, _m, _desc in (
    ("dH", False, "dH/dt against -int |grad log u|^2 u"),
    ("d2H", False, "d2H/dt2 against its closed form"),
    ("dW", False, "dW/dt against its closed form"),
    ("dWm", True, "dW_m/dt against its closed form"),
    ("dWmK", True, "dW_mK/dt against its closed form"),
    ("Wm_def", False, "W_m equals d(tH_m)/dt"),
):
    CHECKS[_key] = Check(_key, _formula_check(_key, _m), 1e-3, _desc + " (relative)", needs="heat",
                         m_formula=_m, needs_time_series=True)
    CHECKS[_key + "_abs"] = Check(_key + "_abs", _formula_check(_key, _m, True), 1e-10, _desc + " (absolute)",
                                  needs="heat", m_formula=_m, needs_time_series=True)


@check("stationary_selftest", 1e-10, "constant data on the same geometry: dW_m/dt = -m/2t and W_m = d(tH_m)/dt",
       needs="heat", m_formula=True, needs_time_series=True)
def _stationary(ctx, tol):
    rep = ctx.derived(initial={"kind": "constant"}).report
    worst = max(rep.max_abs_residual("dWm"), rep.max_abs_residual("Wm_def"))
    return worst, worst <= tol, {}


def _monotone_check(verdict):
    def fn(ctx, tol):
        v = ctx.report.verdicts.get(verdict)
        if v is None:
            return None, False, {"reason": "not applicable"}
        worst = v["worst_increase"]
        ok = v["certified"] and worst is not None and worst <= tol
        return worst, ok, {"certified": v["certified"], "defect_margin": v["defect_margin"]}
    return fn


CHECKS["W_m_monotone"] = Check("W_m_monotone", _monotone_check("W_m_nonincreasing"), 1e-8,
                               "certified super flow and W_m non-increasing", needs="heat", m_formula=True,
                               needs_time_series=True)
CHECKS["W_mK_monotone"] = Check("W_mK_monotone", _monotone_check("W_mK_nonincreasing"), 1e-8,
                                "certified K-super flow and W_mK non-increasing", needs="heat", m_formula=True,
                                needs_time_series=True)
CHECKS["H_concave"] = Check("H_concave", _monotone_check("H_concave"), 1e-8,
                            "certified and d2H/dt2 <= 0", needs="heat", needs_time_series=True)


@check("super_flow_certificate", 1e-10, "min super Ricci flow defect over the output times >= -tol",
       needs="heat", m_formula=True, needs_time_series=True)
def _super_flow(ctx, tol):
    margin = min(float(super_ricci_defect(ctx.schedule, ctx.m, ctx.K, t).min()) for t in ctx.output_times)
    return -margin, margin >= -tol, {"defect_margin": margin}


@check("gaussian_W", 1e-3, "max |W_m| along the run (m = n for the heat kernel)", needs="heat",
       needs_time_series=True)
def _gaussian_W(ctx, tol):
    W = np.array([W_m_closed(s, ctx.m) for s in ctx.trajectory])
    err = float(np.max(np.abs(W)))
    return err, err <= tol, {}


@check("gaussian_dW", 1e-2, "max |Delta W_m / Delta t| between consecutive outputs", needs="heat",
       needs_time_series=True)
def _gaussian_dW(ctx, tol):
    W = np.array([W_m_closed(s, ctx.m) for s in ctx.trajectory])
    rate = float(np.max(np.abs(np.diff(W) / np.diff(ctx.trajectory.times))))
    return rate, rate <= tol, {}


@check("harnack", 1e-6, "max of the Harnack quantity, with Ric_m(L) >= -K certified", needs="heat",
       needs_time_series=True)
def _harnack(ctx, tol):
    cert = harnack_series(ctx.trajectory, ctx.m, ctx.K, tol)
    worst = float(np.max(cert.max_defect))
    return worst, worst <= tol and cert.curvature_certified, {"K": ctx.K, "curvature_margin": cert.curvature_margin}


# -- Lott flow --------------------------------------------------------------------

@check("lott_product_flow", 1e-6, "assembled product of the Lott flow against direct Ricci flow on the product",
       needs="lott", needs_fiber=True)
def _lott_product(ctx, tol):
    spec0 = WarpedSpec.torus_fiber(ctx.lott_initial.snapshot, int(ctx.config.q),
                                   nodes=int((ctx.config.fiber or {}).get("nodes", 8)))
    ws0 = WarpedSnapshot(spec0)
    direct = evolve_ricci_flow(ws0.metric, 0.0, ctx.T, ctx.lott_outputs,
                               safety=ctx.config.solver_value("safety", 0.2))
    err = 0.0
    for s in ctx.lott.outputs:
        ws = WarpedSnapshot(WarpedSpec(s.snapshot, spec0.q, spec0.fiber))
        err = max(err, float(np.max(np.abs(ws.metric.packed - direct[s.t].packed))))
    return err, err <= tol, {}


@check("lott_adjoint", 1e-6, "drift of int phi u dmu between conjugate and forward heat solutions",
       needs="lott", needs_time_series=True)
def _lott_adjoint(ctx, tol):
    conj = ctx.conjugate
    t_end = ctx.T
    ts = np.round(np.sort(t_end - conj.taus), 12)
    u0 = ctx.initial_values(ctx.lott.snapshot(0.0), max(ctx.t0, 1e-12))
    heat = evolve_heat(ctx.lott, u0, ts, safety=ctx.config.solver_value("safety", 0.2))
    by_time = {round(float(s.t), 12): s for s in heat}
    pairing = np.array([integrate(c.phi.values * by_time[round(c.t, 12)].u.values, c.snapshot) for c in conj])
    drift = float(pairing.max() - pairing.min())
    return drift, drift <= tol, {"pairing": float(pairing[0])}


@check("lott_Wq_dissipation", 1e-2, "dW_q/dtau against its closed form (relative)", needs="lott",
       needs_time_series=True)
def _lott_dissipation(ctx, tol):
    _, _, lhs, rhs = ctx.lott_entropy
    ok = np.isfinite(lhs)
    rel = float(np.max(np.abs(lhs[ok] - rhs[ok]) / np.abs(rhs[ok])))
    return rel, rel <= tol, {}


@check("lott_Wq_monotone", 1e-8, "W_q non-increasing in tau", needs="lott", needs_time_series=True)
def _lott_monotone(ctx, tol):
    _, W, _, _ = ctx.lott_entropy
    worst = float(np.max(np.diff(W)))
    return worst, worst <= tol, {}


# -- log-Sobolev constants ----------------------------------------------------------

def _ls(ctx):
    ls = ctx.config.log_sobolev or {}
    return {"restarts": int(ls.get("restarts", 5)), "seed": int(ctx.config.seed)}


@check("mu_oracle", 1e-5, "solver mu on the initial geometry against the projected gradient flow",
       needs_log_sobolev="oracle_times")
def _mu_oracle(ctx, tol):
    kw = _ls(ctx)
    worst, rows = 0.0, []
    for t in ctx.config.log_sobolev["oracle_times"]:
        snap = ctx.base_snapshot
        sol = solve_mu_K(snap, t, ctx.m, 0.0, **kw)
        mu_gf, _, _ = gradient_flow_mu(snap, t, ctx.m, 0.0, **kw)
        worst = max(worst, abs(sol.mu - mu_gf))
        rows.append({"t": t, "mu": sol.mu, "mu_gradient_flow": mu_gf, "residual": sol.residual,
                     "nonunique": sol.nonunique})
    return worst, worst <= tol, {"solves": rows}


@check("mu_K_shift", 1e-10, "mu_K - mu = -m (K t + K^2 t^2 / 4) on the initial geometry", needs_log_sobolev="shift")
def _mu_shift(ctx, tol):
    shift = ctx.config.log_sobolev["shift"]
    m, K = float(shift.get("m", ctx.m)), float(shift.get("K", 1.0))
    kw = _ls(ctx)
    worst, rows = 0.0, []
    for t in shift["times"]:
        snap = ctx.base_snapshot
        a = solve_mu_K(snap, t, m, 0.0, **kw)
        b = solve_mu_K(snap, t, m, K, **kw)
        expected = -m * (K * t + K * K * t * t / 4)
        worst = max(worst, abs(b.mu - a.mu - expected))
        rows.append({"t": t, "mu": a.mu, "mu_K": b.mu, "expected_shift": expected})
    return worst, worst <= tol, {"m": m, "K": K, "solves": rows}


@check("mu_monotone", 1e-7, "mu(t) non-increasing on a certified super flow", needs_log_sobolev="monotone_times")
def _mu_monotone(ctx, tol):
    res = mu_monotonicity(ctx.schedule, ctx.config.log_sobolev["monotone_times"], ctx.m, ctx.K, slack=tol, **_ls(ctx))
    mus = np.array(res["mu"])
    worst = float(np.max(np.diff(mus))) if len(mus) > 1 else float("-inf")
    detail = {"times": res["times"], "mu": res["mu"], "certified": res["certified"],
              "defect_margin": res["defect_margin"]}
    return (worst if math.isfinite(worst) else 0.0), res["verdict"] is True, detail


# -- convergence orders -----------------------------------------------------------

@check("convergence_dt", 1.0, "|ratio - 4| for residuals without Richardson when dt_out is halved",
       needs="heat", needs_convergence=True, needs_time_series=True)
def _convergence_dt(ctx, tol):
    dt = float(ctx.config.solver_value("dt_out"))
    coarse = ctx.derived(solver={"richardson": False})
    fine = ctx.derived(solver={"richardson": False, "dt_out": dt / 2})
    worst, ratios = 0.0, {}
    for key in ctx.config.convergence.get("formulas", ["d2H", "dWm"]):
        r = coarse.report.max_abs_residual(key) / fine.report.max_abs_residual(key)
        ratios[key] = r
        worst = max(worst, abs(r - 4.0))
    return worst, worst <= tol, {"ratios": ratios}


@check("convergence_space", 1e-8, "relative residual floor after doubling N (with Richardson)",
       needs="heat", needs_convergence=True, needs_time_series=True)
def _convergence_space(ctx, tol):
    nodes = list(ctx.config.convergence.get("nodes", ctx.config.grid["nodes"]))
    doubled = [2 * n for n in nodes]
    floors = {}
    for label, nn in (("coarse", nodes), ("fine", doubled)):
        sub = ctx.derived(nodes=nn)
        floors[label] = max(sub.report.max_rel_residual(k)
                            for k in ctx.config.convergence.get("formulas", ["d2H", "dWm"]))
    ok = floors["fine"] <= tol and floors["fine"] < floors["coarse"]
    return floors["fine"], ok, {"coarse_nodes": nodes, "fine_nodes": doubled, "floors": floors}
