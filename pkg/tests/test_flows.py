import numpy as np
import pytest

from wittenflow.errors import ParameterError, RejectedInputError, StabilityError
from wittenflow.flows import (
    FlowState,
    LottState,
    MetricSchedule,
    certify_super_flow,
    conjugate_heat_solve,
    conjugate_potential,
    eta_from_phi,
    evolve_heat,
    evolve_lott,
    evolve_ricci_flow,
    heat_step,
    load_trajectory,
    lott_flow_step,
    lott_rates,
    save_trajectory,
    stable_dt,
    super_ricci_defect,
)
from wittenflow.geometry import GeometrySnapshot, Grid, ScalarField, SymTensorField, integrate
from wittenflow.warped import WarpedSnapshot, WarpedSpec

import oracles


def flat_schedule(n=64, potential=None, t0=0.0, T=1.0, period=2 * np.pi):
    g = Grid.torus(n, period)
    return MetricSchedule.static(GeometrySnapshot.flat(g, potential), t0, T)


# -- schedules --------------------------------------------------------------------

def test_static_schedule_keeps_potential():
    g = Grid.torus(16)
    f0 = ScalarField(g, np.sin(g.coords()[0]))
    sched = flat_schedule(16, f0)
    assert np.array_equal(sched.potential(0.7).values, f0.values)
    assert sched.snapshot(0.3) is sched.snapshot(0.9)


def test_conjugate_potential_exponential_scaling():
    g = Grid.torus(16)
    a = 0.8
    ident = SymTensorField.identity(g)
    sched = MetricSchedule.scaled(ident, lambda t: np.exp(2 * a * t), lambda t: 2 * a * np.exp(2 * a * t), 0.0, 1.0)
    for t in (0.0, 0.25, 1.0):
        assert np.allclose(conjugate_potential(sched, t).values, a * t, atol=1e-13)


def test_conjugate_potential_keeps_measure():
    g = Grid.torus(16, dim=2)
    x, y = g.coords()
    sched = MetricSchedule.conformal(g, ScalarField(g, 0.2 * np.sin(x)), ScalarField(g, 0.3 * np.cos(y)), 0.0, 1.0)
    rho0 = sched.snapshot(0.0).density
    assert np.max(np.abs(sched.snapshot(0.8).density - rho0)) < 1e-12


def test_tabulated_schedule_interpolates():
    g = Grid.torus(16)
    sched = MetricSchedule.tabulated(SymTensorField.identity(g), [0.0, 0.5, 1.0], [1.0, 1.5, 2.0])
    assert sched.metric(0.25).full[0, 0, 0] == pytest.approx(1.25)
    assert sched.rate(0.25).full[0, 0, 0] == pytest.approx(1.0)


def test_schedule_range_is_enforced():
    sched = flat_schedule(16, t0=0.1, T=0.2)
    with pytest.raises(StabilityError):
        sched.snapshot(0.3)
    with pytest.raises(ParameterError):
        flat_schedule(16, t0=1.0, T=1.0)


def test_super_ricci_defect_examples():
    sched = flat_schedule(64, ScalarField.constant(Grid.torus(64), 2.0))
    assert np.allclose(super_ricci_defect(sched, 3, 0.4, 0.5).values, 0.4, atol=1e-13)
    g = Grid.torus(64)
    x, = g.coords()
    eps = 0.3
    sched = flat_schedule(64, ScalarField(g, eps * np.sin(x)))
    d = super_ricci_defect(sched, 3, 0.2, 0.5).values
    assert np.max(np.abs(d - (0.2 + oracles.bakry_emery_m_1d(x, eps, 3)))) < 1e-12
    grow = MetricSchedule.expanding(g, 0.0, 2.0)
    for t in (0.0, 0.5, 2.0):
        assert np.allclose(super_ricci_defect(grow, 3, 0.1, t).values, 0.1 + 1 / (2 * (1 + t)), atol=1e-12)
    worst, ok = certify_super_flow(grow, 3, 0.0, [0.0, 1.0, 2.0])
    assert ok and worst == pytest.approx(1 / 6)
    with pytest.raises(ParameterError):
        super_ricci_defect(grow, 3, -1.0, 0.5)


# -- heat equation ----------------------------------------------------------------

def test_stationary_density():
    sched = flat_schedule(32, t0=0.0, T=1.0)
    u0 = np.full(32, 1 / (2 * np.pi))
    traj = evolve_heat(sched, u0, [0.5, 1.0])
    for s in traj:
        assert np.max(np.abs(s.u.values - u0)) < 1e-15


def test_single_mode_decays_exactly():
    sched = flat_schedule(64)
    x, = sched.grid.coords()
    traj = evolve_heat(sched, 1 + 0.5 * np.cos(x), [0.1, 0.5, 1.0])
    for s in traj:
        expected = (1 + 0.5 * np.exp(-s.t) * np.cos(x)) / (2 * np.pi)
        assert np.max(np.abs(s.u.values - expected)) < 1e-12
    assert traj.metadata["mass_drift"] < 1e-13


def test_matches_fourier_propagation_of_bump():
    sched = flat_schedule(64)
    x, = sched.grid.coords()
    u0 = np.exp(2 * np.cos(x - 2))
    traj = evolve_heat(sched, u0, [0.3], normalize=False)
    exact = oracles.fourier_heat(u0, 2 * np.pi, 0.3)
    assert np.max(np.abs(traj[0].u.values - exact)) < 1e-10 * np.max(exact)


def test_wrapped_gaussian_against_image_sum():
    L = 20 * np.pi
    g = Grid.torus(1024, L)
    x, = g.coords()
    sched = MetricSchedule.static(GeometrySnapshot.flat(g), 0.01, 0.1)
    u0 = np.maximum(oracles.wrapped_heat_kernel(x, 0.01, L, center=L / 2), np.finfo(float).tiny)
    traj = evolve_heat(sched, u0, [0.1])
    exact = oracles.wrapped_heat_kernel(x, 0.1, L, center=L / 2)
    assert np.max(np.abs(traj[0].u.values - exact)) <= 1e-6


def test_underresolved_gaussian_raises_stability_error():
    L = 20 * np.pi
    g = Grid.torus(512, L)
    x, = g.coords()
    sched = MetricSchedule.static(GeometrySnapshot.flat(g), 0.01, 0.1)
    u0 = np.maximum(oracles.wrapped_heat_kernel(x, 0.01, L, center=L / 2), np.finfo(float).tiny)
    with pytest.raises(StabilityError, match="reduce dt"):
        evolve_heat(sched, u0, [0.1])


def test_fourth_order_in_time():
    sched = flat_schedule(32)
    x, = sched.grid.coords()
    u0 = 1 + 0.5 * np.cos(3 * x)
    snap = sched.snapshot(0.0)
    state = FlowState(0.0, snap, ScalarField(sched.grid, u0))
    errs = []
    for dt in (0.01, 0.005):
        one = heat_step(state, dt, sched).u.values
        errs.append(np.max(np.abs(one - (1 + 0.5 * np.exp(-9 * dt) * np.cos(3 * x)))))
    # local error of RK4 is fifth order; the one-step ratio is ~32
    assert errs[0] / errs[1] > 16


def test_expanding_schedule_mass_and_decay():
    g = Grid.torus(64)
    x, = g.coords()
    sched = MetricSchedule.expanding(g, 0.0, 1.0)
    traj = evolve_heat(sched, 1 + 0.5 * np.cos(x), [0.5, 1.0])
    assert traj.metadata["mass_drift_ok"]
    # under g = (1 + t) dx^2 the mode decays as exp(-log(1 + t))
    for s in traj:
        expected = (1 + 0.5 * np.cos(x) / (1 + s.t)) / (2 * np.pi)
        assert np.max(np.abs(s.u.values - expected)) < 1e-10


def test_stable_dt_respects_both_bounds():
    g = Grid.torus(64)
    snap = GeometrySnapshot.flat(g, ScalarField(g, 3 * np.sin(g.coords()[0])))
    dt = stable_dt(snap, 0.2)
    assert dt <= 0.2 * (2 * np.pi / 64) ** 2 + 1e-15
    assert dt <= 2 / snap.witten_spectral_radius + 1e-15


def test_heat_rejects_bad_input():
    sched = flat_schedule(16)
    with pytest.raises(RejectedInputError):
        evolve_heat(sched, np.zeros(16), [0.5])
    with pytest.raises(ParameterError):
        evolve_heat(sched, np.ones(16), [0.5, 0.2])


def test_trajectory_roundtrip(tmp_path):
    sched = flat_schedule(16)
    x, = sched.grid.coords()
    traj = evolve_heat(sched, 1 + 0.3 * np.sin(x), [0.1, 0.2])
    back = load_trajectory(save_trajectory(traj, tmp_path / "traj"))
    assert np.array_equal(back.times, traj.times)
    assert np.array_equal(back[1].u.values, traj[1].u.values)


# -- Lott flow ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def lott_run():
    g = Grid.torus(32)
    x, = g.coords()
    init = LottState.flat(g, ScalarField(g, 0.3 * np.sin(x)), 1)
    return evolve_lott(init, 0.2, np.round(np.linspace(0, 0.2, 5), 12))


def test_constant_psi_is_fixed_point():
    g = Grid.torus(16)
    state = LottState.flat(g, ScalarField.constant(g, 0.4), 1)
    dg, dpsi = lott_rates(state)
    assert np.max(np.abs(dg)) < 1e-14 and np.max(np.abs(dpsi)) < 1e-14
    nxt = lott_flow_step(state, 0.01)
    assert np.max(np.abs(nxt.metric.packed - 1.0)) < 1e-14


def test_metric_rate_at_start():
    g = Grid.torus(64)
    x, = g.coords()
    eps = 0.3
    dg, _ = lott_rates(LottState.flat(g, ScalarField(g, eps * np.sin(x)), 1))
    expected = -2 * (-eps * np.sin(x) - eps ** 2 * np.cos(x) ** 2)
    assert np.max(np.abs(dg[0] - expected)) < 1e-12


def test_lott_flow_equals_product_ricci_flow():
    g = Grid.torus(64)
    x, = g.coords()
    init = LottState.flat(g, ScalarField(g, 0.3 * np.sin(x)), 1)
    times = [0.0, 0.05, 0.1]
    traj = evolve_lott(init, 0.1, times)
    spec0 = WarpedSpec.torus_fiber(init.snapshot, 1, 8)
    direct = evolve_ricci_flow(WarpedSnapshot(spec0).metric, 0.0, 0.1, times)
    for s in traj.outputs:
        ws = WarpedSnapshot(WarpedSpec(s.snapshot, 1, spec0.fiber))
        assert np.max(np.abs(ws.metric.packed - direct[s.t].packed)) <= 1e-6


def test_interpolated_state_hits_knots(lott_run):
    t = float(lott_run.knots[3])
    assert np.array_equal(lott_run.state_at(t).psi.values, lott_run._ys[3][32:])
    mid = 0.5 * (lott_run.knots[3] + lott_run.knots[4])
    s = lott_run.state_at(mid)
    assert s.metric.packed.min() > 0
    with pytest.raises(ParameterError):
        lott_run.state_at(0.5)


def test_conjugate_static_is_backward_heat():
    sched = flat_schedule(64, t0=0.0, T=0.5)
    x, = sched.grid.coords()
    phi_T = np.exp(np.cos(x))

    class Static:
        interval = sched.interval

        def state_at(self, t):
            return LottState.flat(sched.grid, ScalarField.constant(sched.grid, 0.0), 1, t)

        def snapshot(self, t):
            return self.state_at(t).snapshot

    conj = conjugate_heat_solve(Static(), phi_T, [0.0, 0.2, 0.5], normalize=False)
    for c in conj:
        assert np.max(np.abs(c.phi.values - oracles.fourier_heat(phi_T, 2 * np.pi, c.tau))) < 1e-10
    const = conjugate_heat_solve(Static(), np.ones(64), [0.5])
    assert np.max(np.abs(const[0].phi.values - 1 / (2 * np.pi))) < 1e-14


def test_conjugate_pairing_is_conserved(lott_run):
    g = lott_run.grid
    x, = g.coords()
    taus = np.round(np.linspace(0, 0.2, 5), 12)
    conj = conjugate_heat_solve(lott_run, np.exp(np.cos(x - 1)), taus)
    ts = np.round(np.sort(0.2 - taus), 12)
    heat = evolve_heat(lott_run, np.exp(np.sin(2 * x)), ts)
    by_t = {round(float(s.t), 12): s for s in heat}
    pairing = [integrate(c.phi.values * by_t[round(c.t, 12)].u.values, c.snapshot) for c in conj]
    assert max(pairing) - min(pairing) <= 1e-6


def test_eta_from_phi():
    g = Grid.torus(256, 20 * np.pi)
    x, = g.coords()
    tau, n, q = 0.05, 1, 1
    flat = ScalarField.constant(g, (4 * np.pi * tau) ** (-(n + q) / 2))
    assert np.max(np.abs(eta_from_phi(flat, tau, n, q).values)) < 1e-13
    c = 10 * np.pi
    kernel = oracles.wrapped_heat_kernel(x, tau, 20 * np.pi, c) * np.sqrt(4 * np.pi * tau)
    phi = ScalarField(g, np.maximum(kernel, 1e-300) * (4 * np.pi * tau) ** (-(n + q) / 2))
    near = np.abs(x - c) < 0.5
    eta = eta_from_phi(phi, tau, n, q).values
    assert np.max(np.abs(eta[near] - (x[near] - c) ** 2 / (4 * tau))) <= 1e-2
    with pytest.raises(ParameterError):
        eta_from_phi(phi, 0.0, n, q)
