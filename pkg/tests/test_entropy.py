import csv

import numpy as np
import pytest

from wittenflow.entropy import (
    H_m,
    H_mK,
    W_closed,
    W_m_closed,
    W_mK_closed,
    W_mK_potential_form,
    W_q_ricci,
    curvature_lower_bound,
    d2H_rhs,
    dH_rhs,
    dW_rhs,
    dWm_rhs,
    dWmK_rhs,
    dWq_rhs,
    fisher_information,
    formula_residuals,
    harnack_defect,
    harnack_field,
    li_yau_identity_defect,
    shannon_H,
    time_derivative,
)
from wittenflow.errors import ConditioningError, ParameterError, RejectedInputError
from wittenflow.flows import FlowState, LottState, MetricSchedule, evolve_heat
from wittenflow.geometry import GeometrySnapshot, Grid, ScalarField

import oracles

L_BIG = 20 * np.pi


def state(snap, values, t):
    return FlowState(t, snap, ScalarField(snap.grid, values))


def uniform_state(n=32, t=0.5):
    snap = GeometrySnapshot.flat(Grid.torus(n))
    return state(snap, np.full(n, 1 / (2 * np.pi)), t)


@pytest.fixture(scope="module")
def gaussian():
    g = Grid.torus(1024, L_BIG)
    x, = g.coords()
    snap = GeometrySnapshot.flat(g)

    def at(t):
        u = oracles.wrapped_heat_kernel(x, t, L_BIG, center=L_BIG / 2)
        return state(snap, np.maximum(u, 1e-300), t)
    return at


def bump_state(t, eps=0.1, n=64):
    snap = GeometrySnapshot.flat(Grid.torus(n))
    x, = snap.grid.coords()
    return state(snap, (1 + eps * np.exp(-t) * np.cos(x)) / (2 * np.pi), t)


# -- functionals ------------------------------------------------------------------

def test_uniform_entropy():
    assert shannon_H(uniform_state()) == pytest.approx(np.log(2 * np.pi), abs=1e-14)


def test_gaussian_entropy(gaussian):
    s = gaussian(0.05)
    assert abs(shannon_H(s) - oracles.gaussian_entropy(0.05)) <= 1e-6
    assert abs(H_m(s, 1)) <= 1e-6


def test_gaussian_W_vanishes_for_m_equal_n(gaussian):
    for t in (0.02, 0.05, 0.1):
        assert abs(W_m_closed(gaussian(t), 1)) <= 1e-3


def test_H_mK_correction():
    s = uniform_state(t=0.5)
    assert H_mK(s, 2, 0.0) == H_m(s, 2)
    assert H_m(s, 2) - H_mK(s, 2, 1.0) == pytest.approx(13 / 24, abs=1e-15)


def test_W_mK_two_forms_agree():
    s = bump_state(0.3, eps=0.5)
    for m, K in ((1, 0.0), (3, 0.7)):
        assert W_mK_closed(s, m, K) == pytest.approx(W_mK_potential_form(s, m, K), abs=1e-12)


def test_W_is_derivative_of_tH():
    # exact trajectory, fine central difference
    t, h = 0.4, 1e-4
    tH = [(t + d) * shannon_H(bump_state(t + d, 0.5)) for d in (-h, h)]
    assert (tH[1] - tH[0]) / (2 * h) == pytest.approx(W_closed(bump_state(t, 0.5)), rel=1e-7)


def test_fisher_information_of_uniform_is_zero():
    assert abs(fisher_information(uniform_state().snapshot, uniform_state().u)) < 1e-14
    assert abs(dH_rhs(uniform_state())) < 1e-14


def test_fisher_information_matches_pointwise_form():
    s = bump_state(0.2, 0.5)
    x, = s.grid.coords()
    u = s.u.values
    du = -0.5 * np.exp(-0.2) * np.sin(x) / (2 * np.pi)
    direct = np.sum(du ** 2 / u) * (2 * np.pi / 64)
    assert fisher_information(s.snapshot, u) == pytest.approx(direct, rel=1e-12)


# -- dissipation formulas ---------------------------------------------------------

def test_d2H_small_perturbation():
    t, h = 0.3, 1e-4
    H = [shannon_H(bump_state(t + d)) for d in (-h, 0.0, h)]
    lhs = (H[0] - 2 * H[1] + H[2]) / h ** 2
    rhs = d2H_rhs(bump_state(t))
    assert lhs == pytest.approx(rhs, rel=1e-3)


def test_dW_on_exact_trajectory():
    t, h = 0.3, 1e-4
    W = [W_closed(bump_state(t + d, 0.5)) for d in (-h, h)]
    assert (W[1] - W[0]) / (2 * h) == pytest.approx(dW_rhs(bump_state(t, 0.5)), rel=1e-6)


def test_stationary_dWm_is_minus_m_over_2t():
    for m, t in ((3, 0.5), (2.5, 0.1)):
        assert dWm_rhs(uniform_state(t=t), None, m) == pytest.approx(-m / (2 * t), abs=1e-12)
        assert dWmK_rhs(uniform_state(t=t), None, m, 0.0) == pytest.approx(-m / (2 * t), abs=1e-12)


def small_kernel(t, n=256):
    # log u has a corner of width ~2t/pi at the antipode; n = 256 resolves it for t >= 0.2
    snap = GeometrySnapshot.flat(Grid.torus(n))
    x, = snap.grid.coords()
    return state(snap, oracles.wrapped_heat_kernel(x, t, 2 * np.pi, np.pi), t)


def test_dWm_on_exact_wrapped_kernel():
    t, h, m = 0.3, 1e-5, 2
    W = [W_m_closed(small_kernel(t + d), m) for d in (-h, h)]
    assert (W[1] - W[0]) / (2 * h) == pytest.approx(dWm_rhs(small_kernel(t), None, m), rel=1e-6)


def test_dWm_needs_m_above_n():
    with pytest.raises(ParameterError):
        dWm_rhs(uniform_state(), None, 1)


def test_log_derivative_formulas_refuse_tiny_densities():
    s = uniform_state()
    values = np.where(np.arange(32) == 0, 1e-14, s.u.values)
    tiny = state(s.snapshot, values / (np.sum(values) * 2 * np.pi / 32), 0.5)
    with pytest.raises(ConditioningError):
        d2H_rhs(tiny)


def test_unnormalized_density_rejected():
    s = uniform_state()
    with pytest.raises(RejectedInputError):
        shannon_H(state(s.snapshot, 2 * s.u.values, 0.5))


# -- Li-Yau / Harnack --------------------------------------------------------------

def test_li_yau_identity_holds_pointwise():
    s = bump_state(0.3, 0.5)
    assert np.max(np.abs(li_yau_identity_defect(s, 3))) < 1e-10


def test_harnack_uniform_defect():
    s = uniform_state(t=0.5)
    m, K, t = 3, 0.4, 0.5
    expected = -(m / (2 * t) + m * K / 2 * (1 + K * t / 3))
    assert np.allclose(harnack_field(s, m, K), expected, atol=1e-12)


def test_harnack_wrapped_kernel_nonpositive():
    for t in (0.2, 0.5):
        cert = harnack_defect(small_kernel(t), 1, 0.0)
        assert cert.verdict and cert.curvature_certified
        # equality holds at the center, so only rounding may be positive
        assert cert.max_defect[0] <= 1e-9


def test_curvature_lower_bound():
    g = Grid.torus(64)
    x, = g.coords()
    snap = GeometrySnapshot.flat(g, ScalarField(g, 0.3 * np.sin(x)))
    assert curvature_lower_bound(snap, 3) == pytest.approx(np.min(oracles.bakry_emery_m_1d(x, 0.3, 3)), abs=1e-12)
    with pytest.raises(ParameterError):
        curvature_lower_bound(snap, 1)


# -- Lott W-entropy ---------------------------------------------------------------

def test_W_q_of_base_gaussian(gaussian):
    tau, q = 0.05, 1
    s = gaussian(tau)
    lott = LottState.flat(s.grid, ScalarField.constant(s.grid, 0.0), q)
    # fiber directions carry no information: W_q = -(q/2)(2 + log 4 pi tau)
    assert W_q_ricci(lott, s.u, tau=tau) == pytest.approx(-(q / 2) * (2 + np.log(4 * np.pi * tau)), abs=1e-6)


def test_dWq_static_flat_backward_heat():
    g = Grid.torus(64)
    x, = g.coords()
    phi0 = np.exp(np.cos(x - 1))
    phi0 = phi0 / (np.sum(phi0) * 2 * np.pi / 64)
    lott = LottState.flat(g, ScalarField.constant(g, 0.0), 1)
    tau0, h = 0.3, 1e-4

    def W(tau):
        return W_q_ricci(lott, ScalarField(g, oracles.fourier_heat(phi0, 2 * np.pi, tau - 0.1)), tau=tau)
    lhs = (W(tau0 + h) - W(tau0 - h)) / (2 * h)
    rhs = dWq_rhs(lott, ScalarField(g, oracles.fourier_heat(phi0, 2 * np.pi, tau0 - 0.1)), tau=tau0)
    assert lhs == pytest.approx(rhs, rel=1e-6)


# -- trajectory reports ---------------------------------------------------------

def test_time_derivative_exact_on_polynomials():
    t = np.linspace(0, 1, 21)
    dt = t[1] - t[0]
    d1 = time_derivative(t ** 4, dt, 1, richardson=True)
    assert np.allclose(d1[2:-2], 4 * t[2:-2] ** 3, atol=1e-12)
    d2 = time_derivative(t ** 3, dt, 2, richardson=False)
    assert np.allclose(d2[1:-1], 6 * t[1:-1], atol=1e-10)
    assert np.isnan(d1[:2]).all() and np.isnan(d1[-2:]).all()


@pytest.fixture(scope="module")
def stationary_report():
    snap = GeometrySnapshot.flat(Grid.torus(32))
    sched = MetricSchedule.static(snap, 0.1, 0.2)
    traj = evolve_heat(sched, np.ones(32), np.round(np.linspace(0.1, 0.2, 11), 12))
    return formula_residuals(traj, sched, 3, 0.5)


def test_stationary_report_residuals(stationary_report):
    for key in ("dH", "d2H", "dW", "dWm", "dWmK", "Wm_def"):
        assert stationary_report.max_abs_residual(key) <= 1e-10
    assert stationary_report.verdicts["W_m_nonincreasing"]["certified"]


def test_report_csv_layout(tmp_path, stationary_report):
    path = stationary_report.to_csv(tmp_path / "e.csv")
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == stationary_report.CSV_COLUMNS
    assert len(rows) == 12
    assert rows[1][0] == f"{0.1:.16e}"
    assert rows[1][rows[0].index("dH_lhs")] == "nan"


def test_irregular_timestamps_rejected():
    snap = GeometrySnapshot.flat(Grid.torus(16))
    sched = MetricSchedule.static(snap, 0.1, 1.0)
    traj = evolve_heat(sched, np.ones(16), [0.1, 0.2, 0.35, 0.4, 0.5])
    with pytest.raises(RejectedInputError):
        formula_residuals(traj, sched, 3)
