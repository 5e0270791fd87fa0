import math

import numpy as np
import pytest

from viscowave import diagnostics as diag
from viscowave import dynamics as dyn
from viscowave import grid as g
from viscowave import material as mat
from viscowave.errors import DomainError

CONST_LAWS = mat.MaterialLaws(gamma_family="constant", f_family="zero", gamma0=1.0)


def make_grid(n=101, L=1.0):
    return g.Grid1D(L, n)


def state_of(grid_, u=None, v=None, theta=None, t=0.0):
    n = grid_.n
    z = np.zeros(n)
    return dyn.State(t=t, u=z if u is None else u, v=z.copy() if v is None else v,
                     theta=z.copy() if theta is None else theta)


# --------------------------------------------------------------------------
# energy budget
# --------------------------------------------------------------------------


def test_energy_zero_state():
    grid_ = make_grid()
    b = diag.energy(state_of(grid_), 1.0, grid_)
    assert (b.kinetic, b.elastic, b.thermal, b.total) == (0.0, 0.0, 0.0, 0.0)


def test_energy_closed_form_components():
    grid_ = make_grid(101)
    x = grid_.nodes
    b = diag.energy(state_of(grid_, u=x * (1 - x), theta=np.ones(101)), 2.0, grid_)
    assert b.elastic == pytest.approx(1.0 / 3.0, abs=2e-4)  # (a/2) int (1-2x)^2
    assert b.thermal == pytest.approx(1.0, rel=1e-14)
    assert b.total == b.kinetic + b.elastic + b.thermal


def test_energy_single_hat_kinetic():
    grid_ = make_grid(101)
    v = np.zeros(101)
    v[50] = 3.0
    b = diag.energy(state_of(grid_, v=v), 1.0, grid_)
    # trapezoid of the squared hat: h^2 * dx
    assert b.kinetic == pytest.approx(0.5 * 9.0 * grid_.dx, rel=1e-13)


# --------------------------------------------------------------------------
# Lq balance
# --------------------------------------------------------------------------


def test_lq_balance_constant_theta():
    grid_ = make_grid(65)
    x = grid_.nodes
    v = np.sin(2 * np.pi * x)
    v[0] = v[-1] = 0.0
    c = 1.5
    state = state_of(grid_, v=v, theta=np.full(65, c))
    q = 2.5
    out = diag.lq_balance(state, CONST_LAWS, q, grid_)
    assert out.dissipation == 0.0
    assert out.coupling_loss == 0.0
    vx = g.d1(v, grid_)
    expected = q * (c + 1.0) ** (q - 1.0) * g.integrate(1.0 * vx ** 2, grid_)
    assert out.viscous_gain == pytest.approx(expected, rel=1e-12)
    assert out.lhs_rate == pytest.approx(expected, rel=1e-12)


def test_lq_balance_pure_diffusion_decays():
    grid_ = make_grid(65)
    x = grid_.nodes
    state = state_of(grid_, theta=1.0 + 0.5 * np.cos(np.pi * x))
    out = diag.lq_balance(state, CONST_LAWS, 2.0, grid_)
    assert out.viscous_gain == 0.0
    assert out.coupling_loss == 0.0
    assert out.lhs_rate == -out.dissipation
    assert out.lhs_rate < 0.0


def test_lq_balance_requires_q_above_one():
    grid_ = make_grid(33)
    with pytest.raises(DomainError):
        diag.lq_balance(state_of(grid_), CONST_LAWS, 1.0, grid_)


def test_lq_rate_matches_trajectory_finite_difference():
    laws = mat.MaterialLaws(gamma_family="saturating", f_family="linear",
                            gamma0=1.0, delta=0.1, K_f=1.0, alpha=1.0)
    grid_ = make_grid(65)
    x = grid_.nodes
    v0 = 0.5 * np.sin(np.pi * x)
    v0[0] = v0[-1] = 0.0
    data = mat.InitialData(u0=np.zeros(65), v0=v0, theta0=1.0 + 0.25 * np.cos(np.pi * x))
    cfg = dyn.SchemeConfig(dt_initial=5e-4, dt_max=5e-4, scheme="imex_be")
    traj = dyn.simulate(laws, 1.0, grid_, data, 0.25, cfg)
    ts = np.array(traj.times)
    lq = np.array([r.lq_value for r in traj.rows])
    rates = np.array([diag.lq_balance(st, laws, 2.0, grid_).lhs_rate for st in traj.states])
    fd = (lq[2:] - lq[:-2]) / (ts[2:] - ts[:-2])
    rel = np.linalg.norm(fd - rates[1:-1]) / np.linalg.norm(rates[1:-1])
    assert rel < 0.03


# --------------------------------------------------------------------------
# damped antiderivative transform
# --------------------------------------------------------------------------


def test_z_transform_zero_velocity():
    grid_ = make_grid()
    z, V = diag.z_transform(state_of(grid_), 1.0, grid_)
    assert np.all(z == 0.0) and np.all(V == 0.0)


def test_z_transform_sine_closed_form():
    grid_ = make_grid(101)
    x = grid_.nodes
    L = grid_.length
    v = np.sin(np.pi * x / L)
    v[0] = v[-1] = 0.0
    state = state_of(grid_, v=v)
    z, V = diag.z_transform(state, 0.7, grid_)
    exact = (L / np.pi) * (1.0 - np.cos(np.pi * x / L))
    assert V == pytest.approx(exact, abs=1e-4)
    assert z[0] == 0.0 and V[0] == 0.0
    assert np.array_equal(z, V)  # t = 0: damping factor is 1
    # right-end slope of V equals v(L) = 0 up to stencil error
    assert abs(g.d1(V, grid_)[-1]) < 1e-3


def test_z_transform_time_damping_is_scalar():
    grid_ = make_grid(41)
    x = grid_.nodes
    v = np.sin(np.pi * x)
    v[0] = v[-1] = 0.0
    z1, V1 = diag.z_transform(state_of(grid_, v=v, t=1.0), 1.0, grid_)
    assert z1 == pytest.approx(math.exp(-1.0) * V1, rel=1e-14)


def test_z_residual_zero_trajectory():
    grid_ = make_grid()
    s0 = state_of(grid_, t=0.0)
    s1 = state_of(grid_, t=1e-3)
    assert diag.z_residual(s0, s1, CONST_LAWS, 1.0, 1.0, grid_) == 0.0


def synthetic_eigen_state(grid_, t, gamma0=1.0):
    # v = e^{-gamma0 mu t} cos(sqrt(mu) x) makes z = e^{-(kappa+gamma0 mu)t} V
    # an exact solution of the damped transformed problem with zero source.
    mu = (np.pi / (2.0 * grid_.length)) ** 2
    v = np.exp(-gamma0 * mu * t) * np.cos(np.sqrt(mu) * grid_.nodes)
    n = grid_.n
    return dyn.State(t=t, u=np.zeros(n), v=v, theta=np.zeros(n))


def test_z_residual_frozen_eigenmode_refines():
    res = []
    for n, dt in ((65, 2e-3), (129, 1e-3)):
        grid_ = make_grid(n)
        r = diag.z_residual(synthetic_eigen_state(grid_, 0.1),
                            synthetic_eigen_state(grid_, 0.1 + dt),
                            CONST_LAWS, 0.0, kappa=1.0, grid_=grid_)
        res.append(r)
    assert res[0] < 5e-3
    assert res[1] < 0.6 * res[0]


def test_z_residual_decreases_on_simulated_runs():
    laws = mat.MaterialLaws(gamma_family="saturating", f_family="linear",
                            gamma0=1.0, delta=0.1, K_f=1.0, alpha=1.0)
    norms = []
    for n, dt in ((33, 2e-3), (65, 1e-3)):
        grid_ = make_grid(n)
        x = grid_.nodes
        v0 = 0.5 * np.sin(np.pi * x)
        v0[0] = v0[-1] = 0.0
        data = mat.InitialData(u0=np.zeros(n), v0=v0, theta0=1.0 + 0.25 * np.cos(np.pi * x))
        cfg = dyn.SchemeConfig(dt_initial=dt, dt_max=dt, scheme="imex_be")
        traj = dyn.simulate(laws, 1.0, grid_, data, 0.1, cfg)
        norms.append(max(r.z_residual for r in traj.rows[1:]))
    assert norms[1] < 0.55 * norms[0]  # observed order >= 1 under joint halving


# --------------------------------------------------------------------------
# maximal-regularity estimator
# --------------------------------------------------------------------------

EIGEN_RATIO = 0.10131594298788985  # (1 - e^{-4 lam}) / (4 lam), lam = (pi/2)^2


def test_estimate_K_eigenmode_matches_closed_form():
    grid_ = make_grid(129)
    est = diag.estimate_K(4.0, 1.0, trials=1, grid_=grid_, T=1.0, seed=0)
    assert est.ratios[0] == pytest.approx(EIGEN_RATIO, rel=0.02)


def test_estimate_K_nondecreasing_in_trials():
    grid_ = make_grid(65)
    ks = [diag.estimate_K(4.0, 1.0, m, grid_, 1.0, seed=0).K for m in range(1, 6)]
    assert all(b >= a for a, b in zip(ks, ks[1:]))


def test_estimate_K_deterministic_for_seed():
    grid_ = make_grid(65)
    a = diag.estimate_K(4.0, 1.0, 4, grid_, 1.0, seed=42)
    b = diag.estimate_K(4.0, 1.0, 4, grid_, 1.0, seed=42)
    assert a.ratios == b.ratios


def test_estimate_K_argument_checks():
    grid_ = make_grid(33)
    with pytest.raises(DomainError):
        diag.estimate_K(4.0, 1.0, 0, grid_, 1.0)
    with pytest.raises(DomainError):
        diag.estimate_K(0.5, 1.0, 1, grid_, 1.0)


# --------------------------------------------------------------------------
# theory constants
# --------------------------------------------------------------------------


def test_theory_constants_closed_forms():
    c = diag.theory_constants(1.0, 1.0, 1.0, 1.0)
    assert c.delta_est == pytest.approx(0.17677669529663687, rel=1e-12)  # 1024^{-1/4}
    assert c.kappa_est == pytest.approx(15.119052598738478, rel=1e-12)   # 3456^{1/3}
    assert c.q == 2.0 and c.q_admissible


@pytest.mark.parametrize("K,a,T0", [(1.0, 1.0, 1.0), (0.3, 2.0, 0.5), (7.7, 0.25, 4.0)])
def test_theory_constants_saturate_smallness_relations(K, a, T0):
    c = diag.theory_constants(K, a, T0, 1.2)
    assert 256.0 * K * c.delta_est ** 4 == pytest.approx(0.25, rel=1e-12)
    assert 27.0 * 32.0 * K * a ** 4 * T0 / c.kappa_est ** 3 == pytest.approx(0.25, rel=1e-12)


def test_theory_constants_inadmissible_q():
    c = diag.theory_constants(1.0, 1.0, 1.0, 0.6)
    assert c.q == pytest.approx(0.4)
    assert not c.q_admissible


def test_theory_constants_argument_checks():
    with pytest.raises(DomainError):
        diag.theory_constants(-1.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        diag.theory_constants(1.0, 1.0, 1.0, 1.6)


# --------------------------------------------------------------------------
# monitors
# --------------------------------------------------------------------------


def test_monitors_update_zero_state():
    grid_ = make_grid(65)
    out = diag.monitors_update(diag.TheoryMonitors(), state_of(grid_), 0.01, 2.0, 1.0, grid_)
    assert out.cum_theta_pow == pytest.approx(0.01 * grid_.length, rel=1e-12)
    assert out.lq_value == pytest.approx(grid_.length, rel=1e-12)  # int (0+1)^q
    for name in ("cum_vx4", "cum_thetaxx2", "cum_vxx2", "l2_thetax", "l2_vx", "l2_uxx", "w12_theta"):
        assert getattr(out, name) == 0.0


def test_monitors_cumulative_linear_growth():
    grid_ = make_grid(65)
    x = grid_.nodes
    state = state_of(grid_, theta=1.0 + 0.5 * np.cos(np.pi * x))
    m1 = diag.monitors_update(diag.TheoryMonitors(), state, 0.01, 2.0, 1.0, grid_)
    m2 = diag.monitors_update(m1, state, 0.01, 2.0, 1.0, grid_)
    assert m2.cum_thetaxx2 == pytest.approx(2.0 * m1.cum_thetaxx2, rel=1e-12)
    assert m2.cum_theta_pow == pytest.approx(2.0 * m1.cum_theta_pow, rel=1e-12)
    assert m2.l2_thetax == m1.l2_thetax  # instantaneous, not accumulated


def test_monitors_heat_eigenmode_closed_form():
    # theta = 1 + e^{-lam t} cos(pi x): int_0^T int theta_xx^2 has a closed form
    laws = CONST_LAWS
    grid_ = make_grid(129)
    x = grid_.nodes
    data = mat.InitialData(u0=np.zeros(129), v0=np.zeros(129), theta0=1.0 + np.cos(np.pi * x))
    cfg = dyn.SchemeConfig(dt_initial=5e-4, dt_max=5e-4, scheme="imex_cn")
    T = 0.25
    traj = dyn.simulate(laws, 1.0, grid_, data, T, cfg)
    lam = np.pi ** 2
    exact = np.pi ** 4 * 0.5 * (1.0 - np.exp(-2 * lam * T)) / (2.0 * lam)
    assert traj.monitors.cum_thetaxx2 == pytest.approx(exact, rel=0.02)


def test_monitors_require_positive_dt():
    grid_ = make_grid(33)
    with pytest.raises(DomainError):
        diag.monitors_update(diag.TheoryMonitors(), state_of(grid_), 0.0, 2.0, 1.0, grid_)


# --------------------------------------------------------------------------
# blow-up detector
# --------------------------------------------------------------------------


def test_blowup_constant_trace_not_fired():
    rep = diag.blowup_check(np.full(32, 5.0), window=8, threshold=1.0, rate_min=0.1)
    assert not rep.fired
    assert rep.rate == pytest.approx(0.0, abs=1e-12)


def test_blowup_doubling_trace_fires():
    trace = 2.0 ** np.arange(20)
    rep = diag.blowup_check(trace, window=8, threshold=1e3, rate_min=0.5,
                            times=np.arange(20.0))
    assert rep.fired
    assert rep.rate == pytest.approx(math.log(2.0), rel=1e-6)
    assert rep.t_fire == 19.0


def test_blowup_decaying_trace_above_threshold_not_fired():
    trace = 1e6 * 0.5 ** np.arange(16)
    rep = diag.blowup_check(trace, window=8, threshold=1.0, rate_min=0.1)
    assert not rep.fired
    assert rep.rate < 0.0


def test_blowup_argument_checks():
    with pytest.raises(DomainError):
        diag.blowup_check([1.0, 2.0], window=8, threshold=1.0, rate_min=0.1)
    with pytest.raises(DomainError):
        diag.blowup_check([1.0, 2.0, 3.0], window=1, threshold=1.0, rate_min=0.1)


# --------------------------------------------------------------------------
# diagnostic rows
# --------------------------------------------------------------------------


def test_make_row_energy_decomposition_exact():
    grid_ = make_grid(65)
    x = grid_.nodes
    v = np.sin(np.pi * x)
    v[0] = v[-1] = 0.0
    state = state_of(grid_, u=x * (1 - x), v=v, theta=1.0 + 0.5 * np.cos(np.pi * x))
    row = diag.make_row(state, 1.0, grid_, diag.TheoryMonitors(), 2.0, 0.0, 0.0, 0)
    assert row.E_total == row.E_kin + row.E_el + row.E_th
    assert row.mass_theta == pytest.approx(row.E_th, rel=1e-14)
    assert len(row.as_tuple()) == len(diag.DIAG_COLUMNS)
