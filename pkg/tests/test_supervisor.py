import numpy as np
import pytest

from supobs.harness import luenberger_bank_builder
from supobs.models import LinearPlant
from supobs.ode import SimConfig, run
from supobs.sampling import ParamBox, grid_sample
from supobs.supervisor import (
    monitor_reset,
    monitor_rhs,
    run_dynamic,
    run_static,
    select,
)

SCALAR = LinearPlant(
    n_x=1, n_u=1, n_y=1, n_p=1,
    A_of_p=lambda p: np.array([[-p[0]]]),
    B_of_p=lambda p: np.array([[1.0]]),
    C_of_p=lambda p: np.array([[1.0]]),
)
THETA1 = ParamBox.from_bounds([1.0], [2.0])
BUILDER = luenberger_bank_builder(SCALAR, [-2.0])


def u_sin(t):
    return np.sin(t)


# ---- monitor primitives -------------------------------------------------------

def test_monitor_rhs_rest_state():
    assert monitor_rhs(np.zeros(3), np.zeros((3, 1)), lam=0.1).tolist() == [0.0, 0.0, 0.0]


def test_monitor_rhs_uses_inf_norm_squared():
    out = monitor_rhs(np.array([1.0]), np.array([[3.0, -4.0]]), lam=0.5)
    assert abs(out[0] - (-0.5 + 16.0)) < 1e-15


def test_monitor_equilibrium_fixed_point():
    lam, c = 0.25, 2.0
    mu_eq = c / lam
    assert abs(monitor_rhs(np.array([mu_eq]), np.array([[np.sqrt(c)]]), lam)[0]) < 1e-12


def test_monitor_closed_form_under_default_integrator():
    # mu' = -lam mu + 1 from 0: mu(t) = (1 - exp(-lam t)) / lam
    lam = 0.005
    _, mu = run(
        SimConfig(dt=1e-3, t_final=100.0),
        lambda t, m: monitor_rhs(m, np.ones((1, 1)), lam),
        np.zeros(1),
    )
    exact = (1.0 - np.exp(-lam * 100.0)) / lam
    assert abs(exact - 78.69386805747331) < 1e-10
    assert abs(mu[0] - exact) < 1e-6


def test_monitor_reset_and_shifted_closed_form():
    lam = 0.1
    mu = monitor_reset(np.array([3.0, 4.0]))
    assert np.array_equal(mu, np.zeros(2))
    _, mu_end = run(
        SimConfig(dt=1e-3, t_final=5.0),
        lambda t, m: monitor_rhs(m, np.ones((2, 1)), lam),
        mu,
    )
    exact = (1.0 - np.exp(-lam * 5.0)) / lam
    assert np.max(np.abs(mu_end - exact)) < 1e-8


def test_select_examples():
    assert select(np.array([3.0, 1.0, 2.0])) == 2  # 1-based
    assert select(np.array([1.0, 1.0])) == 1  # tie -> lowest
    assert select(np.array([0.7])) == 1


# ---- static runs ---------------------------------------------------------------

@pytest.fixture(scope="module")
def static_trace():
    bank = BUILDER(grid_sample(THETA1, 5).points)
    sim = SimConfig(dt=1e-3, t_final=20.0, record_stride=10)
    return run_static(
        plant=SCALAR.bind([1.5]), bank=bank, lam=0.1, sim=sim,
        x0=[1.0], u_of=u_sin, xhat0=None, p_star_log=[1.5],
    )


def test_static_selects_nearest_parameter(static_trace):
    # grid {1.1, 1.3, 1.5, 1.7, 1.9}; the exact-parameter observer wins
    assert static_trace.sigma[-1] == 3
    assert static_trace.p_hat[-1, 0] == 1.5
    assert static_trace.err_p_inf[-1] == 0.0


def test_static_monitor_nonnegative_and_sigma_consistent(static_trace):
    assert np.all(static_trace.mu_all >= 0.0)
    recomputed = np.argmin(static_trace.mu_all, axis=1) + 1
    assert np.array_equal(recomputed, static_trace.sigma)
    assert np.all(static_trace.zoom_k == 0)
    assert np.all(np.diff(static_trace.t) > 0)


def test_static_never_resets_monitors(static_trace):
    # away from t=0 the accumulated monitors stay strictly positive
    late = static_trace.mu_all[10:]
    assert np.all(late.max(axis=1) > 0.0)


def test_static_estimator_purity_sentinel_p_star():
    bank = BUILDER(grid_sample(THETA1, 3).points)
    sim = SimConfig(dt=1e-3, t_final=5.0, record_stride=10)
    kw = dict(plant=SCALAR.bind([1.5]), bank=bank, lam=0.1, sim=sim,
              x0=[1.0], u_of=u_sin)
    a = run_static(p_star_log=[1.5], **kw)
    b = run_static(p_star_log=[0.0], **kw)  # sentinel: error columns only
    assert np.array_equal(a.sigma, b.sigma)
    assert np.array_equal(a.p_hat, b.p_hat)
    assert np.array_equal(a.x_hat, b.x_hat)
    assert np.array_equal(a.mu_all, b.mu_all)
    assert not np.array_equal(a.err_p_inf, b.err_p_inf)


def test_static_zero_input_degenerate_tie():
    # plant at equilibrium 0 with u = 0: all outputs identical, all mu
    # stay 0, the tie rule selects observer 1 throughout
    bank = BUILDER(grid_sample(THETA1, 3).points)
    sim = SimConfig(dt=1e-3, t_final=1.0, record_stride=10)
    tr = run_static(plant=SCALAR.bind([1.5]), bank=bank, lam=0.1, sim=sim,
                    x0=[0.0], u_of=lambda t: 0.0, p_star_log=[1.5])
    assert np.all(tr.sigma == 1)
    assert np.all(tr.mu_all == 0.0)


# ---- dynamic runs --------------------------------------------------------------

@pytest.fixture(scope="module")
def dynamic_trace():
    sim = SimConfig(dt=1e-3, t_final=40.0, event_period=10.0, record_stride=10)
    return run_dynamic(
        plant=SCALAR.bind([1.5]), bank_builder=BUILDER, theta0=THETA1, m=5,
        alpha=0.5, lam=0.5, sim=sim, x0=[1.0], u_of=u_sin, p_star_log=[1.5],
    )


def test_dynamic_zoom_schedule(dynamic_trace):
    ev = dynamic_trace.zoom_events
    assert [e.k for e in ev] == [1, 2, 3]
    assert np.allclose([e.t for e in ev], [10.0, 20.0, 30.0], atol=1e-12)


def test_dynamic_state_continuity_and_monitor_reset(dynamic_trace):
    for e in dynamic_trace.zoom_events:
        assert np.array_equal(e.xhat_before, e.xhat_after)  # exact carry-over
    # the recorded row at each t_k is post-event: all monitors at zero
    for e in dynamic_trace.zoom_events:
        row = int(np.flatnonzero(np.isclose(dynamic_trace.t, e.t))[0])
        assert np.all(dynamic_trace.mu_all[row] == 0.0)


def test_dynamic_nesting_and_stagewise_error(dynamic_trace):
    ev = dynamic_trace.zoom_events
    lo, hi = THETA1.lower, THETA1.upper
    prev_vol = THETA1.volume()
    for e in ev:
        assert np.all(e.box_lower >= lo - 1e-12) and np.all(e.box_upper <= hi + 1e-12)
        vol = float(np.prod(e.box_upper - e.box_lower))
        assert vol <= 0.5 * prev_vol * (1 + 1e-12)  # no clipping on this run
        prev_vol = vol
        lo, hi = e.box_lower, e.box_upper
    stage_errors = [abs(e.p_hat_left[0] - 1.5) for e in ev]
    assert all(a >= b - 1e-15 for a, b in zip(stage_errors, stage_errors[1:]))


def test_dynamic_off_grid_truth_error_decreases():
    sim = SimConfig(dt=1e-3, t_final=40.0, event_period=10.0, record_stride=10)
    tr = run_dynamic(
        plant=SCALAR.bind([1.37]), bank_builder=BUILDER, theta0=THETA1, m=5,
        alpha=0.5, lam=0.5, sim=sim, x0=[1.0], u_of=u_sin, p_star_log=[1.37],
    )
    stage_errors = [abs(e.p_hat_left[0] - 1.37) for e in tr.zoom_events]
    assert stage_errors[-1] < stage_errors[0]
    assert tr.err_p_inf[-1] <= 0.5 * 0.5**3 / 5 + 1e-12  # grid floor at stage 3
    # containment held: truth inside every zoomed box
    for e in tr.zoom_events:
        assert e.box_lower[0] - 1e-12 <= 1.37 <= e.box_upper[0] + 1e-12


def test_dynamic_alpha_near_one_keeps_invariants():
    sim = SimConfig(dt=1e-3, t_final=20.0, event_period=5.0, record_stride=20)
    tr = run_dynamic(
        plant=SCALAR.bind([1.5]), bank_builder=BUILDER, theta0=THETA1, m=3,
        alpha=0.999, lam=0.5, sim=sim, x0=[1.0], u_of=u_sin, p_star_log=[1.5],
    )
    lo, hi = THETA1.lower, THETA1.upper
    for e in tr.zoom_events:
        assert np.all(e.box_lower >= lo - 1e-12) and np.all(e.box_upper <= hi + 1e-12)
        lo, hi = e.box_lower, e.box_upper


def test_dynamic_determinism_bit_identical():
    sim = SimConfig(dt=1e-3, t_final=15.0, event_period=5.0, record_stride=10)

    def go():
        return run_dynamic(
            plant=SCALAR.bind([1.5]), bank_builder=BUILDER, theta0=THETA1, m=3,
            alpha=0.6, lam=0.5, sim=sim, x0=[1.0], u_of=u_sin, p_star_log=[1.5],
        )

    a, b = go(), go()
    assert np.array_equal(a.x_hat, b.x_hat)
    assert np.array_equal(a.mu_all, b.mu_all)
    assert np.array_equal(a.sigma, b.sigma)
    assert np.array_equal(a.p_hat, b.p_hat)


def test_trace_csv_schema_and_roundtrip(tmp_path, static_trace):
    path = tmp_path / "trace.csv"
    static_trace.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "t,sigma,p_hat_1,x_hat_1,x_1,mu_min,err_p_inf,err_x_inf,zoom_k"
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert np.array_equal(data["t"], static_trace.t)
    assert np.array_equal(data["p_hat_1"], static_trace.p_hat[:, 0])
    assert np.array_equal(data["err_x_inf"], static_trace.err_x_inf)
