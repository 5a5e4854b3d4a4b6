import numpy as np
import pytest

from supobs.errors import NonFiniteDerivativeError
from supobs.ode import SimConfig, rk4_step, run


def test_rk4_hand_expanded_decay():
    # stages of x' = -x from x0=1, dt=0.1 give the degree-4 Taylor polynomial
    out = rk4_step(lambda t, x: -x, np.array([1.0]), 0.0, 0.1)
    assert abs(out[0] - 0.9048375) < 1e-15
    assert abs(out[0] - np.exp(-0.1)) < 1e-7


def test_rk4_zero_and_constant_fields():
    c = np.array([3.25, -1.0])
    assert np.array_equal(rk4_step(lambda t, x: 0.0 * x, c, 0.0, 0.5), c)
    out = rk4_step(lambda t, x: np.ones_like(x), np.zeros(1), 0.0, 0.37)
    assert abs(out[0] - 0.37) < 1e-15


def test_rk4_order_four_convergence():
    def final_error(dt):
        cfg = SimConfig(dt=dt, t_final=1.0)
        _, x = run(cfg, lambda t, x: -x, np.array([1.0]))
        return abs(x[0] - np.exp(-1.0))

    ratio = final_error(0.02) / final_error(0.01)
    assert 14.0 <= ratio <= 18.0


def test_rk4_richardson_linear_system():
    A = np.array([[0.0, 1.0], [-4.0, -1.0]])
    x0 = np.array([1.0, -0.5])

    def final(dt):
        _, x = run(SimConfig(dt=dt, t_final=1.0), lambda t, x: A @ x, x0)
        return x

    ref = final(0.001)  # dt/10 reference
    e1 = np.max(np.abs(final(0.02) - ref))
    e2 = np.max(np.abs(final(0.01) - ref))
    assert 13.0 <= e1 / e2 <= 19.0


def test_rk4_raises_on_non_finite_stage():
    def rhs(t, x):
        return np.array([np.inf]) if t > 0.05 else -x

    with pytest.raises(NonFiniteDerivativeError) as exc:
        run(SimConfig(dt=0.1, t_final=1.0), rhs, np.array([1.0]))
    assert exc.value.t is not None


def test_event_schedule_counts():
    cfg = SimConfig(dt=0.001, t_final=100.0, event_period=10.0)
    times = []
    run(cfg, lambda t, x: 0.0 * x, np.zeros(1), on_event=lambda t, s: times.append(t))
    assert len(times) == 9
    assert np.allclose(times, [10.0 * k for k in range(1, 10)], atol=1e-12)


def test_no_event_period_means_no_events():
    hits = []
    run(SimConfig(dt=0.1, t_final=1.0), lambda t, x: 0.0 * x, np.zeros(1),
        on_event=lambda t, s: hits.append(t))
    assert hits == []


def test_event_period_snaps_with_warning():
    with pytest.warns(UserWarning):
        cfg = SimConfig(dt=0.3, t_final=10.0, event_period=1.0)
    assert cfg.steps_per_event == 3
    assert abs(cfg.event_period - 0.9) < 1e-15


def test_event_handler_sees_left_limit_and_may_replace_state():
    # x' = 1; at t=0.5 the handler resets x to 0; left-limit value is 0.5
    seen = []

    def on_event(t, s):
        seen.append((t, s.copy()))
        out = s.copy()
        out[:] = 0.0
        return out

    _, x = run(SimConfig(dt=0.1, t_final=1.0, event_period=0.5),
               lambda t, x: np.ones_like(x), np.zeros(1), on_event=on_event)
    assert len(seen) == 1
    t_ev, s_ev = seen[0]
    assert abs(t_ev - 0.5) < 1e-12
    assert abs(s_ev[0] - 0.5) < 1e-12
    assert abs(x[0] - 0.5) < 1e-12  # integrates 0.5 more after the reset


def test_record_stride_and_final_record():
    recs = []
    run(SimConfig(dt=0.1, t_final=1.0, record_stride=2),
        lambda t, x: 0.0 * x, np.zeros(1),
        on_record=lambda i, t, s: recs.append(i))
    assert recs == [0, 2, 4, 6, 8, 10]


def test_determinism_bit_identical():
    A = np.array([[0.0, 1.0], [-4.0, -1.0]])

    def traj():
        out = []
        run(SimConfig(dt=0.01, t_final=2.0), lambda t, x: A @ x, np.array([1.0, 0.0]),
            on_record=lambda i, t, s: out.append(s.copy()))
        return np.array(out)

    a, b = traj(), traj()
    assert np.array_equal(a, b)
