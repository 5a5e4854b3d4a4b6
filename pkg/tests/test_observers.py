import numpy as np
import pytest

from supobs.errors import CertificateViolatedError, NotHurwitzError
from supobs.gains import design_luenberger
from supobs.models import JansenRitParams, jansen_rit_plant, sigmoid
from supobs.observers import (
    Assumption2Certificate,
    CircleCriterionBank,
    CircleCriterionObserver,
    LuenbergerBank,
    LuenbergerObserver,
    bank_output_errors,
    circle_criterion_rhs,
    luenberger_rhs,
    verify_assumption2,
)

PARAMS = JansenRitParams()


def scalar_obs(p_i, L=-1.0):
    return LuenbergerObserver(
        p=[p_i],
        A=np.array([[-p_i]]),
        B=np.array([[1.0]]),
        C=np.array([[1.0]]),
        L=np.array([[L]]),
    )


def test_luenberger_rhs_arithmetic_oracle():
    # -2*1 + 0 + (-1)(1 - 0.5) = -2.5
    obs = scalar_obs(2.0)
    out = luenberger_rhs(obs, np.array([1.0]), 0.0, 0.5)
    assert abs(out[0] - (-2.5)) < 1e-15


def test_luenberger_rhs_equilibrium():
    obs = scalar_obs(1.0)
    assert luenberger_rhs(obs, np.zeros(1), 0.0, 0.0)[0] == 0.0


def test_luenberger_construction_requires_hurwitz():
    with pytest.raises(NotHurwitzError):
        LuenbergerObserver(
            p=[1.0], A=np.array([[1.0]]), B=np.array([[1.0]]),
            C=np.array([[1.0]]), L=np.array([[0.0]]),
        )


def jr_observer(p_i, K=None, L=None):
    plant = jansen_rit_plant(PARAMS)
    p_i = np.asarray(p_i, dtype=float)
    return CircleCriterionObserver(
        p=p_i,
        A=plant.A_of_p(p_i),
        G=plant.G_of_p(p_i),
        B=plant.B_of_p(p_i),
        C=plant.C_of_p(p_i),
        H=plant.H,
        K=np.zeros((2, 1)) if K is None else K,
        L=np.zeros((6, 1)) if L is None else L,
        gamma=plant.gamma,
        phi=plant.phi,
    )


def test_cc_rhs_at_origin_is_nonzero():
    # S(0) > 0, so gamma and phi contribute even from the zero state
    obs = jr_observer([6.5, 25.5])
    out = circle_criterion_rhs(obs, np.zeros(6), 0.0, 0.0)
    expected = obs.G @ np.array([sigmoid(0.0, PARAMS), sigmoid(0.0, PARAMS)]) + obs.B @ np.array(
        [sigmoid(0.0, PARAMS), 0.0]
    )
    assert np.allclose(out, expected, atol=0.0)
    assert np.max(np.abs(out)) > 0


def test_cc_rhs_exact_parameter_matches_plant():
    plant = jansen_rit_plant(PARAMS)
    model = plant.to_model()
    p = np.array([6.5, 25.5])
    obs = jr_observer(p)
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.normal(scale=8.0, size=6)
        u = rng.uniform(120.0, 320.0)
        y = model.h(x, p)
        out = circle_criterion_rhs(obs, x.copy(), u, y)
        assert np.allclose(out, model.f(x, p, u), atol=1e-12)


def test_cc_structural_reduction_to_luenberger():
    # G = 0, K = 0 makes the circle-criterion form a Luenberger observer
    # driven by phi(u, y) in place of u
    rng = np.random.default_rng(9)
    A = np.array([[-1.0, 0.3], [0.0, -2.0]])
    B = rng.normal(size=(2, 2))
    C = np.array([[1.0, 0.0]])
    H = rng.normal(size=(2, 2))
    L = np.array([[0.5], [-0.2]])

    def phi(u, y):
        return np.array([np.atleast_1d(u)[0], np.atleast_1d(y)[0]])

    cobs = CircleCriterionObserver(
        p=[1.0], A=A, G=np.zeros((2, 2)), B=B, C=C, H=H,
        K=np.zeros((2, 1)), L=L, gamma=np.tanh, phi=phi,
    )
    lobs = LuenbergerObserver(p=[1.0], A=A, B=B, C=C, L=L)
    for _ in range(1000):
        x = rng.normal(size=2)
        u = rng.normal(size=1)
        y = rng.normal(size=1)
        a = circle_criterion_rhs(cobs, x, u, y)
        b = luenberger_rhs(lobs, x, phi(u, y), y)
        assert np.array_equal(a, b)


def test_bank_output_errors_and_permutation_independence():
    obs_list = [scalar_obs(p) for p in (1.1, 1.3, 1.5, 1.7, 1.9)]
    bank = LuenbergerBank(obs_list)
    Xhat = np.array([[2.0], [0.5], [1.0], [-1.0], [0.0]])
    errs = bank_output_errors(bank, Xhat, np.array([0.5]))
    assert np.allclose(errs.ravel(), [1.5, 0.0, 0.5, -1.5, -0.5], atol=0.0)

    perm = [3, 0, 4, 1, 2]
    bank_p = LuenbergerBank([obs_list[i] for i in perm])
    errs_p = bank_output_errors(bank_p, Xhat[perm], np.array([0.5]))
    assert np.array_equal(errs_p, errs[perm])

    rhs = bank.rhs_all(Xhat, np.atleast_1d(0.3), np.array([0.5]))
    rhs_p = bank_p.rhs_all(Xhat[perm], np.atleast_1d(0.3), np.array([0.5]))
    assert np.array_equal(rhs_p, rhs[perm])


def test_bank_rhs_matches_single_observer_rhs():
    plant = jansen_rit_plant(PARAMS)
    ps = [np.array([4.4, 22.6]), np.array([6.0, 25.0]), np.array([7.6, 27.4])]
    bank = CircleCriterionBank([jr_observer(p) for p in ps])
    rng = np.random.default_rng(12)
    Xhat = rng.normal(scale=5.0, size=(3, 6))
    u, y = 200.0, 3.0
    stacked = bank.rhs_all(Xhat, u, np.atleast_1d(y))
    for i, p in enumerate(ps):
        single = circle_criterion_rhs(jr_observer(p), Xhat[i], u, y)
        assert np.allclose(stacked[i], single, atol=1e-12)


def test_verify_assumption2_luenberger_identity():
    # with P from the Lyapunov solve and lambda0 = nu/(2 lmax(P)), the
    # zero-mismatch decay is an algebraic identity
    A = np.array([[0.0, 1.0], [-2.0, -3.0]])
    C = np.array([[1.0, 0.0]])
    L, cert = design_luenberger(A, C, [-1.5, -2.5])
    obs = LuenbergerObserver(p=[1.0], A=A, B=np.zeros((2, 1)), C=C, L=L, certificate=cert)

    def plant_f(x, p, u):
        return A @ x + np.zeros(2) * u[0] if hasattr(u, "__len__") else A @ x

    def plant_h(x, p):
        return C @ x

    report = verify_assumption2(
        obs, lambda x, p, u: A @ x, plant_h, p_star=[1.0], cert=cert,
        sample_boxes=(20.0, 20.0, 320.0), sample_budget=2000, seed=3,
    )
    assert report.passed
    assert report.worst_residual <= 1e-8


def test_verify_assumption2_zero_error_state():
    A = np.array([[-1.0]])
    C = np.array([[1.0]])
    L, cert = design_luenberger(A, C, [-2.0])
    obs = LuenbergerObserver(p=[1.0], A=A, B=np.zeros((1, 1)), C=C, L=L)
    report = verify_assumption2(
        obs, lambda x, p, u: A @ x, lambda x, p: C @ x, p_star=[1.0], cert=cert,
        sample_boxes=(0.0, 5.0, 1.0), sample_budget=50, seed=0,
    )
    assert report.passed  # V = 0, Vdot = 0 at zero error


def test_verify_assumption2_rejects_inflated_decay_rate():
    A = np.array([[0.0, 1.0], [-2.0, -3.0]])
    C = np.array([[1.0, 0.0]])
    L, cert = design_luenberger(A, C, [-1.5, -2.5])
    bad = Assumption2Certificate(
        P=cert.P, lambda0=10.0 * cert.lambda0, a1=cert.a1, a2=cert.a2, nu=cert.nu
    )
    obs = LuenbergerObserver(p=[1.0], A=A, B=np.zeros((2, 1)), C=C, L=L)
    with pytest.raises(CertificateViolatedError):
        verify_assumption2(
            obs, lambda x, p, u: A @ x, lambda x, p: C @ x, p_star=[1.0], cert=bad,
            sample_budget=500, seed=3,
        )


def test_verify_assumption2_nonzero_mismatch_records_residual():
    A = np.array([[-2.0]])
    C = np.array([[1.0]])
    L, cert = design_luenberger(A, C, [-3.0])

    def plant_f(x, p, u):
        return np.array([-p[0] * x[0]])

    obs = LuenbergerObserver(p=[2.0], A=A, B=np.zeros((1, 1)), C=C, L=L)
    report = verify_assumption2(
        obs, plant_f, lambda x, p: C @ x, p_star=[2.5], cert=cert,
        sample_boxes=(5.0, 5.0, 1.0), sample_budget=500, seed=1,
    )
    assert report.p_mismatch_inf == 0.5
    assert report.max_gamma_estimate > 0.0
    assert report.n_violations == 0  # mismatch residuals recorded, not violations
