"""Observer classes, the multi-observer bank, and certificate checks.

Two observer families are shipped:

* Luenberger, for linear plants:
  ``xhdot = A_i xh + B_i u + L_i (C_i xh - y)``
* circle-criterion, for Lure plants:
  ``xhdot = A_i xh + G_i gamma(H xh + K_i (C_i xh - y)) + B_i phi(u, y)
  + L_i (C_i xh - y)``

A bank stacks N observers of one family and evaluates all of their
derivatives in one shot; observers are mutually independent given the
plant output, so bank evaluation order never matters.  Observer states
are owned by the caller (the supervisor's composite state), keeping the
bank itself immutable during integration.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import CertificateViolatedError, NotHurwitzError
from .linalg import is_hurwitz, sym_eig

__all__ = [
    "LuenbergerObserver",
    "CircleCriterionObserver",
    "Assumption2Certificate",
    "Assumption2Report",
    "LuenbergerBank",
    "CircleCriterionBank",
    "luenberger_rhs",
    "circle_criterion_rhs",
    "bank_output_errors",
    "verify_assumption2",
]


@dataclass(frozen=True)
class Assumption2Certificate:
    """Quadratic robustness certificate V(e) = e' P e for one observer.

    ``lambda0`` is the certified decay rate, ``a1 <= V/|e|_inf^2 <= a2``
    the norm-equivalence bounds.  ``check_log`` records the sampled
    verification, when one has been run.
    """

    P: np.ndarray
    lambda0: float
    a1: float
    a2: float
    nu: float
    source: str = "lyapunov"
    check_log: Optional["Assumption2Report"] = None

    def __post_init__(self):
        if self.a1 > self.a2:
            raise ValueError("need a1 <= a2")
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be > 0")
        if sym_eig(self.P).eigenvalues[0] <= 0:
            raise ValueError("certificate P must be positive definite")


@dataclass(frozen=True)
class LuenbergerObserver:
    """One Luenberger observer at nominal parameter p."""

    p: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    L: np.ndarray
    certificate: Optional[Assumption2Certificate] = None

    def __post_init__(self):
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))
        if not is_hurwitz(self.A + self.L @ self.C):
            raise NotHurwitzError("A + L C must be Hurwitz")

    @property
    def n_x(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class CircleCriterionObserver:
    """One circle-criterion observer at nominal parameter p.

    ``certificate`` is attached when the gains passed the LMI check;
    observers without one are explicitly unverified.
    """

    p: np.ndarray
    A: np.ndarray
    G: np.ndarray
    B: np.ndarray
    C: np.ndarray
    H: np.ndarray
    K: np.ndarray
    L: np.ndarray
    gamma: Callable
    phi: Callable
    certificate: Optional[Assumption2Certificate] = None

    def __post_init__(self):
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))

    @property
    def n_x(self):
        return self.A.shape[0]

    @property
    def verified(self):
        return self.certificate is not None


def luenberger_rhs(obs: LuenbergerObserver, xhat, u, y):
    """A_i xh + B_i u + L_i (C_i xh - y)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return obs.A @ xhat + obs.B @ u + obs.L @ (obs.C @ xhat - y)


def circle_criterion_rhs(obs: CircleCriterionObserver, xhat, u, y):
    """A_i xh + G_i gamma(H xh + K_i (C xh - y)) + B_i phi(u, y) + L_i (C xh - y)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    innov = obs.C @ xhat - y
    w = obs.H @ xhat + obs.K @ innov
    return obs.A @ xhat + obs.G @ obs.gamma(w) + obs.B @ obs.phi(u, y) + obs.L @ innov


class _BankBase:
    """Common stacked storage for a homogeneous observer bank."""

    def __init__(self, observers):
        if not observers:
            raise ValueError("bank needs at least one observer")
        self.observers = list(observers)
        self.N = len(self.observers)
        self.n_x = self.observers[0].n_x
        self.parameters = np.array([o.p for o in self.observers], dtype=float)
        self._A = np.array([o.A for o in self.observers])
        self._B = np.array([o.B for o in self.observers])
        self._C = np.array([o.C for o in self.observers])
        self._L = np.array([o.L for o in self.observers])
        self.n_y = self._C.shape[1]

    def outputs(self, Xhat):
        """Stacked observer outputs, shape (N, n_y)."""
        return np.einsum("nij,nj->ni", self._C, Xhat)

    def output_errors(self, Xhat, y):
        return self.outputs(Xhat) - np.atleast_1d(y)


class LuenbergerBank(_BankBase):
    def rhs_all(self, Xhat, u, y):
        """Derivatives of all observer states, shape (N, n_x)."""
        return self.rhs_and_errors(Xhat, u, y)[0]

    def rhs_and_errors(self, Xhat, u, y):
        """(derivatives, output errors) sharing one output evaluation."""
        u = np.atleast_1d(u)
        innov = self.output_errors(Xhat, y)
        dX = (
            np.einsum("nij,nj->ni", self._A, Xhat)
            + np.einsum("nij,j->ni", self._B, u)
            + np.einsum("nij,nj->ni", self._L, innov)
        )
        return dX, innov


class CircleCriterionBank(_BankBase):
    def __init__(self, observers):
        super().__init__(observers)
        self._G = np.array([o.G for o in self.observers])
        self._K = np.array([o.K for o in self.observers])
        self._H = self.observers[0].H
        self._gamma = self.observers[0].gamma
        self._phi = self.observers[0].phi

    def rhs_all(self, Xhat, u, y):
        return self.rhs_and_errors(Xhat, u, y)[0]

    def rhs_and_errors(self, Xhat, u, y):
        innov = self.output_errors(Xhat, y)
        w = Xhat @ self._H.T + np.einsum("nij,nj->ni", self._K, innov)
        phi = np.atleast_1d(self._phi(u, y))
        dX = (
            np.einsum("nij,nj->ni", self._A, Xhat)
            + np.einsum("nij,nj->ni", self._G, self._gamma(w))
            + np.einsum("nij,j->ni", self._B, phi)
            + np.einsum("nij,nj->ni", self._L, innov)
        )
        return dX, innov


def bank_output_errors(bank, Xhat, y):
    """Per-observer output errors yhat_i - y, shape (N, n_y)."""
    return bank.output_errors(Xhat, y)


def _single_rhs(obs, xhat, u, y):
    if isinstance(obs, LuenbergerObserver):
        return luenberger_rhs(obs, xhat, u, y)
    return circle_criterion_rhs(obs, xhat, u, y)


@dataclass(frozen=True)
class Assumption2Report:
    """Result of a sampled certificate check."""

    n_samples: int
    n_violations: int
    worst_residual: float
    max_gamma_estimate: float
    p_mismatch_inf: float

    @property
    def passed(self):
        return self.n_violations == 0


def verify_assumption2(
    obs,
    plant_f: Callable,
    plant_h: Callable,
    p_star,
    cert: Assumption2Certificate,
    sample_boxes: Tuple[float, float, float] = (20.0, 20.0, 320.0),
    n_u: int = 1,
    sample_budget: int = 10_000,
    seed: int = 0,
    tol: float = 1e-8,
):
    """Sampled check of the Lyapunov decay property of a certificate.

    Draws (e, x, u) from the centered boxes given by ``sample_boxes``
    (half-widths for the state error, the plant state, and the input) and
    evaluates the true error dynamics

        edot = f_obs(e + x, u, y = h(x, p_star)) - f(x, p_star, u)

    together with V = e' P e.  At zero parameter mismatch
    (``p_star == obs.p``) every sample must satisfy
    ``Vdot <= -lambda0 V + tol * max(1, |Vdot|, lambda0 V)``, else
    :class:`CertificateViolatedError` is raised.  At nonzero mismatch the
    positive part of ``Vdot + lambda0 V`` is only recorded, as an
    empirical estimate of the mismatch-induced disturbance term.

    The eigenvector directions of P are always included among the error
    samples so that decay-rate overstatements are caught deterministically.
    """
    p_star = np.atleast_1d(np.asarray(p_star, dtype=float))
    n_x = obs.n_x
    rng = np.random.default_rng(seed)
    dx, dxp, du = sample_boxes
    E = rng.uniform(-dx, dx, size=(sample_budget, n_x))
    X = rng.uniform(-dxp, dxp, size=(sample_budget, n_x))
    U = rng.uniform(-du, du, size=(sample_budget, n_u))
    # deterministic eigen-direction samples at a few radii
    w, V = sym_eig(cert.P)
    extra = np.vstack([r * V.T for r in (dx, 0.5 * dx, 1e-3 * dx)])
    E = np.vstack([E, extra])
    X = np.vstack([X, np.zeros((extra.shape[0], n_x))])
    U = np.vstack([U, np.zeros((extra.shape[0], n_u))])

    mismatch = float(np.max(np.abs(obs.p - p_star))) if obs.p.size == p_star.size else np.inf
    at_zero = mismatch == 0.0

    worst = -np.inf
    gamma_max = 0.0
    n_viol = 0
    P = cert.P
    lam0 = cert.lambda0
    for e, x, u in zip(E, X, U):
        y = plant_h(x, p_star)
        edot = _single_rhs(obs, e + x, u, y) - plant_f(x, p_star, u)
        Vval = float(e @ P @ e)
        Vdot = float(2.0 * (e @ P @ edot))
        resid = Vdot + lam0 * Vval
        scale = max(1.0, abs(Vdot), lam0 * Vval)
        worst = max(worst, resid / scale)
        if resid > tol * scale:
            n_viol += 1
        gamma_max = max(gamma_max, max(0.0, resid))
    report = Assumption2Report(
        n_samples=E.shape[0],
        n_violations=n_viol if at_zero else 0,
        worst_residual=worst,
        max_gamma_estimate=gamma_max,
        p_mismatch_inf=mismatch,
    )
    if at_zero and n_viol > 0:
        raise CertificateViolatedError(
            f"{n_viol}/{E.shape[0]} samples violate Vdot <= -lambda0 V at zero "
            f"parameter mismatch (worst scaled residual {worst:.3e})"
        )
    return report
