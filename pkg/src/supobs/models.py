"""Plant definitions and the runtime boundedness guard.

The general plant is ``xdot = f(x, p, u), y = h(x, p)`` with an unknown
constant parameter vector p.  Concrete families:

* :class:`LinearPlant` — ``xdot = A(p) x + B(p) u, y = C(p) x``
* :class:`LurePlant` — ``xdot = A(p) x + G(p) gamma(H x) + B(p) phi(u, y)``
  with componentwise slope-restricted ``gamma``
* :func:`jansen_rit_plant` — the 6-state neural mass model written in
  Lure form, parameters (p1, p2) = excitatory/inhibitory synaptic gains.

Known Jansen-Rit constants default to the classic values of the original
neural-mass literature (a=100 1/s, b=50 1/s, c1=135, c2=0.8*c1,
c3=c4=0.25*c1, e0=2.5 1/s, v0=6 mV, r=0.56 1/mV); all are overridable.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import TrajectoryBlowUpError

__all__ = [
    "PlantModel",
    "BoundPlant",
    "LinearPlant",
    "LurePlant",
    "JansenRitParams",
    "BoundednessMonitor",
    "sigmoid",
    "sigmoid_max_slope",
    "jansen_rit_plant",
]


@dataclass(frozen=True)
class PlantModel:
    """General plant interface: dimensions plus f(x, p, u) and h(x, p)."""

    n_x: int
    n_u: int
    n_y: int
    n_p: int
    f: Callable
    h: Callable

    def bind(self, p) -> "BoundPlant":
        """Close over a fixed parameter vector (the physical system).

        The supervisory estimator only ever sees the bound plant's input
        and output signals, never the parameter itself.
        """
        p = np.atleast_1d(np.asarray(p, dtype=float))
        return BoundPlant(
            n_x=self.n_x,
            n_u=self.n_u,
            n_y=self.n_y,
            f=lambda x, u: self.f(x, p, u),
            h=lambda x: self.h(x, p),
        )


@dataclass(frozen=True)
class BoundPlant:
    """A plant with its true parameter baked in: f(x, u), h(x)."""

    n_x: int
    n_u: int
    n_y: int
    f: Callable
    h: Callable


@dataclass(frozen=True)
class LinearPlant:
    """Parameter-to-matrix callbacks for the linear family."""

    n_x: int
    n_u: int
    n_y: int
    n_p: int
    A_of_p: Callable
    B_of_p: Callable
    C_of_p: Callable

    def to_model(self) -> PlantModel:
        def f(x, p, u):
            return self.A_of_p(p) @ x + self.B_of_p(p) @ np.atleast_1d(u)

        def h(x, p):
            return self.C_of_p(p) @ x

        return PlantModel(self.n_x, self.n_u, self.n_y, self.n_p, f, h)

    def bind(self, p) -> BoundPlant:
        """Bound plant with the matrices frozen at p (no per-call rebuild)."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        A, B, C = self.A_of_p(p), self.B_of_p(p), self.C_of_p(p)
        return BoundPlant(
            n_x=self.n_x, n_u=self.n_u, n_y=self.n_y,
            f=lambda x, u: A @ x + B @ np.atleast_1d(u),
            h=lambda x: C @ x,
        )


@dataclass(frozen=True)
class LurePlant:
    """Lure-type plant xdot = A(p) x + G(p) gamma(H x) + B(p) phi(u, y).

    ``gamma`` must be vectorized componentwise; ``gamma_sector`` holds the
    per-component slope bounds (a_k, b_k) with a_k <= gamma_k' <= b_k.
    ``phi(u, y)`` maps the measured signals to the n_phi-vector that
    multiplies B(p).
    """

    n_x: int
    n_u: int
    n_y: int
    n_p: int
    n_gamma: int
    n_phi: int
    A_of_p: Callable
    G_of_p: Callable
    B_of_p: Callable
    C_of_p: Callable
    H: np.ndarray
    gamma: Callable
    gamma_sector: Tuple[np.ndarray, np.ndarray]
    phi: Callable

    def to_model(self) -> PlantModel:
        def f(x, p, u):
            y = self.C_of_p(p) @ x
            return (
                self.A_of_p(p) @ x
                + self.G_of_p(p) @ self.gamma(self.H @ x)
                + self.B_of_p(p) @ self.phi(u, y)
            )

        def h(x, p):
            return self.C_of_p(p) @ x

        return PlantModel(self.n_x, self.n_u, self.n_y, self.n_p, f, h)

    def bind(self, p) -> BoundPlant:
        """Bound plant with the matrices frozen at p (no per-call rebuild)."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        A, G, B, C = self.A_of_p(p), self.G_of_p(p), self.B_of_p(p), self.C_of_p(p)
        H, gamma, phi = self.H, self.gamma, self.phi

        def f(x, u):
            y = C @ x
            return A @ x + G @ gamma(H @ x) + B @ phi(u, y)

        return BoundPlant(n_x=self.n_x, n_u=self.n_u, n_y=self.n_y, f=f, h=lambda x: C @ x)


@dataclass(frozen=True)
class JansenRitParams:
    """Known constants of the Jansen-Rit neural mass model."""

    a: float = 100.0     # excitatory rate constant, 1/s
    b: float = 50.0      # inhibitory rate constant, 1/s
    c1: float = 135.0    # connectivity constants, dimensionless
    c2: float = 0.8 * 135.0
    c3: float = 0.25 * 135.0
    c4: float = 0.25 * 135.0
    e0: float = 2.5      # half of the maximum firing rate, 1/s
    v0: float = 6.0      # sigmoid midpoint, mV
    r: float = 0.56      # sigmoid slope, 1/mV

    def __post_init__(self):
        for name in ("a", "b", "c1", "c2", "c3", "c4", "e0", "v0", "r"):
            if getattr(self, name) <= 0:
                raise ValueError(f"JansenRitParams.{name} must be > 0")


def sigmoid(v, params: JansenRitParams = JansenRitParams()):
    """Firing-rate sigmoid S(v) = 2 e0 / (1 + exp(r (v0 - v))).

    Strictly increasing with range (0, 2 e0); S(v0) = e0.  The exponent
    is clipped at 700 to avoid overflow; past that point S underflows to
    0 anyway.
    """
    z = params.r * (params.v0 - np.asarray(v, dtype=float))
    return 2.0 * params.e0 / (1.0 + np.exp(np.minimum(z, 700.0)))


def sigmoid_max_slope(params: JansenRitParams = JansenRitParams()):
    """sup S'(v) = e0 r / 2, attained at v = v0."""
    return params.e0 * params.r / 2.0


def jansen_rit_plant(params: JansenRitParams = JansenRitParams()) -> LurePlant:
    """The Jansen-Rit model in Lure form.

    State x = (x01, x02, x11, x12, x21, x22): membrane potential
    contributions of the pyramidal, excitatory and inhibitory populations
    and their derivatives.  Parameters p = (p1, p2) are the excitatory
    and inhibitory synaptic gains; the measured output is x11 - x21.
    Both nonlinearity components are the sigmoid, with slope restricted
    to [0, e0 r / 2].
    """
    a, b = params.a, params.b
    Aa = np.array([[0.0, 1.0], [-a * a, -2.0 * a]])
    Ab = np.array([[0.0, 1.0], [-b * b, -2.0 * b]])
    A = np.zeros((6, 6))
    A[0:2, 0:2] = Aa
    A[2:4, 2:4] = Aa
    A[4:6, 4:6] = Ab
    C = np.array([[0.0, 0.0, 1.0, 0.0, -1.0, 0.0]])
    H = np.zeros((2, 6))
    H[0, 0] = params.c1
    H[1, 0] = params.c3

    def A_of_p(p):
        return A

    def G_of_p(p):
        G = np.zeros((6, 2))
        G[3, 0] = p[0] * a * params.c2
        G[5, 1] = p[1] * b * params.c4
        return G

    def B_of_p(p):
        B = np.zeros((6, 2))
        B[1, 0] = p[0] * a
        B[3, 1] = p[0] * a
        return B

    def C_of_p(p):
        return C

    def gamma(v):
        return sigmoid(v, params)

    def phi(u, y):
        return np.array([float(sigmoid(np.asarray(y).reshape(-1)[0], params)),
                         float(np.asarray(u).reshape(-1)[0])])

    b_sec = sigmoid_max_slope(params)
    return LurePlant(
        n_x=6,
        n_u=1,
        n_y=1,
        n_p=2,
        n_gamma=2,
        n_phi=2,
        A_of_p=A_of_p,
        G_of_p=G_of_p,
        B_of_p=B_of_p,
        C_of_p=C_of_p,
        H=H,
        gamma=gamma,
        gamma_sector=(np.zeros(2), np.array([b_sec, b_sec])),
        phi=phi,
    )


@dataclass
class BoundednessMonitor:
    """Runtime guard for the uniform-boundedness assumption on the plant.

    Tracks the running maximum of |x|_inf and raises
    :class:`TrajectoryBlowUpError` past ``threshold``.  The bound itself
    need not be known; the guard only certifies that the simulated
    trajectory stayed finite and moderate.
    """

    threshold: float = 1e6
    max_abs_seen: float = 0.0

    def check(self, x):
        m = float(np.max(np.abs(np.asarray(x, dtype=float))))
        if m > self.max_abs_seen:
            self.max_abs_seen = m
        if m > self.threshold:
            raise TrajectoryBlowUpError(
                f"|x|_inf = {m:g} exceeded the boundedness guard {self.threshold:g}"
            )
        return self
