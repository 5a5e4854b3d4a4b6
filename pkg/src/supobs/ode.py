"""Deterministic fixed-step RK4 integration with a periodic event schedule.

The integrator advances a flat state vector with classical 4-stage
Runge-Kutta.  Update events fire at exact integer multiples of the step
count, before the step that begins at the event time, so event handlers
see left-limit values.  There is no event at t = 0 and none at t_final.
"""

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteDerivativeError

__all__ = ["SimConfig", "rk4_step", "run"]


@dataclass
class SimConfig:
    """Fixed-step simulation settings.

    ``event_period`` is snapped to the nearest integer multiple of ``dt``
    at construction (with a warning if it moved), so event times land
    exactly on step boundaries and never drift.
    """

    dt: float
    t_final: float
    event_period: Optional[float] = None
    record_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_final <= 0 or self.dt > self.t_final:
            raise ValueError("need 0 < dt <= t_final")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.event_period is not None:
            if self.event_period < self.dt:
                raise ValueError("event_period must be >= dt")
            k = max(1, round(self.event_period / self.dt))
            snapped = k * self.dt
            if abs(snapped - self.event_period) > 1e-12 * self.event_period:
                warnings.warn(
                    f"event_period {self.event_period} snapped to {snapped} "
                    f"({k} steps of dt={self.dt})",
                    stacklevel=2,
                )
            self.event_period = snapped

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    @property
    def steps_per_event(self):
        if self.event_period is None:
            return None
        return int(round(self.event_period / self.dt))


def rk4_step(rhs, state, t, dt):
    """One classical Runge-Kutta step of size ``dt``.

    ``rhs(t, state)`` must return the state derivative.  Raises
    :class:`NonFiniteDerivativeError` if any stage produces NaN or Inf.
    """
    k1 = np.asarray(rhs(t, state))
    k2 = np.asarray(rhs(t + 0.5 * dt, state + 0.5 * dt * k1))
    k3 = np.asarray(rhs(t + 0.5 * dt, state + 0.5 * dt * k2))
    k4 = np.asarray(rhs(t + dt, state + dt * k3))
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        for stage, k in ((1, k1), (2, k2), (3, k3), (4, k4)):
            if not np.all(np.isfinite(k)):
                raise NonFiniteDerivativeError(
                    f"RK4 stage {stage} produced a non-finite derivative at t={t:g}", t=t
                )
        raise NonFiniteDerivativeError(f"non-finite state after step at t={t:g}", t=t)
    return out


def run(
    cfg: SimConfig,
    rhs: Callable,
    state0,
    on_event: Optional[Callable] = None,
    on_record: Optional[Callable] = None,
):
    """Integrate ``rhs`` from t=0 to ``cfg.t_final``.

    At each event time t_k = k * event_period (k >= 1, t_k < t_final),
    ``on_event(t, state)`` fires before the step beginning at t_k and
    receives left-limit values; it may return a replacement state (or
    None to keep the state unchanged).  ``on_record(i, t, state)`` fires
    at step indices that are multiples of ``record_stride``, after any
    coincident event, and once more at the final step.

    Returns ``(t_end, state_end)``.
    """
    state = np.array(state0, dtype=float)
    n = cfg.n_steps
    spe = cfg.steps_per_event
    stride = cfg.record_stride
    dt = cfg.dt
    for i in range(n):
        t = i * dt
        if spe is not None and i > 0 and i % spe == 0 and on_event is not None:
            replaced = on_event(t, state)
            if replaced is not None:
                state = np.asarray(replaced, dtype=float)
        if on_record is not None and i % stride == 0:
            on_record(i, t, state)
        state = rk4_step(rhs, state, t, dt)
    t_end = n * dt
    if on_record is not None:
        on_record(n, t_end, state)
    return t_end, state
