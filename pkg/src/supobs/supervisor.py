"""Supervisory layer: monitoring signals, selection, estimation runs.

Each observer i carries a monitoring signal, the exponentially weighted
running energy of its output error, realized as the linear filter

    mudot_i = -lambda mu_i + |yerr_i|_inf^2,   mu_i(0) = 0.

The supervisor selects sigma(t) = argmin_i mu_i(t) (ties break to the
lowest index; sigma is reported 1-based, matching the selection signal's
range {1, .., N}) and publishes p_hat = p_sigma and x_hat = x_hat_sigma.
sigma is evaluated at the recording stride; between records the previous
selection holds.

``run_static`` integrates plant + bank + monitors jointly over a fixed
grid.  ``run_dynamic`` additionally fires zoom updates every
``event_period`` seconds: the left-limit selection recenters a contracted
parameter box, the bank is rebuilt on the new grid (observer slot i keeps
its state and receives the new parameter and gains), and the monitors
reset to zero.

The true parameter enters a run only through the bound plant that
generates x and y, and through the logged error columns; the estimator
path (monitors, selection, estimates) sees input and output signals only.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .models import BoundednessMonitor, BoundPlant
from .ode import SimConfig, run
from .sampling import ParamBox, ZoomState, grid_sample, zoom_update

__all__ = [
    "CompositeState",
    "ZoomEventRecord",
    "SupervisorTrace",
    "monitor_rhs",
    "monitor_reset",
    "select",
    "run_static",
    "run_dynamic",
]

CSV_COLUMNS = "t sigma p_hat x_hat x mu_min err_p_inf err_x_inf zoom_k"


def monitor_rhs(mu, y_err, lam):
    """-lambda mu + |yerr|_inf^2, elementwise across the bank.

    ``y_err`` has shape (N, n_y) (or (n_y,) for a single monitor).
    """
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    y_err = np.asarray(y_err, dtype=float)
    forcing = np.max(np.abs(y_err), axis=-1) ** 2
    return -lam * np.asarray(mu, dtype=float) + forcing


def monitor_reset(mu):
    """Fresh monitor values: all zero (dynamic-mode update semantics)."""
    return np.zeros_like(np.asarray(mu, dtype=float))


def select(mu):
    """1-based index of the minimal monitoring signal; ties -> lowest."""
    return int(np.argmin(mu)) + 1


@dataclass
class CompositeState:
    """Unpacked view of the jointly integrated state."""

    plant_x: np.ndarray
    observer_x: np.ndarray  # (N, n_x)
    monitor_mu: np.ndarray  # (N,)
    t: float


@dataclass
class ZoomEventRecord:
    """Left-limit data and outcome of one zoom update."""

    k: int
    t: float
    sigma_left: int
    p_hat_left: np.ndarray
    mu_left: np.ndarray
    box_lower: np.ndarray
    box_upper: np.ndarray
    delta: np.ndarray
    points: np.ndarray
    xhat_before: np.ndarray
    xhat_after: np.ndarray


@dataclass
class SupervisorTrace:
    """Time-indexed record of a supervisory estimation run."""

    t: np.ndarray
    sigma: np.ndarray
    p_hat: np.ndarray
    x_hat: np.ndarray
    x: np.ndarray
    mu_min: np.ndarray
    err_p_inf: np.ndarray
    err_x_inf: np.ndarray
    zoom_k: np.ndarray
    mu_all: np.ndarray
    y_err_inf: Optional[np.ndarray]
    zoom_events: List[ZoomEventRecord]
    p_star_log: Optional[np.ndarray]
    wall_time: float
    parameters_final: np.ndarray

    @property
    def n_records(self):
        return self.t.size

    def to_csv(self, path):
        """Write the pinned trace schema.

        Columns: t, sigma, p_hat_1..n_p, x_hat_1..n_x, x_1..n_x, mu_min,
        err_p_inf, err_x_inf, zoom_k.  Floats use shortest round-trip
        decimal form, so identical runs produce byte-identical files.
        """
        n_p = self.p_hat.shape[1]
        n_x = self.x.shape[1]
        cols = (
            ["t", "sigma"]
            + [f"p_hat_{j + 1}" for j in range(n_p)]
            + [f"x_hat_{j + 1}" for j in range(n_x)]
            + [f"x_{j + 1}" for j in range(n_x)]
            + ["mu_min", "err_p_inf", "err_x_inf", "zoom_k"]
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for r in range(self.n_records):
                row = [repr(float(self.t[r])), str(int(self.sigma[r]))]
                row += [repr(float(v)) for v in self.p_hat[r]]
                row += [repr(float(v)) for v in self.x_hat[r]]
                row += [repr(float(v)) for v in self.x[r]]
                row += [
                    repr(float(self.mu_min[r])),
                    repr(float(self.err_p_inf[r])),
                    repr(float(self.err_x_inf[r])),
                    str(int(self.zoom_k[r])),
                ]
                fh.write(",".join(row) + "\n")

    def summary(self):
        last = self.n_records - 1
        out = {
            "t_final": float(self.t[last]),
            "sigma_final": int(self.sigma[last]),
            "err_p_inf_final": float(self.err_p_inf[last]),
            "err_x_inf_final": float(self.err_x_inf[last]),
            "zoom_count": len(self.zoom_events),
            "wall_time_s": self.wall_time,
        }
        if self.p_star_log is not None:
            out["err_p_euclid_final"] = float(
                np.linalg.norm(self.p_hat[last] - self.p_star_log)
            )
            out["err_x_euclid_final"] = float(np.linalg.norm(self.x_hat[last] - self.x[last]))
        return out


class _RunContext:
    """Mutable state shared between the integrator callbacks."""

    def __init__(self, plant, bank, lam, u_of, n_x):
        self.plant = plant
        self.bank = bank
        self.lam = lam
        self.u_of = u_of
        self.n_x = n_x
        self.zoom_k = 0
        self.rows = []
        self.mu_rows = []
        self.yerr_rows = []
        self.events = []

    def unpack(self, z):
        n_x, N = self.n_x, self.bank.N
        x = z[:n_x]
        Xh = z[n_x:n_x + N * n_x].reshape(N, n_x)
        mu = z[n_x + N * n_x:]
        return x, Xh, mu

    def rhs(self, t, z):
        x, Xh, mu = self.unpack(z)
        u = self.u_of(t)
        y = np.atleast_1d(self.plant.h(x))
        dXh, yerr = self.bank.rhs_and_errors(Xh, u, y)
        dmu = -self.lam * mu + np.max(np.abs(yerr), axis=1) ** 2
        return np.concatenate([np.asarray(self.plant.f(x, u), dtype=float).ravel(),
                               dXh.ravel(), dmu])


def _record_row(ctx, t, z, p_star_log, guard, record_yerr):
    x, Xh, mu = ctx.unpack(z)
    guard.check(x)
    sig = select(mu)
    p_hat = ctx.bank.parameters[sig - 1]
    x_hat = Xh[sig - 1]
    err_p = np.nan if p_star_log is None else float(np.max(np.abs(p_hat - p_star_log)))
    err_x = float(np.max(np.abs(x_hat - x)))
    ctx.rows.append(
        (t, sig, p_hat.copy(), x_hat.copy(), x.copy(), float(mu[sig - 1]), err_p, err_x,
         ctx.zoom_k)
    )
    ctx.mu_rows.append(mu.copy())
    if record_yerr:
        y = np.atleast_1d(ctx.plant.h(x))
        yerr = ctx.bank.output_errors(Xh, y)
        ctx.yerr_rows.append(np.max(np.abs(yerr), axis=1))


def _build_trace(ctx, p_star_log, wall, record_yerr):
    rows = ctx.rows
    R = len(rows)
    n_p = rows[0][2].size
    n_x = rows[0][3].size
    tr = SupervisorTrace(
        t=np.array([r[0] for r in rows]),
        sigma=np.array([r[1] for r in rows], dtype=np.int64),
        p_hat=np.array([r[2] for r in rows]).reshape(R, n_p),
        x_hat=np.array([r[3] for r in rows]).reshape(R, n_x),
        x=np.array([r[4] for r in rows]).reshape(R, n_x),
        mu_min=np.array([r[5] for r in rows]),
        err_p_inf=np.array([r[6] for r in rows]),
        err_x_inf=np.array([r[7] for r in rows]),
        zoom_k=np.array([r[8] for r in rows], dtype=np.int64),
        mu_all=np.array(ctx.mu_rows),
        y_err_inf=np.array(ctx.yerr_rows) if record_yerr else None,
        zoom_events=ctx.events,
        p_star_log=None if p_star_log is None else np.atleast_1d(
            np.asarray(p_star_log, dtype=float)
        ),
        wall_time=wall,
        parameters_final=ctx.bank.parameters.copy(),
    )
    return tr


def _initial_state(x0, xhat0, N, n_x):
    x0 = np.asarray(x0, dtype=float).ravel()
    if xhat0 is None:
        Xh0 = np.zeros((N, n_x))
    else:
        Xh0 = np.asarray(xhat0, dtype=float)
        if Xh0.ndim == 1:
            Xh0 = np.tile(Xh0, (N, 1))
    return np.concatenate([x0, Xh0.ravel(), np.zeros(N)])


def run_static(
    plant: BoundPlant,
    bank,
    lam: float,
    sim: SimConfig,
    x0,
    u_of: Callable,
    xhat0=None,
    p_star_log=None,
    guard_threshold: float = 1e6,
    record_y_errors: bool = True,
) -> SupervisorTrace:
    """Supervisory estimation over a fixed observer grid.

    The monitors are never reset in static mode.  ``p_star_log`` feeds
    the logged error columns only.
    """
    if sim.event_period is not None:
        raise ValueError("static runs take a SimConfig without event_period")
    t0 = time.perf_counter()
    ctx = _RunContext(plant, bank, lam, u_of, plant.n_x)
    guard = BoundednessMonitor(threshold=guard_threshold)
    z0 = _initial_state(x0, xhat0, bank.N, plant.n_x)
    run(
        sim,
        ctx.rhs,
        z0,
        on_record=lambda i, t, z: _record_row(ctx, t, z, p_star_log, guard, record_y_errors),
    )
    return _build_trace(ctx, p_star_log, time.perf_counter() - t0, record_y_errors)


def run_dynamic(
    plant: BoundPlant,
    bank_builder: Callable,
    theta0: ParamBox,
    m: int,
    alpha: float,
    lam: float,
    sim: SimConfig,
    x0,
    u_of: Callable,
    xhat0=None,
    p_star_log=None,
    guard_threshold: float = 1e6,
    record_y_errors: bool = True,
) -> SupervisorTrace:
    """Supervisory estimation with the zoom-in resampling policy.

    ``bank_builder(points)`` must return an observer bank for the given
    (N, n_p) parameter points; it is called once for the initial grid and
    once per zoom update (gain re-design or table lookup happens inside
    it).  Observer states carry across updates unchanged, slot-aligned;
    monitors reset to zero at each update.
    """
    if sim.event_period is None:
        raise ValueError("dynamic runs need SimConfig.event_period = T_d")
    t0 = time.perf_counter()
    pset = grid_sample(theta0, m)
    bank = bank_builder(pset.points)
    ctx = _RunContext(plant, bank, lam, u_of, plant.n_x)
    guard = BoundednessMonitor(threshold=guard_threshold)
    zoom = ZoomState.initial(theta0, alpha, m)
    z0 = _initial_state(x0, xhat0, bank.N, plant.n_x)

    def on_event(t, z):
        x, Xh, mu = ctx.unpack(z)
        guard.check(x)
        mu_left = mu.copy()
        sig_left = select(mu_left)
        p_hat_left = ctx.bank.parameters[sig_left - 1].copy()
        xhat_before = Xh.copy()
        _, new_pset = zoom_update(zoom, p_hat_left, t=t)
        ctx.bank = bank_builder(new_pset.points)
        ctx.zoom_k = zoom.k
        z = z.copy()
        _, Xh_new, mu_new = ctx.unpack(z)
        mu_new[:] = 0.0  # monitor reset at t_k; observer states untouched
        ctx.events.append(
            ZoomEventRecord(
                k=zoom.k,
                t=t,
                sigma_left=sig_left,
                p_hat_left=p_hat_left,
                mu_left=mu_left,
                box_lower=zoom.current_box.lower.copy(),
                box_upper=zoom.current_box.upper.copy(),
                delta=zoom.delta.copy(),
                points=new_pset.points.copy(),
                xhat_before=xhat_before,
                xhat_after=Xh_new.copy(),
            )
        )
        return z

    run(
        sim,
        ctx.rhs,
        z0,
        on_event=on_event,
        on_record=lambda i, t, z: _record_row(ctx, t, z, p_star_log, guard, record_y_errors),
    )
    return _build_trace(ctx, p_star_log, time.perf_counter() - t0, record_y_errors)
