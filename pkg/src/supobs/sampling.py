"""Parameter-set geometry: boxes, uniform grids and the zoom-in update.

A parameter set is an axis-aligned hyperrectangle (center plus
per-dimension half-lengths).  Uniform grid sampling places m points per
dimension at the centers of an equal partition into m^n_p cells, which
guarantees that every point of the box is within ``max_j half_j / m`` of
the grid in the infinity norm.  The zoom-in update contracts the
half-lengths by a factor ``alpha`` and recenters at the supplied
estimate, intersected with the running box (intersections of boxes are
boxes, so the running intersection is maintained as a single box).
"""

import itertools
from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np

from .errors import EmptyIntersectionError, EmptySetError

__all__ = [
    "ParamBox",
    "SampledParamSet",
    "ZoomState",
    "grid_sample",
    "distance_to_set",
    "zoom_update",
]


@dataclass(frozen=True)
class ParamBox:
    """Axis-aligned hyperrectangle {p : |p_j - center_j| <= half_lengths_j}."""

    center: np.ndarray
    half_lengths: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        object.__setattr__(
            self, "half_lengths", np.atleast_1d(np.asarray(self.half_lengths, dtype=float))
        )
        if self.center.shape != self.half_lengths.shape:
            raise ValueError("center and half_lengths must have the same shape")
        if np.any(self.half_lengths < 0):
            raise ValueError("half_lengths must be >= 0")

    @classmethod
    def from_bounds(cls, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if np.any(upper < lower):
            raise ValueError("upper must be >= lower componentwise")
        return cls(0.5 * (lower + upper), 0.5 * (upper - lower))

    @property
    def n_p(self):
        return self.center.size

    @property
    def lower(self):
        return self.center - self.half_lengths

    @property
    def upper(self):
        return self.center + self.half_lengths

    def contains(self, p, rtol=0.0):
        p = np.asarray(p, dtype=float)
        slack = rtol * np.maximum(1.0, np.abs(self.half_lengths))
        return bool(np.all(np.abs(p - self.center) <= self.half_lengths + slack))

    def contains_box(self, other, rtol=1e-12):
        slack = rtol * np.maximum(1.0, np.abs(self.half_lengths))
        return bool(
            np.all(other.lower >= self.lower - slack) and np.all(other.upper <= self.upper + slack)
        )

    def intersect(self, other):
        lo = np.maximum(self.lower, other.lower)
        hi = np.minimum(self.upper, other.upper)
        if np.any(hi < lo):
            raise EmptyIntersectionError("boxes do not intersect")
        return ParamBox.from_bounds(lo, hi)

    def volume(self):
        return float(np.prod(2.0 * self.half_lengths))


@dataclass(frozen=True)
class SampledParamSet:
    """N = m^n_p grid points (cell centers) inside ``parent``."""

    points: np.ndarray
    parent: ParamBox
    m: int

    @property
    def n_points(self):
        return self.points.shape[0]


def grid_sample(box: ParamBox, m: int) -> SampledParamSet:
    """Uniform m-per-dimension grid of cell centers over ``box``.

    The per-dimension centers are ``c_j - half_j + (2i - 1) half_j / m``
    for i = 1..m, enumerated with the first dimension varying slowest.
    Every point of the box lies within ``max_j half_j / m`` of the grid
    in the infinity norm.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    axes = [
        box.center[j] - box.half_lengths[j]
        + (2.0 * np.arange(1, m + 1) - 1.0) * box.half_lengths[j] / m
        for j in range(box.n_p)
    ]
    points = np.array(list(itertools.product(*axes)), dtype=float)
    return SampledParamSet(points=points, parent=box, m=m)


class SetDistance(NamedTuple):
    distance: float
    index: int


def distance_to_set(p, pset: SampledParamSet) -> SetDistance:
    """Infinity-norm distance from ``p`` to the nearest sampled point.

    Returns the exact minimum together with the argmin index (ties break
    to the lowest index).
    """
    if pset.n_points == 0:
        raise EmptySetError("sampled parameter set is empty")
    p = np.asarray(p, dtype=float)
    d = np.max(np.abs(pset.points - p), axis=1)
    idx = int(np.argmin(d))
    return SetDistance(float(d[idx]), idx)


@dataclass
class ZoomState:
    """State of the dynamic zoom-in sampling policy.

    ``delta`` carries the unclipped half-lengths alpha^k * delta(0);
    ``current_box`` is the running intersection, always inside the
    initial box.
    """

    current_box: ParamBox
    delta: np.ndarray
    alpha: float
    m: int
    k: int = 0
    history: List[Tuple[float, np.ndarray, ParamBox]] = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must be in (0, 1)")
        self.delta = np.asarray(self.delta, dtype=float)

    @classmethod
    def initial(cls, box: ParamBox, alpha: float, m: int):
        return cls(current_box=box, delta=box.half_lengths.copy(), alpha=alpha, m=m)


def zoom_update(z: ZoomState, p_hat, t=None):
    """One zoom-in step: contract, recenter at ``p_hat``, intersect, regrid.

    ``p_hat`` must lie in the current box (it is a previously sampled
    point, hence inside); the intersection is then nonempty by
    construction.  Returns the updated :class:`ZoomState` and the new
    :class:`SampledParamSet`.
    """
    p_hat = np.asarray(p_hat, dtype=float)
    if not z.current_box.contains(p_hat, rtol=1e-12):
        raise EmptyIntersectionError("p_hat is outside the current parameter box")
    new_delta = z.alpha * z.delta
    candidate = ParamBox(center=p_hat, half_lengths=new_delta)
    new_box = candidate.intersect(z.current_box)
    z.k += 1
    z.delta = new_delta
    z.current_box = new_box
    z.history.append((t, p_hat.copy(), new_box))
    return z, grid_sample(new_box, z.m)
