"""Deterministic input signals for experiments.

The pseudo-random piecewise-constant signal uses numpy's PCG64 generator
(a named, publicly specified PRNG) seeded with a single integer, drawing
one uniform value per hold interval in order.  Identical (seed, range,
hold, duration) always reproduces the same signal, which is what makes
trace CSVs bit-reproducible.
"""

import numpy as np

__all__ = ["sine_input", "constant_input", "zero_input", "piecewise_constant_uniform"]


def sine_input(amplitude=1.0, frequency=1.0, phase=0.0):
    """u(t) = amplitude * sin(frequency * t + phase), frequency in rad/s."""

    def u(t):
        return amplitude * np.sin(frequency * t + phase)

    return u


def constant_input(value):
    def u(t):
        return value

    return u


def zero_input():
    return constant_input(0.0)


def piecewise_constant_uniform(low, high, hold, seed, t_final):
    """Piecewise-constant signal, uniform on [low, high], held for ``hold``.

    Values are drawn once, in hold-interval order, from
    ``numpy.random.Generator(numpy.random.PCG64(seed)).uniform(low, high)``.
    Lookup floors t/hold with a 1e-9 guard so stage times landing exactly
    on hold boundaries deterministically pick the new interval.
    """
    if hold <= 0:
        raise ValueError("hold must be > 0")
    n = int(np.ceil(t_final / hold)) + 2
    rng = np.random.Generator(np.random.PCG64(seed))
    values = rng.uniform(low, high, size=n)

    def u(t):
        j = int(t / hold + 1e-9)
        if j < 0:
            j = 0
        elif j >= n:
            j = n - 1
        return values[j]

    u.values = values
    u.hold = hold
    return u
