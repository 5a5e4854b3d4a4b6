import numpy as np
import pytest

from supobs.errors import EmptyIntersectionError
from supobs.sampling import (
    ParamBox,
    ZoomState,
    distance_to_set,
    grid_sample,
    zoom_update,
)

THETA = ParamBox.from_bounds([4.0, 22.0], [8.0, 28.0])


def test_grid_sample_5x5_centers():
    pset = grid_sample(THETA, 5)
    assert pset.n_points == 25
    dim1 = np.unique(pset.points[:, 0])
    dim2 = np.unique(pset.points[:, 1])
    assert np.allclose(dim1, [4.4, 5.2, 6.0, 6.8, 7.6], atol=1e-12)
    assert np.allclose(dim2, [22.6, 23.8, 25.0, 26.2, 27.4], atol=1e-12)


def test_grid_sample_m1_is_center():
    pset = grid_sample(THETA, 1)
    assert pset.n_points == 1
    assert np.allclose(pset.points[0], [6.0, 25.0], atol=0.0)


def test_distance_for_paper_experiment_point():
    pset = grid_sample(THETA, 5)
    d, idx = distance_to_set([6.5, 25.5], pset)
    # enumerate all 25 distances as the oracle
    brute = np.max(np.abs(pset.points - np.array([6.5, 25.5])), axis=1)
    assert d == brute.min()
    assert abs(d - 0.5) < 1e-12
    # (6.0, 25.0) and (6.8, 25.0) are both at distance 0.5; lowest index wins
    assert idx == int(np.flatnonzero(brute == brute.min())[0])
    assert np.allclose(pset.points[idx], [6.0, 25.0])
    assert d <= max(2.0 / 5, 3.0 / 5)


def test_distance_member_and_singleton():
    pset = grid_sample(THETA, 3)
    d, idx = distance_to_set(pset.points[4], pset)
    assert d == 0.0 and idx == 4
    single = grid_sample(ParamBox(center=[1.0, 2.0], half_lengths=[0.0, 0.0]), 1)
    d, _ = distance_to_set([3.0, 2.5], single)
    assert abs(d - 2.0) < 1e-15


def test_distance_tie_breaks_lowest_index():
    box = ParamBox.from_bounds([0.0], [1.0])
    pset = grid_sample(box, 2)  # centers 0.25, 0.75
    _, idx = distance_to_set([0.5], pset)
    assert idx == 0


def test_grid_distance_guarantee_exact():
    rng = np.random.default_rng(23)
    for m in range(2, 10):
        pset = grid_sample(THETA, m)
        bound = np.max(THETA.half_lengths) / m
        P = rng.uniform(THETA.lower, THETA.upper, size=(1000, 2))
        for p in P:
            d, _ = distance_to_set(p, pset)
            assert d <= bound


def test_zoom_update_interval_arithmetic_example():
    z = ZoomState.initial(THETA, alpha=0.8, m=5)
    z, pset = zoom_update(z, [7.5, 25.0])
    assert np.allclose(z.delta, [1.6, 2.4], atol=1e-12)
    assert np.allclose(z.current_box.lower, [5.9, 22.6], atol=1e-12)
    assert np.allclose(z.current_box.upper, [8.0, 27.4], atol=1e-12)
    assert z.k == 1
    assert pset.n_points == 25
    assert all(z.current_box.contains(p, rtol=1e-12) for p in pset.points)


def test_zoom_geometric_halving_of_delta():
    z = ZoomState.initial(THETA, alpha=0.5, m=3)
    for k in range(1, 5):
        z, _ = zoom_update(z, z.current_box.center)
        assert np.allclose(z.delta, 0.5**k * THETA.half_lengths, atol=1e-15)


def test_zoom_corner_estimate_keeps_box_nonempty():
    z = ZoomState.initial(THETA, alpha=0.8, m=2)
    corner = THETA.upper.copy()
    z, _ = zoom_update(z, corner)
    assert z.current_box.contains(corner, rtol=1e-12)
    assert np.all(z.current_box.upper - z.current_box.lower >= 0)


def test_zoom_nesting_and_volume_shrink():
    # the unclipped half-length envelope contracts by alpha exactly each
    # stage; the clipped box obeys the cumulative envelope volume bound
    rng = np.random.default_rng(5)
    z = ZoomState.initial(THETA, alpha=0.8, m=4)
    prev_box = z.current_box
    for k in range(1, 9):
        pset = grid_sample(z.current_box, 4)
        p_hat = pset.points[int(rng.integers(0, pset.n_points))]
        z, _ = zoom_update(z, p_hat)
        assert prev_box.contains_box(z.current_box)
        assert THETA.contains_box(z.current_box)
        assert np.allclose(z.delta, 0.8**k * THETA.half_lengths, atol=1e-13)
        assert z.current_box.volume() <= 0.8 ** (2 * k) * THETA.volume() * (1 + 1e-12)
        prev_box = z.current_box


def test_zoom_containment_propagation():
    # if the estimate is always within min_j delta_j(k) of p_star, then
    # p_star stays inside every zoomed box
    p_star = np.array([6.5, 25.5])
    z = ZoomState.initial(THETA, alpha=0.8, m=5)
    for _ in range(10):
        pset = grid_sample(z.current_box, 5)
        _, idx = distance_to_set(p_star, pset)
        p_hat = pset.points[idx]  # best selection, within delta_j(k)/m of p_star
        z, _ = zoom_update(z, p_hat)
        assert z.current_box.contains(p_star, rtol=1e-12)


def test_zoom_rejects_outside_estimate():
    z = ZoomState.initial(THETA, alpha=0.8, m=2)
    with pytest.raises(EmptyIntersectionError):
        zoom_update(z, [100.0, 100.0])
