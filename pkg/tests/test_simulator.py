from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from nomacell.params import SystemParams, TrafficParams
from nomacell.simulator import (SimConfig, classify_points, cond_success_prob, draw_loads,
                                empirical_ccdf, estimate_areas_and_loads, estimate_meta,
                                estimate_rate_delay, far_field_integral, polygon_area,
                                queue_sim, realization_rng, realize_typical_cell,
                                sample_in_polygon, simulate)

P = SystemParams()
SMALL = SimConfig(n_realizations=300, seed=7)
SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_polygon_area_and_sampling():
    assert polygon_area(SQUARE) == pytest.approx(1.0)
    tri = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
    assert polygon_area(tri) == pytest.approx(2.0)
    pts = sample_in_polygon(tri, np.random.default_rng(1), 20000)
    assert np.all(pts >= -1e-12) and np.all(pts.sum(axis=1) <= 2 + 1e-12)
    assert pts.mean(axis=0) == pytest.approx([2 / 3, 2 / 3], abs=0.02)


def test_far_field_integral_matches_quadrature():
    s, w, alpha = 0.7, 3.0, 4.0
    direct, _ = integrate.dblquad(
        lambda r, phi: r * (r * r + s * s - 2 * r * s * math.cos(phi)) ** (-alpha / 2),
        0.0, 2 * math.pi, w, np.inf)
    assert far_field_integral(s, w, alpha) == pytest.approx(direct, rel=1e-8)
    assert far_field_integral(0.0, w, alpha) == pytest.approx(2 * math.pi / (2 * w * w))


def test_realization_geometry():
    for i in range(50):
        real = realize_typical_cell(P, SMALL, realization_rng(3, 0, i))
        # the serving station sits at the origin and is the nearest one to the user
        assert real.r_o <= real.r_d + 1e-12
        assert real.cell_area == pytest.approx(polygon_area(real.cell))
        assert (real.user_class.value == "cc") == (real.r_o <= P.tau * real.r_d)


def test_cond_success_prob_edges():
    real = realize_typical_cell(P, SMALL, realization_rng(3, 0, 0))
    out = cond_success_prob(real, [0.0, 1.0, np.inf], P)
    assert out[0] == 1.0 and 0 < out[1] < 1 and out[2] == 0.0
    lonely = type(real)(np.zeros((0, 2)), real.user, real.r_o, real.r_d, real.user_class,
                        real.window_radius, real.cell)
    assert cond_success_prob(lonely, 2.0, P, far_field=False)[0] == 1.0


def test_classify_points():
    bs = np.array([[2.0, 0.0]])
    z = np.array([[0.0, 0.0], [0.5, 0.0], [0.9, 0.0]])
    assert classify_points(z, bs, 0.7).tolist() == [True, True, False]


def test_simulate_is_deterministic_and_sliceable():
    a = simulate(P, SMALL, [1.0], [0.5])
    b = simulate(P, SMALL, [1.0], [0.5])
    assert np.array_equal(a.success, b.success) and np.array_equal(a.r_o, b.r_o)
    tail = simulate(P, SimConfig(n_realizations=100, seed=7), [1.0], [0.5], start=200)
    assert np.array_equal(tail.success, a.success[200:])


def test_mean_cell_area_is_inverse_density():
    b = simulate(P, SimConfig(n_realizations=2000, seed=11))
    assert b.cell_area.mean() == pytest.approx(1.0, abs=0.04)


def test_area_split_is_consistent():
    b = simulate(P, SimConfig(n_realizations=40, seed=5), area_samples=2000)
    assert np.all(b.cc_area >= 0) and np.all(b.cc_area <= b.cell_area + 1e-12)
    assert np.mean(b.cc_area / b.cell_area) == pytest.approx(0.49, abs=0.06)


def test_draw_loads():
    n = draw_loads(np.full(50000, 0.5), 5.0, seed=1)
    assert n.min() >= 1
    m = 2.5
    assert n.mean() == pytest.approx(m / (1 - math.exp(-m)), rel=0.01)
    assert np.array_equal(n, draw_loads(np.full(50000, 0.5), 5.0, seed=1))


def test_empirical_ccdf():
    s = np.array([0.2, 0.4, 0.6, 0.8])
    out = empirical_ccdf(s, np.array([0.0, 0.4, 0.9]))
    assert out.tolist() == [1.0, 0.5, 0.0]


def test_queue_sim():
    rng = np.random.default_rng(9)
    assert queue_sim(0.5, 0.25, 1_000_000, rng) == pytest.approx(3.0, rel=0.02)
    assert queue_sim(1.0, 0.3, 10_000, rng) == 1.0
    with pytest.warns(RuntimeWarning):
        assert queue_sim(0.2, 0.3, 1000, rng) == math.inf


def test_estimators_enforce_minimum_sizes():
    with pytest.raises(ValueError):
        estimate_meta(P, [1.0], [1.0], SimConfig(n_realizations=100))
    with pytest.raises(ValueError):
        estimate_areas_and_loads(P, SimConfig(n_realizations=10, area_samples=100))


def test_rate_delay_estimate_edges():
    cfg = SimConfig(n_realizations=150, seed=3, area_samples=500)
    est = estimate_rate_delay(P, [0.3], "noma", TrafficParams(), cfg)
    for cdf in (est.rate_cdf_cc, est.rate_cdf_ce):
        assert cdf[0, 0] == 0.0 and cdf[0, -1] == 1.0
        assert np.all(np.diff(cdf[0]) >= 0)
    for out in (est.delay_ccdf_cc, est.delay_ccdf_ce):
        assert out[0, 0] == 1.0 and np.all(np.diff(out[0]) <= 0)
    assert est.n_cc + est.n_ce == 150
