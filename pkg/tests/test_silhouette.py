import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import tent
from tda_bands import Diagram, Grid, PowerWeightedSilhouette, ValidationError, landscape_at, silhouette_at, silhouette_on_grid
from tda_bands.landscape import _tents
from tda_bands.silhouette import silhouette_values, silhouette_weights

INF = float("inf")


def test_equal_persistence():
    assert silhouette_at(Diagram.from_pairs([(0, 2), (1, 3)], 3), 1, 1.5) == 0.5


def test_hand_weighted_average():
    d = Diagram.from_pairs([(0, 4), (1, 2)], 4)
    assert silhouette_at(d, 2, 1.5) == pytest.approx(49 / 34, rel=1e-14)


def test_infinite_power():
    d = Diagram.from_pairs([(0, 4), (1, 2)], 4)
    assert silhouette_at(d, INF, 1.5) == 1.5
    assert silhouette_at(d, "inf", 1.5) == 1.5


def test_infinite_power_averages_ties():
    d = Diagram.from_pairs([(0, 2), (1, 3), (0, 0.5)], 3)
    assert silhouette_at(d, INF, 1.25) == pytest.approx((0.75 + 0.25) / 2)


def test_single_pair_is_its_triangle():
    f = silhouette_on_grid(Diagram.from_pairs([(0, 2)], 2), 3.7, Grid(0, 2, 5))
    assert f.values.tolist() == [0, 0.5, 1, 0.5, 0]
    assert f.kind == "silhouette" and f.param == 3.7


def test_equal_persistence_power_independent():
    d = Diagram.from_pairs([(0, 2), (1, 3)], 3)
    g = Grid(0, 3, 31)
    ref = silhouette_on_grid(d, 1, g).values
    for p in (0.1, 10):
        assert np.max(np.abs(silhouette_on_grid(d, p, g).values - ref)) <= 1e-12


def test_large_power_approaches_dominant_triangle():
    d = Diagram.from_pairs([(0, 4), (1, 2)], 4)
    g = Grid(0, 4, 1001)
    dominant = np.array([tent(0, 4, t) for t in g.nodes])
    assert np.max(np.abs(silhouette_on_grid(d, 50, g).values - dominant)) <= 0.05


def test_empty_diagram_zero():
    assert not silhouette_on_grid(Diagram.from_pairs([], 2), 1, Grid(0, 2, 5)).values.any()


@pytest.mark.parametrize("p", [0, -1, float("nan"), "x"])
def test_bad_power(p):
    with pytest.raises(ValidationError):
        silhouette_at(Diagram.from_pairs([(0, 1)], 1), p, 0.5)


def test_weights_do_not_overflow():
    w = silhouette_weights(np.array([1e-3, 1.0, 1e3]), 200)
    assert np.all(np.isfinite(w)) and w[-1] == 1.0


T = 10.0
pair = st.tuples(st.floats(0, T), st.floats(0, T)).map(lambda x: (min(x), max(x))).filter(lambda x: x[1] > x[0])
powers = st.one_of(st.floats(0.01, 64), st.just(INF))


@settings(max_examples=300)
@given(st.lists(pair, min_size=1, max_size=20), powers, st.floats(-1, T + 1), st.floats(-1, T + 1))
def test_convex_combination_and_lipschitz(pairs, p, t, s):
    d = Diagram.from_pairs(pairs, T)
    tents = _tents(d.births, d.deaths, [t])[:, 0]
    phi_t = silhouette_at(d, p, t)
    assert tents.min() - 1e-12 <= phi_t <= landscape_at(d, 1, t) + 1e-12
    assert abs(phi_t - silhouette_at(d, p, s)) <= abs(t - s) + 1e-12


@settings(max_examples=200)
@given(st.lists(pair, min_size=1, max_size=10), st.floats(0.05, 8), st.floats(0.1, 10), st.floats(0, T))
def test_scale_equivariance(pairs, p, c, t):
    d = Diagram.from_pairs(pairs, T)
    scaled = Diagram(c * d.births, c * d.deaths, c * T)
    assert silhouette_at(scaled, p, c * t) == pytest.approx(c * silhouette_at(d, p, t), rel=1e-9, abs=1e-9)


POWERS = [1, 2, 4, 8, 16, 32, 64]


def test_two_pair_dominance_is_monotone(rng):
    t = np.linspace(0, T, 2001)
    for _ in range(300):
        b = rng.uniform(0, 5, 2)
        d = Diagram(b, b + rng.uniform(0.01, 5, 2), T)
        j = int(np.argmax(d.persistences))
        if np.unique(d.persistences).size < 2:
            continue
        star = _tents(d.births[[j]], d.deaths[[j]], t)[0]
        dist = [np.abs(silhouette_values(d, p, t) - star).max() for p in POWERS]
        assert all(b <= a + 1e-12 for a, b in zip(dist, dist[1:]))


def test_dominance_bound(rng):
    # sup |phi_p - tent_*| <= (1 - w_*) * max_j sup |tent_j - tent_*|, and w_* grows with p
    t = np.linspace(0, T, 2001)
    for _ in range(300):
        m = int(rng.integers(2, 8))
        b = rng.uniform(0, 5, m)
        d = Diagram(b, b + rng.uniform(0.01, 5, m), T)
        j = int(np.argmax(d.persistences))
        if np.sum(d.persistences == d.persistences.max()) > 1:
            continue
        tents = _tents(d.births, d.deaths, t)
        spread = np.abs(tents - tents[j]).max()
        bounds = []
        for p in POWERS:
            w_star = silhouette_weights(d.persistences, p)[j]
            dist = np.abs(silhouette_values(d, p, t) - tents[j]).max()
            bound = (1 - w_star) * spread
            assert dist <= bound + 1e-12
            bounds.append(bound)
        assert all(b <= a + 1e-12 for a, b in zip(bounds, bounds[1:]))


def test_estimator():
    diagrams = [Diagram.from_pairs([(0, 2), (1, 3)], 3), Diagram.from_pairs([(0.5, 1)], 3)]
    est = PowerWeightedSilhouette(p=INF, resolution=7)
    X = est.fit_transform(diagrams)
    assert X.shape == (2, 7)
    assert math.isinf(est.summaries(diagrams)[0].param)


def test_infinite_power_ties_up_to_rounding():
    # 0.1 + 0.2 - 0.1 != 0.2 in floating point; both pairs still tie
    d = Diagram.from_pairs([(0.0, 0.2), (0.1, 0.1 + 0.2)], 1.0)
    assert d.persistences[0] != d.persistences[1]
    assert silhouette_weights(d.persistences, math.inf, 1.0).tolist() == [0.5, 0.5]
    assert silhouette_at(d, math.inf, 0.1) == pytest.approx(silhouette_at(d, 1.0, 0.1), abs=1e-15)
