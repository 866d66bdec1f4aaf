import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from oracles import quantile_by_scan
from tda_bands import (
    BootstrapConfig,
    Grid,
    MultiplierBootstrapBand,
    NoPositiveVarianceError,
    Sample,
    SummaryFunction,
    ValidationError,
    bootstrap_sup,
    confidence_band,
    empirical_quantile,
    mean_summary,
    sigma_hat,
    studentized_sup,
)
from tda_bands import _rng

G3 = Grid(0, 2, 3)


def sample(*rows, grid=G3):
    return Sample.from_matrix(np.array(rows, dtype=float), grid, "landscape", 1, 2.0)


def test_mean_identical():
    s = sample([0, 0.3, 0.1], [0, 0.3, 0.1])
    assert mean_summary(s).values.tolist() == [0, 0.3, 0.1]


def test_mean_arithmetic():
    assert mean_summary(sample([0, 1, 0], [0, 3, 0])).values.tolist() == [0, 2, 0]


def test_mean_single_function():
    assert mean_summary(sample([0, 0.7, 0.2])).values.tolist() == [0, 0.7, 0.2]
    assert mean_summary(sample([0, 0.7, 0.2])).kind == "mean"


def test_mean_mismatched_grids():
    a = SummaryFunction(G3, [0, 1, 0], "landscape", 1)
    b = SummaryFunction(Grid(0, 3, 3), [0, 1, 0], "landscape", 1)
    with pytest.raises(ValidationError):
        Sample((a, b))
    c = SummaryFunction(G3, [0, 1, 0], "silhouette", 1.0)
    with pytest.raises(ValidationError):
        Sample((a, c))


def test_sigma_hat():
    assert sigma_hat(sample([0, 1, 0], [0, 3, 0])).values.tolist() == [0, 1, 0]
    assert not sigma_hat(sample([0, 0.3, 0.1], [0, 0.3, 0.1])).values.any()
    with pytest.raises(ValidationError):
        sigma_hat(sample([0, 1, 0]))


def test_sigma_hat_matches_second_moment_formula(rng):
    X = rng.uniform(0, 1, (12, 3))
    direct = np.sqrt(np.maximum((X**2).mean(0) - X.mean(0) ** 2, 0))
    assert np.allclose(sigma_hat(sample(*X)).values, direct, atol=1e-12)


def test_bootstrap_sup():
    s = sample([0, 1, 0], [0, 3, 0])
    assert bootstrap_sup(s, [1, -1]) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert bootstrap_sup(s, [0, 0]) == 0
    assert bootstrap_sup(sample([0, 1, 0], [0, 1, 0]), [0.3, 2.0]) == 0
    with pytest.raises(ValidationError):
        bootstrap_sup(s, [1, 2, 3])


def test_studentized_sup():
    s = sample([0, 1, 0], [0, 3, 0])
    unit = SummaryFunction(G3, [0, 1, 0])
    two = SummaryFunction(G3, [0, 2, 0])
    assert studentized_sup(s, [1, -1], unit) == pytest.approx(math.sqrt(2))
    assert studentized_sup(s, [1, -1], two) == pytest.approx(math.sqrt(2) / 2)
    same = sample([0, 1, 0], [0, 1, 0])
    with pytest.raises(NoPositiveVarianceError, match="no positive-variance region"):
        studentized_sup(same, [1, -1], sigma_hat(same))


@pytest.mark.parametrize("alpha, expected", [(0.25, 3), (0.5, 2)])
def test_empirical_quantile(alpha, expected):
    assert empirical_quantile([1, 2, 3, 4], alpha) == expected
    assert quantile_by_scan([1, 2, 3, 4], alpha, np.linspace(0, 5, 5001)) == expected


def test_empirical_quantile_zeros():
    assert empirical_quantile(np.zeros(10), 0.05) == 0


def test_ceiling_order_statistic(rng):
    for _ in range(100):
        B = int(rng.integers(1, 60))
        theta = rng.exponential(size=B)
        alpha = float(rng.uniform(0.01, 0.99))
        q = empirical_quantile(theta, alpha)
        assert q in theta
        assert q == quantile_by_scan(theta, alpha, theta)
        assert q == np.sort(theta)[math.ceil((1 - alpha) * B - 1e-9) - 1]


@settings(max_examples=200)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=50), st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_quantile_monotone_in_alpha(theta, a1, a2):
    a1, a2 = sorted((a1, a2))
    assert empirical_quantile(theta, a1) >= empirical_quantile(theta, a2)
    assert empirical_quantile(theta, a1) in theta


def test_identical_sample_uniform_band():
    s = sample([0, 1, 0.5], [0, 1, 0.5], [0, 1, 0.5])
    res = confidence_band(s, BootstrapConfig(0.05, 200, seed=3))
    assert res.quantile == 0
    assert np.array_equal(res.band.lower, res.band.upper)
    assert np.array_equal(res.band.lower, res.mean.values)
    assert res.band.theorem_region is None


def test_identical_sample_adaptive_raises():
    s = sample([0, 1, 0.5], [0, 1, 0.5])
    with pytest.raises(NoPositiveVarianceError):
        confidence_band(s, BootstrapConfig(band="adaptive", n_bootstrap=10))


def test_forced_multiplier_uniform_band():
    s = sample([0, 1, 0], [0, 3, 0])
    res = confidence_band(s, BootstrapConfig(0.5, 1, band="uniform"), multipliers=[[1, -1]])
    assert res.quantile == pytest.approx(math.sqrt(2))
    assert res.band.lower[1] == pytest.approx(1) and res.band.upper[1] == pytest.approx(3)


def test_forced_multiplier_adaptive_band():
    s = sample([0, 1, 0], [0, 3, 0])
    res = confidence_band(s, BootstrapConfig(0.5, 1, band="adaptive"), multipliers=[[1, -1]])
    assert res.sigma_hat.values[1] == 1
    assert res.quantile == pytest.approx(math.sqrt(2))
    assert res.band.lower[1] == pytest.approx(1) and res.band.upper[1] == pytest.approx(3)
    assert res.band.theorem_region == (1, 1)


def random_sample(rng, n=20, res=41):
    X = rng.uniform(0, 1, (n, res)) * np.sin(np.linspace(0, np.pi, res))
    return Sample.from_matrix(X, Grid(0, 2, res), "landscape", 1, 2.0)


def test_uniform_width_identity(rng):
    s = random_sample(rng)
    res = confidence_band(s, BootstrapConfig(0.1, 300, seed=11))
    assert np.all(res.band.half_width == res.quantile / math.sqrt(s.n))
    assert np.allclose(res.band.width, 2 * res.quantile / math.sqrt(s.n), rtol=0, atol=1e-15)
    assert np.all(res.band.lower <= res.mean.values) and np.all(res.mean.values <= res.band.upper)
    assert np.all(res.sup_stats >= 0) and res.quantile >= 0


def test_adaptive_width_identity(rng):
    s = random_sample(rng)
    res = confidence_band(s, BootstrapConfig(0.1, 300, seed=11, band="adaptive"))
    inc = res.band.included
    assert not inc[0] and not inc[-1] and inc[1:-1].all()
    half = res.quantile * res.sigma_hat.values / math.sqrt(s.n)
    assert np.all(res.band.half_width[inc] == half[inc])
    assert np.allclose(res.band.width[inc], 2 * half[inc], rtol=0, atol=1e-15)
    assert np.allclose(res.band.width[~inc], 2 * res.quantile / math.sqrt(s.n))


def test_sup_stats_match_single_replicate_ops(rng):
    s = random_sample(rng, n=7, res=11)
    cfg = BootstrapConfig(0.2, 5, seed=99)
    res = confidence_band(s, cfg)
    for j in range(5):
        xi = _rng.standard_normals(99, j, 7)
        assert res.sup_stats[j] == pytest.approx(bootstrap_sup(s, xi), rel=1e-12)
    ares = confidence_band(s, BootstrapConfig(0.2, 5, seed=99, band="adaptive"))
    sd = sigma_hat(s)
    floor = cfg.floor_for(2.0)
    for j in range(5):
        xi = _rng.standard_normals(99, j, 7)
        assert ares.sup_stats[j] == pytest.approx(studentized_sup(s, xi, sd, floor), rel=1e-12)


def test_determinism_across_threads(rng):
    s = random_sample(rng, n=15, res=51)
    cfg = BootstrapConfig(0.05, 1000, seed=2**64 - 1, band="adaptive")
    a = confidence_band(s, cfg, n_jobs=1)
    b = confidence_band(s, cfg, n_jobs=8)
    assert np.array_equal(a.sup_stats, b.sup_stats)
    assert np.array_equal(a.band.lower, b.band.lower) and a.quantile == b.quantile


def test_multipliers_look_standard_normal():
    xi = _rng.multiplier_matrix(5, 200, 100).ravel()
    assert abs(xi.mean()) < 0.02 and abs(xi.std() - 1) < 0.02
    assert np.array_equal(_rng.standard_normals(5, 17, 100), _rng.multiplier_matrix(5, 1, 100, start=17)[0])


@pytest.mark.parametrize("kw", [dict(alpha=0), dict(alpha=1), dict(n_bootstrap=0), dict(band="x"), dict(seed=-1)])
def test_bad_config(kw):
    with pytest.raises(ValidationError):
        BootstrapConfig(**kw)


def test_estimator(rng):
    X = random_sample(rng).matrix
    est = MultiplierBootstrapBand(alpha=0.1, n_bootstrap=200, band="adaptive", seed=4, t_max=2.0)
    est.fit(X)
    lower, upper = est.predict()
    assert np.all(lower <= est.mean_) and np.all(est.mean_ <= upper)
    assert est.contains(est.mean_)
    assert est.score(est.mean_) == 1.0
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()
    assert np.array_equal(cloned.fit(X).upper_, est.upper_)
