import math

import numpy as np
import pytest

from oracles import naive_persistence, rips_simplices
from tda_bands import EssentialClassError, RipsPersistence, ValidationError, build_rips, persistence
from tda_bands.rips import pairwise_distances, read_point_cloud

SQRT2 = math.sqrt(2)


def test_two_points():
    cx = build_rips([[0.0], [1.0]], 2)
    assert cx.n_vertices == 2
    assert cx.edges.tolist() == [[0, 1]] and cx.edge_values.tolist() == [1.0]
    assert len(cx.triangles) == 0


def test_unit_square_complex(square):
    cx = build_rips(square, 2)
    assert sorted(cx.edge_values.tolist()) == [1, 1, 1, 1, SQRT2, SQRT2]
    assert len(cx.triangles) == 4
    assert np.allclose(cx.triangle_values, SQRT2)
    assert len(cx) == 14


def test_unit_square_matches_enumeration(square):
    cx = build_rips(square, 2)
    expected = rips_simplices(square.tolist(), 2)
    assert [(s, v) for s, v in cx.simplices()] == [(s, pytest.approx(v)) for s, v in expected]


def test_zero_scale_vertices_only(rng):
    cx = build_rips(rng.normal(size=(6, 3)), 0.0)
    assert cx.n_vertices == 6 and len(cx.edges) == 0 and len(cx.triangles) == 0


def test_dimension_mismatch():
    with pytest.raises(ValidationError, match="mismatched"):
        build_rips([[0, 0], [1, 0, 0]], 1)


def test_filtration_is_monotone(rng):
    cx = build_rips(rng.uniform(size=(9, 2)), 0.8)
    seen = {}
    prev = None
    for simplex, value in cx.simplices():
        key = (value, len(simplex), simplex)
        assert prev is None or key > prev
        prev = key
        for face in (simplex[:i] + simplex[i + 1:] for i in range(len(simplex))) if len(simplex) > 1 else ():
            assert face in seen and seen[face] <= value
        seen[simplex] = value


def test_square_h1(square):
    dgms = persistence(build_rips(square, 2), t_bound=2, essential="truncate")
    assert len(dgms[1]) == 1
    b, d, _ = dgms[1].pairs[0]
    assert b == pytest.approx(1, abs=1e-9) and d == pytest.approx(SQRT2, abs=1e-9)


def test_square_h0_truncate(square):
    dgms = persistence(build_rips(square, 2), t_bound=2, essential="truncate")
    assert sorted(dgms[0].deaths.tolist()) == [1.0, 1.0, 1.0, 2.0]
    assert set(dgms[0].births.tolist()) == {0.0}


def test_collinear_points_no_h1():
    dgms = persistence(build_rips([[0.0], [1.0], [2.0]], 2), t_bound=2, essential="truncate")
    assert len(dgms[1]) == 0


def test_reject_lists_dimension(square):
    cx = build_rips(square, 2)
    with pytest.raises(EssentialClassError, match="H0") as info:
        persistence(cx, 2)
    assert info.value.dims == (0,)
    assert len(persistence(cx, 2, dims=(1,))[1]) == 1
    with pytest.raises(EssentialClassError, match="H1"):
        persistence(build_rips(square, 1.2), 2, dims=(1,))


def test_t_bound_must_cover_complex(square):
    with pytest.raises(ValidationError):
        persistence(build_rips(square, 2), t_bound=1.2)


def test_edges_only_complex_h1_is_essential(square):
    dgms = persistence(build_rips(square, 2, max_dim=1), 2, essential="truncate")
    assert sorted(dgms[1].pairs) == [(1.0, 2.0, 1), (SQRT2, 2.0, 1), (SQRT2, 2.0, 1)]


def _as_sorted(diagram, t_bound):
    return sorted((b, d if d < t_bound else math.inf) for b, d in zip(diagram.births, diagram.deaths))


@pytest.mark.parametrize("seed", range(40))
def test_matches_naive_reduction(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    pts = rng.uniform(size=(n, 2))
    scale = float(rng.uniform(0.2, 1.6))
    dist = pairwise_distances(pts).tolist()
    t_bound = 10.0
    ours = persistence(build_rips(pts, scale), t_bound, essential="truncate")
    ref = naive_persistence(pts.tolist(), scale, dist=dist)
    for dim in (0, 1):
        assert _as_sorted(ours[dim], t_bound) == ref.get(dim, [])
    assert len(ours[0]) == n


def test_pairs_use_filtration_values(rng):
    pts = rng.uniform(size=(8, 2))
    cx = build_rips(pts, 0.9)
    values = set(cx.edge_values.tolist()) | set(cx.triangle_values.tolist()) | {0.0, 5.0}
    for dgm in persistence(cx, 5.0, essential="truncate").values():
        for b, d, _ in dgm.pairs:
            assert b <= d and b in values and d in values


def test_read_point_cloud():
    pts = read_point_cloud("# header\n0,0\n1,0\n\n1,1\n")
    assert pts.shape == (3, 2)
    with pytest.raises(ValidationError):
        read_point_cloud("0,0\n1\n")


def test_transformer(square):
    est = RipsPersistence(max_scale=2, homology_dim=1)
    (dgm,) = est.fit_transform([square])
    assert len(dgm) == 1 and dgm.t_bound == 2.0
    assert est.get_params()["max_scale"] == 2
