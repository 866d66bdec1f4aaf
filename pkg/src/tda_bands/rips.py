"""Vietoris-Rips filtrations and their H0/H1 persistence over GF(2).

H0 comes from a union-find pass over the edges in filtration order.  H1 is
computed by reducing the coboundary matrix of the edges (persistent
cohomology), skipping every edge that already killed an H0 class.  Both
routes give the same pairing as a plain boundary-matrix reduction under the
same total order of simplices.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .diagram import Diagram
from .exceptions import EssentialClassError, ParseError, ValidationError

ESSENTIAL_POLICIES = ("reject", "truncate")


def check_point_cloud(points) -> np.ndarray:
    """Return ``points`` as a finite float array of shape (n_points, n_dims)."""
    if isinstance(points, np.ndarray):
        arr = points
    else:
        rows = list(points)
        if not rows:
            raise ValidationError("point cloud is empty")
        lengths = {len(np.atleast_1d(r)) for r in rows}
        if len(lengths) != 1:
            raise ValidationError(f"points have mismatched dimensions {sorted(lengths)}")
        arr = np.array([np.atleast_1d(r) for r in rows])
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValidationError(f"expected a 2-d array of points, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValidationError("point cloud is empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("point cloud contains non-finite coordinates")
    return arr


def read_point_cloud(text) -> np.ndarray:
    """One point per row, comma-separated coordinates; ``#`` lines skipped."""
    if isinstance(text, str):
        text = io.StringIO(text)
    rows = []
    width = None
    for lineno, raw in enumerate(text, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = [float(f) for f in line.split(",")]
        except ValueError:
            raise ParseError(f"non-numeric coordinate in {line!r}", lineno) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"expected {width} coordinates, got {len(row)}", lineno)
        rows.append(row)
    return check_point_cloud(np.array(rows) if rows else [])


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(dist, 0.0)
    return dist


@dataclass(frozen=True)
class FilteredComplex:
    """Rips complex up to dimension 2, stored per dimension in filtration order.

    ``edges``/``triangles`` hold sorted vertex indices, one simplex per row,
    sorted by (value, lexicographic vertices).  Vertices all enter at 0.
    """

    n_vertices: int
    edges: np.ndarray
    edge_values: np.ndarray
    triangles: np.ndarray
    triangle_values: np.ndarray
    max_dim: int
    max_scale: float

    @property
    def max_value(self) -> float:
        vals = [0.0]
        if len(self.edge_values):
            vals.append(float(self.edge_values[-1]))
        if len(self.triangle_values):
            vals.append(float(self.triangle_values[-1]))
        return max(vals)

    def __len__(self):
        return self.n_vertices + len(self.edges) + len(self.triangles)

    def simplices(self) -> Iterator[tuple[tuple[int, ...], float]]:
        """All simplices ordered by (value, dimension, lexicographic vertices)."""
        items = [((0.0, 0, (v,)), (v,)) for v in range(self.n_vertices)]
        items += [
            ((val, 1, tuple(e)), tuple(e))
            for e, val in zip(self.edges.tolist(), self.edge_values.tolist())
        ]
        items += [
            ((val, 2, tuple(t)), tuple(t))
            for t, val in zip(self.triangles.tolist(), self.triangle_values.tolist())
        ]
        items.sort(key=lambda it: it[0])
        for key, simplex in items:
            yield simplex, key[0]


def _sort_simplices(verts: np.ndarray, values: np.ndarray):
    if len(values) == 0:
        return verts, values
    keys = [verts[:, c] for c in reversed(range(verts.shape[1]))] + [values]
    order = np.lexsort(keys)
    return verts[order], values[order]


def build_rips(points, max_scale: float, max_dim: int = 2) -> FilteredComplex:
    """Every simplex of dimension <= ``max_dim`` with diameter <= ``max_scale``."""
    pts = check_point_cloud(points)
    if not max_scale >= 0:
        raise ValidationError(f"max_scale must be non-negative, got {max_scale!r}")
    if max_dim not in (0, 1, 2):
        raise ValidationError(f"max_dim must be 0, 1 or 2, got {max_dim!r}")
    n = pts.shape[0]
    dist = pairwise_distances(pts)
    adj = dist <= max_scale

    edges = np.empty((0, 2), dtype=np.int64)
    edge_values = np.empty(0)
    if max_dim >= 1:
        i, j = np.nonzero(np.triu(adj, k=1))
        edges = np.stack([i, j], axis=1).astype(np.int64)
        edge_values = dist[i, j]

    tri_blocks, val_blocks = [], []
    if max_dim >= 2:
        for a in range(n - 2):
            nbrs = np.flatnonzero(adj[a, a + 1:]) + a + 1
            if len(nbrs) < 2:
                continue
            sub = np.triu(adj[np.ix_(nbrs, nbrs)], k=1)
            bj, bk = np.nonzero(sub)
            if len(bj) == 0:
                continue
            b, c = nbrs[bj], nbrs[bk]
            vals = np.maximum(np.maximum(dist[a, b], dist[a, c]), dist[b, c])
            tri_blocks.append(np.stack([np.full_like(b, a), b, c], axis=1))
            val_blocks.append(vals)
    if tri_blocks:
        triangles = np.concatenate(tri_blocks).astype(np.int64)
        triangle_values = np.concatenate(val_blocks)
    else:
        triangles = np.empty((0, 3), dtype=np.int64)
        triangle_values = np.empty(0)

    edges, edge_values = _sort_simplices(edges, edge_values)
    triangles, triangle_values = _sort_simplices(triangles, triangle_values)
    return FilteredComplex(
        n_vertices=n,
        edges=edges,
        edge_values=edge_values,
        triangles=triangles,
        triangle_values=triangle_values,
        max_dim=max_dim,
        max_scale=float(max_scale),
    )


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> bool:
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        self.parent[y] = x
        if self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        return True


def _h0(cx: FilteredComplex):
    """Finite H0 deaths, the number of essential components, and the killer-edge mask."""
    uf = _UnionFind(cx.n_vertices)
    negative = np.zeros(len(cx.edges), dtype=bool)
    deaths = []
    for idx, (u, v) in enumerate(cx.edges.tolist()):
        if uf.union(u, v):
            negative[idx] = True
            deaths.append(float(cx.edge_values[idx]))
    n_essential = cx.n_vertices - len(deaths)
    return deaths, n_essential, negative


def _edge_cofaces(cx: FilteredComplex):
    """CSR map edge index -> ascending filtration ranks of its cofacet triangles."""
    n_edges = len(cx.edges)
    if len(cx.triangles) == 0 or n_edges == 0:
        return np.zeros(n_edges + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    n = cx.n_vertices
    edge_code = cx.edges[:, 0] * n + cx.edges[:, 1]
    code_order = np.argsort(edge_code)
    sorted_codes = edge_code[code_order]
    t = cx.triangles
    faces = np.concatenate([t[:, 0] * n + t[:, 1], t[:, 0] * n + t[:, 2], t[:, 1] * n + t[:, 2]])
    ranks = np.tile(np.arange(len(t), dtype=np.int64), 3)
    face_edge = code_order[np.searchsorted(sorted_codes, faces)]
    order = np.lexsort((ranks, face_edge))
    face_edge, ranks = face_edge[order], ranks[order]
    indptr = np.zeros(n_edges + 1, dtype=np.int64)
    np.add.at(indptr, face_edge + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, ranks


def _h1(cx: FilteredComplex, negative: np.ndarray):
    """H1 (birth, death) pairs and essential births via coboundary reduction.

    Columns are the edges in reverse filtration order; the pivot of a column
    is its earliest cofacet triangle.  Edges that killed an H0 class are
    cleared up front since their columns reduce to zero.
    """
    indptr, ranks = _edge_cofaces(cx)
    pivots: dict[int, frozenset] = {}
    pairs, essential = [], []
    ev, tv = cx.edge_values, cx.triangle_values
    for e in range(len(cx.edges) - 1, -1, -1):
        if negative[e]:
            continue
        lo, hi = indptr[e], indptr[e + 1]
        if lo == hi:
            essential.append(float(ev[e]))
            continue
        first = int(ranks[lo])
        if first not in pivots:
            pivots[first] = frozenset(ranks[lo:hi].tolist())
            pairs.append((float(ev[e]), float(tv[first])))
            continue
        col = set(ranks[lo:hi].tolist())
        while col:
            low = min(col)
            other = pivots.get(low)
            if other is None:
                pivots[low] = frozenset(col)
                pairs.append((float(ev[e]), float(tv[low])))
                break
            col.symmetric_difference_update(other)
        else:
            essential.append(float(ev[e]))
    return pairs, essential


def persistence(
    cx: FilteredComplex,
    t_bound: float,
    essential: str = "reject",
    dims: Sequence[int] | None = None,
) -> dict[int, Diagram]:
    """Diagrams of the Rips filtration, keyed by homology dimension.

    ``dims`` defaults to every dimension the complex can resolve (H0, plus H1
    when edges are present).  Essential classes in the requested dimensions
    either raise :class:`EssentialClassError` or die at ``t_bound``.
    """
    if essential not in ESSENTIAL_POLICIES:
        raise ValidationError(f"essential must be one of {ESSENTIAL_POLICIES}, got {essential!r}")
    if not t_bound >= cx.max_value or not t_bound > 0:
        raise ValidationError(
            f"t_bound {t_bound!r} must be positive and >= max filtration value {cx.max_value!r}"
        )
    available = (0, 1) if cx.max_dim >= 1 else (0,)
    dims = available if dims is None else tuple(dims)
    for d in dims:
        if d not in available:
            raise ValidationError(f"H{d} is not computable from a complex with max_dim={cx.max_dim}")

    h0_deaths, h0_essential, negative = _h0(cx)
    out_pairs: dict[int, list] = {}
    out_essential: dict[int, list] = {}
    if 0 in dims:
        out_pairs[0] = [(0.0, d) for d in h0_deaths]
        out_essential[0] = [0.0] * h0_essential
    if 1 in dims:
        if cx.max_dim >= 2:
            out_pairs[1], out_essential[1] = _h1(cx, negative)
        else:
            out_pairs[1] = []
            out_essential[1] = [float(v) for v in cx.edge_values[~negative]]

    offending = [d for d in dims if out_essential[d]]
    if offending and essential == "reject":
        raise EssentialClassError(offending)
    result = {}
    for d in dims:
        pairs = out_pairs[d] + [(b, float(t_bound)) for b in out_essential[d]]
        result[d] = Diagram.from_pairs(pairs, t_bound, d)
    return result


def rips_diagram(points, max_scale: float, dim: int = 1, t_bound: float | None = None,
                 essential: str = "truncate") -> Diagram:
    """Shortcut: point cloud -> diagram in one homology dimension."""
    cx = build_rips(points, max_scale, max_dim=2 if dim >= 1 else 1)
    t_bound = float(max_scale) if t_bound is None else t_bound
    return persistence(cx, t_bound, essential=essential, dims=(dim,))[dim]


class RipsPersistence(TransformerMixin, BaseEstimator):
    """Map point clouds to persistence diagrams of one homology dimension.

    Parameters
    ----------
    max_scale : float
        Largest filtration value included in the Rips complex.
    homology_dim : int, default=1
        0 or 1.
    t_bound : float or None, default=None
        Diagram bound T; ``None`` means ``max_scale``.
    essential : {'truncate', 'reject'}, default='truncate'
    """

    def __init__(self, max_scale=1.0, homology_dim=1, t_bound=None, essential="truncate"):
        self.max_scale = max_scale
        self.homology_dim = homology_dim
        self.t_bound = t_bound
        self.essential = essential

    def fit(self, X, y=None):
        if self.homology_dim not in (0, 1):
            raise ValidationError("homology_dim must be 0 or 1")
        if not self.max_scale > 0:
            raise ValidationError("max_scale must be positive")
        self.t_bound_ = float(self.max_scale if self.t_bound is None else self.t_bound)
        return self

    def transform(self, X):
        check_is_fitted(self, "t_bound_")
        return [
            rips_diagram(cloud, self.max_scale, self.homology_dim, self.t_bound_, self.essential)
            for cloud in X
        ]
