"""Triangle functions, persistence landscapes, and grid-sampled summaries."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .diagram import Diagram, PersistencePair
from .exceptions import ParseError, ValidationError

SUMMARY_KINDS = ("landscape", "silhouette", "mean", "other")
LIPSCHITZ_SLACK = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``t_j = t_min + j * (t_max - t_min) / (resolution - 1)``."""

    t_min: float
    t_max: float
    resolution: int

    def __post_init__(self):
        t_min, t_max = float(self.t_min), float(self.t_max)
        if not (math.isfinite(t_min) and math.isfinite(t_max)):
            raise ValidationError("grid bounds must be finite")
        if t_min < 0:
            raise ValidationError(f"grid t_min must be >= 0, got {t_min!r}")
        if not t_min < t_max:
            raise ValidationError(f"grid needs t_min < t_max, got [{t_min!r}, {t_max!r}]")
        if int(self.resolution) != self.resolution or self.resolution < 2:
            raise ValidationError(f"grid resolution must be an integer >= 2, got {self.resolution!r}")
        object.__setattr__(self, "t_min", t_min)
        object.__setattr__(self, "t_max", t_max)
        object.__setattr__(self, "resolution", int(self.resolution))

    @property
    def step(self) -> float:
        return (self.t_max - self.t_min) / (self.resolution - 1)

    @property
    def nodes(self) -> np.ndarray:
        t = self.t_min + np.arange(self.resolution) * self.step
        t[-1] = self.t_max
        return t

    def check_within(self, t_bound: float):
        if self.t_max > t_bound:
            raise ValidationError(f"grid [{self.t_min!r}, {self.t_max!r}] exceeds [0, {t_bound!r}]")


@dataclass(frozen=True, eq=False)
class SummaryFunction:
    """A summary function sampled on a :class:`Grid`.

    ``param`` is ``k`` for landscapes and ``p`` for silhouettes (``inf``
    allowed), ``None`` otherwise.
    """

    grid: Grid
    values: np.ndarray
    kind: str = "other"
    param: float | int | None = None
    t_bound: float | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.shape[0] != self.grid.resolution:
            raise ValidationError(
                f"{vals.shape[0]} values for a grid of resolution {self.grid.resolution}"
            )
        if self.kind not in SUMMARY_KINDS:
            raise ValidationError(f"unknown summary kind {self.kind!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        t_bound = self.grid.t_max if self.t_bound is None else float(self.t_bound)
        object.__setattr__(self, "t_bound", t_bound)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def same_domain(self, other: "SummaryFunction") -> bool:
        return self.grid == other.grid and self.kind == other.kind and self.param == other.param

    def __eq__(self, other):
        if not isinstance(other, SummaryFunction):
            return NotImplemented
        return (
            self.same_domain(other)
            and self.t_bound == other.t_bound
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def _tents(births, deaths, t):
    """Triangle values, shape (len(births), len(t))."""
    b = np.asarray(births, dtype=float)[:, None]
    d = np.asarray(deaths, dtype=float)[:, None]
    t = np.asarray(t, dtype=float)[None, :]
    mid = (b + d) / 2
    rising = (t >= b) & (t <= mid)
    falling = (t > mid) & (t <= d)
    return np.where(rising, t - b, np.where(falling, d - t, 0.0))


def triangle(pair, t: float) -> float:
    """Tent of height (d - b)/2 over [b, d] peaked at the midpoint."""
    pair = PersistencePair(*pair) if not isinstance(pair, PersistencePair) else pair
    return float(_tents([pair.birth], [pair.death], [t])[0, 0])


def _kth_largest(values: np.ndarray, k: int) -> np.ndarray:
    """k-th largest along axis 0, 0 where fewer than k rows."""
    m = values.shape[0]
    if k > m:
        return np.zeros(values.shape[1:])
    return -np.partition(-values, k - 1, axis=0)[k - 1]


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k!r}")
    return int(k)


def landscape_values(d: Diagram, k: int, t) -> np.ndarray:
    k = _check_k(k)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if len(d) < k:
        return np.zeros(t.shape)
    return _kth_largest(_tents(d.births, d.deaths, t), k)


def landscape_at(d: Diagram, k: int, t: float) -> float:
    return float(landscape_values(d, k, [t])[0])


def landscape_on_grid(d: Diagram, k: int, grid: Grid) -> SummaryFunction:
    grid.check_within(d.t_bound)
    return SummaryFunction(grid, landscape_values(d, k, grid.nodes), "landscape", _check_k(k), d.t_bound)


def check_summary_bounds(f: SummaryFunction, tol: float = LIPSCHITZ_SLACK) -> None:
    """Raise unless values lie in [0, T/2] and are one-Lipschitz on the nodes."""
    v = f.values
    if np.any(v < 0) or np.any(v > f.t_bound / 2 + tol):
        raise ValidationError("summary values outside [0, T/2]")
    if f.kind in ("landscape", "silhouette"):
        if np.any(np.abs(np.diff(v)) > np.diff(f.grid.nodes) + tol):
            raise ValidationError("summary is not one-Lipschitz on the grid")


# -- CSV ---------------------------------------------------------------------


def _format_param(p):
    if p is None:
        return None
    if isinstance(p, float) and math.isinf(p):
        return "inf"
    return repr(p)


def write_summary(f: SummaryFunction, comments: Iterable[str] = ()) -> str:
    """CSV ``t,value`` with ``# key=value`` header lines describing the grid."""
    lines = [f"# {c}" for c in comments]
    lines.append(f"# kind={f.kind}")
    if f.param is not None:
        lines.append(f"# {'k' if f.kind == 'landscape' else 'p'}={_format_param(f.param)}")
    lines += [
        f"# t_min={f.grid.t_min!r}",
        f"# t_max={f.grid.t_max!r}",
        f"# resolution={f.grid.resolution}",
        f"# t_bound={f.t_bound!r}",
        "t,value",
    ]
    lines.extend(f"{t!r},{v!r}" for t, v in zip(f.t.tolist(), f.values.tolist()))
    return "\n".join(lines) + "\n"


def read_summary(text) -> SummaryFunction:
    if isinstance(text, str):
        text = io.StringIO(text)
    header: dict[str, str] = {}
    ts, vals = [], []
    for lineno, raw in enumerate(text, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body and " " not in body.split("=", 1)[0]:
                key, value = body.split("=", 1)
                header[key.strip()] = value.strip()
            continue
        fields = line.split(",")
        if fields[0].strip() == "t":
            continue
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields (t,value), got {len(fields)}", lineno)
        try:
            ts.append(float(fields[0]))
            vals.append(float(fields[1]))
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", lineno) from None
    if len(ts) < 2:
        raise ParseError("summary needs at least 2 rows")
    try:
        grid = Grid(
            float(header.get("t_min", ts[0])),
            float(header.get("t_max", ts[-1])),
            int(header.get("resolution", len(ts))),
        )
    except ValueError as exc:
        raise ParseError(f"bad grid header: {exc}") from None
    if grid.resolution != len(ts):
        raise ParseError(f"header resolution {grid.resolution} but {len(ts)} rows")
    kind = header.get("kind", "other")
    param = None
    if "k" in header:
        param = int(header["k"])
    elif "p" in header:
        param = float(header["p"])
    t_bound = float(header["t_bound"]) if "t_bound" in header else None
    return SummaryFunction(grid, np.array(vals), kind, param, t_bound)


# -- estimator ---------------------------------------------------------------


def fit_t_bound(diagrams: Iterable[Diagram]) -> float:
    bounds = [d.t_bound for d in diagrams]
    if not bounds:
        raise ValidationError("need at least one diagram")
    return max(bounds)


class _GridSummary(TransformerMixin, BaseEstimator):
    """Shared fit logic: resolve the grid from the diagrams' common bound."""

    def fit(self, X, y=None):
        X = list(X)
        t_bound = fit_t_bound(X)
        t_max = t_bound if self.t_max is None else self.t_max
        self.grid_ = Grid(self.t_min, t_max, self.resolution)
        self.grid_.check_within(t_bound)
        self.t_bound_ = t_bound
        return self

    def transform(self, X):
        """Return an array of shape (n_diagrams, resolution)."""
        check_is_fitted(self, "grid_")
        rows = [self._summary(d).values for d in X]
        if not rows:
            return np.empty((0, self.grid_.resolution))
        return np.vstack(rows)

    def summaries(self, X) -> list[SummaryFunction]:
        check_is_fitted(self, "grid_")
        return [self._summary(d) for d in X]


class PersistenceLandscape(_GridSummary):
    """k-th persistence landscape sampled on a uniform grid.

    Parameters
    ----------
    k : int, default=1
    t_min : float, default=0.0
    t_max : float or None, default=None
        Upper grid bound; ``None`` uses the largest diagram bound seen in ``fit``.
    resolution : int, default=1000
    """

    def __init__(self, k=1, t_min=0.0, t_max=None, resolution=1000):
        self.k = k
        self.t_min = t_min
        self.t_max = t_max
        self.resolution = resolution

    def _summary(self, d):
        vals = landscape_values(d, self.k, self.grid_.nodes)
        return SummaryFunction(self.grid_, vals, "landscape", _check_k(self.k), self.t_bound_)
