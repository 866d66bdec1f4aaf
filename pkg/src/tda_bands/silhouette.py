"""Power-weighted silhouettes: persistence^p weighted averages of triangles."""

from __future__ import annotations

import math

import numpy as np

from .diagram import Diagram
from .exceptions import ValidationError
from .landscape import Grid, SummaryFunction, _GridSummary, _tents


def check_power(p) -> float:
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise ValidationError(f"power must be a positive real or inf, got {p!r}") from None
    if math.isnan(p) or not p > 0:
        raise ValidationError(f"power must be > 0, got {p!r}")
    return p


# persistences within this many ulps of the bound count as tied at p = inf
TIE_ULPS = 4


def silhouette_weights(persistences: np.ndarray, p: float, scale: float | None = None) -> np.ndarray:
    """Normalized weights proportional to ``persistence ** p``.

    Computed in log space so large ``p`` cannot overflow.  ``p = inf`` puts
    equal weight on the pairs of maximal persistence; ``scale`` (the diagram
    bound) sets the rounding tolerance used to detect ties, since
    ``death - birth`` carries an error of order ``eps * scale``.
    """
    pers = np.asarray(persistences, dtype=float)
    if pers.size == 0:
        return pers.copy()
    if math.isinf(p):
        scale = pers.max() if scale is None else scale
        tol = TIE_ULPS * np.finfo(float).eps * scale
        w = (pers >= pers.max() - tol).astype(float)
    else:
        logw = p * np.log(pers)
        w = np.exp(logw - logw.max())
    return w / w.sum()


def silhouette_values(d: Diagram, p, t) -> np.ndarray:
    p = check_power(p)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if len(d) == 0:
        # empty diagram: zero function, same convention as the landscape
        return np.zeros(t.shape)
    w = silhouette_weights(d.persistences, p, d.t_bound)
    return w @ _tents(d.births, d.deaths, t)


def silhouette_at(d: Diagram, p, t: float) -> float:
    return float(silhouette_values(d, p, [t])[0])


def silhouette_on_grid(d: Diagram, p, grid: Grid) -> SummaryFunction:
    grid.check_within(d.t_bound)
    return SummaryFunction(grid, silhouette_values(d, p, grid.nodes), "silhouette", check_power(p), d.t_bound)


class PowerWeightedSilhouette(_GridSummary):
    """Power-weighted silhouette sampled on a uniform grid.

    ``p`` may be ``float('inf')`` (or the string ``'inf'``).  Other parameters
    as in :class:`~tda_bands.landscape.PersistenceLandscape`.
    """

    def __init__(self, p=1.0, t_min=0.0, t_max=None, resolution=1000):
        self.p = p
        self.t_min = t_min
        self.t_max = t_max
        self.resolution = resolution

    def _summary(self, d):
        p = check_power(self.p)
        return SummaryFunction(self.grid_, silhouette_values(d, p, self.grid_.nodes), "silhouette", p, self.t_bound_)
