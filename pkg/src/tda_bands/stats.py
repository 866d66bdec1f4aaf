"""Mean summary functions and multiplier-bootstrap confidence bands.

Given summaries ``f_1 .. f_n`` on one grid, each bootstrap replicate draws
standard normal multipliers ``xi`` and records

    sup_t | n^{-1/2} sum_i xi_i (f_i(t) - mean(t)) |            (uniform)
    sup_t | n^{-1/2} sum_i xi_i (f_i(t) - mean(t)) / sd(t) |    (adaptive)

The band half-width is ``q / sqrt(n)`` (uniform) or ``q * sd(t) / sqrt(n)``
(adaptive), where ``q`` is the upper ``alpha`` empirical quantile of the
replicate sups.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import _rng
from .exceptions import NoPositiveVarianceError, ValidationError
from .landscape import Grid, SummaryFunction

BAND_KINDS = ("uniform", "adaptive")
DEFAULT_REPLICATES = 1000
RELATIVE_VARIANCE_FLOOR = 1e-8
# replicates per work unit; fixed so results do not depend on the worker count
CHUNK = 128


def resolve_threads(n_jobs=None) -> int:
    """``n_jobs`` if given, else ``$TDA_BANDS_THREADS``, else all cores."""
    if n_jobs is None:
        env = os.environ.get("TDA_BANDS_THREADS")
        n_jobs = int(env) if env else (os.cpu_count() or 1)
    n_jobs = int(n_jobs)
    if n_jobs == -1:
        n_jobs = os.cpu_count() or 1
    if n_jobs < 1:
        raise ValidationError(f"thread count must be >= 1, got {n_jobs}")
    return n_jobs


def run_ordered(func, items: Sequence, n_jobs=None) -> list:
    """Map ``func`` over ``items``; results come back in input order."""
    n_jobs = resolve_threads(n_jobs)
    if n_jobs == 1 or len(items) <= 1:
        return [func(it) for it in items]
    return Parallel(n_jobs=min(n_jobs, len(items)), prefer="threads")(delayed(func)(it) for it in items)


@dataclass(frozen=True)
class Sample:
    """n summary functions sharing one grid and kind."""

    functions: tuple

    def __post_init__(self):
        fns = tuple(self.functions)
        if not fns:
            raise ValidationError("sample is empty")
        first = fns[0]
        for i, f in enumerate(fns[1:], start=1):
            if not f.same_domain(first):
                raise ValidationError(f"function {i} has a different grid or kind than function 0")
        object.__setattr__(self, "functions", fns)

    @classmethod
    def from_matrix(cls, values, grid: Grid, kind="other", param=None, t_bound=None) -> "Sample":
        values = np.atleast_2d(np.asarray(values, dtype=float))
        return cls(tuple(SummaryFunction(grid, row, kind, param, t_bound) for row in values))

    @property
    def n(self) -> int:
        return len(self.functions)

    @property
    def grid(self) -> Grid:
        return self.functions[0].grid

    @property
    def t_bound(self) -> float:
        return max(f.t_bound for f in self.functions)

    @property
    def matrix(self) -> np.ndarray:
        return np.vstack([f.values for f in self.functions])

    def __len__(self):
        return self.n


def _mean(X: np.ndarray) -> np.ndarray:
    # shift by the first row: identical rows give their exact common value
    ref = X[0]
    return ref + (X - ref).mean(axis=0)


def _sd(X: np.ndarray, mean: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(((X - mean) ** 2).mean(axis=0), 0.0))


def _like(s: Sample, values, kind="mean") -> SummaryFunction:
    first = s.functions[0]
    return SummaryFunction(first.grid, values, kind, first.param if kind == "mean" else None, s.t_bound)


def mean_summary(s: Sample) -> SummaryFunction:
    return _like(s, _mean(s.matrix), "mean")


def sigma_hat(s: Sample) -> SummaryFunction:
    """Pointwise standard deviation with divisor n."""
    if s.n < 2:
        raise ValidationError("sigma_hat needs at least 2 functions")
    X = s.matrix
    return _like(s, _sd(X, _mean(X)), "other")


def _check_multipliers(xi, n) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.shape[0] != n:
        raise ValidationError(f"expected {n} multipliers, got shape {xi.shape}")
    return xi


def _sups(residuals: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Row-wise sup |xi @ residuals| / sqrt(n) for a (B, n) block of multipliers."""
    n = residuals.shape[0]
    return np.abs(xi @ residuals).max(axis=1) / math.sqrt(n)


def bootstrap_sup(s: Sample, xi) -> float:
    X = s.matrix
    xi = _check_multipliers(xi, s.n)
    return float(_sups(X - _mean(X), xi[None, :])[0])


def _included(sd: np.ndarray, floor: float) -> np.ndarray:
    mask = sd > floor
    if not mask.any():
        raise NoPositiveVarianceError(floor)
    return mask


def studentized_sup(s: Sample, xi, sd: SummaryFunction, floor: float = 0.0) -> float:
    """Sup of the standardized multiplier process over nodes with sd > floor."""
    X = s.matrix
    xi = _check_multipliers(xi, s.n)
    if sd.grid != s.grid:
        raise ValidationError("sigma_hat lives on a different grid")
    mask = _included(sd.values, floor)
    resid = (X - _mean(X))[:, mask] / sd.values[mask]
    return float(_sups(resid, xi[None, :])[0])


def empirical_quantile(sup_stats, alpha: float) -> float:
    """``inf{z : #{theta_j > z} / B <= alpha}``, searched over the order statistics."""
    theta = np.sort(np.asarray(sup_stats, dtype=float).reshape(-1))
    B = theta.shape[0]
    if B < 1:
        raise ValidationError("need at least one bootstrap statistic")
    _check_alpha(alpha)
    n_greater = B - np.searchsorted(theta, theta, side="right")
    ok = np.flatnonzero(n_greater / B <= alpha)
    return float(theta[ok[0]])


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")


@dataclass(frozen=True)
class BootstrapConfig:
    alpha: float = 0.05
    n_bootstrap: int = DEFAULT_REPLICATES
    seed: int = 0
    band: str = "uniform"
    variance_floor: float | None = None

    def __post_init__(self):
        _check_alpha(self.alpha)
        if int(self.n_bootstrap) != self.n_bootstrap or self.n_bootstrap < 1:
            raise ValidationError(f"n_bootstrap must be a positive integer, got {self.n_bootstrap!r}")
        if self.band not in BAND_KINDS:
            raise ValidationError(f"band must be one of {BAND_KINDS}, got {self.band!r}")
        if self.variance_floor is not None and not self.variance_floor >= 0:
            raise ValidationError("variance_floor must be >= 0")
        object.__setattr__(self, "seed", _rng.check_seed(self.seed))
        object.__setattr__(self, "n_bootstrap", int(self.n_bootstrap))

    def floor_for(self, t_bound: float) -> float:
        if self.variance_floor is not None:
            return float(self.variance_floor)
        return RELATIVE_VARIANCE_FLOOR * t_bound / 2


@dataclass(frozen=True, eq=False)
class ConfidenceBand:
    """Pointwise lower/upper curves on a grid.

    ``half_width`` is kept as computed, so width identities can be checked
    without the rounding in ``upper - lower``.  ``included`` marks the nodes
    with sigma_hat above the variance floor; ``theorem_region`` is the first
    and last such node (``None`` if there are none).
    """

    grid: Grid
    lower: np.ndarray
    upper: np.ndarray
    half_width: np.ndarray
    alpha: float
    kind: str
    included: np.ndarray
    theorem_region: tuple[int, int] | None

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, mu, region: str = "all", mask=None) -> bool:
        """Whether ``lower <= mu <= upper`` at every node of the chosen region."""
        mu = np.asarray(getattr(mu, "values", mu), dtype=float)
        if mask is None:
            if region == "all":
                mask = np.ones(self.grid.resolution, dtype=bool)
            elif region == "theorem":
                mask = self.included
            else:
                raise ValidationError(f"unknown region {region!r}")
        inside = (self.lower <= mu) & (mu <= self.upper)
        return bool(np.all(inside[mask]))


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    sup_stats: np.ndarray
    quantile: float
    mean: SummaryFunction
    sigma_hat: SummaryFunction | None
    band: ConfidenceBand
    config: BootstrapConfig
    n: int
    variance_floor: float = field(default=0.0)


def _replicate_sups(resid: np.ndarray, cfg: BootstrapConfig, multipliers, n_jobs) -> np.ndarray:
    n = resid.shape[0]
    B = cfg.n_bootstrap
    if multipliers is not None:
        xi = np.asarray(multipliers, dtype=float)
        if xi.ndim == 1:
            xi = xi[None, :]
        if xi.shape != (B, n):
            raise ValidationError(f"injected multipliers must have shape ({B}, {n}), got {xi.shape}")
        return _sups(resid, xi)
    starts = list(range(0, B, CHUNK))

    def work(start):
        return _sups(resid, _rng.multiplier_matrix(cfg.seed, min(CHUNK, B - start), n, start))

    return np.concatenate(run_ordered(work, starts, n_jobs))


def confidence_band(s: Sample, cfg: BootstrapConfig, multipliers=None, n_jobs=None) -> BootstrapResult:
    """Multiplier-bootstrap band for the mean summary function.

    ``multipliers`` (shape ``(B, n)``) replaces the seeded normal draws; it
    exists so hand-computed single-replicate cases can be checked.
    """
    if s.n < 2:
        raise ValidationError("a confidence band needs at least 2 functions")
    X = s.matrix
    n = s.n
    mean = _mean(X)
    sd = _sd(X, mean)
    floor = cfg.floor_for(s.t_bound)
    included = sd > floor
    resid = X - mean
    if cfg.band == "adaptive":
        _included(sd, floor)
        resid = resid[:, included] / sd[included]
    sups = _replicate_sups(resid, cfg, multipliers, n_jobs)
    q = empirical_quantile(sups, cfg.alpha)

    if cfg.band == "uniform":
        half = np.full_like(mean, q / math.sqrt(n))
    else:
        # nodes at or below the floor fall back to the constant-width formula
        half = np.where(included, q * sd / math.sqrt(n), q / math.sqrt(n))
    idx = np.flatnonzero(included)
    region = (int(idx[0]), int(idx[-1])) if idx.size else None
    band = ConfidenceBand(s.grid, mean - half, mean + half, half, cfg.alpha, cfg.band, included, region)
    return BootstrapResult(
        sup_stats=sups,
        quantile=q,
        mean=_like(s, mean, "mean"),
        sigma_hat=_like(s, sd, "other"),
        band=band,
        config=cfg,
        n=n,
        variance_floor=floor,
    )


# -- serialization -----------------------------------------------------------


def band_to_dict(res: BootstrapResult, clamp_zero: bool = False, extra: dict | None = None) -> dict:
    """JSON-ready dict; keys in a fixed order.  ``clamp_zero`` only affects display."""
    lower = np.maximum(res.band.lower, 0.0) if clamp_zero else res.band.lower
    g = res.band.grid
    out = {
        "kind": res.config.band,
        "alpha": res.config.alpha,
        "B": res.config.n_bootstrap,
        "n": res.n,
        "seed": res.config.seed,
        "quantile": res.quantile,
        "grid": {"t_min": g.t_min, "t_max": g.t_max, "resolution": g.resolution},
        "mean": res.mean.values.tolist(),
    }
    if res.config.band == "adaptive":
        out["sigma_hat"] = res.sigma_hat.values.tolist()
    out["lower"] = lower.tolist()
    out["upper"] = res.band.upper.tolist()
    out["theorem_region"] = list(res.band.theorem_region) if res.band.theorem_region else None
    out["variance_floor"] = res.variance_floor
    out["clamp_zero"] = bool(clamp_zero)
    if extra:
        out.update(extra)
    return out


def band_to_csv(res: BootstrapResult, clamp_zero: bool = False, comments=()) -> str:
    lower = np.maximum(res.band.lower, 0.0) if clamp_zero else res.band.lower
    adaptive = res.config.band == "adaptive"
    lines = [f"# {c}" for c in comments]
    lines += [
        f"# kind={res.config.band}",
        f"# alpha={res.config.alpha!r}",
        f"# B={res.config.n_bootstrap}",
        f"# n={res.n}",
        f"# seed={res.config.seed}",
        f"# quantile={res.quantile!r}",
        f"# theorem_region={list(res.band.theorem_region) if res.band.theorem_region else None}",
        "t,mean,lower,upper" + (",sigma_hat" if adaptive else ""),
    ]
    cols = [res.band.grid.nodes, res.mean.values, lower, res.band.upper]
    if adaptive:
        cols.append(res.sigma_hat.values)
    for row in zip(*(c.tolist() for c in cols)):
        lines.append(",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


# -- estimator ---------------------------------------------------------------


class MultiplierBootstrapBand(BaseEstimator):
    """Confidence band for the mean of grid-sampled summary functions.

    Parameters
    ----------
    alpha : float, default=0.05
        One minus the nominal coverage.
    n_bootstrap : int, default=1000
        Number of multiplier replicates B.
    band : {'uniform', 'adaptive'}, default='uniform'
    seed : int, default=0
    variance_floor : float or None, default=None
        Nodes with sigma_hat at or below this are left out of the adaptive
        sup.  ``None`` means ``1e-8 * t_bound / 2``.
    t_min, t_max : float or None
        Grid bounds of the columns of ``X``; default ``[0, n_columns - 1]``.
    t_bound : float or None
        Bound T of the underlying diagrams; defaults to ``t_max``.
    n_jobs : int or None
        Worker threads; results do not depend on it.

    Attributes
    ----------
    mean_, sigma_hat_, lower_, upper_ : ndarray of shape (n_nodes,)
    quantile_ : float
    sup_stats_ : ndarray of shape (n_bootstrap,)
    result_ : BootstrapResult
    """

    def __init__(self, alpha=0.05, n_bootstrap=DEFAULT_REPLICATES, band="uniform", seed=0,
                 variance_floor=None, t_min=None, t_max=None, t_bound=None, n_jobs=None):
        self.alpha = alpha
        self.n_bootstrap = n_bootstrap
        self.band = band
        self.seed = seed
        self.variance_floor = variance_floor
        self.t_min = t_min
        self.t_max = t_max
        self.t_bound = t_bound
        self.n_jobs = n_jobs

    def _grid(self, n_nodes):
        t_min = 0.0 if self.t_min is None else self.t_min
        t_max = t_min + n_nodes - 1 if self.t_max is None else self.t_max
        return Grid(t_min, t_max, n_nodes)

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2, ensure_min_features=2)
        grid = self._grid(X.shape[1])
        sample = Sample.from_matrix(X, grid, t_bound=self.t_bound)
        cfg = BootstrapConfig(self.alpha, self.n_bootstrap, self.seed, self.band, self.variance_floor)
        res = confidence_band(sample, cfg, n_jobs=self.n_jobs)
        self.result_ = res
        self.grid_ = grid
        self.mean_ = res.mean.values
        self.sigma_hat_ = res.sigma_hat.values
        self.lower_ = res.band.lower
        self.upper_ = res.band.upper
        self.quantile_ = res.quantile
        self.sup_stats_ = res.sup_stats
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X=None):
        """Stacked ``(lower, upper)``, shape (2, n_nodes)."""
        check_is_fitted(self, "result_")
        return np.vstack([self.lower_, self.upper_])

    def contains(self, mu, region="all") -> bool:
        check_is_fitted(self, "result_")
        return self.result_.band.contains(mu, region)

    def score(self, mu, y=None) -> float:
        """1.0 if the band contains ``mu`` on its theorem region, else 0.0."""
        return float(self.contains(mu, region="theorem"))
