"""Subsampling pipeline and the Monte Carlo coverage harness."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import _rng
from .diagram import Diagram
from .exceptions import ValidationError
from .landscape import Grid, SummaryFunction, _tents, landscape_values
from .rips import build_rips, check_point_cloud, persistence
from .silhouette import check_power, silhouette_values
from .stats import (
    BAND_KINDS,
    BootstrapConfig,
    Sample,
    confidence_band,
    run_ordered,
)

_MU = 3


def summary_function(summary: str, k: int = 1, p: float = 1.0) -> Callable[[Diagram, np.ndarray], np.ndarray]:
    if summary == "landscape":
        return lambda d, t: landscape_values(d, k, t)
    if summary == "silhouette":
        p = check_power(p)
        return lambda d, t: silhouette_values(d, p, t)
    raise ValidationError(f"summary must be 'landscape' or 'silhouette', got {summary!r}")


def _summary_param(summary, k, p):
    return int(k) if summary == "landscape" else check_power(p)


@dataclass(frozen=True)
class SubsampleConfig:
    m: int
    n: int
    max_scale: float
    seed: int = 0
    dim: int = 1
    summary: str = "landscape"
    k: int = 1
    p: float = 1.0
    t_min: float = 0.0
    t_max: float | None = None
    resolution: int = 1000
    t_bound: float | None = None
    with_replacement: bool = False
    essential: str = "truncate"

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"need n >= 2 repetitions, got {self.n}")
        if self.m < 2:
            raise ValidationError(f"need subsample size m >= 2, got {self.m}")
        if not self.max_scale > 0:
            raise ValidationError("max_scale must be positive")
        if self.dim not in (0, 1):
            raise ValidationError("dim must be 0 or 1")
        _rng.check_seed(self.seed)
        summary_function(self.summary, self.k, self.p)

    @property
    def bound(self) -> float:
        return float(self.max_scale if self.t_bound is None else self.t_bound)

    @property
    def grid(self) -> Grid:
        g = Grid(self.t_min, self.bound if self.t_max is None else self.t_max, self.resolution)
        g.check_within(self.bound)
        return g


def subsample_diagram(points: np.ndarray, cfg: SubsampleConfig, i: int) -> Diagram:
    """Diagram of repetition ``i``: seeded subsample -> Rips -> persistence."""
    rng = _rng.generator(cfg.seed, i, _rng.SUBSAMPLE)
    idx = np.sort(rng.choice(points.shape[0], size=cfg.m, replace=cfg.with_replacement))
    cx = build_rips(points[idx], cfg.max_scale, max_dim=2 if cfg.dim == 1 else 1)
    return persistence(cx, cfg.bound, essential=cfg.essential, dims=(cfg.dim,))[cfg.dim]


def subsample_summaries(cloud, cfg: SubsampleConfig, n_jobs=None) -> Sample:
    """n seeded subsamples of size m, each summarized on the configured grid."""
    points = check_point_cloud(cloud)
    if not cfg.with_replacement and cfg.m > points.shape[0]:
        raise ValidationError(f"subsample size m={cfg.m} exceeds cloud size {points.shape[0]}")
    grid = cfg.grid
    nodes = grid.nodes
    fn = summary_function(cfg.summary, cfg.k, cfg.p)
    param = _summary_param(cfg.summary, cfg.k, cfg.p)

    def one(i):
        try:
            d = subsample_diagram(points, cfg, i)
        except ValidationError as exc:
            raise ValidationError(f"repetition {i}: {exc}") from exc
        return SummaryFunction(grid, fn(d, nodes), cfg.summary, param, cfg.bound)

    return Sample(tuple(run_ordered(one, list(range(cfg.n)), n_jobs)))


# -- synthetic generators ----------------------------------------------------


class DiagramGenerator:
    """A distribution over diagrams; ``draw`` returns summaries on ``nodes``."""

    t_bound: float = 1.0

    def diagram(self, rng: np.random.Generator) -> Diagram:
        raise NotImplementedError

    def draw(self, rng, size, nodes, summary, k=1, p=1.0) -> np.ndarray:
        fn = summary_function(summary, k, p)
        return np.vstack([fn(self.diagram(rng), nodes) for _ in range(size)])


class SinglePairGenerator(DiagramGenerator):
    """One pair (b, d) with b ~ U[birth_low, birth_high], d ~ U[death_low, death_high]."""

    def __init__(self, birth_low=0.0, birth_high=0.0, death_low=1.0, death_high=2.0):
        if not 0 <= birth_low <= birth_high <= death_low <= death_high:
            raise ValidationError("need 0 <= birth_low <= birth_high <= death_low <= death_high")
        self.birth_low, self.birth_high = birth_low, birth_high
        self.death_low, self.death_high = death_low, death_high
        self.t_bound = float(death_high)

    def _pairs(self, rng, size):
        u = rng.random((size, 2))
        b = self.birth_low + (self.birth_high - self.birth_low) * u[:, 0]
        d = self.death_low + (self.death_high - self.death_low) * u[:, 1]
        return b, d

    def diagram(self, rng):
        b, d = self._pairs(rng, 1)
        return Diagram(b, d, self.t_bound, 1)

    def draw(self, rng, size, nodes, summary, k=1, p=1.0):
        summary_function(summary, k, p)
        b, d = self._pairs(rng, size)
        vals = _tents(b, d, nodes)
        # one pair: silhouette and first landscape both equal its triangle
        if summary == "landscape" and k > 1:
            return np.zeros_like(vals)
        return vals


class ConstantGenerator(DiagramGenerator):
    """Always the same diagram (degenerate case)."""

    def __init__(self, pairs=((0.0, 1.5),), t_bound=2.0):
        self.pairs = tuple(tuple(map(float, pr)) for pr in pairs)
        self.t_bound = float(t_bound)

    def diagram(self, rng):
        return Diagram.from_pairs(self.pairs, self.t_bound, 1)


class _CloudGenerator(DiagramGenerator):
    def __init__(self, n_points, max_scale):
        self.n_points = int(n_points)
        self.max_scale = float(max_scale)
        self.t_bound = float(max_scale)

    def points(self, rng) -> np.ndarray:
        raise NotImplementedError

    def diagram(self, rng):
        cx = build_rips(self.points(rng), self.max_scale, max_dim=2)
        return persistence(cx, self.t_bound, essential="truncate", dims=(1,))[1]


class AnnulusGenerator(_CloudGenerator):
    """Uniform points on the annulus inner <= |x| <= outer, H1 of the Rips filtration."""

    def __init__(self, n_points=40, inner=0.8, outer=1.0, max_scale=2.0):
        super().__init__(n_points, max_scale)
        if not 0 <= inner <= outer:
            raise ValidationError("need 0 <= inner <= outer")
        self.inner, self.outer = float(inner), float(outer)

    def points(self, rng):
        r = np.sqrt(rng.uniform(self.inner**2, self.outer**2, self.n_points))
        theta = rng.uniform(0, 2 * np.pi, self.n_points)
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def torus_points(rng, size, major=5.0, minor=1.8) -> np.ndarray:
    """Area-uniform points on a torus in R^3 by rejection on the tube angle."""
    out = np.empty((0, 3))
    while out.shape[0] < size:
        k = 2 * (size - out.shape[0]) + 8
        theta = rng.uniform(0, 2 * np.pi, k)
        phi = rng.uniform(0, 2 * np.pi, k)
        keep = rng.uniform(0, 1, k) < (major + minor * np.cos(phi)) / (major + minor)
        theta, phi = theta[keep], phi[keep]
        ring = major + minor * np.cos(phi)
        pts = np.column_stack([ring * np.cos(theta), ring * np.sin(theta), minor * np.sin(phi)])
        out = np.vstack([out, pts])
    return out[:size]


def linked_circle_points(rng, size, radius=5.0, center=(5.0, 0.0, 0.0)) -> np.ndarray:
    """Circle in the xz-plane threading the torus tube at (major, 0, 0)."""
    theta = rng.uniform(0, 2 * np.pi, size)
    c = np.asarray(center)
    return c + np.column_stack([radius * np.cos(theta), np.zeros(size), radius * np.sin(theta)])


class TorusCircleGenerator(_CloudGenerator):
    """Torus plus a linked circle, mixed in the 10000:1800 proportion, at reduced size."""

    def __init__(self, n_points=60, major=5.0, minor=1.8, circle_radius=5.0,
                 circle_fraction=1800 / 11800, max_scale=8.0):
        super().__init__(n_points, max_scale)
        self.major, self.minor = float(major), float(minor)
        self.circle_radius = float(circle_radius)
        self.circle_fraction = float(circle_fraction)

    def points(self, rng):
        n_circle = int(rng.binomial(self.n_points, self.circle_fraction))
        return np.vstack([
            torus_points(rng, self.n_points - n_circle, self.major, self.minor),
            linked_circle_points(rng, n_circle, self.circle_radius, (self.major, 0.0, 0.0)),
        ])


GENERATORS = {
    "single-pair": SinglePairGenerator,
    "constant": ConstantGenerator,
    "annulus": AnnulusGenerator,
    "torus-circle": TorusCircleGenerator,
}


def make_generator(name: str, **params) -> DiagramGenerator:
    try:
        cls = GENERATORS[name]
    except KeyError:
        raise ValidationError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None
    return cls(**params)


# -- coverage harness --------------------------------------------------------


@dataclass(frozen=True)
class CoverageConfig:
    generator: str = "single-pair"
    generator_params: dict = field(default_factory=dict)
    n: tuple = (30,)
    n_bootstrap: int = 1000
    alpha: float = 0.05
    rounds: int = 200
    mu_draws: int = 100_000
    seed: int = 0
    bands: tuple = BAND_KINDS
    summary: str = "landscape"
    k: int = 1
    p: float = 1.0
    resolution: int = 201
    region_fraction: float = 0.5

    def __post_init__(self):
        n = (self.n,) if np.isscalar(self.n) else tuple(self.n)
        object.__setattr__(self, "n", tuple(int(v) for v in n))
        object.__setattr__(self, "bands", tuple(self.bands))
        object.__setattr__(self, "generator_params", dict(self.generator_params))
        if min(self.n) < 2:
            raise ValidationError("every n must be >= 2")
        if self.rounds < 50:
            raise ValidationError(f"need at least 50 rounds, got {self.rounds}")
        if self.mu_draws < 10 * max(self.n):
            raise ValidationError(f"mu_draws={self.mu_draws} must be much larger than n (>= 10 n)")
        for b in self.bands:
            if b not in BAND_KINDS:
                raise ValidationError(f"unknown band kind {b!r}")
        if not 0 <= self.region_fraction < 1:
            raise ValidationError("region_fraction must lie in [0, 1)")
        BootstrapConfig(self.alpha, self.n_bootstrap, self.seed)
        summary_function(self.summary, self.k, self.p)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n"] = list(self.n)
        d["bands"] = list(self.bands)
        return d


@dataclass
class CoverageReport:
    config: dict
    grid: dict
    mu_estimate: list
    sigma_estimate: list
    theorem_region: list | None
    coverage: dict
    coverage_se: dict
    widths: dict
    rounds: int

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "grid": self.grid,
            "mu_estimate": self.mu_estimate,
            "sigma_estimate": self.sigma_estimate,
            "theorem_region": self.theorem_region,
            "coverage": self.coverage,
            "coverage_se": self.coverage_se,
            "widths": self.widths,
            "rounds": self.rounds,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "CoverageReport":
        def by_n(table):
            return {kind: {int(n): v for n, v in per.items()} for kind, per in table.items()}

        return cls(
            config=d["config"],
            grid=d["grid"],
            mu_estimate=list(d["mu_estimate"]),
            sigma_estimate=list(d["sigma_estimate"]),
            theorem_region=d["theorem_region"],
            coverage=by_n(d["coverage"]),
            coverage_se=by_n(d["coverage_se"]),
            widths=by_n(d["widths"]),
            rounds=int(d["rounds"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "CoverageReport":
        return cls.from_dict(json.loads(text))


def estimate_mean_function(gen: DiagramGenerator, cfg: CoverageConfig, nodes, n_jobs=None, chunk=5000):
    """Monte Carlo mean and standard deviation of the summary over ``mu_draws`` draws."""
    chunks = [(c, min(chunk, cfg.mu_draws - start)) for c, start in enumerate(range(0, cfg.mu_draws, chunk))]
    ref = gen.draw(_rng.generator(cfg.seed, 0, _MU), 1, nodes, cfg.summary, cfg.k, cfg.p)[0]

    def work(item):
        c, size = item
        X = gen.draw(_rng.generator(cfg.seed, c + 1, _MU), size, nodes, cfg.summary, cfg.k, cfg.p) - ref
        return X.sum(axis=0), (X**2).sum(axis=0)

    s1 = np.zeros_like(ref)
    s2 = np.zeros_like(ref)
    for a, b in run_ordered(work, chunks, n_jobs):
        s1 += a
        s2 += b
    m1 = s1 / cfg.mu_draws
    sd = np.sqrt(np.maximum(s2 / cfg.mu_draws - m1**2, 0.0))
    return ref + m1, sd


def coverage_experiment(cfg: CoverageConfig, n_jobs=None) -> CoverageReport:
    """Empirical simultaneous coverage of the bands for a synthetic generator.

    The true mean is estimated from ``mu_draws`` independent draws.  Each
    round draws ``n`` summaries, builds every requested band and records
    whether it contains the mean at all nodes where the estimated standard
    deviation exceeds ``region_fraction`` times its maximum.
    """
    gen = make_generator(cfg.generator, **cfg.generator_params)
    grid = Grid(0.0, gen.t_bound, cfg.resolution)
    nodes = grid.nodes
    param = _summary_param(cfg.summary, cfg.k, cfg.p)
    mu, sd = estimate_mean_function(gen, cfg, nodes, n_jobs)
    if sd.max() > 0:
        region = sd > cfg.region_fraction * sd.max()
    else:
        region = np.ones_like(sd, dtype=bool)
    idx = np.flatnonzero(region)

    def one_round(item):
        n, r = item
        rng = _rng.generator(cfg.seed, (n << 32) | r, _rng.COVERAGE)
        X = gen.draw(rng, n, nodes, cfg.summary, cfg.k, cfg.p)
        boot_seed = int(rng.integers(0, 2**63))
        sample = Sample.from_matrix(X, grid, cfg.summary, param, gen.t_bound)
        out = {}
        for kind in cfg.bands:
            bc = BootstrapConfig(cfg.alpha, cfg.n_bootstrap, boot_seed, kind)
            res = confidence_band(sample, bc, n_jobs=1)
            out[kind] = (res.band.contains(mu, mask=region), float(res.band.width[region].max()))
        return out

    items = [(n, r) for n in cfg.n for r in range(cfg.rounds)]
    results = run_ordered(one_round, items, n_jobs)

    coverage, se, widths = {}, {}, {}
    for kind in cfg.bands:
        coverage[kind], se[kind], widths[kind] = {}, {}, {}
        for n in cfg.n:
            rows = [res[kind] for (nn, _), res in zip(items, results) if nn == n]
            hits = np.array([h for h, _ in rows], dtype=float)
            c = float(hits.mean())
            coverage[kind][n] = c
            se[kind][n] = math.sqrt(c * (1 - c) / len(hits))
            widths[kind][n] = float(np.median([w for _, w in rows]))
    return CoverageReport(
        config=cfg.to_dict(),
        grid={"t_min": grid.t_min, "t_max": grid.t_max, "resolution": grid.resolution},
        mu_estimate=mu.tolist(),
        sigma_estimate=sd.tolist(),
        theorem_region=[int(idx[0]), int(idx[-1])],
        coverage=coverage,
        coverage_se=se,
        widths=widths,
        rounds=cfg.rounds,
    )


def width_slope(widths: dict) -> float:
    """Least-squares slope of log(width) against log(n)."""
    ns = np.array(sorted(widths), dtype=float)
    w = np.array([widths[int(n)] for n in ns])
    return float(np.polyfit(np.log(ns), np.log(w), 1)[0])
