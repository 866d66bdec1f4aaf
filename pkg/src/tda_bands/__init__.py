"""Persistence landscapes, power-weighted silhouettes and multiplier-bootstrap
confidence bands for their mean."""

from .diagram import Diagram, PersistencePair, parse_diagram, write_diagram
from .exceptions import (
    EssentialClassError,
    NoPositiveVarianceError,
    ParseError,
    ValidationError,
)
from .landscape import (
    Grid,
    PersistenceLandscape,
    SummaryFunction,
    landscape_at,
    landscape_on_grid,
    read_summary,
    triangle,
    write_summary,
)
from .pipeline import (
    CoverageConfig,
    CoverageReport,
    SinglePairGenerator,
    SubsampleConfig,
    coverage_experiment,
    subsample_summaries,
    width_slope,
)
from .rips import FilteredComplex, RipsPersistence, build_rips, persistence, rips_diagram
from .silhouette import PowerWeightedSilhouette, silhouette_at, silhouette_on_grid
from .stats import (
    BootstrapConfig,
    BootstrapResult,
    ConfidenceBand,
    MultiplierBootstrapBand,
    Sample,
    bootstrap_sup,
    confidence_band,
    empirical_quantile,
    mean_summary,
    sigma_hat,
    studentized_sup,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "BootstrapResult",
    "ConfidenceBand",
    "CoverageConfig",
    "CoverageReport",
    "Diagram",
    "EssentialClassError",
    "FilteredComplex",
    "Grid",
    "MultiplierBootstrapBand",
    "NoPositiveVarianceError",
    "ParseError",
    "PersistenceLandscape",
    "PersistencePair",
    "PowerWeightedSilhouette",
    "RipsPersistence",
    "Sample",
    "SinglePairGenerator",
    "SubsampleConfig",
    "SummaryFunction",
    "ValidationError",
    "bootstrap_sup",
    "build_rips",
    "confidence_band",
    "coverage_experiment",
    "empirical_quantile",
    "landscape_at",
    "landscape_on_grid",
    "mean_summary",
    "parse_diagram",
    "persistence",
    "read_summary",
    "rips_diagram",
    "sigma_hat",
    "silhouette_at",
    "silhouette_on_grid",
    "studentized_sup",
    "subsample_summaries",
    "triangle",
    "width_slope",
    "write_diagram",
    "write_summary",
]
