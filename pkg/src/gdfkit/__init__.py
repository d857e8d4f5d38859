"""Weighted kernel intensity estimation and its geometric structure.

Estimate mark-weighted Gaussian kernel intensities from point samples, then
extract modes (weighted mean shift), filament ridges (subspace-constrained
mean shift), mode clusters, and an absorbing-random-walk connectivity
measure between clusters.  A validation harness checks the estimator's
convergence trends against closed-form ground truths.
"""

from .clustering import ClusterAssignment, cluster
from .connectivity import (
    ChainBlocks,
    ConnectivityResult,
    absorb,
    build_chain,
    connectivity_matrix,
    connectivity_pipeline,
    mode_weight,
)
from .core import (
    GdfDerivatives,
    GdfModel,
    WeightedSample,
    gdf_all,
    gdf_all_many,
    gdf_gradient,
    gdf_gradient_many,
    gdf_hessian,
    gdf_value,
    gdf_value_many,
    kernel_value,
    silverman_bandwidth,
)
from .errors import (
    EmptyResultError,
    GdfKitError,
    IngestionError,
    InvalidInputError,
    LowDensityError,
    NumericError,
    UnsupportedDimensionError,
)
from .harness import (
    Circle,
    QuadratureGrid,
    RateCell,
    RateReport,
    SyntheticModel,
    builtin_model,
    circle_ridge_model,
    gauss1d_model,
    hausdorff,
    make_grid,
    mise_estimate,
    power_schedule,
    rate_experiment,
    ridge_hausdorff_error,
    tilted_mix2d_model,
)
from .ingest import (
    ImageGrid,
    RowIssue,
    image_to_sample,
    linear_mass_weight,
    load_catalog,
    load_sdss_extract,
    read_pgm,
    save_catalog,
    sdss_mass,
    write_pgm,
)
from .modes import AscentConfig, ModeSet, Trajectory, ascend, collect_modes, mean_shift_step
from .ridges import EigenFrame, RidgePointSet, eigen_frame, scms_step, trace_ridge

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "WeightedSample", "GdfModel", "GdfDerivatives",
    "kernel_value", "gdf_value", "gdf_gradient", "gdf_hessian", "gdf_all",
    "gdf_value_many", "gdf_gradient_many", "gdf_all_many", "silverman_bandwidth",
    "AscentConfig", "Trajectory", "ModeSet",
    "mean_shift_step", "ascend", "collect_modes",
    "EigenFrame", "RidgePointSet", "eigen_frame", "scms_step", "trace_ridge",
    "ClusterAssignment", "cluster",
    "ChainBlocks", "ConnectivityResult",
    "mode_weight", "build_chain", "absorb", "connectivity_matrix", "connectivity_pipeline",
    "Circle", "SyntheticModel", "QuadratureGrid", "RateCell", "RateReport",
    "gauss1d_model", "tilted_mix2d_model", "circle_ridge_model", "builtin_model",
    "hausdorff", "ridge_hausdorff_error", "make_grid", "mise_estimate",
    "power_schedule", "rate_experiment",
    "RowIssue", "ImageGrid",
    "load_catalog", "save_catalog", "sdss_mass", "linear_mass_weight",
    "load_sdss_extract", "read_pgm", "write_pgm", "image_to_sample",
    "GdfKitError", "InvalidInputError", "IngestionError", "EmptyResultError",
    "NumericError", "LowDensityError", "UnsupportedDimensionError",
]
