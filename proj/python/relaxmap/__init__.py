from relaxmap._core import (
    ConfigError,
    DimensionError,
    InfeasiblePattern,
    InvalidArgument,
    IoError,
    ReconParams,
    SimulatedCase,
    config_hash,
    default_params,
    make_phantom,
    masked_relative_error,
    poisson_disk,
    reconstruct,
    run_experiment,
    simulate,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "InfeasiblePattern",
    "InvalidArgument",
    "IoError",
    "ReconParams",
    "SimulatedCase",
    "config_hash",
    "default_params",
    "make_phantom",
    "masked_relative_error",
    "poisson_disk",
    "reconstruct",
    "run_experiment",
    "simulate",
]
