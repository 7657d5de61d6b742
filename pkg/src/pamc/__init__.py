"""Precision-annealed Metropolis-Hastings path sampling.

Estimate unmeasured states and parameters of a nonlinear dynamical model
from sparse noisy observations by sampling the standard-model action with
a Metropolis-Hastings chain while the model-error precision R_f is raised
geometrically, then validate the estimate by predicting beyond the
observation window.
"""

from .action import ActionBreakdown, ObservationSet, Path, action, delta_action
from .annealer import (
    AnnealSchedule,
    InitRanges,
    RunRecord,
    RunRecordRow,
    expected_value,
    init_paths,
    min_action_index,
    min_action_path,
    pamc_run,
    plateau_diagnostic,
)
from .config import RunConfig, load_config, parse_config
from .dynamics import (
    ModelSpec,
    largest_lyapunov_exponent,
    linear_map_model,
    lorenz96_model,
    lorenz96_vector_field,
    rk4_step,
)
from .errors import ChainDivergenceError, ConfigError, IntegrationOverflowError
from .sampler import ChainConfig, ChainResult, run_chain
from .twin import (
    TwinConfig,
    TwinData,
    divergence_time,
    generate_twin,
    predict,
    rmse,
)

__version__ = "0.1.0"

__all__ = [
    "ActionBreakdown",
    "AnnealSchedule",
    "ChainConfig",
    "ChainDivergenceError",
    "ChainResult",
    "ConfigError",
    "InitRanges",
    "IntegrationOverflowError",
    "ModelSpec",
    "ObservationSet",
    "Path",
    "RunConfig",
    "RunRecord",
    "RunRecordRow",
    "TwinConfig",
    "TwinData",
    "action",
    "delta_action",
    "divergence_time",
    "expected_value",
    "generate_twin",
    "init_paths",
    "largest_lyapunov_exponent",
    "linear_map_model",
    "load_config",
    "lorenz96_model",
    "lorenz96_vector_field",
    "min_action_index",
    "min_action_path",
    "pamc_run",
    "parse_config",
    "plateau_diagnostic",
    "predict",
    "rk4_step",
    "rmse",
    "run_chain",
    "__version__",
]
