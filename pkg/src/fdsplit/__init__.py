"""Antenna splitting for full-duplex multi-antenna base stations.

Library layout:

- :mod:`fdsplit.config`        scenario constants, config-file parsing
- :mod:`fdsplit.channel`       geometry, link gains, fading, beamformers
- :mod:`fdsplit.mse_core`      effective channels, MMSE filters, per-user MSEs
- :mod:`fdsplit.decomposition` quadratic/biquadratic rewrite and its gradient
- :mod:`fdsplit.solver`        relaxed proximal solver with restarts/rounding
- :mod:`fdsplit.baselines`     exhaustive search and fixed equal split
- :mod:`fdsplit.harness`       Monte Carlo experiments, CSV records
- :mod:`fdsplit.plots`         report figures
- :mod:`fdsplit.cli`           command-line interface
"""

__version__ = "0.1.0"

from .baselines import BaselineResult, equal_split, exhaustive, split_result
from .channel import (
    ChannelRealization,
    draw_beamformers,
    draw_channels,
    draw_positions,
    draw_realization,
    draw_si_channel,
    link_gain,
    substream,
    synthetic_realization,
)
from .config import CapacityError, ConfigError, SystemConfig, load_config
from .decomposition import (
    DecompositionTerms,
    LinearizedObjective,
    build_linearized,
    build_quadratic_terms,
    f_ud_value,
    grad_f_ud,
    grad_f_ud_diag,
    identity_suite,
)
from .harness import (
    ExperimentSpec,
    RunRecord,
    aggregate_cdf,
    aggregate_mean,
    run_experiment,
)
from .mse_core import (
    AntennaAssignment,
    MseReport,
    ReceiveFilters,
    effective_channels,
    interference_cov_ul,
    interference_var_dl,
    mmse_filters,
    mse_report,
    sum_mse_fixed_filters,
    sum_spectral_efficiency,
    user_mse_dl,
    user_mse_ul,
)
from .solver import PscaState, SolveResult, psca_run, rlx_prox, round_assignment, solve_box_qp

__all__ = [
    "AntennaAssignment",
    "BaselineResult",
    "CapacityError",
    "ChannelRealization",
    "ConfigError",
    "DecompositionTerms",
    "ExperimentSpec",
    "LinearizedObjective",
    "MseReport",
    "PscaState",
    "ReceiveFilters",
    "RunRecord",
    "SolveResult",
    "SystemConfig",
    "aggregate_cdf",
    "aggregate_mean",
    "build_linearized",
    "build_quadratic_terms",
    "draw_beamformers",
    "draw_channels",
    "draw_positions",
    "draw_realization",
    "draw_si_channel",
    "effective_channels",
    "equal_split",
    "exhaustive",
    "f_ud_value",
    "grad_f_ud",
    "grad_f_ud_diag",
    "identity_suite",
    "interference_cov_ul",
    "interference_var_dl",
    "link_gain",
    "load_config",
    "mmse_filters",
    "mse_report",
    "psca_run",
    "rlx_prox",
    "round_assignment",
    "run_experiment",
    "solve_box_qp",
    "split_result",
    "substream",
    "sum_mse_fixed_filters",
    "sum_spectral_efficiency",
    "synthetic_realization",
    "user_mse_dl",
    "user_mse_ul",
]
