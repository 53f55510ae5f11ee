"""Distributions of the last drawdown of a drifted Brownian PnL, and tests of an
assumed Sharpe ratio built on them."""

from .densities import (
    ProcessSpec,
    depth_tail_prob,
    joint_dl_density,
    length_tail_prob,
    psi_depth,
    rho_length,
)
from .errors import DomainError, InsufficientSampleError, PnlDataError, QuadratureError
from .inference import (
    CorridorResult,
    DrawdownObservation,
    SharpeUpdate,
    Source,
    TestReport,
    UpdateStatus,
    conditional_corridor,
    depth_quantile,
    fit_quantile_power_law,
    length_quantile,
    run_test,
    update_sharpe_from_depth,
    update_sharpe_from_length,
)

__version__ = "0.1.0"
