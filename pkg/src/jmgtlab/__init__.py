"""Spectral Galerkin laboratory for a third-order-in-time acoustics model.

The model is tau*u_ttt + alpha*u_tt = beta*Lap(u_t) + gamma*Lap(u) +
(f(u))_tt with Dirichlet conditions on an interval or box.  The package
projects it onto the lowest Dirichlet sine modes, integrates the
resulting ODE system with an embedded adaptive Runge-Kutta pair (a
compiled kernel when available, a numpy fallback otherwise), monitors
the algebraic energy and identity structure along the trajectory, and
constructs certified finite-time blow-up data together with guaranteed
existence-time budgets.
"""

__version__ = "0.1.0"

from .backend import available_backends, make_stepper
from .certificate import (
    BlowUpCertificate,
    ExistenceBudget,
    ExistenceConstants,
    comparison_solution,
    compute_K0,
    compute_K1,
    compute_K2,
    guaranteed_existence_time,
    make_certified_data,
    validate_certificate,
    xi1_threshold,
    xi2_components,
)
from .config import ConfigError, PreparedRun, load_config, prepare_run, resolve_config
from .domain import Basis, DomainSpec, Grid, build_basis
from .galerkin import GalerkinSystem, LiftedSources, ModelParams, SpectralState
from .integrator import (
    IntegratorConfig,
    RunOutcome,
    Sample,
    Status,
    hermite_eval,
    integrate,
    linear_modal_solution,
    step,
)
from .monitors import (
    CSV_COLUMNS,
    CSV_SCHEMA_VERSION,
    MonitorReport,
    build_report,
    energy_level1,
    energy_level2,
    jensen_gap,
    odi_slack,
    pair_energy,
    residuals,
)
from .nonlinearity import (
    BlowUpHypotheses,
    Nonlinearity,
    custom,
    derivative_sup_bound,
    exponential,
    quadratic,
    tail_integral,
    zero,
)

__all__ = [
    "__version__",
    "available_backends",
    "make_stepper",
    "BlowUpCertificate",
    "ExistenceBudget",
    "ExistenceConstants",
    "comparison_solution",
    "compute_K0",
    "compute_K1",
    "compute_K2",
    "guaranteed_existence_time",
    "make_certified_data",
    "validate_certificate",
    "xi1_threshold",
    "xi2_components",
    "ConfigError",
    "PreparedRun",
    "load_config",
    "prepare_run",
    "resolve_config",
    "Basis",
    "DomainSpec",
    "Grid",
    "build_basis",
    "GalerkinSystem",
    "LiftedSources",
    "ModelParams",
    "SpectralState",
    "IntegratorConfig",
    "RunOutcome",
    "Sample",
    "Status",
    "hermite_eval",
    "integrate",
    "linear_modal_solution",
    "step",
    "CSV_COLUMNS",
    "CSV_SCHEMA_VERSION",
    "MonitorReport",
    "build_report",
    "energy_level1",
    "energy_level2",
    "jensen_gap",
    "odi_slack",
    "pair_energy",
    "residuals",
    "BlowUpHypotheses",
    "Nonlinearity",
    "custom",
    "derivative_sup_bound",
    "exponential",
    "quadratic",
    "tail_integral",
    "zero",
]
