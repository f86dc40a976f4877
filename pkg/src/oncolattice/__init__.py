"""Local and lymph-node lattice models of oncolytic virotherapy under hypoxia.

The local model tracks uninfected tumour cells, infected tumour cells and
oxygen at one site; the lattice couples a primary site to a chain of lymph
nodes through a saturating spreading term.  The package provides closed-form
steady states with stability verdicts, an adaptive Dormand-Prince
integrator, a Gershgorin-based stability certificate for the lattice and
the named scenarios behind the ``oncolattice reproduce`` command.
"""

__version__ = "0.1.0"

from .core import (INITIAL_C, INITIAL_N, INITIAL_U, DEFAULT_PARAMS, Constant, DimensionalParams, LocalState,
                   NondimParams, Scaled, Sigmoid, eval_response, eval_response_deriv, is_constant,
                   nondimensionalize, nondimensionalize_state, redimension_state)
from .equilibria import (StabilityVerdict, Verdict, classify_2d, coexistence_2d, infected_only_bound,
                         interior_3d, numeric_verdict, tumour_dominant_3d, tumour_free_3d,
                         uninfected_free_3d)
from .integrator import IntegratorConfig, Termination, Trajectory, integrate, integrate_batch, sample_at
from .linalg import EigenvalueError, GershgorinDisc, eigenvalues, gershgorin_discs
from .local_model import LocalModel, Params2D, jacobian_2d, jacobian_3d, rhs_2d, rhs_dimensional, rhs_nondim
from .regional import (LatticeModel, NodeParams, RegionalState, SteadyStateError, lattice_preset,
                       prop5_certificate, regional_jacobian, rhs_regional, tumour_dominant_regional)
from .experiments import (PRESETS, HeatmapSpec, Scenario, ScenarioError, Table, oxygenation_comparison,
                          phase_portrait, preset, run_timeseries, theta_gamma_heatmap)
from .config import ConfigError, dump_config, load_config, loads_config
from .output import read_csv, write_csv, write_svg

__all__ = [
    "INITIAL_C",
    "INITIAL_N",
    "INITIAL_U",
    "DEFAULT_PARAMS",
    "Constant",
    "DimensionalParams",
    "LocalState",
    "NondimParams",
    "Scaled",
    "Sigmoid",
    "eval_response",
    "eval_response_deriv",
    "is_constant",
    "nondimensionalize",
    "nondimensionalize_state",
    "redimension_state",
    "StabilityVerdict",
    "Verdict",
    "classify_2d",
    "coexistence_2d",
    "infected_only_bound",
    "interior_3d",
    "numeric_verdict",
    "tumour_dominant_3d",
    "tumour_free_3d",
    "uninfected_free_3d",
    "IntegratorConfig",
    "Termination",
    "Trajectory",
    "integrate",
    "integrate_batch",
    "sample_at",
    "EigenvalueError",
    "GershgorinDisc",
    "eigenvalues",
    "gershgorin_discs",
    "LocalModel",
    "Params2D",
    "jacobian_2d",
    "jacobian_3d",
    "rhs_2d",
    "rhs_dimensional",
    "rhs_nondim",
    "LatticeModel",
    "NodeParams",
    "RegionalState",
    "SteadyStateError",
    "lattice_preset",
    "prop5_certificate",
    "regional_jacobian",
    "rhs_regional",
    "tumour_dominant_regional",
    "PRESETS",
    "HeatmapSpec",
    "Scenario",
    "ScenarioError",
    "Table",
    "oxygenation_comparison",
    "phase_portrait",
    "preset",
    "run_timeseries",
    "theta_gamma_heatmap",
    "ConfigError",
    "dump_config",
    "load_config",
    "loads_config",
    "read_csv",
    "write_csv",
    "write_svg",
]
