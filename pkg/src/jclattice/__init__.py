"""Driven-dissipative Jaynes-Cummings cavity arrays.

Tools for studying photon self-trapping in coupled cavity chains with
qubit nonlinearities, coherent drives, and photon/qubit losses.  Three
engines cover the accuracy/cost trade-off:

* ``master``       exact Lindblad density-matrix evolution,
* ``trajectories`` Monte Carlo wavefunction quantum-jump ensembles,
* ``meanfield``    semiclassical factorized equations of motion,

plus phase-diagram sweeps of the self-trapping stability region and the
analytic boundary they are compared against.
"""

import logging

from .analysis import (
    CRITICAL_PREFACTOR,
    BandEdges,
    BoundaryCurve,
    BreakTimeResult,
    PhaseDiagramGrid,
    analytic_boundary_kappa,
    boundary_curve,
    compare_boundary,
    critical_coupling,
    detect_t_break,
    phase_sweep,
)
from .cli import (
    ExperimentConfig,
    RunSummary,
    SweepSettings,
    main,
    parse_config,
    preset_names,
    preset_text,
    render_config,
    run_experiment,
)
from .errors import ConfigError, IntegrationError, TruncationError
from .io import (
    config_hash,
    write_phase_grid_csv,
    write_summary_json,
    write_timeseries_csv,
)
from .lattice import LatticeConfig, ProductStateSpec, default_fock_cutoff
from .master import (
    DensityMatrix,
    EvolutionSettings,
    evolve_master,
    expectation,
    g2_zero,
    lindblad_rhs,
)
from .meanfield import (
    MeanfieldSettings,
    SemiclassicalState,
    evolve_meanfield,
    initial_state,
    meanfield_rhs,
)
from .operators import (
    EmbeddedOperator,
    LocalOperatorSet,
    build_collapse_operators,
    build_hamiltonian,
    embed_operator,
    excitation_number,
    product_state,
    site_operators,
    site_photon_numbers,
    site_qubit_excitations,
)
from .timeseries import POPULATION_FLOOR, TimeSeries, imbalance, imbalance_series
from .trajectories import (
    TrajectorySettings,
    advance_trajectory,
    effective_hamiltonian,
    run_ensemble,
)

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())

__all__ = [
    "BandEdges",
    "BoundaryCurve",
    "BreakTimeResult",
    "CRITICAL_PREFACTOR",
    "ConfigError",
    "DensityMatrix",
    "EmbeddedOperator",
    "EvolutionSettings",
    "ExperimentConfig",
    "IntegrationError",
    "LatticeConfig",
    "LocalOperatorSet",
    "MeanfieldSettings",
    "POPULATION_FLOOR",
    "PhaseDiagramGrid",
    "ProductStateSpec",
    "RunSummary",
    "SemiclassicalState",
    "SweepSettings",
    "TimeSeries",
    "TrajectorySettings",
    "TruncationError",
    "advance_trajectory",
    "analytic_boundary_kappa",
    "boundary_curve",
    "build_collapse_operators",
    "build_hamiltonian",
    "compare_boundary",
    "config_hash",
    "critical_coupling",
    "default_fock_cutoff",
    "detect_t_break",
    "effective_hamiltonian",
    "embed_operator",
    "evolve_master",
    "evolve_meanfield",
    "excitation_number",
    "expectation",
    "g2_zero",
    "imbalance",
    "imbalance_series",
    "initial_state",
    "lindblad_rhs",
    "main",
    "meanfield_rhs",
    "parse_config",
    "phase_sweep",
    "preset_names",
    "preset_text",
    "product_state",
    "render_config",
    "run_experiment",
    "run_ensemble",
    "site_operators",
    "site_photon_numbers",
    "site_qubit_excitations",
    "write_phase_grid_csv",
    "write_summary_json",
    "write_timeseries_csv",
    "__version__",
]
