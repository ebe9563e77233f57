"""Numerical laboratory for the thermoelastic Timoshenko beam with a locally
distributed, time-delayed Cattaneo heat flux."""

from .energy import EnergySeries, StateVector, energy, graph_norm, inner_product
from .generator import (GeneratorMatrix, UniqueContinuationMatrix, assemble_generator,
                        assemble_shifted, dissipation_identity, propagate_unique_continuation,
                        unique_continuation_matrix)
from .mesh import DofLayout, Mesh, build_mesh
from .params import (ConfigError, DiscretizationParams, PhysicalParams, default_params,
                     load_config, validate_params)
from .resolvent import (ResolventSample, SweepReport, decay_fit, resolvent_norm,
                        resolvent_sweep, solve_shifted, static_solve_oracle, worst_mode_report)
from .spectral import SpectrumResult, delay_profile_check, nearest_eigenvalue, spectral_scan
from .timestep import init_state, simulate, step

__version__ = "0.1.0"

__all__ = [
    "EnergySeries",
    "StateVector",
    "energy",
    "graph_norm",
    "inner_product",
    "GeneratorMatrix",
    "UniqueContinuationMatrix",
    "assemble_generator",
    "assemble_shifted",
    "dissipation_identity",
    "propagate_unique_continuation",
    "unique_continuation_matrix",
    "DofLayout",
    "Mesh",
    "build_mesh",
    "ConfigError",
    "DiscretizationParams",
    "PhysicalParams",
    "default_params",
    "load_config",
    "validate_params",
    "ResolventSample",
    "SweepReport",
    "decay_fit",
    "resolvent_norm",
    "resolvent_sweep",
    "solve_shifted",
    "static_solve_oracle",
    "worst_mode_report",
    "SpectrumResult",
    "delay_profile_check",
    "nearest_eigenvalue",
    "spectral_scan",
    "init_state",
    "simulate",
    "step",
]
