"""Spectral simulation and orbital-stability diagnostics for the radial cubic
Schrodinger flow on the Heisenberg group and its Hardy-space limit flow."""

__version__ = "0.1.0"

from .grids import FrequencyGrid, RadialSpectralGrid
from .hardy import (HardyFunction, cubic_projection, ground_state_profile,
                    l4norm4, sobolev2, synthesize)
from .symmetry import SymmetryElement, apply_symmetry, gap_closed_form
from .spectral import (RadialField, embed_hardy, extract_hardy, hsobolev2,
                       linear_symbol, momentum, split_plus, truncate)
from .collocation import cubic_truncated, energy_gamma, l4norm4_collocation
from .evolve import IntegratorConfig, Trajectory, dt_norm_diagnostic, evolve_heis, evolve_limit
from .groundstate import (GroundStateTable, continuation_sweep, solve_ground_state,
                          traveling_profile)
from .modulation import (OrbitFit, delta_functional, distance_to_orbit,
                         stability_ratio_experiment, track_modulation)
from .experiments import initial_family

__all__ = [
    "FrequencyGrid", "RadialSpectralGrid", "HardyFunction", "RadialField",
    "SymmetryElement", "IntegratorConfig", "Trajectory", "OrbitFit",
    "GroundStateTable", "ground_state_profile", "sobolev2", "l4norm4",
    "cubic_projection", "synthesize", "apply_symmetry", "gap_closed_form",
    "linear_symbol", "truncate", "split_plus", "embed_hardy", "extract_hardy",
    "hsobolev2", "momentum", "cubic_truncated", "energy_gamma",
    "l4norm4_collocation", "evolve_limit", "evolve_heis", "dt_norm_diagnostic",
    "solve_ground_state", "continuation_sweep", "traveling_profile",
    "distance_to_orbit", "delta_functional", "stability_ratio_experiment",
    "track_modulation", "initial_family",
]
