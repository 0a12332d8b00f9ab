"""Stationary states, linear spectra, and dynamics of a spherically
symmetric SU(2) gauge field on the fixed Schwarzschild exterior, in horizon
units (mass m = 1/2, horizon at r = 1).

The pipeline: `stationary` finds the discrete family of static profiles
W_n by shooting from the horizon, `spectrum` solves the linearized
eigenproblem around a profile by two independent routes, and `evolution`
integrates perturbations in time to watch the predicted instability (or
its absence) directly.  `verify` bundles the cross-cutting invariant
checks; the `cli` module exposes all of it as the `swym` command.
"""

__version__ = "0.1.0"

from .geometry import lapse, potential_factor, radius_r, tortoise_x
from .stationary import (
    A1_EXACT,
    SearchConfig,
    SearchResolutionError,
    StationaryProfile,
    find_a_n,
    read_solution,
    vacuum_profile,
    w1_closed_form,
    write_solution,
)
from .spectrum import (
    PotentialProfile,
    SpectrumReport,
    build_potential,
    cross_check,
    eigen_fd,
    eigen_shooting,
    integral_V,
    recommended_grid,
    synthetic_potential,
    write_spectrum,
)
from .evolution import (
    EvolutionConfig,
    EvolutionSeries,
    FieldState,
    eigenmode_state,
    evolve,
    fit_growth,
    gaussian_pulse,
    profile_background,
    vacuum_background,
    zero_state,
)

__all__ = [
    "__version__",
    "A1_EXACT",
    "EvolutionConfig",
    "EvolutionSeries",
    "FieldState",
    "PotentialProfile",
    "SearchConfig",
    "SearchResolutionError",
    "SpectrumReport",
    "StationaryProfile",
    "build_potential",
    "cross_check",
    "eigen_fd",
    "eigen_shooting",
    "eigenmode_state",
    "evolve",
    "find_a_n",
    "fit_growth",
    "gaussian_pulse",
    "integral_V",
    "lapse",
    "potential_factor",
    "profile_background",
    "radius_r",
    "read_solution",
    "recommended_grid",
    "synthetic_potential",
    "tortoise_x",
    "vacuum_background",
    "vacuum_profile",
    "w1_closed_form",
    "write_solution",
    "write_spectrum",
    "zero_state",
]
