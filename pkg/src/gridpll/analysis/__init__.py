"""Energy functions, equilibria, regions of attraction, ultimate bounds and settling."""
from .bound import UltimateBound, brute_force_minimum, ultimate_bound
from .energy import (EnergyKind, EnergyParams, energy_eval, is_nonincreasing, max_increase,
                     passivity_residual)
from .equilibria import EquilibriumClass, EquilibriumReport, atan_linear_solution, classify_equilibrium
from .roa import RoaEstimate, roa_inner_estimate, roa_samples, roa_validate
from .settling import settling_time

__all__ = [
    "EnergyKind", "EnergyParams", "EquilibriumClass", "EquilibriumReport", "RoaEstimate", "UltimateBound",
    "atan_linear_solution", "brute_force_minimum", "classify_equilibrium", "energy_eval", "is_nonincreasing",
    "max_increase", "passivity_residual", "roa_inner_estimate", "roa_samples", "roa_validate",
    "settling_time", "ultimate_bound",
]
