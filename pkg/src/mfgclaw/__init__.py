"""Mean field games coupled through a scalar of the terminal distribution."""

__version__ = "0.1.0"

from .claw import (
    Grid1D,
    build_quartic_profile,
    godunov,
    lax_oleinik,
    riemann_exact,
    riemann_fan,
    trace_characteristics,
)
from .equilibrium import (
    find_equilibria,
    master_field,
    master_residual,
    nplayer_residual,
    sigma_map,
    verify_nash,
)
from .measure import EmpiricalMeasure, decompose, pushforward, translate, wasserstein2_1d
from .model import GameModel, ReducedFlux, convex_envelope, legendre_1d
from .monotone import check_monotonicity, dsigma_sigma_map
from .presets import get_preset
from .selection import classify_point, region_scan
from .viscous import vanishing_viscosity_study, viscous_solve

__all__ = [
    "EmpiricalMeasure", "GameModel", "Grid1D", "ReducedFlux",
    "build_quartic_profile", "check_monotonicity", "classify_point", "convex_envelope",
    "decompose", "dsigma_sigma_map", "find_equilibria", "get_preset", "godunov",
    "lax_oleinik", "legendre_1d", "master_field", "master_residual", "nplayer_residual",
    "pushforward", "region_scan", "riemann_exact", "riemann_fan", "sigma_map",
    "trace_characteristics", "translate", "vanishing_viscosity_study", "verify_nash",
    "viscous_solve", "wasserstein2_1d",
]
