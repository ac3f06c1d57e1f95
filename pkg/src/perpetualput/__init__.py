"""Perpetual American put pricing under gamma-dependent volatility.

The put value and its early-exercise boundary solve a stationary
free-boundary problem. This package locates the boundary through a scalar
ODE transformation with an implicit integral equation, prices the option
from the resulting trajectory (or through inversion-free quadratures when
the volatility depends on scaled gamma only), and supplies closed-form
constant-volatility bounds as independent checks.
"""

from .errors import PerpetualPutError
from .merton import (
    MertonSolution,
    bounds_interval,
    gamma_minus,
    gamma_plus,
    merton_delta,
    merton_gamma,
    merton_price,
)
from .numerics import Bracket, ToleranceSpec, find_root, integrate_adaptive, integrate_ode
from .pricer import PriceCurve, build_curve, delta, gamma_h, price, price_h_form, residual
from .solver import (
    FreeBoundarySolution,
    MarketParams,
    SolveMethod,
    SolverConfig,
    WTrajectory,
    W_monotonicity_probe,
    phi,
    solve_W,
    solve_free_boundary,
    solve_free_boundary_general,
    solve_free_boundary_h,
    solve_free_boundary_w,
)
from .volatility import ModelKind, PsiTable, VolatilityModel, build_psi_table, default_psi_table, psi

__version__ = "0.1.0"

__all__ = [
    "Bracket",
    "FreeBoundarySolution",
    "MarketParams",
    "MertonSolution",
    "ModelKind",
    "PerpetualPutError",
    "PriceCurve",
    "PsiTable",
    "SolveMethod",
    "SolverConfig",
    "ToleranceSpec",
    "VolatilityModel",
    "WTrajectory",
    "W_monotonicity_probe",
    "bounds_interval",
    "build_curve",
    "build_psi_table",
    "default_psi_table",
    "delta",
    "find_root",
    "gamma_h",
    "gamma_minus",
    "gamma_plus",
    "integrate_adaptive",
    "integrate_ode",
    "merton_delta",
    "merton_gamma",
    "merton_price",
    "phi",
    "price",
    "price_h_form",
    "psi",
    "residual",
    "solve_W",
    "solve_free_boundary",
    "solve_free_boundary_general",
    "solve_free_boundary_h",
    "solve_free_boundary_w",
]
