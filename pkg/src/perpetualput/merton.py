"""Closed-form perpetual put under constant volatility, and the two constant
volatilities whose closed forms bracket the nonlinear solution.

For constant sigma0 the perpetual put has the classical solution with
exercise boundary rho = E * g / (1 + g), g = 2 r / sigma0^2. For a model
depending on H only, evaluating sigma at H = 0 and at H = 1 + g (the scaled
gamma the closed form attains at its own boundary) yields constants
gamma_minus >= gamma_plus whose closed forms sandwich both the price curve
and the free boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidParams, NotSIndependent
from .numerics import Bracket, ToleranceSpec, find_root
from .volatility import ModelKind, VolatilityModel

_GAMMA_TOL = ToleranceSpec(rel_tol=1e-12, abs_tol=1e-14, max_iter=200)


@dataclass(frozen=True)
class MertonSolution:
    """Closed-form evaluator state: exponent, strike and boundary."""

    gamma: float
    strike: float
    boundary: float

    def __post_init__(self) -> None:
        if not (self.gamma > 0 and self.strike > 0):
            raise InvalidParams(f"gamma and strike must be > 0, got {self.gamma}, {self.strike}")
        expected = self.strike * self.gamma / (1.0 + self.gamma)
        if abs(self.boundary - expected) > 1e-9 * self.strike:
            raise InvalidParams(
                f"boundary {self.boundary} inconsistent with strike*gamma/(1+gamma)={expected}"
            )

    @classmethod
    def from_gamma(cls, gamma: float, strike: float) -> "MertonSolution":
        return cls(gamma, strike, strike * gamma / (1.0 + gamma))


def merton_gamma(r: float, sigma0: float) -> float:
    """Decay exponent 2 r / sigma0^2 of the constant-volatility put."""
    if not (r > 0 and sigma0 > 0):
        raise InvalidParams(f"need r > 0 and sigma0 > 0, got r={r}, sigma0={sigma0}")
    return 2.0 * r / (sigma0 * sigma0)


def merton_price(sol: MertonSolution, S: float) -> float:
    """Closed-form put value; intrinsic below the boundary, power decay above."""
    if S < 0:
        raise InvalidParams(f"asset price must be >= 0, got {S}")
    if S <= sol.boundary:
        return sol.strike - S
    return sol.strike / (1.0 + sol.gamma) * (S / sol.boundary) ** (-sol.gamma)


def merton_delta(sol: MertonSolution, S: float) -> float:
    """Derivative of :func:`merton_price` in S; -1 at and below the boundary."""
    if S < 0:
        raise InvalidParams(f"asset price must be >= 0, got {S}")
    if S <= sol.boundary:
        return -1.0
    g = sol.gamma
    return -(g * sol.strike / ((1.0 + g) * sol.boundary)) * (S / sol.boundary) ** (-g - 1.0)


def gamma_minus(model: VolatilityModel, r: float) -> float:
    """Exponent from the floor volatility sigma(., 0); upper bound for rho."""
    if not r > 0:
        raise InvalidParams(f"need r > 0, got {r}")
    return 2.0 * r / model.variance_sq(1.0, 0.0)


def gamma_plus(model: VolatilityModel, r: float) -> float:
    """Exponent g solving g * sigma(1 + g)^2 = 2 r; lower bound for rho.

    Defined only for models with sigma = sigma(H): the volatility argument is
    the scaled gamma 1 + g that the matching closed form attains at its own
    boundary. The map g -> g * sigma(1+g)^2 increases from 0, so the root is
    unique and lies in (0, gamma_minus].
    """
    if not r > 0:
        raise InvalidParams(f"need r > 0, got {r}")
    if not model.s_independent():
        raise NotSIndependent("gamma_plus requires sigma = sigma(H)")
    g_minus = gamma_minus(model, r)
    if model.kind is ModelKind.CONSTANT:
        return g_minus

    def f(g: float) -> float:
        return g * model.variance_sq(1.0, 1.0 + g) - 2.0 * r

    if f(g_minus) <= 0.0:  # volatility numerically flat: root sits at the top
        return g_minus
    return find_root(f, Bracket(1e-10, g_minus), _GAMMA_TOL)


def bounds_interval(model: VolatilityModel, r: float, E: float) -> tuple[float, float]:
    """(rho_plus, rho_minus): certified interval containing the free boundary."""
    if not E > 0:
        raise InvalidParams(f"strike must be > 0, got {E}")
    g_plus = gamma_plus(model, r)
    g_minus = gamma_minus(model, r)
    return (E * g_plus / (1.0 + g_plus), E * g_minus / (1.0 + g_minus))
