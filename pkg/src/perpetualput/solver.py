"""Free-boundary location for the perpetual put under gamma-dependent volatility.

The stationary pricing problem reduces to a scalar first-order ODE for the
transformed variable W(x) = (r/S)(V - S V'), x = ln S, with initial value
W(x0) = r E e^{-x0} at the candidate boundary x0:

    W' = -W - r * beta(x, W),

where beta inverts H -> sigma^2 H / 2. The boundary is the unique x0 at
which the accumulated scaled gamma equals one:

    phi(x0) = integral_{x0}^{inf} beta(x, W(x)) dx = 1,

and phi decreases strictly in x0, so a bracketed root find is exact. Three
interchangeable routes are provided: the general ODE route above, and - for
models with sigma = sigma(H) only - two quadrature routes obtained by the
substitutions w = W(x) and w = sigma(H)^2 H / 2, which avoid the ODE solve
(and the second also every beta inversion).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BracketExpansionFailed,
    HorizonExceeded,
    InvalidParams,
    NotSIndependent,
    StopNeverReached,
)
from .merton import bounds_interval, gamma_minus
from .numerics import (
    Bracket,
    OdeTrajectory,
    ToleranceSpec,
    find_root,
    integrate_adaptive,
    integrate_ode,
)
from .volatility import VolatilityModel


@dataclass(frozen=True)
class MarketParams:
    """Risk-free rate (per year) and strike."""

    r: float
    E: float

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise InvalidParams(f"r must be > 0, got {self.r}")
        if not self.E > 0:
            raise InvalidParams(f"strike must be > 0, got {self.E}")


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs: tolerances, truncation and bracketing margins.

    ODE and quadrature tolerances default 100x tighter than the root
    tolerance so sign decisions made by the outer root finder are reliable.
    ``tail_cutoff`` is relative to the initial value W(x0) = r E / rho.
    """

    tol_root: ToleranceSpec = field(default_factory=lambda: ToleranceSpec(1e-10, 1e-12, 200))
    tol_ode: ToleranceSpec = field(default_factory=lambda: ToleranceSpec(1e-12, 1e-14, 1_000_000))
    tol_quad: ToleranceSpec = field(default_factory=lambda: ToleranceSpec(1e-12, 1e-14, 64))
    tail_cutoff: float = 1e-12
    x_horizon: float = 200.0
    bracket_margin: float = 1e-6

    def __post_init__(self) -> None:
        for name in ("tail_cutoff", "x_horizon", "bracket_margin"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be > 0")


class SolveMethod(str, enum.Enum):
    GENERAL_ODE = "general"
    W_QUADRATURE = "w-quad"
    H_QUADRATURE = "h-quad"


@dataclass(frozen=True)
class WTrajectory:
    """Samples of (x, W, int W dx, int beta dx) plus two-sided tail bounds.

    Integrals run from the initial abscissa. The trajectory is truncated once
    W falls under the cutoff; the unresolved tails are enclosed by the decay
    rates 1 + r*beta/w evaluated with the floor and the tail-maximal
    volatility, which pin both remaining integrals to narrow intervals.
    """

    xs: np.ndarray
    w: np.ndarray
    int_w: np.ndarray
    int_beta: np.ndarray
    tail_w: tuple[float, float]
    tail_beta: tuple[float, float]

    @property
    def x0(self) -> float:
        return float(self.xs[0])

    def index_of(self, x: float) -> int:
        i = int(np.searchsorted(self.xs, x))
        if i >= len(self.xs) or self.xs[i] != x:
            raise InvalidParams(f"x={x} was not requested as an evaluation point")
        return i

    def total_int_w(self) -> float:
        return float(self.int_w[-1]) + 0.5 * (self.tail_w[0] + self.tail_w[1])

    def total_int_beta(self) -> float:
        return float(self.int_beta[-1]) + 0.5 * (self.tail_beta[0] + self.tail_beta[1])


@dataclass(frozen=True)
class FreeBoundarySolution:
    """Computed exercise boundary with its trajectory and diagnostics."""

    rho: float
    x0: float
    trajectory: WTrajectory
    phi_residual: float
    method: SolveMethod

    def to_dict(self, verbose: bool = False) -> dict:
        out = {
            "rho": self.rho,
            "x0": self.x0,
            "method": self.method.value,
            "phi_residual": self.phi_residual,
        }
        if verbose:
            out["trajectory"] = {
                "x": self.trajectory.xs.tolist(),
                "w": self.trajectory.w.tolist(),
                "int_w": self.trajectory.int_w.tolist(),
                "int_beta": self.trajectory.int_beta.tolist(),
            }
        return out


def solve_W(
    model: VolatilityModel,
    params: MarketParams,
    x0: float,
    cfg: SolverConfig = SolverConfig(),
    *,
    checkpoints: Sequence[float] = (),
) -> WTrajectory:
    """Integrate the transformed state from x0 until W decays under the cutoff.

    The state vector carries (W, int W, int beta) so one error control
    covers the trajectory and both integrals. ``checkpoints`` are abscissae
    that become exact samples (used by the pricer). Points beyond the
    truncation abscissa are silently dropped; query the tail bounds instead.
    """
    if not math.isfinite(x0):
        raise InvalidParams(f"x0 must be finite, got {x0}")
    w0 = params.r * params.E * math.exp(-x0)
    cutoff = cfg.tail_cutoff * w0

    def rhs(x: float, y: np.ndarray) -> np.ndarray:
        b = model.beta(x, y[0])
        return np.array([-y[0] - params.r * b, y[0], b])

    try:
        traj: OdeTrajectory = integrate_ode(
            rhs,
            x0,
            [w0, 0.0, 0.0],
            stop=lambda x, y: y[0] <= cutoff,
            tol=cfg.tol_ode,
            x_limit=x0 + cfg.x_horizon,
            max_step=0.25,
            checkpoints=[c for c in checkpoints if c > x0],
        )
    except StopNeverReached as exc:
        raise HorizonExceeded(f"W did not decay within {cfg.x_horizon} of x0={x0}") from exc

    xs = traj.xs
    w = traj.ys[:, 0]
    x_end = float(xs[-1])
    wm = float(w[-1])

    # Two-sided tails: r*beta/w lies between 2r/sigma_tail^2 and 2r/sigma0^2,
    # where sigma_tail^2 is evaluated at an upper bound for H (and, for
    # price-dependent models, for the product S*H, which stays bounded).
    s2_floor = model.variance_sq(1.0, 0.0)
    h_up = 2.0 * wm / s2_floor
    s2_tail = model.variance_sq(math.exp(x_end), h_up)
    g_hi = 2.0 * params.r / s2_floor
    g_lo = 2.0 * params.r / s2_tail
    tail_w = (wm / (1.0 + g_hi), wm / (1.0 + g_lo))
    tail_beta = ((2.0 / s2_tail) * tail_w[0], (2.0 / s2_floor) * tail_w[1])

    return WTrajectory(
        xs=xs,
        w=w,
        int_w=traj.ys[:, 1],
        int_beta=traj.ys[:, 2],
        tail_w=tail_w,
        tail_beta=tail_beta,
    )


def phi(model: VolatilityModel, params: MarketParams, x0: float, cfg: SolverConfig = SolverConfig()) -> float:
    """Accumulated scaled gamma along the trajectory started at x0.

    Strictly decreasing in x0 with limits +inf and 0, so phi(x0) = 1 has a
    unique root: the exercise boundary.
    """
    return solve_W(model, params, x0, cfg).total_int_beta()


def _finalize(
    model: VolatilityModel,
    params: MarketParams,
    x0: float,
    method: SolveMethod,
    cfg: SolverConfig,
    residual: float | None = None,
) -> FreeBoundarySolution:
    traj = solve_W(model, params, x0, cfg)
    if residual is None:
        residual = traj.total_int_beta() - 1.0
    return FreeBoundarySolution(
        rho=math.exp(x0),
        x0=x0,
        trajectory=traj,
        phi_residual=abs(residual),
        method=method,
    )


def _general_bracket(model: VolatilityModel, params: MarketParams, cfg: SolverConfig):
    """Bracket for the boundary abscissa, guaranteed to straddle phi = 1."""
    if model.s_independent():
        rho_plus, rho_minus = bounds_interval(model, params.r, params.E)
        return Bracket(
            math.log(rho_plus) - cfg.bracket_margin,
            math.log(rho_minus) + cfg.bracket_margin,
        )
    # No certified bounds: expand geometrically around the floor-volatility
    # boundary. phi -> inf as x0 -> -inf and -> 0 as x0 -> inf.
    g = gamma_minus(model, params.r)
    hi = math.log(params.E * g / (1.0 + g)) + cfg.bracket_margin
    lo = hi - 1.0
    width = 1.0
    for _ in range(60):
        if phi(model, params, hi, cfg) < 1.0:
            break
        width *= 2.0
        hi += width
    else:
        raise BracketExpansionFailed("phi never fell below 1 while expanding upward")
    width = 1.0
    for _ in range(60):
        if phi(model, params, lo, cfg) > 1.0:
            return Bracket(lo, hi)
        width *= 2.0
        lo -= width
    raise BracketExpansionFailed("phi never exceeded 1 while expanding downward")


def solve_free_boundary_general(
    model: VolatilityModel,
    params: MarketParams,
    cfg: SolverConfig = SolverConfig(),
) -> FreeBoundarySolution:
    """Locate the boundary by root finding on the ODE-route phi; works for any model."""
    bracket = _general_bracket(model, params, cfg)

    def f(x0: float) -> float:
        return phi(model, params, x0, cfg) - 1.0

    x0 = find_root(f, bracket, cfg.tol_root)
    return _finalize(model, params, x0, SolveMethod.GENERAL_ODE, cfg)


def _w_integrand(model: VolatilityModel, r: float):
    s2 = model.variance_sq(1.0, 0.0)
    slope0 = 2.0 / s2

    def integrand(w: float) -> float:
        if w <= 0.0:
            return slope0 / (1.0 + r * slope0)
        b = model.beta(0.0, w)
        return b / (w + r * b)

    return integrand


def solve_free_boundary_w(
    model: VolatilityModel,
    params: MarketParams,
    cfg: SolverConfig = SolverConfig(),
) -> FreeBoundarySolution:
    """Boundary via the substitution w = W(x): G(u) = int_0^u beta/(w + r beta) dw.

    G increases strictly, G(u*) = 1 determines u* = r E / rho. Requires
    sigma = sigma(H).
    """
    if not model.s_independent():
        raise NotSIndependent("w-quadrature requires sigma = sigma(H)")
    r, E = params.r, params.E
    integrand = _w_integrand(model, r)

    def G_minus_one(u: float) -> float:
        return integrate_adaptive(integrand, 0.0, u, cfg.tol_quad) - 1.0

    rho_plus, rho_minus = bounds_interval(model, r, E)
    u_lo = r * E / rho_minus * (1.0 - cfg.bracket_margin)
    u_hi = r * E / rho_plus * (1.0 + cfg.bracket_margin)
    u_star = find_root(G_minus_one, Bracket(u_lo, u_hi), cfg.tol_root)
    x0 = math.log(r * E / u_star)
    return _finalize(
        model, params, x0, SolveMethod.W_QUADRATURE, cfg, residual=G_minus_one(u_star)
    )


def _h_rho_integrand(model: VolatilityModel, r: float):
    s2_floor = model.variance_sq(1.0, 0.0)

    def integrand(H: float) -> float:
        if H <= 0.0:
            return 0.5 * s2_floor / (0.5 * s2_floor + r)
        return 0.5 * model.d_variance_H(1.0, H) / (0.5 * model.variance_sq(1.0, H) + r)

    return integrand


def solve_free_boundary_h(
    model: VolatilityModel,
    params: MarketParams,
    cfg: SolverConfig = SolverConfig(),
) -> FreeBoundarySolution:
    """Boundary via the substitution w = sigma(H)^2 H / 2; no inversion at all.

    Finds H* with K(H*) = 1 for the transported integrand, then
    rho = r E / (sigma(H*)^2 H* / 2). The integrand is at least
    1/(1 + gamma_minus), so H* <= 1 + gamma_minus supplies the upper end of
    the bracket; the lower end shrinks geometrically until K < 1.
    """
    if not model.s_independent():
        raise NotSIndependent("h-quadrature requires sigma = sigma(H)")
    r, E = params.r, params.E
    integrand = _h_rho_integrand(model, r)

    def K_minus_one(H: float) -> float:
        return integrate_adaptive(integrand, 0.0, H, cfg.tol_quad) - 1.0

    hi = (1.0 + gamma_minus(model, r)) * (1.0 + cfg.bracket_margin)
    lo = 0.5 * hi
    for _ in range(60):
        if K_minus_one(lo) < 0.0:
            break
        lo *= 0.5
    else:
        raise BracketExpansionFailed("K never fell below 1 while shrinking the bracket")
    h_star = find_root(K_minus_one, Bracket(lo, hi), cfg.tol_root)
    w_star = model.half_sigma_sq_H(1.0, h_star)
    x0 = math.log(r * E / w_star)
    return _finalize(
        model, params, x0, SolveMethod.H_QUADRATURE, cfg, residual=K_minus_one(h_star)
    )


def solve_free_boundary(
    model: VolatilityModel,
    params: MarketParams,
    cfg: SolverConfig = SolverConfig(),
    method: SolveMethod | str = "auto",
) -> FreeBoundarySolution:
    """Dispatch to the requested route; ``auto`` prefers the inversion-free
    quadrature when available and falls back to the general ODE route."""
    if method == "auto":
        method = SolveMethod.H_QUADRATURE if model.s_independent() else SolveMethod.GENERAL_ODE
    method = SolveMethod(method)
    if method is SolveMethod.GENERAL_ODE:
        return solve_free_boundary_general(model, params, cfg)
    if method is SolveMethod.W_QUADRATURE:
        return solve_free_boundary_w(model, params, cfg)
    return solve_free_boundary_h(model, params, cfg)


def W_monotonicity_probe(
    model: VolatilityModel,
    params: MarketParams,
    x0_a: float,
    x0_b: float,
    x_eval: float,
    cfg: SolverConfig = SolverConfig(),
) -> tuple[float, float]:
    """Evaluate two trajectories at a common abscissa and check their order.

    Trajectories started further right dominate: the returned pair
    (W_a(x_eval), W_b(x_eval)) with x0_a < x0_b must be strictly increasing.
    """
    if not x0_a < x0_b:
        raise InvalidParams(f"need x0_a < x0_b, got {x0_a}, {x0_b}")
    if x_eval < x0_b:
        raise InvalidParams(f"need x_eval >= x0_b, got {x_eval}")

    def w_at(x0: float) -> float:
        if x_eval == x0:
            return params.r * params.E * math.exp(-x0)
        w0 = params.r * params.E * math.exp(-x0)

        def rhs(x: float, y: np.ndarray) -> np.ndarray:
            return np.array([-y[0] - params.r * model.beta(x, y[0])])

        traj = integrate_ode(
            rhs,
            x0,
            [w0],
            stop=lambda x, y: x >= x_eval,
            tol=cfg.tol_ode,
            x_limit=x0 + cfg.x_horizon,
            max_step=0.25,
            checkpoints=[x_eval],
        )
        return float(traj.ys[-1, 0])

    w_a, w_b = w_at(x0_a), w_at(x0_b)
    if not w_b > w_a:
        raise InvalidParams(
            f"monotonicity violated: W_a(x_eval)={w_a} >= W_b(x_eval)={w_b}"
        )
    return w_a, w_b
