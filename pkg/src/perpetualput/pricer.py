"""Option value, greeks and an equation residual assembled from a solved
free boundary.

For S above the boundary the value is V(S) = (S/r) * int_{ln S}^inf W dx,
so each quantity falls out of one trajectory:

    V'(S)      = V/S - W(ln S)/r
    S V''(S)   = beta(ln S, W(ln S))

Below the boundary the put is exercised and the intrinsic value E - S is
returned exactly. For models with sigma = sigma(H) there is an alternative
inversion-free route in the H variable, used as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidParams, NoRoot, NotSIndependent
from .merton import MertonSolution, gamma_minus, gamma_plus, merton_price
from .numerics import Bracket, find_root, integrate_adaptive
from .solver import FreeBoundarySolution, MarketParams, SolverConfig, solve_W
from .volatility import VolatilityModel


@dataclass(frozen=True)
class PriceCurve:
    """Per-point value, delta, scaled gamma and residual over an asset grid.

    ``v_sub``/``v_super`` carry the closed-form envelope when the model
    admits one (None otherwise).
    """

    s: np.ndarray
    v: np.ndarray
    delta: np.ndarray
    h: np.ndarray
    residual: np.ndarray
    rho: float
    strike: float
    v_sub: np.ndarray | None = None
    v_super: np.ndarray | None = None

    CSV_HEADER = "S,V,delta,H,residual,V_sub,V_super"

    def rows(self) -> Iterator[tuple]:
        for i in range(len(self.s)):
            sub = self.v_sub[i] if self.v_sub is not None else None
            sup = self.v_super[i] if self.v_super is not None else None
            yield (self.s[i], self.v[i], self.delta[i], self.h[i], self.residual[i], sub, sup)


def _continuation_values(
    model: VolatilityModel,
    params: MarketParams,
    sol: FreeBoundarySolution,
    s_values: Sequence[float],
    cfg: SolverConfig,
) -> list[tuple[float, float, float]]:
    """(V, delta, H) at each S > rho, from one re-integration with exact
    samples at every ln S."""
    xs_eval = [max(math.log(s), sol.x0) for s in s_values]
    traj = solve_W(model, params, sol.x0, cfg, checkpoints=sorted(set(xs_eval)))
    total_w = traj.total_int_w()
    x_end = float(traj.xs[-1])
    out = []
    for s, x in zip(s_values, xs_eval):
        if x <= x_end:
            i = traj.index_of(x)
            w_here = float(traj.w[i])
            int_w_rest = total_w - float(traj.int_w[i])
        else:
            # Beyond truncation: decay the tail estimates from the endpoint.
            # Values here sit under cutoff * W(x0), i.e. below resolution.
            g_mid = params.r * (2.0 / model.variance_sq(1.0, 0.0))
            damp = math.exp(-(1.0 + g_mid) * (x - x_end))
            w_here = float(traj.w[-1]) * damp
            int_w_rest = 0.5 * (traj.tail_w[0] + traj.tail_w[1]) * damp
        value = (s / params.r) * int_w_rest
        slope = value / s - w_here / params.r
        out.append((value, slope, model.beta(x, w_here)))
    return out


def price(
    model: VolatilityModel,
    params: MarketParams,
    sol: FreeBoundarySolution,
    S: float,
    cfg: SolverConfig = SolverConfig(),
) -> float:
    """Put value at S: intrinsic at or below the boundary, trajectory
    integral above."""
    if not S > 0:
        raise InvalidParams(f"asset price must be > 0, got {S}")
    if S <= sol.rho:
        return params.E - S
    return _continuation_values(model, params, sol, [S], cfg)[0][0]


def delta(
    model: VolatilityModel,
    params: MarketParams,
    sol: FreeBoundarySolution,
    S: float,
    cfg: SolverConfig = SolverConfig(),
) -> float:
    """dV/dS at S; equals -1 at and below the boundary (smooth pasting)."""
    if not S > 0:
        raise InvalidParams(f"asset price must be > 0, got {S}")
    if S <= sol.rho:
        return -1.0
    return _continuation_values(model, params, sol, [S], cfg)[0][1]


def gamma_h(
    model: VolatilityModel,
    params: MarketParams,
    sol: FreeBoundarySolution,
    S: float,
    cfg: SolverConfig = SolverConfig(),
) -> float:
    """Scaled gamma H = S V''(S); zero below the boundary, nonnegative above."""
    if not S > 0:
        raise InvalidParams(f"asset price must be > 0, got {S}")
    if S <= sol.rho:
        return 0.0
    return _continuation_values(model, params, sol, [S], cfg)[0][2]


def residual(
    model: VolatilityModel,
    params: MarketParams,
    sol: FreeBoundarySolution,
    S: float,
    cfg: SolverConfig = SolverConfig(),
) -> float:
    """Stationary-equation defect sigma^2 S^2 V''/2 + r S V' - r V at S.

    Meaningful in the continuation region S > rho; evaluated on the
    intrinsic branch (as below a misplaced boundary) it reports -r E, which
    makes boundary misplacement visible.
    """
    if not S > 0:
        raise InvalidParams(f"asset price must be > 0, got {S}")
    if S <= sol.rho:
        v, dv, h = params.E - S, -1.0, 0.0
    else:
        v, dv, h = _continuation_values(model, params, sol, [S], cfg)[0]
    return 0.5 * model.variance_sq(S, h) * S * h + params.r * S * dv - params.r * v


def _h_of_s(
    model: VolatilityModel,
    params: MarketParams,
    rho: float,
    h0: float,
    S: float,
    cfg: SolverConfig,
) -> float:
    """Invert the log-distance integral: H(S) with
    int_{H(S)}^{h0} (d(sigma^2 h)/dh / 2) / (sigma^2 h / 2 + r h) dh = ln(S/rho)."""
    target = math.log(S / rho)
    if target == 0.0:
        return h0

    def log_distance(H: float) -> float:
        f = lambda h: 0.5 * model.d_variance_H(1.0, h) / (
            0.5 * model.variance_sq(1.0, h) * h + params.r * h
        )
        return integrate_adaptive(f, H, h0, cfg.tol_quad)

    lo = 0.5 * h0
    for _ in range(900):
        if log_distance(lo) > target:
            break
        lo *= 0.5
        if lo == 0.0:
            break
    else:
        raise NoRoot(f"log-distance {target} unreachable from H0={h0}")
    if lo == 0.0:
        raise NoRoot(f"log-distance {target} unreachable from H0={h0}")
    return find_root(lambda H: log_distance(H) - target, Bracket(lo, h0), cfg.tol_root)


def price_h_form(
    model: VolatilityModel,
    params: MarketParams,
    rho: float,
    S: float,
    cfg: SolverConfig = SolverConfig(),
) -> float:
    """Put value in the H variable, for sigma = sigma(H) and S >= rho.

    Avoids the trajectory entirely: the upper limit H(S) comes from the
    transported log-distance integral and the value from a second quadrature
    with the smooth weight sigma^2/2 / (sigma^2/2 + r).
    """
    if not model.s_independent():
        raise NotSIndependent("H-form pricing requires sigma = sigma(H)")
    if not S > 0:
        raise InvalidParams(f"asset price must be > 0, got {S}")
    if S < rho * (1.0 - 1e-12):
        raise InvalidParams(f"H-form pricing needs S >= rho, got S={S}, rho={rho}")
    r = params.r
    h0 = model.beta(0.0, r * params.E / rho)
    hs = _h_of_s(model, params, rho, h0, max(S, rho), cfg)

    s2_floor = model.variance_sq(1.0, 0.0)

    def integrand(H: float) -> float:
        s2 = s2_floor if H <= 0 else model.variance_sq(1.0, H)
        dv = s2_floor if H <= 0 else model.d_variance_H(1.0, H)
        return (0.5 * s2 / (0.5 * s2 + r)) * 0.5 * dv

    return (S / r) * integrate_adaptive(integrand, 0.0, hs, cfg.tol_quad)


def build_curve(
    model: VolatilityModel,
    params: MarketParams,
    sol: FreeBoundarySolution,
    s_grid: Sequence[float],
    cfg: SolverConfig = SolverConfig(),
) -> PriceCurve:
    """Evaluate value, delta, scaled gamma and residual over a sorted grid.

    Continuation points share a single trajectory. When the model admits the
    closed-form envelope, the bounding curves are attached (lower bound from
    the floor volatility, upper bound from the boundary-matched one).
    """
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or len(s) == 0:
        raise InvalidParams("s_grid must be a non-empty 1-d sequence")
    if np.any(s <= 0) or np.any(np.diff(s) < 0):
        raise InvalidParams("s_grid must be positive and sorted ascending")

    v = np.empty_like(s)
    dv = np.empty_like(s)
    h = np.empty_like(s)
    res = np.empty_like(s)

    exercised = s <= sol.rho
    v[exercised] = params.E - s[exercised]
    dv[exercised] = -1.0
    h[exercised] = 0.0
    res[exercised] = 0.0

    cont_idx = np.nonzero(~exercised)[0]
    if len(cont_idx):
        vals = _continuation_values(model, params, sol, s[cont_idx].tolist(), cfg)
        for j, (vi, di, hi) in zip(cont_idx, vals):
            v[j], dv[j], h[j] = vi, di, hi
            res[j] = (
                0.5 * model.variance_sq(s[j], hi) * s[j] * hi
                + params.r * s[j] * di
                - params.r * vi
            )

    v_sub = v_super = None
    if model.s_independent():
        g_lo = gamma_plus(model, params.r)
        g_hi = gamma_minus(model, params.r)
        lower = MertonSolution.from_gamma(g_hi, params.E)
        upper = MertonSolution.from_gamma(g_lo, params.E)
        v_sub = np.array([merton_price(lower, si) for si in s])
        v_super = np.array([merton_price(upper, si) for si in s])

    return PriceCurve(
        s=s, v=v, delta=dv, h=h, residual=res,
        rho=sol.rho, strike=params.E, v_sub=v_sub, v_super=v_super,
    )
