"""Gamma-dependent volatility models and the inverse map used by the solver.

A model supplies the squared diffusion coefficient sigma(S, H)^2 where
H = S * d2V/dS2 is the scaled option gamma. Three variants are provided:

* ``constant``      -- sigma0^2,
* ``rapm``          -- sigma0^2 * (1 + lam * H^(1/3)),
* ``barles-soner``  -- sigma0^2 * (1 + Psi(a^2 * S * H)) with Psi the
  preference function defined by the scalar ODE
  Psi'(x) = (Psi + 1) / (2 sqrt(x Psi) - x), Psi(0) = 0.

Every variant is nondecreasing in H, bounded below by sigma0 > 0, and is
extended by its H=0 value to H <= 0. That makes H -> sigma(S,H)^2 H / 2
strictly increasing, and :meth:`VolatilityModel.beta` is its inverse.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import (
    InvalidParams,
    InversionFailed,
    MaxIterExceeded,
    NegativeArgument,
    NonPositiveAsset,
    NonPositiveGamma,
    NoSignChange,
)
from .numerics import Bracket, ToleranceSpec, find_root, integrate_ode

# Leading series coefficients of Psi near zero: Psi ~ C1 x^(1/3) + C2 x^(2/3).
PSI_SMALL_X_COEFF = 1.5 ** (2.0 / 3.0)
_PSI_SMALL_X_COEFF2 = 0.8 * math.sqrt(PSI_SMALL_X_COEFF)

_BETA_TOL = ToleranceSpec(rel_tol=1e-13, abs_tol=0.0, max_iter=300)


class ModelKind(str, enum.Enum):
    CONSTANT = "constant"
    RAPM = "rapm"
    BARLES_SONER = "barles-soner"


@dataclass(frozen=True)
class PsiTable:
    """Log-spaced samples of the preference function plus its tail behaviour.

    Interpolation runs in log-log coordinates with monotone (Fritsch-Carlson)
    cubic Hermite slopes; below ``x_min`` the two-term small-x series is used,
    above ``x_max`` the linear tail (Psi grows like x at infinity).
    """

    log_x: np.ndarray
    log_values: np.ndarray
    slopes: np.ndarray
    x_min: float
    x_max: float
    small_coeff: float
    tail_slope: float
    tail_intercept: float


def _pchip_slopes(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Monotonicity-preserving Hermite slopes (Fritsch-Carlson)."""
    h = np.diff(t)
    delta = np.diff(v) / h
    d = np.empty_like(v)
    d[0] = delta[0]
    d[-1] = delta[-1]
    dl, dr = delta[:-1], delta[1:]
    hl, hr = h[:-1], h[1:]
    w1 = 2.0 * hr + hl
    w2 = hr + 2.0 * hl
    interior = np.where(dl * dr > 0, (w1 + w2) / (w1 / dl + w2 / dr), 0.0)
    d[1:-1] = interior
    return d


def build_psi_table(x_min: float = 1e-8, x_max: float = 1e6, n: int = 2000) -> PsiTable:
    """Integrate the preference ODE once over a log grid and tabulate it."""
    if not (0 < x_min < x_max) or n < 4:
        raise InvalidParams("psi table needs 0 < x_min < x_max and n >= 4")
    ts = np.linspace(math.log(x_min), math.log(x_max), n)
    seed = PSI_SMALL_X_COEFF * x_min ** (1.0 / 3.0) + _PSI_SMALL_X_COEFF2 * x_min ** (2.0 / 3.0)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        x = math.exp(t)
        psi_v = y[0]
        return np.array([x * (psi_v + 1.0) / (2.0 * math.sqrt(x * psi_v) - x)])

    traj = integrate_ode(
        rhs,
        ts[0],
        [seed],
        stop=lambda t, y: t >= ts[-1],
        tol=ToleranceSpec(rel_tol=1e-12, abs_tol=1e-30, max_iter=2_000_000),
        checkpoints=ts,
        max_step=0.5,
    )
    idx = np.searchsorted(traj.xs, ts)
    values = traj.ys[idx, 0]
    if np.any(values <= 0) or np.any(np.diff(values) <= 0):
        raise InvalidParams("psi table must be positive and strictly increasing")

    log_v = np.log(values)
    slope = (values[-1] - values[-2]) / (x_max - math.exp(ts[-2]))
    intercept = values[-1] - slope * x_max
    return PsiTable(
        log_x=ts,
        log_values=log_v,
        slopes=_pchip_slopes(ts, log_v),
        x_min=x_min,
        x_max=x_max,
        small_coeff=PSI_SMALL_X_COEFF,
        tail_slope=slope,
        tail_intercept=intercept,
    )


def psi(table: PsiTable, xv: float) -> float:
    """Evaluate the preference function at ``xv >= 0``."""
    if xv < 0:
        raise NegativeArgument(f"psi argument must be >= 0, got {xv}")
    if xv == 0.0:
        return 0.0
    if xv < table.x_min:
        return table.small_coeff * xv ** (1.0 / 3.0) + _PSI_SMALL_X_COEFF2 * xv ** (2.0 / 3.0)
    if xv > table.x_max:
        return table.tail_slope * xv + table.tail_intercept

    t = math.log(xv)
    ts = table.log_x
    i = int(np.searchsorted(ts, t)) - 1
    i = min(max(i, 0), len(ts) - 2)
    h = ts[i + 1] - ts[i]
    u = (t - ts[i]) / h
    v0, v1 = table.log_values[i], table.log_values[i + 1]
    d0, d1 = table.slopes[i], table.slopes[i + 1]
    u2, u3 = u * u, u * u * u
    val = (
        (2 * u3 - 3 * u2 + 1) * v0
        + (u3 - 2 * u2 + u) * h * d0
        + (-2 * u3 + 3 * u2) * v1
        + (u3 - u2) * h * d1
    )
    return math.exp(val)


_DEFAULT_TABLE: PsiTable | None = None


def default_psi_table() -> PsiTable:
    """Shared lazily-built preference table (immutable once constructed)."""
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = build_psi_table()
    return _DEFAULT_TABLE


@dataclass(frozen=True)
class VolatilityModel:
    """Specification of sigma(S, H)^2; immutable and concurrency-safe."""

    kind: ModelKind
    sigma0: float
    lam: float = 0.0
    a: float = 0.0

    def __post_init__(self) -> None:
        if not self.sigma0 > 0:
            raise InvalidParams(f"sigma0 must be > 0, got {self.sigma0}")
        if self.lam < 0:
            raise InvalidParams(f"lambda must be >= 0, got {self.lam}")
        if self.a < 0:
            raise InvalidParams(f"a must be >= 0, got {self.a}")

    # --- construction --------------------------------------------------

    @classmethod
    def constant(cls, sigma0: float) -> "VolatilityModel":
        return cls(ModelKind.CONSTANT, sigma0)

    @classmethod
    def rapm(cls, sigma0: float, lam: float) -> "VolatilityModel":
        return cls(ModelKind.RAPM, sigma0, lam=lam)

    @classmethod
    def barles_soner(cls, sigma0: float, a: float) -> "VolatilityModel":
        return cls(ModelKind.BARLES_SONER, sigma0, a=a)

    @classmethod
    def from_dict(cls, spec: Mapping) -> "VolatilityModel":
        try:
            kind = ModelKind(str(spec["variant"]).lower())
        except (KeyError, ValueError) as exc:
            raise InvalidParams(f"bad model spec: {spec!r}") from exc
        return cls(
            kind,
            float(spec.get("sigma0", 0.3)),
            lam=float(spec.get("lambda", 0.0)),
            a=float(spec.get("a", 0.0)),
        )

    def to_dict(self) -> dict:
        return {
            "variant": self.kind.value,
            "sigma0": self.sigma0,
            "lambda": self.lam,
            "a": self.a,
        }

    # --- queries --------------------------------------------------------

    def s_independent(self) -> bool:
        """True when sigma depends on H only (constant and power models)."""
        return self.kind is not ModelKind.BARLES_SONER

    def variance_sq(self, S: float, H: float) -> float:
        """sigma(S, H)^2, clamped to the H=0 value for H <= 0."""
        if not S > 0:
            raise NonPositiveAsset(f"asset price must be > 0, got {S}")
        s2 = self.sigma0 * self.sigma0
        if H <= 0 or self.kind is ModelKind.CONSTANT:
            return s2
        if self.kind is ModelKind.RAPM:
            return s2 * (1.0 + self.lam * H ** (1.0 / 3.0))
        return s2 * (1.0 + psi(default_psi_table(), self.a * self.a * S * H))

    def half_sigma_sq_H(self, S: float, H: float) -> float:
        """w = sigma(S, H)^2 H / 2; strictly increasing in H, zero at H = 0."""
        return 0.5 * self.variance_sq(S, H) * H

    def d_variance_H(self, S: float, H: float) -> float:
        """d/dH of sigma(S, H)^2 H, for H > 0."""
        if not S > 0:
            raise NonPositiveAsset(f"asset price must be > 0, got {S}")
        if not H > 0:
            raise NonPositiveGamma(f"H must be > 0, got {H}")
        s2 = self.sigma0 * self.sigma0
        if self.kind is ModelKind.CONSTANT:
            return s2
        if self.kind is ModelKind.RAPM:
            return s2 * (1.0 + (4.0 / 3.0) * self.lam * H ** (1.0 / 3.0))
        h = max(1e-6 * H, 1e-12)
        up = self.variance_sq(S, H + h) * (H + h)
        lo_h = max(H - h, 0.0)
        down = self.variance_sq(S, lo_h) * lo_h if lo_h > 0 else 0.0
        return (up - down) / (h + (H - lo_h))

    def beta(self, x: float, w: float, tol: ToleranceSpec = _BETA_TOL) -> float:
        """Inverse of H -> sigma(e^x, H)^2 H / 2 at the value ``w``.

        For w <= 0 the map is linear with slope sigma0^2 / 2 by the H <= 0
        extension. For w > 0 the root lies in (0, 2 w / sigma0^2], which gives
        a guaranteed bracket.
        """
        s2 = self.sigma0 * self.sigma0
        if w == 0.0:
            return 0.0
        if w < 0 or self.kind is ModelKind.CONSTANT:
            return 2.0 * w / s2
        S = math.exp(x)
        hi = 2.0 * w / s2

        def g(H: float) -> float:
            return self.half_sigma_sq_H(S, H) - w

        try:
            return find_root(g, Bracket(0.0, hi * (1.0 + 1e-9)), tol)
        except (NoSignChange, MaxIterExceeded) as exc:
            raise InversionFailed(
                f"could not invert half_sigma_sq_H at x={x}, w={w}"
            ) from exc
