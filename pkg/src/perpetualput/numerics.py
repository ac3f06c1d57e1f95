"""Self-contained scalar numerics: bracketed root finding, adaptive quadrature
and an embedded Runge-Kutta integrator with step-exact checkpoints.

All routines are pure functions over caller-owned state and safe for
concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    InvalidParams,
    MaxIterExceeded,
    MaxSubdivisions,
    NonFiniteIntegrand,
    NoSignChange,
    StepUnderflow,
    StopNeverReached,
)

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class Bracket:
    """Interval [lo, hi] expected to straddle a sign change."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidParams(f"bracket endpoints must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise InvalidParams(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class ToleranceSpec:
    """Accuracy request: relative part, absolute part and an iteration budget.

    The budget means iterations for root finding, recursion depth for
    quadrature and accepted steps for ODE integration.
    """

    rel_tol: float
    abs_tol: float
    max_iter: int

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise InvalidParams(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.abs_tol < 0:
            raise InvalidParams(f"abs_tol must be >= 0, got {self.abs_tol}")
        if self.max_iter < 1:
            raise InvalidParams(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_ROOT_TOL = ToleranceSpec(rel_tol=1e-10, abs_tol=1e-12, max_iter=200)
DEFAULT_QUAD_TOL = ToleranceSpec(rel_tol=1e-10, abs_tol=1e-12, max_iter=60)
DEFAULT_ODE_TOL = ToleranceSpec(rel_tol=1e-10, abs_tol=1e-12, max_iter=1_000_000)


def find_root(f: Callable[[float], float], bracket: Bracket, tol: ToleranceSpec = DEFAULT_ROOT_TOL) -> float:
    """Locate the root of ``f`` inside ``bracket``.

    Inverse-quadratic / secant steps with a bisection safeguard, so
    convergence is guaranteed for any continuous ``f`` with a sign change.
    An endpoint with f == 0 is returned directly.
    """
    a, b = bracket.lo, bracket.hi
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise NoSignChange(f"f({a})={fa} and f({b})={fb} have the same sign")

    c, fc = a, fa
    d = e = b - a
    for _ in range(tol.max_iter):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb

        tol_x = 2.0 * _EPS * abs(b) + 0.5 * (tol.abs_tol + tol.rel_tol * abs(b))
        m = 0.5 * (c - b)
        if abs(m) <= tol_x or fb == 0.0:
            return b

        if abs(e) < tol_x or abs(fa) <= abs(fb):
            d = e = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            else:
                p = -p
            s, e = e, d
            if 2.0 * p < 3.0 * m * q - abs(tol_x * q) and p < abs(0.5 * s * q):
                d = p / q
            else:
                d = e = m

        a, fa = b, fb
        if abs(d) > tol_x:
            b += d
        else:
            b += tol_x if m > 0 else -tol_x
        fb = f(b)
        if fb == 0.0:
            return b
    raise MaxIterExceeded(f"root not bracketed to tolerance within {tol.max_iter} iterations")


def integrate_adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: ToleranceSpec = DEFAULT_QUAD_TOL,
) -> float:
    """Adaptive-Simpson estimate of the integral of ``f`` over [a, b].

    Recursive bisection with Richardson correction. The per-level error
    budget shrinks by sqrt(2) rather than 2, which keeps the total error
    within a small multiple of the request while letting endpoint power
    kinks (x**1/3 and the like) converge by depth alone. Raises
    NonFiniteIntegrand on NaN/inf evaluations, MaxSubdivisions when the
    depth or node budget is exhausted with the local error still too large.
    """
    if a > b:
        raise InvalidParams(f"integration bounds out of order: [{a}, {b}]")
    if a == b:
        return 0.0

    evals = [0]
    budget = 2_000_000

    def feval(x: float) -> float:
        v = f(x)
        if not math.isfinite(v):
            raise NonFiniteIntegrand(f"integrand not finite at x={x}: {v}")
        evals[0] += 1
        if evals[0] > budget:
            raise MaxSubdivisions(f"quadrature node budget {budget} exhausted")
        return v

    fa, fb = feval(a), feval(b)
    m = 0.5 * (a + b)
    fm = feval(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    eps = tol.abs_tol + tol.rel_tol * abs(whole)
    depth_cap = max(tol.max_iter, 40)

    def recurse(lo: float, hi: float, flo: float, fmid: float, fhi: float, simp: float, err: float, depth: int) -> float:
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        if lm <= lo or rm >= hi:  # interval at float resolution
            return simp
        flm, frm = feval(lm), feval(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - simp
        if abs(delta) <= 15.0 * err:
            return left + right + delta / 15.0
        if depth >= depth_cap:
            raise MaxSubdivisions(
                f"interval [{lo}, {hi}] still above tolerance at depth {depth}"
            )
        return (
            recurse(lo, mid, flo, flm, fmid, left, err / math.sqrt(2.0), depth + 1)
            + recurse(mid, hi, fmid, frm, fhi, right, err / math.sqrt(2.0), depth + 1)
        )

    return recurse(a, b, fa, fm, fb, whole, eps, 0)


class OdeTrajectory(NamedTuple):
    """Ordered samples of an ODE solution: abscissae and state rows."""

    xs: np.ndarray  # shape (n,)
    ys: np.ndarray  # shape (n, dim)

    def index_of(self, x: float) -> int:
        """Index of the sample at abscissa ``x`` (must be a checkpoint hit)."""
        i = int(np.searchsorted(self.xs, x))
        if i >= len(self.xs) or self.xs[i] != x:
            raise InvalidParams(f"x={x} is not a recorded sample")
        return i


# Cash-Karp embedded 4(5) pair.
_CK_A = (0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8)
_CK_B = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
)
_CK_C5 = (37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771)
_CK_C4 = (2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4)


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    x_start: float,
    y0: Sequence[float],
    stop: Callable[[float, np.ndarray], bool],
    tol: ToleranceSpec = DEFAULT_ODE_TOL,
    *,
    x_limit: float | None = None,
    max_step: float = 1.0,
    checkpoints: Iterable[float] = (),
) -> OdeTrajectory:
    """Integrate ``dy/dx = rhs(x, y)`` forward from ``x_start`` until ``stop`` triggers.

    Adaptive Cash-Karp 4(5) steps with per-step error below
    ``abs_tol + rel_tol * |y|``. ``checkpoints`` are abscissae the stepper
    lands on exactly, so they appear verbatim among the samples. The sample
    that triggers ``stop`` is included. Raises StepUnderflow when the step
    collapses and StopNeverReached when ``x_limit`` is passed first.
    """
    x = float(x_start)
    y = np.asarray(y0, dtype=float)
    cps = sorted(c for c in checkpoints if c > x)

    xs = [x]
    ys = [y.copy()]
    if stop(x, y):
        return OdeTrajectory(np.array(xs), np.array(ys))

    h = min(max_step, 1e-2)
    k = np.empty((6, y.size))
    for _ in range(tol.max_iter):
        if x_limit is not None and x >= x_limit:
            raise StopNeverReached(f"stop condition not met before x={x_limit}")
        h = min(h, max_step)
        if x_limit is not None:
            h = min(h, x_limit - x + 1e-9)
        x_target = None
        if cps and x + h >= cps[0]:
            x_target = cps[0]
            h = x_target - x
        if h < 1e-14 * max(1.0, abs(x)):
            raise StepUnderflow(f"step size {h} underflowed at x={x}")

        k[0] = rhs(x, y)
        for i in range(1, 6):
            yi = y + h * sum(bij * k[j] for j, bij in enumerate(_CK_B[i]))
            k[i] = rhs(x + _CK_A[i] * h, yi)
        y5 = y + h * sum(c * k[i] for i, c in enumerate(_CK_C5) if c)
        y4 = y + h * sum(c * k[i] for i, c in enumerate(_CK_C4) if c)

        scale = tol.abs_tol + tol.rel_tol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.sqrt(np.mean(((y5 - y4) / scale) ** 2)))
        if err <= 1.0:
            x = x_target if x_target is not None else x + h
            y = y5
            if x_target is not None:
                cps.pop(0)
            xs.append(x)
            ys.append(y.copy())
            if stop(x, y):
                return OdeTrajectory(np.array(xs), np.array(ys))
            h *= min(5.0, max(0.2, 0.9 * err ** -0.2)) if err > 0 else 5.0
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    raise MaxIterExceeded(f"ODE step budget {tol.max_iter} exhausted at x={x}")
