"""Figure rendering for the CLI report paths.

Matplotlib is imported lazily so the library stays importable in headless
minimal environments; figures always go to files (Agg backend).
"""

from __future__ import annotations

from typing import Sequence

from .pricer import PriceCurve


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_price_curve_figure(curve: PriceCurve, path: str) -> None:
    """Value curve with intrinsic payoff and, when present, the closed-form
    envelope as dashed lines."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(curve.s, curve.v, color="tab:blue", lw=1.8, label="V(S)")
    payoff = [max(curve.strike - s, 0.0) for s in curve.s]
    ax.plot(curve.s, payoff, color="0.55", lw=1.0, label="intrinsic E-S")
    if curve.v_sub is not None and curve.v_super is not None:
        ax.plot(curve.s, curve.v_sub, "--", color="tab:orange", lw=1.2, label="lower bound")
        ax.plot(curve.s, curve.v_super, "--", color="tab:green", lw=1.2, label="upper bound")
    ax.axvline(curve.rho, color="tab:red", lw=0.9, ls=":", label=f"rho = {curve.rho:.4f}")
    ax.set_xlabel("asset price S")
    ax.set_ylabel("option value V")
    ax.set_xlim(float(curve.s[0]), float(curve.s[-1]))
    ax.set_ylim(bottom=0.0)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_parameter_figure(
    values: Sequence[float],
    rhos: Sequence[float | None],
    v_at_strike: Sequence[float | None],
    param_name: str,
    path: str,
) -> None:
    """Boundary and at-strike value against a swept model parameter."""
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.8))
    ok = [i for i, r in enumerate(rhos) if r is not None]
    xs = [values[i] for i in ok]
    ax1.plot(xs, [rhos[i] for i in ok], "o-", color="tab:blue", ms=4)
    ax1.set_xlabel(param_name)
    ax1.set_ylabel("exercise boundary rho")
    ax2.plot(xs, [v_at_strike[i] for i in ok], "o-", color="tab:orange", ms=4)
    ax2.set_xlabel(param_name)
    ax2.set_ylabel("V at the strike")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
