"""Guaranteed-cost robust filter for an uncertain mean reversion rate.

The plant rate is only known to within ``lambda (1 - mu delta)``, ``|delta| <= 1``.
For each scaling parameter ``epsilon`` in ``(0, 4|alpha|^2)`` the robust Riccati
equation yields a bound ``Q+(epsilon)`` on the closed-loop error covariance
that holds for every admissible ``delta``; the design picks the ``epsilon``
that minimizes the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .filters import FilterKind, FirstOrderFilter, design_kalman
from .lti import StabilityError, solve_kalman_riccati, solve_robust_riccati
from .model import SystemParams

__all__ = ["RobustDesign", "BoundPoint", "epsilon_opt", "design_robust", "robust_bound_curve"]


@dataclass(frozen=True)
class RobustDesign:
    epsilon: float
    q_plus: float
    filter: FirstOrderFilter
    mu: float


class BoundPoint(NamedTuple):
    epsilon: float
    q_plus: float
    valid: bool


def _check_mu(mu: float) -> None:
    if not (math.isfinite(mu) and 0.0 <= mu < 1.0):
        raise ValueError(f"mu must lie in [0, 1), got {mu!r}")


def epsilon_opt(params: SystemParams, mu: float) -> float:
    """Closed-form minimizer of ``Q+(epsilon)``::

        eps_opt = (lam (1 - mu) + sqrt(lam^2 (1 - mu)^2 + 4|a|^2 kap)) mu lam / kap
    """
    _check_mu(mu)
    lam, kap, m = params.lam, params.process_intensity, params.measurement_rate
    root = math.sqrt(mu * mu * lam * lam - 2.0 * lam * lam * mu + lam * lam + m * kap)
    return (-lam * mu + lam + root) * mu * lam / kap


def design_robust(params: SystemParams, mu: float) -> RobustDesign:
    """Robust filter at ``epsilon_opt``.

    ``mu = 0`` returns the Kalman design (``epsilon = 0``), since the bound
    formula is 0/0 there.
    """
    _check_mu(mu)
    m = params.measurement_rate
    if mu == 0.0:
        kf = design_kalman(params)
        return RobustDesign(
            epsilon=0.0,
            q_plus=solve_kalman_riccati(params),
            filter=FirstOrderFilter(kf.pole_a, kf.gain_b, FilterKind.ROBUST),
            mu=0.0,
        )
    eps = epsilon_opt(params, mu)
    if not 0.0 < eps < m:
        raise StabilityError(f"optimal epsilon {eps!r} falls outside (0, {m!r})")
    q_plus = solve_robust_riccati(params, mu, eps)
    filt = FirstOrderFilter(
        pole_a=params.lam + (m - eps) * q_plus,
        gain_b=m * q_plus,
        label=FilterKind.ROBUST,
    )
    return RobustDesign(epsilon=eps, q_plus=q_plus, filter=filt, mu=mu)


def robust_bound_curve(params: SystemParams, mu: float, eps_grid: Sequence[float]) -> list[BoundPoint]:
    """``Q+`` at each grid point; unsolvable points come back with ``valid=False``."""
    out = []
    for eps in eps_grid:
        eps = float(eps)
        try:
            out.append(BoundPoint(eps, solve_robust_riccati(params, mu, eps), True))
        except (ValueError, StabilityError):
            out.append(BoundPoint(eps, math.nan, False))
    return out
