"""First-order feedback filters: the exponential (PRL) filter and the Kalman filter."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .lti import solve_kalman_riccati
from .model import SystemParams

__all__ = [
    "FilterKind",
    "FirstOrderFilter",
    "chi_opt",
    "design_prl",
    "design_kalman",
    "analytic_cov_prl",
    "analytic_cov_prl_printed",
    "analytic_cov_kalman",
]


class FilterKind(enum.Enum):
    PRL = "PRL"
    KALMAN = "Kalman"
    ROBUST = "Robust"


@dataclass(frozen=True)
class FirstOrderFilter:
    """Filter ``d/dt est = -pole_a * est + gain_b * theta``, i.e. ``b / (s + a)``."""

    pole_a: float
    gain_b: float
    label: FilterKind

    def __post_init__(self):
        if not self.pole_a > 0.0:
            raise ValueError(f"filter pole must be positive (stable), got {self.pole_a!r}")

    def transfer_function(self) -> str:
        return f"{self.gain_b!r}/(s+{self.pole_a!r})"

    def __str__(self) -> str:
        return f"G_{self.label.value}(s) = {self.transfer_function()}"


def chi_opt(params: SystemParams) -> float:
    """Bandwidth ``2|alpha| sqrt(kappa)``, optimal for the exponential filter as lambda -> 0."""
    return math.sqrt(params.measurement_rate * params.process_intensity)


def design_prl(params: SystemParams, chi: float | None = None) -> FirstOrderFilter:
    """Exponential filter ``chi / (s + chi)``; ``chi`` defaults to :func:`chi_opt`."""
    if chi is None:
        chi = chi_opt(params)
    return FirstOrderFilter(pole_a=chi, gain_b=chi, label=FilterKind.PRL)


def design_kalman(params: SystemParams) -> FirstOrderFilter:
    """Steady-state Kalman filter ``K / (s + lambda + K)`` with ``K = 4|alpha|^2 P``."""
    gain = params.measurement_rate * solve_kalman_riccati(params)
    return FirstOrderFilter(pole_a=params.lam + gain, gain_b=gain, label=FilterKind.KALMAN)


def analytic_cov_prl(params: SystemParams, chi: float | None = None) -> float:
    """Steady-state error covariance of the exponential filter loop.

    For a general bandwidth this is ``kappa / (2 (lambda + chi)) + chi / (8|alpha|^2)``,
    which at ``chi = chi_opt`` equals
    ``chi (lambda + 2 chi) / (8 |alpha|^2 (lambda + chi))``.
    """
    if chi is None:
        chi = chi_opt(params)
    return params.process_intensity / (2.0 * (params.lam + chi)) + chi / (2.0 * params.measurement_rate)


def analytic_cov_prl_printed(params: SystemParams) -> tuple[float, float]:
    """Both published closed forms at ``chi_opt`` (unit noise intensities)."""
    lam, kap, a = params.lam, params.kappa, params.alpha_mag
    chi = 2.0 * a * math.sqrt(kap)
    first = chi * (lam + 2.0 * chi) / (8.0 * a * a * (lam + chi))
    second = math.sqrt(kap) * (lam + 4.0 * a * math.sqrt(kap)) / (4.0 * a * (lam + 2.0 * a * math.sqrt(kap)))
    return first, second


def analytic_cov_kalman(params: SystemParams) -> float:
    """Kalman error covariance ``K / (4|alpha|^2)``, the Riccati solution itself."""
    return solve_kalman_riccati(params)
