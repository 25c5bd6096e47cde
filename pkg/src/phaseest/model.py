"""Plant parameters and the uncertainty model for the adaptive phase loop.

The phase follows an Ornstein-Uhlenbeck process observed through a
linearized homodyne measurement::

    dphi/dt = -lambda * phi + sqrt(kappa) * v
    theta   = phi + w / (2 |alpha|)

with ``v`` and ``w`` independent white noises of intensity Q and R.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

__all__ = [
    "ParameterError",
    "SystemParams",
    "UncertaintyModel",
    "NOMINAL_PHOTON_FLUX",
    "NOMINAL_KAPPA",
    "NOMINAL_LAMBDA",
    "nominal",
    "validate",
]

# Experimental values of the continuous-phase homodyne experiment.
NOMINAL_PHOTON_FLUX = 1.3499e6  # s^-1
NOMINAL_KAPPA = 1.5868e4  # rad/s
NOMINAL_LAMBDA = 6.1451e4  # rad/s


class ParameterError(ValueError):
    """Raised when a parameter set violates a model invariant."""


@dataclass(frozen=True)
class SystemParams:
    """Plant triple (lambda, kappa, |alpha|) plus noise intensities.

    Construction does not validate; call :func:`validate` for that. This
    keeps degenerate cases (``kappa = 0``) reachable for analysis.
    """

    lam: float
    kappa: float
    alpha_mag: float
    q_intensity: float = 1.0
    r_intensity: float = 1.0

    @classmethod
    def from_photon_flux(cls, lam: float, kappa: float, photon_flux: float, **kw) -> SystemParams:
        return cls(lam=lam, kappa=kappa, alpha_mag=math.sqrt(photon_flux), **kw)

    @property
    def photon_flux(self) -> float:
        return self.alpha_mag**2

    @property
    def process_intensity(self) -> float:
        """Intensity of the phase diffusion, kappa * Q."""
        return self.kappa * self.q_intensity

    @property
    def measurement_rate(self) -> float:
        """4|alpha|^2 / R, the inverse intensity of the noise on theta."""
        return 4.0 * self.alpha_mag**2 / self.r_intensity

    def replace(self, **changes) -> SystemParams:
        fields = dict(
            lam=self.lam,
            kappa=self.kappa,
            alpha_mag=self.alpha_mag,
            q_intensity=self.q_intensity,
            r_intensity=self.r_intensity,
        )
        fields.update(changes)
        return SystemParams(**fields)


@dataclass(frozen=True)
class UncertaintyModel:
    """Multiplicative uncertainty in the mean reversion rate.

    The true plant rate is ``lambda * (1 - mu * delta)``.
    """

    mu: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and 0.0 <= self.mu < 1.0):
            raise ParameterError(f"mu must lie in [0, 1), got {self.mu!r}")
        if not (math.isfinite(self.delta) and abs(self.delta) <= 1.0):
            raise ParameterError(f"delta must satisfy |delta| <= 1, got {self.delta!r}")

    def true_rate(self, lam: float) -> float:
        return lam * (1.0 - self.mu * self.delta)


def nominal(**overrides) -> SystemParams:
    """Nominal experimental parameter set, optionally with field overrides."""
    p = SystemParams.from_photon_flux(NOMINAL_LAMBDA, NOMINAL_KAPPA, NOMINAL_PHOTON_FLUX)
    return p.replace(**overrides) if overrides else p


def validate(params: SystemParams) -> SystemParams:
    """Return ``params`` unchanged, or raise on the first violated invariant."""
    checks = (
        ("lambda", params.lam, lambda x: x >= 0.0, "lambda must be non-negative"),
        ("kappa", params.kappa, lambda x: x > 0.0, "kappa must be positive"),
        ("alpha_mag", params.alpha_mag, lambda x: x > 0.0, "alpha_mag must be positive"),
        ("q_intensity", params.q_intensity, lambda x: x > 0.0, "q_intensity must be positive"),
        ("r_intensity", params.r_intensity, lambda x: x > 0.0, "r_intensity must be positive"),
    )
    for name, value, ok, message in checks:
        if not isinstance(value, numbers.Real) or not math.isfinite(value):
            raise ParameterError(f"{name} must be a finite number, got {value!r}")
        if not ok(value):
            raise ParameterError(message)
    return params
