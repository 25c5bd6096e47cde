"""Steady-state solvers sized for this problem: 2x2 Lyapunov, scalar Riccati."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SystemParams

__all__ = [
    "StabilityError",
    "SymmetricSolution",
    "is_hurwitz",
    "solve_lyapunov",
    "solve_kalman_riccati",
    "kalman_riccati_residual",
    "solve_robust_riccati",
    "robust_riccati_residual",
]


class StabilityError(ArithmeticError):
    """No stabilising / steady-state solution exists for the given data."""


@dataclass(frozen=True)
class SymmetricSolution:
    """Symmetric 2x2 matrix ``[[p1, p2], [p2, p3]]``."""

    p1: float
    p2: float
    p3: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.p1, self.p2], [self.p2, self.p3]])

    def quadratic_form(self, v) -> float:
        v0, v1 = float(v[0]), float(v[1])
        return v0 * v0 * self.p1 + 2.0 * v0 * v1 * self.p2 + v1 * v1 * self.p3


def _as_matrix2(m) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def is_hurwitz(a) -> bool:
    """True iff both eigenvalues of ``a`` have real part below ``-1e-12 * max(1, |a|)``."""
    a = _as_matrix2(a)
    tol = 1e-12 * max(1.0, float(np.linalg.norm(a, np.inf)))
    return bool(np.max(np.linalg.eigvals(a).real) < -tol)


def solve_lyapunov(a, bbt) -> SymmetricSolution:
    """Solve ``a P + P a^T + bbt = 0`` for symmetric ``P``.

    The equation is expanded into three linear equations in (p1, p2, p3)
    and solved directly.
    """
    a = _as_matrix2(a)
    q = _as_matrix2(bbt)
    if not np.allclose(q, q.T, rtol=1e-12, atol=0.0):
        raise ValueError("bbt must be symmetric")
    if not is_hurwitz(a):
        raise StabilityError("no steady-state covariance: drift matrix is not Hurwitz")

    (a11, a12), (a21, a22) = a
    lhs = np.array(
        [
            [2.0 * a11, 2.0 * a12, 0.0],
            [a21, a11 + a22, a12],
            [0.0, 2.0 * a21, 2.0 * a22],
        ]
    )
    rhs = -np.array([q[0, 0], 0.5 * (q[0, 1] + q[1, 0]), q[1, 1]])
    try:
        p1, p2, p3 = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise StabilityError(f"singular Lyapunov system: {exc}") from None
    return SymmetricSolution(float(p1), float(p2), float(p3))


def kalman_riccati_residual(params: SystemParams, p: float) -> float:
    """Left side of ``-2 lambda P - 4|alpha|^2 P^2 + kappa = 0``."""
    return -2.0 * params.lam * p - params.measurement_rate * p * p + params.process_intensity


def solve_kalman_riccati(params: SystemParams) -> float:
    """Stabilising root of the scalar Kalman filter Riccati equation.

    Equals ``(-lambda + sqrt(4 kappa |alpha|^2 + lambda^2)) / (4 |alpha|^2)``;
    evaluated in rationalized form to avoid cancellation when lambda
    dominates.
    """
    lam, kap, m = params.lam, params.process_intensity, params.measurement_rate
    root = math.sqrt(lam * lam + m * kap)
    denom = lam + root
    p = kap / denom if denom > 0.0 else 0.0
    if -lam - m * p >= 0.0 and kap > 0.0:
        raise StabilityError("Kalman Riccati root is not stabilising")
    return p


def robust_riccati_residual(params: SystemParams, mu: float, epsilon: float, q: float) -> float:
    """Left side of the guaranteed-cost Riccati equation.

    ``eps Q^2 - 4|alpha|^2 Q^2 - 2 lambda Q + mu^2 lambda^2 / eps + kappa``
    """
    lam, kap, m = params.lam, params.process_intensity, params.measurement_rate
    return (epsilon - m) * q * q - 2.0 * lam * q + (mu * lam) ** 2 / epsilon + kap


def solve_robust_riccati(params: SystemParams, mu: float, epsilon: float) -> float:
    """Upper bound ``Q+`` on the robust filter error covariance for a given ``epsilon``.

    The closed form is::

        Q+ = (-lam eps + sqrt(lam^2 eps^2 - eps^3 kap - eps^2 mu^2 lam^2
                              + 4|a|^2 eps^2 kap + 4|a|^2 eps mu^2 lam^2))
             / (eps (4|a|^2 - eps))

    computed here as ``c / (lam + sqrt(lam^2 + (4|a|^2 - eps) c))`` with
    ``c = kap + mu^2 lam^2 / eps``, the same root without cancellation.
    """
    lam, kap, m = params.lam, params.process_intensity, params.measurement_rate
    if not 0.0 <= mu < 1.0:
        raise ValueError(f"mu must lie in [0, 1), got {mu!r}")
    if not (math.isfinite(epsilon) and 0.0 < epsilon < m):
        raise ValueError(f"epsilon must lie in (0, 4|alpha|^2 / R) = (0, {m!r}), got {epsilon!r}")
    gain = m - epsilon
    c = kap + (mu * lam) ** 2 / epsilon
    disc = lam * lam + gain * c
    if disc < 0.0:
        raise StabilityError("no real stabilising solution")
    q = c / (lam + math.sqrt(disc))
    if -lam - gain * q >= 0.0:
        raise StabilityError("robust Riccati root is not stabilising")
    return q
