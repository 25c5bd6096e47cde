"""Closed-loop covariance analysis of plant + first-order filter.

The loop state is ``x = [phi, estimate]`` driven by ``[v, w]``::

    d/dt phi      = -lambda_true phi + sqrt(kappa) v
    d/dt estimate = b phi - a estimate + b / (2|alpha|) w

The same two-state model covers the exponential, Kalman and robust filters;
only ``(a, b)`` change. The estimation error is ``[1, -1] x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .filters import FirstOrderFilter, analytic_cov_kalman, analytic_cov_prl, design_kalman, design_prl
from .lti import SymmetricSolution, solve_lyapunov
from .model import SystemParams, UncertaintyModel
from .robust import design_robust

__all__ = [
    "AugmentedSystem",
    "CovarianceResult",
    "LambdaPoint",
    "DeltaPoint",
    "DEFAULT_DELTA_GRID",
    "default_lambda_grid",
    "augment",
    "error_covariance",
    "sweep_lambda",
    "sweep_delta",
]

DEFAULT_DELTA_GRID = tuple(float(d) for d in np.linspace(-1.0, 1.0, 81))


def default_lambda_grid(include=(6.1451e4,)) -> tuple[float, ...]:
    """200 log-spaced points on [1e2, 1e7] rad/s, plus the points in ``include``."""
    grid = set(float(x) for x in np.logspace(2.0, 7.0, 200))
    grid.update(float(x) for x in include)
    return tuple(sorted(grid))


@dataclass(frozen=True)
class AugmentedSystem:
    a_bar: np.ndarray
    b_bar: np.ndarray
    error_selector: np.ndarray = field(default_factory=lambda: np.array([1.0, -1.0]))


@dataclass(frozen=True)
class CovarianceResult:
    p_s: SymmetricSolution
    sigma2: float


class LambdaPoint(NamedTuple):
    lam: float
    sigma2_prl: float
    sigma2_kalman: float


class DeltaPoint(NamedTuple):
    delta: float
    sigma2_kalman: float
    sigma2_robust: float
    q_plus_bound: float


def augment(
    params: SystemParams,
    filt: FirstOrderFilter,
    uncertainty: UncertaintyModel | None = None,
) -> AugmentedSystem:
    """Stack the (possibly perturbed) plant and ``filt`` into one linear SDE."""
    unc = uncertainty or UncertaintyModel()
    a_bar = np.array(
        [
            [-unc.true_rate(params.lam), 0.0],
            [filt.gain_b, -filt.pole_a],
        ]
    )
    b_bar = np.diag([math.sqrt(params.process_intensity), filt.gain_b / math.sqrt(params.measurement_rate)])
    return AugmentedSystem(a_bar=a_bar, b_bar=b_bar)


def _selector_basis(selector: np.ndarray) -> np.ndarray:
    # Invertible T whose second row is the selector, so (T x)[1] is the error.
    c0, c1 = float(selector[0]), float(selector[1])
    if c1 != 0.0:
        return np.array([[1.0, 0.0], [c0, c1]])
    if c0 != 0.0:
        return np.array([[0.0, 1.0], [c0, c1]])
    raise ValueError("error selector must be nonzero")


def error_covariance(sys: AugmentedSystem) -> CovarianceResult:
    """Steady-state covariance of the loop and of the selected error.

    ``sigma2`` equals ``selector^T P_S selector`` but is taken from the same
    Lyapunov equation written in coordinates whose second state is the
    error itself; contracting ``P_S`` directly cancels catastrophically when
    the plant variance ``kappa / (2 lambda)`` dwarfs the error.
    """
    bbt = sys.b_bar @ sys.b_bar.T
    p_s = solve_lyapunov(sys.a_bar, bbt)
    t = _selector_basis(sys.error_selector)
    t_inv = np.linalg.inv(t)
    tb = t @ sys.b_bar
    p_err = solve_lyapunov(t @ sys.a_bar @ t_inv, tb @ tb.T)
    return CovarianceResult(p_s=p_s, sigma2=p_err.p3)


def _lyapunov_sigma2(params, filt, unc=None) -> float:
    return error_covariance(augment(params, filt, unc)).sigma2


def sweep_lambda(kappa: float, alpha_mag: float, lambda_grid: Sequence[float]) -> list[LambdaPoint]:
    """Exponential vs Kalman covariance across mean reversion rates.

    Three spot points (first, middle, last) are re-derived through the
    Lyapunov route; a mismatch above 1e-9 relative raises ``RuntimeError``.
    """
    grid = [float(x) for x in lambda_grid]
    if not grid:
        raise ValueError("lambda grid is empty")
    if grid[0] <= 0.0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("lambda grid must be strictly positive and ascending")

    rows = []
    for lam in grid:
        p = SystemParams(lam=lam, kappa=kappa, alpha_mag=alpha_mag)
        rows.append(LambdaPoint(lam, analytic_cov_prl(p), analytic_cov_kalman(p)))

    for i in sorted({0, len(grid) // 2, len(grid) - 1}):
        p = SystemParams(lam=grid[i], kappa=kappa, alpha_mag=alpha_mag)
        for analytic, filt in ((rows[i].sigma2_prl, design_prl(p)), (rows[i].sigma2_kalman, design_kalman(p))):
            lyap = _lyapunov_sigma2(p, filt)
            if abs(lyap - analytic) > 1e-9 * abs(analytic):
                raise RuntimeError(
                    f"Lyapunov/analytic mismatch at lambda={grid[i]!r}: {lyap!r} vs {analytic!r}"
                )
    return rows


def sweep_delta(params: SystemParams, mu: float, delta_grid: Sequence[float] = DEFAULT_DELTA_GRID) -> list[DeltaPoint]:
    """Kalman vs robust covariance as the true plant rate moves over ``delta``.

    Both filters are designed for the nominal rate; only the plant is perturbed.
    """
    kalman = design_kalman(params)
    robust = design_robust(params, mu)
    rows = []
    for delta in delta_grid:
        unc = UncertaintyModel(mu=mu, delta=float(delta))
        rows.append(
            DeltaPoint(
                float(delta),
                _lyapunov_sigma2(params, kalman, unc),
                _lyapunov_sigma2(params, robust.filter, unc),
                robust.q_plus,
            )
        )
    return rows
