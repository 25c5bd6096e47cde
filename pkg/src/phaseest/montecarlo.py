"""Euler-Maruyama ensemble simulation of the closed loop.

An independent check on the Lyapunov covariances: the perturbed OU phase,
the linearized measurement and a first-order filter are integrated in the
time domain, and the steady-state mean-square estimation error is averaged
over time and over independent trajectories.

Random numbers: trajectory ``i`` owns a Philox4x64-10 stream keyed by
``SeedSequence([seed, i])``; standard normals come from the Box-Muller
transform of its uniform doubles, one (process, measurement) pair per
step. Results therefore do not depend on how trajectories are scheduled
across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .filters import FirstOrderFilter
from .model import SystemParams, UncertaintyModel

__all__ = [
    "RNG_ALGORITHM",
    "SimConfig",
    "SimConfigError",
    "MseEstimate",
    "trajectory_normals",
    "simulate_closed_loop",
    "convergence_check",
]

RNG_ALGORITHM = "numpy.random.Philox(SeedSequence([seed, trajectory]))+box-muller/v1"

# Steps integrated per block. Fixed so results never depend on worker count.
_CHUNK = 1 << 16


class SimConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-8
    t_total: float = 2e-3
    n_traj: int = 200
    burn_in_fraction: float = 0.2
    seed: int = 20160712

    @property
    def n_steps(self) -> int:
        return int(round(self.t_total / self.dt))

    @property
    def n_burn(self) -> int:
        return int(math.floor(self.burn_in_fraction * self.n_steps))

    def check(self, params: SystemParams, filt: FirstOrderFilter, unc: UncertaintyModel) -> None:
        """Raise :class:`SimConfigError` unless the config suits this loop."""
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise SimConfigError("dt must be positive")
        if not (self.t_total > 0.0 and math.isfinite(self.t_total)):
            raise SimConfigError("t_total must be positive")
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise SimConfigError("n_traj must be a positive integer")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise SimConfigError("burn_in_fraction must lie in [0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise SimConfigError("seed must be an unsigned 64-bit integer")
        fastest = max(params.lam * (1.0 + unc.mu), filt.pole_a)
        if self.dt > 0.05 / fastest:
            raise SimConfigError(f"dt={self.dt!r} exceeds 0.05/{fastest!r}; discretization bias would dominate")
        rates = [filt.pole_a]
        plant_rate = unc.true_rate(params.lam)
        if plant_rate > 0.0:
            rates.append(plant_rate)
        slowest = 1.0 / min(rates)
        if self.t_total < 20.0 * slowest:
            raise SimConfigError(f"t_total={self.t_total!r} is shorter than 20 time constants ({20.0 * slowest!r})")
        if self.n_steps - self.n_burn < 1:
            raise SimConfigError("no samples left after burn-in")


@dataclass(frozen=True)
class MseEstimate:
    mse: float
    standard_error: float
    n_samples: int

    def agrees(self, value: float, n_se: float = 3.0) -> bool:
        """``|mse - value| <= n_se * standard_error`` (never true for a nan error bar)."""
        return bool(abs(self.mse - value) <= n_se * self.standard_error)


def trajectory_normals(seed: int, index: int):
    """Generator of ``(xi, eta)`` blocks of standard normals for one trajectory."""
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))

    def draw(n: int) -> tuple[np.ndarray, np.ndarray]:
        u = gen.random((2, n))
        radius = np.sqrt(-2.0 * np.log1p(-u[0]))
        angle = 2.0 * np.pi * u[1]
        return radius * np.cos(angle), radius * np.sin(angle)

    return draw


def _run_trajectory(index, params, filt, unc, cfg, noise_scale) -> float:
    """Time-averaged squared error over the post-burn-in part of one trajectory."""
    draw = trajectory_normals(cfg.seed, index)
    dt = cfg.dt
    lam_true = unc.true_rate(params.lam)
    phi_decay = 1.0 - lam_true * dt
    est_decay = 1.0 - filt.pole_a * dt
    proc_sd = math.sqrt(params.process_intensity * dt)
    meas_sd = noise_scale * filt.gain_b * math.sqrt(dt / params.measurement_rate)

    # Stationary start for the plant when it has one; the filter starts at zero.
    xi0, _ = draw(1)
    if lam_true > 0.0:
        phi = math.sqrt(params.process_intensity / (2.0 * lam_true)) * float(xi0[0])
    else:
        phi = 0.0
    est = 0.0

    n_steps, n_burn = cfg.n_steps, cfg.n_burn
    total = 0.0
    done = 0
    while done < n_steps:
        n = min(_CHUNK, n_steps - done)
        xi, eta = draw(n)
        # phi[k+1] = phi_decay * phi[k] + proc_sd * xi[k]
        phi_next, _ = lfilter([1.0], [1.0, -phi_decay], proc_sd * xi, zi=[phi_decay * phi])
        phi_now = np.empty(n)
        phi_now[0] = phi
        phi_now[1:] = phi_next[:-1]
        # est[k+1] = est_decay * est[k] + b dt phi[k] + meas_sd * eta[k]
        drive = filt.gain_b * dt * phi_now + meas_sd * eta
        est_next, _ = lfilter([1.0], [1.0, -est_decay], drive, zi=[est_decay * est])

        start = max(0, n_burn - done)
        if start < n:
            err = phi_next[start:] - est_next[start:]
            total += float(np.dot(err, err))
        phi, est = float(phi_next[-1]), float(est_next[-1])
        done += n

    return total / (n_steps - n_burn)


def simulate_closed_loop(
    params: SystemParams,
    filt: FirstOrderFilter,
    uncertainty: UncertaintyModel | None = None,
    cfg: SimConfig | None = None,
    *,
    workers: int = 1,
    noise_scale: float = 1.0,
) -> MseEstimate:
    """Ensemble steady-state MSE of ``phi - estimate`` with a standard error over trajectories.

    ``noise_scale`` multiplies the measurement noise and exists for
    degenerate-case tests. ``workers`` only changes wall time, never the result.
    """
    unc = uncertainty or UncertaintyModel()
    cfg = cfg or SimConfig()
    cfg.check(params, filt, unc)

    def job(i):
        return _run_trajectory(i, params, filt, unc, cfg, noise_scale)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            means = list(pool.map(job, range(cfg.n_traj)))
    else:
        means = [job(i) for i in range(cfg.n_traj)]

    n = len(means)
    mse = math.fsum(means) / n
    if n > 1:
        var = math.fsum((m - mse) ** 2 for m in means) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = math.nan
    return MseEstimate(mse=mse, standard_error=stderr, n_samples=n * (cfg.n_steps - cfg.n_burn))


def convergence_check(
    params: SystemParams,
    filt: FirstOrderFilter,
    uncertainty: UncertaintyModel | None = None,
    cfg: SimConfig | None = None,
    *,
    workers: int = 1,
    factors: Sequence[int] = (1, 2, 4),
) -> list[tuple[float, float]]:
    """``(dt, mse)`` at ``dt / f`` for each factor, with the same total duration."""
    cfg = cfg or SimConfig()
    out = []
    for f in factors:
        sub = SimConfig(
            dt=cfg.dt / f,
            t_total=cfg.t_total,
            n_traj=cfg.n_traj,
            burn_in_fraction=cfg.burn_in_fraction,
            seed=cfg.seed,
        )
        est = simulate_closed_loop(params, filt, uncertainty, sub, workers=workers)
        out.append((sub.dt, est.mse))
    return out
