import math

import numpy as np
import pytest
from scipy.linalg import solve_discrete_lyapunov

from phaseest.closed_loop import augment, error_covariance
from phaseest.filters import design_kalman, design_prl
from phaseest.model import UncertaintyModel
from phaseest.montecarlo import (
    SimConfig,
    SimConfigError,
    _run_trajectory,
    convergence_check,
    simulate_closed_loop,
    trajectory_normals,
)
from phaseest.robust import design_robust

# Coarse but admissible step: a * dt ~ 0.048 for the nominal Kalman loop.
COARSE = SimConfig(dt=1.6e-7, t_total=2e-3, n_traj=100, seed=7)


def euler_stationary_error(params, filt, unc, dt):
    """Exact stationary error variance of the discretized loop (discrete Lyapunov)."""
    lam = unc.true_rate(params.lam)
    f = np.array([[1 - lam * dt, 0.0], [filt.gain_b * dt, 1 - filt.pole_a * dt]])
    g = np.diag([math.sqrt(params.kappa * dt), filt.gain_b / (2 * params.alpha_mag) * math.sqrt(dt)])
    p = solve_discrete_lyapunov(f, g @ g.T)
    # Sampled error is phi[k+1] - est[k+1], the same stationary quantity.
    return p[0, 0] - 2 * p[0, 1] + p[1, 1]


def test_seed_determinism(params):
    kf = design_kalman(params)
    a = simulate_closed_loop(params, kf, cfg=COARSE)
    b = simulate_closed_loop(params, kf, cfg=COARSE)
    assert a == b


def test_worker_count_invariance(params):
    kf = design_kalman(params)
    a = simulate_closed_loop(params, kf, cfg=COARSE, workers=1)
    b = simulate_closed_loop(params, kf, cfg=COARSE, workers=4)
    assert a == b


def test_streams_depend_only_on_seed_and_index(params):
    kf = design_kalman(params)
    unc = UncertaintyModel()
    small = SimConfig(dt=COARSE.dt, t_total=COARSE.t_total, n_traj=3, seed=11)
    large = SimConfig(dt=COARSE.dt, t_total=COARSE.t_total, n_traj=9, seed=11)
    for i in range(3):
        assert _run_trajectory(i, params, kf, unc, small, 1.0) == _run_trajectory(i, params, kf, unc, large, 1.0)
    x1, _ = trajectory_normals(5, 0)(1000)
    x2, _ = trajectory_normals(5, 1)(1000)
    assert not np.array_equal(x1, x2)


def test_normals_are_standard():
    xi, eta = trajectory_normals(1, 0)(200_000)
    for z in (xi, eta):
        assert abs(z.mean()) < 0.01
        assert abs(z.var() - 1) < 0.01
    assert abs(np.corrcoef(xi, eta)[0, 1]) < 0.01


def test_different_seeds_differ(params):
    kf = design_kalman(params)
    other = SimConfig(dt=COARSE.dt, t_total=COARSE.t_total, n_traj=COARSE.n_traj, seed=8)
    assert simulate_closed_loop(params, kf, cfg=COARSE).mse != simulate_closed_loop(params, kf, cfg=other).mse


@pytest.mark.parametrize(
    "make_filter, unc",
    [
        (design_kalman, UncertaintyModel()),
        (design_prl, UncertaintyModel()),
        (lambda p: design_robust(p, 0.8).filter, UncertaintyModel(0.8, 1.0)),
    ],
)
def test_matches_discrete_time_theory(params, make_filter, unc):
    filt = make_filter(params)
    cfg = SimConfig(dt=COARSE.dt, t_total=2e-3, n_traj=400, seed=3)
    est = simulate_closed_loop(params, filt, unc, cfg)
    assert est.agrees(euler_stationary_error(params, filt, unc, cfg.dt), 3.0)
    assert est.n_samples == 400 * (cfg.n_steps - cfg.n_burn)


def test_measurement_noise_only_loop(params):
    # Nominal Kalman filter watching a silent plant: the error is the filtered
    # measurement noise, variance b^2 / (2a) / (4|alpha|^2).
    kf = design_kalman(params)
    silent = params.replace(kappa=0.0)
    expected = kf.gain_b**2 / (2 * kf.pole_a) / (4 * params.alpha_mag**2)
    assert error_covariance(augment(silent, kf)).sigma2 == pytest.approx(expected, rel=1e-12)
    est = simulate_closed_loop(silent, kf, cfg=SimConfig(dt=1e-8, t_total=2e-3, n_traj=50, seed=5))
    assert est.agrees(expected, 3.0)


def test_zero_noise_fixed_point(params):
    kf = design_kalman(params)
    est = simulate_closed_loop(params.replace(kappa=0.0), kf, cfg=COARSE, noise_scale=0.0)
    assert est.mse == 0.0 and est.standard_error == 0.0


def test_single_trajectory_has_no_error_bar(params):
    cfg = SimConfig(dt=COARSE.dt, t_total=COARSE.t_total, n_traj=1)
    est = simulate_closed_loop(params, design_kalman(params), cfg=cfg)
    assert math.isnan(est.standard_error)
    assert not est.agrees(est.mse)


@pytest.mark.parametrize(
    "cfg",
    [
        SimConfig(dt=1e-6),  # too coarse for a ~3e5 rad/s pole
        SimConfig(t_total=1e-4),  # shorter than 20 plant time constants
        SimConfig(n_traj=0),
        SimConfig(burn_in_fraction=1.0),
        SimConfig(seed=-1),
        SimConfig(dt=0.0),
    ],
)
def test_config_rejected_before_integration(params, cfg):
    with pytest.raises(SimConfigError):
        simulate_closed_loop(params, design_kalman(params), cfg=cfg)


def test_time_constant_check_uses_perturbed_plant(params):
    # mu = 0.8, delta = 1 slows the plant to 0.2 lambda: 20 time constants ~ 1.63 ms.
    rf = design_robust(params, 0.8).filter
    with pytest.raises(SimConfigError, match="time constants"):
        simulate_closed_loop(params, rf, UncertaintyModel(0.8, 1.0), SimConfig(t_total=1.5e-3))


def test_refining_dt_reduces_bias(params):
    kf = design_kalman(params)
    exact = error_covariance(augment(params, kf)).sigma2
    coarse, fine = [], []
    for seed in range(5):
        cfg = SimConfig(dt=COARSE.dt, t_total=2e-3, n_traj=100, seed=100 + seed)
        seq = convergence_check(params, kf, cfg=cfg)
        assert [d for d, _ in seq] == pytest.approx([cfg.dt, cfg.dt / 2, cfg.dt / 4])
        coarse.append(seq[0][1])
        fine.append(seq[2][1])
    assert abs(np.mean(fine) - exact) < abs(np.mean(coarse) - exact)


def test_bias_is_first_order_in_dt(params):
    # Halving dt halves the Euler bias; the sqrt(dt) noise scaling leaves no O(1) drift.
    kf = design_kalman(params)
    exact = error_covariance(augment(params, kf)).sigma2
    bias = [euler_stationary_error(params, kf, UncertaintyModel(), dt) - exact for dt in (1.6e-7, 8e-8, 4e-8)]
    assert bias[0] / bias[1] == pytest.approx(2.0, rel=0.05)
    assert bias[1] / bias[2] == pytest.approx(2.0, rel=0.05)
