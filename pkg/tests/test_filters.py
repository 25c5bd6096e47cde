import math

import numpy as np
import pytest

from phaseest.closed_loop import augment, error_covariance
from phaseest.filters import (
    FilterKind,
    FirstOrderFilter,
    analytic_cov_kalman,
    analytic_cov_prl,
    analytic_cov_prl_printed,
    chi_opt,
    design_kalman,
    design_prl,
)
from phaseest.lti import solve_kalman_riccati
from phaseest.model import SystemParams

PRINTED = 5e-3  # paper prints rounded intermediates


def random_triples(rng, n):
    """Random (lambda, kappa, |alpha|) with lambda / chi_opt log-uniform in [1e-3, 1e2]."""
    out = []
    for _ in range(n):
        kappa = 10 ** rng.uniform(0, 6)
        alpha = 10 ** rng.uniform(0, 4)
        lam = 10 ** rng.uniform(-3, 2) * 2 * alpha * math.sqrt(kappa)
        out.append(SystemParams(lam, kappa, alpha))
    return out


def test_design_prl(params):
    f = design_prl(params)
    assert f.label is FilterKind.PRL
    assert f.pole_a == f.gain_b == chi_opt(params)
    assert f.pole_a == pytest.approx(292824, rel=PRINTED)
    assert design_prl(SystemParams(1.0, 1.0, 0.5)).pole_a == pytest.approx(1.0)
    k0 = params.kappa
    assert design_prl(params.replace(kappa=4 * k0)).pole_a == pytest.approx(2 * design_prl(params).pole_a)


def test_design_prl_general_bandwidth(params):
    f = design_prl(params, chi=1e5)
    assert (f.pole_a, f.gain_b) == (1e5, 1e5)


def test_design_kalman(params):
    f = design_kalman(params)
    assert f.gain_b == pytest.approx(237643, rel=PRINTED)
    assert f.pole_a == pytest.approx(299094, rel=PRINTED)
    assert f.pole_a == pytest.approx(math.sqrt(4 * params.kappa * params.alpha_mag**2 + params.lam**2), rel=1e-12)
    assert f.gain_b == pytest.approx(4 * params.alpha_mag**2 * solve_kalman_riccati(params), rel=1e-12)


def test_kalman_equals_prl_at_lambda_zero(params):
    p0 = params.replace(lam=0.0)
    k, e = design_kalman(p0), design_prl(p0)
    assert k.gain_b == pytest.approx(e.gain_b, rel=1e-14)
    assert k.pole_a == pytest.approx(e.pole_a, rel=1e-14)


def test_kalman_gain_vanishes_without_process_noise(params):
    gains = [design_kalman(params.replace(kappa=k)).gain_b for k in (1e2, 1e0, 1e-2, 0.0)]
    assert gains == sorted(gains, reverse=True)
    assert gains[-1] == 0.0


def test_transfer_function_text(params):
    f = FirstOrderFilter(2.5, 0.1, FilterKind.KALMAN)
    assert f.transfer_function() == "0.1/(s+2.5)"
    b, a = design_kalman(params).transfer_function().replace("(s+", "").rstrip(")").split("/")
    assert float(b) == design_kalman(params).gain_b and float(a) == design_kalman(params).pole_a
    with pytest.raises(ValueError):
        FirstOrderFilter(0.0, 1.0, FilterKind.PRL)


def test_covariances_at_nominal(params):
    assert analytic_cov_prl(params) == pytest.approx(0.0495, rel=PRINTED)
    assert analytic_cov_kalman(params) == pytest.approx(0.044, rel=PRINTED)


def test_covariances_at_lambda_zero(params):
    p0 = params.replace(lam=0.0)
    limit = math.sqrt(params.kappa) / (2 * params.alpha_mag)
    assert limit == pytest.approx(0.0542, rel=PRINTED)
    assert analytic_cov_prl(p0) == pytest.approx(limit, rel=1e-14)
    assert analytic_cov_kalman(p0) == pytest.approx(limit, rel=1e-14)


def test_prl_large_lambda_limit(params):
    limit = math.sqrt(params.kappa) / (4 * params.alpha_mag)
    vals = [analytic_cov_prl(params.replace(lam=lam)) for lam in (1e8, 1e10, 1e12)]
    errs = [abs(v - limit) / limit for v in vals]
    assert errs == sorted(errs, reverse=True) and errs[-1] < 1e-6


def test_printed_forms_agree(rng):
    for p in random_triples(rng, 10_000):
        first, second = analytic_cov_prl_printed(p)
        assert second == pytest.approx(first, rel=1e-12)
        assert analytic_cov_prl(p) == pytest.approx(first, rel=1e-12)


def test_kalman_dominates_prl(rng):
    for p in random_triples(rng, 10_000):
        s_p, s_k = analytic_cov_prl(p), analytic_cov_kalman(p)
        assert s_k <= s_p
        assert (s_p - s_k) / s_p > 1e-10  # strict away from lambda = 0
    p0 = SystemParams(0.0, 3.0, 7.0)
    assert analytic_cov_kalman(p0) == pytest.approx(analytic_cov_prl(p0), rel=1e-10)


def test_gap_closes_as_lambda_vanishes(params):
    gaps = [analytic_cov_prl(params.replace(lam=lam)) - analytic_cov_kalman(params.replace(lam=lam))
            for lam in np.logspace(5, -3, 17)]
    assert all(g >= 0 for g in gaps)
    assert gaps == sorted(gaps, reverse=True)
    # First-order in lambda: each decade of lambda removes a decade of gap.
    assert gaps[-1] < 1e-9
    assert gaps[-1] / gaps[-3] == pytest.approx(0.1, rel=1e-3)


def test_kalman_covariance_equals_lyapunov_value(rng):
    for p in random_triples(rng, 200):
        assert error_covariance(augment(p, design_kalman(p))).sigma2 == pytest.approx(analytic_cov_kalman(p), rel=1e-9)


def test_general_bandwidth_covariance_matches_lyapunov(params):
    for chi in (1e4, 1e5, 1e6):
        lyap = error_covariance(augment(params, design_prl(params, chi))).sigma2
        assert lyap == pytest.approx(analytic_cov_prl(params, chi), rel=1e-12)
        # chi_opt is optimal only as lambda -> 0; the Kalman filter beats every chi.
        assert analytic_cov_kalman(params) < lyap
