import numpy as np
import pytest

from armaml.core import ArmaOrder, ArmaParams, PreconditionError, TimeSeries, UnsupportedGapError, validate_params
from armaml.likelihood import kalman_loglik
from armaml.optimize import (
    NegLoglik,
    OptimizerConfig,
    bfgs_minimize,
    fd_gradient,
    maximize_loglik,
    minimize_css,
)
from armaml.sampler import SamplerConfig, sample_params
from armaml.sim import GeneratorSpec, simulate
from oracles import MA1_BIMODAL, grid_modes, random_valid


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(max_iters=0)
    with pytest.raises(ValueError):
        OptimizerConfig(tol=0)
    with pytest.raises(ValueError):
        OptimizerConfig(method="newton")


def test_white_noise_at_mle_stays_put():
    x = TimeSeries.from_values(np.random.default_rng(0).standard_normal(80) + 2)
    order = ArmaOrder(0, 0, True)
    init = ArmaParams([], [], x.var(), x.mean())
    out = maximize_loglik(x, init, order)
    assert out.iterations <= 2 and out.converged
    assert abs(out.objective - kalman_loglik(x, init, order).loglik) < 1e-8
    assert abs(out.params.sigma2 - x.var()) < 1e-6


def test_ma1_bimodal_modes_recovered_from_nearby_inits():
    x = TimeSeries.from_values(MA1_BIMODAL)
    order = ArmaOrder(0, 1)
    modes, lls = grid_modes(x, order)
    assert modes.size == 2
    for mode, ll in zip(modes, lls):
        out = maximize_loglik(x, ArmaParams([], [mode + 0.05]), order)
        assert abs(out.params.theta[0] - mode) < 2e-3
        assert out.objective >= ll - 1e-9


def test_ar1_random_init_matches_grid_search():
    order = ArmaOrder(1, 0)
    x = simulate(GeneratorSpec(order, ArmaParams([0.6], []), 500, seed=3))
    g = np.arange(-0.99, 0.99 + 1e-9, 1e-3)
    ll = [kalman_loglik(x, ArmaParams([v], []), order).loglik for v in g]
    grid_best = g[int(np.argmax(ll))]
    rng = np.random.default_rng(4)
    for _ in range(5):
        out = maximize_loglik(x, sample_params(order, SamplerConfig(), rng), order)
        assert abs(out.params.phi[0] - grid_best) <= 1e-3
        assert abs(out.params.phi[0] - 0.6) < 3 * np.sqrt((1 - 0.36) / 500)


def test_monotone_and_valid_from_random_starts():
    rng = np.random.default_rng(5)
    for p, q in [(1, 1), (2, 1), (2, 2), (3, 3)]:
        order = ArmaOrder(p, q, True)
        phi, theta = random_valid(p, q, rng)
        x = simulate(GeneratorSpec(ArmaOrder(p, q), ArmaParams(phi, theta, 1.0, 3.0), 60, seed=int(rng.integers(1e9))))
        for _ in range(4):
            init = sample_params(order, SamplerConfig(), rng, x)
            out = maximize_loglik(x, init, order)
            assert out.objective >= kalman_loglik(x, init, order).loglik - 1e-12
            assert validate_params(out.params, order).valid
            assert abs(out.objective - kalman_loglik(x, out.params, order).loglik) < 1e-9


def test_invalid_init_is_rejected():
    x = TimeSeries.from_values([0.1, 0.2, -0.3])
    with pytest.raises(PreconditionError):
        maximize_loglik(x, ArmaParams([1.2], []), ArmaOrder(1, 0))


def test_all_steps_rejected_returns_init_unconverged():
    # |x| has a forward-difference slope that never gives descent from 0
    out = bfgs_minimize(lambda v: float(np.abs(v).sum()), np.zeros(1), OptimizerConfig())
    assert not out.converged and out.x.tolist() == [0.0]


def test_quadratic_converges():
    A = np.array([[3.0, 0.5], [0.5, 1.0]])
    out = bfgs_minimize(lambda v: float(0.5 * v @ A @ v - v.sum()), np.zeros(2), OptimizerConfig())
    np.testing.assert_allclose(out.x, np.linalg.solve(A, np.ones(2)), atol=1e-4)
    assert out.converged


def test_gradient_matches_centered_oracle():
    rng = np.random.default_rng(6)
    order = ArmaOrder(2, 1, True)
    x = simulate(GeneratorSpec(ArmaOrder(2, 1), ArmaParams([0.5, -0.2], [0.4], 1.0, 1.0), 120, seed=7))
    f = NegLoglik(x, order)
    checked = 0
    while checked < 100:
        phi, theta = random_valid(2, 1, rng, max_mod=0.8)
        u = f.to_u(np.r_[phi, theta, x.mean() + rng.normal(0, 0.2)])
        fu = f(u)
        g = fd_gradient(f, u, fu, 1e-6)
        h = 5e-7
        ref = np.array([(f(u + h * e) - f(u - h * e)) / (2 * h) for e in np.eye(u.size)])
        big = np.abs(ref) > 1e-2  # relative error is meaningless at near-zero components
        assert np.all(np.abs(g[big] - ref[big]) / np.abs(ref[big]) < 1e-3)
        checked += 1


def test_nelder_mead_option_agrees():
    order = ArmaOrder(1, 1)
    x = simulate(GeneratorSpec(order, ArmaParams([0.5], [0.3]), 200, seed=8))
    a = maximize_loglik(x, ArmaParams([0.1], [0.1]), order)
    b = maximize_loglik(x, ArmaParams([0.1], [0.1]), order, OptimizerConfig(method="nelder-mead"))
    assert abs(a.objective - b.objective) < 1e-5


def test_profile_mode_holds_fixed_entry():
    order = ArmaOrder(1, 1)
    x = simulate(GeneratorSpec(order, ArmaParams([0.5], [0.3]), 200, seed=9))
    out = maximize_loglik(x, ArmaParams([0.2], [0.1]), order, fixed={0: 0.2})
    assert out.params.phi[0] == 0.2


def test_approx_hessian_is_positive_definite_at_optimum():
    order = ArmaOrder(1, 0)
    x = simulate(GeneratorSpec(order, ArmaParams([0.5], []), 400, seed=10))
    out = maximize_loglik(x, ArmaParams([0.1], []), order)
    assert out.approx_hessian.shape == (1, 1) and out.approx_hessian[0, 0] > 0


# --- CSS -------------------------------------------------------------------------------


def test_css_white_noise_moments():
    x = TimeSeries.from_values(np.random.default_rng(11).standard_normal(50) * 2 + 1)
    fit = minimize_css(x, ArmaOrder(0, 0, True))
    assert abs(fit.params.mean - x.mean()) < 1e-6
    assert abs(fit.params.sigma2 - x.var()) < 1e-6 * x.var()


def test_css_ar1_matches_lag_regression():
    x = simulate(GeneratorSpec(ArmaOrder(1, 0), ArmaParams([0.8], []), 1000, seed=12))
    v = x.values
    closed = float(v[1:] @ v[:-1] / (v[:-1] @ v[:-1]))
    fit = minimize_css(x, ArmaOrder(1, 0))
    assert abs(fit.params.phi[0] - closed) < 1e-4
    assert abs(fit.params.phi[0] - 0.8) < 0.05
    assert not fit.fallback


def test_css_invalid_minimizer_falls_back_to_zero():
    rng = np.random.default_rng(13)
    v = np.zeros(60)
    for t in range(1, 60):
        v[t] = 1.1 * v[t - 1] + rng.standard_normal()
    fit = minimize_css(TimeSeries.from_values(v), ArmaOrder(1, 0))
    assert fit.fallback and fit.params.phi.tolist() == [0.0]


def test_css_rejects_gaps():
    with pytest.raises(UnsupportedGapError):
        minimize_css(TimeSeries.from_values([1.0, np.nan, 0.5, 0.2]), ArmaOrder(1, 0))
