import numpy as np
import pytest
from scipy.optimize import curve_fit

from fwcibench.leastsq import damped_least_squares


def test_linear_model_matches_normal_equations():
    rng = np.random.default_rng(0)
    x = np.linspace(0, 10, 40)
    y = 3.0 + 0.7 * x + 0.05 * rng.standard_normal(x.size)

    def residual(p):
        return y - (p[0] + p[1] * x)

    def jacobian(p):
        return np.column_stack((np.ones_like(x), x))

    result = damped_least_squares(residual, jacobian, [0.0, 0.0])
    ref, *_ = np.linalg.lstsq(np.column_stack((np.ones_like(x), x)), y, rcond=None)
    assert result.converged
    assert np.allclose(result.params, ref, atol=1e-8)


def test_exponential_decay_matches_curve_fit():
    rng = np.random.default_rng(1)
    x = np.linspace(0, 5, 60)
    y = 2.5 * np.exp(-0.8 * x) + 0.01 * rng.standard_normal(x.size)

    def model(p):
        return p[0] * np.exp(-p[1] * x)

    def residual(p):
        return y - model(p)

    def jacobian(p):
        e = np.exp(-p[1] * x)
        return np.column_stack((e, -p[0] * x * e))

    result = damped_least_squares(residual, jacobian, [1.0, 1.0])
    ref, _ = curve_fit(lambda x, a, k: a * np.exp(-k * x), x, y, p0=[1.0, 1.0])
    assert result.converged
    assert np.allclose(result.params, ref, atol=1e-6)


def test_zero_residual_converges_immediately():
    x = np.linspace(1, 4, 10)
    y = 5.0 * x

    def residual(p):
        return y - p[0] * x

    def jacobian(p):
        return x.reshape(-1, 1)

    result = damped_least_squares(residual, jacobian, [5.0])
    assert result.converged
    assert result.cost == pytest.approx(0.0, abs=1e-20)


def test_nonfinite_initial_residual_raises():
    def residual(p):
        return np.array([np.nan])

    def jacobian(p):
        return np.array([[1.0]])

    with pytest.raises(ValueError):
        damped_least_squares(residual, jacobian, [1.0])


def test_valid_constraint_keeps_iterates_legal():
    # minimize (p - (-2))^2 but forbid negative p: optimizer must stop at a
    # valid iterate instead of stepping into the forbidden region
    def residual(p):
        return np.array([-2.0 - p[0]])

    def jacobian(p):
        return np.array([[1.0]])

    result = damped_least_squares(residual, jacobian, [1.0], valid=lambda p: p[0] > 0)
    assert result.params[0] > 0


def test_iteration_cap_reported():
    # gradient of |p|^0.5-like flat valley: force slow progress with a tiny cap
    x = np.linspace(0, 1, 20)
    y = np.exp(-3.0 * x)

    def residual(p):
        return y - np.exp(-p[0] * x)

    def jacobian(p):
        return (-x * np.exp(-p[0] * x)).reshape(-1, 1)

    result = damped_least_squares(residual, jacobian, [50.0], max_iter=1)
    assert result.n_iter <= 1
    assert not result.converged
