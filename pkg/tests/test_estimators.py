"""Momentum estimator steps, oracles, and their statistical properties."""

import numpy as np
import pytest

from mossp.estimators import (
    GradientOracle,
    MomentumState,
    deterministic_oracle,
    error_diagnostic,
    full_estimate,
    polyak_step,
    storm_init,
    storm_step,
)
from mossp.problems import sphere_constraints

from conftest import zero_constraints


def noisy_linear_oracle(n: int, sigma: float = 1.0) -> GradientOracle:
    A = np.diag(np.linspace(0.5, 1.5, n))

    def full_grad(x):
        return A @ x

    def draw(rng, size):
        return rng.standard_normal((int(size), n))

    def grad_at(x, handle):
        return full_grad(x) + sigma * handle.mean(axis=0)

    return GradientOracle(draw=draw, grad_at=grad_at, full_grad=full_grad,
                          batch_size=1, sigma_bound=sigma)


class TestPolyakStep:
    def test_alpha_one_returns_new_gradient(self):
        g = np.array([3.0, -1.0])
        np.testing.assert_array_equal(polyak_step([1.0, 1.0], g, 1.0), g)

    def test_midpoint(self):
        got = polyak_step([1.0, 1.0], [3.0, 3.0], 0.5)
        np.testing.assert_array_equal(got, [2.0, 2.0])

    def test_small_alpha_limit(self):
        s = np.array([1.0, -2.0])
        got = polyak_step(s, [5.0, 5.0], 1e-12)
        assert np.max(np.abs(got - s)) < 1e-11

    @pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5])
    def test_rejects_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            polyak_step([1.0], [1.0], alpha)

    def test_is_exponentially_weighted_average(self):
        # 20-step deterministic trace against direct summation
        rng = np.random.default_rng(11)
        alpha = 0.3
        grads = [rng.standard_normal(4) for _ in range(20)]
        s = grads[0]
        for g in grads[1:]:
            s = polyak_step(s, g, alpha)
        direct = grads[0] * (1 - alpha) ** (len(grads) - 1)
        for j, g in enumerate(grads[1:], start=1):
            direct = direct + alpha * (1 - alpha) ** (len(grads) - 1 - j) * g
        np.testing.assert_allclose(s, direct, atol=1e-12)

    def test_pure(self):
        s, g = np.array([0.1, 0.2]), np.array([1.0, -1.0])
        a = polyak_step(s, g, 0.25)
        b = polyak_step(s, g, 0.25)
        assert np.array_equal(a, b)


class TestStormStep:
    def test_alpha_one_is_plain_gradient_bitwise(self):
        g_x = np.array([2.0, 0.1, -0.7])
        got = storm_step([1.0, 0.0, 0.0], g_x, [1.5, 0.0, 0.0], 1.0)
        assert np.array_equal(got, g_x)

    def test_direct_substitution(self):
        got = storm_step([1.0, 0.0], [2.0, 0.0], [1.5, 0.0], 0.5)
        np.testing.assert_array_equal(got, [1.75, 0.0])

    def test_deterministic_telescoping(self):
        o = deterministic_oracle(lambda x: 2.0 * x)
        x_prev, x = np.array([1.0, 2.0]), np.array([0.5, -1.0])
        d_prev = o.full_grad(x_prev)
        got = storm_step(d_prev, o.full_grad(x), o.full_grad(x_prev), 0.2)
        np.testing.assert_array_equal(got, o.full_grad(x))

    def test_pure(self):
        args = (np.array([1.0]), np.array([2.0]), np.array([1.5]))
        assert np.array_equal(storm_step(*args, 0.3), storm_step(*args, 0.3))

    def test_single_step_conditionally_unbiased(self):
        # Monte Carlo: with d_prev exact, the mean of one storm step is the
        # true gradient to within sampling error.
        rng = np.random.default_rng(123)
        o = noisy_linear_oracle(3, sigma=0.7)
        x_prev = np.array([0.3, -0.2, 1.0])
        x = np.array([0.5, 0.1, 0.8])
        d_prev = o.full_grad(x_prev)
        M = 10**5
        noise = rng.standard_normal((M, 3))
        g_x = o.full_grad(x) + 0.7 * noise
        g_prev = o.full_grad(x_prev) + 0.7 * noise  # shared sample
        samples = storm_step(d_prev, g_x, g_prev, 0.3)
        dev = samples.mean(axis=0) - o.full_grad(x)
        se = samples.std(axis=0, ddof=1) / np.sqrt(M)
        assert np.all(np.abs(dev) < 3 * se)


class TestStormInit:
    def test_single_draw(self):
        o = noisy_linear_oracle(2)
        rng = np.random.default_rng(0)
        got = storm_init(o, np.zeros(2), 1, rng)
        assert got.shape == (2,)

    def test_deterministic_oracle_any_b0(self):
        o = deterministic_oracle(lambda x: x + 1.0)
        x0 = np.array([0.5, 0.5])
        for b0 in (1, 7, 100):
            np.testing.assert_array_equal(storm_init(o, x0, b0, np.random.default_rng(b0)),
                                          o.full_grad(x0))

    def test_rejects_bad_b0(self):
        with pytest.raises(ValueError):
            storm_init(noisy_linear_oracle(2), np.zeros(2), 0, np.random.default_rng(0))

    def test_variance_scales_inversely_with_b0(self):
        o = noisy_linear_oracle(3, sigma=0.7)
        rng = np.random.default_rng(99)
        x = np.array([0.5, 0.1, 0.8])
        b0s = [1, 2, 4, 8, 16, 32]
        variances = []
        reps = 10**4
        for b0 in b0s:
            outs = np.empty((reps, 3))
            for i in range(reps):
                outs[i] = storm_init(o, x, b0, rng)
            variances.append(float(np.mean(outs.var(axis=0))))
        slope = np.polyfit(np.log(b0s), np.log(variances), 1)[0]
        assert -1.2 <= slope <= -0.8


class TestFullEstimate:
    def test_feasible_sphere_point_leaves_buffer(self):
        cm = sphere_constraints(2)
        buf = np.array([0.4, -0.2])
        np.testing.assert_array_equal(full_estimate(buf, np.array([0.0, 1.0]), 7.0, cm), buf)

    def test_sphere_example(self):
        cm = sphere_constraints(2)
        got = full_estimate(np.zeros(2), np.array([2.0, 0.0]), 1.0, cm)
        np.testing.assert_allclose(got, [12.0, 0.0], atol=1e-12)

    def test_rho_scaling(self):
        cm = sphere_constraints(2)
        x = np.array([1.3, -0.4])
        one = full_estimate(np.zeros(2), x, 1.0, cm)
        two = full_estimate(np.zeros(2), x, 2.0, cm)
        np.testing.assert_allclose(two, 2.0 * one, atol=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            full_estimate(np.zeros(3), np.zeros(2), 1.0, sphere_constraints(2))


class TestErrorDiagnostic:
    def test_zero_for_exact_estimate(self):
        o = deterministic_oracle(lambda x: 2.0 * x)
        cm = sphere_constraints(2)
        x = np.array([0.7, -0.7])
        est = full_estimate(o.full_grad(x), x, 3.0, cm)
        assert error_diagnostic(est, x, 3.0, o, cm) == 0.0

    def test_unit_offset(self):
        o = deterministic_oracle(lambda x: 2.0 * x)
        cm = sphere_constraints(2)
        x = np.array([0.7, -0.7])
        est = full_estimate(o.full_grad(x), x, 3.0, cm) + np.array([1.0, 0.0])
        assert error_diagnostic(est, x, 3.0, o, cm) == pytest.approx(1.0)

    def test_storm_error_shrinks_with_alpha_and_steps(self):
        o = noisy_linear_oracle(6, sigma=1.0)
        cm = zero_constraints(6)

        def mean_err2(alpha, step, seed, K=400):
            rng = np.random.default_rng(seed)
            x = np.ones(6)
            d = storm_init(o, x, 8, rng)
            errs = []
            for _ in range(K):
                x_new = x - step * d
                handle = o.draw(rng, 1)
                d = storm_step(d, o.grad_at(x_new, handle), o.grad_at(x, handle), alpha)
                x = x_new
                errs.append(error_diagnostic(d, x, 1.0, o, cm) ** 2)
            return float(np.mean(errs))

        coarse = np.median([mean_err2(0.5, 5e-3, s) for s in range(10)])
        fine = np.median([mean_err2(0.05, 5e-4, s) for s in range(10)])
        assert fine < coarse


class TestMomentumState:
    def test_x_prev_only_for_storm(self):
        MomentumState(variant="storm", buffer=np.zeros(2), x_prev=np.zeros(2))
        MomentumState(variant="polyak", buffer=np.zeros(2))
        with pytest.raises(ValueError):
            MomentumState(variant="polyak", buffer=np.zeros(2), x_prev=np.zeros(2))
        with pytest.raises(ValueError):
            MomentumState(variant="storm", buffer=np.zeros(2))
        with pytest.raises(ValueError):
            MomentumState(variant="nesterov", buffer=np.zeros(2))
