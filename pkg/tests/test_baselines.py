"""Double-loop comparator baselines."""

import numpy as np
import pytest

from mossp.baselines import BaselineConfig, g_subgradient, run_salm, run_spdc
from mossp.estimators import deterministic_oracle
from mossp.penalty import PenaltyConstants
from mossp.problems import ProblemInstance, sphere_constraints
from mossp.prox import l1_oracle, l2_oracle

from conftest import (
    quadratic_sphere_problem,
    records_equal,
    unconstrained_quadratic_problem,
    unit_vector,
    zero_constraints,
)


class TestConfig:
    def test_defaults(self):
        c = BaselineConfig(outer_K=10)
        assert c.alpha == 0.905 and c.dual_step == c.rho
        c2 = BaselineConfig(outer_K=10, momentum="storm")
        assert c2.alpha == 0.9

    def test_validation(self):
        with pytest.raises(ValueError):
            BaselineConfig(outer_K=0)
        with pytest.raises(ValueError):
            BaselineConfig(outer_K=5, momentum="nesterov")
        with pytest.raises(ValueError):
            BaselineConfig(outer_K=5, inner_step=0.0)


class TestSubgradient:
    def test_radial_direction(self):
        x = np.array([3.0, 4.0])
        np.testing.assert_allclose(g_subgradient(x, 0.5), 0.5 * x / 5.0)

    def test_zero_at_origin_and_bounded(self):
        assert np.all(g_subgradient(np.zeros(3), 0.7) == 0.0)
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.standard_normal(4)
            assert np.linalg.norm(g_subgradient(x, 0.7)) <= 0.7 + 1e-12


class TestSPDC:
    def test_converges_on_unconstrained_quadratic(self):
        prob = unconstrained_quadratic_problem(n=5, x_star_norm=0.4, seed=1)
        cfg = BaselineConfig(outer_K=200, inner_iters=5, rho=1.0, prox_weight=1e3,
                             inner_step=0.2, momentum="polyak", batch=1, seed=0,
                             diag_stride=50)
        res = run_spdc(prob, cfg)
        grad_norm = np.linalg.norm(prob.oracle.full_grad(res.final_x))
        assert grad_norm < 1e-4

    def test_single_inner_iteration_matches_hand_step(self):
        prob = unconstrained_quadratic_problem(n=3, x_star_norm=0.4, seed=2)
        eta, w = 0.1, 1e6
        cfg = BaselineConfig(outer_K=1, inner_iters=1, rho=1.0, prox_weight=w,
                             inner_step=eta, momentum="polyak", alpha=1.0,
                             batch=1, seed=5, diag_stride=1)
        res = run_spdc(prob, cfg)
        rng = np.random.default_rng(5)
        x0 = prob.init_feasible(rng)
        expected = x0 - eta * (prob.oracle.full_grad(x0) + (x0 - x0) / w)
        np.testing.assert_allclose(res.final_x, expected, atol=1e-12)

    def test_reproducible(self):
        prob = quadratic_sphere_problem(sigma=0.3)
        cfg = BaselineConfig(outer_K=30, inner_iters=5, rho=2.0, inner_step=0.02,
                             momentum="storm", batch=2, seed=3, diag_stride=10)
        a, b = run_spdc(prob, cfg), run_spdc(prob, cfg)
        assert records_equal(a.records, b.records)

    def test_oracle_accounting(self):
        prob = quadratic_sphere_problem(sigma=0.3)
        cfg = BaselineConfig(outer_K=7, inner_iters=4, rho=1.0, inner_step=0.01,
                             momentum="polyak", batch=3, seed=1, diag_stride=100)
        res = run_spdc(prob, cfg)
        # init batch + inner_iters * batch per outer iteration
        assert res.oracle_calls == 3 + 7 * 4 * 3

    def test_time_budget_stops_early(self):
        prob = quadratic_sphere_problem(sigma=0.0)
        cfg = BaselineConfig(outer_K=10**6, inner_iters=5, rho=1.0, inner_step=0.01,
                             momentum="polyak", batch=1, seed=0, diag_stride=10**6,
                             time_budget_s=0.05)
        res = run_spdc(prob, cfg)
        assert res.elapsed_s < 5.0
        assert len(res.records) >= 1


class TestSALM:
    def test_zero_constraints_freeze_multipliers(self):
        prob = unconstrained_quadratic_problem(n=4)
        cfg = BaselineConfig(outer_K=20, inner_iters=5, rho=1.0, inner_step=0.1,
                             momentum="polyak", batch=1, seed=0, diag_stride=5)
        res = run_salm(prob, cfg)
        assert np.all(res.multipliers == 0.0)

    def test_feasible_stationary_start_is_fixed_point(self):
        n = 4
        rng = np.random.default_rng(6)
        x0 = unit_vector(rng, n)

        def f_value(x):
            d = x - x0
            return 0.5 * float(np.dot(d, d))

        oracle = deterministic_oracle(lambda x: x - x0)
        prob = ProblemInstance(
            oracle=oracle, prox_h=l1_oracle(0.0), prox_g=l2_oracle(0.0),
            constraints=sphere_constraints(n),
            constants=PenaltyConstants(G=4.0, C=3.0, L_f=1.0, L_c=2.0, rho0=1.0),
            lam=0.0, objective=f_value, f_value=f_value,
            init_feasible=lambda r: x0.copy(), init_random=lambda r: x0.copy(),
            n=n, name="stationary-start")
        cfg = BaselineConfig(outer_K=25, inner_iters=5, rho=1.0, inner_step=0.05,
                             momentum="polyak", alpha=1.0, batch=1, seed=0, diag_stride=5)
        res = run_salm(prob, cfg)
        assert np.linalg.norm(res.final_x - x0) < 1e-8

    def test_dual_step_defaults_to_rho(self):
        cfg = BaselineConfig(outer_K=5, rho=0.37)
        assert cfg.dual_step == 0.37

    def test_dual_ascent_moves_multipliers(self):
        prob = quadratic_sphere_problem(sigma=0.0)
        cfg = BaselineConfig(outer_K=10, inner_iters=5, rho=0.5, inner_step=0.02,
                             momentum="polyak", batch=1, seed=1, diag_stride=5)
        res = run_salm(prob, cfg)
        assert res.multipliers.shape == (1,)
        assert np.any(res.multipliers != 0.0)
