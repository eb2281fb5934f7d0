"""Simplified double-loop comparators.

Both baselines linearize the concave regularizer part at the outer iterate and
run a fixed number of stochastic proximal-gradient inner steps:

* ``run_spdc`` minimizes the quadratically penalized objective plus a proximal
  term (1/2w)||. - x_k||^2 around the outer iterate.
* ``run_salm`` minimizes the linearized augmented Lagrangian and follows each
  outer iteration with a dual ascent step on the multipliers.

These are deliberately *simplified comparators*: inner stopping is a fixed
iteration count, the linearization point is the outer iterate, and constraints
are penalized exactly as in the single-loop method, so oracle-call accounting
is directly comparable.  No attempt is made to reproduce the original
double-loop methods beyond that.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DivergedError
from .estimators import polyak_step, storm_init, storm_step
from .penalty import active_violation, constraint_force, penalty_value
from .problems import ProblemInstance
from .solver import DIVERGENCE_NORM, IterationRecord, x_update


@dataclass(frozen=True)
class BaselineConfig:
    outer_K: int
    inner_iters: int = 5          # typical range 5-10; fixed count, no inner stopping test
    rho: float = 1.0
    prox_weight: float = 0.2      # proximal coefficient around the outer iterate (spdc)
    inner_step: float = 0.01
    dual_step: Optional[float] = None  # salm only; defaults to rho
    momentum: str = "polyak"
    alpha: Optional[float] = None      # defaults: 0.905 polyak / 0.9 storm
    batch: int = 32
    b0: int = 1
    seed: int = 0
    diag_stride: int = 50
    feasible_init: bool = True
    time_budget_s: Optional[float] = None  # stop outer loop once wall time exceeds this

    def __post_init__(self):
        if self.momentum not in ("polyak", "storm"):
            raise ValueError(f"unknown momentum {self.momentum!r}")
        for name in ("outer_K", "inner_iters", "batch", "b0", "diag_stride"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        for name in ("rho", "prox_weight", "inner_step"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")
        if self.alpha is None:
            object.__setattr__(self, "alpha", 0.905 if self.momentum == "polyak" else 0.9)
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.dual_step is None:
            object.__setattr__(self, "dual_step", self.rho)


@dataclass(frozen=True)
class BaselineResult:
    records: list
    final_x: np.ndarray
    oracle_calls: int
    elapsed_s: float
    config: BaselineConfig
    multipliers: Optional[np.ndarray] = None  # salm dual variables at exit


def g_subgradient(x, lam: float) -> np.ndarray:
    """An element of the subdifferential of lam*||.||_2: lam*x/||x||, 0 at 0."""
    x = np.asarray(x, dtype=float)
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        return np.zeros_like(x)
    return lam * x / nx


def _run_double_loop(problem: ProblemInstance, config: BaselineConfig, *, use_dual: bool) -> BaselineResult:
    oracle, constraints = problem.oracle, problem.constraints
    rho, eta, w = config.rho, config.inner_step, config.prox_weight
    alpha = config.alpha

    rng = np.random.default_rng(config.seed)
    init = problem.init_feasible if config.feasible_init else problem.init_random
    x = np.asarray(init(rng), dtype=float)
    lam_hat = np.zeros(constraints.m) if use_dual else None

    if config.momentum == "polyak":
        buffer = oracle.grad_at(x, oracle.draw(rng, config.batch))
        calls = config.batch
        v_prev = None
    else:
        buffer = storm_init(oracle, x, config.b0, rng)
        calls = config.b0
        v_prev = x.copy()

    start = time.perf_counter()
    records: list[IterationRecord] = []

    def emit(k, x_cur, x_prev_outer):
        grad_full = problem.oracle.full_grad(x_cur)
        if use_dual:
            grad_full = grad_full + constraints.jt_apply(x_cur, lam_hat)
        smooth = grad_full + constraint_force(x_cur, rho, constraints) - g_subgradient(x_cur, problem.lam)
        mapped = x_update(x_cur, smooth, eta, problem.prox_h)
        c_act = active_violation(constraints.eval(x_cur), constraints.kind)
        records.append(IterationRecord(
            k=k, oracle_calls=calls,
            elapsed_s=time.perf_counter() - start,
            objective=float(problem.objective(x_cur)),
            feas=float(np.linalg.norm(c_act)),
            infeas_stat=float(np.linalg.norm(constraints.jt_apply(x_cur, c_act))),
            crit_u=float(np.linalg.norm(x_cur - mapped) / eta),
            crit_gap=float(np.linalg.norm(x_cur - x_prev_outer)),
            potential=penalty_value(problem.f_value(x_cur), constraints.eval(x_cur), rho,
                                    constraints.kind)
            + float(problem.prox_h.value(x_cur)) - float(problem.prox_g.value(x_cur)),
        ))

    k_done = 0
    for k in range(config.outer_K):
        if config.time_budget_s is not None and time.perf_counter() - start >= config.time_budget_s:
            break
        xi_g = g_subgradient(x, problem.lam)
        v = x.copy()
        for _ in range(config.inner_iters):
            if config.momentum == "polyak":
                g = oracle.grad_at(v, oracle.draw(rng, config.batch))
                buffer = polyak_step(buffer, g, alpha)
                calls += config.batch
            else:
                handle = oracle.draw(rng, config.batch)
                g_v = oracle.grad_at(v, handle)
                g_prev = oracle.grad_at(v_prev, handle)
                buffer = storm_step(buffer, g_v, g_prev, alpha)
                v_prev = v
                calls += 2 * config.batch
            smooth = buffer + constraint_force(v, rho, constraints) - xi_g
            if use_dual:
                smooth = smooth + constraints.jt_apply(v, lam_hat)
            else:
                smooth = smooth + (v - x) / w
            v_new = x_update(v, smooth, eta, problem.prox_h)
            if not np.all(np.isfinite(v_new)) or np.linalg.norm(v_new) > DIVERGENCE_NORM:
                raise DivergedError(f"baseline iterate diverged at outer k={k}",
                                    last_record=records[-1] if records else None)
            v = v_new
        x_prev_outer = x
        x = v
        if use_dual:
            lam_hat = lam_hat + config.dual_step * active_violation(
                constraints.eval(x), constraints.kind)
        k_done = k + 1
        if k % config.diag_stride == 0 or k == config.outer_K - 1:
            emit(k, x, x_prev_outer)

    last_k = max(k_done - 1, 0)
    if not records or records[-1].k != last_k:
        emit(last_k, x, x)
    return BaselineResult(records=records, final_x=x, oracle_calls=calls,
                          elapsed_s=time.perf_counter() - start, config=config,
                          multipliers=lam_hat)


def run_spdc(problem: ProblemInstance, config: BaselineConfig) -> BaselineResult:
    """Penalized DC comparator with a proximal term around each outer iterate."""
    return _run_double_loop(problem, config, use_dual=False)


def run_salm(problem: ProblemInstance, config: BaselineConfig) -> BaselineResult:
    """Linearized augmented-Lagrangian comparator with dual ascent steps."""
    return _run_double_loop(problem, config, use_dual=True)
