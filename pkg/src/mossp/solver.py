"""Single-loop momentum penalty solvers.

One iteration, for either momentum variant, is

    estimate = buffer + rho * grad c(x) c(x)
    x+ = prox_{mu h}(z - mu * estimate)
    z+ = z - beta * (prox_{mu g}(z) - x+)

where ``buffer`` tracks the stochastic gradient of f by Polyak averaging
(variant ``mossp_p``) or by the recursive shared-sample correction
(``mossp_r``).  Parameters (rho, mu, alpha) are constant over a run and come
from one of the preset schedules, all of which are validated against the
inequalities that the convergence analysis needs; violations raise with the
name of the failed inequality.

The output iterate is drawn uniformly from the K iterations.  The draw happens
up front from the run's seeded generator and the loop checkpoints the state at
that iteration, so the reported point and its KKT certificate are exact
without storing the trajectory.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergedError, ScheduleValidationError
from .estimators import MomentumState, full_estimate, polyak_step, storm_init, storm_step
from .penalty import (
    PenaltyConstants,
    active_violation,
    penalty_gradient,
    potential,
)
from .problems import TRUST_BALL_RADIUS, ProblemInstance
from .prox import ProxOracle

DIVERGENCE_NORM = 1e6

VARIANTS = ("mossp_p", "mossp_r")
PRESETS = ("thm31", "thm32", "cor31", "cor32", "manual")
_POLYAK_PRESETS = ("thm31", "cor31")
_STORM_PRESETS = ("thm32", "cor32")


@dataclass(frozen=True)
class SolverConfig:
    variant: str
    K: int
    preset: str = "thm31"
    rho0: float = 1.0
    mu0: float = 0.1
    alpha0: Optional[float] = None   # storm presets / manual; derived from gamma for polyak presets
    gamma: Optional[float] = None    # polyak presets; defaults to max(1, 8 L_f^2)
    beta: float = 1.0
    batch: int = 32
    b0: int = 1
    seed: int = 0
    diag_stride: int = 50
    feasible_init: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; expected one of {PRESETS}")
        if self.preset in _POLYAK_PRESETS and self.variant != "mossp_p":
            raise ValueError(f"preset {self.preset!r} is a Polyak schedule; use variant 'mossp_p'")
        if self.preset in _STORM_PRESETS and self.variant != "mossp_r":
            raise ValueError(f"preset {self.preset!r} is a recursive-momentum schedule; use variant 'mossp_r'")


@dataclass(frozen=True)
class ScheduleParams:
    """The constant per-run parameter tuple, post-validation."""

    rho: float
    mu: float
    alpha: float
    L_rho: float
    b0_effective: int


class _Checks:
    """Records named inequality checks; raises eagerly unless collecting."""

    def __init__(self, collect: Optional[list]):
        self.collect = collect
        self.failures: list[tuple[str, str]] = []

    def require(self, cond, inequality: str, detail: str = ""):
        ok = bool(cond)
        if self.collect is not None:
            self.collect.append((inequality, ok, detail))
        if not ok:
            self.failures.append((inequality, detail))
            if self.collect is None:
                raise ScheduleValidationError(inequality, detail)
        return ok

    def finish(self):
        if self.failures:
            raise ScheduleValidationError(*self.failures[0])


# Relative slack for inequalities that presets satisfy with equality at the
# boundary; keeps float rounding from rejecting an analytically valid schedule.
_EPS = 1e-12


def make_schedule(config: SolverConfig, constants: PenaltyConstants,
                  collect: Optional[list] = None) -> ScheduleParams:
    """Resolve a preset into constant (rho, mu, alpha, b0) and validate it.

    Preset exponents (of K) are: thm31 -> rho 1/4, mu -1/2, alpha -1/2;
    cor31 -> 1/5, -2/5, -2/5; thm32 -> 1/3, -1/3, -2/3 with initial batch
    ceil(K^(1/3)); cor32 -> 1/4, -1/4, -1/2.  ``manual`` takes rho0/mu0/alpha0
    literally.  Every run-time inequality used by the descent and error
    analysis is checked here and failures name the inequality.  When
    ``collect`` is a list, every (inequality, passed, detail) triple is
    appended to it and the first failure raises only at the end.
    """
    checks = _Checks(collect)
    _require = checks.require
    K = config.K
    _require(K >= 1, "K must be positive", f"K={K}")
    _require(0.0 < config.beta <= 1.0, "0 < beta <= 1", f"beta={config.beta}")
    _require(config.batch >= 1, "batch >= 1", f"batch={config.batch}")
    _require(config.b0 >= 1, "b0 >= 1", f"b0={config.b0}")
    _require(config.diag_stride >= 1, "diag_stride >= 1")
    _require(config.rho0 > 0, "rho0 > 0", f"rho0={config.rho0}")
    _require(config.mu0 > 0, "mu0 > 0", f"mu0={config.mu0}")

    L_f, l_max, l_tilde = constants.L_f, constants.l_max, constants.l_tilde
    rho0, mu0 = config.rho0, config.mu0
    b0_eff = config.b0

    if config.preset in _POLYAK_PRESETS:
        gamma = config.gamma if config.gamma is not None else max(1.0, 8.0 * L_f**2)
        _require(gamma >= max(1.0, 8.0 * L_f**2) * (1 - _EPS),
                 "gamma >= max(1, 8*L_f^2)", f"gamma={gamma}")
        _require(mu0 <= 1.0 / (4.0 * rho0) * (1 + _EPS),
                 "mu0 <= 1/(4*rho0)", f"mu0={mu0}, rho0={rho0}")
        if L_f > 0:
            _require(mu0 <= 1.0 / (4.0 * L_f) * (1 + _EPS),
                     "mu0 <= 1/(4*L_f)", f"mu0={mu0}, L_f={L_f}")
        alpha0 = 2.0 * gamma / l_max
        if config.preset == "thm31":
            rho = rho0 * K**0.25
            mu = mu0 / (K**0.5 * l_max)
            alpha = alpha0 * mu0 / K**0.5
        else:  # cor31
            rho = rho0 * K**0.2
            mu = mu0 / (K**0.4 * l_max)
            alpha = alpha0 * mu0 / K**0.4
    elif config.preset in _STORM_PRESETS:
        _require(mu0 <= 1.0 / (4.0 * rho0) * (1 + _EPS),
                 "mu0 <= 1/(4*rho0)", f"mu0={mu0}, rho0={rho0}")
        if L_f > 0:
            _require(mu0 <= l_max / (4.0 * math.sqrt(2.0) * L_f) * (1 + _EPS),
                     "mu0 <= l_max/(4*sqrt(2)*L_f)", f"mu0={mu0}")
        alpha0 = config.alpha0 if config.alpha0 is not None else 1.0 / (16.0 * mu0**2)
        _require(alpha0 >= 2.0 * L_f**2 / l_max**2 * (1 - _EPS),
                 "alpha0 >= 2*L_f^2/l_max^2", f"alpha0={alpha0}")
        _require(alpha0 <= 1.0 / (16.0 * mu0**2) * (1 + _EPS),
                 "alpha0 <= 1/(16*mu0^2)", f"alpha0={alpha0}")
        if config.preset == "thm32":
            rho = rho0 * K**(1.0 / 3.0)
            mu = mu0 / (K**(1.0 / 3.0) * l_max)
            alpha = 16.0 * alpha0 * mu0**2 / K**(2.0 / 3.0)
            b0_eff = max(config.b0, math.ceil(K**(1.0 / 3.0)))
        else:  # cor32
            rho = rho0 * K**0.25
            mu = mu0 / (K**0.25 * l_max)
            alpha = 16.0 * alpha0 * mu0**2 / K**0.5
    else:  # manual: rho0/mu0/alpha0 are the literal run constants
        if not _require(config.alpha0 is not None, "alpha0 required for manual preset"):
            checks.finish()
        rho, mu, alpha = rho0, mu0, config.alpha0

    L_rho = rho * l_tilde
    _require(0.0 < alpha <= 1.0 + _EPS, "0 < alpha <= 1", f"alpha={alpha}")
    alpha = min(alpha, 1.0)
    _require(mu * L_rho <= 0.25 * (1 + _EPS), "mu*L_rho <= 1/4",
             f"mu*L_rho={mu * L_rho}")
    if config.variant == "mossp_p":
        _require(alpha >= 2.0 * mu * (1 - _EPS), "1/alpha <= 1/(2*mu)",
                 f"alpha={alpha}, mu={mu}")
        lhs = L_rho + 2.0 * L_f**2 / alpha
        rhs = 0.75 / (2.0 * mu)
        _require(lhs <= rhs * (1 + _EPS), "L_rho + 2*L_f^2/alpha <= (3/4)*(1/(2*mu))",
                 f"lhs={lhs}, rhs={rhs}")
    else:
        _require(32.0 * mu**2 * L_f**2 <= alpha * (1 + _EPS), "32*mu^2*L_f^2 <= alpha",
                 f"32*mu^2*L_f^2={32.0 * mu**2 * L_f**2}, alpha={alpha}")
        _require(alpha <= 1.0 + _EPS, "alpha <= 1", f"alpha={alpha}")
    checks.finish()
    return ScheduleParams(rho=rho, mu=mu, alpha=alpha, L_rho=L_rho, b0_effective=int(b0_eff))


def x_update(z, estimate, mu: float, prox_h: ProxOracle) -> np.ndarray:
    """Stochastic proximal gradient step: prox_{mu h}(z - mu * estimate)."""
    z = np.asarray(z, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if z.shape != estimate.shape:
        raise ValueError(f"z shape {z.shape} does not match estimate shape {estimate.shape}")
    return np.asarray(prox_h.prox(z - mu * estimate, mu), dtype=float)


def z_update(z, prox_g_z, x_new, beta: float) -> np.ndarray:
    """Smoothed-gradient step on z: z - beta * (prox_{mu g}(z) - x+)."""
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    return np.asarray(z, dtype=float) - beta * (
        np.asarray(prox_g_z, dtype=float) - np.asarray(x_new, dtype=float)
    )


def residual_u(x_new, z, estimate, mu: float, rho: float,
               problem: ProblemInstance) -> np.ndarray:
    """Criticality residual of one iteration.

    u = grad Q_rho(x+) - estimate + (prox_{mu g}(z) - x+) / mu, where the
    penalty gradient is exact (full gradient of f).  ``estimate`` must be the
    vector actually used to produce ``x_new``.
    """
    x_new = np.asarray(x_new, dtype=float)
    grad_q = penalty_gradient(problem.oracle.full_grad(x_new), x_new, rho, problem.constraints)
    y = np.asarray(problem.prox_g.prox(np.asarray(z, dtype=float), mu), dtype=float)
    return grad_q - np.asarray(estimate, dtype=float) + (y - x_new) / mu


def l1_membership_violation(v, x, lam: float) -> float:
    """Distance of v from the l1 subdifferential lam * d||.||_1 at x.

    Zero means v_i = lam*sign(x_i) wherever x_i != 0 and |v_i| <= lam at
    zeros, which is the optimality condition of the soft-threshold step.
    """
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    nz = x != 0
    worst = 0.0
    if nz.any():
        worst = float(np.max(np.abs(v[nz] - lam * np.sign(x[nz]))))
    if (~nz).any():
        worst = max(worst, float(np.max(np.maximum(np.abs(v[~nz]) - lam, 0.0))))
    return worst


@dataclass(frozen=True)
class IterationRecord:
    k: int
    oracle_calls: int
    elapsed_s: float
    objective: float
    feas: float
    infeas_stat: float
    crit_u: float
    crit_gap: float
    potential: float


@dataclass(frozen=True)
class KKTCertificate:
    """Output-iterate residual bundle for the approximate KKT conditions.

    ``u_bar`` is recomputable from (x_bar, z_sel, estimate_sel, mu, rho);
    ``lambda_bar = rho * c(x_bar)`` is the penalty multiplier choice.
    """

    x_bar: np.ndarray
    y_bar: np.ndarray
    u_bar: np.ndarray
    lambda_bar: np.ndarray
    crit_u: float
    crit_gap: float
    feas: float
    infeas_stat: float
    mu: float
    rho: float
    z_sel: np.ndarray
    estimate_sel: np.ndarray


def kkt_measures(cert: KKTCertificate) -> dict:
    """The three squared residuals of the approximate KKT/stationarity test."""
    return {
        "criticality": max(cert.crit_u**2, cert.crit_gap**2),
        "feasibility": cert.feas**2,
        "infeasible_stationarity": cert.infeas_stat**2,
    }


@dataclass
class SolverState:
    """Loop state snapshot: iterate pair, momentum buffer, and the run's RNG.

    The hot loop carries these as locals; this container is the exported
    contract for anything that wants to snapshot or resume a run.
    """

    k: int
    x: np.ndarray
    z: np.ndarray
    momentum: MomentumState
    rng: np.random.Generator


@dataclass(frozen=True)
class RunResult:
    records: list
    output_x: np.ndarray          # x^{R+1}, the uniformly drawn output iterate
    certificate: KKTCertificate
    final_x: np.ndarray
    best_x: np.ndarray            # diagnostic iterate with smallest criticality
    best_criticality: float
    R: int
    schedule: ScheduleParams
    config: SolverConfig
    oracle_calls: int
    elapsed_s: float
    potential0: float
    vh_max_violation: float       # worst l1-subgradient membership gap (0 if h is not l1-type)
    initial_x: np.ndarray = field(repr=False, default=None)


def _certificate(problem, x_bar, z_sel, estimate_sel, mu, rho) -> KKTCertificate:
    y_bar = np.asarray(problem.prox_g.prox(z_sel, mu), dtype=float)
    u_bar = residual_u(x_bar, z_sel, estimate_sel, mu, rho, problem)
    c_act = active_violation(problem.constraints.eval(x_bar), problem.constraints.kind)
    return KKTCertificate(
        x_bar=x_bar, y_bar=y_bar, u_bar=u_bar,
        lambda_bar=rho * c_act,
        crit_u=float(np.linalg.norm(u_bar)),
        crit_gap=float(np.linalg.norm(x_bar - y_bar)),
        feas=float(np.linalg.norm(c_act)),
        infeas_stat=float(np.linalg.norm(problem.constraints.jt_apply(x_bar, c_act))),
        mu=mu, rho=rho, z_sel=z_sel, estimate_sel=estimate_sel,
    )


def run(problem: ProblemInstance, config: SolverConfig) -> RunResult:
    """Execute K single-loop iterations and return trajectory and certificates.

    The RNG (seeded from ``config.seed``) is consumed in a fixed order: output
    index R, initial point, then the per-iteration samples, so identical
    (seed, config, problem) reproduce the trajectory bit for bit.  Diagnostics
    that need full gradients (residuals, potential, objective) run every
    ``diag_stride`` iterations and at the last one; they do not count toward
    the stochastic oracle tally.
    """
    constants = problem.constants
    if constants.rho0 != config.rho0:
        constants = PenaltyConstants(G=constants.G, C=constants.C, L_f=constants.L_f,
                                     L_c=constants.L_c, rho0=config.rho0,
                                     delta=constants.delta)
    sched = make_schedule(config, constants)
    rho, mu, alpha, beta = sched.rho, sched.mu, sched.alpha, config.beta
    oracle, constraints = problem.oracle, problem.constraints

    rng = np.random.default_rng(config.seed)
    R = int(rng.integers(config.K))
    init = problem.init_feasible if config.feasible_init else problem.init_random
    x = np.asarray(init(rng), dtype=float)
    z = x.copy()
    initial_x = x.copy()

    if config.variant == "mossp_p":
        buffer = oracle.grad_at(x, oracle.draw(rng, config.batch))
        calls = config.batch
        x_prev = None
    else:
        buffer = storm_init(oracle, x, sched.b0_effective, rng)
        calls = sched.b0_effective
        x_prev = x.copy()

    pot0 = potential(x, z, rho, mu, problem)
    start = time.perf_counter()
    records: list[IterationRecord] = []
    checkpoint = None
    best_x, best_crit = x.copy(), math.inf
    vh_max = 0.0
    # the subgradient membership certificate is specific to the l1 family
    check_vh = problem.prox_h.name.startswith(("l1", "zero"))
    warned_ball = False

    for k in range(config.K):
        if k > 0:
            if config.variant == "mossp_p":
                g = oracle.grad_at(x, oracle.draw(rng, config.batch))
                buffer = polyak_step(buffer, g, alpha)
                calls += config.batch
            else:
                handle = oracle.draw(rng, config.batch)
                g_x = oracle.grad_at(x, handle)
                g_prev = oracle.grad_at(x_prev, handle)
                buffer = storm_step(buffer, g_x, g_prev, alpha)
                calls += 2 * config.batch

        estimate = full_estimate(buffer, x, rho, constraints)
        x_new = x_update(z, estimate, mu, problem.prox_h)
        y_k = np.asarray(problem.prox_g.prox(z, mu), dtype=float)
        z_new = z_update(z, y_k, x_new, beta)

        norm_x = float(np.linalg.norm(x_new))
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(z_new))) or norm_x > DIVERGENCE_NORM:
            raise DivergedError(
                f"iterate diverged at k={k} (||x||={norm_x:.3e})",
                last_record=records[-1] if records else None,
            )
        if norm_x > TRUST_BALL_RADIUS and not warned_ball:
            warnings.warn(
                f"iterate left the radius-{TRUST_BALL_RADIUS:g} ball at k={k}; "
                "estimated constants G, C, L_c may no longer bound the problem",
                RuntimeWarning, stacklevel=2,
            )
            warned_ball = True

        if k == R:
            checkpoint = (x_new.copy(), z.copy(), estimate.copy())

        if k % config.diag_stride == 0 or k == config.K - 1:
            u = residual_u(x_new, z, estimate, mu, rho, problem)
            crit_u = float(np.linalg.norm(u))
            crit_gap = float(np.linalg.norm(x_new - y_k))
            c_act = active_violation(constraints.eval(x_new), constraints.kind)
            rec = IterationRecord(
                k=k, oracle_calls=calls,
                elapsed_s=time.perf_counter() - start,
                objective=float(problem.objective(x_new)),
                feas=float(np.linalg.norm(c_act)),
                infeas_stat=float(np.linalg.norm(constraints.jt_apply(x_new, c_act))),
                crit_u=crit_u, crit_gap=crit_gap,
                potential=potential(x_new, z_new, rho, mu, problem),
            )
            records.append(rec)
            crit = max(crit_u**2, crit_gap**2)
            if crit < best_crit:
                best_crit, best_x = crit, x_new.copy()
            if check_vh:
                v_h = (z - x_new) / mu - estimate
                vh_max = max(vh_max, l1_membership_violation(v_h, x_new, problem.lam))

        if config.variant == "mossp_r":
            x_prev = x
        x = x_new
        z = z_new

    x_bar, z_sel, est_sel = checkpoint
    cert = _certificate(problem, x_bar, z_sel, est_sel, mu, rho)
    return RunResult(
        records=records, output_x=x_bar, certificate=cert, final_x=x,
        best_x=best_x, best_criticality=best_crit, R=R, schedule=sched,
        config=config, oracle_calls=calls,
        elapsed_s=time.perf_counter() - start, potential0=pot0,
        vh_max_violation=vh_max, initial_x=initial_x,
    )
