"""Shared problem builders and independent reference solvers for the tests."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

import mossp
from mossp.estimators import GradientOracle, deterministic_oracle
from mossp.penalty import EQUALITY, ConstraintMap, PenaltyConstants
from mossp.problems import Dataset, ProblemInstance, sphere_constraints
from mossp.prox import l1_oracle, l2_oracle


def unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def quadratic_sphere_problem(n: int = 10, lam: float = 0.01, sigma: float = 0.0,
                             seed: int = 0) -> ProblemInstance:
    """Sphere-constrained quadratic-plus-DC toy with optional gradient noise.

    With sigma = 0 the oracle is exact, so momentum buffers carry no sampling
    error and the merit function must decrease at every step.
    """
    rng = np.random.default_rng(seed)
    A = np.diag(np.linspace(0.2, 1.0, n))
    b = rng.standard_normal(n) * 0.3

    def f_value(x):
        return 0.5 * float(x @ A @ x) + float(b @ x)

    def full_grad(x):
        return A @ x + b

    if sigma == 0.0:
        oracle = deterministic_oracle(full_grad)
    else:
        def draw(r, size):
            return r.standard_normal((int(size), n))

        def grad_at(x, handle):
            return full_grad(x) + sigma * handle.mean(axis=0)

        oracle = GradientOracle(draw=draw, grad_at=grad_at, full_grad=full_grad,
                                batch_size=1, sigma_bound=sigma)

    L_f = 1.0
    G = max(2.0 + float(np.linalg.norm(b)), lam * np.sqrt(n), lam, 4.0)
    constants = PenaltyConstants(G=G, C=3.0, L_f=L_f, L_c=2.0, rho0=1.0)
    ph, pg = l1_oracle(lam), l2_oracle(lam)
    init = lambda r: unit_vector(r, n)
    return ProblemInstance(
        oracle=oracle, prox_h=ph, prox_g=pg, constraints=sphere_constraints(n),
        constants=constants, lam=lam,
        objective=lambda x: f_value(x) + ph.value(x) - pg.value(x),
        f_value=f_value, init_feasible=init, init_random=init, n=n,
        name=f"toy-sphere(n={n},sigma={sigma:g})",
    )


def zero_constraints(n: int) -> ConstraintMap:
    """A vacuous constraint map (c identically 0) for unconstrained tests."""
    return ConstraintMap(m=1, eval=lambda x: np.zeros(1),
                         jt_apply=lambda x, v: np.zeros(n), kind=EQUALITY)


def unconstrained_quadratic_problem(n: int = 6, x_star_norm: float = 0.5,
                                    seed: int = 0) -> ProblemInstance:
    """min (1/2)||x - x*||^2 with h = g = 0 and no active constraints."""
    rng = np.random.default_rng(seed)
    x_star = unit_vector(rng, n) * x_star_norm

    def f_value(x):
        d = x - x_star
        return 0.5 * float(np.dot(d, d))

    def full_grad(x):
        return x - x_star

    oracle = deterministic_oracle(full_grad)
    constants = PenaltyConstants(G=2.0 + x_star_norm, C=0.0, L_f=1.0, L_c=0.0, rho0=1.0)
    ph = pg = l1_oracle(0.0)
    init = lambda r: unit_vector(r, n)
    prob = ProblemInstance(
        oracle=oracle, prox_h=ph, prox_g=l2_oracle(0.0),
        constraints=zero_constraints(n), constants=constants, lam=0.0,
        objective=f_value, f_value=f_value,
        init_feasible=init, init_random=init, n=n, name="free-quadratic",
    )
    return prob


def australian_surrogate(seed: int = 21) -> Dataset:
    """690 x 14 dense-ish stand-in with scaled features, like the small corpus."""
    rng = np.random.default_rng(seed)
    N, n = 690, 14
    X = rng.uniform(-1, 1, (N, n)) * (rng.random((N, n)) < 0.85)
    w = unit_vector(rng, n)
    margins = X @ w
    y = np.where(margins + 0.35 * rng.standard_normal(N) >= 0, 1.0, -1.0)
    return Dataset(X=sp.csr_matrix(X), y=y)


def a9a_surrogate(seed: int = 7) -> Dataset:
    """32561 x 123 binary-feature stand-in with ~14 active features per row."""
    rng = np.random.default_rng(seed)
    N, n, act = 32561, 123, 14
    rows = np.repeat(np.arange(N), act)
    cols = rng.integers(0, n, size=N * act)
    X = sp.csr_matrix((np.ones(N * act), (rows, cols)), shape=(N, n))
    X.sum_duplicates()
    w = np.zeros(n)
    idx = rng.choice(n, 20, replace=False)
    w[idx] = rng.standard_normal(20)
    w /= np.linalg.norm(w)
    margins = X @ w
    margins = margins - margins.mean()
    y = np.where(margins + 0.35 * rng.standard_normal(N) >= 0, 1.0, -1.0)
    return Dataset(X=X, y=y)


def reference_objective(prob: ProblemInstance, iters: int = 4000, restarts: int = 3,
                        step: float = 0.5) -> float:
    """Independent oracle: projected proximal-subgradient descent on the sphere.

    Deliberately a different algorithm family from the solver under test; used
    to locate the attainable objective level on surrogate problems.
    """
    best = np.inf
    for s in range(restarts):
        rng = np.random.default_rng(100 + s)
        x = unit_vector(rng, prob.n)
        for t in range(1, iters + 1):
            g = (prob.oracle.full_grad(x) + prob.lam * np.sign(x)
                 - prob.lam * x / max(float(np.linalg.norm(x)), 1e-12))
            x = x - (step / np.sqrt(t)) * g
            x /= np.linalg.norm(x)
            if t % 100 == 0:
                best = min(best, prob.objective(x))
        best = min(best, prob.objective(x))
    return best


def manual_cap_config(variant: str, prob: ProblemInstance, K: int, batch: int,
                      seed: int, rho_scale: float = 1.0) -> mossp.SolverConfig:
    """Manual preset in the benchmark style: alpha 0.905/0.9, rho ~ K^(1/4),
    and mu set just under the validity cap mu*L_rho <= 1/4."""
    c = prob.constants
    rho = rho_scale * K**0.25
    l_tilde = c.L_f / rho + c.G**2 + c.C * c.L_c
    mu = 0.24 / (rho * l_tilde)
    alpha = 0.905 if variant == "mossp_p" else 0.9
    return mossp.SolverConfig(variant=variant, K=K, preset="manual", rho0=rho,
                              mu0=mu, alpha0=alpha, batch=batch, seed=seed,
                              diag_stride=5000)


def real_dataset_path(name: str) -> Path | None:
    """Locate a real LIBSVM corpus file under $MOSSP_DATA_DIR or ./data."""
    candidates = []
    env = os.environ.get("MOSSP_DATA_DIR")
    if env:
        candidates.append(Path(env) / name)
    candidates.append(Path(__file__).resolve().parent.parent / "data" / name)
    for c in candidates:
        if c.exists():
            return c
        for suffix in (".txt", ".libsvm"):
            if c.with_suffix(suffix).exists():
                return c.with_suffix(suffix)
    return None


def records_equal(a, b) -> bool:
    """Bit-identical trajectories, ignoring wall-clock elapsed_s."""
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        if (ra.k, ra.oracle_calls) != (rb.k, rb.oracle_calls):
            return False
        for field in ("objective", "feas", "infeas_stat", "crit_u", "crit_gap", "potential"):
            if getattr(ra, field) != getattr(rb, field):
                return False
    return True


@pytest.fixture(scope="session")
def toy_det():
    return quadratic_sphere_problem(sigma=0.0)


@pytest.fixture(scope="session")
def toy_noisy():
    return quadratic_sphere_problem(sigma=0.3)
