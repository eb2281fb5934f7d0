"""Concrete problem instances: sphere-constrained DC-regularized logistic
regression on sparse data, and logistic regression under multiple quadratic
equality constraints, together with constant estimation and instance
generation.

Both families minimize

    (1/N) sum_i log(1 + exp(-y_i <X_i, x>)) + lam (||x||_1 - ||x||_2)

subject to ||x||^2 = 1 (sphere) or c_j(x) = 0, j = 1..M (quadratic map);
the nonconvex regularizer splits as h - g with h = lam ||.||_1 and
g = lam ||.||_2, both prox-friendly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .estimators import GradientOracle
from .penalty import EQUALITY, ConstraintMap, PenaltyConstants
from .prox import ProxOracle, l1_oracle, l2_oracle

# Constants G, C, L_c of the sphere constraint are unbounded globally; they are
# taken over this ball, and the solver warns if iterates ever leave it.
TRUST_BALL_RADIUS = 2.0


@dataclass(frozen=True)
class Dataset:
    """Sparse design matrix (CSR) with +/-1 labels."""

    X: sp.csr_matrix
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if self.X.shape[0] != y.shape[0]:
            raise ValueError(f"{self.X.shape[0]} rows but {y.shape[0]} labels")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "y", y)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def row_norms(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.X.multiply(self.X).sum(axis=1)).ravel())

    def normalized_rows(self) -> "Dataset":
        """Copy with every nonzero row scaled to unit l2 norm."""
        norms = self.row_norms()
        scale = np.where(norms > 0, 1.0 / np.maximum(norms, 1e-300), 1.0)
        D = sp.diags(scale)
        return Dataset(X=sp.csr_matrix(D @ self.X), y=self.y.copy())


@dataclass(frozen=True)
class ProblemInstance:
    """Everything a solver run needs: oracles, constraints, constants, inits."""

    oracle: GradientOracle
    prox_h: ProxOracle
    prox_g: ProxOracle
    constraints: ConstraintMap
    constants: PenaltyConstants
    lam: float
    objective: Callable[[np.ndarray], float]  # full F = f + h - g
    f_value: Callable[[np.ndarray], float]    # full smooth part alone
    init_feasible: Callable[[np.random.Generator], np.ndarray]
    init_random: Callable[[np.random.Generator], np.ndarray]
    n: int
    name: str = "problem"


def _logistic_parts(data: Dataset, batch: int):
    """Loss value, full gradient, and minibatch oracle for the logistic term."""
    X, y, N = data.X, data.y, data.N

    def f_value(x):
        t = y * (X @ x)
        return float(np.mean(np.logaddexp(0.0, -t)))

    def full_grad(x):
        t = y * (X @ x)
        coef = -y * expit(-t) / N
        return np.asarray(X.T @ coef).ravel()

    def draw(rng, size):
        return rng.integers(0, N, size=int(size))

    def grad_at(x, idx):
        rows = X[idx]
        yb = y[idx]
        t = yb * (rows @ x)
        coef = -yb * expit(-t) / len(idx)
        return np.asarray(rows.T @ coef).ravel()

    oracle = GradientOracle(draw=draw, grad_at=grad_at, full_grad=full_grad,
                            batch_size=int(batch))
    return f_value, oracle


def sphere_gradc_c(x) -> np.ndarray:
    """grad c(x) c(x) for the unit-sphere constraint c(x) = ||x||^2 - 1."""
    x = np.asarray(x, dtype=float)
    return 2.0 * x * (float(np.dot(x, x)) - 1.0)


def sphere_constraints(n: int) -> ConstraintMap:
    def c_eval(x):
        return np.array([float(np.dot(x, x)) - 1.0])

    def jt_apply(x, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (1,):
            raise ValueError(f"expected a length-1 multiplier, got shape {v.shape}")
        return 2.0 * np.asarray(x, dtype=float) * v[0]

    return ConstraintMap(m=1, eval=c_eval, jt_apply=jt_apply, kind=EQUALITY)


def _unit_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def estimate_constants(kind: str, data: Dataset, lam: float, rho0: float,
                       inst: "QuadEqInstance | None" = None) -> PenaltyConstants:
    """Bounds valid on the ball ||x|| <= TRUST_BALL_RADIUS.

    For the logistic loss the per-sample gradient is ||X_i||^2/4-Lipschitz, so
    L_f = max_i ||X_i||^2 / 4 also serves as the mean-squared smoothness
    constant.  G collects the gradient/subgradient bounds of f, h, g, and c.
    """
    norms = data.row_norms()
    max_row = float(norms.max()) if data.N else 0.0
    L_f = max_row**2 / 4.0
    if kind == "logistic":
        G_c, C, L_c = 4.0, 3.0, 2.0  # sphere constraint over the radius-2 ball
    elif kind == "quadeq":
        if inst is None:
            raise ValueError("quadeq constants need the generated instance")
        r = TRUST_BALL_RADIUS
        q_max = inst.q.max(axis=1)
        a_norm = np.linalg.norm(inst.a, axis=1)
        grad_col = r * np.linalg.norm(inst.q, axis=1) + a_norm
        G_c = float(np.sqrt(np.sum(grad_col**2)))
        c_abs = 0.5 * q_max * r**2 + a_norm * r + np.abs(inst.b)
        C = float(np.sqrt(np.sum(c_abs**2)))
        L_c = float(np.sqrt(np.sum(q_max**2)))
    else:
        raise ValueError(f"unknown problem kind {kind!r}")
    G = max(max_row, lam * np.sqrt(data.n), lam, G_c)
    return PenaltyConstants(G=G, C=C, L_f=L_f, L_c=L_c, rho0=rho0)


def logistic_problem(data: Dataset, lam: float, batch: int, rho0: float = 1.0) -> ProblemInstance:
    """Sphere-constrained DC-regularized logistic regression instance."""
    if data.N < 1:
        raise ValueError("empty dataset")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    f_value, oracle = _logistic_parts(data, batch)
    prox_h, prox_g = l1_oracle(lam), l2_oracle(lam)

    def objective(x):
        return f_value(x) + prox_h.value(x) - prox_g.value(x)

    n = data.n
    # A random unit vector is exactly feasible for the sphere constraint.
    init = lambda rng: _unit_normal(rng, n)
    return ProblemInstance(
        oracle=oracle, prox_h=prox_h, prox_g=prox_g,
        constraints=sphere_constraints(n),
        constants=estimate_constants("logistic", data, lam, rho0),
        lam=lam, objective=objective, f_value=f_value,
        init_feasible=init, init_random=init, n=n,
        name=f"logistic-sphere(N={data.N},n={n},lam={lam:g})",
    )


@dataclass(frozen=True)
class QuadEqInstance:
    """M quadratic equality constraints c_j(x) = (1/2) sum_l q_jl x_l^2 + <a_j, x> - b_j."""

    q: np.ndarray       # (M, n), entries in [0.5, 1]/n
    a: np.ndarray       # (M, n)
    b: np.ndarray       # (M,)
    x_star: np.ndarray  # feasible witness, unit norm

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 2:
            raise ValueError("q must be an (M, n) array")
        for name in ("a", "b", "x_star"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "q", q)

    @property
    def M(self) -> int:
        return self.q.shape[0]

    @property
    def n(self) -> int:
        return self.q.shape[1]


def gen_quadeq(n: int, M: int = 20, rng: np.random.Generator | None = None) -> QuadEqInstance:
    """Random instance with a planted feasible unit vector.

    Curvatures q_jl are uniform on [0.5, 1]/n, a_j ~ N(0, I/n), and each b_j is
    set by substituting the planted x_star so it is feasible for every row.
    """
    if n < 1 or M < 1:
        raise ValueError("n and M must be positive")
    rng = np.random.default_rng() if rng is None else rng
    q = rng.uniform(0.5, 1.0, size=(M, n)) / n
    a = rng.normal(0.0, 1.0 / np.sqrt(n), size=(M, n))
    x_star = _unit_normal(rng, n)
    b = 0.5 * q @ (x_star**2) + a @ x_star
    return QuadEqInstance(q=q, a=a, b=b, x_star=x_star)


def quadeq_constraints(inst: QuadEqInstance) -> ConstraintMap:
    q, a, b, M = inst.q, inst.a, inst.b, inst.M

    def c_eval(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * q @ (x * x) + a @ x - b

    def jt_apply(x, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (M,):
            raise ValueError(f"expected a length-{M} multiplier, got shape {v.shape}")
        x = np.asarray(x, dtype=float)
        return (q.T @ v) * x + a.T @ v

    return ConstraintMap(m=M, eval=c_eval, jt_apply=jt_apply, kind=EQUALITY)


def quadeq_problem(data: Dataset, inst: QuadEqInstance, lam: float, batch: int,
                   rho0: float = 1.0) -> ProblemInstance:
    """Logistic loss with DC regularizer under the quadratic equality map."""
    if data.n != inst.n:
        raise ValueError(f"dataset has n={data.n} features but instance has n={inst.n}")
    f_value, oracle = _logistic_parts(data, batch)
    prox_h, prox_g = l1_oracle(lam), l2_oracle(lam)

    def objective(x):
        return f_value(x) + prox_h.value(x) - prox_g.value(x)

    x_star = inst.x_star.copy()
    return ProblemInstance(
        oracle=oracle, prox_h=prox_h, prox_g=prox_g,
        constraints=quadeq_constraints(inst),
        constants=estimate_constants("quadeq", data, lam, rho0, inst=inst),
        lam=lam, objective=objective, f_value=f_value,
        init_feasible=lambda rng: x_star.copy(),
        init_random=lambda rng: _unit_normal(rng, inst.n),
        n=inst.n,
        name=f"logistic-quadeq(N={data.N},n={inst.n},M={inst.M},lam={lam:g})",
    )


def synthetic_logistic_dataset(N: int, n: int, seed: int, *, density: float = 0.25,
                               noise: float = 0.5, normalize: bool = True) -> Dataset:
    """Deterministic planted-model dataset for desk-scale benchmark runs.

    Rows are sparse Gaussian with the given density; labels follow the sign of
    a planted unit predictor corrupted by Gaussian noise, so the problem is
    informative but not separable.
    """
    rng = np.random.default_rng(seed)
    mask = rng.random((N, n)) < density
    vals = rng.standard_normal((N, n)) * mask
    # Guard against all-zero rows so normalization is well defined.
    empty = ~mask.any(axis=1)
    if empty.any():
        cols = rng.integers(0, n, size=int(empty.sum()))
        vals[np.flatnonzero(empty), cols] = rng.standard_normal(int(empty.sum()))
    w = _unit_normal(rng, n)
    margins = vals @ w
    y = np.where(margins + noise * rng.standard_normal(N) >= 0, 1.0, -1.0)
    data = Dataset(X=sp.csr_matrix(vals), y=y)
    return data.normalized_rows() if normalize else data
