"""Stochastic gradient oracle contract and the two momentum estimators.

Polyak momentum keeps an exponentially weighted average of fresh minibatch
gradients; recursive momentum (STORM) corrects the running estimate with the
gradient difference at the current and previous iterate, both evaluated under
the same sample, which is what makes the correction conditionally unbiased.
The solver owns the sampling so that the shared-sample requirement of the
recursive estimator cannot be violated by callers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .penalty import ConstraintMap, constraint_force


@dataclass(frozen=True)
class GradientOracle:
    """Stochastic first-order oracle for the smooth objective part f.

    ``draw(rng, size)`` produces an opaque sample handle covering ``size``
    i.i.d. samples (uniform with replacement for finite sums), and
    ``grad_at(x, handle)`` evaluates the minibatch gradient under that handle,
    so the same handle can be replayed at two points.  ``full_grad`` is the
    exact gradient, used for diagnostics and deterministic runs only.
    ``sigma_bound`` is informational (a bound on the one-sample standard
    deviation), never enforced at runtime.
    """

    draw: Callable[[np.random.Generator, int], Any]
    grad_at: Callable[[np.ndarray, Any], np.ndarray]
    full_grad: Callable[[np.ndarray], np.ndarray]
    batch_size: int = 1
    sigma_bound: float | None = None

    def sample_grad(self, x, rng: np.random.Generator) -> np.ndarray:
        """One fresh default-size minibatch gradient estimate at ``x``."""
        return self.grad_at(x, self.draw(rng, self.batch_size))


def deterministic_oracle(full_grad: Callable[[np.ndarray], np.ndarray]) -> GradientOracle:
    """Noise-free oracle: every sample gradient is the exact gradient."""
    return GradientOracle(
        draw=lambda rng, size: None,
        grad_at=lambda x, handle: full_grad(x),
        full_grad=full_grad,
        batch_size=1,
        sigma_bound=0.0,
    )


@dataclass
class MomentumState:
    """Buffer of the running estimator; ``x_prev`` is kept for storm only."""

    variant: str  # "polyak" | "storm"
    buffer: np.ndarray
    x_prev: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in ("polyak", "storm"):
            raise ValueError(f"unknown momentum variant {self.variant!r}")
        if (self.x_prev is not None) != (self.variant == "storm"):
            raise ValueError("x_prev must be present exactly for the storm variant")


def _check_alpha(alpha: float):
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def polyak_step(s_prev, g_new, alpha: float) -> np.ndarray:
    """s <- (1 - alpha) s + alpha g, the heavy-ball gradient average."""
    _check_alpha(alpha)
    return (1.0 - alpha) * np.asarray(s_prev, dtype=float) + alpha * np.asarray(g_new, dtype=float)


def storm_step(d_prev, g_new_at_x, g_new_at_xprev, alpha: float) -> np.ndarray:
    """d <- g(x, xi) + (1 - alpha)(d - g(x_prev, xi)) with one shared sample xi.

    Both gradient arguments must come from the same sample handle; at alpha = 1
    the correction cancels and the result is the plain stochastic gradient,
    bit for bit.
    """
    _check_alpha(alpha)
    g_new_at_x = np.asarray(g_new_at_x, dtype=float)
    return g_new_at_x + (1.0 - alpha) * (
        np.asarray(d_prev, dtype=float) - np.asarray(g_new_at_xprev, dtype=float)
    )


def storm_init(oracle: GradientOracle, x0, b0: int, rng: np.random.Generator) -> np.ndarray:
    """Average of b0 independent single-sample gradients at the start point."""
    if b0 < 1:
        raise ValueError(f"b0 must be a positive integer, got {b0}")
    return oracle.grad_at(np.asarray(x0, dtype=float), oracle.draw(rng, int(b0)))


def full_estimate(buffer, x, rho: float, constraints: ConstraintMap) -> np.ndarray:
    """Estimator of grad Q_rho at x: momentum buffer plus the exact penalty force."""
    buffer = np.asarray(buffer, dtype=float)
    x = np.asarray(x, dtype=float)
    if buffer.shape != x.shape:
        raise ValueError(f"buffer shape {buffer.shape} does not match x shape {x.shape}")
    return buffer + constraint_force(x, rho, constraints)


def error_diagnostic(estimate, x, rho: float, oracle: GradientOracle,
                     constraints: ConstraintMap) -> float:
    """Norm of the stochastic gradient error e = estimate - grad Q_rho(x)."""
    truth = oracle.full_grad(np.asarray(x, dtype=float)) + constraint_force(x, rho, constraints)
    return float(np.linalg.norm(np.asarray(estimate, dtype=float) - truth))
