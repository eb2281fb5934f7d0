"""Quadratic penalty objective, its gradient and smoothness bound, and the merit
function that certifies descent of the single-loop iterations.

For equality constraints c(x) = 0 the penalized smooth part is

    Q_rho(x) = f(x) + (rho/2) ||c(x)||^2.

With additional inequality rows c_I(x) <= 0 the squared norm runs over
(c_E(x), [c_I(x)]_+) with the positive part taken componentwise; the gradient
replaces c by that clipped vector, which keeps Q_rho continuously
differentiable across the boundary c_I = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .prox import moreau_eval


@dataclass(frozen=True)
class ConstraintKind:
    """Equality-only or mixed equality/inequality rows.

    ``ineq`` is a boolean mask over the m rows (True = inequality row);
    ``None`` for the pure-equality case.
    """

    mixed: bool = False
    ineq: np.ndarray | None = None

    def __post_init__(self):
        if self.mixed and self.ineq is None:
            raise ValueError("mixed constraints need an inequality row mask")
        if not self.mixed and self.ineq is not None:
            raise ValueError("equality constraints take no inequality mask")


EQUALITY = ConstraintKind()


def mixed_kind(ineq_mask) -> ConstraintKind:
    return ConstraintKind(mixed=True, ineq=np.asarray(ineq_mask, dtype=bool))


@dataclass(frozen=True)
class ConstraintMap:
    """A smooth constraint map c: R^n -> R^m with transposed-Jacobian products.

    ``jt_apply(x, v)`` computes grad c(x) @ v, i.e. J_c(x)^T v, and must agree
    with directional finite differences of ``eval``.
    """

    m: int
    eval: Callable[[np.ndarray], np.ndarray]
    jt_apply: Callable[[np.ndarray, np.ndarray], np.ndarray]
    kind: ConstraintKind = EQUALITY


def active_violation(c: np.ndarray, kind: ConstraintKind) -> np.ndarray:
    """The vector entering the penalty: c_E unchanged, [c_I]_+ on inequality rows."""
    c = np.asarray(c, dtype=float)
    if not kind.mixed:
        return c
    out = c.copy()
    out[kind.ineq] = np.maximum(out[kind.ineq], 0.0)
    return out


def penalty_value(f_val: float, c, rho: float, kind: ConstraintKind = EQUALITY) -> float:
    """Q_rho at a point with smooth-part value ``f_val`` and constraint values ``c``."""
    if not (rho > 0):
        raise ValueError(f"rho must be positive, got {rho}")
    if not np.isfinite(f_val):
        raise ValueError("f_val is not finite")
    a = active_violation(c, kind)
    if not np.all(np.isfinite(a)):
        raise ValueError("constraint values are not finite")
    return float(f_val) + 0.5 * rho * float(np.dot(a, a))


def penalty_gradient(grad_f, x, rho: float, constraints: ConstraintMap) -> np.ndarray:
    """grad Q_rho(x) = grad_f + rho * grad c(x) c(x) (clipped rows in the mixed case)."""
    grad_f = np.asarray(grad_f, dtype=float)
    x = np.asarray(x, dtype=float)
    if grad_f.shape != x.shape:
        raise ValueError(f"gradient shape {grad_f.shape} does not match x shape {x.shape}")
    a = active_violation(constraints.eval(x), constraints.kind)
    if a.shape != (constraints.m,):
        raise ValueError(f"constraint map returned shape {a.shape}, expected ({constraints.m},)")
    return grad_f + rho * constraints.jt_apply(x, a)


def constraint_force(x, rho: float, constraints: ConstraintMap) -> np.ndarray:
    """The penalty-gradient term rho * grad c(x) c(x) on its own."""
    a = active_violation(constraints.eval(np.asarray(x, dtype=float)), constraints.kind)
    return rho * constraints.jt_apply(x, a)


@dataclass(frozen=True)
class PenaltyConstants:
    """Problem constants feeding the smoothness bound of Q_rho.

    G bounds ||grad f||, the subgradients of h and g, and ||grad c||; C bounds
    ||c||; L_f and L_c are the smoothness moduli of f and c.  ``l_tilde`` is
    the assembled constant L_f/rho0 + G^2 + C*L_c so that Q_rho is
    (rho * l_tilde)-smooth for every rho >= rho0.  ``delta`` is the
    constraint-qualification constant; it is diagnostic only and never
    estimated by the solver.
    """

    G: float
    C: float
    L_f: float
    L_c: float
    rho0: float
    delta: float | None = None
    l_tilde: float = field(default=float("nan"))

    def __post_init__(self):
        for name in ("G", "C", "L_f", "L_c"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not (self.rho0 > 0):
            raise ValueError("rho0 must be positive")
        expected = self.L_f / self.rho0 + self.G**2 + self.C * self.L_c
        if np.isnan(self.l_tilde):
            object.__setattr__(self, "l_tilde", expected)
        elif abs(self.l_tilde - expected) > 1e-12 * max(1.0, abs(expected)):
            raise ValueError(
                f"stored l_tilde {self.l_tilde!r} disagrees with assembled value {expected!r}"
            )

    @property
    def l_max(self) -> float:
        return max(self.L_f, self.l_tilde)


def lipschitz_bound(rho: float, constants: PenaltyConstants) -> float:
    """Smoothness constant L_rho = rho * l_tilde of Q_rho, valid for rho >= rho0."""
    if rho < constants.rho0:
        raise ValueError(f"rho = {rho} is below rho0 = {constants.rho0}; the bound needs rho >= rho0")
    return rho * constants.l_tilde


def potential(x, z, rho: float, mu: float, problem) -> float:
    """Merit value Q_rho(x) + h(x) + (1/2mu)||x - z||^2 - M_{mu g}(z).

    Evaluates f through the problem's full deterministic objective part.  The
    single-loop iterations drive this quantity downward (up to the stochastic
    gradient error), which is what the deterministic descent tests assert.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    q = penalty_value(problem.f_value(x), problem.constraints.eval(x), rho, problem.constraints.kind)
    env_g = moreau_eval(problem.prox_g, z, mu).envelope
    d = x - z
    return q + float(problem.prox_h.value(x)) + float(np.dot(d, d)) / (2.0 * mu) - env_g
