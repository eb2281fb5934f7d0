"""Proximal operators, Moreau envelopes, and their difference (DME smoothing).

The Moreau envelope of a convex function phi with parameter mu > 0,

    M_{mu phi}(z) = min_x phi(x) + (1/2mu) ||x - z||^2,

is continuously differentiable with gradient (z - prox_{mu phi}(z)) / mu, and
that gradient is a subgradient of phi at the prox point.  Smoothing a DC
function phi - g by the difference of the two envelopes keeps the problem
smooth while stationary points remain recoverable through the individual
proximal maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def _as_vector(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        z = z.reshape(1)
    if not np.all(np.isfinite(z)):
        raise ValueError("input vector contains NaN/Inf")
    return z


@dataclass(frozen=True)
class ProxOracle:
    """A convex function given by its value and exact proximal map.

    ``prox(z, mu)`` must return the unique minimizer of
    ``value(x) + (1/2mu)||x - z||^2``.  Implementations are pure functions of
    their arguments, so a single oracle may be shared across threads.
    """

    value: Callable[[np.ndarray], float]
    prox: Callable[[np.ndarray, float], np.ndarray]
    name: str = "custom"


def soft_threshold(z, tau: float) -> np.ndarray:
    """Componentwise shrinkage: prox of tau*||.||_1 at z.

    Returns sign(z_i) * max(|z_i| - tau, 0); entries with |z_i| <= tau map
    exactly to 0 (ties at |z_i| = tau resolve to the sparse point).
    """
    z = _as_vector(z)
    if not np.isfinite(tau) or tau < 0:
        raise ValueError(f"tau must be a finite nonnegative real, got {tau}")
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


def prox_l2_norm(z, tau: float) -> np.ndarray:
    """Block shrinkage: prox of tau*||.||_2 at z.

    Returns 0 when ||z|| <= tau (including the tie), else (1 - tau/||z||) z.
    """
    z = _as_vector(z)
    if not np.isfinite(tau) or tau < 0:
        raise ValueError(f"tau must be a finite nonnegative real, got {tau}")
    nz = float(np.linalg.norm(z))
    if nz <= tau:
        return np.zeros_like(z)
    return (1.0 - tau / nz) * z


def l1_oracle(tau: float) -> ProxOracle:
    """Oracle for tau*||.||_1 with the soft-threshold prox."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return ProxOracle(
        value=lambda x: tau * float(np.sum(np.abs(x))),
        prox=lambda z, mu: soft_threshold(z, tau * mu),
        name=f"l1(tau={tau:g})",
    )


def l2_oracle(tau: float) -> ProxOracle:
    """Oracle for tau*||.||_2 with the block-shrinkage prox."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return ProxOracle(
        value=lambda x: tau * float(np.linalg.norm(x)),
        prox=lambda z, mu: prox_l2_norm(z, tau * mu),
        name=f"l2(tau={tau:g})",
    )


def zero_oracle() -> ProxOracle:
    """Oracle for the zero function; its prox is the identity."""
    return ProxOracle(
        value=lambda x: 0.0,
        prox=lambda z, mu: np.array(z, dtype=float, copy=True),
        name="zero",
    )


@dataclass(frozen=True)
class MoreauPoint:
    """Envelope evaluation at ``z``: prox point, value, and gradient."""

    z: np.ndarray
    p: np.ndarray
    mu: float
    envelope: float
    gradient: np.ndarray


def moreau_eval(oracle: ProxOracle, z, mu: float) -> MoreauPoint:
    """Evaluate the Moreau envelope of ``oracle`` at ``z``.

    The returned gradient (z - p)/mu is exact; for weakly convex functions the
    caller is responsible for mu < 1/m_phi (schedule validation enforces this
    for the solver's usage).
    """
    z = _as_vector(z)
    if not (mu > 0):
        raise ValueError(f"mu must be positive, got {mu}")
    p = np.asarray(oracle.prox(z, mu), dtype=float)
    envelope = float(oracle.value(p)) + float(np.dot(p - z, p - z)) / (2.0 * mu)
    gradient = (z - p) / mu
    return MoreauPoint(z=z, p=p, mu=mu, envelope=envelope, gradient=gradient)


def dme_gradient(prox_phi: ProxOracle, prox_g: ProxOracle, z, mu: float) -> np.ndarray:
    """Gradient of the difference of Moreau envelopes M_{mu phi} - M_{mu g}.

    Equals (prox_g(z) - prox_phi(z)) / mu; the two (z - p)/mu terms cancel.
    """
    z = _as_vector(z)
    if not (mu > 0):
        raise ValueError(f"mu must be positive, got {mu}")
    p_phi = np.asarray(prox_phi.prox(z, mu), dtype=float)
    p_g = np.asarray(prox_g.prox(z, mu), dtype=float)
    return (p_g - p_phi) / mu


def dme_certificate(z_bar, mu: float, prox_phi: ProxOracle, prox_g: ProxOracle):
    """Convert a near-stationary point of the smoothed problem to a critical pair.

    Returns (x_bar, y_bar, u_bar) with x_bar = prox_phi(z_bar),
    y_bar = prox_g(z_bar), and u_bar = (y_bar - x_bar)/mu, an element of
    d(phi)(x_bar) - d(g)(y_bar).  By construction

        max(||u_bar||, ||x_bar - y_bar||) = max(1, mu) * ||grad DME(z_bar)||,

    so a small smoothed gradient certifies near-criticality of the original
    DC pair.
    """
    z_bar = _as_vector(z_bar)
    if not (mu > 0):
        raise ValueError(f"mu must be positive, got {mu}")
    x_bar = np.asarray(prox_phi.prox(z_bar, mu), dtype=float)
    y_bar = np.asarray(prox_g.prox(z_bar, mu), dtype=float)
    u_bar = (y_bar - x_bar) / mu
    return x_bar, y_bar, u_bar
