"""E-step quantities for corrupted-margin training.

Per-example first and second moments of the margin variables, closed-form
re-weights from the generalized-inverse-Gaussian and Polya-Gamma posteriors,
and the collapsed upper-bound objectives used to monitor convergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SECOND_MOMENT_FLOOR = 1e-12


@dataclass(frozen=True)
class ExampleMoments:
    first: float
    second: float


@dataclass(frozen=True)
class HingeConfig:
    c: float = 1.0
    ell: float = 1.0
    max_iters: int = 200
    tol: float = 1e-6
    floor: float = SECOND_MOMENT_FLOOR

    def __post_init__(self):
        if self.c <= 0 or self.ell < 0 or self.tol <= 0 or self.floor <= 0:
            raise ValueError("c, tol and floor must be positive, ell nonnegative")


@dataclass(frozen=True)
class LogisticConfig:
    c: float = 1.0
    max_iters: int = 200
    tol: float = 1e-6
    floor: float = SECOND_MOMENT_FLOOR

    def __post_init__(self):
        if self.c <= 0 or self.tol <= 0 or self.floor <= 0:
            raise ValueError("c, tol and floor must be positive")


def _mean_dot(w, mom):
    return float(np.dot(w, mom.mean))


def _variance_quad(w, mom):
    return float(np.dot(mom.variance, w**2))


def hinge_moments(w, x, y, mom, ell):
    """E[zeta] and E[zeta^2] for zeta = ell - y w'x~ under corruption."""
    if w.size != mom.mean.size:
        raise ValueError("weight/moment dimension mismatch")
    m = _mean_dot(w, mom)
    first = ell - y * m
    second = m * m + _variance_quad(w, mom) - 2.0 * ell * y * m + ell * ell
    return ExampleMoments(first, max(second, 0.0))


def logistic_moments(w, x, mom):
    """E[omega] and E[omega^2] for omega = w'x~ under corruption."""
    if w.size != mom.mean.size:
        raise ValueError("weight/moment dimension mismatch")
    m = _mean_dot(w, mom)
    return ExampleMoments(m, m * m + _variance_quad(w, mom))


def gamma_hinge(second, c, floor=SECOND_MOMENT_FLOOR):
    """Mean of 1/lambda under the GIG(1/2, 1, c^2 * second) posterior."""
    return 1.0 / (c * np.sqrt(np.maximum(second, floor)))


def gamma_logistic(second, c, floor=SECOND_MOMENT_FLOOR):
    """Mean of the Polya-Gamma posterior PG(c, z) with z = sqrt(second).

    Uses the tanh form, which neither overflows for large z nor loses
    accuracy at z -> 0 (limit c/4).
    """
    second = np.asarray(second, dtype=np.float64)
    z = np.sqrt(np.maximum(second, 0.0))
    small = z < np.sqrt(floor)
    zsafe = np.where(small, 1.0, z)
    out = np.where(small, c / 4.0, (c / (2.0 * zsafe)) * np.tanh(zsafe / 2.0))
    if out.ndim == 0:
        return float(out)
    return out


def log_cosh(u):
    """log(cosh(u)) without overflow for large |u|."""
    u = np.abs(u)
    return u + np.log1p(np.exp(-2.0 * u)) - np.log(2.0)


def _ridge(w, offset_index):
    w2 = np.dot(w, w)
    if offset_index is not None:
        w2 -= w[offset_index] ** 2
    return w2


def collapsed_hinge_objective(w, firsts, seconds, c, offset_index=None, weights=None):
    """||w||^2 + c * sum_n (E[zeta_n] + sqrt(E[zeta_n^2])).

    Equals the variational hinge bound at the exact E-step; at zero noise it
    reduces to ||w||^2 + 2c * sum_n max(0, zeta_n).
    """
    terms = np.asarray(firsts) + np.sqrt(np.maximum(np.asarray(seconds), 0.0))
    if weights is not None:
        terms = terms * weights
    return _ridge(w, offset_index) + c * float(terms.sum())


def collapsed_logistic_objective(w, firsts, seconds, labels, c, offset_index=None,
                                 weights=None):
    """||w||^2 + c * sum_n (log 2 + log cosh(z_n/2) - y_n E[omega_n]/2)."""
    z = np.sqrt(np.maximum(np.asarray(seconds), 0.0))
    terms = np.log(2.0) + log_cosh(z / 2.0) - 0.5 * np.asarray(labels) * np.asarray(firsts)
    if weights is not None:
        terms = terms * weights
    return _ridge(w, offset_index) + c * float(terms.sum())


def surrogate_hinge_objective(w, firsts, seconds, gammas, c, offset_index=None):
    """Majorizer ||w||^2 + sum_n [c E[zeta] + (c^2/2) gamma E[zeta^2] + 1/(2 gamma)].

    Touches the collapsed objective exactly at gamma_n = gamma_hinge(second_n)
    and lies strictly above it elsewhere.
    """
    gammas = np.asarray(gammas, dtype=np.float64)
    if np.any(gammas <= 0.0):
        raise ValueError("re-weights must be positive")
    terms = (
        c * np.asarray(firsts)
        + 0.5 * c * c * gammas * np.asarray(seconds)
        + 0.5 / gammas
    )
    return _ridge(w, offset_index) + float(terms.sum())
