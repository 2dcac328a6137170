"""Weighted least-squares M-step solvers.

Minimizes r * ||w_{-offset}||^2 + sum_n a_n E[(w'x~_n - t_n)^2] where the
expectation is over a diagonal-variance corruption of the example means.
Dense closed form for moderate dimension, L-BFGS with sparse gradients
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp

from .noise import MatrixMoments, NoiseSpec

DENSE_THRESHOLD = 2000
_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Weights of length dim+1; the last coordinate is the offset."""

    w: np.ndarray
    dim: int

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.size != self.dim + 1:
            raise ValueError("weight vector must have length dim + 1")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "w", w)

    @property
    def offset(self):
        return float(self.w[self.dim])


class WlsProblem:
    """Re-weighted expected quadratic: means X (csr), diagonal variances,
    per-example positive weights a and targets t, ridge r on non-offset
    coordinates."""

    def __init__(self, X, mom, weights, targets, ridge, offset_col=None):
        weights = np.asarray(weights, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        if np.any(weights <= 0.0):
            raise ValueError("example weights must be positive")
        if ridge < 0.0:
            raise ValueError("ridge must be nonnegative")
        if X.shape[0] != weights.size or weights.size != targets.size:
            raise ValueError("inconsistent problem sizes")
        self.X = X.tocsr()
        self.mom = mom
        self.weights = weights
        self.targets = targets
        self.ridge = ridge
        self.offset_col = offset_col
        self.dim = X.shape[1]

    @staticmethod
    def from_examples(examples, variances, weights, targets, ridge, dim,
                      offset_col=None):
        """Build from per-example (SparseVector mean, dense variance) pairs."""
        from .data import _examples_to_csr

        X = _examples_to_csr(examples, dim)
        var = np.asarray(variances, dtype=np.float64)
        mom = _ExplicitVariance(sp.csr_matrix(var), offset_col)
        return WlsProblem(X, mom, weights, targets, ridge, offset_col)

    def objective_and_gradient(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.size != self.dim:
            raise ValueError("dimension mismatch")
        resid = np.asarray(self.X @ w).ravel() - self.targets
        vquad = self.mom.quad(w)
        wmask = w.copy()
        if self.offset_col is not None:
            wmask[self.offset_col] = 0.0
        value = (
            self.ridge * float(np.dot(wmask, wmask))
            + float(np.dot(self.weights, resid**2 + vquad))
        )
        grad = (
            2.0 * self.ridge * wmask
            + 2.0 * np.asarray(self.X.T @ (self.weights * resid)).ravel()
            + 2.0 * self.mom.weighted_colsum(self.weights) * w
        )
        return value, grad

    def normal_system(self):
        """(A, b) of the normal equations A w = b."""
        a = self.weights
        Xw = self.X.multiply(a[:, None]).tocsr()
        A = np.asarray((self.X.T @ Xw).todense())
        A[np.diag_indices_from(A)] += self.mom.weighted_colsum(a)
        diag = np.full(self.dim, self.ridge)
        if self.offset_col is not None:
            diag[self.offset_col] = 0.0
        A[np.diag_indices_from(A)] += diag
        b = np.asarray(self.X.T @ (a * self.targets)).ravel()
        return A, b


class _ExplicitVariance:
    """MatrixMoments-compatible wrapper around an explicit variance matrix."""

    def __init__(self, vmat, offset_col):
        if offset_col is not None:
            v = vmat.tolil()
            v[:, offset_col] = 0.0
            vmat = v.tocsr()
        if np.any(vmat.data < 0.0):
            raise ValueError("variances must be nonnegative")
        self._vmat = vmat

    def quad(self, w):
        return np.asarray(self._vmat @ (w**2)).ravel()

    def weighted_colsum(self, a):
        return np.asarray(self._vmat.T @ a).ravel()


def solve_closed_form(problem):
    """Solve the normal equations by Cholesky with jitter escalation."""
    A, b = problem.normal_system()
    for jitter in _JITTERS:
        try:
            Aj = A if jitter == 0.0 else A + jitter * np.eye(problem.dim)
            cf = scipy.linalg.cho_factor(Aj, lower=True, check_finite=False)
            w = scipy.linalg.cho_solve(cf, b, check_finite=False)
        except scipy.linalg.LinAlgError:
            continue
        resid = np.linalg.norm(A @ w - b)
        if resid <= 1e-8 * (1.0 + np.linalg.norm(b)):
            return ModelParams(w, problem.dim - 1)
    raise NumericalError("normal equations remained singular after max jitter")


def solve_quasi_newton(problem, w0=None, iters=500, grad_tol=1e-9):
    """Limited-memory quasi-Newton minimization with sparse gradients."""
    if w0 is None:
        x0 = np.zeros(problem.dim)
    else:
        x0 = np.asarray(w0.w if isinstance(w0, ModelParams) else w0, dtype=np.float64)

    def fg(w):
        value, grad = problem.objective_and_gradient(w)
        if not np.isfinite(value):
            raise NumericalError("non-finite objective during quasi-Newton solve")
        return value, grad

    res = scipy.optimize.minimize(
        fg,
        x0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": iters, "maxcor": 10, "gtol": 0.0, "ftol": 1e-16},
    )
    w = res.x
    value, grad = problem.objective_and_gradient(w)
    if np.max(np.abs(grad)) > grad_tol * (1.0 + abs(value)) and not res.success:
        # L-BFGS-B hit its own limits; accept if it still decreased enough.
        v0, _ = problem.objective_and_gradient(x0)
        if not np.isfinite(value) or value > v0 + 1e-12:
            raise NumericalError("quasi-Newton solve failed to decrease objective")
    return ModelParams(w, problem.dim - 1)


def solve(problem, w0=None):
    """Dispatch: dense closed form under the threshold, else quasi-Newton."""
    if problem.dim <= DENSE_THRESHOLD:
        return solve_closed_form(problem)
    return solve_quasi_newton(problem, w0=w0)
